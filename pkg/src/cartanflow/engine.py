"""Path-level algorithms: sorted curves, jets, lifts, flows.

Every routine takes a :class:`~cartanflow.paths.PathSpec` and a time grid
and returns a :class:`DiagonalizedPath`.  Conventions:

* ``lambda_sorted`` is the chamber representative at each sample and is
  computed independently per sample.
* ``lambda_lift`` is a curve in ``a`` that agrees with ``lambda_sorted`` up
  to a Weyl element per sample but is continuous (``c1_lift``) or comes
  from a continuous ``U`` (``analytic_flow``).
* ``mu`` holds ``Ad_U^-1 Pi_rho(rho')`` in the same coordinates as the lift.
"""
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .config import DEFAULT
from .errors import MatchAmbiguous, NearSingularPoint, NotCommuting, SolverFailure
from .families import (
    BlockPair,
    adjoint_action,
    check_shape,
    diagonalize_point,
    group_residual,
    inverse_k,
    is_relaxed,
    joint_diagonalize,
    k_from_ambient,
    k_to_ambient,
    polar_retract,
    project_a,
)
from .lie_ops import bracket_pp, commutant_projection, flow_generator
from .weyl import apply, chamber_sort, face_of, match_jet


@dataclass
class DiagonalizedPath:
    family: object
    times: np.ndarray
    lambda_sorted: np.ndarray
    face: list
    lambda_lift: np.ndarray | None = None
    mu: np.ndarray | None = None
    U: list | None = None
    residual_offdiag: np.ndarray | None = None
    residual_group: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size


def as_grid(spec, grid):
    """Validate a grid: ``(a, b, n)`` tuple or explicit increasing times inside the domain."""
    if isinstance(grid, tuple) and len(grid) == 3 and float(grid[2]).is_integer():
        a, b, n = grid
        if int(n) < 2 or not a < b:
            raise ValueError("grid needs t_start < t_end and at least 2 samples")
        ts = np.linspace(float(a), float(b), int(n))
    else:
        ts = np.asarray(grid, dtype=float).ravel()
    if ts.size == 0:
        raise ValueError("empty time grid")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("grid times must be strictly increasing")
    for t in (ts[0], ts[-1]):
        spec._check(t)
    return ts


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _residuals(fam, u, x):
    _, off = project_a(fam, adjoint_action(fam, inverse_k(fam, u), x))
    return off, group_residual(fam, u, allow_relaxed=is_relaxed(fam, u))


def _sorted_sample(fam, x, i, tol):
    try:
        u, lam = diagonalize_point(fam, x, tol)
    except SolverFailure as exc:
        raise SolverFailure(str(exc), index=i) from exc
    lam, _ = chamber_sort(lam, fam.weyl_type)
    off, grp = _residuals(fam, u, x)
    return u, lam, face_of(lam, fam.weyl_type, tol.face), off, grp


def _assemble(spec, ts, rows, keep_u):
    fam = spec.family
    return DiagonalizedPath(
        family=fam,
        times=ts,
        lambda_sorted=np.array([r[1] for r in rows]).reshape(ts.size, fam.a_dim),
        face=[r[2] for r in rows],
        U=[r[0] for r in rows] if keep_u else None,
        residual_offdiag=np.array([r[3] for r in rows]),
        residual_group=np.array([r[4] for r in rows]),
    )


def _batched_sorted(fam, xs, tol):
    """Chamber coordinates of a stack of samples, or None when a sample needs the slow path."""
    if fam.kind == "skew-evd" and fam.n % 2 == 0:
        return None
    nrm = np.linalg.norm(xs, axis=(-2, -1))
    if fam.is_evd:
        asym = np.max(np.abs(xs - np.conj(np.swapaxes(xs, -1, -2))), axis=(-2, -1))
        bad = (asym > tol.member * (1.0 + nrm)) | (np.abs(np.trace(xs, axis1=-2, axis2=-1)) > tol.member * (1.0 + nrm))
    elif fam.kind == "skew-evd":
        bad = np.max(np.abs(xs + np.swapaxes(xs, -1, -2)), axis=(-2, -1)) > tol.member * (1.0 + nrm)
    else:
        bad = np.zeros(len(xs), dtype=bool)
    if not fam.is_complex and np.iscomplexobj(xs):
        bad |= np.max(np.abs(xs.imag), axis=(-2, -1)) > tol.member * (1.0 + nrm)
    if np.any(bad):
        return None
    try:
        if fam.is_evd:
            return np.linalg.eigvalsh(xs)[:, ::-1]
        if fam.is_svd:
            return np.linalg.svd(xs, compute_uv=False)
        return np.linalg.eigvalsh(1j * np.real(xs))[:, ::-1][:, : fam.a_dim]
    except np.linalg.LinAlgError:
        return None


def sorted_curve(spec, grid, tol=DEFAULT, workers=None):
    """Chamber representative and face at every sample, computed independently.

    Only ``lambda_sorted`` and ``face`` are filled; use :func:`measurable_curve`
    for per-sample group elements and residuals.
    """
    fam = spec.family
    ts = as_grid(spec, grid)
    xs = spec.values(ts)
    lam = _batched_sorted(fam, xs, tol)
    if lam is None:
        rows = _map(lambda i: _sorted_sample(fam, xs[i], i, tol)[1], range(ts.size), workers)
        lam = np.array(rows).reshape(ts.size, fam.a_dim)
    faces = [face_of(v, fam.weyl_type, tol.face) for v in lam]
    return DiagonalizedPath(family=fam, times=ts, lambda_sorted=lam, face=faces)


# --------------------------------------------------------------------------
# first-order jets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Jet:
    lam: np.ndarray
    mu: np.ndarray
    U: object
    residual: float
    commutator: float


def pointwise_jet(spec, t, tol=DEFAULT):
    """Jet ``(lam, mu, U)`` at ``t`` plus the residual diagnostics."""
    fam = spec.family
    rho, drho = spec.value(t), spec.derivative(t)
    b = commutant_projection(fam, rho, drho, tol.cluster)
    comm = float(np.sqrt(sum(np.linalg.norm(blk) ** 2 for blk in _blocks(bracket_pp(fam, rho, b)))))
    # same (1 + |x|) scaling as the cluster threshold: below it rho counts as scalar
    bound = tol.solve * (1.0 + np.linalg.norm(rho)) * np.linalg.norm(drho)
    if comm > bound:
        raise NotCommuting(f"[rho, Pi_rho(rho')] has norm {comm:.3g} > {bound:.3g}")
    u, (lam, mu) = joint_diagonalize(fam, [rho, b], tol)
    uinv = inverse_k(fam, u)
    res = max(project_a(fam, adjoint_action(fam, uinv, rho))[1], project_a(fam, adjoint_action(fam, uinv, b))[1])
    scale = 1.0 + np.linalg.norm(rho) + np.linalg.norm(drho)
    if res > tol.solve * scale:
        raise SolverFailure(f"jet diagonalization residual {res:.3g} exceeds tolerance")
    return Jet(lam, mu, u, res, comm)


def _blocks(k):
    return (k.left, k.right) if isinstance(k, BlockPair) else (k,)


def pointwise_derivative(spec, t, tol=DEFAULT):
    """``(lam, mu, U)``: ``lam = Ad_U^-1 rho(t)`` in the chamber, ``mu = Ad_U^-1 Pi_rho(rho'(t))``."""
    j = pointwise_jet(spec, t, tol)
    return j.lam, j.mu, j.U


def c1_lift(spec, grid, tol=DEFAULT, beta=None):
    """Continuously differentiable lift obtained by matching jets sample to sample.

    ``info["c1_defect"][i]`` is ``|(lift_i - lift_{i-1})/h - mu_{i-1}|``
    (zero at the first sample); ``info["ambiguous"]`` lists the samples where
    the matching had ties.
    """
    fam = spec.family
    ts = as_grid(spec, grid)
    n = ts.size
    r = fam.a_dim
    lift = np.zeros((n, r))
    mu = np.zeros((n, r))
    srt = np.zeros((n, r))
    faces, off = [], np.zeros(n)
    defect = np.zeros(n)
    ambiguous = []
    for i, t in enumerate(ts):
        try:
            j = pointwise_jet(spec, t, tol)
        except SolverFailure as exc:
            raise SolverFailure(str(exc), index=i) from exc
        srt[i], w0 = chamber_sort(j.lam, fam.weyl_type)
        dmu = apply(w0, j.mu)
        faces.append(face_of(srt[i], fam.weyl_type, tol.face))
        off[i] = j.residual
        if i == 0:
            lift[0], mu[0] = srt[0], dmu
            continue
        h = ts[i] - ts[i - 1]
        b = h if beta is None else beta
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", MatchAmbiguous)
            w, _ = match_jet((lift[i - 1], mu[i - 1]), (srt[i], dmu), fam.weyl_type, beta=b)
        if any(issubclass(c.category, MatchAmbiguous) for c in caught):
            ambiguous.append(i)
        lift[i], mu[i] = apply(w, srt[i]), apply(w, dmu)
        defect[i] = np.linalg.norm((lift[i] - lift[i - 1]) / h - mu[i - 1])
    if ambiguous:
        warnings.warn(f"jet matching was ambiguous at {len(ambiguous)} sample(s)", MatchAmbiguous, stacklevel=2)
    return DiagonalizedPath(
        family=fam,
        times=ts,
        lambda_sorted=srt,
        face=faces,
        lambda_lift=lift,
        mu=mu,
        residual_offdiag=off,
        info={"c1_defect": defect, "ambiguous": ambiguous},
    )


def derivative_jumps(times, curve):
    """Max-abs change of the forward-difference derivative between consecutive intervals."""
    times = np.asarray(times, dtype=float)
    d = np.diff(np.asarray(curve, dtype=float), axis=0) / np.diff(times)[:, None]
    return np.max(np.abs(np.diff(d, axis=0)), axis=1) if d.shape[0] > 1 else np.zeros(0)


# --------------------------------------------------------------------------
# analytic flow
# --------------------------------------------------------------------------

def _renormalize_phase(fam, u):
    """Remove the determinant phase that unitary retraction leaves behind."""
    if not fam.is_complex:
        return u
    if fam.is_svd:
        d = np.linalg.det(u.left) * np.linalg.det(u.right)
        return BlockPair(u.left * np.exp(-1j * np.angle(d) / fam.p), u.right)
    d = np.linalg.det(u)
    return u * np.exp(-1j * np.angle(d) / fam.n)


def analytic_flow(spec, grid, gap_min=None, U0=None, tol=DEFAULT):
    """Integrate ``U' = k U`` with ``k = -ad_rho^-1(Pi_rho^perp(rho'))`` by RK4.

    The generator is evaluated at the grid points and midpoints; every
    evaluation checks that the smallest root value stays above ``gap_min``
    (default ``tol.flow_gap * (1 + |rho|)``) and raises
    :class:`NearSingularPoint` otherwise.  ``U`` is retracted to the group
    after each step.
    """
    fam = spec.family
    ts = as_grid(spec, grid)
    mids = 0.5 * (ts[:-1] + ts[1:])
    rhos, drhos = spec.values(ts), spec.derivatives(ts)
    mid_rhos, mid_drhos = spec.values(mids), spec.derivatives(mids)

    def gen(t, rho, drho):
        k, _, low = flow_generator(fam, rho, drho, tol)
        floor = tol.flow_gap * (1.0 + np.linalg.norm(rho)) if gap_min is None else gap_min
        if low < floor:
            raise NearSingularPoint(f"smallest root value {low:.3g} below {floor:.3g} at t = {t:.6g}", t=float(t), gap=low)
        return k_to_ambient(fam, k), k, low

    rho0 = rhos[0]
    if U0 is None:
        u, _ = diagonalize_point(fam, rho0, tol)
    else:
        u = U0
        _, off = project_a(fam, adjoint_action(fam, inverse_k(fam, u), rho0))
        if off > tol.solve * (1.0 + np.linalg.norm(rho0)):
            raise ValueError(f"U0 does not diagonalize rho(t_start) (residual {off:.3g})")
    relaxed = is_relaxed(fam, u)
    ua = k_to_ambient(fam, u)

    n = ts.size
    us, ks, gaps = [], [], np.zeros(n)
    lift, mu = np.zeros((n, fam.a_dim)), np.zeros((n, fam.a_dim))
    off, grp = np.zeros(n), np.zeros(n)
    ka, k, gaps[0] = gen(ts[0], rhos[0], drhos[0])
    for i in range(n):
        t = ts[i]
        if i > 0:
            h = t - ts[i - 1]
            kmid, _, _ = gen(mids[i - 1], mid_rhos[i - 1], mid_drhos[i - 1])
            knew, k, gaps[i] = gen(t, rhos[i], drhos[i])
            s1 = ka @ ua
            s2 = kmid @ (ua + 0.5 * h * s1)
            s3 = kmid @ (ua + 0.5 * h * s2)
            s4 = knew @ (ua + h * s3)
            ua = ua + (h / 6.0) * (s1 + 2 * s2 + 2 * s3 + s4)
            ua = k_to_ambient(fam, _renormalize_phase(fam, polar_retract(fam, k_from_ambient(fam, ua))))
            ka = knew
        ug = k_from_ambient(fam, ua)
        uinv = inverse_k(fam, ug)
        lift[i], off[i] = project_a(fam, adjoint_action(fam, uinv, rhos[i]))
        mu[i], _ = project_a(fam, adjoint_action(fam, uinv, drhos[i]))
        grp[i] = group_residual(fam, ug, allow_relaxed=relaxed)
        us.append(ug)
        ks.append(k)
    srt = np.array([chamber_sort(v, fam.weyl_type)[0] for v in lift])
    return DiagonalizedPath(
        family=fam,
        times=ts,
        lambda_sorted=srt,
        face=[face_of(v, fam.weyl_type, tol.face) for v in srt],
        lambda_lift=lift,
        mu=mu,
        U=us,
        residual_offdiag=off,
        residual_group=grp,
        info={"k": ks, "min_root": gaps, "relaxed": relaxed},
    )


# --------------------------------------------------------------------------
# commuting tuples and per-sample output
# --------------------------------------------------------------------------

def offpattern_residuals(fam, u, xs):
    uinv = inverse_k(fam, u)
    return [project_a(fam, adjoint_action(fam, uinv, x))[1] for x in xs]


def simultaneous_diagonalize(fam, xs, tol=None, tolerances=DEFAULT):
    """One ``U`` putting every element of a commuting tuple into ``a``.

    ``tol`` bounds the pairwise commutators relative to
    ``(1 + |x_i|)(1 + |x_j|)`` (default ``tolerances.commute``), the scale at
    which clusters are merged.  The coordinates are ordered
    lexicographically: the first element is in the chamber and ties are
    broken by the following ones.
    """
    if tol is None:
        tol = tolerances.commute
    xs = [check_shape(fam, x) for x in xs]
    if not xs:
        raise ValueError("need at least one matrix")
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            c = sum(np.linalg.norm(b) ** 2 for b in _blocks(bracket_pp(fam, xs[i], xs[j]))) ** 0.5
            bound = tol * (1.0 + np.linalg.norm(xs[i])) * (1.0 + np.linalg.norm(xs[j]))
            if c > bound:
                raise NotCommuting(f"elements {i} and {j} do not commute (|[x_i, x_j]| = {c:.3g})")
    u, lams = joint_diagonalize(fam, xs, tolerances)
    scale = max(np.linalg.norm(x) for x in xs)
    worst = max(offpattern_residuals(fam, u, xs))
    if worst > 1e3 * tolerances.solve * (1.0 + scale):
        raise SolverFailure(f"joint diagonalization residual {worst:.3g} too large")
    return u, lams


def measurable_curve(spec, grid, tol=DEFAULT, match_tol=1e-4, workers=None):
    """Per-sample ``(U, lambda_sorted, face)`` with no continuity across samples.

    With derivatives available, ``mu`` is added and ``info["ae_match"]`` is
    the fraction of interior regular samples at which the central difference
    of ``lambda_sorted`` agrees with ``mu`` as multisets (relative tolerance
    ``match_tol``).
    """
    fam = spec.family
    ts = as_grid(spec, grid)
    xs = spec.values(ts)
    rows = _map(lambda i: _sorted_sample(fam, xs[i], i, tol), range(ts.size), workers)
    out = _assemble(spec, ts, rows, keep_u=True)
    if not spec.has_derivative:
        return out

    dxs = spec.derivatives(ts)

    def jet(i):
        x = xs[i]
        b = commutant_projection(fam, x, dxs[i], tol.cluster)
        try:
            _, (lam, m) = simultaneous_diagonalize(fam, [x, b], tolerances=tol)
        except SolverFailure as exc:
            raise SolverFailure(str(exc), index=i) from exc
        _, w = chamber_sort(lam, fam.weyl_type)
        return apply(w, m)

    out.mu = np.array(_map(jet, range(ts.size), workers)).reshape(ts.size, fam.a_dim)
    checked = matched = 0
    for i in range(1, ts.size - 1):
        if not (out.face[i - 1].regular and out.face[i].regular and out.face[i + 1].regular):
            continue
        fd = (out.lambda_sorted[i + 1] - out.lambda_sorted[i - 1]) / (ts[i + 1] - ts[i - 1])
        checked += 1
        m = np.sort(out.mu[i])
        if np.max(np.abs(np.sort(fd) - m)) <= match_tol * (1.0 + np.max(np.abs(m))):
            matched += 1
    out.info["ae_checked"] = checked
    out.info["ae_match"] = matched / checked if checked else 1.0
    return out


# --------------------------------------------------------------------------
# cross-check against finite-difference eigenprojections
# --------------------------------------------------------------------------

def resolvent_crosscheck(spec, t, h_fd=1e-5, tol=DEFAULT, precision="auto"):
    """``|k(t) - (1/2) sum_k [P_k', P_k]|`` with ``P_k'`` from central differences.

    ``k(t)`` is taken in the ambient operator picture.  For closed-form paths
    the projectors are differentiated in extended precision, so the result
    is dominated by the ``O(h_fd^2)`` truncation error.
    """
    fam = spec.family
    rho, drho = spec.value(t), spec.derivative(t)
    k, _, low = flow_generator(fam, rho, drho, tol)
    floor = tol.flow_gap * (1.0 + np.linalg.norm(rho))
    if low < floor:
        raise NearSingularPoint(f"smallest root value {low:.3g} below {floor:.3g}", t=float(t), gap=low)
    kato = oracles.kato_generator(spec, t, h_fd, precision)
    return float(np.linalg.norm(k_to_ambient(fam, k) - kato))
