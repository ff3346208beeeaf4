"""Independent verification machinery.

Nothing here calls into ``lie_ops`` or ``weyl``: group elements are
enumerated with itertools, spectra come straight from numpy/mpmath, and
embeddings are rebuilt locally.  Tests compare the library against these.

Random instances come from a SplitMix64 stream (Steele, Lea & Flood 2014):

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

Doubles use the top 53 bits; normals use Box-Muller on pairs of uniforms.
"""
from dataclasses import dataclass
from itertools import permutations, product

import mpmath
import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _kernels
from .errors import ClusterMismatch, TooLarge
from .families import BlockPair, FamilyDescriptor, embed_a
from .paths import BUILTINS, PathSpec, builtin

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self, n):
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GOLDEN) & _MASK
        return z

    def uniform(self, n):
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, shape):
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape))
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1]
        u2 = self.uniform(m)
        rad = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)])
        return z[:n].reshape(shape)


# --------------------------------------------------------------------------
# random instances
# --------------------------------------------------------------------------

def _gaussian(rng, fam, shape):
    g = rng.normal(shape)
    if fam.is_complex:
        g = (g + 1j * rng.normal(shape)) / np.sqrt(2.0)
    return g


def _project_to_p(fam, g):
    """Orthogonal projection onto p; works on stacks of matrices too."""
    gt = np.swapaxes(g, -1, -2)
    if fam.is_evd:
        h = 0.5 * (g + gt.conj())
        tr = np.trace(h, axis1=-2, axis2=-1)[..., None, None]
        return h - tr / fam.n * np.eye(fam.n)
    if fam.kind == "skew-evd":
        return 0.5 * (g - gt)
    return g


def _haar(rng, fam, n):
    q, r = np.linalg.qr(_gaussian(rng, fam, (n, n)))
    d = np.diag(r)
    q = q * (d / np.abs(d))[None, :]
    return q


@dataclass
class InstanceGenerator:
    """Reproducible random elements and paths for one family.

    ``spectral_profile`` is ``"generic"``, ``"clustered(k)"`` or
    ``"crossing-engineered"``.
    """

    family: FamilyDescriptor
    seed: int
    spectral_profile: str = "generic"

    def __post_init__(self):
        self.rng = SplitMix64(self.seed)

    @property
    def cluster_size(self):
        prof = self.spectral_profile
        if prof.startswith("clustered(") and prof.endswith(")"):
            return int(prof[len("clustered("):-1])
        return 1

    def uniform(self, n):
        return self.rng.uniform(n)

    def normal(self, shape):
        return self.rng.normal(shape)

    def a_vector(self):
        fam = self.family
        c = self.rng.normal(fam.a_dim)
        k = self.cluster_size
        if k > 1:
            c[:k] = c[0]
        if fam.is_evd:
            c = c - c.mean()
        return c

    def k_element(self):
        fam = self.family
        if fam.is_svd:
            ul, ur = _haar(self.rng, fam, fam.p), _haar(self.rng, fam, fam.q)
            d = np.linalg.det(ul) * np.linalg.det(ur)
            ul[:, -1] *= np.conj(d) / abs(d) if fam.is_complex else np.sign(d.real)
            return BlockPair(ul, ur)
        u = _haar(self.rng, fam, fam.n)
        d = np.linalg.det(u)
        u[:, -1] *= np.conj(d) / abs(d) if fam.is_complex else np.sign(d.real)
        return u

    def p_element(self):
        fam = self.family
        if self.cluster_size > 1:
            u = self.k_element()
            a = embed_a(fam, self.a_vector())
            if fam.is_svd:
                return u.left @ a @ u.right.conj().T
            out = u @ a @ u.conj().T
            return out if fam.is_complex else out.real
        return _project_to_p(fam, _gaussian(self.rng, fam, fam.ambient_shape))

    def p_elements(self, count):
        return [self.p_element() for _ in range(count)]

    def p_batch(self, count):
        """``count`` elements as one array, drawn in a single block.

        Same distribution as :meth:`p_element` but a different stream
        layout, so the values differ from ``count`` single draws.
        """
        if self.cluster_size > 1:
            return np.array(self.p_elements(count))
        fam = self.family
        return _project_to_p(fam, _gaussian(self.rng, fam, (count,) + fam.ambient_shape))

    def trigpoly(self, degree=2, domain=(0.0, 1.0), scale=1.0):
        fam = self.family
        c = _project_to_p(fam, _gaussian(self.rng, fam, fam.ambient_shape)) * scale
        cos = [_project_to_p(fam, _gaussian(self.rng, fam, fam.ambient_shape)) * scale / j for j in range(1, degree + 1)]
        sin = [_project_to_p(fam, _gaussian(self.rng, fam, fam.ambient_shape)) * scale / j for j in range(1, degree + 1)]
        return PathSpec(fam, "trigpoly", domain, {"constant": c, "cos": cos, "sin": sin})

    def regular_trigpoly(self, domain=(0.0, 1.0), min_gap=0.2, degree=2, checks=401, attempts=200):
        """A random trigonometric path whose root values stay above ``min_gap``."""
        ts = np.linspace(domain[0], domain[1], checks)
        for _ in range(attempts):
            spec = self.trigpoly(degree, domain)
            if min_root_along(spec, ts) >= min_gap:
                return spec
        raise RuntimeError("no regular path found; lower min_gap")

    def crossing_trigpoly(self, domain=(-1.0, 1.0), separation=3.0):
        """An EVD path whose two top-block eigenvalues cross once, transversally.

        The crossing pair is ``a(t) +- sin(t - tc)`` on a block whose
        eigenvectors rotate with ``t``; the remaining eigenvalues sit at
        distance ``separation`` or more.  Returns ``(spec, tc)``.
        """
        fam = self.family
        if not fam.is_evd or fam.n < 2:
            raise ValueError("crossing paths are built for EVD families with n >= 2")
        n = fam.n
        tc = float(0.6 * (self.rng.uniform(1)[0] - 0.5) * (domain[1] - domain[0]) / 2)
        amp = 0.5 + 0.5 * self.rng.uniform(1)[0]
        drift = 0.2 * self.rng.normal(1)[0]
        phases = 2 * np.pi * self.rng.uniform(max(n - 2, 1))
        v = self.k_element()

        def f(t):
            t = np.asarray(t, dtype=float)
            out = np.zeros(t.shape + (n, n), dtype=fam.dtype)
            s = np.sin(t - tc) * amp
            c2, s2 = np.cos(t), np.sin(t)
            out[..., 0, 0] = drift * np.cos(t) + s * c2
            out[..., 1, 1] = drift * np.cos(t) - s * c2
            out[..., 0, 1] = s * s2
            out[..., 1, 0] = s * s2
            for k in range(2, n):
                level = separation * (k - 1) * (1 if k % 2 else -1)
                out[..., k, k] = level + 0.3 * np.cos(t + phases[k - 2])
            tr = np.trace(out, axis1=-2, axis2=-1) / n
            out = out - tr[..., None, None] * np.eye(n)
            return v @ out @ v.conj().T

        spec = fit_trigpoly(fam, f, degree=2, domain=domain)
        return spec, tc


def fit_trigpoly(fam, f, degree, domain):
    """Exact coefficients of a trigonometric polynomial of known degree from samples."""
    m = 4 * degree + 4
    ts = 2 * np.pi * np.arange(m) / m
    vals = np.asarray(f(ts))
    coef = np.fft.fft(vals, axis=0) / m
    c = coef[0]
    cos = [2 * coef[j].real if not fam.is_complex else (coef[j] + coef[m - j]) for j in range(1, degree + 1)]
    sin = [-2 * coef[j].imag if not fam.is_complex else 1j * (coef[j] - coef[m - j]) for j in range(1, degree + 1)]
    if not fam.is_complex:
        c = c.real
    return PathSpec(fam, "trigpoly", domain, {"constant": c, "cos": cos, "sin": sin})


# --------------------------------------------------------------------------
# spectra, rebuilt independently of lie_ops
# --------------------------------------------------------------------------

def hermitian_form(fam, x):
    x = np.asarray(x)
    if fam.is_svd:
        p, q = fam.p, fam.q
        h = np.zeros((p + q, p + q), dtype=np.result_type(x, np.float64))
        h[:p, p:] = x
        h[p:, :p] = x.conj().T
        return h
    if fam.kind == "skew-evd":
        return 1j * x
    return x


def _pfaffian_sign(x):
    import scipy.linalg

    t, z = scipy.linalg.schur(np.asarray(x, dtype=float), output="real")
    n = x.shape[0]
    pf = np.linalg.det(z)
    i = 0
    while i < n - 1:
        if abs(t[i + 1, i]) > 0 or abs(t[i, i + 1]) > 0:
            pf *= t[i, i + 1]
            i += 2
        else:
            return 0.0
    return float(np.sign(pf))


def sorted_coordinates(fam, x):
    """Chamber coordinates of ``x`` straight from eigenvalues / singular values."""
    x = np.asarray(x)
    if fam.is_evd:
        return np.sort(np.linalg.eigvalsh(x))[::-1]
    if fam.is_svd:
        return np.linalg.svd(x, compute_uv=False)
    w = np.sort(np.linalg.eigvalsh(1j * x))[::-1][: fam.n // 2]
    if fam.n % 2 == 0:
        w = w.copy()
        w[-1] *= _pfaffian_sign(x) or 1.0
    return w


def min_root_along(spec, ts):
    """Smallest root value of ``spec`` over the grid ``ts``."""
    fam = spec.family
    low = np.inf
    for x in spec.values(ts):
        c = sorted_coordinates(fam, x)
        diffs = np.abs(c[:, None] - c[None, :])[np.triu_indices(c.size, 1)]
        vals = [diffs]
        if not fam.is_evd:
            vals.append(np.abs(c[:, None] + c[None, :])[np.triu_indices(c.size, 1)])
            if fam.weyl_type == "B":
                vals.append(np.abs(c))
        allv = np.concatenate(vals)
        if allv.size:
            low = min(low, float(allv.min()))
    return low


# --------------------------------------------------------------------------
# exhaustive Weyl search
# --------------------------------------------------------------------------

def enumerate_weyl(weyl_type, r):
    """``(inverse_perms, signs)`` over all elements, in ``(perm, signs)`` lex order."""
    signs = [(1,) * r] if weyl_type == "A" else list(product((1, -1), repeat=r))
    if weyl_type == "D":
        signs = [s for s in signs if np.prod(s) == 1]
    invs, sgs = [], []
    for perm in permutations(range(r)):
        inv = [0] * r
        for j, i in enumerate(perm):
            inv[i] = j
        for s in signs:
            invs.append(inv)
            sgs.append(s)
    return np.array(invs, dtype=np.int64).reshape(-1, r), np.array(sgs, dtype=np.float64).reshape(-1, r)


def brute_force_weyl_min_batch(us, vs, weyl_type, use_jit=None):
    us = np.atleast_2d(np.asarray(us, dtype=float))
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    r = us.shape[1]
    if r > 6:
        raise TooLarge(f"exhaustive search over rank {r} is not supported (r <= 6)")
    inv, sg = enumerate_weyl(weyl_type, r)
    return _kernels.weyl_min_batch(us, vs, inv, sg, use_jit=use_jit)


def brute_force_weyl_min(u, v, weyl_type):
    """``min_w |u - w.v|`` by enumerating the whole group."""
    return float(brute_force_weyl_min_batch(u, v, weyl_type)[0])


def brute_force_match(prev, nxt, weyl_type, beta):
    """Minimal jet-matching cost over the whole group (plain numpy)."""
    pv, pd = (np.asarray(a, dtype=float) for a in prev)
    nv, nd = (np.asarray(a, dtype=float) for a in nxt)
    r = pv.size
    if r > 6:
        raise TooLarge("exhaustive search needs r <= 6")
    inv, sg = enumerate_weyl(weyl_type, r)
    cost = np.sum((sg * nv[inv] - pv) ** 2, axis=1) + beta * np.sum((sg * nd[inv] - pd) ** 2, axis=1)
    return float(cost.min())


# --------------------------------------------------------------------------
# finite differences of eigenprojections
# --------------------------------------------------------------------------

def _clusters(values_desc, thr):
    groups = [[0]] if len(values_desc) else []
    for i in range(1, len(values_desc)):
        if abs(values_desc[i - 1] - values_desc[i]) > thr:
            groups.append([i])
        else:
            groups[-1].append(i)
    return groups


def _projectors_double(fam, x, ctol):
    h = hermitian_form(fam, x)
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    w, v = w[::-1], v[:, ::-1]
    thr = ctol * (1.0 + np.linalg.norm(x))
    groups = _clusters(w, thr)
    means = np.array([w[g].mean() for g in groups])
    projs = [v[:, g] @ v[:, g].conj().T for g in groups]
    return means, projs


def _projectors_mp(fam, x_mp, ctol):
    rows, cols = x_mp.rows, x_mp.cols
    if fam.is_svd:
        n = rows + cols
        h = mpmath.matrix(n, n)
        for i in range(rows):
            for j in range(cols):
                h[i, rows + j] = x_mp[i, j]
                h[rows + j, i] = mpmath.conj(x_mp[i, j])
    elif fam.kind == "skew-evd":
        h = x_mp * mpmath.mpc(0, 1)
    else:
        h = x_mp
    w, q = mpmath.eigh(h)
    n = h.rows
    order = sorted(range(n), key=lambda i: -w[i])
    wd = [w[i] for i in order]
    nrm = float(mpmath.mnorm(x_mp, "f"))
    groups = _clusters([float(z) for z in wd], ctol * (1.0 + nrm))
    means, projs = [], []
    for g in groups:
        idx = [order[i] for i in g]
        p = mpmath.matrix(n, n)
        for k in idx:
            col = q[:, k]
            p += col * col.H
        projs.append(p)
        means.append(float(sum(wd[i] for i in g) / len(g)))
    return np.array(means), projs


def _mp_to_numpy(m):
    return np.array([[complex(m[i, j]) for j in range(m.cols)] for i in range(m.rows)])


def _match_clusters(ref, other):
    if len(ref) != len(other):
        raise ClusterMismatch(f"cluster count changes across the stencil ({len(ref)} vs {len(other)})")
    cost = np.abs(np.asarray(ref)[:, None] - np.asarray(other)[None, :])
    _, cols = linear_sum_assignment(cost)
    return cols


def projector_jet(spec, t, h=1e-5, precision="auto", dps=40, cluster_tol=1e-8):
    """Eigenprojections at ``t`` and their central-difference derivatives.

    Returns ``(values, P, dP)``: cluster means of the Hermitian form in
    descending order, projections, and ``(P(t+h) - P(t-h)) / 2h``.  With
    ``precision="mp"`` (the default for closed-form paths) everything is
    computed with ``dps`` decimal digits, so the result carries only the
    truncation error of the stencil.
    """
    fam = spec.family
    if precision == "auto":
        precision = "mp" if spec.supports_mp else "double"
    if precision == "double":
        m0, p0 = _projectors_double(fam, spec.value(t), cluster_tol)
        mp_, pp = _projectors_double(fam, spec.value(t + h), cluster_tol)
        mm, pm = _projectors_double(fam, spec.value(t - h), cluster_tol)
        ip, im = _match_clusters(m0, mp_), _match_clusters(m0, mm)
        dp = [(pp[ip[k]] - pm[im[k]]) / (2 * h) for k in range(len(p0))]
        return m0, p0, dp
    with mpmath.workdps(dps):
        tm = mpmath.mpf(t)
        hm = mpmath.mpf(h)
        m0, p0 = _projectors_mp(fam, spec.value_mp(tm), cluster_tol)
        mp_, pp = _projectors_mp(fam, spec.value_mp(tm + hm), cluster_tol)
        mm, pm = _projectors_mp(fam, spec.value_mp(tm - hm), cluster_tol)
        ip, im = _match_clusters(m0, mp_), _match_clusters(m0, mm)
        dp = [_mp_to_numpy((pp[ip[k]] - pm[im[k]]) / (2 * hm)) for k in range(len(p0))]
        p0 = [_mp_to_numpy(p) for p in p0]
    return m0, p0, dp


def finite_diff_projectors(spec, t, h=1e-5, precision="auto", richardson=False):
    """Cluster-matched central differences ``P_k'(t)`` (descending clusters)."""
    _, _, dp = projector_jet(spec, t, h, precision)
    if richardson:
        _, _, dp2 = projector_jet(spec, t, h / 2, precision)
        dp = [(4 * b - a) / 3 for a, b in zip(dp, dp2)]
    return dp


def kato_generator(spec, t, h=1e-5, precision="auto"):
    """``(1/2) sum_k [P_k', P_k]`` from finite-difference projectors."""
    _, ps, dps = projector_jet(spec, t, h, precision)
    out = np.zeros_like(ps[0], dtype=complex)
    for p, dp in zip(ps, dps):
        out += dp @ p - p @ dp
    return 0.5 * out


def sorted_derivative_fd(spec, t, h):
    """Central difference of the chamber-sorted coordinates at ``t``."""
    fam = spec.family
    return (sorted_coordinates(fam, spec.value(t + h)) - sorted_coordinates(fam, spec.value(t - h))) / (2 * h)


# --------------------------------------------------------------------------
# corpus
# --------------------------------------------------------------------------

def corpus(name):
    """Named builtin path with closed-form value and derivative."""
    return builtin(name)


def corpus_names():
    return sorted(BUILTINS)
