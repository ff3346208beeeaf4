"""Brackets, commutant projections and the restricted inverse of ``ad_x``.

All operators are evaluated in the eigenbasis of the ambient Hermitian form
of ``x``: with eigenprojections ``P_k`` and ambient eigenvalues ``l_k``

    Pi_x(b)        = sum_k P_k b P_k
    ad_x^-1(c)     = sum_{k != l} P_k c P_l / (l_k - l_l)

where ``ad_x(k) = [x, k]``.  Eigenvalues closer than the cluster threshold
are treated as equal, so the formulas hold for degenerate ``x`` as well.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import DEFAULT
from .errors import NearSingularPoint, NotInImage, ShapeMismatch
from .families import (
    BlockPair,
    _eigh_desc,
    ambient_eigenvalues,
    ambient_p,
    check_shape,
    hermitian_form,
    k_from_ambient,
    k_to_ambient,
    p_from_ambient,
)


def _norm(x):
    if isinstance(x, BlockPair):
        return float(np.sqrt(np.linalg.norm(x.left) ** 2 + np.linalg.norm(x.right) ** 2))
    return float(np.linalg.norm(x))


def inner(a, b):
    """Frobenius inner product ``Re tr(a* b)`` (summed over blocks for pairs)."""
    if isinstance(a, BlockPair):
        return inner(a.left, b.left) + inner(a.right, b.right)
    return float(np.real(np.vdot(a, b)))


norm = _norm


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of the Hermitian form, with clusters resolved."""

    values: np.ndarray  # descending eigenvalues of the Hermitian form
    vectors: np.ndarray
    labels: np.ndarray  # cluster id per eigenvector, 0 = largest cluster
    threshold: float
    coords: np.ndarray  # chamber coordinates (a-dim) used for root values


def spectrum(fam, x, cluster_tol=None):
    if cluster_tol is None:
        cluster_tol = DEFAULT.cluster
    x = check_shape(fam, x)
    w, v = _eigh_desc(hermitian_form(fam, x))
    thr = cluster_tol * (1.0 + _norm(x))
    labels = np.zeros(w.size, dtype=np.int64)
    labels[1:] = np.cumsum(np.abs(np.diff(w)) > thr)
    return Spectrum(w, v, labels, thr, w[: fam.a_dim].copy())


def root_gaps(fam, spec):
    """``(gap, min_root)``: smallest non-negligible root value and smallest root value."""
    gap, low = _kernels.root_gaps(spec.coords, _kernels.TYPE_CODES[fam.weyl_type], spec.threshold)
    return (0.0 if not np.isfinite(gap) else gap), low


@dataclass(frozen=True)
class EigenStructure:
    family: object
    base: np.ndarray
    distinct_values: np.ndarray
    projections: list
    gap: float
    min_root: float
    regular: bool
    spectrum: Spectrum = field(repr=False)


def eigen_structure(fam, x, cluster_tol=None):
    """Clustered eigenvalues and eigenprojections of (the Hermitian form of) ``x``.

    ``gap`` is the smallest root value that is not numerically zero (0 when
    all vanish); ``regular`` tells whether every root value is nonzero.
    """
    sp = spectrum(fam, x, cluster_tol)
    m = int(sp.labels.max()) + 1 if sp.labels.size else 0
    distinct = np.array([sp.values[sp.labels == k].mean() for k in range(m)])
    projections = []
    for k in range(m):
        cols = sp.vectors[:, sp.labels == k]
        projections.append(cols @ cols.conj().T)
    gap, low = root_gaps(fam, sp)
    return EigenStructure(fam, np.asarray(x), distinct, projections, gap, low, bool(low > sp.threshold), sp)


def _in_eigenbasis(sp, a):
    return sp.vectors.conj().T @ a @ sp.vectors


def _from_eigenbasis(sp, a):
    return sp.vectors @ a @ sp.vectors.conj().T


def _same_cluster(sp):
    return sp.labels[:, None] == sp.labels[None, :]


# --------------------------------------------------------------------------
# brackets
# --------------------------------------------------------------------------

def bracket_pp(fam, x, y):
    """``[x, y]`` for ``x, y`` in p; lands in the Lie algebra of K."""
    xa, ya = ambient_p(fam, check_shape(fam, x)), ambient_p(fam, check_shape(fam, y))
    return k_from_ambient(fam, xa @ ya - ya @ xa)


def bracket_kp(fam, k, x):
    """``ad_k(x) = [k, x]``, the infinitesimal adjoint action of ``k`` on ``x``."""
    ka, xa = k_to_ambient(fam, k), ambient_p(fam, check_shape(fam, x))
    if ka.shape != xa.shape:
        raise ShapeMismatch(f"Lie algebra element does not match {fam.name}")
    return p_from_ambient(fam, ka @ xa - xa @ ka)


def adjoint_action_k(fam, u, k):
    """``Ad_u`` on the Lie algebra of K (conjugation, blockwise for pairs)."""
    if fam.is_svd:
        out = BlockPair(u.left @ k.left @ u.left.conj().T, u.right @ k.right @ u.right.conj().T)
        if not fam.is_complex:
            out = BlockPair(np.real(out.left), np.real(out.right))
        return out
    out = u @ k @ u.conj().T
    return out if fam.is_complex else np.real(out)


def zero_k(fam):
    if fam.is_svd:
        return BlockPair(np.zeros((fam.p, fam.p), fam.dtype), np.zeros((fam.q, fam.q), fam.dtype))
    return np.zeros((fam.p, fam.p), fam.dtype)


# --------------------------------------------------------------------------
# projections and inverse
# --------------------------------------------------------------------------

def _projection_from_spectrum(fam, sp, b):
    c = _in_eigenbasis(sp, ambient_p(fam, b))
    c = np.where(_same_cluster(sp), c, 0.0)
    return p_from_ambient(fam, _from_eigenbasis(sp, c))


def commutant_projection(fam, x, b, cluster_tol=None):
    """Orthogonal projection of ``b`` onto the commutant of ``x`` in p."""
    check_shape(fam, b)
    return _projection_from_spectrum(fam, spectrum(fam, x, cluster_tol), b)


def complement_projection(fam, x, b, cluster_tol=None):
    """``b - Pi_x(b)``: the part of ``b`` in the image of ``ad_x``."""
    return np.asarray(b) - commutant_projection(fam, x, b, cluster_tol)


def _ad_inverse_from_spectrum(fam, sp, c):
    lam = ambient_eigenvalues(fam, sp.values)
    cb = _in_eigenbasis(sp, ambient_p(fam, c))
    denom = lam[:, None] - lam[None, :]
    off = ~_same_cluster(sp)
    kb = np.zeros_like(cb, dtype=np.result_type(cb, denom))
    kb[off] = cb[off] / denom[off]
    return k_from_ambient(fam, _from_eigenbasis(sp, kb))


def ad_inverse(fam, x, c, gap_min=None, tol=DEFAULT, check=True):
    """The ``k`` orthogonal to the stabilizer of ``x`` with ``[x, k] = c``.

    Equivalently ``bracket_kp(k, x) == -c``.  Raises :class:`NearSingularPoint`
    when the smallest non-negligible root value of ``x`` is below
    ``gap_min`` and :class:`NotInImage` when ``c`` has a component commuting
    with ``x``.
    """
    if gap_min is None:
        gap_min = tol.gap_min
    check_shape(fam, c)
    sp = spectrum(fam, x, tol.cluster)
    gap, _ = root_gaps(fam, sp)
    if gap < gap_min:
        raise NearSingularPoint(f"root gap {gap:.3g} below {gap_min:.3g}", gap=gap)
    if check:
        cn = _norm(c)
        par = _norm(_projection_from_spectrum(fam, sp, c))
        if par > tol.solve * (1.0 + _norm(x)) * cn:
            raise NotInImage(f"component in the commutant has norm {par:.3g} (|c| = {cn:.3g})")
    return _ad_inverse_from_spectrum(fam, sp, c)


def flow_generator(fam, x, xdot, tol=DEFAULT):
    """``(k, gap, min_root)`` with ``k = -ad_x^-1(Pi_x^perp(xdot))``.

    One eigendecomposition serves both the projection and the inverse.
    """
    sp = spectrum(fam, x, tol.cluster)
    gap, low = root_gaps(fam, sp)
    lam = ambient_eigenvalues(fam, sp.values)
    cb = _in_eigenbasis(sp, ambient_p(fam, xdot))
    denom = lam[:, None] - lam[None, :]
    off = ~_same_cluster(sp)
    kb = np.zeros_like(cb, dtype=np.result_type(cb, denom))
    kb[off] = -cb[off] / denom[off]
    return k_from_ambient(fam, _from_eigenbasis(sp, kb)), gap, low
