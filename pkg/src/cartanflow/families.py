"""Supported matrix families and pointwise diagonalization.

A family fixes three spaces of matrices:

* ``p``: the matrices being diagonalized (traceless symmetric/Hermitian
  matrices, rectangular p x q blocks, or real skew-symmetric matrices),
* ``a``: the "diagonal" ones inside ``p``, parametrized by real coordinates,
* ``K``: the group acting on ``p`` (special orthogonal/unitary matrices, or
  pairs of them for the SVD families).

Elements are plain numpy arrays; the family is always passed alongside.  For
the SVD families, group elements and Lie algebra elements of ``K`` are
:class:`BlockPair` instances holding the left (p x p) and right (q x q)
blocks.
"""
from dataclasses import dataclass
import re
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .config import DEFAULT
from .errors import MembershipError, ShapeMismatch, SolverFailure, UnsupportedFamily

KINDS = ("real-sym-evd", "herm-evd", "real-svd", "complex-svd", "skew-evd")

# families that exist in the classification but are deliberately not built
_REJECTED = {
    "quaternion-evd", "quaternion-svd", "takagi", "takagi-sym", "takagi-skew",
    "hamiltonian-evd", "aii", "cii", "ci", "diii", "exceptional",
}


class BlockPair(NamedTuple):
    """Left/right blocks of a group or Lie algebra element of an SVD family."""

    left: np.ndarray
    right: np.ndarray


@dataclass(frozen=True)
class FamilyDescriptor:
    kind: str
    p: int
    q: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedFamily(f"unsupported family kind {self.kind!r}")
        if self.kind in ("real-svd", "complex-svd"):
            if not self.p >= self.q >= 1:
                raise ValueError(f"SVD family needs p >= q >= 1, got {self.p}x{self.q}")
        else:
            if self.p != self.q or self.p < 1:
                raise ValueError(f"square family needs n >= 1, got {self.p}x{self.q}")
            if self.kind == "skew-evd" and self.p < 2:
                raise ValueError("skew-evd needs n >= 2")

    @property
    def name(self):
        if self.is_svd:
            return f"{self.kind}:{self.p}x{self.q}"
        return f"{self.kind}:{self.p}"

    def __str__(self):
        return self.name

    @property
    def n(self):
        return self.p

    @property
    def is_svd(self):
        return self.kind in ("real-svd", "complex-svd")

    @property
    def is_evd(self):
        return self.kind in ("real-sym-evd", "herm-evd")

    @property
    def is_complex(self):
        return self.kind in ("herm-evd", "complex-svd")

    @property
    def scalar_field(self):
        return "complex" if self.is_complex else "real"

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    @property
    def ambient_shape(self):
        return (self.p, self.q)

    @property
    def ambient_size(self):
        """Size of the square operator the family is realized on."""
        return self.p + self.q if self.is_svd else self.p

    @property
    def a_dim(self):
        if self.is_evd:
            return self.p
        if self.is_svd:
            return self.q
        return self.p // 2

    @property
    def rank(self):
        return self.a_dim

    @property
    def weyl_type(self):
        if self.is_evd:
            return "A"
        if self.kind == "skew-evd" and self.p % 2 == 0:
            return "D"
        return "B"

    @property
    def weyl_label(self):
        return {"A": "PermA", "B": "SignedPermB", "D": "SignedPermD"}[self.weyl_type] + f"({self.rank})"


def real_sym_evd(n):
    return FamilyDescriptor("real-sym-evd", n, n)


def herm_evd(n):
    return FamilyDescriptor("herm-evd", n, n)


def real_svd(p, q):
    return FamilyDescriptor("real-svd", p, q)


def complex_svd(p, q):
    return FamilyDescriptor("complex-svd", p, q)


def skew_evd(n):
    return FamilyDescriptor("skew-evd", n, n)


_NAME_RE = re.compile(r"^\s*([a-z-]+)\s*:\s*(\d+)(?:\s*x\s*(\d+))?\s*$")


def parse_family(text):
    """Parse ``"herm-evd:3"`` / ``"real-svd:4x2"`` style identifiers."""
    if isinstance(text, FamilyDescriptor):
        return text
    m = _NAME_RE.match(str(text).lower())
    if not m:
        kind = str(text).split(":")[0].strip().lower()
        if kind in _REJECTED:
            raise UnsupportedFamily(f"family {text!r} is not supported")
        raise ValueError(f"cannot parse family identifier {text!r}")
    kind, a, b = m.group(1), int(m.group(2)), m.group(3)
    if kind in _REJECTED:
        raise UnsupportedFamily(f"family {text!r} is not supported")
    if kind not in KINDS:
        raise UnsupportedFamily(f"unknown family kind {kind!r}")
    if kind in ("real-svd", "complex-svd"):
        if b is None:
            raise ValueError(f"SVD family needs a 'pxq' size, got {text!r}")
        return FamilyDescriptor(kind, a, int(b))
    if b is not None:
        raise ValueError(f"square family takes a single size, got {text!r}")
    return FamilyDescriptor(kind, a, a)


# --------------------------------------------------------------------------
# membership and coordinates
# --------------------------------------------------------------------------

def _norm(x):
    return float(np.linalg.norm(x))


def check_shape(fam, x):
    x = np.asarray(x)
    if x.shape != fam.ambient_shape:
        raise ShapeMismatch(f"{fam.name} expects shape {fam.ambient_shape}, got {x.shape}")
    return x


def validate_p(fam, x):
    """Max-norm of the violation of the defining constraints of ``p``."""
    x = check_shape(fam, x)
    res = 0.0
    if not fam.is_complex and np.iscomplexobj(x):
        res = float(np.max(np.abs(x.imag), initial=0.0))
    if fam.is_evd:
        res = max(res, float(np.max(np.abs(x - x.conj().T))), abs(np.trace(x)))
    elif fam.kind == "skew-evd":
        res = max(res, float(np.max(np.abs(x + x.T))))
    return float(res)


def require_p(fam, x, tol=DEFAULT):
    res = validate_p(fam, x)
    if res > tol.member * (1.0 + _norm(x)):
        raise MembershipError(f"matrix is not in p for {fam.name} (residual {res:.3g})")
    return np.asarray(x, dtype=fam.dtype) if fam.is_complex else np.real(np.asarray(x)).astype(float)


def embed_a(fam, coords):
    """The matrix in ``a`` with the given coordinates."""
    c = np.asarray(coords, dtype=float)
    if c.shape != (fam.a_dim,):
        raise ShapeMismatch(f"{fam.name} has a_dim {fam.a_dim}, got coordinates of shape {c.shape}")
    out = np.zeros(fam.ambient_shape, dtype=fam.dtype)
    if fam.is_evd:
        out[np.diag_indices(fam.p)] = c
    elif fam.is_svd:
        idx = np.arange(fam.q)
        out[idx, idx] = c
    else:
        j = 2 * np.arange(fam.a_dim)
        out[j, j + 1] = c
        out[j + 1, j] = -c
    return out


def project_a(fam, x):
    """Coordinates of the ``a``-pattern part of ``x`` and the off-pattern residual."""
    x = check_shape(fam, x)
    if fam.is_evd:
        c = np.real(np.diag(x)).copy()
    elif fam.is_svd:
        c = np.real(np.diag(x)[: fam.q]).copy()
    else:
        j = 2 * np.arange(fam.a_dim)
        c = np.real(x[j, j + 1]).copy()
    res = float(np.max(np.abs(x - embed_a(fam, c)), initial=0.0))
    return c, res


# --------------------------------------------------------------------------
# ambient realization: every family lives inside square matrices
# --------------------------------------------------------------------------

def ambient_p(fam, x):
    """The square operator representing ``x`` (the antidiagonal embedding for SVD)."""
    if fam.is_svd:
        p, q = fam.p, fam.q
        dt = np.result_type(x, fam.dtype)
        out = np.zeros((p + q, p + q), dtype=dt)
        out[:p, p:] = x
        out[p:, :p] = np.conj(x).T
        return out
    return np.asarray(x)


def hermitian_form(fam, x):
    """Hermitian matrix with the same eigenprojections as ``ambient_p(x)``."""
    if fam.kind == "skew-evd":
        return 1j * np.asarray(x)
    return ambient_p(fam, x)


def ambient_eigenvalues(fam, herm_values):
    """Eigenvalues of the ambient operator given those of its Hermitian form."""
    if fam.kind == "skew-evd":
        return -1j * np.asarray(herm_values)
    return np.asarray(herm_values)


def p_from_ambient(fam, a):
    out = a[: fam.p, fam.p:] if fam.is_svd else a
    return np.array(out if fam.is_complex else np.real(out))


def k_to_ambient(fam, k):
    if fam.is_svd:
        return scipy.linalg.block_diag(k.left, k.right)
    return np.asarray(k)


def k_from_ambient(fam, a):
    if not fam.is_complex:
        a = np.real(a)
    if fam.is_svd:
        return BlockPair(np.array(a[: fam.p, : fam.p]), np.array(a[fam.p:, fam.p:]))
    return np.array(a)


group_to_ambient = k_to_ambient
group_from_ambient = k_from_ambient


def identity_k(fam):
    if fam.is_svd:
        return BlockPair(np.eye(fam.p, dtype=fam.dtype), np.eye(fam.q, dtype=fam.dtype))
    return np.eye(fam.p, dtype=fam.dtype)


def compose_k(fam, u, v):
    """Group product ``u v``."""
    if fam.is_svd:
        return BlockPair(u.left @ v.left, u.right @ v.right)
    return u @ v


def inverse_k(fam, u):
    if fam.is_svd:
        return BlockPair(u.left.conj().T, u.right.conj().T)
    return u.conj().T


def adjoint_action(fam, u, x):
    """``Ad_u(x)``: conjugation, or ``U_L Y U_R*`` for the SVD families."""
    x = check_shape(fam, x)
    if fam.is_svd:
        if u.left.shape != (fam.p, fam.p) or u.right.shape != (fam.q, fam.q):
            raise ShapeMismatch(f"group element blocks do not match {fam.name}")
        out = u.left @ x @ u.right.conj().T
    else:
        u = np.asarray(u)
        if u.shape != (fam.p, fam.p):
            raise ShapeMismatch(f"group element of shape {u.shape} does not match {fam.name}")
        out = u @ x @ u.conj().T
    return out if fam.is_complex else np.real(out)


def group_determinant(fam, u):
    if fam.is_svd:
        return complex(np.linalg.det(u.left) * np.linalg.det(u.right))
    return complex(np.linalg.det(u))


def is_relaxed(fam, u):
    """True when ``u`` sits in the non-identity component (det = -1).

    Only square real SVD families can need this; see :func:`diagonalize_point`.
    """
    return fam.kind == "real-svd" and group_determinant(fam, u).real < 0


def group_residual(fam, u, allow_relaxed=False):
    """Max deviation from orthogonality/unitarity and from det = 1."""
    blocks = (u.left, u.right) if fam.is_svd else (np.asarray(u),)
    res = 0.0
    for b in blocks:
        res = max(res, float(np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0])))))
        if not fam.is_complex:
            res = max(res, float(np.max(np.abs(np.imag(b)), initial=0.0)))
    d = group_determinant(fam, u)
    dev = abs(d - 1.0)
    if allow_relaxed:
        dev = min(dev, abs(d + 1.0))
    return max(res, dev)


def polar_retract(fam, u):
    """Nearest group element (orthogonal polar factor of each block)."""
    def _polar(b):
        w, _, vh = np.linalg.svd(b)
        return w @ vh

    if fam.is_svd:
        return BlockPair(_polar(u.left), _polar(u.right))
    return _polar(np.asarray(u))


# --------------------------------------------------------------------------
# joint diagonalization (one matrix is the special case used pointwise)
# --------------------------------------------------------------------------

def cluster_indices(values_desc, thr):
    """Split descending values into runs whose consecutive gaps are <= thr."""
    v = np.asarray(values_desc)
    if v.size == 0:
        return []
    breaks = np.nonzero(np.abs(np.diff(v)) > thr)[0] + 1
    return np.split(np.arange(v.size), breaks)


def _eigh_desc(h):
    h = 0.5 * (h + h.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SolverFailure(f"eigendecomposition did not converge: {exc}") from exc
    return w[::-1], v[:, ::-1]


def _herm_joint(mats, ctol):
    w, v = _eigh_desc(mats[0])
    if len(mats) == 1:
        return v
    v = v.copy()
    for idx in cluster_indices(w, ctol * (1.0 + _norm(mats[0]))):
        if idx.size < 2:
            continue
        cols = v[:, idx]
        sub = [cols.conj().T @ m @ cols for m in mats[1:]]
        v[:, idx] = cols @ _herm_joint(sub, ctol)
    return v


def _svd_joint(ys, ctol):
    y = ys[0]
    p, q = y.shape
    try:
        ul, s, vh = np.linalg.svd(y, full_matrices=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolverFailure(f"SVD did not converge: {exc}") from exc
    ur = vh.conj().T
    if len(ys) == 1:
        return ul, ur
    thr = ctol * (1.0 + _norm(y))
    k = int(np.count_nonzero(s > thr))
    rest = [ul.conj().T @ m @ ur for m in ys[1:]]
    for idx in cluster_indices(s[:k], thr):
        if idx.size < 2:
            continue
        blocks = [r[np.ix_(idx, idx)] for r in rest]
        w = _herm_joint(blocks, ctol)
        ul[:, idx] = ul[:, idx] @ w
        ur[:, idx] = ur[:, idx] @ w
    if k < q:
        wl, wr = _svd_joint([r[k:, k:] for r in rest], ctol)
        ul[:, k:] = ul[:, k:] @ wl
        ur[:, k:] = ur[:, k:] @ wr
    return ul, ur


def _real_pairs(z):
    """Real orthonormal column pairs spanning the eigenvectors ``z`` and their conjugates."""
    cols = []
    for j in range(z.shape[1]):
        v = z[:, j]
        cols.append(np.sqrt(2.0) * v.real)
        cols.append(-np.sqrt(2.0) * v.imag)
    return cols


def _skew_joint(xs, ctol):
    x = xs[0]
    n = x.shape[0]
    w, z = _eigh_desc(1j * x)
    thr = ctol * (1.0 + _norm(x))
    kp = min(int(np.count_nonzero(w > thr)), n // 2)
    cols = []
    for idx in cluster_indices(w[:kp], thr):
        zc = z[:, idx]
        if len(xs) > 1 and idx.size > 1:
            sub = [zc.conj().T @ (1j * m) @ zc for m in xs[1:]]
            zc = zc @ _herm_joint(sub, ctol)
        cols.extend(_real_pairs(zc))
    m0 = n - 2 * kp
    if m0 > 0:
        z0 = z[:, kp:n - kp]
        basis, _, _ = np.linalg.svd(np.concatenate([z0.real, z0.imag], axis=1))
        basis = basis[:, :m0]
        if len(xs) > 1:
            basis = basis @ _skew_joint([basis.T @ m @ basis for m in xs[1:]], ctol)
        cols.extend(basis.T)
    return np.column_stack(cols)


def _phase(d):
    return d / abs(d) if abs(d) > 0 else 1.0


def _fix_determinant(fam, u, lead_coords, thr):
    """Move ``u`` to det = 1 without leaving the common stabilizer of the inputs."""
    if fam.is_svd:
        ul, ur = u.left.copy(), u.right.copy()
        d = np.linalg.det(ul) * np.linalg.det(ur)
        if fam.is_complex:
            if fam.p > fam.q:
                ul[:, -1] *= np.conj(_phase(d))
            else:
                half = np.exp(-0.5j * np.angle(d))
                ul[:, -1] *= half
                ur[:, -1] *= half
        elif d < 0:
            if fam.p > fam.q:
                ul[:, -1] *= -1
            else:
                zeros = np.nonzero(np.abs(lead_coords) <= thr)[0]
                if zeros.size:
                    ur[:, zeros[-1]] *= -1
                # otherwise det = -1 is kept; is_relaxed() reports it
        return BlockPair(ul, ur)
    u = u.copy()
    d = np.linalg.det(u)
    if fam.is_complex:
        u[:, -1] *= np.conj(_phase(d))
    elif d < 0:
        u[:, -1] *= -1
    return u


def joint_diagonalize(fam, xs, tol=DEFAULT):
    """Group element putting every (pairwise commuting) ``xs[i]`` into ``a``.

    The first matrix lands in the closed Weyl chamber; degenerate clusters of
    each matrix are resolved by the following ones in order.  Commutation is
    not checked here.
    """
    xs = [check_shape(fam, x) for x in xs]
    if fam.is_evd:
        u = _herm_joint([np.asarray(x, dtype=fam.dtype) for x in xs], tol.cluster)
    elif fam.is_svd:
        u = BlockPair(*_svd_joint([np.asarray(x, dtype=fam.dtype) for x in xs], tol.cluster))
    else:
        u = _skew_joint([np.real(x) for x in xs], tol.cluster)
    if not fam.is_complex:
        u = BlockPair(np.real(u.left), np.real(u.right)) if fam.is_svd else np.real(u)
    uinv = inverse_k(fam, u)
    lead, _ = project_a(fam, adjoint_action(fam, uinv, xs[0]))
    thr = tol.cluster * (1.0 + _norm(xs[0]))
    u = _fix_determinant(fam, u, lead, thr)
    uinv = inverse_k(fam, u)
    lams = [project_a(fam, adjoint_action(fam, uinv, x))[0] for x in xs]
    return u, lams


def diagonalize_point(fam, x, tol=DEFAULT):
    """``(U, lam)`` with ``Ad_U^-1(x) = embed_a(lam)`` and ``lam`` in the closed chamber."""
    x = require_p(fam, x, tol)
    u, (lam,) = joint_diagonalize(fam, [x], tol)
    return u, lam
