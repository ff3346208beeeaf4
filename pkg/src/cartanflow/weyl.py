"""Weyl groups of types A, B and D acting on chamber coordinates.

A group element is a (signed) permutation acting by

    (w . v)_i = signs_i * v_{perm^-1(i)},

so ``perm[j]`` is the slot that coordinate ``j`` moves to.  Closed chambers:

* A: ``v_1 >= ... >= v_r``
* B: ``v_1 >= ... >= v_r >= 0``
* D: ``v_1 >= ... >= v_{r-1} >= |v_r|``
"""
from dataclasses import dataclass
from itertools import permutations, product
import warnings

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _kernels
from .errors import MatchAmbiguous, NotInChamber

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class WeylElement:
    weyl_type: str
    perm: tuple
    signs: tuple

    def __post_init__(self):
        r = len(self.perm)
        if sorted(self.perm) != list(range(r)) or len(self.signs) != r:
            raise ValueError("perm must be a permutation of 0..r-1 with one sign per slot")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")
        if self.weyl_type == "A" and any(s != 1 for s in self.signs):
            raise ValueError("type A elements carry no signs")
        if self.weyl_type == "D" and int(np.prod(self.signs)) != 1:
            raise ValueError("type D elements need an even number of sign changes")

    @property
    def rank(self):
        return len(self.perm)

    @property
    def inverse_perm(self):
        inv = [0] * self.rank
        for j, i in enumerate(self.perm):
            inv[i] = j
        return tuple(inv)

    def inverse(self):
        inv = self.inverse_perm
        # w^-1 . u puts u_i back to slot perm^-1(i) with sign signs_i
        return WeylElement(self.weyl_type, inv, tuple(self.signs[self.perm[j]] for j in range(self.rank)))

    def __mul__(self, other):
        """Composition: ``(self * other) . v == self . (other . v)``."""
        perm = tuple(self.perm[other.perm[j]] for j in range(self.rank))
        inv = self.inverse_perm
        signs = tuple(self.signs[k] * other.signs[inv[k]] for k in range(self.rank))
        return WeylElement(self.weyl_type, perm, signs)

    def matrix(self):
        m = np.zeros((self.rank, self.rank))
        for j, i in enumerate(self.perm):
            m[i, j] = self.signs[i]
        return m


def identity(weyl_type, r):
    return WeylElement(weyl_type, tuple(range(r)), (1,) * r)


def apply(w, v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != w.rank:
        raise ValueError(f"vector of length {v.shape[-1]} for a rank-{w.rank} element")
    return np.asarray(w.signs, dtype=float) * v[..., list(w.inverse_perm)]


def elements(weyl_type, r):
    """All group elements, ordered lexicographically by ``(perm, signs)`` with +1 before -1."""
    sign_choices = [(1,) * r] if weyl_type == "A" else list(product((1, -1), repeat=r))
    if weyl_type == "D":
        sign_choices = [s for s in sign_choices if int(np.prod(s)) == 1]
    for perm in permutations(range(r)):
        for s in sign_choices:
            yield WeylElement(weyl_type, perm, s)


def group_order(weyl_type, r):
    from math import factorial

    if weyl_type == "A":
        return factorial(r)
    if weyl_type == "B":
        return factorial(r) * 2 ** r
    return factorial(r) * 2 ** max(r - 1, 0)


def group_table(weyl_type, r):
    """``(inverse_perms, signs)`` arrays over :func:`elements`, for the kernels."""
    elems = list(elements(weyl_type, r))
    inv = np.array([e.inverse_perm for e in elems], dtype=np.int64).reshape(len(elems), r)
    sg = np.array([e.signs for e in elems], dtype=np.float64).reshape(len(elems), r)
    return elems, inv, sg


_TABLES = {}


def _cached_table(weyl_type, r):
    key = (weyl_type, r)
    if key not in _TABLES:
        _TABLES[key] = group_table(weyl_type, r)
    return _TABLES[key]


# --------------------------------------------------------------------------
# chamber
# --------------------------------------------------------------------------

def chamber_sort(v, weyl_type):
    """``(sorted, w)`` with ``sorted = w . v`` in the closed chamber."""
    v = np.asarray(v, dtype=float)
    out, perm, signs = _kernels.chamber_sort_batch(v[None, :], _kernels.TYPE_CODES[weyl_type])
    w = WeylElement(weyl_type, tuple(int(i) for i in perm[0]), tuple(int(s) for s in signs[0]))
    return out[0], w


def chamber_sort_many(vs, weyl_type):
    """Row-wise chamber representatives (no group elements)."""
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    return _kernels.chamber_sort_batch(vs, _kernels.TYPE_CODES[weyl_type])[0]


def in_chamber(v, weyl_type, tol=0.0):
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return True
    if np.any(v[:-1] - v[1:] < -tol):
        return False
    if weyl_type == "B" and v[-1] < -tol:
        return False
    if weyl_type == "D" and v.size >= 2 and v[-2] - abs(v[-1]) < -tol:
        return False
    return True


@dataclass(frozen=True)
class FaceLabel:
    weyl_type: str
    partition: tuple  # tuple of tuples of 1-based coordinate indices
    zero_class: int | None  # index into partition, or None
    negative_tail: bool = False  # type D: last class sits on the e_{r-1} + e_r wall

    @property
    def regular(self):
        if any(len(c) > 1 for c in self.partition):
            return False
        return not (self.weyl_type == "B" and self.zero_class is not None)

    @property
    def hash(self):
        r = sum(len(c) for c in self.partition)
        sep = "," if r >= 10 else ""
        parts = []
        for k, cls in enumerate(self.partition):
            body = sep.join(str(i) for i in cls)
            if k == self.zero_class:
                body += ":0" if self.weyl_type == "B" else ":±"
            elif self.negative_tail and k == len(self.partition) - 1:
                body += ":-"
            parts.append("{" + body + "}")
        return f"{self.weyl_type}:" + "".join(parts)

    def __str__(self):
        return self.hash


def face_threshold(v, tol):
    return tol * (1.0 + float(np.linalg.norm(v)))


def face_of(v, weyl_type, tol=1e-6):
    """Open face of the closed chamber containing ``v``.

    Coordinates closer than ``tol * (1 + |v|)`` share a class.  For type D the
    last coordinate is compared through its absolute value.
    """
    v = np.asarray(v, dtype=float)
    thr = face_threshold(v, tol)
    if not in_chamber(v, weyl_type, thr):
        raise NotInChamber(f"{v} is not in the closed type-{weyl_type} chamber")
    r = v.size
    key = v.copy()
    if weyl_type == "D" and r:
        key[-1] = abs(key[-1])
    classes = []
    start = 0
    for i in range(1, r + 1):
        if i == r or key[i - 1] - key[i] > thr:
            classes.append(tuple(range(start + 1, i + 1)))
            start = i
    zero_class = None
    negative_tail = False
    if r and weyl_type in ("B", "D") and abs(v[-1]) <= thr:
        zero_class = len(classes) - 1
    elif weyl_type == "D" and r >= 2 and len(classes[-1]) > 1 and v[-1] < 0:
        negative_tail = True
    return FaceLabel(weyl_type, tuple(classes), zero_class, negative_tail)


# --------------------------------------------------------------------------
# jet matching
# --------------------------------------------------------------------------

def _best_signs(pv, pd, nv, nd, beta, weyl_type):
    """Per (slot i, source j) best sign and its cost, plus the cost of the other sign."""
    plus = (nv[None, :] - pv[:, None]) ** 2 + beta * (nd[None, :] - pd[:, None]) ** 2
    if weyl_type == "A":
        return plus, np.ones_like(plus, dtype=np.int64), np.full_like(plus, np.inf)
    minus = (-nv[None, :] - pv[:, None]) ** 2 + beta * (-nd[None, :] - pd[:, None]) ** 2
    use_minus = minus < plus - _TIE_RTOL * (1.0 + plus)
    best = np.where(use_minus, minus, plus)
    other = np.where(use_minus, plus, minus)
    return best, np.where(use_minus, -1, 1), other


def _lex_assignment(cost, target):
    """Lexicographically smallest ``perm`` (source j -> slot perm[j]) of optimal cost."""
    r = cost.shape[0]
    perm = [-1] * r
    free_slots = list(range(r))
    fixed = 0.0
    tol = _TIE_RTOL * (1.0 + abs(target))
    for j in range(r):
        rest_src = list(range(j + 1, r))
        for i in sorted(free_slots):
            slots = [s for s in free_slots if s != i]
            total = fixed + cost[i, j]
            if rest_src:
                sub = cost[np.ix_(slots, rest_src)]
                ri, ci = linear_sum_assignment(sub)
                total += sub[ri, ci].sum()
            if total <= target + tol:
                perm[j] = i
                fixed += cost[i, j]
                free_slots.remove(i)
                break
        else:  # pragma: no cover - target always reachable
            raise RuntimeError("assignment bookkeeping failed")
    return perm


def _match(prev, nxt, weyl_type, beta):
    pv, pd = (np.asarray(a, dtype=float) for a in prev)
    nv, nd = (np.asarray(a, dtype=float) for a in nxt)
    r = pv.size
    if weyl_type == "D" and r >= 2:
        if r <= 6:
            elems, inv, sg = _cached_table("D", r)
            e, cost, ties = _kernels.match_enumerate(pv, pd, nv, nd, beta, inv, sg, _TIE_RTOL)
            return elems[e], cost, ties > 1
        return _match_d_heuristic(pv, pd, nv, nd, beta)
    best, signs, other = _best_signs(pv, pd, nv, nd, beta, "B" if weyl_type == "D" else weyl_type)
    ri, ci = linear_sum_assignment(best)
    target = float(best[ri, ci].sum())
    perm = _lex_assignment(best, target)
    slot_signs = [1] * r
    for j, i in enumerate(perm):
        slot_signs[i] = int(signs[i, j])
    w = WeylElement(weyl_type, tuple(perm), tuple(slot_signs))
    cost = _jet_cost(w, pv, pd, nv, nd, beta)
    tied = _has_tie(best, other, perm, target)
    return w, cost, tied


def _has_tie(best, other, perm, target):
    tol = _TIE_RTOL * (1.0 + abs(target))
    for j, i in enumerate(perm):
        if abs(other[i, j] - best[i, j]) <= tol:
            return True
    # a different permutation of equal cost
    for j, i in enumerate(perm):
        masked = best.copy()
        masked[i, j] = np.inf
        try:
            ri, ci = linear_sum_assignment(masked)
        except ValueError:
            continue
        if masked[ri, ci].sum() <= target + tol:
            return True
    return False


def _match_d_heuristic(pv, pd, nv, nd, beta):
    best, signs, other = _best_signs(pv, pd, nv, nd, beta, "B")
    ri, ci = linear_sum_assignment(best)
    perm = [0] * pv.size
    slot_signs = [1] * pv.size
    for i, j in zip(ri, ci):
        perm[j] = int(i)
        slot_signs[i] = int(signs[i, j])
    if np.prod(slot_signs) < 0:
        extra = [other[i, j] - best[i, j] for j, i in enumerate(perm)]
        j = int(np.argmin(extra))
        slot_signs[perm[j]] *= -1
    w = WeylElement("D", tuple(perm), tuple(slot_signs))
    return w, _jet_cost(w, pv, pd, nv, nd, beta), False


def _jet_cost(w, pv, pd, nv, nd, beta):
    return float(np.sum((apply(w, nv) - pv) ** 2) + beta * np.sum((apply(w, nd) - pd) ** 2))


def match_jet(prev, nxt, weyl_type, beta=1e-3, warn=True):
    """Weyl element ``w`` minimizing the jet mismatch between ``prev`` and ``w . next``.

    ``prev`` and ``nxt`` are ``(value, derivative)`` pairs.  The cost is
    ``|w.v - v_prev|^2 + beta |w.d - d_prev|^2``; ties resolve to the
    lexicographically smallest ``(perm, signs)``.  Returns ``(w, cost)``.
    """
    w, cost, tied = _match(prev, nxt, weyl_type, float(beta))
    if tied and warn:
        warnings.warn(f"jet matching is ambiguous (cost {cost:.3g})", MatchAmbiguous, stacklevel=2)
    return w, cost
