"""Inner loops over Weyl group elements and root systems.

Every kernel exists twice: a loop version compiled with numba and a
vectorized numpy version.  ``backend()`` reports which one the public
wrappers dispatch to; both are importable for testing and benchmarking.

Weyl types are passed as integer codes: 0 = A (permutations),
1 = B (signed permutations), 2 = D (signed permutations, even sign count).
"""
import numpy as np

from ._jit import JIT_ENABLED, njit

TYPE_A, TYPE_B, TYPE_D = 0, 1, 2
TYPE_CODES = {"A": TYPE_A, "B": TYPE_B, "D": TYPE_D}


def backend():
    return "numba" if JIT_ENABLED else "numpy"


# --------------------------------------------------------------------------
# chamber sorting
# --------------------------------------------------------------------------

@njit
def _chamber_sort_jit(vs, code):
    n, r = vs.shape
    out = np.empty((n, r))
    perm = np.empty((n, r), dtype=np.int64)
    signs = np.ones((n, r), dtype=np.int64)
    key = np.empty(r)
    order = np.empty(r, dtype=np.int64)
    for k in range(n):
        v = vs[k]
        for i in range(r):
            key[i] = v[i] if code == TYPE_A else abs(v[i])
            order[i] = i
        # stable insertion sort, descending by key
        for i in range(1, r):
            j = i
            while j > 0 and key[order[j - 1]] < key[order[j]]:
                tmp = order[j - 1]
                order[j - 1] = order[j]
                order[j] = tmp
                j -= 1
        parity = 1
        for i in range(r):
            src = order[i]
            perm[k, src] = i
            if code != TYPE_A and v[src] < 0.0:
                signs[k, i] = -1
                parity = -parity
        if code == TYPE_D and parity < 0 and r > 0:
            signs[k, r - 1] = -signs[k, r - 1]
        for i in range(r):
            out[k, i] = signs[k, i] * v[order[i]]
    return out, perm, signs


def _chamber_sort_np(vs, code):
    vs = np.asarray(vs, dtype=float)
    n, r = vs.shape
    key = vs if code == TYPE_A else np.abs(vs)
    order = np.argsort(-key, axis=1, kind="stable")
    rows = np.arange(n)[:, None]
    gathered = vs[rows, order]
    signs = np.ones((n, r), dtype=np.int64)
    if code != TYPE_A:
        signs[gathered < 0] = -1
    if code == TYPE_D and r > 0:
        odd = np.prod(signs, axis=1) < 0
        signs[odd, r - 1] *= -1
    perm = np.empty_like(order)
    perm[rows, order] = np.arange(r)[None, :]
    return signs * gathered, perm, signs


def chamber_sort_batch(vs, code, use_jit=None):
    """Sort each row of ``vs`` into the closed chamber of the given type.

    Returns ``(sorted, perm, signs)`` with ``sorted[k, perm[k, j]] ==
    signs[k, perm[k, j]] * vs[k, j]``.
    """
    vs = np.ascontiguousarray(vs, dtype=float)
    if use_jit is None:
        use_jit = JIT_ENABLED
    if use_jit:
        return _chamber_sort_jit(vs, code)
    return _chamber_sort_np(vs, code)


# --------------------------------------------------------------------------
# exhaustive minimum over a tabulated group
# --------------------------------------------------------------------------

@njit
def _weyl_min_jit(us, vs, invperm, signs):
    n, r = us.shape
    g = invperm.shape[0]
    out = np.empty(n)
    for k in range(n):
        best = np.inf
        for e in range(g):
            acc = 0.0
            for i in range(r):
                d = us[k, i] - signs[e, i] * vs[k, invperm[e, i]]
                acc += d * d
                if acc >= best:
                    break
            if acc < best:
                best = acc
        out[k] = np.sqrt(best)
    return out


def _weyl_min_np(us, vs, invperm, signs, chunk=256):
    n = us.shape[0]
    out = np.empty(n)
    for start in range(0, n, chunk):
        u = us[start:start + chunk]
        v = vs[start:start + chunk]
        # (chunk, G, r)
        wv = signs[None, :, :] * v[:, invperm]
        d2 = np.sum((u[:, None, :] - wv) ** 2, axis=2)
        out[start:start + chunk] = np.sqrt(d2.min(axis=1))
    return out


def weyl_min_batch(us, vs, invperm, signs, use_jit=None):
    """Row-wise ``min_w ||u - w v||`` over the group given as a table."""
    us = np.ascontiguousarray(us, dtype=float)
    vs = np.ascontiguousarray(vs, dtype=float)
    invperm = np.ascontiguousarray(invperm, dtype=np.int64)
    signs = np.ascontiguousarray(signs, dtype=np.float64)
    if use_jit is None:
        use_jit = JIT_ENABLED
    if use_jit:
        return _weyl_min_jit(us, vs, invperm, signs)
    return _weyl_min_np(us, vs, invperm, signs)


# --------------------------------------------------------------------------
# jet matching by enumeration (used for type D, where the sign-parity
# constraint breaks the assignment structure)
# --------------------------------------------------------------------------

@njit
def _match_enum_jit(pv, pd, nv, nd, beta, invperm, signs, rtol):
    g, r = invperm.shape
    best = np.inf
    best_e = -1
    costs = np.empty(g)
    for e in range(g):
        acc = 0.0
        for i in range(r):
            j = invperm[e, i]
            s = signs[e, i]
            dv = s * nv[j] - pv[i]
            dd = s * nd[j] - pd[i]
            acc += dv * dv + beta * dd * dd
        costs[e] = acc
        if acc < best:
            best = acc
            best_e = e
    ties = 0
    for e in range(g):
        if costs[e] <= best + rtol * (1.0 + best):
            ties += 1
    return best_e, best, ties


def _match_enum_np(pv, pd, nv, nd, beta, invperm, signs, rtol):
    wv = signs * nv[invperm]
    wd = signs * nd[invperm]
    costs = np.sum((wv - pv) ** 2, axis=1) + beta * np.sum((wd - pd) ** 2, axis=1)
    best_e = int(np.argmin(costs))
    best = float(costs[best_e])
    ties = int(np.count_nonzero(costs <= best + rtol * (1.0 + best)))
    return best_e, best, ties


def match_enumerate(pv, pd, nv, nd, beta, invperm, signs, rtol=1e-12, use_jit=None):
    """Index of the first table element minimizing the jet-matching cost.

    Returns ``(index, cost, number_of_elements_within_rtol)``.
    """
    args = [np.ascontiguousarray(a, dtype=float) for a in (pv, pd, nv, nd)]
    invperm = np.ascontiguousarray(invperm, dtype=np.int64)
    signs = np.ascontiguousarray(signs, dtype=np.float64)
    if use_jit is None:
        use_jit = JIT_ENABLED
    if use_jit:
        e, c, t = _match_enum_jit(*args, float(beta), invperm, signs, float(rtol))
        return int(e), float(c), int(t)
    return _match_enum_np(*args, float(beta), invperm, signs, float(rtol))


# --------------------------------------------------------------------------
# root values
# --------------------------------------------------------------------------

@njit
def _root_gaps_jit(c, code, thr):
    r = c.shape[0]
    gap = np.inf
    low = np.inf
    for i in range(r):
        if code != TYPE_A:
            if code == TYPE_B:
                a = abs(c[i])
                low = min(low, a)
                if a > thr:
                    gap = min(gap, a)
        for j in range(i + 1, r):
            a = abs(c[i] - c[j])
            low = min(low, a)
            if a > thr:
                gap = min(gap, a)
            if code != TYPE_A:
                a = abs(c[i] + c[j])
                low = min(low, a)
                if a > thr:
                    gap = min(gap, a)
    return gap, low


def _root_gaps_np(c, code, thr):
    c = np.asarray(c, dtype=float)
    r = c.shape[0]
    iu = np.triu_indices(r, 1)
    parts = [np.abs(c[:, None] - c[None, :])[iu]]
    if code != TYPE_A:
        parts.append(np.abs(c[:, None] + c[None, :])[iu])
    if code == TYPE_B:
        parts.append(np.abs(c))
    vals = np.concatenate(parts)
    if vals.size == 0:
        return np.inf, np.inf
    big = vals[vals > thr]
    return (float(big.min()) if big.size else np.inf), float(vals.min())


def root_gaps(coords, code, thr, use_jit=None):
    """``(smallest root value above thr, smallest root value)``.

    Either entry is ``inf`` when no root qualifies.
    """
    coords = np.ascontiguousarray(coords, dtype=float)
    if use_jit is None:
        use_jit = JIT_ENABLED
    if use_jit:
        g, low = _root_gaps_jit(coords, code, float(thr))
        return float(g), float(low)
    return _root_gaps_np(coords, code, float(thr))
