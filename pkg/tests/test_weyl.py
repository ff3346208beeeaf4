import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cartanflow import oracles, weyl as W
from cartanflow.errors import MatchAmbiguous, NotInChamber

TYPES = ["A", "B", "D"]


def elements_strategy(weyl_type, r):
    return st.sampled_from(list(W.elements(weyl_type, r)))


vectors = arrays(np.float64, st.integers(1, 6), elements=st.floats(-10, 10, allow_subnormal=False))


def test_chamber_sort_examples():
    s, w = W.chamber_sort([3.0, 2.0, 1.0], "A")
    assert list(s) == [3, 2, 1] and w == W.identity("A", 3)
    s, _ = W.chamber_sort([1.0, 3.0, 2.0], "A")
    assert list(s) == [3, 2, 1]
    # frozen from exhaustive enumeration of the four type-D elements of rank 2
    s, w = W.chamber_sort([-5.0, 1.0], "D")
    assert list(s) == [5, -1]
    assert (w.perm, w.signs) == ((0, 1), (-1, -1))
    chamber = [e for e in W.elements("D", 2) if W.in_chamber(W.apply(e, [-5.0, 1.0]), "D")]
    assert chamber == [w]


@given(v=vectors, t=st.sampled_from(TYPES))
def test_chamber_sort_properties(v, t):
    s, w = W.chamber_sort(v, t)
    assert W.in_chamber(s, t)
    np.testing.assert_array_equal(W.apply(w, v), s)
    s2, w2 = W.chamber_sort(s, t)
    np.testing.assert_array_equal(s2, s)
    assert w2 == W.identity(t, len(v))


def test_in_chamber_examples():
    assert W.in_chamber([0.0, 0.0, 0.0], "A")
    assert not W.in_chamber([1.0, 2.0], "A")
    assert not W.in_chamber([2.0, -1.0], "B")
    assert W.in_chamber([2.0, -1.0], "D")


def test_face_examples():
    f = W.face_of([3.0, 2.0, 1.0], "A")
    assert f.regular and f.hash == "A:{1}{2}{3}"
    f = W.face_of([1.0, 1.0, -2.0], "A")
    assert f.partition == ((1, 2), (3,)) and f.hash == "A:{12}{3}"
    f = W.face_of([2.0, 0.0], "B")
    assert f.partition == ((1,), (2,)) and f.zero_class == 1 and not f.regular
    assert f.hash == "B:{1}{2:0}"
    assert W.face_of([2.0, 0.0], "D").hash == "D:{1}{2:±}"
    assert W.face_of([2.0, 0.0], "D").regular
    assert W.face_of([1.0, -1.0], "D").hash == "D:{12:-}"
    with pytest.raises(NotInChamber):
        W.face_of([1.0, 2.0], "A")


def test_face_uses_commas_from_rank_ten():
    f = W.face_of(np.arange(10, 0, -1, dtype=float), "A")
    assert f.hash.startswith("A:{1}{2}") and "{10}" in f.hash


def test_apply_examples():
    swap = W.WeylElement("A", (1, 0, 2), (1, 1, 1))
    np.testing.assert_array_equal(W.apply(swap, [1.0, 2.0, 3.0]), [2, 1, 3])
    np.testing.assert_array_equal(W.apply(W.identity("B", 2), [4.0, -1.0]), [4, -1])


def test_element_validation():
    with pytest.raises(ValueError):
        W.WeylElement("A", (0, 1), (1, -1))
    with pytest.raises(ValueError):
        W.WeylElement("D", (0, 1), (1, -1))
    with pytest.raises(ValueError):
        W.WeylElement("B", (0, 0), (1, 1))


@pytest.mark.parametrize("t", TYPES)
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_group_orders(t, r):
    elems = list(W.elements(t, r))
    assert len(elems) == len(set(elems)) == W.group_order(t, r)


@pytest.mark.parametrize("t", TYPES)
def test_group_laws(t):
    r = 3
    elems = list(W.elements(t, r))
    rng = np.random.default_rng(0)
    v = rng.normal(size=r)
    for a in elems[::3]:
        np.testing.assert_array_equal(W.apply(a, W.apply(a.inverse(), v)), v)
        assert a * a.inverse() == W.identity(t, r)
        for b in elems[::5]:
            np.testing.assert_allclose(W.apply(a * b, v), W.apply(a, W.apply(b, v)))
            np.testing.assert_allclose(a.matrix() @ v, W.apply(a, v))


@given(t=st.sampled_from(TYPES), seed=st.integers(0, 10**6))
def test_isometry(t, seed):
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=4), rng.normal(size=4)
    w = list(W.elements(t, 4))[seed % W.group_order(t, 4)]
    assert abs(np.linalg.norm(W.apply(w, u) - W.apply(w, v)) - np.linalg.norm(u - v)) <= 1e-12


@pytest.mark.parametrize("t", TYPES)
@pytest.mark.parametrize("r", [1, 2, 5, 8])
def test_nonexpansive_sorting(t, r):
    rng = np.random.default_rng(r)
    us, vs = rng.normal(size=(2000, r)), rng.normal(size=(2000, r))
    d = np.linalg.norm(W.chamber_sort_many(us, t) - W.chamber_sort_many(vs, t), axis=1)
    assert np.all(d <= np.linalg.norm(us - vs, axis=1) + 1e-12)
    if r <= 5:
        np.testing.assert_allclose(d, oracles.brute_force_weyl_min_batch(us, vs, t), atol=1e-12)


def test_match_jet_examples():
    v = np.array([1.0, -1.0])
    w, cost = W.match_jet((v, v), (v, v), "A")
    assert w == W.identity("A", 2) and cost == 0
    nxt = (np.array([1.1, -1.1]), np.array([1.0, -1.0]))
    w, _ = W.match_jet((v, v), nxt, "A")
    assert w == W.identity("A", 2)
    eps = 1e-3
    w, _ = W.match_jet(((eps, -eps), (1.0, -1.0)), ((eps, -eps), (-1.0, 1.0)), "A")
    assert w.perm == (1, 0)


@pytest.mark.parametrize("t", TYPES)
@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_match_jet_optimal(t, r):
    rng = np.random.default_rng(100 * r + len(t))
    for _ in range(30):
        prev = (rng.normal(size=r), rng.normal(size=r))
        nxt = (rng.normal(size=r), rng.normal(size=r))
        beta = float(rng.uniform(1e-3, 1))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MatchAmbiguous)
            _, cost = W.match_jet(prev, nxt, t, beta)
        assert cost == pytest.approx(oracles.brute_force_match(prev, nxt, t, beta), rel=1e-12, abs=1e-14)


def test_match_jet_tie_warns_and_is_lexicographic():
    z = np.zeros(2)
    with pytest.warns(MatchAmbiguous):
        w, _ = W.match_jet((z, z), (z, z), "B")
    assert w == W.identity("B", 2)


def test_match_d_heuristic_parity():
    rng = np.random.default_rng(5)
    r = 7
    for _ in range(10):
        prev = (rng.normal(size=r), rng.normal(size=r))
        nxt = (rng.normal(size=r), rng.normal(size=r))
        w, cost = W.match_jet(prev, nxt, "D", 0.1, warn=False)
        assert np.prod(w.signs) == 1
        v, d = W.apply(w, nxt[0]), W.apply(w, nxt[1])
        ref = np.sum((v - prev[0]) ** 2) + 0.1 * np.sum((d - prev[1]) ** 2)
        assert cost == pytest.approx(ref, rel=1e-12)
        # the identity is always a candidate
        assert cost <= np.sum((nxt[0] - prev[0]) ** 2) + 0.1 * np.sum((nxt[1] - prev[1]) ** 2) + 1e-12
