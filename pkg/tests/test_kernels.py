"""The numba kernels and their numpy fallbacks must agree."""
import numpy as np
import pytest

from cartanflow import _kernels as K
from cartanflow import weyl as W

pytestmark = pytest.mark.skipif(not K.JIT_ENABLED, reason="numba not available or disabled")


@pytest.mark.parametrize("code", [K.TYPE_A, K.TYPE_B, K.TYPE_D])
def test_chamber_sort_backends_agree(code):
    rng = np.random.default_rng(code)
    vs = rng.normal(size=(500, 5))
    vs[::7, 1] = vs[::7, 0]  # ties exercise stability
    a = K.chamber_sort_batch(vs, code, use_jit=True)
    b = K.chamber_sort_batch(vs, code, use_jit=False)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@pytest.mark.parametrize("t", ["A", "B", "D"])
def test_weyl_min_backends_agree(t):
    rng = np.random.default_rng(1)
    us, vs = rng.normal(size=(300, 4)), rng.normal(size=(300, 4))
    _, inv, sg = W.group_table(t, 4)
    np.testing.assert_allclose(
        K.weyl_min_batch(us, vs, inv, sg, use_jit=True), K.weyl_min_batch(us, vs, inv, sg, use_jit=False), atol=1e-14
    )


def test_match_enumerate_backends_agree():
    rng = np.random.default_rng(2)
    _, inv, sg = W.group_table("D", 4)
    for _ in range(50):
        args = [rng.normal(size=4) for _ in range(4)]
        a = K.match_enumerate(*args, 0.3, inv, sg, use_jit=True)
        b = K.match_enumerate(*args, 0.3, inv, sg, use_jit=False)
        assert a[0] == b[0] and a[2] == b[2]
        assert a[1] == pytest.approx(b[1], rel=1e-14)


@pytest.mark.parametrize("code", [K.TYPE_A, K.TYPE_B, K.TYPE_D])
def test_root_gaps_backends_agree(code):
    rng = np.random.default_rng(3)
    for _ in range(50):
        c = rng.normal(size=4)
        c[1] = c[0] if rng.uniform() < 0.3 else c[1]
        assert K.root_gaps(c, code, 1e-8, use_jit=True) == pytest.approx(K.root_gaps(c, code, 1e-8, use_jit=False))


def test_root_gaps_values():
    assert K.root_gaps(np.array([2.0, -2.0]), K.TYPE_A, 1e-8) == (4.0, 4.0)
    assert K.root_gaps(np.array([1.0, 1.0, -2.0]), K.TYPE_A, 1e-8) == (3.0, 0.0)
    gap, low = K.root_gaps(np.array([3.0, 0.5]), K.TYPE_B, 1e-8)
    assert (gap, low) == (0.5, 0.5)
    gap, low = K.root_gaps(np.array([3.0, 0.5]), K.TYPE_D, 1e-8)
    assert (gap, low) == (2.5, 2.5)
