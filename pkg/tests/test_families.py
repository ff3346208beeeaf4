import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import cartanflow as cf
from cartanflow import families as F
from conftest import FAMILY_NAMES, gen_for


def test_registry_shapes():
    assert cf.real_sym_evd(4).ambient_shape == (4, 4)
    assert cf.real_sym_evd(4).weyl_label == "PermA(4)"
    f = cf.real_svd(3, 2)
    assert (f.ambient_shape, f.a_dim, f.weyl_type) == ((3, 2), 2, "B")
    assert (cf.skew_evd(5).a_dim, cf.skew_evd(5).weyl_type) == (2, "B")
    assert (cf.skew_evd(6).a_dim, cf.skew_evd(6).weyl_type) == (3, "D")
    assert cf.complex_svd(2, 2).scalar_field == "complex"


@pytest.mark.parametrize("name", FAMILY_NAMES)
def test_name_round_trip(name):
    assert cf.parse_family(name).name == name


@pytest.mark.parametrize("name", ["quaternion-evd:2", "takagi:3", "aii:4", "diii:4"])
def test_rejected_families(name):
    with pytest.raises(cf.UnsupportedFamily):
        cf.parse_family(name)


def test_bad_names():
    for bad in ["real-svd:2x3", "herm-evd:0", "nonsense", "real-svd:3"]:
        with pytest.raises(ValueError):
            cf.parse_family(bad)


def test_validate_p_examples():
    assert cf.validate_p(cf.herm_evd(3), np.zeros((3, 3))) == 0.0
    assert cf.validate_p(cf.real_sym_evd(2), np.array([[0.0, 1.0], [-1.0, 0.0]])) == 2.0
    assert cf.validate_p(cf.real_sym_evd(2), np.diag([1.0, -1.0])) == 0.0
    with pytest.raises(cf.ShapeMismatch):
        cf.validate_p(cf.real_sym_evd(2), np.zeros((3, 3)))


def test_embed_examples():
    np.testing.assert_array_equal(cf.embed_a(cf.herm_evd(2), [1, -1]), np.diag([1, -1]))
    np.testing.assert_array_equal(
        cf.embed_a(cf.skew_evd(3), [2.5]), [[0, 2.5, 0], [-2.5, 0, 0], [0, 0, 0]]
    )
    np.testing.assert_array_equal(cf.embed_a(cf.real_svd(3, 2), [2, 1]), [[2, 0], [0, 1], [0, 0]])


def test_project_examples():
    c, r = cf.project_a(cf.herm_evd(2), np.diag([3.0, -3.0]))
    assert list(c) == [3, -3] and r == 0
    c, r = cf.project_a(cf.real_sym_evd(2), np.array([[0.0, 2.0], [2.0, 0.0]]))
    assert list(c) == [0, 0] and r == 2
    c, r = cf.project_a(cf.skew_evd(2), np.array([[0.0, 5.0], [-5.0, 0.0]]))
    assert list(c) == [5] and r == 0


@given(seed=st.integers(0, 2**32 - 1), which=st.sampled_from(FAMILY_NAMES))
def test_embed_project_round_trip(seed, which):
    fam = cf.parse_family(which)
    v = gen_for(fam, seed).a_vector()
    c, r = cf.project_a(fam, cf.embed_a(fam, v))
    assert r == 0.0
    np.testing.assert_array_equal(c, v)


def test_diagonalize_zero(fam):
    u, lam = cf.diagonalize_point(fam, np.zeros(fam.ambient_shape))
    assert np.all(lam == 0)
    assert F.group_residual(fam, u) <= 1e-12


def test_diagonalize_rellich_point():
    t = 0.5
    x = np.exp(-1 / t**2) * np.array([[np.cos(2 / t), np.sin(2 / t)], [np.sin(2 / t), -np.cos(2 / t)]])
    _, lam = cf.diagonalize_point(cf.real_sym_evd(2), x)
    np.testing.assert_allclose(lam, [np.exp(-4), -np.exp(-4)], rtol=0, atol=1e-16)


@pytest.mark.parametrize("profile", ["generic", "clustered(2)"])
def test_diagonalize_reconstructs(fam, profile):
    g = gen_for(fam, 11, profile)
    for _ in range(50):
        x = g.p_element()
        u, lam = cf.diagonalize_point(fam, x)
        back = cf.adjoint_action(fam, u, cf.embed_a(fam, lam))
        assert np.linalg.norm(back - x) <= 1e-8 * (1 + np.linalg.norm(x))
        assert cf.in_chamber(lam, fam.weyl_type, 1e-12)
        assert F.group_residual(fam, u, allow_relaxed=F.is_relaxed(fam, u)) <= 1e-8


def test_relaxed_only_for_square_real_svd(fam):
    g = gen_for(fam, 5)
    for _ in range(20):
        u, _ = cf.diagonalize_point(fam, g.p_element())
        if fam.kind == "real-svd" and fam.p == fam.q:
            continue
        assert not F.is_relaxed(fam, u)
        assert F.group_residual(fam, u) <= 1e-10


def test_skew_even_pfaffian_sign():
    fam = cf.skew_evd(4)
    x = cf.embed_a(fam, [2.0, -1.0])
    _, lam = cf.diagonalize_point(fam, x)
    np.testing.assert_allclose(lam, [2.0, -1.0], atol=1e-14)


def test_orbit_invariance(fam):
    g = gen_for(fam, 3)
    for _ in range(20):
        x, v = g.p_element(), g.k_element()
        _, a = cf.diagonalize_point(fam, x)
        _, b = cf.diagonalize_point(fam, cf.adjoint_action(fam, v, x))
        np.testing.assert_allclose(a, b, atol=1e-8 * (1 + np.linalg.norm(x)))


def test_adjoint_action_is_group_action(fam):
    g = gen_for(fam, 9)
    x, u, v = g.p_element(), g.k_element(), g.k_element()
    lhs = cf.adjoint_action(fam, F.compose_k(fam, u, v), x)
    rhs = cf.adjoint_action(fam, u, cf.adjoint_action(fam, v, x))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    assert cf.validate_p(fam, lhs) <= 1e-12
    np.testing.assert_allclose(cf.adjoint_action(fam, F.identity_k(fam), x), x)


def test_polar_identity_example():
    # iota_1([[a, b], [b, -a]]) = a + ib and rotation by phi acts as e^{2 i phi}
    phi, a, b = 0.3, 0.7, -1.1
    o = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    y = cf.adjoint_action(cf.real_sym_evd(2), o, np.array([[a, b], [b, -a]]))
    assert abs(complex(y[0, 0], y[0, 1]) - np.exp(2j * phi) * complex(a, b)) <= 1e-15


def test_require_p_rejects_asymmetric():
    with pytest.raises(cf.MembershipError):
        cf.diagonalize_point(cf.real_sym_evd(2), np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_joint_diagonalize_nested():
    fam = cf.herm_evd(4)
    g = gen_for(fam, 21)
    v = g.k_element()
    d1, d2 = np.diag([1.0, 1.0, -1.0, -1.0]), np.diag([2.0, -1.0, 0.5, -1.5])
    xs = [v @ d @ v.conj().T for d in (d1, d2)]
    u, (l1, l2) = F.joint_diagonalize(fam, xs)
    np.testing.assert_allclose(l1, [1, 1, -1, -1], atol=1e-12)
    np.testing.assert_allclose(l2, [2, -1, 0.5, -1.5], atol=1e-12)
