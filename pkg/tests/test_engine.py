import warnings

import numpy as np
import pytest

import cartanflow as cf
from cartanflow import engine as E
from cartanflow import oracles as O
from cartanflow import weyl as W
from cartanflow.families import k_to_ambient
from cartanflow.paths import constant_path, restrict, trigpoly
from conftest import fro, gen_for


def diag_path(domain=(-1.0, 1.0)):
    return cf.builtin("chamber-cross", domain)


def reconstruction_errors(spec, out):
    fam = spec.family
    errs = []
    for t, u, lam in zip(out.times, out.U, out.lambda_lift):
        rho = spec.value(t)
        errs.append(fro(cf.adjoint_action(fam, u, cf.embed_a(fam, lam)) - rho) / (1 + fro(rho)))
    return np.array(errs)


# sorted_curve ---------------------------------------------------------------

def test_sorted_curve_constant(fam):
    c = gen_for(fam, 1).p_element()
    out = cf.sorted_curve(constant_path(fam, c), (0, 1, 9))
    assert np.all(out.lambda_sorted == out.lambda_sorted[0])
    assert len({f.hash for f in out.face}) == 1


def test_sorted_curve_rellich():
    out = cf.sorted_curve(cf.builtin("rellich"), (-1, 1, 2001))
    t = out.times
    e = np.exp(-1.0 / np.where(t == 0, 1.0, t) ** 2) * (t != 0)
    assert np.max(np.abs(out.lambda_sorted - np.stack([e, -e], axis=1))) <= 1e-12


def test_sorted_curve_parallel_matches_serial():
    fam = cf.parse_family("skew-evd:4")
    s = gen_for(fam, 4).trigpoly(2)
    a = E.sorted_curve(s, (0, 1, 50), workers=1)
    b = E.sorted_curve(s, (0, 1, 50), workers=4)
    np.testing.assert_array_equal(a.lambda_sorted, b.lambda_sorted)


def test_sorted_curve_nonexpansive(fam):
    s = gen_for(fam, 9).trigpoly(2)
    ts = np.linspace(0, 1, 201)
    out = cf.sorted_curve(s, ts)
    xs = s.values(ts)
    num = np.linalg.norm(np.diff(out.lambda_sorted, axis=0), axis=1)
    den = np.array([fro(xs[i + 1] - xs[i]) for i in range(ts.size - 1)])
    assert np.max(num / den) <= 1 + 1e-8


def test_sorted_curve_grid_errors():
    with pytest.raises(cf.OutOfDomain):
        cf.sorted_curve(cf.builtin("rellich"), (-2, 1, 10))
    with pytest.raises(ValueError):
        cf.sorted_curve(cf.builtin("rellich"), (0, 1, 1))


# pointwise_derivative -------------------------------------------------------

def test_pointwise_derivative_constant(fam):
    c = gen_for(fam, 2).p_element()
    _, mu, _ = cf.pointwise_derivative(constant_path(fam, c), 0.5)
    assert np.all(np.abs(mu) <= 1e-14)


def test_pointwise_derivative_diag_at_crossing():
    lam, mu, _ = cf.pointwise_derivative(diag_path(), 0.0)
    np.testing.assert_allclose(lam, [0, 0], atol=1e-15)
    assert sorted(mu) == pytest.approx([-1, 1], abs=1e-14)


def test_pointwise_derivative_matches_finite_differences(fam):
    g = gen_for(fam, 11)
    s = g.regular_trigpoly()
    t, h = 0.41, 1e-4
    lam, mu, _ = cf.pointwise_derivative(s, t)
    lo, _ = cf.chamber_sort(O.sorted_coordinates(fam, s.value(t - h)), fam.weyl_type)
    hi, _ = cf.chamber_sort(O.sorted_coordinates(fam, s.value(t + h)), fam.weyl_type)
    srt, w = cf.chamber_sort(lam, fam.weyl_type)
    np.testing.assert_allclose(cf.apply(w, mu), (hi - lo) / (2 * h), atol=1e-6)


def test_commutator_check_is_scaled():
    # the pair (rho, Pi_rho rho') commutes; the check must not fire at rellich's flat point
    cf.pointwise_derivative(cf.builtin("rellich"), 0.1)


# c1_lift --------------------------------------------------------------------

def test_c1_lift_diag_crossing():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", cf.MatchAmbiguous)
        out = cf.c1_lift(diag_path(), (-1, 1, 201))
    t = out.times
    np.testing.assert_allclose(out.lambda_sorted, np.stack([np.abs(t), -np.abs(t)], 1), atol=1e-14)
    lift = out.lambda_lift
    ref = np.stack([t, -t], 1)
    assert min(np.max(np.abs(lift - ref)), np.max(np.abs(lift + ref))) <= 1e-10
    assert np.max(E.derivative_jumps(t, lift)) <= 1e-10
    assert np.max(E.derivative_jumps(t, out.lambda_sorted)) == pytest.approx(200 * 0.01, rel=1e-6)


def test_c1_lift_constant(fam):
    c = gen_for(fam, 3).p_element()
    out = cf.c1_lift(constant_path(fam, c), (0, 1, 11))
    assert np.all(out.lambda_lift == out.lambda_lift[0])


def test_c1_lift_chamber_consistency(fam):
    s = gen_for(fam, 5).trigpoly(2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", cf.MatchAmbiguous)
        out = cf.c1_lift(s, (0, 1, 101))
    for lift, srt in zip(out.lambda_lift, out.lambda_sorted):
        np.testing.assert_array_equal(cf.chamber_sort(lift, fam.weyl_type)[0], srt)


def test_c1_lift_engineered_crossing():
    fam = cf.herm_evd(4)
    spec, tc = O.InstanceGenerator(fam, 1, "crossing-engineered").crossing_trigpoly()
    n = 2001
    h = 2.0 / (n - 1)
    out = cf.c1_lift(spec, (-1, 1, n))
    near = np.abs(out.times[1:-1] - tc) <= 3 * h
    lift_jump = np.max(E.derivative_jumps(out.times, out.lambda_lift)[near])
    sort_jump = np.max(E.derivative_jumps(out.times, out.lambda_sorted)[near])
    assert lift_jump <= 10 * h
    assert sort_jump >= 100 * h


# analytic_flow --------------------------------------------------------------

def test_flow_constant_regular_path(fam):
    c = cf.embed_a(fam, gen_for(fam, 4).a_vector())
    out = cf.analytic_flow(constant_path(fam, c), (0, 1, 11))
    assert all(fro(k) == 0 for k in out.info["k"])
    u0 = k_to_ambient(fam, out.U[0])
    for u in out.U:
        assert fro(k_to_ambient(fam, u) - u0) <= 1e-15


def test_flow_rotation_closed_form():
    spec = cf.builtin("rotation-flow")
    out = cf.analytic_flow(spec, (0, 1, 1001))
    assert np.max(out.residual_offdiag) <= 1e-10
    assert np.max(np.abs(out.lambda_lift - out.lambda_lift[0])) <= 1e-10
    u0 = out.U[0]
    for t, u in zip(out.times[::100], out.U[::100]):
        r = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        np.testing.assert_allclose(u, r @ u0, atol=1e-8)


def test_flow_rellich():
    spec = cf.builtin("rellich")
    with pytest.raises(cf.NearSingularPoint) as err:
        cf.analytic_flow(spec, (-1, 1, 401))
    assert abs(err.value.t) < 0.5
    out = cf.analytic_flow(restrict(spec, (0.3, 1.0)), (0.3, 1, 701))
    assert np.max(out.residual_offdiag) <= 1e-6
    with pytest.raises(cf.NearSingularPoint) as err:
        cf.analytic_flow(restrict(spec, (0.05, 1.0)), (0.05, 1, 951), gap_min=1e-12)
    # the sweep starts inside the collapsed-gap region, so it stops at once
    assert err.value.t == pytest.approx(0.05)


def test_flow_invariants(fam):
    s = gen_for(fam, 21).regular_trigpoly()
    n = 401
    out = cf.analytic_flow(s, (0, 1, n))
    h = 1.0 / (n - 1)
    assert np.max(out.residual_offdiag) <= 1e-6
    assert np.max(out.residual_group) <= 1e-8
    assert np.max(reconstruction_errors(s, out)) <= 1e-6
    for lift, srt in zip(out.lambda_lift, out.lambda_sorted):
        np.testing.assert_array_equal(cf.chamber_sort(lift, fam.weyl_type)[0], srt)
    # product rule: rho' = Ad_U(mu) + [k, rho] up to the O(h) difference quotient error
    xs = s.values(out.times)
    for i in range(1, n - 1, 40):
        fd = (xs[i + 1] - xs[i - 1]) / (2 * h)
        rhs = cf.adjoint_action(fam, out.U[i], cf.embed_a(fam, out.mu[i])) + cf.bracket_kp(fam, out.info["k"][i], xs[i])
        assert fro(fd - rhs) <= h * (1 + fro(s.derivative(out.times[i])))


def _permuted_start(fam, u0):
    """Another valid U(0): U0 times a signed permutation in the group."""
    n = fam.n
    p = np.eye(n)[:, ::-1]
    if np.linalg.det(p) < 0:
        p[:, 0] *= -1
    return u0 @ p


@pytest.mark.parametrize("name", ["real-sym-evd:3", "herm-evd:3"])
def test_flow_weyl_uniqueness(name):
    fam = cf.parse_family(name)
    s = gen_for(fam, 13).regular_trigpoly()
    a = cf.analytic_flow(s, (0, 1, 201))
    b = cf.analytic_flow(s, (0, 1, 201), U0=_permuted_start(fam, a.U[0]))
    candidates = [w for w in W.elements(fam.weyl_type, fam.a_dim)
                  if np.max(np.abs(W.apply(w, a.lambda_lift[0]) - b.lambda_lift[0])) <= 1e-8]
    assert len(candidates) == 1
    w = candidates[0]
    assert w != W.identity(fam.weyl_type, fam.a_dim)
    err = max(np.max(np.abs(W.apply(w, la) - lb)) for la, lb in zip(a.lambda_lift, b.lambda_lift))
    assert err <= 1e-8


def test_flow_rejects_bad_start():
    fam = cf.real_sym_evd(2)
    with pytest.raises(ValueError):
        cf.analytic_flow(cf.builtin("rotation-flow"), (0, 1, 11), U0=np.array([[np.cos(1), -np.sin(1)], [np.sin(1), np.cos(1)]]))
    del fam


# simultaneous_diagonalize ---------------------------------------------------

def test_simultaneous_single_matches_pointwise(fam):
    x = gen_for(fam, 7).p_element()
    u, (lam,) = cf.simultaneous_diagonalize(fam, [x])
    u2, lam2 = cf.diagonalize_point(fam, x)
    np.testing.assert_allclose(lam, lam2, atol=1e-12)
    assert max(E.offpattern_residuals(fam, u, [x])) <= 1e-10


def test_simultaneous_with_zero(fam):
    x = gen_for(fam, 8).p_element()
    u, (lam, zero) = cf.simultaneous_diagonalize(fam, [x, 0 * x])
    _, ref = cf.diagonalize_point(fam, x)
    np.testing.assert_allclose(lam, ref, atol=1e-12)
    assert np.all(zero == 0)


def test_simultaneous_constructed_pair():
    fam = cf.herm_evd(5)
    for seed in range(5):
        g = gen_for(fam, seed)
        v = g.k_element()
        d1, d2 = cf.embed_a(fam, g.a_vector()), cf.embed_a(fam, g.a_vector())
        xs = [cf.adjoint_action(fam, v, d1), cf.adjoint_action(fam, v, d2)]
        u, _ = cf.simultaneous_diagonalize(fam, xs)
        assert max(E.offpattern_residuals(fam, u, xs)) <= 1e-8


def test_simultaneous_degenerate_first_element():
    fam = cf.herm_evd(4)
    g = gen_for(fam, 3)
    v = g.k_element()
    d1 = cf.embed_a(fam, np.array([1.0, 1.0, -1.0, -1.0]))
    d2 = cf.embed_a(fam, np.array([0.5, -0.5, 2.0, -2.0]))
    xs = [cf.adjoint_action(fam, v, d1), cf.adjoint_action(fam, v, d2)]
    u, (l1, l2) = cf.simultaneous_diagonalize(fam, xs)
    np.testing.assert_allclose(l1, [1, 1, -1, -1], atol=1e-12)
    np.testing.assert_allclose(l2, [0.5, -0.5, 2, -2], atol=1e-12)


def test_simultaneous_rejects_noncommuting():
    fam = cf.real_sym_evd(2)
    with pytest.raises(cf.NotCommuting):
        cf.simultaneous_diagonalize(fam, [np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])])


# measurable_curve -----------------------------------------------------------

def test_measurable_constant():
    fam = cf.real_sym_evd(3)
    out = cf.measurable_curve(constant_path(fam, np.diag([1.0, 0.0, -1.0])), (0, 1, 5))
    assert np.all(out.lambda_sorted == out.lambda_sorted[0])
    assert len({f.hash for f in out.face}) == 1


def test_measurable_chamber_cross_face_switch():
    out = cf.measurable_curve(diag_path(), (-1, 1, 101))
    degenerate = [i for i, f in enumerate(out.face) if not f.regular]
    assert degenerate == [50]


def test_measurable_ae_match(fam):
    s = gen_for(fam, 17).trigpoly(2)
    out = cf.measurable_curve(s, (0, 1, 1001))
    assert out.info["ae_match"] >= 0.99
    for t, u, lam in zip(out.times[::100], out.U[::100], out.lambda_sorted[::100]):
        rho = s.value(t)
        assert fro(cf.adjoint_action(fam, u, cf.embed_a(fam, lam)) - rho) <= 1e-8 * (1 + fro(rho))


# resolvent_crosscheck -------------------------------------------------------

def test_resolvent_constant():
    fam = cf.real_sym_evd(3)
    assert E.resolvent_crosscheck(constant_path(fam, np.diag([2.0, 0.0, -2.0])), 0.5) == 0


def test_resolvent_rotation():
    assert E.resolvent_crosscheck(cf.builtin("rotation-flow"), 1.0, 1e-5) <= 1e-7


def test_resolvent_second_order():
    fam = cf.herm_evd(3)
    s = gen_for(fam, 2).regular_trigpoly()
    e1 = E.resolvent_crosscheck(s, 0.37, 1e-3)
    e2 = E.resolvent_crosscheck(s, 0.37, 5e-4)
    assert 3.5 <= e1 / e2 <= 4.5


def test_resolvent_singular():
    with pytest.raises(cf.NearSingularPoint):
        E.resolvent_crosscheck(diag_path(), 0.0)


def test_trigpoly_with_sin_terms():
    fam = cf.real_sym_evd(2)
    s = trigpoly(fam, np.diag([3.0, -3.0]), sin=[np.array([[0.0, 1.0], [1.0, 0.0]])])
    lam, mu, _ = cf.pointwise_derivative(s, 0.0)
    assert sorted(lam) == pytest.approx([-3, 3])
    np.testing.assert_allclose(mu, 0, atol=1e-14)
