import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stringphase import dynamics as dyn
from stringphase import symplectic as sym
from stringphase.worldsheet import graph_surface, plane, sphere, static_string

C0 = sym.Couplings(1.0, 0.0, 0.0)


def wave_pair(sh):
    # shared (k, direction, axis) modes with shifted phases, so omega is nonzero
    w = dyn.transverse_wave
    return (w(sh, 0.3, 1, 1, 2) + w(sh, 0.2, 2, -1, 2) + w(sh, 0.2, 1, 1, 3, 0.5),
            w(sh, 0.3, 1, 1, 2, 0.7) + w(sh, 0.2, 2, -1, 2, 1.1) + w(sh, 0.25, 2, 1, 3))


def test_theta_dng_examples():
    sh = static_string(16)
    assert np.max(np.abs(sym.theta_dng(sh, dyn.zero_deformation(sh)).values)) == 0.0
    th = sym.theta_dng(sh, dyn.translation(sh, [0, 0, 0.7, 0])).values
    assert np.max(np.abs(th)) < 1e-14
    th = sym.theta_dng(sh, dyn.translation(sh, [1.0, 0, 0, 0]), sigma0=2.0).values
    np.testing.assert_allclose(th[..., 0], -2.0, atol=1e-10)


def test_unknown_potential_kind():
    sh = plane(8)
    with pytest.raises(ValueError):
        sym.potential("bogus", sh, dyn.zero_deformation(sh), C0)


def test_rigid_rotation_has_no_topological_potential():
    sh = sphere(32)
    xi = dyn.gauge_rotation(sh, 0.3)
    eng = dyn.VariationEngine(0.25)
    for fn in (sym.psi_top_inner, sym.psi_top_inner_2d):
        assert np.max(np.abs(fn(sh, xi, 1.0, eng).values)) < 1e-12


def test_inner_potentials_agree_on_sphere():
    sh = sphere(64)
    xi = dyn.ambient_smooth(sh, 4, 0.2)
    a = sym.psi_top_inner(sh, xi).values
    b = sym.psi_top_inner_2d(sh, xi).values
    m = sh.region_mask()
    assert np.max(np.abs(a - b)[m]) / np.max(np.abs(a)[m]) < 1e-6


def test_outer_potential():
    sh = plane(16, dim=4, lorentzian=True)
    xi = dyn.compact_bump(sh, amp=0.1, axis=2)
    assert np.max(np.abs(sym.psi_top_outer(sh, xi).values)) < 1e-10
    with pytest.raises(ValueError):
        sym.psi_top_outer(sphere(8), dyn.zero_deformation(sphere(8)))


def test_outer_potential_divergence_matches_varied_omega():
    res = []
    for n in (64, 128):
        sh = graph_surface(n)
        xi = dyn.ambient_smooth(sh, 7, 0.1)
        base = dyn.geometry(sh)
        psi = sym.psi_top_outer(sh, xi).values / base.metric.dens[..., None]
        dOm = dyn.vary(dyn.VariationEngine(), lambda g: g.curvature.Omega * g.metric.dens, sh, xi).value
        res.append(np.max(np.abs(base.div_bar(psi) * base.metric.dens - dOm)))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.3)


def test_current_antisymmetry_and_equal_pair():
    sh = static_string(32)
    x1, x2 = wave_pair(sh)
    j12 = sym.symplectic_current("dng", sh, x1, x2, C0)
    j21 = sym.symplectic_current("dng", sh, x2, x1, C0)
    assert np.array_equal(j12.values, -j21.values)
    assert np.max(np.abs(sym.symplectic_current("dng", sh, x1, x1, C0).values)) == 0.0
    assert np.max(np.abs(j12.values)) > 1e-2


def test_current_bilinearity():
    sh = static_string(32)
    x1, x2 = wave_pair(sh)
    j = sym.symplectic_current("dng", sh, x1, x2, C0)
    j6 = sym.symplectic_current("dng", sh, x1.scaled(2.0), x2.scaled(3.0), C0)
    assert np.max(np.abs(j6.values - 6 * j.values)) <= 2 * (j6.error + 6 * j.error) + 1e-10


def test_non_tangent_pairs_are_rejected():
    sh = static_string(32)
    x1, _ = wave_pair(sh)
    with pytest.raises(dyn.NonTangentDeformationError):
        sym.symplectic_current("dng", sh, x1, dyn.static_bump(sh, 0.2), C0)


def test_conservation_converges_and_negative_control_does_not():
    good, bad = [], []
    for n in (32, 64, 128):
        sh = static_string(n)
        x1, x2 = wave_pair(sh)
        good.append(sym.conservation_check(sym.symplectic_current("dng", sh, x1, x2, C0), sh))
        cur = sym.symplectic_current("dng", sh, x1, dyn.static_bump(sh, 0.2), C0, check_tangent=False)
        bad.append(sym.conservation_check(cur, sh))
    assert good[1] / good[2] == pytest.approx(4.0, rel=0.25)
    assert min(bad) > 0.05
    sh = static_string(16)
    zero = sym.CurrentDensity(np.zeros_like(sh.x), "dng", ("0", "0"))
    assert sym.conservation_check(zero, sh) == 0.0


def test_omega_slice_independence_and_weights():
    sh = static_string(128)
    x1, x2 = wave_pair(sh)
    vals = sym.omega_eval(sh, x1, x2, [32, 96], C0)
    assert abs(vals[0]) > 1e-3
    assert sym.slice_independence(vals) < 1e-3
    assert sym.omega_eval(sh, x1, x1, 32, C0) == 0.0
    dng_only = sym.slice_value(sh, sym.symplectic_current("dng", sh, x1, x2, C0), 32)
    assert sym.omega_eval(sh, x1, x2, 32, sym.Couplings(1.0, 0.0, 0.0)) == dng_only


@settings(max_examples=6)
@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_omega_is_antisymmetric(a, b):
    sh = static_string(24)
    x1, x2 = wave_pair(sh)
    x1, x2 = x1.scaled(a), x2.scaled(b)
    assert sym.omega_eval(sh, x1, x2, 12, C0) == -sym.omega_eval(sh, x2, x1, 12, C0)


def test_slice_independence_floor():
    assert sym.slice_independence([0.0, 0.0]) == 0.0
    assert sym.slice_independence([1.0, 1.001]) == pytest.approx(1e-3, rel=1e-3)


def test_degree_mismatch():
    f = sym.functional_form(dyn.dng_action)
    with pytest.raises(sym.DegreeMismatchError):
        sym.form_eval(f, plane(8), [dyn.zero_deformation(plane(8))])


def test_form_derivative_of_functional_is_vary():
    sh = sphere(32)
    xi = dyn.ambient_smooth(sh, 1, 0.2)
    eng = dyn.VariationEngine()
    d = sym.form_eval(sym.form_derivative(sym.functional_form(dyn.dng_action), eng), sh, [xi])
    assert d == pytest.approx(float(dyn.vary(eng, dyn.dng_action, sh, xi).value), rel=1e-10)


def test_second_derivative_vanishes_within_error():
    sh = sphere(16)
    x1, x2 = dyn.ambient_smooth(sh, 1, 0.2), dyn.ambient_smooth(sh, 2, 0.2)
    v = sym.nilpotency_check(dyn.dng_action, sh, x1, x2)
    assert abs(v.value) <= 2 * v.error


def test_closure_of_theta():
    sh = static_string(16)
    ts = [dyn.ambient_smooth(sh, s, 0.1) for s in (1, 2, 3)]
    v = sym.closure_check(sh, ts, 8)
    assert abs(v.value) <= 3 * v.error


def test_frame_rule_dependence_is_reported():
    sh = sphere(32)
    rep = sym.frame_rule_dependence(sh, dyn.ambient_smooth(sh, 1, 0.2))
    assert set(rep) == {"potential_diff", "potential_scale", "divergence_diff", "alt_rule"}
    assert rep["potential_scale"] > 0
