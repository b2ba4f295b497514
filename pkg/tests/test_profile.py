import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from helixflow import HelixConfig
from helixflow.profile import (
    ProfileRangeError,
    circle_equation,
    circle_limit_residual,
    continue_profile,
    profile_at,
    second_derivatives,
)
from helixflow.puiseux import denominator, eval_profile_series, expand_profile_series, profile_rhs


def _curve(k, branch=1, **kw):
    return continue_profile(HelixConfig(k=k, branch=branch), expand_profile_series(k), **kw)


def _reference(k, branch, t_end, t0=1e-4):
    """Independent re-integration directly in t with an implicit method."""
    ser = expand_profile_series(k, order=12)
    h0, c0, _ = eval_profile_series(ser, branch * np.sqrt(t0))
    sol = solve_ivp(lambda t, y: profile_rhs(k, t, y[0], y[1]), (t0, t_end), [h0, c0],
                    method="Radau", rtol=1e-12, atol=1e-14)
    return sol.y[:, -1]


@pytest.mark.parametrize("branch", [1, -1])
@pytest.mark.parametrize("k", [0.0, 1.0, 2.0])
def test_against_independent_integration(k, branch):
    curve = _curve(k, branch)
    h_ref, c_ref = _reference(k, branch, 0.01)
    h, c = curve.state(np.array([0.01]))
    assert h[0] == pytest.approx(h_ref, abs=1e-9)
    assert c[0] == pytest.approx(c_ref, abs=1e-9)


@pytest.mark.parametrize("k", [0.0, 0.5, 1.0, 2.0])
def test_series_overlap(k):
    curve = _curve(k)
    t = np.linspace(1e-6, 4e-6, 50)
    h, c = curve.state(t)
    hs, cs, _ = eval_profile_series(curve.series, np.sqrt(t))
    assert np.max(np.abs(h - hs)) < 1e-12
    assert np.max(np.abs(c - cs)) < 1e-12


def test_stop_reasons():
    plus = _curve(1.0, 1, t_max=0.5)
    assert plus.stop_reason == "denominator guard"
    assert plus.t_cap == pytest.approx(0.0905, abs=5e-4)
    minus = _curve(1.0, -1, t_max=0.5)
    assert minus.stop_reason == "reached t_max"
    assert minus.t_cap == 0.5


def test_state_reproduces_nodes_and_derivatives():
    curve = _curve(1.0)
    t, h, c, dh, dc = curve.nodes.T
    hh, cc = curve.state(t)
    np.testing.assert_array_equal(hh, h)
    np.testing.assert_array_equal(cc, c)
    dh2, dc2 = curve.derivatives(t, h, c)
    np.testing.assert_allclose(dh2, dh, rtol=1e-14)
    np.testing.assert_allclose(dc2, dc, rtol=1e-14)


def test_series_used_below_handoff():
    curve = _curve(1.0)
    t = np.array([1e-8, 5e-7])
    h, c = curve.state(t)
    hs, cs, _ = eval_profile_series(curve.series, np.sqrt(t))
    np.testing.assert_array_equal(h, hs)
    dh, dc = curve.derivatives(t, h, c)
    assert np.all(np.isfinite(dh)) and np.all(np.isfinite(dc))


def test_profile_at():
    curve = _curve(1.0)
    h, c, S, dh, dc = profile_at(curve, 0.01)
    assert S == pytest.approx(2 * h * h - 3 * 0.01 * (c + 1), rel=1e-13)
    rh, rc = profile_rhs(1.0, 0.01, h, c)
    assert (dh, dc) == (rh, rc)
    with pytest.raises(ProfileRangeError):
        profile_at(curve, 1.0)
    with pytest.raises(ProfileRangeError):
        profile_at(curve, 1e-9)


def test_second_derivatives_match_finite_differences():
    curve = _curve(1.0)
    t = np.array([0.004, 0.02])
    step = 1e-6
    h, c = curve.state(t)
    dh, dc = curve.derivatives(t, h, c)
    ddh, ddc = second_derivatives(1.0, t, h, c, dh, dc)
    hp, cp = curve.state(t + step)
    hm, cm = curve.state(t - step)
    dhp, dcp = curve.derivatives(t + step, hp, cp)
    dhm, dcm = curve.derivatives(t - step, hm, cm)
    np.testing.assert_allclose(ddh, (dhp - dhm) / (2 * step), rtol=1e-6)
    np.testing.assert_allclose(ddc, (dcp - dcm) / (2 * step), rtol=1e-6)


def test_circle_limit():
    curve = _curve(0.0)
    assert circle_limit_residual(curve, np.geomspace(1e-4, 1e-2, 200)) < 1e-8
    with pytest.raises(ValueError):
        circle_limit_residual(_curve(1.0), [1e-3])


def test_zero_length_and_errors():
    cfg = HelixConfig(k=1.0)
    ser = expand_profile_series(1.0)
    z = continue_profile(cfg, ser, s0=1e-3, t_max=1e-6)
    assert z.t_cap == z.t_start == 1e-6
    assert z.stop_reason == "zero-length"
    with pytest.raises(ValueError, match="sign"):
        continue_profile(cfg, ser, s0=-1e-3)
    with pytest.raises(ValueError, match="below"):
        continue_profile(cfg, ser, t_max=1e-8)
    with pytest.raises(ValueError, match="order"):
        continue_profile(cfg, ser.truncated(3))
    # start exactly where the truncated series crosses h S + 18 k t^2 = 0
    def d_on_series(s):
        h, c, _ = eval_profile_series(ser, s)
        return denominator(1.0, s * s, h, c)

    s_bad = brentq(d_on_series, 0.29, 0.33, xtol=1e-16)
    with pytest.raises(ValueError, match="singularity"):
        continue_profile(cfg, ser, s0=s_bad, t_max=0.2)


def test_overlap_at_s_one_tenth():
    curve = _curve(1.0, t_max=1e-2)
    h, c = curve.state(np.array([1e-2]))
    hs, cs, _ = eval_profile_series(curve.series, 0.1)
    assert abs(h[0] - hs) < 1e-8 and abs(c[0] - cs) < 1e-8


def test_negative_branch_is_distinct():
    plus, minus = _curve(1.0, 1), _curve(1.0, -1)
    t = np.array([1e-6, 4e-6, 1e-4])
    hm, cm = minus.state(t)
    hp, cp = plus.state(t)
    assert np.all(hm < 0)
    np.testing.assert_allclose(cp - cm, 4 * np.sqrt(t), rtol=5e-2)


def test_branches_coincide_up_to_sign_for_circle():
    plus, minus = _curve(0.0, 1), _curve(0.0, -1)
    t = np.geomspace(1e-5, 1e-2, 7)
    hp, cp = plus.state(t)
    hm, cm = minus.state(t)
    np.testing.assert_allclose(hm, -hp, rtol=1e-9)
    np.testing.assert_allclose(cm, cp, rtol=1e-9)


def test_midpoint_matches_reintegration():
    curve = _curve(1.0)
    i = len(curve.nodes) // 2
    t0, h0, c0 = curve.nodes[i, :3]
    t1 = curve.nodes[i + 1, 0]
    tm = 0.5 * (t0 + t1)
    sol = solve_ivp(lambda t, y: profile_rhs(1.0, t, y[0], y[1]), (t0, tm), [h0, c0],
                    method="DOP853", rtol=1e-13, atol=1e-15)
    h, c = curve.state(np.array([tm]))
    assert h[0] == pytest.approx(sol.y[0, -1], abs=1e-11)
    assert c[0] == pytest.approx(sol.y[1, -1], abs=1e-11)


def test_nodes_satisfy_rhs_and_denominator():
    curve = _curve(1.0, 1, t_max=0.5)
    t, h, c, dh, dc = curve.nodes.T
    assert np.all(np.diff(t) > 0)
    assert np.all(denominator(1.0, t, h, c) != 0)
    rh, rc = profile_rhs(1.0, t, h, c)
    np.testing.assert_array_equal(rh, dh)
    np.testing.assert_array_equal(rc, dc)


def test_circle_equation_vanishes_for_constant_c():
    t = np.linspace(0.1, 1, 5)
    assert np.all(circle_equation(t, 2.0 + 0 * t, 0 * t, 0 * t) == 0)
