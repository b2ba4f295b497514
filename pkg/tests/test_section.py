import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from scipy.integrate import quad

from helixflow.puiseux import profile_rhs
from helixflow.section import (
    CrossSectionMap,
    SectionRangeError,
    coefficients_from_profile,
    section_coefficients,
    t_from_y,
    t_min_of,
    y_from_t,
)

from conftest import flow_field

finite = dict(allow_nan=False, allow_infinity=False)


def _poly14(k, x, t, h, c):
    kk = 1 + k * k
    return (x**6 + (k * k - 2 * c) * x**4 + (4 * kk * (k * h - 3 * t) + c * c - 2 * k * k * c) * x**2
            + 4 * kk * (h * k * k - k * c + h) * h + k * k * c * c)


def test_coefficients_at_helix_point(field_plus):
    F, G, S = section_coefficients(1.0, 0.0, field_plus.smap.curve)
    assert (F, G, S) == (0.0, 0.0, 0.0)


@given(st.floats(0.5, 1.5), st.floats(0.0, 3.0))
def test_coefficients_at_t_zero(x, k):
    s = coefficients_from_profile(k, x, 0.0, 0.0, 1.0)
    xk = x * x + k * k
    assert s.F == pytest.approx(xk * (x * x - 1) / (2 * x * (1 + k * k)), rel=1e-12, abs=1e-15)
    assert s.G == pytest.approx(-x * x * s.F**2 / xk, rel=1e-12, abs=1e-15)
    assert s.G <= 0


def test_reference_values_k1(field_plus):
    F, G, _ = section_coefficients(1.0, 0.01, field_plus.smap.curve)
    assert F == pytest.approx(0.0128, abs=5e-5)
    assert G == pytest.approx(0.0086, abs=5e-5)
    # frozen from the construction
    assert F == pytest.approx(0.012797, abs=2e-6)
    assert G == pytest.approx(0.0085938, abs=2e-7)


def test_domain_errors(field_plus):
    with pytest.raises(ValueError):
        section_coefficients(0.0, 0.01, field_plus.smap.curve)
    with pytest.raises(SectionRangeError, match="representable"):
        t_min_of(1.5, field_plus.smap.curve)


@given(st.floats(0.7, 1.3), st.floats(0.0, 3.0), st.floats(-1, 1), st.floats(0.5, 1.5), st.floats(0, 0.1))
def test_linear_ode_for_F_holds_for_any_profile(x, k, h, c, t):
    s = coefficients_from_profile(k, x, t, h, c)
    xk = x * x + k * k
    lhs = s.F_x - (x * x - k * k) / (x * xk) * s.F
    rhs = -2 * k * h / xk + xk / (1 + k * k)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@given(st.floats(0.8, 1.2), st.floats(0.0, 2.0), st.floats(0.01, 0.3), st.floats(0.8, 1.5),
       st.floats(1e-3, 0.05))
def test_pde_for_G_holds_along_profile_system(x, k, h, c, t):
    dh, dc = profile_rhs(k, t, h, c)
    if not (np.isfinite(dh) and np.isfinite(dc)) or max(abs(dh), abs(dc)) > 1e6:
        return
    s = coefficients_from_profile(k, x, t, h, c, dh, dc)
    r = s.G_x + s.F * s.G_t - 2 * s.G * s.F_t
    scale = abs(s.G_x) + abs(s.F * s.G_t) + abs(2 * s.G * s.F_t) + 1e-300
    assert abs(r) / scale < 1e-10


@given(st.floats(0.8, 1.2), st.floats(0.0, 2.0), st.floats(-0.5, 0.5), st.floats(0.5, 1.5),
       st.floats(0.0, 0.1))
def test_sign_of_G_is_reverse_of_boundary_polynomial(x, k, h, c, t):
    s = coefficients_from_profile(k, x, t, h, c)
    p = _poly14(k, x, t, h, c)
    # G = -P / (4 (1 + k^2)^2), so the signs are opposite
    assert s.G == pytest.approx(-p / (4 * (1 + k * k) ** 2), rel=1e-9, abs=1e-13)


def test_boundary_polynomial_factorization_at_origin():
    x, k = sp.symbols("x k")
    assert sp.factor(_poly14(k, x, 0, 0, 1) - (x**2 - 1) ** 2 * (x**2 + k**2)) == 0


@pytest.mark.parametrize("branch", [1, -1])
def test_t_min_asymptotics(branch):
    fld = flow_field(1.0, branch)
    smap = fld.smap
    assert smap.t_min(1.0)[0] == 0.0
    for X in (1e-3, 2e-3, -1e-3, -2e-3):
        tm = smap.t_min(1 + X)[0]
        assert tm == pytest.approx(X * X / 2, rel=5e-3)
        # the remainder is cubic, with a coefficient set by the branch and the side
        coeff = (6 - 16 / 3 * branch * np.sign(X) / np.sqrt(2)) / 16
        assert (tm - X * X / 2) / X**3 == pytest.approx(coeff, rel=2e-2)


@pytest.mark.parametrize("x", [0.93, 0.98, 1.02, 1.08])
def test_t_min_is_a_simple_root(x, field_plus):
    smap = field_plus.smap
    curve = smap.curve
    tm = smap.t_min(x)[0]
    G0 = section_coefficients(x, tm, curve)[1]
    G1 = section_coefficients(x, tm * (1 + 1e-6), curve)[1]
    assert abs(G0) < 1e-15
    assert G1 > 0


def test_y_gauge_monotonicity_and_small_t(field_plus):
    smap = field_plus.smap
    for x in (0.96, 1.0, 1.04):
        tm = smap.t_min(x)[0]
        assert y_from_t(x, tm, smap) == 0.0
        ts = tm + np.geomspace(1e-8, 0.03, 40)
        ys = smap.y_of(np.full_like(ts, x), ts)
        assert np.all(np.diff(ys) > 0)
    for t in (1e-8, 1e-6):
        assert y_from_t(1.0, t, smap) == pytest.approx(np.sqrt(4 * t), rel=2e-3)
    with pytest.raises(SectionRangeError):
        y_from_t(1.05, 1e-5, smap)


def test_y_against_adaptive_quadrature(field_plus):
    smap = field_plus.smap
    curve = smap.curve
    for x, t in ((0.97, 0.01), (1.03, 0.004), (1.0, 0.02)):
        tm = smap.t_min(x)[0]
        g = lambda sig: 2 * sig / np.sqrt(section_coefficients(x, tm + sig * sig, curve)[1])
        ref, _ = quad(g, 0.0, np.sqrt(t - tm), epsabs=1e-14, epsrel=1e-12, limit=200)
        assert y_from_t(x, t, smap) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("branch", [1, -1])
def test_round_trip_and_evenness(branch):
    smap = flow_field(1.0, branch).smap
    rng = np.random.default_rng(3)
    x = 1 + rng.uniform(-0.08, 0.08, 200)
    t = smap.t_min(x) + rng.uniform(0, 0.03, 200)
    y = smap.y_of(x, t)
    np.testing.assert_allclose(smap.t_of(x, y), t, rtol=1e-12, atol=1e-15)
    np.testing.assert_array_equal(smap.t_of(x, y), smap.t_of(x, -y))
    for xv in (0.95, 1.0, 1.05):
        assert t_from_y(xv, 0.0, smap) == smap.t_min(xv)[0]
    with pytest.raises(SectionRangeError):
        t_from_y(1.0, 5.0, smap)


def test_partial_derivatives_of_t(field_plus):
    smap = field_plus.smap
    curve = smap.curve
    step = 1e-5
    for x, y in ((0.97, 0.05), (1.03, -0.02), (1.01, 0.1)):
        t0 = t_from_y(x, y, smap)
        F, G, _ = section_coefficients(x, t0, curve)
        tx = (t_from_y(x + step, y, smap) - t_from_y(x - step, y, smap)) / (2 * step)
        ty = (t_from_y(x, y + step, smap) - t_from_y(x, y - step, smap)) / (2 * step)
        assert tx == pytest.approx(F, rel=1e-6)
        assert ty**2 == pytest.approx(G, rel=1e-6)
        assert np.sign(ty) == np.sign(y)


def test_y_form_is_closed(field_plus):
    smap = field_plus.smap
    curve = smap.curve
    step = 1e-5
    for x, t in ((0.98, 0.01), (1.02, 0.02)):
        dy = (y_from_t(x + step, t, smap) - y_from_t(x - step, t, smap)) / (2 * step)
        F, G, _ = section_coefficients(x, t, curve)
        assert dy == pytest.approx(-F / np.sqrt(G), rel=1e-6)


def test_map_defaults(field_plus):
    smap = CrossSectionMap(field_plus.smap.curve)
    assert smap.x_range == (0.9, 1.1)
    assert smap.contains_x(1.1000000000000001)
    assert not smap.contains_x(1.2)
