"""Cross-section geometry in the helical coordinates ``x = rho``, ``y = z - k*phi``.

On the cross-section the stream value ``t`` satisfies ``t_x = F(x, t)`` and
``t_y^2 = G(x, t)`` with

    F = k h / x + (x^2 + k^2)(x^2 - c) / (2 x (1 + k^2))
    G = x^2 (3 t / (1 + k^2) - (F^2 + h^2) / (x^2 + k^2))

and ``h = h(t)``, ``c = c(t)`` the profile pair.  The flow lives where
``G >= 0``, i.e. ``t >= t_min(x)``.  The transverse coordinate is

    y(x, t) = int_{t_min(x)}^{t} dtau / sqrt(G(x, tau)),

evaluated after ``tau = t_min + sigma^2`` so the integrand is bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .profile import ProfileCurve

DEFAULT_HALF_WIDTH = 0.1

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
# below sigma^2 < _SMALL * t the increment of G is integrated from G_t instead
_SMALL = 1e-3
_PANEL_RATIO = 1.25
_PANELS = 64


class SectionRangeError(ValueError):
    """A point lies outside the representable part of the cross-section."""


class SectionState(NamedTuple):
    """Profile data and the ``F, G`` coefficients with their partials at ``(x, t)``."""

    x: np.ndarray
    t: np.ndarray
    h: np.ndarray
    c: np.ndarray
    dh: np.ndarray
    dc: np.ndarray
    F: np.ndarray
    G: np.ndarray
    S: np.ndarray
    F_x: np.ndarray
    F_t: np.ndarray
    G_x: np.ndarray
    G_t: np.ndarray


def coefficients_from_profile(k, x, t, h, c, dh=None, dc=None):
    """``F, G`` and their partials from explicit profile values.

    ``h, c`` need not lie on a solution; this is what the linear-ODE check
    for ``F`` relies on.
    """
    x = np.asarray(x, dtype=float)
    kk = 1 + k * k
    xk = x * x + k * k
    F = k * h / x + xk * (x * x - c) / (2 * x * kk)
    bracket = 3 * t / kk - (F * F + h * h) / xk
    G = x * x * bracket
    S = h * h * kk - 3 * t * (c + k * k)
    F_x = -k * h / (x * x) + (3 * x * x + k * k - c + k * k * c / (x * x)) / (2 * kk)
    G_x = 2 * x * bracket + x * x * (-2 * F * F_x / xk + 2 * x * (F * F + h * h) / (xk * xk))
    if dh is None:
        F_t = G_t = np.full_like(F, np.nan)
    else:
        F_t = k * dh / x - xk * dc / (2 * x * kk)
        G_t = x * x * (3 / kk - 2 * (F * F_t + h * dh) / xk)
    return SectionState(x, t, h, c, dh, dc, F, G, S, F_x, F_t, G_x, G_t)


def section_state(curve: ProfileCurve, x, t) -> SectionState:
    """Evaluate :class:`SectionState` on arrays ``x, t`` (broadcast)."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(x <= 0):
        raise ValueError("x = rho must be positive")
    h, c = curve.state(t)
    dh, dc = curve.derivatives(t, h, c)
    return coefficients_from_profile(curve.k, x, t, h, c, dh, dc)


def section_coefficients(x: float, t: float, curve: ProfileCurve):
    """``(F, G, S)`` at a single point."""
    if x <= 0:
        raise ValueError("x = rho must be positive")
    h, c = curve.state(np.array([t]))
    st = coefficients_from_profile(curve.k, np.array([x]), t, h, c)
    return float(st.F[0]), float(st.G[0]), float(st.S[0])


def _G_of(curve, x, t):
    h, c = curve.state(t)
    return coefficients_from_profile(curve.k, x, t, h, c).G


def _G_t_of(curve, x, t):
    return section_state(curve, x, t).G_t


def _G_ratio(curve, x, t_min, sig):
    """``G(x, t_min + sig^2) / sig^2``, finite as ``sig -> 0``.

    For small ``sig`` the increment of ``G`` is integrated from ``G_t`` by
    two-point Gauss, which avoids cancelling two ``O(t)`` terms.
    """
    x, t_min, sig = np.broadcast_arrays(x, t_min, sig)
    s2 = sig * sig
    t = t_min + s2
    out = np.empty(t.shape)
    # t = 0 only at the helix point (x = 1), where G = 2 t / (1 + k^2) + O(t^(3/2))
    origin = t == 0
    out[origin] = 2 / (1 + curve.k**2)
    small = (s2 < _SMALL * t) & ~origin
    big = ~small & ~origin
    if np.any(big):
        out[big] = _G_of(curve, x[big], t[big]) / s2[big]
    if np.any(small):
        xs, ts, ss = x[small], t_min[small], s2[small]
        acc = 0.0
        for g in _GAUSS2:
            acc = acc + _G_t_of(curve, xs, ts + g * ss)
        out[small] = 0.5 * acc
    return out


def _G_increment(curve, x, t_min, sig):
    """``G(x, t_min + sig^2)`` without cancellation near the boundary."""
    return _G_ratio(curve, x, t_min, sig) * np.asarray(sig) ** 2


def _integrand(curve, x, t_min, sig):
    """``2 sigma / sqrt(G)``, the regularized integrand of ``y``."""
    return 2 / np.sqrt(_G_ratio(curve, x, t_min, sig))


def t_min_of(x: float, curve: ProfileCurve, scan: int = 400) -> float:
    """Lower boundary ``t_min(x)`` of the admissible region ``G >= 0``."""
    return float(t_min_many(np.array([float(x)]), curve, scan)[0])


def t_min_many(x, curve: ProfileCurve, scan: int = 400) -> np.ndarray:
    """Vectorized ``t_min``: scan in ``sigma = sqrt(t)``, then bisect the first sign change.

    The returned ``t_min`` is the upper end of the final bracket, so
    ``G(x, t_min) >= 0`` holds exactly.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("x = rho must be positive")
    out = np.zeros(x.shape)
    G0 = _G_of(curve, x, np.zeros_like(x))
    need = np.flatnonzero(G0 < 0)
    if need.size == 0:
        return out
    xs = x[need]
    sig = np.linspace(0.0, np.sqrt(curve.t_cap), scan + 1)
    G = _G_of(curve, np.repeat(xs, sig.size), np.tile(sig * sig, xs.size)).reshape(xs.size, sig.size)
    cross = (G[:, :-1] < 0) & (G[:, 1:] >= 0)
    found = cross.any(axis=1)
    if not found.all():
        bad = xs[~found][0]
        raise SectionRangeError(f"x={bad}: outside representable neighborhood (no boundary root)")
    j = np.argmax(cross, axis=1)
    lo, hi = sig[j], sig[j + 1]
    eps = np.finfo(float).eps
    for _ in range(200):
        active = np.flatnonzero(hi - lo > 4 * eps * hi)
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        neg = _G_of(curve, xs[active], mid * mid) < 0
        lo[active] = np.where(neg, mid, lo[active])
        hi[active] = np.where(neg, hi[active], mid)
    t_root = hi * hi
    simple = _G_t_of(curve, xs, t_root) > 0
    if not simple.all():
        i = np.flatnonzero(~simple)[0]
        raise SectionRangeError(f"x={xs[i]}: non-simple boundary zero at t={t_root[i]}")
    out[need] = t_root
    return out


@dataclass
class _Table:
    """Cumulative ``y`` at geometric breakpoints in ``sigma`` for one ``x``."""

    x: float
    t_min: float
    breaks: np.ndarray
    y: np.ndarray

    @property
    def y_max(self) -> float:
        return float(self.y[-1])

    @property
    def t_max(self) -> float:
        return self.t_min + float(self.breaks[-1]) ** 2


def _gauss_integral(curve, x, t_min, a, b):
    """Vectorized 20-point Gauss-Legendre integral of the ``y`` integrand on ``[a, b]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    sig = mid[..., None] + half[..., None] * _GL_NODES
    vals = _integrand(curve, np.broadcast_to(np.asarray(x)[..., None], sig.shape),
                      np.broadcast_to(np.asarray(t_min)[..., None], sig.shape), sig)
    return half * (vals @ _GL_WEIGHTS)


def _build_table(curve: ProfileCurve, x: float, t_min: float, t_hi: float) -> _Table:
    sig_max = np.sqrt(max(t_hi - t_min, 0.0))
    if sig_max == 0:
        raise SectionRangeError(f"x={x}: empty t-range above t_min={t_min}")
    breaks = np.concatenate([[0.0], sig_max * _PANEL_RATIO ** np.arange(1 - _PANELS, 1, dtype=float)])
    breaks[-1] = sig_max
    # the admissible strip may close again before t_cap; keep only G > 0
    G = _G_increment(curve, np.full(len(breaks) - 1, x), np.full(len(breaks) - 1, t_min), breaks[1:])
    bad = np.nonzero(~(G > 0))[0]
    if bad.size:
        breaks = breaks[: bad[0] + 1]
        if len(breaks) < 2:
            raise SectionRangeError(f"x={x}: G does not stay positive above t_min")
    pieces = _gauss_integral(curve, np.full(len(breaks) - 1, x), np.full(len(breaks) - 1, t_min),
                             breaks[:-1], breaks[1:])
    y = np.concatenate([[0.0], np.cumsum(pieces)])
    return _Table(x, t_min, breaks, y)


@dataclass(eq=False)
class CrossSectionMap:
    """Coordinate change between ``(x, t)`` and ``(x, y)`` for one profile curve.

    Per-``x`` data (``t_min`` and the cumulative ``y`` table) are built lazily
    and cached; the map is otherwise immutable.
    """

    curve: ProfileCurve
    half_width: float = DEFAULT_HALF_WIDTH
    t_hi: float | None = None
    _tables: dict = field(default_factory=dict, repr=False)
    _t_mins: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.t_hi is None:
            self.t_hi = self.curve.t_cap
        self.t_hi = min(self.t_hi, self.curve.t_cap)

    @property
    def k(self) -> float:
        return self.curve.k

    @property
    def branch(self) -> int:
        return self.curve.branch

    @property
    def x_range(self):
        return (1 - self.half_width, 1 + self.half_width)

    def contains_x(self, x):
        x = np.asarray(x, dtype=float)
        return np.abs(x - 1) <= self.half_width * (1 + 1e-12)

    def table(self, x: float) -> _Table:
        x = float(x)
        tab = self._tables.get(x)
        if tab is None:
            tm = float(self.t_min(x)[0])
            tab = _build_table(self.curve, x, tm, self.t_hi)
            self._tables[x] = tab
        return tab

    def t_min(self, x):
        """``t_min`` at each ``x`` (cached; computed in one batch for new values)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not np.all(self.contains_x(x)):
            bad = x[~self.contains_x(x)].flat[0]
            raise SectionRangeError(f"x={bad} outside [{1 - self.half_width}, {1 + self.half_width}]")
        new = np.array([v for v in np.unique(x) if v not in self._t_mins])
        if new.size:
            self._t_mins.update(zip(new.tolist(), t_min_many(new, self.curve)))
        return np.array([self._t_mins[v] for v in x.ravel().tolist()]).reshape(x.shape)

    # -- (x, t) -> y --------------------------------------------------------
    def _gather(self, x):
        """Per-point ``t_min`` plus the tables of the distinct ``x`` values."""
        uniq, inverse = np.unique(x, return_inverse=True)
        tabs = [self.table(v) for v in uniq]
        inverse = inverse.reshape(x.shape)
        t_min = np.array([tab.t_min for tab in tabs])[inverse]
        return tabs, inverse, t_min

    def y_of(self, x, t):
        """Vectorized ``y(x, t) >= 0``."""
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        tabs, inverse, t_min = self._gather(x)
        if np.any(t < t_min):
            raise SectionRangeError("t below t_min(x)")
        t_top = np.array([tab.t_max for tab in tabs])[inverse]
        if np.any(t > t_top * (1 + 1e-12)):
            raise SectionRangeError("t above the representable range")
        sig = np.sqrt(np.maximum(t - t_min, 0.0))
        a = np.empty(x.shape)
        ya = np.empty(x.shape)
        for i, tab in enumerate(tabs):
            sel = inverse == i
            j = np.clip(np.searchsorted(tab.breaks, sig[sel], side="right") - 1, 0, len(tab.breaks) - 2)
            a[sel] = tab.breaks[j]
            ya[sel] = tab.y[j]
        return ya + _gauss_integral(self.curve, x, t_min, a, np.maximum(sig, a))

    # -- (x, y) -> t --------------------------------------------------------
    def sigma_of(self, x, y):
        """Vectorized ``sigma = sqrt(t - t_min)`` at ``(x, |y|)``."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.abs(np.asarray(y, dtype=float)))
        tabs, inverse, t_min = self._gather(x)
        a, b, ya, yb = (np.empty(x.shape) for _ in range(4))
        for i, tab in enumerate(tabs):
            sel = inverse == i
            yv = y[sel]
            if np.any(yv > tab.y_max):
                raise SectionRangeError(f"|y| beyond {tab.y_max:.6g} at x={tab.x}")
            j = np.clip(np.searchsorted(tab.y, yv, side="right") - 1, 0, len(tab.breaks) - 2)
            a[sel], b[sel] = tab.breaks[j], tab.breaks[j + 1]
            ya[sel], yb[sel] = tab.y[j], tab.y[j + 1]
        target = y - ya
        sig = a + (b - a) * target / (yb - ya)
        tiny = np.finfo(float).tiny
        active = np.arange(sig.size)
        flat = [v.ravel() for v in (x, t_min, a, b, target)]
        sig = sig.ravel()
        for _ in range(30):
            xa, ta, aa, ba, ga = (v[active] for v in flat)
            sa = sig[active]
            resid = _gauss_integral(self.curve, xa, ta, aa, sa) - ga
            slope = _integrand(self.curve, xa, ta, sa)
            new = np.clip(sa - resid / slope, aa, ba)
            moving = np.abs(new - sa) > 4 * np.finfo(float).eps * np.maximum(np.abs(new), tiny)
            sig[active] = new
            active = active[moving]
            if active.size == 0:
                break
        sig = sig.reshape(x.shape)
        return sig

    def t_of(self, x, y):
        """Vectorized ``t(x, y)``, even in ``y``."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        sig = self.sigma_of(x, y)
        return self._gather(x)[2] + sig * sig


def y_from_t(x: float, t: float, curve_or_map) -> float:
    """``y(x, t) >= 0`` measured from the boundary ``t = t_min(x)``."""
    smap = _as_map(curve_or_map)
    tm = smap.table(x).t_min
    if t < tm:
        raise SectionRangeError(f"t={t} below t_min({x})={tm}")
    return float(smap.y_of(np.array([x]), np.array([t]))[0])


def t_from_y(x: float, y: float, curve_or_map) -> float:
    """Inverse of :func:`y_from_t` in ``|y|``; ``t(x, y) = t(x, -y)``."""
    smap = _as_map(curve_or_map)
    return float(smap.t_of(np.array([x]), np.array([y]))[0])


def _as_map(obj) -> CrossSectionMap:
    return obj if isinstance(obj, CrossSectionMap) else CrossSectionMap(obj)
