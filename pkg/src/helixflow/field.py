"""Point evaluators for the helical flow and its modifications.

Velocities are returned in the cylindrical frame ``(e_rho, e_z, e_phi)``
with ``e_phi = (1/rho) d/dphi``.  All fields depend on ``(rho, phi, z)``
only through ``x = rho`` and ``y = z - k*phi`` (taken modulo ``2*pi*k``,
i.e. relative to the nearest turn of the helix).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .config import HelixConfig
from .profile import DEFAULT_T_MAX, continue_profile
from .puiseux import DEFAULT_ORDER, expand_profile_series
from .section import DEFAULT_HALF_WIDTH, CrossSectionMap, SectionRangeError, coefficients_from_profile, _G_increment

DEFAULT_T_FLOOR = 1e-6
# cache key resolution for (x, y) de-duplication
_KEY_DIGITS = 14


@dataclass(frozen=True)
class FlowSample:
    rho: float
    phi: float
    z: float
    u_rho: float
    u_z: float
    u_phi: float
    p: float
    t: float
    in_support: bool = True


@dataclass(frozen=True)
class BeltramiSample:
    u_rho: float
    u_z: float
    u_phi: float
    p: float
    lam: float
    psi: float
    chi: float
    t: float


@dataclass
class FieldArrays:
    """Column-wise samples of a field on an arbitrary point set."""

    rho: np.ndarray
    phi: np.ndarray
    z: np.ndarray
    u_rho: np.ndarray
    u_z: np.ndarray
    u_phi: np.ndarray
    p: np.ndarray
    t: np.ndarray
    in_support: np.ndarray

    def __len__(self):
        return self.rho.size

    def sample(self, i) -> FlowSample:
        return FlowSample(*(float(getattr(self, n).flat[i]) for n in
                            ("rho", "phi", "z", "u_rho", "u_z", "u_phi", "p", "t")),
                          in_support=bool(self.in_support.flat[i]))

    @property
    def speed2(self):
        return self.u_rho**2 + self.u_z**2 + self.u_phi**2


def helical_coordinates(k, rho, phi, z):
    """``(x, y)`` with ``y`` reduced to ``(-pi k, pi k]`` when ``k > 0``."""
    x = np.asarray(rho, dtype=float)
    y = np.asarray(z, dtype=float) - k * np.asarray(phi, dtype=float)
    if k > 0:
        period = 2 * np.pi * k
        y = y - period * np.round(y / period)
    return x, y


class _RawEvaluator:
    """Raw-flow quantities on the cross-section, cached by ``(x, y)``."""

    def __init__(self, smap: CrossSectionMap):
        self.smap = smap

    def at(self, x, y):
        """Dictionary of raw quantities at unique-ified ``(x, y)`` points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ky = np.round(y, _KEY_DIGITS)
        keys = np.stack([x.ravel(), ky.ravel()], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        vals = self._evaluate(uniq[:, 0], uniq[:, 1])
        inverse = inverse.ravel()
        return {name: v[inverse].reshape(x.shape) for name, v in vals.items()}

    def _evaluate(self, x, y):
        smap = self.smap
        k = smap.k
        sig = smap.sigma_of(x, y)
        t_min = smap.t_min(x)
        t = t_min + sig * sig
        h, c = smap.curve.state(t)
        # dh/dt ~ t^(-1/2) is singular on the helix itself; velocity does not use it
        with np.errstate(invalid="ignore", divide="ignore"):
            dh, dc = smap.curve.derivatives(t, h, c)
            st = coefficients_from_profile(k, x, t, h, c, dh, dc)
        G = _G_increment(smap.curve, x, t_min, sig)
        ty = np.sign(y) * np.sqrt(np.maximum(G, 0.0))
        xk = x * x + k * k
        return {
            "t": t,
            "h": h,
            "dh": dh,
            "F": st.F,
            "G": G,
            "t_y": ty,
            "u_rho": ty / x,
            "u_z": (k * h - x * st.F) / xk,
            "u_phi": (x * h + k * st.F) / xk,
            "p": t / (1 + k * k),
        }


@dataclass(eq=False)
class CutoffSpec:
    """Bump ``omega(t)`` supported in ``[eps, 2 eps]`` and the pressure it induces.

    ``omega = exp(4 - 1/u - 1/(1-u))`` with ``u = (t - eps)/eps``, so the peak
    value at ``t = 1.5 eps`` is 1.  ``p_tilde(t) = int_0^t omega^2 / (1 + k^2)``.
    """

    eps: float
    k: float
    knots: int = 4001
    _P: object = field(default=None, repr=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        u = np.linspace(0.0, 1.0, self.knots)
        nodes, weights = np.polynomial.legendre.leggauss(20)
        a, b = u[:-1], u[1:]
        pts = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * nodes
        pieces = 0.5 * (b - a) * (_bump(pts) ** 2 @ weights)
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        self._P = CubicHermiteSpline(u, cum, _bump(u) ** 2)

    def omega(self, t):
        return _bump((np.asarray(t, dtype=float) - self.eps) / self.eps)

    def p_tilde(self, t):
        u = np.clip((np.asarray(t, dtype=float) - self.eps) / self.eps, 0.0, 1.0)
        return self.eps / (1 + self.k**2) * self._P(u)

    @property
    def p_top(self) -> float:
        return float(self.p_tilde(2 * self.eps))


def _bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    inside = (u > 0) & (u < 1)
    ui = u[inside]
    out[inside] = np.exp(4.0 - 1.0 / ui - 1.0 / (1.0 - ui))
    return out


class FlowField:
    """Evaluators for the raw, cutoff and Beltrami variants over one map."""

    def __init__(self, smap: CrossSectionMap, cutoff: CutoffSpec | None = None,
                 t_floor: float = DEFAULT_T_FLOOR):
        self.smap = smap
        self.k = smap.k
        self.cutoff = cutoff
        self.t_floor = t_floor
        self._raw = _RawEvaluator(smap)

    # -- raw ----------------------------------------------------------------
    def raw(self, rho, phi, z) -> FieldArrays:
        rho, phi, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho, phi, z)))
        x, y = helical_coordinates(self.k, rho, phi, z)
        if not np.all(self.smap.contains_x(x)):
            raise SectionRangeError("point outside the representable x-range")
        v = self._raw.at(x, y)
        return FieldArrays(rho, phi, z, v["u_rho"], v["u_z"], v["u_phi"], v["p"], v["t"],
                           np.ones(rho.shape, dtype=bool))

    # -- cutoff -------------------------------------------------------------
    def check_cutoff_containment(self):
        """Assert that ``{t <= 2 eps}`` stays inside the representable region."""
        cut = self._need_cutoff()
        lo, hi = self.smap.x_range
        for xe in (lo, hi):
            tm = self.smap.t_min(xe)[0]
            if tm <= 2 * cut.eps:
                raise SectionRangeError(
                    f"t_min({xe})={tm:.3g} <= 2 eps; support would leave the representable region")
        if self.smap.t_hi <= 2 * cut.eps:
            raise SectionRangeError("profile curve ends below t = 2 eps")

    def cutoff_field(self, rho, phi, z) -> FieldArrays:
        cut = self._need_cutoff()
        self.check_cutoff_containment()
        rho, phi, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho, phi, z)))
        x, y = helical_coordinates(self.k, rho, phi, z)
        shape = rho.shape
        u_rho = np.zeros(shape)
        u_z = np.zeros(shape)
        u_phi = np.zeros(shape)
        p = np.full(shape, cut.p_top)
        t = np.full(shape, np.inf)

        # t is reported wherever the chart is defined; omega vanishes off [eps, 2 eps]
        near = self.smap.contains_x(x)
        cand = np.zeros(shape, dtype=bool)
        for xv in np.unique(x[near]):
            sel = near & (x == xv)
            cand |= sel & (np.abs(y) <= self.smap.table(xv).y_max)
        if np.any(cand):
            v = self._raw.at(x[cand], y[cand])
            w = cut.omega(v["t"])
            u_rho[cand] = w * v["u_rho"]
            u_z[cand] = w * v["u_z"]
            u_phi[cand] = w * v["u_phi"]
            p[cand] = cut.p_tilde(v["t"])
            t[cand] = v["t"]
        in_support = (t > cut.eps) & (t < 2 * cut.eps)
        return FieldArrays(rho, phi, z, u_rho, u_z, u_phi, p, t, in_support)

    def _need_cutoff(self) -> CutoffSpec:
        if self.cutoff is None:
            raise ValueError("no cutoff specification attached to this field")
        return self.cutoff

    # -- Beltrami -------------------------------------------------------------
    def beltrami(self, rho, phi, z):
        """``u~ = p^(-5/6) u`` with ``p~ = -|u~|^2 / 2`` and the analytic factor ``lambda``.

        Returns ``(FieldArrays, extras)`` where ``extras`` holds ``psi``,
        ``chi`` and ``lam = 5 h / (6 t) - dh/dt`` (that is ``-d chi / d psi``).
        """
        rho, phi, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho, phi, z)))
        x, y = helical_coordinates(self.k, rho, phi, z)
        if not np.all(self.smap.contains_x(x)):
            raise SectionRangeError("point outside the representable x-range")
        v = self._raw.at(x, y)
        t = v["t"]
        if np.any(t <= self.t_floor):
            raise ValueError(f"Beltrami variant needs t > t_floor={self.t_floor}")
        p = v["p"]
        w = p ** (-5.0 / 6.0)
        arrays = FieldArrays(rho, phi, z, w * v["u_rho"], w * v["u_z"], w * v["u_phi"],
                             -1.5 * p ** (-2.0 / 3.0), t, np.ones(rho.shape, dtype=bool))
        extras = {
            "psi": t ** (1.0 / 6.0),
            "chi": t ** (-5.0 / 6.0) * v["h"] / 6.0,
            "lam": 5.0 * v["h"] / (6.0 * t) - v["dh"],
        }
        return arrays, extras

    def variant(self, name: str):
        """Evaluator ``(rho, phi, z) -> FieldArrays`` for ``raw|cutoff|beltrami``."""
        if name == "raw":
            return self.raw
        if name == "cutoff":
            return self.cutoff_field
        if name == "beltrami":
            return lambda rho, phi, z: self.beltrami(rho, phi, z)[0]
        raise ValueError(f"unknown variant {name!r}")


def sample_raw(rho, phi, z, field_: FlowField) -> FlowSample:
    return field_.raw(np.array([rho]), np.array([phi]), np.array([z])).sample(0)


def sample_cutoff(rho, phi, z, field_: FlowField) -> FlowSample:
    return field_.cutoff_field(np.array([rho]), np.array([phi]), np.array([z])).sample(0)


def sample_beltrami(rho, phi, z, field_: FlowField) -> BeltramiSample:
    arr, ex = field_.beltrami(np.array([rho]), np.array([phi]), np.array([z]))
    return BeltramiSample(float(arr.u_rho[0]), float(arr.u_z[0]), float(arr.u_phi[0]), float(arr.p[0]),
                          float(ex["lam"][0]), float(ex["psi"][0]), float(ex["chi"][0]), float(arr.t[0]))


def decomposition_scale(k) -> float:
    """Constant ``C`` with ``p^(-5/6) u = C (a x grad psi + chi a)``."""
    return 6.0 * (1.0 + k * k) ** (5.0 / 6.0)


def reference_field_a(rho, k):
    """``a = xi / |xi|^2`` for ``xi = rho e_phi + k e_z``, as ``(a_rho, a_z, a_phi)``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("rho must be positive")
    n2 = rho * rho + k * k
    return np.zeros_like(rho), k / n2, rho / n2


def build_flow_field(config: HelixConfig, t_max: float = DEFAULT_T_MAX, half_width: float = DEFAULT_HALF_WIDTH,
                     order: int = DEFAULT_ORDER, cutoff: bool = True) -> FlowField:
    """Series, continuation and cross-section map for ``config`` in one call."""
    series = expand_profile_series(config.k, order)
    curve = continue_profile(config, series, t_max=t_max)
    smap = CrossSectionMap(curve, half_width=half_width)
    spec = CutoffSpec(config.eps, config.kf) if cutoff else None
    return FlowField(smap, spec)
