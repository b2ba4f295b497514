"""Numerical continuation of the profile pair ``h(t), c(t)`` away from ``t = 0``.

The system is integrated in ``sigma = sqrt(t)`` rather than ``t``: the
solution is analytic in ``s = branch * sigma`` while ``dh/dt`` blows up like
``t^(-1/2)``.  Initial data come from the Puiseux series at ``|s| = s0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .config import HelixConfig
from .puiseux import (
    SeriesPair,
    denominator,
    eval_profile_series,
    eval_series_derivatives,
    profile_numerators,
    profile_rhs,
    s_function,
)

DEFAULT_HANDOFF = 1e-3
DEFAULT_T_MAX = 0.05
# stop when |D| falls below this fraction of the size of its terms
DENOMINATOR_GUARD = 1e-6


class _StackedDense:
    """Vectorized evaluation of a DOP853 ``OdeSolution`` in ``sigma``.

    The per-step interpolants are gathered into arrays once so that large
    batches avoid the per-segment dispatch of ``OdeSolution.__call__``.
    """

    def __init__(self, solution):
        self.solution = solution
        pieces = solution.interpolants
        try:
            self.t_old = np.array([p.t_old for p in pieces])
            self.h = np.array([p.h for p in pieces])
            self.y_old = np.array([p.y_old for p in pieces])
            self.F = np.array([p.F for p in pieces])
        except AttributeError:
            self.F = None
        self.breaks = np.asarray(solution.ts)

    def __call__(self, sig):
        if self.F is None:
            return self.solution(sig)
        j = np.clip(np.searchsorted(self.breaks, sig, side="right") - 1, 0, len(self.h) - 1)
        x = ((sig - self.t_old[j]) / self.h[j])[:, None]
        F = self.F[j]
        y = np.zeros((sig.size, self.y_old.shape[1]))
        for i in range(F.shape[1] - 1, -1, -1):
            y += F[:, i]
            y *= x if (F.shape[1] - 1 - i) % 2 == 0 else 1 - x
        y += self.y_old[j]
        return y.T


class ProfileRangeError(ValueError):
    """Requested ``t`` lies outside the continued curve."""


def _denominator_scale(k, t, h, c):
    return np.abs(h) * (h * h * (1 + k * k) + 3 * t * np.abs(c + k * k)) + 18 * k * t * t


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """A continued solution of the profile system on ``[t_start, t_cap]``.

    ``nodes`` has one row ``(t, h, c, dh/dt, dc/dt)`` per accepted step.
    """

    k: float
    branch: int
    t_start: float
    t_cap: float
    nodes: np.ndarray
    series: SeriesPair
    stop_reason: str
    _solution: object = field(default=None, repr=False)

    @property
    def s_start(self) -> float:
        return float(np.sqrt(self.t_start))

    def state(self, t):
        """``(h, c)`` for ``0 <= t <= t_cap``; the series covers ``t < t_start``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_cap * (1 + 1e-12)):
            raise ProfileRangeError(f"t outside [0, {self.t_cap:.6g}]")
        t = np.minimum(t, self.t_cap)
        sig = np.sqrt(t)
        h = np.empty_like(t)
        c = np.empty_like(t)
        low = t < self.t_start
        if np.any(low):
            hs, cs, _ = eval_profile_series(self.series, self.branch * sig[low])
            h[low], c[low] = hs, cs
        high = ~low
        if np.any(high):
            if self._solution is None:
                h[high], c[high] = self.nodes[0, 1], self.nodes[0, 2]
            else:
                y = self._solution(sig[high])
                h[high], c[high] = y[0], y[1]
            # exact reproduction of stored nodes
            idx = np.searchsorted(self.nodes[:, 0], t[high])
            idx = np.clip(idx, 0, len(self.nodes) - 1)
            hit = self.nodes[idx, 0] == t[high]
            if np.any(hit):
                hh, cc = h[high], c[high]
                hh[hit] = self.nodes[idx[hit], 1]
                cc[hit] = self.nodes[idx[hit], 2]
                h[high], c[high] = hh, cc
        return h, c

    def derivatives(self, t, h, c):
        """``(dh/dt, dc/dt)`` consistent with :meth:`state`.

        Below ``t_start`` the series is differentiated directly, which avoids
        the 0/0 cancellation of the right-hand side near ``t = 0``.
        """
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            dh, dc = profile_rhs(self.k, t, h, c)
        low = t < self.t_start
        if np.any(low):
            s = self.branch * np.sqrt(t[low])
            with np.errstate(divide="ignore", invalid="ignore"):
                dhs, dcs = eval_series_derivatives(self.series, s)
            dh = np.where(low, 0.0, dh)
            dc = np.where(low, 0.0, dc)
            dh[low], dc[low] = dhs, dcs
        return dh, dc


def continue_profile(
    config: HelixConfig,
    series: SeriesPair,
    s0: float | None = None,
    t_max: float = DEFAULT_T_MAX,
    rtol: float | None = None,
) -> ProfileCurve:
    """Integrate the profile system from the series handoff toward ``t_max``.

    The integration stops early (``t_cap < t_max``) when the denominator
    ``h S + 18 k t^2`` becomes negligible against its own terms or the step
    size underflows; ``stop_reason`` records which.
    """
    if s0 is None:
        s0 = DEFAULT_HANDOFF * config.branch
    if s0 == 0 or np.sign(s0) != config.branch:
        raise ValueError("handoff abscissa must be nonzero with the sign of the branch")
    if series.order < 4:
        raise ValueError("series order must be at least 4 for the handoff")
    k = config.kf
    t0 = s0 * s0
    if t_max < t0:
        raise ValueError(f"t_max={t_max} lies below the handoff point t0={t0}")
    h0, c0, S0 = (float(v) for v in eval_profile_series(series, float(s0)))
    if abs(denominator(k, t0, h0, c0)) <= DENOMINATOR_GUARD * _denominator_scale(k, t0, h0, c0):
        raise ValueError("handoff too close to singularity")
    dh0, dc0 = profile_rhs(k, t0, h0, c0)

    if t_max == t0:
        nodes = np.array([[t0, h0, c0, dh0, dc0]])
        return ProfileCurve(k, config.branch, t0, t0, nodes, series, "zero-length")

    if rtol is None:
        rtol = min(config.tol * 1e-4, 1e-12)

    def rhs(sig, y):
        dh, dc = profile_rhs(k, sig * sig, y[0], y[1])
        return [2 * sig * dh, 2 * sig * dc]

    def guard(sig, y):
        t = sig * sig
        return abs(denominator(k, t, y[0], y[1])) - DENOMINATOR_GUARD * _denominator_scale(k, t, y[0], y[1])

    guard.terminal = True

    sig0 = abs(s0)
    sol = solve_ivp(
        rhs,
        (sig0, np.sqrt(t_max)),
        [h0, c0],
        method="DOP853",
        rtol=rtol,
        atol=rtol * 1e-2,
        dense_output=True,
        events=guard,
    )
    if sol.status == 0:
        reason = "reached t_max"
    elif sol.status == 1:
        reason = "denominator guard"
    else:
        reason = f"integrator stopped: {sol.message}"

    sig = sol.t
    if sol.status == -1 and len(sig) > 2:
        # drop the final step, which the integrator could not resolve
        sig = sig[:-1]
        ys = sol.y[:, :-1]
    else:
        ys = sol.y
    t = sig * sig
    t[0] = t0
    if sol.status == 0:
        t[-1] = t_max
    h, c = ys
    dh, dc = profile_rhs(k, t, h, c)
    nodes = np.column_stack([t, h, c, dh, dc])
    return ProfileCurve(k, config.branch, t0, float(t[-1]), nodes, series, reason, _StackedDense(sol.sol))


def profile_at(curve: ProfileCurve, t: float):
    """``(h, c, S, dh/dt, dc/dt)`` at ``t`` in ``[t_start, t_cap]``."""
    if not curve.t_start <= t <= curve.t_cap:
        raise ProfileRangeError(f"t={t} outside [{curve.t_start:.6g}, {curve.t_cap:.6g}]")
    h, c = curve.state(np.array([t]))
    dh, dc = profile_rhs(curve.k, t, h[0], c[0])
    return float(h[0]), float(c[0]), float(s_function(curve.k, t, h[0], c[0])), float(dh), float(dc)


def second_derivatives(k, t, h, c, dh, dc):
    """Total ``t``-derivatives ``(h'', c'')`` of the right-hand side along a solution."""
    kk = 1 + k * k
    S = s_function(k, t, h, c)
    dS = -3 * (c + k * k) + 2 * h * kk * dh - 3 * t * dc
    D = h * S + 18 * k * t * t
    dD = dh * S + h * dS + 36 * k * t
    n_h, n_c = profile_numerators(k, t, h, c)
    dn_h = ((dc * S + (k * k + c) * dS) + 6 * kk * (k * h + 6 * t) + 6 * t * kk * (k * dh + 6)) / (2 * kk)
    dn_c = k * dS + 6 * kk * (h + t * dh)
    return (dn_h * D - n_h * dD) / (D * D), (dn_c * D - n_c * dD) / (D * D)


def circle_limit_residual(curve: ProfileCurve, t_samples) -> float:
    """Residual of the circle-case reduction at ``k = 0``.

    Checks ``6 t c'' + 3 t c'^3 - 2 c c'^2 - 6 c' = 0`` together with
    ``(h^2)' = c + 36 t^2 / (h^2 - 3 t c)`` and ``c' = 6 t / (h^2 - 3 t c)``.
    """
    if curve.k != 0:
        raise ValueError("circle limit requires k = 0")
    t = np.asarray(t_samples, dtype=float)
    h, c = curve.state(t)
    dh, dc = curve.derivatives(t, h, c)
    _, ddc = second_derivatives(0.0, t, h, c, dh, dc)
    return float(np.max(np.abs(circle_equation(t, c, dc, ddc)) + _reduction_residual(t, h, c, dh, dc)))


def circle_equation(t, c, dc, ddc):
    return 6 * t * ddc + 3 * t * dc**3 - 2 * c * dc**2 - 6 * dc


def _reduction_residual(t, h, c, dh, dc):
    q = h * h - 3 * t * c
    return np.abs(2 * h * dh - (c + 36 * t * t / q)) + np.abs(dc - 6 * t / q)
