"""Puiseux expansion of the profile pair ``h(t), c(t)`` at the singular point.

The profile system

    dh/dt = [(k^2 + c) S + 6 t (1 + k^2)(k h + 6 t)] / [2 (1 + k^2) D]
    dc/dt = [k S + 6 t h (1 + k^2)] / D

with ``S = h^2 (1 + k^2) - 3 t (c + k^2)`` and ``D = h S + 18 k t^2`` is
singular at ``h(0) = 0, c(0) = 1`` (``D`` vanishes there).  Its solution is
a power series in ``s = +-sqrt(t)``.  Coefficients are obtained here by
truncated power-series arithmetic on the denominator-cleared equations

    E1 = 2 (1 + k^2) D h'(s) - 2 s [(k^2 + c) S + 6 t (1 + k^2)(k h + 6 t)]
    E2 = D c'(s) - 2 s [k S + 6 t h (1 + k^2)]

where ``'`` is d/ds and ``t = s^2``.  The coefficient of ``s^(n+2)`` in
``(E1, E2)`` is affine in ``(a_n, c_n)``, giving a 2x2 linear system per
order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Sequence

import numpy as np

DEFAULT_ORDER = 12


class SeriesError(ArithmeticError):
    """Raised when the order-by-order recurrence breaks down."""


@dataclass(frozen=True)
class SeriesPair:
    """Truncated series ``h = sum a_n s^n``, ``c = sum c_n s^n``."""

    k: Real
    order: int
    h_coeffs: tuple
    c_coeffs: tuple

    @property
    def exact(self) -> bool:
        return isinstance(self.h_coeffs[0], Fraction)

    def truncated(self, order: int) -> "SeriesPair":
        if not 1 <= order <= self.order:
            raise ValueError(f"cannot truncate order {self.order} series to {order}")
        return SeriesPair(self.k, order, self.h_coeffs[: order + 1], self.c_coeffs[: order + 1])


# ---------------------------------------------------------------------------
# the profile system itself (shared with the ODE continuation)
# ---------------------------------------------------------------------------

def s_function(k, t, h, c):
    """``S = h^2 (1 + k^2) - 3 t (c + k^2)``."""
    return h * h * (1 + k * k) - 3 * t * (c + k * k)


def denominator(k, t, h, c):
    """``h S + 18 k t^2``, the common denominator of the profile system."""
    return h * s_function(k, t, h, c) + 18 * k * t * t


def profile_numerators(k, t, h, c):
    """Numerators ``(N_h, N_c)`` with ``dh/dt = N_h / D``, ``dc/dt = N_c / D``."""
    S = s_function(k, t, h, c)
    kk = 1 + k * k
    n_h = ((k * k + c) * S + 6 * t * kk * (k * h + 6 * t)) / (2 * kk)
    n_c = k * S + 6 * t * h * kk
    return n_h, n_c


def profile_rhs(k, t, h, c):
    """Right-hand side ``(dh/dt, dc/dt)``; works on scalars and arrays."""
    n_h, n_c = profile_numerators(k, t, h, c)
    D = denominator(k, t, h, c)
    return n_h / D, n_c / D


# ---------------------------------------------------------------------------
# truncated power series helpers (coefficient lists, index = power of s)
# ---------------------------------------------------------------------------

def _mul(a, b, n):
    out = [a[0] * 0] * (n + 1)
    for i, ai in enumerate(a[: n + 1]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: n + 1 - i]):
            out[i + j] += ai * bj
    return out


def _add(*terms):
    n = max(len(t) for t in terms)
    out = [terms[0][0] * 0] * n
    for term in terms:
        for i, v in enumerate(term):
            out[i] += v
    return out


def _scale(a, x):
    return [x * v for v in a]


def _shift(a, m, n):
    """Multiply by ``s^m`` and truncate to order ``n``."""
    return ([a[0] * 0] * m + list(a))[: n + 1]


def _deriv(a):
    return [i * a[i] for i in range(1, len(a))] or [a[0] * 0]


def _cleared_residuals(k, h, c, n):
    """Coefficients (through ``s^n``) of the cleared equations ``E1, E2``."""
    zero = h[0] * 0
    one = zero + 1
    kk = one + k * k
    t = [zero, zero, one]
    S = _add(_scale(_mul(h, h, n), kk), _scale(_mul(t, _add(c, [k * k]), n), -3))
    D = _add(_mul(h, S, n), _scale(_mul(t, t, n), 18 * k))
    inner_h = _add(
        _mul(_add(c, [k * k]), S, n),
        _scale(_mul(t, _add(_scale(h, k), _scale(t, 6)), n), 6 * kk),
    )
    inner_c = _add(_scale(S, k), _scale(_mul(t, h, n), 6 * kk))
    e1 = _add(_scale(_mul(_deriv(h), D, n), 2 * kk), _scale(_shift(inner_h, 1, n), -2))
    e2 = _add(_mul(_deriv(c), D, n), _scale(_shift(inner_c, 1, n), -2))
    pad = lambda a: (list(a) + [zero] * (n + 1))[: n + 1]
    return pad(e1), pad(e2)


def _as_number(k):
    if isinstance(k, Fraction):
        return k
    if isinstance(k, Rational):
        return Fraction(k)
    return float(k)


def expand_profile_series(k, order: int = DEFAULT_ORDER) -> SeriesPair:
    """Puiseux coefficients of ``h`` and ``c`` in ``s`` through ``s^order``.

    Exact ``Fraction`` arithmetic is used when ``k`` is an ``int`` or a
    ``Fraction``; otherwise everything is float.  The ``a_1 = +1`` family is
    returned; the other one is ``s -> -s``.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if k < 0:
        raise ValueError(f"slope k must be >= 0, got {k}")
    k = _as_number(k)
    zero = k * 0
    one = zero + 1

    # leading balance: a_1^2 (a_1^2 - 3) = a_1^2 - 3 -> a_1 = +-1, c_1 a_1 = 2k
    a1 = one
    if a1 * a1 != 1:
        raise SeriesError("degenerate leading balance")
    h = [zero, a1]
    c = [one, 2 * k / a1]

    for n in range(2, order + 1):
        m = n + 2
        base = [r[m] for r in _cleared_residuals(k, h + [zero], c + [zero], m)]
        da = [r[m] - b for r, b in zip(_cleared_residuals(k, h + [one], c + [zero], m), base)]
        dc = [r[m] - b for r, b in zip(_cleared_residuals(k, h + [zero], c + [one], m), base)]
        det = da[0] * dc[1] - dc[0] * da[1]
        if det == 0:
            raise SeriesError(f"singular linear system for coefficients at order {n}")
        a_n = (-base[0] * dc[1] + dc[0] * base[1]) / det
        c_n = (-da[0] * base[1] + base[0] * da[1]) / det
        h.append(a_n)
        c.append(c_n)

    return SeriesPair(k, order, tuple(h), tuple(c))


def _horner(coeffs, s):
    acc = coeffs[-1] * np.ones_like(s) if isinstance(s, np.ndarray) else coeffs[-1]
    for a in reversed(coeffs[:-1]):
        acc = acc * s + a
    return acc


def eval_profile_series(series: SeriesPair, s):
    """Evaluate ``(h, c, S)`` at signed abscissa ``s`` (``t = s^2``)."""
    if series.exact and not isinstance(s, (Fraction, int)):
        hc = [float(v) for v in series.h_coeffs]
        cc = [float(v) for v in series.c_coeffs]
        k = float(series.k)
    else:
        hc, cc, k = series.h_coeffs, series.c_coeffs, series.k
    h = _horner(hc, s)
    c = _horner(cc, s)
    return h, c, s_function(k, s * s, h, c)


def eval_series_derivatives(series: SeriesPair, s):
    """``(dh/dt, dc/dt)`` of the truncated series at ``s != 0``."""
    hc = [float(v) for v in series.h_coeffs]
    cc = [float(v) for v in series.c_coeffs]
    dh_ds = _horner(_deriv(hc), s)
    dc_ds = _horner(_deriv(cc), s)
    return dh_ds / (2 * s), dc_ds / (2 * s)


def series_ode_residual(k, series: SeriesPair, s_samples: Sequence[float]) -> float:
    """Largest absolute residual of the cleared equations at the given ``s``."""
    s = np.asarray(s_samples, dtype=float)
    if s.size == 0:
        raise ValueError("no sample points")
    if np.any(s == 0):
        raise ValueError("s = 0 is the singular point; choose nonzero samples")
    k = float(k)
    hc = [float(v) for v in series.h_coeffs]
    cc = [float(v) for v in series.c_coeffs]
    h, c = _horner(hc, s), _horner(cc, s)
    dh, dc = _horner(_deriv(hc), s), _horner(_deriv(cc), s)
    t = s * s
    D = denominator(k, t, h, c)
    n_h, n_c = profile_numerators(k, t, h, c)
    e1 = 2 * (1 + k * k) * (dh * D - 2 * s * n_h)
    e2 = dc * D - 2 * s * n_c
    return float(np.max(np.maximum(np.abs(e1), np.abs(e2))))
