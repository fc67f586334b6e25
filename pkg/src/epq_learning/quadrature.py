"""Adaptive Gauss-Kronrod (7/15 point) quadrature with bisection."""
from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import DivergentIntegralError, QuadratureError

# Kronrod abscissae (positive half) and weights, QUADPACK qk15
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss weights attached to _XGK[1], _XGK[3], _XGK[5], _XGK[7]
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5, 13, 11, 9, 7]] = [_WG[0], _WG[1], _WG[2], _WG[0], _WG[1], _WG[2], _WG[3]]


def gauss_kronrod(f, a, b):
    """One 15-point Kronrod estimate on [a, b] and its |K15 - G7| error."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    k15 = half * float(_KWEIGHTS @ fx)
    g7 = half * float(_GWEIGHTS @ fx)
    return k15, abs(k15 - g7)


def integrate(f, a, b, rtol=1e-10, atol=0.0, max_intervals=2000):
    """Integrate a vectorised ``f`` over [a, b].

    Splits the interval with the largest error estimate until the summed
    estimate is below ``max(atol, rtol * |I|)``. Raises QuadratureError if
    ``max_intervals`` is reached first or the integrand is not finite.
    """
    if b == a:
        return 0.0
    if b < a:
        return -integrate(f, b, a, rtol, atol, max_intervals)
    value, err = gauss_kronrod(f, a, b)
    heap = [(-err, a, b, value)]
    total, total_err = value, err
    while True:
        if not (math.isfinite(total) and math.isfinite(total_err)):
            raise QuadratureError(f"non-finite integrand on [{a}, {b}]")
        if total_err <= max(atol, rtol * abs(total)):
            break
        if len(heap) >= max_intervals:
            raise QuadratureError(
                f"tolerance {rtol:g} not reached within {max_intervals} intervals "
                f"(estimate {total:.6g} +/- {total_err:.2g})"
            )
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise QuadratureError(f"interval [{lo}, {hi}] cannot be bisected further")
        v1, e1 = gauss_kronrod(f, lo, mid)
        v2, e2 = gauss_kronrod(f, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
    # re-sum to shed accumulated cancellation from the running updates
    return math.fsum(item[3] for item in heap)


def integrate_from_origin(f, upper, exponent, rtol=1e-10, finite_part=False, label=None):
    """Integrate ``f`` over [0, upper], where ``f(t) ~ t**exponent`` near 0.

    ``exponent`` only steers the handling of the origin, ``f`` itself is
    treated as a black box:

    * ``exponent >= 0``: plain adaptive quadrature.
    * ``-1 < exponent < 0``: integrate on [delta, upper] with delta chosen so
      the neglected piece ``delta**(exponent+1)/(exponent+1)`` is below
      ``rtol/10`` of the result.
    * ``exponent <= -1``: the integral diverges. Raises DivergentIntegralError
      unless ``finite_part`` is set, in which case the Hadamard finite part
      ``int_start^upper f + start**(exponent+1)/(exponent+1)`` is
      returned, with ``start`` placed so the cancellation between the two
      pieces loses at most one bit.
    """
    if upper == 0:
        return 0.0
    if upper < 0:
        raise QuadratureError(f"upper limit must be nonnegative, got {upper}")
    if exponent >= 0:
        return integrate(f, 0.0, upper, rtol=rtol)
    p1 = exponent + 1.0
    if p1 > 0:
        # whole-interval scale of the integral, used to size the neglected tail
        scale = upper ** p1 / p1
        delta = (rtol / 10.0 * scale * p1) ** (1.0 / p1)
        delta = min(delta, 0.5 * upper)
        return integrate(f, delta, upper, rtol=rtol)
    if not finite_part:
        raise DivergentIntegralError(
            f"integral of t**{exponent:.6g} over [0, {upper:.6g}] diverges", label
        )
    start = upper * 0.5 ** (1.0 / max(1.0, -p1))
    if p1 == 0:
        counter = math.log(start)
    else:
        counter = start ** p1 / p1
    return integrate(f, start, upper, rtol=min(rtol, 1e-13)) + counter
