"""Adaptive quadrature and small special-function helpers.

Radial integrals are one dimensional, so everything here wraps
scipy.integrate.quad with tight tolerances and turns silent accuracy loss
into an exception.  The returned error estimate is part of the contract:
callers that report integrals also report the estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special


class QuadratureError(RuntimeError):
    """Raised when the adaptive rule cannot certify the requested accuracy."""


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    neval: int


def adaptive_quad(fn, a, b, *, epsabs=1e-12, epsrel=1e-10, points=None, limit=200):
    """Integrate fn over [a, b] (b may be numpy.inf).

    Raises QuadratureError if the error estimate exceeds
    max(epsabs, 10 * epsrel * |value|); the factor keeps honest results
    near round-off from tripping the guard.
    """
    kwargs = {"epsabs": epsabs, "epsrel": epsrel, "limit": limit, "full_output": 1}
    if points is not None and not math.isinf(b):
        kwargs["points"] = [p for p in points if a < p < b]
        if not kwargs["points"]:
            del kwargs["points"]
    out = integrate.quad(fn, a, b, **kwargs)
    value, err, info = out[0], out[1], out[2]
    if len(out) > 3:
        raise QuadratureError(f"quad warning on [{a}, {b}]: {out[3]}")
    if err > max(epsabs, 10.0 * epsrel * abs(value)):
        raise QuadratureError(
            f"quad error estimate {err:.3e} too large for value {value:.6e} on [{a}, {b}]"
        )
    return QuadResult(value, err, int(info["neval"]))


def unit_sphere_area(m: int) -> float:
    """Surface area of the unit m-sphere S^m; area(S^0) = 2 counts two points."""
    if m < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {m}")
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


def sphere_harmonic_multiplicity(j: int, q: int) -> int:
    """Dimension of the degree-j spherical-harmonic space on S^q.

    m_0 = 1 and m_j = (2j+q-1) (j+q-2)! / (j! (q-1)!) for j >= 1; for the
    circle this collapses to 2 (cos and sin of each frequency).
    """
    if q < 1 or j < 0:
        raise ValueError(f"need q >= 1, j >= 0, got q={q}, j={j}")
    if j == 0:
        return 1
    return (2 * j + q - 1) * math.factorial(j + q - 2) // (math.factorial(j) * math.factorial(q - 1))


def first_bessel_zero(order: float) -> float:
    """First positive zero of J_order, for real order >= 0.

    scipy only tabulates integer orders, so bracket the zero with the
    McMahon-type estimate and refine with brentq.
    """
    from scipy.optimize import brentq

    nu = float(order)
    if nu < 0:
        raise ValueError(f"order must be >= 0, got {nu}")
    guess = nu + 1.8557571 * nu ** (1.0 / 3.0) + 1.033150 * nu ** (-1.0 / 3.0) if nu > 0 else 2.404826
    lo = max(guess - 1.5, 1e-3)
    # Walk right until the sign flips; J_nu > 0 on (0, j_{nu,1}).
    while special.jv(nu, lo) <= 0.0:
        lo *= 0.5
        if lo < 1e-12:
            raise RuntimeError(f"could not bracket first Bessel zero for order {nu}")
    hi = lo + 0.5
    while special.jv(nu, hi) > 0.0:
        hi += 0.5
        if hi > guess + 50.0:
            raise RuntimeError(f"could not bracket first Bessel zero for order {nu}")
    return float(brentq(lambda x: special.jv(nu, x), lo, hi, xtol=1e-14, rtol=1e-15))
