"""Rotationally symmetric weighted models and their collapsing bundles.

A model is a ball of radius `radius` with metric dr^2 + phi(r)^2 g_{S^{n-1}},
weight f, and measure e^{-f} dv.  The n = 1 case is the half line with even
reflection through the pole, so its area density carries the factor 2 and the
warp is unused.  All value/derivative evaluators accept scalars or arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import unit_sphere_area

WARP_FAMILIES = ("euclidean", "hyperbolic", "tabulated")
WEIGHT_FAMILIES = ("zero", "quadratic", "log_poly", "linear_asymptotic", "tabulated")
BOUNDARY_CONDITIONS = ("dirichlet", "neumann")


def _as_float_array(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class RadialWarpFunction:
    """Warp phi with phi(0) = 0, phi'(0) = 1, phi > 0 on (0, R].

    families:
      euclidean          phi(r) = r
      hyperbolic         phi(r) = sinh(a r) / a, params = (a,)
      tabulated          cubic spline through (nodes, values); the pole
                         conditions are projected: the spline is clamped to
                         phi'(0) = 1 and the first node must sit at 0 with
                         value 0.
    """

    family: str
    params: tuple = ()
    nodes: tuple = ()
    values: tuple = ()
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in WARP_FAMILIES:
            raise ValueError(f"unknown warp family {self.family!r}")
        if self.family == "hyperbolic":
            if len(self.params) != 1 or self.params[0] <= 0:
                raise ValueError("hyperbolic warp needs params = (a,) with a > 0")
        if self.family == "tabulated":
            nodes = np.asarray(self.nodes, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if nodes.ndim != 1 or nodes.size < 8 or nodes.size != values.size:
                raise ValueError("tabulated warp needs matching node/value arrays, >= 8 points")
            if nodes[0] != 0.0 or abs(values[0]) > 1e-14:
                raise ValueError("tabulated warp must start at phi(0) = 0")
            if np.any(np.diff(nodes) <= 0):
                raise ValueError("tabulated warp nodes must be strictly increasing")
            if np.any(values[1:] <= 0):
                raise ValueError("tabulated warp must be positive away from the pole")
            spline = CubicSpline(nodes, values, bc_type=((1, 1.0), "not-a-knot"))
            object.__setattr__(self, "_spline", spline)
            object.__setattr__(self, "nodes", tuple(nodes.tolist()))
            object.__setattr__(self, "values", tuple(values.tolist()))

    def value(self, r):
        r = _as_float_array(r)
        if self.family == "euclidean":
            return r.copy()
        if self.family == "hyperbolic":
            a = self.params[0]
            return np.sinh(a * r) / a
        return self._spline(r)

    def d1(self, r):
        r = _as_float_array(r)
        if self.family == "euclidean":
            return np.ones_like(r)
        if self.family == "hyperbolic":
            a = self.params[0]
            return np.cosh(a * r)
        return self._spline(r, 1)

    def d2(self, r):
        r = _as_float_array(r)
        if self.family == "euclidean":
            return np.zeros_like(r)
        if self.family == "hyperbolic":
            a = self.params[0]
            return a * np.sinh(a * r)
        return self._spline(r, 2)

    def label(self) -> str:
        if self.family == "hyperbolic":
            return f"hyperbolic(a={self.params[0]:g})"
        if self.family == "tabulated":
            return f"tabulated({len(self.nodes)} knots)"
        return "euclidean"


@dataclass(frozen=True)
class WeightFunction:
    """Weight f with f'(0) = 0 (smoothness through the pole).

    families:
      zero               f = 0
      quadratic          f = c r^2,            params = (c,)
      log_poly           f = c log(1 + r^2),   params = (c,)
      linear_asymptotic  f = c sqrt(1 + r^2),  params = (c,)
      tabulated          clamped cubic spline, f'(0) projected to 0
    """

    family: str
    params: tuple = ()
    nodes: tuple = ()
    values: tuple = ()
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in WEIGHT_FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.family in ("quadratic", "log_poly", "linear_asymptotic"):
            if len(self.params) != 1:
                raise ValueError(f"{self.family} weight needs params = (c,)")
        if self.family == "tabulated":
            nodes = np.asarray(self.nodes, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if nodes.ndim != 1 or nodes.size < 8 or nodes.size != values.size:
                raise ValueError("tabulated weight needs matching node/value arrays, >= 8 points")
            if nodes[0] != 0.0:
                raise ValueError("tabulated weight must start at r = 0")
            if np.any(np.diff(nodes) <= 0):
                raise ValueError("tabulated weight nodes must be strictly increasing")
            spline = CubicSpline(nodes, values, bc_type=((1, 0.0), "not-a-knot"))
            object.__setattr__(self, "_spline", spline)
            object.__setattr__(self, "nodes", tuple(nodes.tolist()))
            object.__setattr__(self, "values", tuple(values.tolist()))

    def value(self, r):
        r = _as_float_array(r)
        if self.family == "zero":
            return np.zeros_like(r)
        if self.family == "quadratic":
            return self.params[0] * r * r
        if self.family == "log_poly":
            return self.params[0] * np.log1p(r * r)
        if self.family == "linear_asymptotic":
            return self.params[0] * np.sqrt(1.0 + r * r)
        return self._spline(r)

    def d1(self, r):
        r = _as_float_array(r)
        if self.family == "zero":
            return np.zeros_like(r)
        if self.family == "quadratic":
            return 2.0 * self.params[0] * r
        if self.family == "log_poly":
            return 2.0 * self.params[0] * r / (1.0 + r * r)
        if self.family == "linear_asymptotic":
            return self.params[0] * r / np.sqrt(1.0 + r * r)
        return self._spline(r, 1)

    def d2(self, r):
        r = _as_float_array(r)
        if self.family == "zero":
            return np.zeros_like(r)
        if self.family == "quadratic":
            return 2.0 * self.params[0] * np.ones_like(r)
        if self.family == "log_poly":
            rr = r * r
            return 2.0 * self.params[0] * (1.0 - rr) / (1.0 + rr) ** 2
        if self.family == "linear_asymptotic":
            return self.params[0] / (1.0 + r * r) ** 1.5
        return self._spline(r, 2)

    def label(self) -> str:
        if self.family == "zero":
            return "zero"
        if self.family == "tabulated":
            return f"tabulated({len(self.nodes)} knots)"
        return f"{self.family}(c={self.params[0]:g})"


@dataclass(frozen=True)
class WeightedModel:
    """Ball of radius `radius` in the rotationally symmetric weighted space."""

    n: int
    warp: RadialWarpFunction
    weight: WeightFunction
    radius: float
    bc: str = "dirichlet"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValueError(f"bc must be one of {BOUNDARY_CONDITIONS}, got {self.bc!r}")

    def area_density(self, r):
        """Weighted area of the radius-r sphere: omega_{n-1} phi^{n-1} e^{-f}.

        For n = 1 this is 2 e^{-f} (area of S^0 counts both reflected points),
        which makes pole-anchored kernels agree with the full-line ones.
        """
        r = _as_float_array(r)
        w = np.exp(-self.weight.value(r))
        if self.n == 1:
            return 2.0 * w
        return unit_sphere_area(self.n - 1) * self.warp.value(r) ** (self.n - 1) * w

    def label(self) -> str:
        return (
            f"n={self.n}|warp={self.warp.label()}|weight={self.weight.label()}"
            f"|R={self.radius:g}|{self.bc}"
        )

    def with_radius(self, radius: float, bc: str | None = None) -> "WeightedModel":
        return WeightedModel(self.n, self.warp, self.weight, radius, bc or self.bc)


@dataclass(frozen=True)
class WarpedProductModel:
    """Base model times S^q with the collapsing metric g + eps^2 e^{-2f/q} g_{S^q}."""

    base: WeightedModel
    q: int
    epsilon: float

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"fiber dimension q must be >= 1, got {self.q}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    def fiber_warp(self, r):
        """Radius of the fiber sphere over radius r: eps * e^{-f(r)/q}."""
        return self.epsilon * np.exp(-self.base.weight.value(r) / self.q)

    def fiber_warp_d1(self, r):
        return -self.base.weight.d1(r) / self.q * self.fiber_warp(r)

    def fiber_warp_d2(self, r):
        f1 = self.base.weight.d1(r)
        f2 = self.base.weight.d2(r)
        return ((f1 / self.q) ** 2 - f2 / self.q) * self.fiber_warp(r)

    def label(self) -> str:
        return f"{self.base.label()}|q={self.q}|eps={self.epsilon:g}"


def euclidean_warp() -> RadialWarpFunction:
    return RadialWarpFunction("euclidean")


def hyperbolic_warp(a: float = 1.0) -> RadialWarpFunction:
    return RadialWarpFunction("hyperbolic", params=(float(a),))


def tabulated_warp_from(fn_value, radius: float, knots: int = 801) -> RadialWarpFunction:
    """Sample a smooth warp into the tabulated family (plumbing clone)."""
    nodes = np.linspace(0.0, radius, knots)
    return RadialWarpFunction("tabulated", nodes=tuple(nodes), values=tuple(fn_value(nodes)))


def tabulated_weight_from(fn_value, radius: float, knots: int = 801) -> WeightFunction:
    nodes = np.linspace(0.0, radius, knots)
    return WeightFunction("tabulated", nodes=tuple(nodes), values=tuple(fn_value(nodes)))
