"""Named model families and the cross-product verification matrix.

The families give the CLI stable names with sensible defaults; the matrix
builders enumerate the warp x weight sweeps that the identity and bound
suites run over.  Everything here is plain construction, no verification.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import asymptotic_nonnegativity_profile, classify_volume_growth
from .models import (
    RadialWarpFunction,
    WeightFunction,
    WeightedModel,
    euclidean_warp,
    hyperbolic_warp,
    tabulated_warp_from,
    tabulated_weight_from,
)

__all__ = [
    "ModelFamily",
    "families",
    "family",
    "matrix_warps",
    "matrix_weights",
    "base_matrix",
    "product_matrix",
]


def _build_warp(family: str, params: tuple, radius: float) -> RadialWarpFunction:
    if family == "euclidean":
        return euclidean_warp()
    if family == "hyperbolic":
        a = params[0] if params else 1.0
        return hyperbolic_warp(a)
    if family == "tabulated":
        # spline clone of the hyperbolic warp, resampled at build radius
        a = params[0] if params else 1.0
        return tabulated_warp_from(hyperbolic_warp(a).value, radius)
    raise ValueError(f"unknown warp family {family!r}")


def _build_weight(family: str, params: tuple, radius: float) -> WeightFunction:
    if family == "tabulated":
        source = WeightFunction("log_poly", (params[0] if params else 1.0,))
        return tabulated_weight_from(source.value, radius)
    return WeightFunction(family, tuple(params))


@dataclass(frozen=True)
class ModelFamily:
    """A named preset: warp/weight pair with default dimension and domain."""

    name: str
    summary: str
    warp_family: str
    warp_params: tuple
    weight_family: str
    weight_params: tuple
    n: int
    radius: float
    bc: str

    def build(
        self,
        n: int | None = None,
        radius: float | None = None,
        bc: str | None = None,
    ) -> WeightedModel:
        n = self.n if n is None else int(n)
        radius = self.radius if radius is None else float(radius)
        bc = self.bc if bc is None else bc
        return WeightedModel(
            n,
            _build_warp(self.warp_family, self.warp_params, radius),
            _build_weight(self.weight_family, self.weight_params, radius),
            radius,
            bc,
        )

    def schema(self) -> dict:
        return {
            "name": self.name,
            "summary": self.summary,
            "warp": {"family": self.warp_family, "params": list(self.warp_params)},
            "weight": {"family": self.weight_family, "params": list(self.weight_params)},
            "defaults": {"n": self.n, "radius": self.radius, "bc": self.bc},
            "overridable": ["n", "radius", "bc"],
        }

    def properties(self, q: int = 1) -> dict:
        """Evaluated on the default instance; used by the list-models filter.

        The curvature tail is a property of the analytic formula, so it is
        screened on a long window; splines stay on their data range.
        """
        model = self.build()
        probe = model
        if (self.warp_family != "tabulated" and self.weight_family != "tabulated"
                and model.radius < 80.0):
            probe = model.with_radius(80.0)
        profile = asymptotic_nonnegativity_profile(probe, q)
        growth = classify_volume_growth(model)
        return {
            "asymptotically_nonnegative": bool(profile["verdict"]),
            "volume_growth": growth["classification"],
        }


_FAMILIES = (
    ModelFamily(
        "flat",
        "unweighted euclidean ball; every curvature quantity vanishes",
        "euclidean", (), "zero", (), 2, 20.0, "dirichlet",
    ),
    ModelFamily(
        "hyperbolic",
        "constant curvature -a^2, no weight; exponential volume growth",
        "hyperbolic", (1.0,), "zero", (), 3, 20.0, "dirichlet",
    ),
    ModelFamily(
        "gaussian",
        "half line with confining quadratic weight; even spectrum 0, 2, 4, ...",
        "euclidean", (), "quadratic", (0.5,), 1, 12.0, "neumann",
    ),
    ModelFamily(
        "log-weight",
        "euclidean with slowly varying log(1+r^2) weight; tame curvature tail",
        "euclidean", (), "log_poly", (1.0,), 2, 20.0, "dirichlet",
    ),
    ModelFamily(
        "linear-weight",
        "euclidean with asymptotically linear weight; bounded drift, finite volume",
        "euclidean", (), "linear_asymptotic", (1.0,), 3, 20.0, "dirichlet",
    ),
    ModelFamily(
        "spline-clone",
        "tabulated resample of the hyperbolic log-weight model; held-out geometry",
        "tabulated", (1.0,), "tabulated", (1.0,), 3, 20.0, "dirichlet",
    ),
)

_BY_NAME = {fam.name: fam for fam in _FAMILIES}


def families() -> tuple[ModelFamily, ...]:
    return _FAMILIES


def family(name: str) -> ModelFamily:
    try:
        return _BY_NAME[name]
    except KeyError:
        known = ", ".join(sorted(_BY_NAME))
        raise ValueError(f"unknown model family {name!r}; known: {known}") from None


def matrix_warps(radius: float) -> tuple[RadialWarpFunction, ...]:
    """The three warp columns of the verification matrix."""
    return (
        euclidean_warp(),
        hyperbolic_warp(1.0),
        tabulated_warp_from(hyperbolic_warp(1.0).value, radius),
    )


def matrix_weights() -> tuple[WeightFunction, ...]:
    """The four weight rows of the verification matrix."""
    return (
        WeightFunction("zero"),
        WeightFunction("quadratic", (0.5,)),
        WeightFunction("log_poly", (1.0,)),
        WeightFunction("linear_asymptotic", (1.0,)),
    )


def base_matrix(
    radius: float = 6.0,
    n_values=(1, 2, 3),
    bc_values=("dirichlet", "neumann"),
) -> list[WeightedModel]:
    """All warp x weight x n x bc combinations (72 at the defaults)."""
    out = []
    for warp in matrix_warps(radius):
        for weight in matrix_weights():
            for n in n_values:
                for bc in bc_values:
                    out.append(WeightedModel(n, warp, weight, radius, bc))
    return out


def product_matrix(
    radius: float = 6.0,
    n: int = 3,
    q_values=(1, 2, 3),
    eps_values=(1.0, 0.1),
    bc: str = "dirichlet",
) -> list:
    """Warp x weight x q x epsilon warped products (72 at the defaults)."""
    from .models import WarpedProductModel

    out = []
    for warp in matrix_warps(radius):
        for weight in matrix_weights():
            base = WeightedModel(n, warp, weight, radius, bc)
            for q in q_values:
                for eps in eps_values:
                    out.append(WarpedProductModel(base, q, eps))
    return out
