"""Numerics for drifting Laplacians on rotationally symmetric weighted manifolds.

The package studies the operator  L = Delta - grad(f) . grad  on a radially
symmetric model (warp phi, weight f, measure e^{-f} dv) together with the
collapsing sphere-bundle metrics  g + eps^2 e^{-2f/q} g_{S^q}.  It provides

* closed-form curvature/volume geometry and comparison checks,
* a divergence-form Sturm-Liouville discretization with fiber sectors,
* pole-anchored spectral heat kernels with Gaussian/Li-Yau/Harnack bounds,
* Weyl-sequence probes of the essential spectrum,
* a reporting CLI that writes deterministic JSON/CSV bundles.
"""

from .models import RadialWarpFunction, WeightFunction, WeightedModel, WarpedProductModel
from .geometry import (
    CurvatureProfile,
    eval_curvature,
    drift_laplacian_radius,
    weighted_volume,
)
from .operators import (
    Grid1D,
    SturmLiouvilleOp,
    EigenDecomposition,
    SectorSpec,
    assemble,
    eigen_solve,
)

__version__ = "0.1.0"

__all__ = [
    "RadialWarpFunction",
    "WeightFunction",
    "WeightedModel",
    "WarpedProductModel",
    "CurvatureProfile",
    "eval_curvature",
    "drift_laplacian_radius",
    "weighted_volume",
    "__version__",
]
