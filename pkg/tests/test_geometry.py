import math

import numpy as np
import pytest

from driftlab.geometry import (
    asymptotic_nonnegativity_profile,
    check_mean_inequality,
    classify_volume_growth,
    curvature_floor,
    displayed_volume_form_offset,
    drift_laplacian_radius,
    eval_curvature,
    multiply_warped_ricci,
    verify_bochner_radial,
    verify_laplacian_comparison,
    verify_volume_comparison,
    verify_warped_ricci,
    weighted_volume,
    weighted_volume_total,
)
from driftlab.models import (
    WeightFunction,
    WeightedModel,
    WarpedProductModel,
    euclidean_warp,
    hyperbolic_warp,
    tabulated_warp_from,
)

ZERO = WeightFunction("zero")
QUAD = WeightFunction("quadratic", (0.5,))
LOGP = WeightFunction("log_poly", (1.0,))
LINA = WeightFunction("linear_asymptotic", (1.0,))

EUC3 = WeightedModel(3, euclidean_warp(), ZERO, 6.0)
HYP3 = WeightedModel(3, hyperbolic_warp(1.0), ZERO, 6.0)
RADII = np.linspace(0.2, 5.5, 24)


def test_flat_space_is_flat():
    prof = eval_curvature(EUC3, q=1, radii=RADII)
    np.testing.assert_allclose(prof.ric_radial, 0.0, atol=1e-14)
    np.testing.assert_allclose(prof.ric_tangential, 0.0, atol=1e-12)
    assert prof.K == pytest.approx(0.0, abs=1e-12)


def test_hyperbolic_curvature_is_minus_one():
    prof = eval_curvature(HYP3, q=1, radii=RADII)
    np.testing.assert_allclose(prof.ric_radial, -2.0, rtol=1e-12)
    np.testing.assert_allclose(prof.ric_tangential, -2.0, rtol=1e-9)
    assert prof.K == pytest.approx(2.0, rel=1e-9)


def test_gaussian_plane_modified_tensor():
    # flat plane, f = r^2/2, q = 2: radial part is f'' - f'^2/q = 1 - r^2/2
    m = WeightedModel(2, euclidean_warp(), QUAD, 4.0)
    prof = eval_curvature(m, q=2, radii=np.array([1.0, 2.0]))
    np.testing.assert_allclose(prof.ricfq_radial, [0.5, -1.0], rtol=1e-12)


def test_tabulated_warp_reproduces_curvature():
    tab = tabulated_warp_from(hyperbolic_warp(1.0).value, radius=6.0)
    m = WeightedModel(3, tab, ZERO, 6.0)
    prof = eval_curvature(m, q=1, radii=np.linspace(0.5, 5.0, 12))
    np.testing.assert_allclose(prof.ric_radial, -2.0, rtol=1e-5)


@pytest.mark.parametrize(
    "model,q",
    [
        (WeightedModel(3, hyperbolic_warp(1.0), LOGP, 5.0), 1),
        (WeightedModel(3, hyperbolic_warp(1.0), QUAD, 5.0), 2),
        (WeightedModel(3, euclidean_warp(), LINA, 5.0), 3),
        (WeightedModel(2, euclidean_warp(), QUAD, 5.0), 2),
    ],
)
def test_warped_ricci_identity(model, q):
    """Claimed curvature of the collapsed product vs direct multiply-warped Ricci."""
    prod = WarpedProductModel(model, q=q, epsilon=0.37)
    report = verify_warped_ricci(prod, np.linspace(0.3, 4.5, 40))
    assert report.passed
    assert report.min_margin() > 0


def test_warped_ricci_mixed_block_vanishes():
    r = np.linspace(0.5, 3.0, 7)
    out = multiply_warped_ricci(
        phi=np.sinh(r), dphi=np.cosh(r), ddphi=np.sinh(r),
        rho=0.2 * np.exp(-r), drho=-0.2 * np.exp(-r), ddrho=0.2 * np.exp(-r),
        n=3, q=2,
    )
    np.testing.assert_allclose(out["mixed"], 0.0, atol=1e-15)


def test_drift_laplacian_radius_frozen_values():
    assert drift_laplacian_radius(HYP3, 1.0) == pytest.approx(2.0 / math.tanh(1.0), rel=1e-12)
    m = WeightedModel(3, euclidean_warp(), QUAD, 4.0)
    assert drift_laplacian_radius(m, 1.0) == pytest.approx(1.0, rel=1e-12)
    half = WeightedModel(1, euclidean_warp(), QUAD, 4.0)
    assert drift_laplacian_radius(half, 2.0) == pytest.approx(-2.0, rel=1e-12)


@pytest.mark.parametrize(
    "model,q",
    [
        (HYP3, 1),
        (WeightedModel(3, hyperbolic_warp(1.0), LOGP, 6.0), 2),
        (WeightedModel(3, euclidean_warp(), QUAD, 6.0), 1),
    ],
)
def test_laplacian_comparison_holds(model, q):
    report = verify_laplacian_comparison(model, q, np.linspace(0.1, 5.5, 200))
    assert report.passed, report.samples[:3]


def test_laplacian_comparison_sharp_on_hyperbolic():
    # weightless constant curvature: the classical (n-1)-dimensional form
    # is an equality, so its slack must sit at round-off
    report = verify_laplacian_comparison(HYP3, 1, np.linspace(0.1, 5.5, 200))
    assert report.constants["classical_min_slack"] <= 1e-6


def test_volume_frozen_values():
    ball = WeightedModel(3, euclidean_warp(), ZERO, 2.0)
    v, _ = weighted_volume(ball, 1.0)
    assert v == pytest.approx(4 * math.pi / 3, rel=1e-12)
    hyp2 = WeightedModel(2, hyperbolic_warp(1.0), ZERO, 2.0)
    v, _ = weighted_volume(hyp2, 1.0)
    assert v == pytest.approx(2 * math.pi * (math.cosh(1.0) - 1.0), rel=1e-12)
    gauss = WeightedModel(1, euclidean_warp(), QUAD, 12.0)
    v, _ = weighted_volume_total(gauss)
    assert v == pytest.approx(math.sqrt(2 * math.pi), rel=1e-9)


PAIRS = [(0.5, 1.0), (1.0, 2.0), (1.5, 3.0), (2.0, 5.0)]


@pytest.mark.parametrize(
    "model,q",
    [
        (HYP3, 1),
        (WeightedModel(3, hyperbolic_warp(1.0), LOGP, 6.0), 1),
        (WeightedModel(3, euclidean_warp(), LINA, 6.0), 2),
    ],
)
def test_volume_comparison_holds(model, q):
    report = verify_volume_comparison(model, q, PAIRS)
    assert report.passed


def test_volume_comparison_sharp_on_space_form():
    report = verify_volume_comparison(HYP3, 1, PAIRS)
    assert report.constants["classical_max_gap"] <= 1e-6


def test_displayed_volume_offset_is_frozen():
    a = displayed_volume_form_offset()
    b = displayed_volume_form_offset()
    assert a == b
    assert math.isfinite(a)


@pytest.mark.parametrize(
    "weight,expected",
    [
        (ZERO, "subexponential"),
        (QUAD, "finite"),
        (LINA, "finite"),
    ],
)
def test_growth_classification_euclidean(weight, expected):
    m = WeightedModel(3, euclidean_warp(), weight, 40.0)
    out = classify_volume_growth(m)
    assert out["classification"] == expected


def test_growth_classification_hyperbolic():
    m = WeightedModel(3, hyperbolic_warp(1.0), ZERO, 40.0)
    assert classify_volume_growth(m)["classification"] == "exponential"
    damped = WeightedModel(3, hyperbolic_warp(1.0), WeightFunction("linear_asymptotic", (3.0,)), 40.0)
    assert classify_volume_growth(damped)["classification"] != "exponential"


def test_asymptotic_nonnegativity_verdicts():
    flat = WeightedModel(3, euclidean_warp(), ZERO, 30.0)
    assert asymptotic_nonnegativity_profile(flat, q=1)["verdict"] is True
    # deficit decays like 6/r^2; clears the default threshold at this radius
    marginal = WeightedModel(3, euclidean_warp(), LOGP, 100.0)
    assert asymptotic_nonnegativity_profile(marginal, q=1)["verdict"] is True
    bad = WeightedModel(3, hyperbolic_warp(1.0), LOGP, 30.0)
    assert asymptotic_nonnegativity_profile(bad, q=1)["verdict"] is False
    # the collapse correction -f'^2/q ruins the Gaussian's positivity
    gauss = WeightedModel(3, euclidean_warp(), QUAD, 30.0)
    assert asymptotic_nonnegativity_profile(gauss, q=2)["verdict"] is False


@pytest.mark.parametrize(
    "model,q",
    [
        (HYP3, 1),
        (WeightedModel(3, euclidean_warp(), QUAD, 6.0), 2),
        (WeightedModel(2, hyperbolic_warp(0.5), LOGP, 6.0), 3),
    ],
)
def test_bochner_identity_radial(model, q):
    report = verify_bochner_radial(model, q, np.linspace(0.3, 5.0, 50))
    assert report.passed


def test_mean_inequality_random_sweep():
    report = check_mean_inequality()
    assert report.passed
    assert report.constants["equality_ray_verified"]
    assert report.constants["worst_margin"] >= -1e-12


def test_curvature_floor_radial_only():
    k_full = curvature_floor(HYP3, 1)
    k_rad = curvature_floor(HYP3, 1, radial_only=True)
    assert k_full == pytest.approx(2.0, rel=1e-9)
    assert k_rad == pytest.approx(2.0, rel=1e-9)
