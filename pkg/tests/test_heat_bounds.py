import functools
import math

import numpy as np
import pytest
from scipy.integrate import quad

from driftlab.heat_bounds import (
    BallVolumes,
    KernelWindow,
    li_yau_gaussian_slack,
    ricci_lower_K,
    varadhan_smalltime,
    verify_gaussian_lower,
    verify_gaussian_upper,
    verify_harnack,
    verify_li_yau,
    verify_phi_upper,
    verify_subexp_integral,
)
from driftlab.geometry import curvature_floor
from driftlab.models import (
    WeightedModel,
    WeightFunction,
    euclidean_warp,
    hyperbolic_warp,
    tabulated_warp_from,
    tabulated_weight_from,
)

ZERO = WeightFunction("zero")
FLAT2 = WeightedModel(2, euclidean_warp(), ZERO, 20.0, "dirichlet")
HYP3 = WeightedModel(3, hyperbolic_warp(1.0), WeightFunction("log_poly", (1.0,)), 20.0, "dirichlet")
CLONE3 = WeightedModel(
    3,
    tabulated_warp_from(HYP3.warp.value, 20.0),
    tabulated_weight_from(HYP3.weight.value, 20.0),
    20.0,
    "dirichlet",
)


@functools.lru_cache(maxsize=None)
def window(model: WeightedModel, seed: int = 20260819) -> KernelWindow:
    return KernelWindow.build(model, 1, seed=seed)


# ---------------------------------------------------------------- volumes


def test_flat_ball_volume_any_center():
    bv = BallVolumes(WeightedModel(3, euclidean_warp(), ZERO, 20.0, "dirichlet"))
    want = 4.0 * math.pi / 3.0
    # c = 0.3 exercises the pole-covering branch, c = 15 the pure cap branch
    for c in (0.0, 0.3, 2.0, 15.0):
        assert bv.volume(c, 1.0) == pytest.approx(want, rel=1e-12), c


def test_flat_disk_volume():
    bv = BallVolumes(FLAT2)
    # the n = 2 cap angle goes through arcsin; measured error 7.8e-6 at c = 3
    for c in (0.0, 0.4, 3.0):
        assert bv.volume(c, 0.7) == pytest.approx(math.pi * 0.49, rel=2e-5), c


def test_hyperbolic_ball_volume_far_center():
    bv = BallVolumes(WeightedModel(3, hyperbolic_warp(1.0), ZERO, 170.0, "dirichlet"))
    want = math.pi * (math.sinh(2.0) - 2.0)
    # homogeneity: the same value at the pole and 169 units out, where the
    # naive cap-cosine would round to 1 and lose the ball entirely
    for c in (0.0, 0.5, 169.0):
        assert bv.volume(c, 1.0) == pytest.approx(want, rel=1e-13), c


def test_halfline_interval_volumes():
    bq = BallVolumes(
        WeightedModel(1, euclidean_warp(), WeightFunction("quadratic", (0.5,)), 20.0, "neumann")
    )
    for c, s in ((0.3, 1.0), (5.0, 1.0)):
        lo = max(0.0, c - s)
        want = 2.0 * math.sqrt(math.pi / 2.0) * (
            math.erf((c + s) / math.sqrt(2.0)) - math.erf(lo / math.sqrt(2.0))
        )
        assert bq.volume(c, s) == pytest.approx(want, rel=1e-12), c


def test_ball_must_stay_inside_domain():
    bv = BallVolumes(FLAT2)
    with pytest.raises(ValueError):
        bv.volume(19.8, 1.0)


def test_volumes_reject_unrecognized_warp():
    warp = tabulated_warp_from(lambda r: np.sinh(r) + 0.1 * r**3, 10.0)
    model = WeightedModel(3, warp, ZERO, 10.0, "dirichlet")
    with pytest.raises(ValueError):
        BallVolumes(model)


# ---------------------------------------------------------------- window


def test_window_build_is_deterministic():
    w1 = KernelWindow.build(FLAT2, 1)
    w2 = KernelWindow.build(FLAT2, 1)
    assert w1.H.tobytes() == w2.H.tobytes()
    assert w1.r.tobytes() == w2.r.tobytes()
    assert np.array_equal(w1.cal, w2.cal)


def test_ricci_floor_normalization():
    q = 1
    m = HYP3
    assert ricci_lower_K(m, q) == pytest.approx(curvature_floor(m, q) / (m.n + q - 1))
    assert ricci_lower_K(FLAT2, 1) == 0.0


# ---------------------------------------------------------------- envelopes


def test_gaussian_upper_flat():
    rep = verify_gaussian_upper(window(FLAT2))
    assert rep.passed
    assert rep.constants["C4"] == 5.0
    assert min(s["margin"] for s in rep.samples) > 0.0


def test_gaussian_lower_flat():
    rep = verify_gaussian_lower(window(FLAT2))
    assert rep.passed
    assert rep.constants["C7"] == 3.5
    assert min(s["margin"] for s in rep.samples) > 0.0


def test_gaussian_envelopes_transfer_to_clone():
    base = window(HYP3)
    clone = window(CLONE3, seed=20260819 + 7)
    # same geometry resampled: constants frozen on the base model must hold
    assert clone.K == pytest.approx(base.K, abs=1e-4)
    up = verify_gaussian_upper(base, heldout=clone)
    lo = verify_gaussian_lower(base, heldout=clone)
    assert up.passed and lo.passed
    assert up.constants["heldout_min_margin"] > 0.0
    assert lo.constants["heldout_min_margin"] > 0.0


def test_phi_upper_alpha_degrades_with_spatial_decay():
    rep = verify_phi_upper(window(FLAT2))
    assert rep.passed
    alphas = rep.constants["alphas"]
    assert all(a2 <= a1 + 0.05 for a1, a2 in zip(alphas, alphas[1:]))
    # demanding more spatial decay must genuinely cost time decay here
    assert alphas[-1] < alphas[0] - 1.0


def test_phi_upper_transfers_to_clone():
    rep = verify_phi_upper(window(HYP3), heldout=window(CLONE3, seed=20260819 + 7))
    assert rep.passed
    assert all(s["heldout_min_margin"] > 0.0 for s in rep.samples)


# ---------------------------------------------------------------- pointwise


def test_li_yau_flat_no_fiber_matches_closed_form():
    rep = verify_li_yau(FLAT2, 0, n_cells=1024, K=0.0)
    assert rep.passed
    # first kept node sits at r = 0.215 (grid offset above the 0.2 window edge)
    for s in rep.samples:
        want = li_yau_gaussian_slack(2, 0.215, s["t"])
        assert s["margin"] == pytest.approx(want, rel=0.01), s["t"]
        assert s["n_fail"] == 0


def test_li_yau_slack_formula():
    r = np.linspace(0.0, 5.0, 11)
    for t in (0.1, 1.0, 4.0):
        slack = li_yau_gaussian_slack(3, r, t)
        assert np.all(slack >= 0.0)
        assert slack[0] == pytest.approx(3.0 / t)
        assert li_yau_gaussian_slack(3, 2.0, t, alpha=2.0) == pytest.approx(
            3.0 / t + 1.0 / t**2
        )


def test_li_yau_halfline_margin_tracks_dimension():
    m = WeightedModel(1, euclidean_warp(), ZERO, 20.0, "neumann")
    rep = verify_li_yau(m, 1, n_cells=1024)
    assert rep.passed
    by_t = {s["t"]: s for s in rep.samples}
    # min over the window of RHS - LHS = (D alpha^2 - alpha n)/2t + (alpha-1) r^2/4t^2
    assert by_t[1.0]["margin"] == pytest.approx(3.0116, rel=5e-3)
    # the far field is flagged rather than scored
    assert all(s["n_inconclusive"] > 0 for s in rep.samples)
    assert all(s["n_fail"] == 0 for s in rep.samples)


def test_li_yau_curved_and_weighted():
    for model in (
        HYP3,
        WeightedModel(2, euclidean_warp(), WeightFunction("quadratic", (0.5,)), 20.0, "neumann"),
    ):
        rep = verify_li_yau(model, 1, n_cells=1024)
        assert rep.passed, model.label()
        assert all(s["n_fail"] == 0 for s in rep.samples)
        assert min(s["margin"] for s in rep.samples) > 0.0


def test_harnack_two_point():
    for m in (FLAT2, HYP3):
        rep = verify_harnack(window(m))
        assert rep.passed, m.label()
        assert rep.min_margin() >= -1e-4


# ---------------------------------------------------------------- integrals


def test_subexp_integral_matches_quadrature():
    m = WeightedModel(1, euclidean_warp(), ZERO, 40.0, "neumann")
    rep = verify_subexp_integral(m, 1, 1.0, cells_per_unit=32)
    assert rep.passed
    b = BallVolumes(m)
    oracle, _ = quad(lambda r: b.phi(0.0) * b.phi(r) * math.exp(-r) * 2.0, 0.0, 39.0, limit=200)
    assert rep.constants["I_final"] == pytest.approx(oracle, rel=5e-4)


def test_subexp_verdict_tracks_volume_entropy():
    hyp = WeightedModel(3, hyperbolic_warp(1.0), ZERO, 170.0, "dirichlet")
    # phi ~ e^{-r}, area ~ e^{2r}: converges iff beta > 1
    assert verify_subexp_integral(hyp, 1, 2.5).passed
    assert not verify_subexp_integral(hyp, 1, 0.5).passed
    gauss = WeightedModel(1, euclidean_warp(), WeightFunction("quadratic", (0.5,)), 24.0, "neumann")
    assert verify_subexp_integral(gauss, 1, 1.0).passed


def test_subexp_is_explicit_about_center_choice():
    rep = verify_subexp_integral(FLAT2, 1, 1.0)
    assert not rep.hard
    assert any("pole-anchored" in w for w in rep.warnings)
    with pytest.raises(ValueError):
        verify_subexp_integral(FLAT2, 1, 1.0, r_stop=25.0)


def test_varadhan_slope_near_one():
    rep = varadhan_smalltime(WeightedModel(2, euclidean_warp(), ZERO, 2.0, "dirichlet"))
    assert rep.passed
    for s in rep.samples:
        assert abs(s["slope"] - 1.0) < 1e-3
