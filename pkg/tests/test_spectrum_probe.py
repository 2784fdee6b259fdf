import math
from fractions import Fraction

import numpy as np
import pytest

from driftlab.models import (
    WeightedModel,
    WeightFunction,
    euclidean_warp,
    hyperbolic_warp,
)
from driftlab.operators import refine_eigenvalues
from driftlab.spectrum_probe import (
    AnnulusCutoff,
    certify_interval,
    delta_r_integral_check,
    lp_hypothesis_certificate,
    weyl_quotient,
    weyl_quotient_bound,
)

ZERO = WeightFunction("zero")
LOGP = WeightFunction("log_poly", (1.0,))
CONFINING = WeightFunction("quadratic", (0.5,))

SWEEP = (20.0, 40.0, 80.0, 160.0)
FLAT1 = WeightedModel(1, euclidean_warp(), ZERO, 680.0, "neumann")
FLAT3 = WeightedModel(3, euclidean_warp(), ZERO, 680.0, "dirichlet")
LOGP2 = WeightedModel(2, euclidean_warp(), LOGP, 680.0, "dirichlet")
OU_WIDE = WeightedModel(1, euclidean_warp(), CONFINING, 680.0, "neumann")


# ---------------------------------------------------------------- cutoff


def test_cutoff_profile_shape():
    cut = AnnulusCutoff(10.0)
    assert cut.support == (5.0, 40.0)
    assert cut.plateau == (10.0, 20.0)
    r = np.array([4.0, 5.0, 10.0, 15.0, 20.0, 40.0, 41.0])
    assert np.allclose(cut.value(r), [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    # C^1 across every knot
    for knot in (5.0, 10.0, 20.0, 40.0):
        lo, hi = knot - 1e-9, knot + 1e-9
        assert abs(cut.value(hi) - cut.value(lo)) < 1e-8
        assert abs(cut.d1(hi) - cut.d1(lo)) < 1e-7


def test_cutoff_derivative_bounds_are_sharp():
    cut = AnnulusCutoff(7.0)
    r = np.linspace(3.5, 28.0, 400_001)
    bounds = cut.derivative_bounds()
    sup1 = np.max(np.abs(cut.d1(r)))
    sup2 = np.max(np.abs(cut.d2(r)))
    assert sup1 <= bounds["d1"] * (1.0 + 1e-12)
    assert sup2 <= bounds["d2"] * (1.0 + 1e-12)
    # the closed-form bounds are attained, not padded
    assert sup1 > 0.999 * bounds["d1"]
    assert sup2 > 0.999 * bounds["d2"]


def test_cutoff_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        AnnulusCutoff(0.0)


# ---------------------------------------------------------------- quotients


def flat_line_quotient_oracle(R: float) -> float:
    # n = 1, f = 0, lam = 0: the density drops out and
    # Q^2 = int chi''^2 / int chi^2 with exact quintic-step moments
    # ||s||^2 = 181/462 and ||s''||^2 = 120/7 on [0, 1].
    s2 = Fraction(181, 462)
    d2 = Fraction(120, 7)
    num = d2 * (Fraction(8) + Fraction(1, 8))
    den = 1 + Fraction(5, 2) * s2
    return math.sqrt(float(num / den)) / R**2


def test_flat_line_quotient_matches_closed_form():
    for R in (20.0, 160.0):
        q = weyl_quotient(FLAT1, 0.0, R)
        assert q == pytest.approx(flat_line_quotient_oracle(R), rel=1e-10), R


def test_quotient_is_scale_invariant():
    q1 = weyl_quotient(FLAT1, 1.0, 40.0)
    q2 = weyl_quotient(FLAT1, 1.0, 40.0, amplitude=3.7)
    assert abs(q1 - q2) <= 1e-14 * q1


def test_quotient_respects_apriori_bound():
    for model in (FLAT1, LOGP2):
        for lam in (0.0, 1.0):
            q = weyl_quotient(model, lam, 40.0)
            bound = weyl_quotient_bound(model, lam, 40.0)
            assert q <= bound, (model.label(), lam)


def test_quotient_parts_are_reported():
    q, parts = weyl_quotient(LOGP2, 1.0, 20.0, return_parts=True)
    total = parts["num_amplitude"] + 1.0 * parts["num_phase"]
    assert q == pytest.approx(math.sqrt(total / parts["den"]), rel=1e-14)
    assert parts["neval"] > 0


# ---------------------------------------------------------------- certify


def test_certify_flat_and_log_poly_models():
    for model in (FLAT3, LOGP2):
        rep = certify_interval(model, 1, R_values=SWEEP)
        assert rep.overall, model.label()
        assert not rep.advisory
        for lam in rep.lam_values:
            assert rep.verdicts[lam], (model.label(), lam)
            assert rep.exponents[lam] <= -0.4
        # lam = 0 leaves only the chi'' term, one extra power of decay
        assert rep.exponents[0.0] == pytest.approx(-2.0, abs=0.01)


def test_confining_weight_fails_certify():
    rep = certify_interval(OU_WIDE, 1, R_values=SWEEP)
    assert not rep.overall
    assert rep.advisory
    assert not any(rep.verdicts.values())
    # measured growth exponent +1.94 across the sweep
    assert all(e > 1.5 for e in rep.exponents.values())
    assert any("advisory" in note for note in rep.notes)


def test_negative_control_separation():
    q_ou = [weyl_quotient(OU_WIDE, 0.7, R) for R in SWEEP]
    q_lp = [weyl_quotient(LOGP2, 1.0, R) for R in SWEEP]
    assert all(b > a for a, b in zip(q_ou, q_ou[1:]))
    # measured 210x at this sweep; 10x is the acceptance line
    assert min(q_ou) / max(q_lp) >= 10.0


def test_report_rows_are_csv_ready():
    rep = certify_interval(LOGP2, 1, lam_values=(0.0, 1.0), R_values=SWEEP)
    rows = rep.rows()
    assert len(rows) == 2 * len(SWEEP)
    assert rows[0] == (0.0, SWEEP[0], rep.quotients[0.0][0])
    d = rep.to_dict()
    assert d["overall"] is True
    assert d["policy"]["exponent_cap"] == -0.4


def test_hermite_oracle():
    # half-line confining weight with even-mode boundary condition:
    # eigenvalues 0, 2, 4, 6, 8
    model = WeightedModel(1, euclidean_warp(), CONFINING, 12.0, "neumann")
    ev = refine_eigenvalues(model, 5, 512)["extrapolated"]
    assert abs(ev[0]) <= 1e-8
    for k in range(1, 5):
        assert ev[k] == pytest.approx(2.0 * k, rel=1e-6), k


# ---------------------------------------------------------------- budgets


def test_flat_annulus_budget_matches_closed_form():
    model = WeightedModel(2, euclidean_warp(), ZERO, 80.0, "dirichlet")
    rep = delta_r_integral_check(model, 0.1, 2.0, (10.0, 20.0, 40.0))
    # |Delta_f r| = 1/r against 2 pi r dr: the annulus integral is exactly
    # 2 pi (r2 - r1)
    for s in rep.samples:
        assert s["lhs"] == pytest.approx(2.0 * math.pi * (s["r2"] - 2.0), rel=1e-12)
    assert rep.samples[0]["margin"] < 0.0
    assert rep.constants["threshold"] == 20.0
    assert rep.passed


def test_line_budget_is_exactly_zero():
    model = WeightedModel(1, euclidean_warp(), ZERO, 80.0, "dirichlet")
    rep = delta_r_integral_check(model, 0.1, 2.0, (10.0, 40.0))
    assert all(s["lhs"] == 0.0 for s in rep.samples)
    assert rep.passed


def test_finite_volume_budget_uses_weighted_boundary_area():
    model = WeightedModel(1, euclidean_warp(), CONFINING, 24.0, "neumann")
    rep = delta_r_integral_check(model, 0.1, 1.0, (3.0, 5.0, 8.0))
    assert rep.constants["volume_case"] == "finite"
    assert all(s["margin"] > 0.0 for s in rep.samples)
    assert any("weighted" in w for w in rep.warnings)


# ---------------------------------------------------------------- certificates


def test_lp_certificate_grants_log_poly():
    model = WeightedModel(3, euclidean_warp(), LOGP, 170.0, "dirichlet")
    cert = lp_hypothesis_certificate(model, 2)
    assert cert.passed
    assert not cert.constants["K_diverging"]
    assert cert.constants["growth_classification"] == "subexponential"
    assert cert.constants["integral_converged"]
    assert not any(n.startswith("denied") for n in cert.notes)


def test_lp_certificate_denies_exponential_growth():
    model = WeightedModel(3, hyperbolic_warp(1.0), ZERO, 170.0, "dirichlet")
    cert = lp_hypothesis_certificate(model, 2, beta=0.5)
    assert not cert.passed
    assert not cert.constants["K_diverging"]
    assert cert.constants["growth_classification"] == "exponential"
    assert any("exponential" in n for n in cert.notes if n.startswith("denied"))


def test_lp_certificate_denies_confining_weight_with_divergence_table():
    model = WeightedModel(1, euclidean_warp(), CONFINING, 24.0, "neumann")
    cert = lp_hypothesis_certificate(model, 1)
    assert not cert.passed
    assert cert.constants["K_diverging"]
    # K on the full ball is sup of r^2 - 1: exactly R^2 - 1
    assert cert.constants["K_table"]["1R"] == pytest.approx(575.0, rel=1e-6)
    assert cert.constants["K_ratio_last_doubling"] > 1.5


# ---------------------------------------------------------------- validation


def test_quotient_input_validation():
    with pytest.raises(ValueError):
        weyl_quotient(FLAT1, 1.0, 200.0)  # support would need radius 800
    with pytest.raises(ValueError):
        weyl_quotient(FLAT1, -0.5, 20.0)


def test_certify_input_validation():
    with pytest.raises(ValueError):
        certify_interval(FLAT3, 1, R_values=(10.0, 20.0, 40.0))
    with pytest.raises(ValueError):
        certify_interval(FLAT3, 1, R_values=(10.0, 20.0, 40.0, 120.0))


def test_budget_input_validation():
    model = WeightedModel(2, euclidean_warp(), ZERO, 80.0, "dirichlet")
    with pytest.raises(ValueError):
        delta_r_integral_check(model, 0.1, 2.0, (10.0, 79.5))
    with pytest.raises(ValueError):
        delta_r_integral_check(model, 0.1, 0.0, (10.0,))
    with pytest.raises(ValueError):
        delta_r_integral_check(model, 0.1, 2.0, (40.0, 10.0))
