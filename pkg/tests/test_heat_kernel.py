import math

import numpy as np
import pytest

from driftlab.models import WeightedModel, WeightFunction, euclidean_warp, hyperbolic_warp
from driftlab.heat_kernel import (
    build_spectral_kernel,
    crank_nicolson_kernel,
    exact_gaussian_kernel,
    richardson_kernel_value,
    verify_exhaustion_stability,
    verify_kernel_routes_agree,
    verify_mass_behavior,
    verify_semigroup_crosscheck,
    verify_weak_initial_condition,
)

ZERO = WeightFunction("zero")
FLAT3 = WeightedModel(3, euclidean_warp(), ZERO, 20.0, "dirichlet")


def test_flat_kernel_matches_gaussian():
    """R = 20 makes the boundary invisible at t <= 1 (image terms ~ e^{-R^2/t})."""
    kern = build_spectral_kernel(FLAT3, 2048, t_min=0.1)
    # single-grid values carry the O(h^2) bias (measured <= 6e-4 here); the
    # r = 2 probe at t = 0.1 sits ten kernel widths out and is excluded
    cases = [(0.1, (0.5, 1.0)), (0.25, (0.5, 1.0, 2.0)), (1.0, (0.5, 1.0, 2.0))]
    for t, probes in cases:
        for r in probes:
            got = float(kern.evaluate(r, t))
            want = exact_gaussian_kernel(3, r, t)
            assert got == pytest.approx(want, rel=1e-3), (r, t)


def test_richardson_tightens_the_flat_kernel():
    want = exact_gaussian_kernel(3, 0.25, 0.25)
    got, diag = richardson_kernel_value(FLAT3, 0.25, 0.25, 1024)
    # near the pole the grid bias is largest; the local order is a bit below
    # 2, so extrapolation cuts the fine-grid error ~10x rather than killing it
    assert abs(diag["fine"] - want) / want > 5 * abs(got - want) / want
    assert got == pytest.approx(want, rel=1e-4)
    assert diag["tail_estimate"] < 1e-10


def test_frozen_value_at_unit_distance():
    # (4 pi t)^{-3/2} e^{-1} at t = 1/4 equals pi^{-3/2} e^{-1}
    want = math.pi ** (-1.5) * math.exp(-1.0)
    assert exact_gaussian_kernel(3, 1.0, 0.25) == pytest.approx(want, rel=1e-15)
    got, _ = richardson_kernel_value(FLAT3, 1.0, 0.25, 1024)
    assert got == pytest.approx(want, rel=1e-4)


def test_tail_estimate_majorizes_truncation():
    op_kern_small = build_spectral_kernel(FLAT3, 1024, t_min=0.25, k_start=48)
    kern_big = build_spectral_kernel(FLAT3, 1024, t_min=0.25, k_start=192)
    t = 0.25
    small_k = op_kern_small.n_modes
    if kern_big.n_modes > small_k:
        # actual dropped-mode contribution at the pole
        lam = kern_big.dec.eigenvalues[small_k:]
        amp = kern_big.dec.pole_values[small_k:]
        actual = float(np.abs(np.exp(-lam * t) * amp * amp).sum())
        assert actual <= op_kern_small.tail_estimate(t) * 1.001


def test_min_reliable_time_is_consistent():
    kern = build_spectral_kernel(FLAT3, 1024, t_min=0.25)
    t_min = kern.min_reliable_time(1e-8)
    assert 0 < t_min < 0.25
    assert kern._reliable(t_min, 1e-8)
    assert not kern._reliable(t_min / 2.0, 1e-8)


def test_neumann_mass_is_conserved():
    m = WeightedModel(3, euclidean_warp(), WeightFunction("quadratic", (0.5,)), 12.0, "neumann")
    report = verify_mass_behavior(m, [0.05, 0.2, 1.0, 5.0])
    assert report.passed
    for s in report.samples:
        assert s["mass"] == pytest.approx(1.0, abs=1e-10)


def test_dirichlet_mass_decays():
    report = verify_mass_behavior(FLAT3, [0.05, 1.0, 100.0, 400.0], n_cells=512)
    assert report.passed
    masses = [s["mass"] for s in report.samples if "mass" in s]
    assert masses[-1] < 0.01  # essentially all mass lost through the boundary


def test_crank_nicolson_agrees_with_spectral_route():
    report = verify_kernel_routes_agree(FLAT3, [0.5, 1.0, 2.0], [0.1, 0.25, 1.0], n_cells=1024)
    assert report.passed
    assert report.min_margin() > 0


def test_crank_nicolson_second_order_in_time():
    t = 0.5
    kern = build_spectral_kernel(FLAT3, 512, t_min=t)
    target = kern.nodal_values(t)
    i = int(np.argmin(np.abs(kern.dec.dof_radii - 1.0)))
    errs = []
    for steps in (50, 100, 200):
        _, u = crank_nicolson_kernel(FLAT3, 512, t, steps)
        errs.append(abs(u[i] - target[i]))
    order1 = math.log2(errs[0] / errs[1])
    order2 = math.log2(errs[1] / errs[2])
    assert order1 > 1.6 and order2 > 1.6


def test_exhaustion_stability_hyperbolic():
    m = WeightedModel(3, hyperbolic_warp(1.0), ZERO, 20.0, "dirichlet")
    report = verify_exhaustion_stability(m)
    assert report.passed
    assert max(s["rel_diff"] for s in report.samples) < 1e-8


def test_weighted_kernel_positivity():
    m = WeightedModel(3, hyperbolic_warp(1.0), WeightFunction("log_poly", (1.0,)), 15.0, "dirichlet")
    kern = build_spectral_kernel(m, 1024, t_min=0.2)
    vals = kern.evaluate(np.linspace(0.0, 6.0, 40), 0.5)
    assert np.all(vals > 0)


def test_semigroup_property_through_cn_composition():
    """CN for t, restarted from its own state, lands on CN for 2t."""
    t = 0.4
    radii, one_go = crank_nicolson_kernel(FLAT3, 512, 2 * t, 200)
    # compose: run to t, then use the state as data for another t
    from driftlab.operators import Grid1D, assemble
    from driftlab.heat_kernel import _banded, _tridiag_apply
    from scipy.linalg import solve_banded

    op = assemble(FLAT3, Grid1D.uniform(20.0, 512))
    _, u_half = crank_nicolson_kernel(FLAT3, 512, t, 100)
    sqrt_m = np.sqrt(op.weights)
    v = u_half * sqrt_m
    dt = t / 100
    ab = _banded(op.diag, op.offdiag, scale=0.5 * dt, shift=1.0)
    for _ in range(100):
        rhs = v - 0.5 * dt * _tridiag_apply(op.diag, op.offdiag, v)
        v = solve_banded((1, 1), ab, rhs)
    composed = v / sqrt_m
    # the one-go run smooths its start differently; agreement is O(dt^2)
    scale = np.max(np.abs(one_go))
    assert np.max(np.abs(composed - one_go)) / scale < 5e-5


def test_spectral_state_steps_to_spectral_state():
    """CN from the t0 snapshot must land on the t1 snapshot, on nested domains."""
    m = WeightedModel(2, euclidean_warp(), ZERO, 10.0, "dirichlet")
    rep = verify_semigroup_crosscheck(m, 0.1, 0.2)
    assert rep.passed
    for s in rep.samples:
        assert s["sup_err"] <= 1e-6
    gaps = rep.constants["interior_gaps"]
    assert gaps[-1] <= max(gaps[0], 1e-13)


def test_weak_initial_condition_recovers_pole_value():
    m = WeightedModel(2, euclidean_warp(), ZERO, 10.0, "dirichlet")
    rep = verify_weak_initial_condition(m)
    assert rep.passed
    for s in rep.samples:
        errs = s["errors"]
        assert errs[-1] <= errs[0]
    ou = WeightedModel(1, euclidean_warp(), WeightFunction("quadratic", (0.5,)), 12.0, "neumann")
    assert verify_weak_initial_condition(ou).passed


def test_constant_data_is_stationary_under_neumann():
    # the generator annihilates constants exactly, so every CN step fixes them
    from driftlab.operators import Grid1D, assemble

    for m in (
        WeightedModel(2, euclidean_warp(), ZERO, 20.0, "neumann"),
        WeightedModel(3, hyperbolic_warp(1.0), WeightFunction("log_poly", (1.0,)), 15.0, "neumann"),
    ):
        op = assemble(m, Grid1D.uniform(m.radius, 512))
        assert np.max(np.abs(op.apply(np.ones(op.n_dof)))) == 0.0


def test_ou_kernel_longtime_limit():
    """Quadratic weight, Neumann: H(0, 0, t) -> 1/total weighted volume."""
    m = WeightedModel(1, euclidean_warp(), WeightFunction("quadratic", (0.5,)), 12.0, "neumann")
    kern = build_spectral_kernel(m, 1024, t_min=1.0)
    want = 1.0 / (2.0 * math.sqrt(math.pi / 2.0) * math.erf(12.0 / math.sqrt(2.0)))
    assert kern.pole_value(8.0) == pytest.approx(want, rel=1e-6)
