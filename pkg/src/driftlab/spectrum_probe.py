"""Annulus probes for the low end of the essential spectrum.

A compactly supported radial bump carried on an expanding annulus turns
"(Delta_f + lam) u is small relative to u" into a computable residual
quotient.  Decay of that quotient across doublings of the annulus radius is
numerical evidence that lam cannot be separated from the spectrum; growth on
a confining weight is evidence that it can.  The probes certify only the
quotient decay they measure, never the operator-theoretic statement itself.

Everything is radial and one dimensional: quotients come from adaptive
quadrature against the weighted area density, with the density evaluated in
log form so that confining weights (which collapse the annulus mass into a
thin boundary layer) stay inside floating-point range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    asymptotic_nonnegativity_profile,
    classify_volume_growth,
    curvature_floor,
    drift_laplacian_radius,
    weighted_volume,
    weighted_volume_total,
)
from .heat_bounds import verify_subexp_integral
from .models import WeightedModel
from .quadrature import adaptive_quad, unit_sphere_area
from .reports import BoundReport

__all__ = [
    "AnnulusCutoff",
    "EssentialSpectrumReport",
    "weyl_quotient",
    "weyl_quotient_bound",
    "certify_interval",
    "delta_r_integral_check",
    "lp_hypothesis_certificate",
]

# extrema of the quintic smoothstep 6x^5 - 15x^4 + 10x^3 on [0, 1]
_STEP_D1_MAX = 1.875
_STEP_D2_MAX = 10.0 * math.sqrt(3.0) / 3.0


def _step(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 + x * (6.0 * x - 15.0))


def _step_d1(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    xm = x[m]
    out[m] = 30.0 * xm**2 * (xm - 1.0) ** 2
    return out


def _step_d2(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    xm = x[m]
    out[m] = 60.0 * xm * (2.0 * xm - 1.0) * (xm - 1.0)
    return out


@dataclass(frozen=True)
class AnnulusCutoff:
    """C^2 bump riding the annulus [R, 2R]: quintic rise on [R/2, R], flat
    plateau, quintic fall on [2R, 4R].

    The smoothstep keeps the derivatives uniformly small relative to the
    annulus scale: sup|chi'| = 3.75/R and sup|chi''| ~ 23.1/R^2, so every
    residual term shrinks as the annulus expands.
    """

    R: float

    def __post_init__(self):
        if self.R <= 0.0:
            raise ValueError(f"annulus radius must be positive, got {self.R}")

    @property
    def support(self) -> tuple[float, float]:
        return 0.5 * self.R, 4.0 * self.R

    @property
    def plateau(self) -> tuple[float, float]:
        return self.R, 2.0 * self.R

    def derivative_bounds(self) -> dict:
        return {
            "d1": _STEP_D1_MAX / (0.5 * self.R),
            "d2": _STEP_D2_MAX / (0.5 * self.R) ** 2,
        }

    def value(self, r):
        r = np.asarray(r, dtype=float)
        rise = _step((r - 0.5 * self.R) / (0.5 * self.R))
        fall = _step((4.0 * self.R - r) / (2.0 * self.R))
        return np.minimum(rise, fall)

    def d1(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        w = 0.5 * self.R
        m = (r > 0.5 * self.R) & (r < self.R)
        out[m] = _step_d1((r[m] - 0.5 * self.R) / w) / w
        w = 2.0 * self.R
        m = (r > 2.0 * self.R) & (r < 4.0 * self.R)
        out[m] = -_step_d1((4.0 * self.R - r[m]) / w) / w
        return out

    def d2(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        w = 0.5 * self.R
        m = (r > 0.5 * self.R) & (r < self.R)
        out[m] = _step_d2((r[m] - 0.5 * self.R) / w) / w**2
        w = 2.0 * self.R
        m = (r > 2.0 * self.R) & (r < 4.0 * self.R)
        out[m] = _step_d2((4.0 * self.R - r[m]) / w) / w**2
        return out


def _scalar_cutoff(cut: AnnulusCutoff, r: float):
    """(chi, chi', chi'') at one radius, cheap enough for quad callbacks."""
    R = cut.R
    if r <= 0.5 * R or r >= 4.0 * R:
        return 0.0, 0.0, 0.0
    if r < R:
        w = 0.5 * R
        x = (r - 0.5 * R) / w
        sgn = 1.0
    elif r <= 2.0 * R:
        return 1.0, 0.0, 0.0
    else:
        w = 2.0 * R
        x = (4.0 * R - r) / w
        sgn = -1.0
    s = x**3 * (10.0 + x * (6.0 * x - 15.0))
    d1 = 30.0 * x * x * (x - 1.0) ** 2
    d2 = 60.0 * x * (2.0 * x - 1.0) * (x - 1.0)
    return s, sgn * d1 / w, d2 / w**2


def _log_area_density(model: WeightedModel, r):
    """log of the weighted sphere area, stable where the direct value under-
    or overflows."""
    r = np.asarray(r, dtype=float)
    out = -np.asarray(model.weight.value(r), dtype=float)
    if model.n == 1:
        return out + math.log(2.0)
    return (
        out
        + (model.n - 1) * np.log(np.asarray(model.warp.value(r), dtype=float))
        + math.log(unit_sphere_area(model.n - 1))
    )


def _density_shift(model: WeightedModel, lo: float, hi: float) -> float:
    logd = _log_area_density(model, np.linspace(lo, hi, 2049))
    if not np.all(np.isfinite(logd)):
        raise ValueError(
            "weighted area density is not finite across the annulus "
            f"[{lo:g}, {hi:g}]"
        )
    return float(logd.max())


def _edge_ladders(lo: float, hi: float, inner: tuple) -> list:
    """Breakpoints crowding both support edges plus the given interior knots.

    Confining weights concentrate the annulus mass within O(1/R) of the inner
    edge, exponential warps within O(1) of the outer one; a geometric ladder
    at each edge makes the first quadrature pass see those layers.
    """
    span = hi - lo
    ladder = span * np.geomspace(1e-8, 1.0, 33)[:-1]
    pts = np.concatenate([lo + ladder, hi - ladder, np.asarray(inner, dtype=float)])
    return np.unique(pts).tolist()


def _model_knots(model: WeightedModel, lo: float, hi: float) -> np.ndarray:
    """Spline knots inside (lo, hi); tabulated pieces are only C^2 there."""
    knots = []
    for piece in (model.warp, model.weight):
        if piece.family == "tabulated":
            knots.extend(piece.nodes)
    arr = np.asarray(knots, dtype=float)
    return arr[(arr > lo) & (arr < hi)]


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _composite_quad(fn, breakpoints: np.ndarray):
    """Fixed 12-point Gauss on every panel; fn must accept arrays.

    Used for tabulated models: the integrand is analytic between spline
    knots but only C^1 across them, which defeats the adaptive estimator's
    error model once panels straddle hundreds of kinks.
    """
    a = breakpoints[:-1]
    b = breakpoints[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    vals = np.asarray(fn(nodes), dtype=float).reshape(a.size, _GL_NODES.size)
    return float(np.dot(vals @ _GL_WEIGHTS, half)), nodes.size


def weyl_quotient(
    model: WeightedModel,
    lam: float,
    R: float,
    *,
    amplitude: float = 1.0,
    return_parts: bool = False,
):
    """Residual quotient ||(Delta_f + lam) u||_w / ||u||_w for the annulus probe.

    The probe is u = chi(r) w(r) with the unit carrier w = e^{i sqrt(lam) r},
    chi the AnnulusCutoff at R.  Since w'' + lam w = 0, the residual has an
    amplitude component (chi'' + h chi') w and a phase component
    i sqrt(lam) (2 chi' + h chi) w, where h = Delta_f r is the radial drift
    term.  The two components are integrated separately against the weighted
    area density and combined as moduli; `amplitude` rescales chi and must
    leave the quotient unchanged (homogeneity check).
    """
    if lam < 0.0:
        raise ValueError(f"spectral parameter must be >= 0, got {lam}")
    cut = AnnulusCutoff(R)
    lo, hi = cut.support
    if hi > model.radius * (1.0 + 1e-12):
        raise ValueError(
            f"annulus support [{lo:g}, {hi:g}] exceeds the model radius "
            f"{model.radius:g}"
        )
    shift = _density_shift(model, lo, hi)
    points = _edge_ladders(lo, hi, (R, 2.0 * R))

    def dens(r: float) -> float:
        return math.exp(float(_log_area_density(model, r)) - shift)

    def den_fn(r: float) -> float:
        c, _, _ = _scalar_cutoff(cut, r)
        if c == 0.0:
            return 0.0
        c *= amplitude
        return c * c * dens(r)

    def amp_fn(r: float) -> float:
        c, c1, c2 = _scalar_cutoff(cut, r)
        if c == 0.0 and c1 == 0.0 and c2 == 0.0:
            return 0.0
        h = float(drift_laplacian_radius(model, r))
        a = amplitude * (c2 + h * c1)
        return a * a * dens(r)

    def phase_fn(r: float) -> float:
        c, c1, _ = _scalar_cutoff(cut, r)
        if c == 0.0 and c1 == 0.0:
            return 0.0
        h = float(drift_laplacian_radius(model, r))
        b = amplitude * (2.0 * c1 + h * c)
        return b * b * dens(r)

    knots = _model_knots(model, lo, hi)
    if knots.size:
        bps = np.unique(np.concatenate([[lo, hi], points, knots]))

        def dens_v(r):
            return np.exp(_log_area_density(model, r) - shift)

        def den_v(r):
            c = amplitude * cut.value(r)
            return c * c * dens_v(r)

        def amp_v(r):
            h = drift_laplacian_radius(model, r)
            a = amplitude * (cut.d2(r) + h * cut.d1(r))
            return a * a * dens_v(r)

        def phase_v(r):
            h = drift_laplacian_radius(model, r)
            b = amplitude * (2.0 * cut.d1(r) + h * cut.value(r))
            return b * b * dens_v(r)

        den_val, neval = _composite_quad(den_v, bps)
        amp_val, n1 = _composite_quad(amp_v, bps)
        neval += n1
        phase_val = 0.0
        if lam > 0.0:
            phase_val, n2 = _composite_quad(phase_v, bps)
            neval += n2
    else:
        den = adaptive_quad(den_fn, lo, hi, epsabs=0.0, epsrel=1e-9, points=points, limit=400)
        amp = adaptive_quad(amp_fn, lo, hi, epsabs=0.0, epsrel=1e-9, points=points, limit=400)
        den_val, amp_val, phase_val = den.value, amp.value, 0.0
        neval = den.neval + amp.neval
        if lam > 0.0:
            phase = adaptive_quad(
                phase_fn, lo, hi, epsabs=0.0, epsrel=1e-9, points=points, limit=400
            )
            phase_val = phase.value
            neval += phase.neval
    num = amp_val + lam * phase_val
    quotient = math.sqrt(num / den_val)
    if not return_parts:
        return quotient
    return quotient, {
        "den": den_val,
        "num_amplitude": amp_val,
        "num_phase": phase_val,
        "log_density_shift": shift,
        "neval": neval,
    }

def weyl_quotient_bound(model: WeightedModel, lam: float, R: float) -> float:
    """A-priori majorant for the annulus quotient.

    The numerator is at most sup over the support of the squared residual
    brackets times the weighted support volume; the denominator is at least
    the plateau mass (chi = 1 there).  The bound is crude but rigorous, so a
    computed quotient above it indicates a quadrature defect.  On confining
    weights whose plateau mass underflows, the bound degenerates to inf.
    """
    if lam < 0.0:
        raise ValueError(f"spectral parameter must be >= 0, got {lam}")
    cut = AnnulusCutoff(R)
    lo, hi = cut.support
    if hi > model.radius * (1.0 + 1e-12):
        raise ValueError(
            f"annulus support [{lo:g}, {hi:g}] exceeds the model radius "
            f"{model.radius:g}"
        )
    r = np.linspace(lo, hi, 8193)
    h = drift_laplacian_radius(model, r)
    chi, chi1, chi2 = cut.value(r), cut.d1(r), cut.d2(r)
    sup_amp = float(np.max(np.abs(chi2 + h * chi1)))
    sup_phase = float(np.max(np.abs(2.0 * chi1 + h * chi)))

    shift = _density_shift(model, lo, hi)
    points = _edge_ladders(lo, hi, (R, 2.0 * R))

    def dens(rr: float) -> float:
        return math.exp(float(_log_area_density(model, rr)) - shift)

    knots = _model_knots(model, lo, hi)
    if knots.size:
        dens_v = lambda r: np.exp(_log_area_density(model, r) - shift)
        bps = np.unique(np.concatenate([[lo, hi], points, knots]))
        support_mass, _ = _composite_quad(dens_v, bps)
        plateau_mass, _ = _composite_quad(
            dens_v, np.unique(np.concatenate([[R, 2.0 * R], bps[(bps > R) & (bps < 2.0 * R)]]))
        )
    else:
        support_mass = adaptive_quad(
            dens, lo, hi, epsabs=0.0, epsrel=1e-9, points=points, limit=400
        ).value
        plateau_pts = [p for p in points if R < p < 2.0 * R]
        plateau_mass = adaptive_quad(
            dens, R, 2.0 * R, epsabs=0.0, epsrel=1e-9,
            points=plateau_pts or None, limit=400,
        ).value
    if plateau_mass <= 0.0:
        return math.inf
    return math.sqrt(
        (sup_amp**2 + lam * sup_phase**2) * support_mass / plateau_mass
    )


@dataclass
class EssentialSpectrumReport:
    """Quotient-decay evidence for a list of spectral parameters.

    For each lam the verdict requires the quotient to drop at every sampled
    doubling of the annulus radius and the fitted log-log exponent to sit at
    or below `exponent_cap`.  `overall` is the conjunction over lam.
    `advisory` marks runs on models whose curvature tail failed the
    asymptotic-nonnegativity screen; their quotients are reported as evidence
    only, without the standing hypothesis.
    """

    model_label: str
    lam_values: tuple
    R_values: tuple
    quotients: dict
    exponents: dict
    verdicts: dict
    overall: bool
    advisory: bool
    policy: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def rows(self):
        """(lam, R, quotient) triples in deterministic order, CSV-ready."""
        out = []
        for lam in self.lam_values:
            for R, q in zip(self.R_values, self.quotients[lam]):
                out.append((lam, R, q))
        return out

    def to_dict(self) -> dict:
        return {
            "name": "essential_spectrum_probe",
            "model": self.model_label,
            "lam_values": list(self.lam_values),
            "R_values": list(self.R_values),
            "quotients": {str(k): list(v) for k, v in self.quotients.items()},
            "exponents": {str(k): v for k, v in self.exponents.items()},
            "verdicts": {str(k): v for k, v in self.verdicts.items()},
            "overall": self.overall,
            "advisory": self.advisory,
            "policy": self.policy,
            "notes": list(self.notes),
        }


def certify_interval(
    model: WeightedModel,
    q: int,
    lam_values=(0.0, 0.5, 1.0, 2.0),
    R_values=None,
    exponent_cap: float = -0.4,
) -> EssentialSpectrumReport:
    """Probe every lam in lam_values across a doubling ladder of annuli.

    R_values must form >= 3 consecutive near-doublings (at least 4 entries);
    the default ladder tops out at the largest annulus the model can hold.
    The exponent cap is a reporting convention for "clearly decaying", not a
    derived constant, and is recorded in the policy block of every report.
    """
    if R_values is None:
        top = model.radius / 4.0
        R_values = tuple(top / 2**k for k in range(3, -1, -1))
    R_values = tuple(float(R) for R in R_values)
    if len(R_values) < 4:
        raise ValueError("need at least 4 annulus radii (3 doublings)")
    ratios = np.diff(np.asarray(R_values)) / np.asarray(R_values[:-1])
    if np.any(ratios < 0.75) or np.any(ratios > 1.25):
        raise ValueError(
            f"annulus radii must grow by near-doublings, got {R_values}"
        )

    profile = asymptotic_nonnegativity_profile(model, q)
    advisory = not bool(profile["verdict"])

    quotients: dict = {}
    exponents: dict = {}
    verdicts: dict = {}
    logR = np.log(np.asarray(R_values))
    for lam in lam_values:
        qs = [weyl_quotient(model, lam, R) for R in R_values]
        slope = float(np.polyfit(logR, np.log(np.asarray(qs)), 1)[0])
        monotone = bool(np.all(np.diff(np.asarray(qs)) < 0.0))
        quotients[lam] = qs
        exponents[lam] = slope
        verdicts[lam] = monotone and slope <= exponent_cap

    notes = []
    if advisory:
        notes.append(
            "curvature tail failed the nonnegativity screen "
            f"(tail value {profile['tail_value']:.3g}); quotients are "
            "advisory evidence only"
        )
    return EssentialSpectrumReport(
        model_label=model.label(),
        lam_values=tuple(lam_values),
        R_values=R_values,
        quotients=quotients,
        exponents=exponents,
        verdicts=verdicts,
        overall=all(verdicts.values()),
        advisory=advisory,
        policy={
            "exponent_cap": exponent_cap,
            "min_doublings": 3,
            "tail_threshold": profile["threshold"],
            "tail_value": profile["tail_value"],
        },
        notes=notes,
    )


def delta_r_integral_check(
    model: WeightedModel,
    eps_tol: float,
    r1: float,
    r2_list,
) -> BoundReport:
    """Annulus budget for the radial drift term.

    Infinite weighted volume: int_{r1 < r < r2} |Delta_f r| dmu must come in
    under eps_tol * V_f(r2 + 1) + 2 from some threshold radius on.  Finite
    weighted volume: the complement form
    int_{r > r2} |Delta_f r| dmu <= eps_tol * (V_f(total) - V_f(r2)) + 2 * A_f(r2)
    with A_f the weighted sphere area.  On these rotationally symmetric balls
    the radial coordinate is smooth away from the pole, so it serves as its
    own smoothed distance function.
    """
    if r1 <= 0.0:
        raise ValueError(f"inner radius must be positive, got {r1}")
    r2_list = tuple(float(r) for r in r2_list)
    if any(r2 <= r1 for r2 in r2_list):
        raise ValueError("every outer radius must exceed the inner radius")
    if any(r2 != sorted(r2_list)[i] for i, r2 in enumerate(r2_list)):
        raise ValueError("outer radii must be sorted ascending")

    growth = classify_volume_growth(model)
    finite_volume = growth["classification"] == "finite"
    if not finite_volume and max(r2_list) + 1.0 > model.radius:
        raise ValueError(
            "largest outer radius needs one unit of headroom below the model "
            f"radius {model.radius:g}"
        )

    def integrand(r: float) -> float:
        h = float(drift_laplacian_radius(model, r))
        return abs(h) * math.exp(float(_log_area_density(model, r)))

    def segment(a: float, b: float) -> float:
        # crowd the endpoints (exponential densities) and bracket sign
        # changes of the drift term (the |.| kink)
        rg = np.linspace(a, b, 2049)
        hv = np.asarray(drift_laplacian_radius(model, rg))
        flips = np.nonzero(np.sign(hv[:-1]) * np.sign(hv[1:]) < 0.0)[0]
        knots = [rg[i] for i in flips] + [rg[i + 1] for i in flips]
        pts = _edge_ladders(a, b, tuple(knots))
        spline_knots = _model_knots(model, a, b)
        if spline_knots.size:
            vec = lambda r: np.abs(drift_laplacian_radius(model, r)) * np.exp(
                _log_area_density(model, r)
            )
            bps = np.unique(np.concatenate([[a, b], pts, spline_knots]))
            return _composite_quad(vec, bps)[0]
        return adaptive_quad(
            integrand, a, b, epsabs=1e-10, epsrel=1e-8, points=pts, limit=400
        ).value

    samples = []
    if finite_volume:
        total = weighted_volume_total(model)[0]
        for r2 in r2_list:
            lhs = segment(r2, model.radius)
            area = float(model.area_density(r2))
            rhs = eps_tol * (total - weighted_volume(model, r2)[0]) + 2.0 * area
            samples.append(
                {"r2": r2, "lhs": lhs, "rhs": rhs, "margin": rhs - lhs}
            )
    else:
        running = 0.0
        prev = r1
        for r2 in r2_list:
            running += segment(prev, r2)
            prev = r2
            rhs = eps_tol * weighted_volume(model, r2 + 1.0)[0] + 2.0
            samples.append(
                {"r2": r2, "lhs": running, "rhs": rhs, "margin": rhs - running}
            )

    threshold = None
    for i in range(len(samples)):
        if all(s["margin"] >= 0.0 for s in samples[i:]):
            threshold = samples[i]["r2"]
            break
    report = BoundReport(
        name="delta_r_annulus_budget",
        hard=False,
        passed=threshold is not None,
        samples=samples,
        constants={
            "eps_tol": eps_tol,
            "r1": r1,
            "threshold": threshold,
            "volume_case": "finite" if finite_volume else "infinite",
        },
        policy={"growth_classification": growth["classification"]},
    )
    if finite_volume:
        report.warnings.append(
            "finite-volume budget reads the boundary term as the weighted "
            "sphere area; an unweighted-area reading would rescale it and is "
            "flagged, not resolved"
        )
    return report


def lp_hypothesis_certificate(
    model: WeightedModel,
    q: int,
    beta: float = 1.0,
) -> BoundReport:
    """Certify the hypotheses under which the spectral interval is p-independent.

    Three numeric screens: (i) the curvature floor over nested balls must not
    diverge with radius (confining weights fail here), together with the
    asymptotic-nonnegativity tail profile; (ii) weighted volume growth must
    classify as finite or subexponential; (iii) the pole-anchored
    exponential-moment integral must converge.  When all three hold the
    certificate is granted; the p-independence conclusion itself is
    operator-theoretic and is not numerically asserted.
    """
    fractions = (0.25, 0.5, 1.0)
    floors = {}
    for frac in fractions:
        sub = model.with_radius(frac * model.radius)
        floors[frac] = float(curvature_floor(sub, q))
    ratio = floors[1.0] / max(floors[0.5], 1e-30)
    diverging = ratio >= 1.5 and floors[1.0] >= 1.0

    profile = asymptotic_nonnegativity_profile(model, q)
    tail_ok = bool(profile["verdict"])

    growth = classify_volume_growth(model)
    growth_ok = growth["classification"] in ("finite", "subexponential")

    integral = verify_subexp_integral(model, q, beta)
    integral_ok = bool(integral.passed)

    granted = (not diverging) and tail_ok and growth_ok and integral_ok
    notes = [
        "conclusion is operator-theoretic; the certificate checks "
        "hypotheses only"
    ]
    if diverging:
        notes.append(
            f"denied: curvature floor diverges with radius "
            f"(K(R)/K(R/2) = {ratio:.3g})"
        )
    if not tail_ok:
        notes.append(
            f"denied: curvature tail stays negative "
            f"(tail value {profile['tail_value']:.3g})"
        )
    if not growth_ok:
        notes.append(f"denied: volume growth classified {growth['classification']!r}")
    if not integral_ok:
        notes.append("denied: exponential-moment integral did not converge")

    return BoundReport(
        name="lp_spectrum_certificate",
        hard=False,
        passed=granted,
        samples=[
            {"radius": frac * model.radius, "K": floors[frac]} for frac in fractions
        ],
        constants={
            "K_table": {f"{frac:g}R": floors[frac] for frac in fractions},
            "K_ratio_last_doubling": ratio,
            "K_diverging": diverging,
            "tail_verdict": tail_ok,
            "tail_value": profile["tail_value"],
            "growth_classification": growth["classification"],
            "integral_converged": integral_ok,
            "integral_value": integral.constants.get("I_final"),
            "beta": beta,
        },
        policy={
            "divergence_ratio": 1.5,
            "divergence_floor": 1.0,
            "radius_fractions": fractions,
        },
        notes=notes,
        warnings=list(integral.warnings),
    )
