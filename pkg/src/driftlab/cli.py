"""Command-line front end: run verification suites, list families, dump schema.

Exit codes: 0 all hard assertions pass (soft bound violations downgrade to
warnings), 1 at least one hard identity failed, 2 configuration or usage
error.  Bundles are written atomically (staging directory, then rename) and
contain no wall-clock data outside metadata.json, so re-running an identical
config reproduces report.json and every CSV byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import averaging, svg
from .catalog import families
from .config import ConfigError, build_model, parse_config, render_config
from .geometry import (
    bakry_emery_radial,
    classify_volume_growth,
    curvature_floor,
    eval_curvature,
    verify_bochner_radial,
    verify_laplacian_comparison,
    verify_volume_comparison,
    verify_warped_ricci,
    weighted_volume,
)
from .heat_bounds import (
    KernelWindow,
    varadhan_smalltime,
    verify_gaussian_lower,
    verify_gaussian_upper,
    verify_harnack,
    verify_li_yau,
    verify_phi_upper,
)
from .heat_kernel import (
    verify_kernel_routes_agree,
    verify_mass_behavior,
    verify_semigroup_crosscheck,
    verify_weak_initial_condition,
)
from .models import WarpedProductModel
from .operators import (
    Grid1D,
    assemble,
    cheng_bound_check,
    eigen_solve,
    verify_collapse_identities,
)
from .spectrum_probe import (
    certify_interval,
    delta_r_integral_check,
    lp_hypothesis_certificate,
)

SCHEMA_VERSION = "1"
SUITE_ORDER = (
    "curvature",
    "prop31",
    "comparison",
    "volume",
    "eigs",
    "collapse",
    "heat",
    "bounds",
    "liyau",
    "harnack",
    "weyl",
    "lp-cert",
)


class _Run:
    """Shared state for one invocation; the kernel window is built lazily."""

    def __init__(self, cfg, grid, tol, seed, want_svg):
        self.cfg = cfg
        self.model = build_model(cfg)
        self.q = cfg["model"]["q"]
        self.epsilon = cfg["model"]["epsilon"]
        self.grid = grid
        self.tol = tol
        self.seed = seed
        self.want_svg = want_svg
        self._window = None

    def window(self) -> KernelWindow:
        if self._window is None:
            self._window = KernelWindow.build(self.model, self.q, seed=self.seed)
        return self._window

    def radii(self, n: int = 40) -> np.ndarray:
        R = self.model.radius
        return np.linspace(R / 30.0, 0.92 * R, n)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- suites


def _suite_curvature(run: _Run):
    radii = run.radii()
    floor = curvature_floor(run.model, run.q)
    rep = verify_bochner_radial(run.model, run.q, run.radii(24))
    if run.model.n >= 2:
        prof = eval_curvature(run.model, run.q, radii)
        table = _csv_text(
            ["r", "ric_radial", "ric_tangential", "ricf_radial", "ricf_tangential",
             "ricfq_radial", "ricfq_tangential"],
            zip(
                prof.radii.tolist(), prof.ric_radial.tolist(),
                prof.ric_tangential.tolist(), prof.ricf_radial.tolist(),
                prof.ricf_tangential.tolist(), prof.ricfq_radial.tolist(),
                prof.ricfq_tangential.tolist(),
            ),
        )
    else:
        ricfq = bakry_emery_radial(run.model, run.q, radii)
        table = _csv_text(["r", "ricfq_radial"], zip(radii.tolist(), ricfq.tolist()))
    out = rep.to_dict()
    out["constants"]["curvature_floor"] = float(floor)
    return [out], {"curvature_profile.csv": table}, {}


def _suite_prop31(run: _Run):
    if run.model.n < 2:
        return [{
            "name": "warped_product_ricci_identity",
            "hard": False,
            "passed": None,
            "samples": [],
            "constants": {},
            "policy": {},
            "notes": ["needs base dimension n >= 2, config has n = 1"],
            "warnings": [],
        }], {}, {}
    wp = WarpedProductModel(run.model, run.q, run.epsilon)
    rep = verify_warped_ricci(wp, run.radii(), tol=run.tol or 1e-8)
    return [rep.to_dict()], {}, {}


def _suite_comparison(run: _Run):
    R = run.model.radius
    reps = [verify_laplacian_comparison(run.model, run.q, run.radii(), tol=run.tol or 1e-9)]
    pairs = [(r, s) for r, s in ((1.0, 2.0), (1.5, 4.0), (2.0, R / 2.0)) if 1.0 <= r < s <= R]
    if pairs:
        reps.append(verify_volume_comparison(run.model, run.q, pairs, tol=run.tol or 1e-9))
    return [r.to_dict() for r in reps], {}, {}


def _suite_volume(run: _Run):
    growth = classify_volume_growth(run.model)
    radii = run.radii(24)
    rows = [(float(r),) + weighted_volume(run.model, float(r)) for r in radii]
    table = _csv_text(["r", "V_f", "quad_error"], rows)
    report = {
        "name": "volume_growth",
        "hard": False,
        "passed": growth["classification"] != "inconclusive",
        "constants": {k: v for k, v in growth.items() if not isinstance(v, np.ndarray)},
        "samples": [],
        "policy": {},
        "notes": [],
        "warnings": [],
    }
    return [report], {"volume_profile.csv": table}, {}


def _suite_eigs(run: _Run):
    n_cells = run.grid or 1024
    op = assemble(run.model, Grid1D.uniform(run.model.radius, n_cells))
    dec = eigen_solve(op, 8)
    R = run.model.radius
    rep = cheng_bound_check(run.model, run.q, (R / 4.0, R / 2.0, 0.9 * R),
                            n_cells=min(n_cells, 2048))
    table = _csv_text(["k", "eigenvalue", "residual"],
                      [(k, float(dec.eigenvalues[k]), float(dec.residuals[k]))
                       for k in range(dec.eigenvalues.size)])
    out = rep.to_dict()
    out["constants"]["lambda_1"] = float(dec.eigenvalues[0])
    return [out], {"eigenvalues.csv": table}, {}


def _suite_collapse(run: _Run):
    grid = Grid1D.uniform(run.model.radius, run.grid or 768)
    rep = verify_collapse_identities(run.model, run.q, (1.0, 0.5, 0.1, 0.01), grid,
                                     tol_lowest=run.tol or 1e-10)
    return [rep.to_dict()], {}, {}


def _crosscheck_factors(model):
    """Exhaustion radii for the semigroup check, kept inside the usable regime.

    Tabulated splines must not extrapolate, and confining weights underflow
    the area density on enlarged balls; both cases shrink instead of grow.
    """
    grow = (1.0, 1.25, 1.5)
    shrink = (0.6, 0.8, 1.0)
    if model.warp.family == "tabulated" or model.weight.family == "tabulated":
        return shrink
    with np.errstate(over="ignore", divide="ignore"):
        la = float(np.log(model.area_density(np.asarray([grow[-1] * model.radius]))[0]))
    return grow if la > -280.0 else shrink


def _skipped(name, note):
    return {
        "name": name,
        "hard": False,
        "passed": None,
        "samples": [],
        "constants": {},
        "policy": {},
        "notes": [note],
        "warnings": [],
    }


def _suite_heat(run: _Run):
    R = run.model.radius
    t_list = (0.05, 0.2, 0.5)
    # dirichlet mass loss is e^{-R^2/4t}-small; probe times must scale with
    # the ball for the leak to clear the solver's round-off floor
    t_mass = tuple(f * R * R for f in (0.02, 0.1, 0.3))
    f_edge = float(run.model.weight.value(np.asarray([R]))[0])
    reps = [
        verify_kernel_routes_agree(run.model, (R / 10.0, R / 5.0), t_list,
                                   n_cells=run.grid or 1024),
        verify_mass_behavior(run.model, t_mass, n_cells=run.grid or 1024),
    ]
    out = []
    if f_edge <= 30.0:
        reps.append(
            verify_semigroup_crosscheck(run.model, 0.1, 0.2, n_steps=800,
                                        radius_factors=_crosscheck_factors(run.model))
        )
    else:
        # nodal kernels grow like e^{f} outward, so the sup-normalized
        # comparison would measure conditioning, not the semigroup law
        out.append(_skipped(
            "semigroup_crosscheck",
            f"weight spans e^{f_edge:.0f} across the ball; nodal comparison"
            " is conditioning-dominated",
        ))
    # pairing error is t * n * |g''(0)|, so the time ladder reaches low
    # enough for n = 3 to clear the tolerance with margin; cells scale with
    # the ball so the discrete spectrum reaches the shortest probe time
    reps.append(
        verify_weak_initial_condition(run.model, t_list=(0.02, 0.01, 0.005, 0.0025),
                                      n_cells=max(run.grid or 2048, int(52 * R)))
    )
    if run.q != 1:
        out.append(_skipped(
            "fiber_averaging_identity",
            f"needs a circle fiber (q = 1), config has q = {run.q}",
        ))
    elif 2.0 * f_edge > 60.0:
        out.append(_skipped(
            "fiber_averaging_identity",
            f"fiber coupling e^{{2f}} reaches e^{2 * f_edge:.0f}; the joint"
            " stepper cannot be conditioned",
        ))
    else:
        # the identity is about the fiber structure, not the ball size; a
        # capped radius keeps the joint stepper at its tested resolution
        base = run.model if R <= 24.0 else run.model.with_radius(20.0)
        wp = WarpedProductModel(base, 1, run.epsilon)
        reps.append(averaging.verify_averaging_identity(wp))
    return [r.to_dict() for r in reps] + out, {}, {}


def _suite_bounds(run: _Run):
    win = run.window()
    reps = [verify_gaussian_upper(win), verify_gaussian_lower(win), verify_phi_upper(win)]
    return [r.to_dict() for r in reps], {}, {}


def _suite_liyau(run: _Run):
    rep = verify_li_yau(run.model, run.q, n_cells=run.grid or 2048)
    out = [rep.to_dict()]
    plots = {}
    if run.want_svg:
        rows = [[s["margin"] for s in rep.samples]]
        plots["liyau_margins.svg"] = svg.margin_heatmap(
            rows, ["margin"], [f"t={s['t']:g}" for s in rep.samples],
            title="pointwise gradient-bound margins",
        )
    return out, {}, plots


def _suite_harnack(run: _Run):
    reps = [verify_harnack(run.window()), varadhan_smalltime(run.model)]
    return [r.to_dict() for r in reps], {}, {}


def _suite_weyl(run: _Run):
    model = run.model
    analytic = model.warp.family != "tabulated" and model.weight.family != "tabulated"
    if analytic and model.radius < 80.0:
        # asymptotic claims need room for radius doublings; analytic
        # families extend losslessly, splines keep their data range
        model = model.with_radius(80.0)
    rep = certify_interval(model, run.q)
    table = _csv_text(["lam", "R", "quotient"], rep.rows())
    probe = rep.to_dict()
    probe["hard"] = False
    probe["passed"] = None if rep.advisory else rep.overall
    if model is not run.model:
        probe["notes"].append(f"probed on an enlarged ball, R = {model.radius:g}")
    out = [probe]
    R = model.radius
    if R >= 24.0:
        budget = delta_r_integral_check(
            model, 0.1, max(1.0, R / 40.0), (R / 8.0, R / 4.0, R / 2.0)
        )
        out.append(budget.to_dict())
    plots = {}
    if run.want_svg:
        series = [
            (f"lam={lam:g}", list(rep.R_values), rep.quotients[lam])
            for lam in rep.lam_values
            if all(q > 0 for q in rep.quotients[lam])
        ]
        plots["weyl_quotients.svg"] = svg.line_plot(
            series, title="annulus residual quotients", xlabel="R",
            ylabel="quotient", log_x=True, log_y=True,
        )
    return out, {"weyl_quotients.csv": table}, plots


def _suite_lp_cert(run: _Run):
    model = run.model
    analytic = model.warp.family != "tabulated" and model.weight.family != "tabulated"
    if analytic and model.radius < 80.0:
        # the exponential-moment screen cannot converge on a short window;
        # analytic families extend losslessly, splines must not extrapolate
        # and confining weights underflow the density on the bigger ball
        with np.errstate(over="ignore", divide="ignore"):
            la = float(np.log(model.area_density(np.asarray([80.0]))[0]))
        if la > -280.0:
            model = model.with_radius(80.0)
    rep = lp_hypothesis_certificate(model, run.q)
    out = rep.to_dict()
    if model is not run.model:
        out["notes"].append(f"probed on an enlarged ball, R = {model.radius:g}")
    return [out], {}, {}


_SUITES = {
    "curvature": _suite_curvature,
    "prop31": _suite_prop31,
    "comparison": _suite_comparison,
    "volume": _suite_volume,
    "eigs": _suite_eigs,
    "collapse": _suite_collapse,
    "heat": _suite_heat,
    "bounds": _suite_bounds,
    "liyau": _suite_liyau,
    "harnack": _suite_harnack,
    "weyl": _suite_weyl,
    "lp-cert": _suite_lp_cert,
}


# ---------------------------------------------------------------- bundle


def _sanitize(obj):
    """numpy scalars/arrays to plain python so json stays deterministic."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and obj != obj:
        return None
    return obj


def _write_bundle(out_dir: Path, files: dict) -> None:
    out_dir = out_dir.resolve()
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}-stage-", dir=out_dir.parent))
    try:
        for rel, text in files.items():
            dest = staging / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(text)
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.replace(staging, out_dir)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise


def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"{args.config}:{exc}", file=sys.stderr)
        return 2

    if args.suite:
        wanted = []
        for chunk in args.suite.split(","):
            name = chunk.strip()
            if name not in _SUITES:
                print(f"error: unknown suite {name!r}; known: {', '.join(SUITE_ORDER)}",
                      file=sys.stderr)
                return 2
            wanted.append(name)
        suites = [s for s in SUITE_ORDER if s in set(wanted)]
    else:
        suites = list(SUITE_ORDER)

    out_dir = Path(
        args.out or os.environ.get("DRIFTLAB_OUT") or "driftlab-report"
    )

    t_start = time.time()
    try:
        run = _Run(cfg, args.grid, args.tol, args.seed, args.svg)
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    suite_results: dict = {}
    tables: dict = {}
    plots: dict = {}
    hard_failures = 0
    soft_warnings = 0
    for name in suites:
        reports, suite_tables, suite_plots = _SUITES[name](run)
        suite_results[name] = _sanitize(reports)
        for fname, text in suite_tables.items():
            tables[f"tables/{fname}"] = text
        for fname, text in suite_plots.items():
            plots[f"plots/{fname}"] = text
        for rep in reports:
            if rep.get("hard") and rep.get("passed") is False:
                hard_failures += 1
            elif rep.get("passed") is False:
                soft_warnings += 1

    exit_code = 1 if hard_failures else 0
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": _sanitize(cfg),
        "config_text": render_config(cfg),
        "model": run.model.label(),
        "suites": suite_results,
        "verdict": {
            "hard_failures": hard_failures,
            "soft_warnings": soft_warnings,
            "exit_code": exit_code,
        },
    }
    files = {"report.json": json.dumps(report, indent=2, sort_keys=True) + "\n"}
    files.update(tables)
    files.update(plots)
    files["metadata.json"] = json.dumps(
        {
            "created_unix": time.time(),
            "elapsed_seconds": round(time.time() - t_start, 3),
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        indent=2,
        sort_keys=True,
    ) + "\n"
    _write_bundle(out_dir, files)

    for name in suites:
        for rep in suite_results[name]:
            status = {True: "pass", False: "FAIL", None: "n/a "}[rep.get("passed")]
            kind = "hard" if rep.get("hard") else "soft"
            print(f"[{status}] {name:<10} {rep.get('name', '?'):<32} ({kind})")
    print(f"bundle: {out_dir}  hard_failures={hard_failures} soft_warnings={soft_warnings}")
    return exit_code


def _cmd_list_models(args) -> int:
    rows = []
    for fam in families():
        entry = fam.schema()
        if args.filter:
            props = fam.properties()
            key = args.filter.strip()
            if key == "asymptotically-nonnegative":
                if not props["asymptotically_nonnegative"]:
                    continue
            elif key.startswith("volume-growth="):
                if props["volume_growth"] != key.split("=", 1)[1]:
                    continue
            else:
                print(
                    "error: unknown filter; use 'asymptotically-nonnegative' "
                    "or 'volume-growth=<finite|subexponential|exponential>'",
                    file=sys.stderr,
                )
                return 2
            entry["properties"] = props
        rows.append(entry)
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        for entry in rows:
            d = entry["defaults"]
            print(f"{entry['name']:<14} {entry['summary']}")
            print(f"{'':<14} defaults: n={d['n']} radius={d['radius']:g} bc={d['bc']}")
    return 0


def _cmd_schema(args) -> int:
    schema = {
        "schema_version": SCHEMA_VERSION,
        "config_format": {
            "sections": {
                "model": ["family (optional catalog preset)", "n", "q",
                          "epsilon", "radius", "bc"],
                "warp": ["family (euclidean|hyperbolic|tabulated)", "params"],
                "weight": ["family (zero|quadratic|log_poly|linear_asymptotic|"
                           "tabulated)", "params"],
            },
            "notes": [
                "one 'key = value' per line; '#' comments",
                "params is a comma- or space-separated list of reals",
                "a [model] family preset replaces the [warp]/[weight] sections",
            ],
        },
        "suites": list(SUITE_ORDER),
        "bundle": {
            "report.json": "verdicts, constants, resolved config (deterministic)",
            "tables/*.csv": "numeric tables (deterministic)",
            "plots/*.svg": "optional plots, --svg (deterministic)",
            "metadata.json": "timestamps and library versions (not deterministic)",
        },
        "exit_codes": {"0": "all hard assertions pass", "1": "hard failure",
                       "2": "config or usage error"},
    }
    print(json.dumps(schema, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="driftlab",
        description="verification suites for drifting Laplacians on weighted balls",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run verification suites from a config file")
    p_run.add_argument("--config", required=True, help="model definition file")
    p_run.add_argument("--out", help="output bundle directory "
                       "(default: $DRIFTLAB_OUT or ./driftlab-report)")
    p_run.add_argument("--suite", help="comma-separated subset of: " + ", ".join(SUITE_ORDER))
    p_run.add_argument("--grid", type=int, help="override the default cell count")
    p_run.add_argument("--tol", type=float, help="override hard identity tolerances")
    p_run.add_argument("--seed", type=int, default=20260819,
                       help="sample-plan seed (default 20260819)")
    p_run.add_argument("--svg", action="store_true", help="emit SVG plots")
    p_run.set_defaults(fn=_cmd_run)

    p_list = sub.add_parser("list-models", help="list built-in model families")
    p_list.add_argument("--json", action="store_true", help="machine-readable schemas")
    p_list.add_argument("--filter", help="asymptotically-nonnegative or volume-growth=<class>")
    p_list.set_defaults(fn=_cmd_list_models)

    p_schema = sub.add_parser("schema", help="print config and bundle schema")
    p_schema.set_defaults(fn=_cmd_schema)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
