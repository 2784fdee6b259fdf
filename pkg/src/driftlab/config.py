"""Model-definition files: a small line-oriented section/key format.

Sections [model], [warp], [weight]; one `key = value` per line; blank lines
and `#` comments ignored.  The parser is hand rolled so every rejection can
point at its line number and so the accepted grammar is exactly what reports
embed: stdlib configparser case-folds keys, allows interpolation syntax, and
tolerates duplicate sections, all of which would make the round-trip lossy.

`render_config(parse_config(text))` reproduces the resolved values exactly
(floats via repr), which is what lets reports carry a bit-exact copy of the
configuration they ran under.
"""

from __future__ import annotations

from .catalog import family as catalog_family
from .models import (
    WarpedProductModel,
    WeightFunction,
    WeightedModel,
    euclidean_warp,
    hyperbolic_warp,
    tabulated_warp_from,
    tabulated_weight_from,
)

__all__ = ["ConfigError", "parse_config", "render_config", "build_model", "build_product"]

_SECTIONS = ("model", "warp", "weight")
_KEYS = {
    "model": {"family", "n", "q", "epsilon", "radius", "bc"},
    "warp": {"family", "params"},
    "weight": {"family", "params"},
}
_WARP_FAMILIES = ("euclidean", "hyperbolic", "tabulated")
_WEIGHT_FAMILIES = ("zero", "quadratic", "log_poly", "linear_asymptotic", "tabulated")
_BCS = ("dirichlet", "neumann")


class ConfigError(ValueError):
    """Parse or validation failure, anchored to a 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _parse_float(token: str, line: int, key: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ConfigError(line, f"{key}: {token!r} is not a number") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise ConfigError(line, f"{key}: {token!r} is not finite")
    return value


def _parse_int(token: str, line: int, key: str) -> int:
    try:
        return int(token, 10)
    except ValueError:
        raise ConfigError(line, f"{key}: {token!r} is not an integer") from None


def parse_config(text: str) -> dict:
    """Parse to {"model": {...}, "warp": {...}, "weight": {...}} with typed values.

    The [model] section is required.  [warp]/[weight] default to the flat
    unweighted choices unless `family` in [model] names a catalog preset, in
    which case the preset supplies them and explicit sections are rejected
    (one source of truth per run).
    """
    sections: dict = {}
    lines: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(lineno, f"unterminated section header {line!r}")
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigError(lineno, f"unknown section [{name}]")
            if name in sections:
                raise ConfigError(lineno, f"duplicate section [{name}]")
            sections[name] = {}
            lines[name] = {}
            current = name
            continue
        if current is None:
            raise ConfigError(lineno, f"{line!r} appears before any section")
        if "=" not in line:
            raise ConfigError(lineno, f"expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS[current]:
            raise ConfigError(lineno, f"unknown key {key!r} in [{current}]")
        if key in sections[current]:
            raise ConfigError(lineno, f"duplicate key {key!r} in [{current}]")
        if not value:
            raise ConfigError(lineno, f"{key}: empty value")
        sections[current][key] = value
        lines[current][key] = lineno

    if "model" not in sections:
        raise ConfigError(1, "missing required section [model]")
    return _validate(sections, lines)


def _validate(sections: dict, lines: dict) -> dict:
    model_raw = sections["model"]
    model_lines = lines["model"]
    end = max((ln for sec in lines.values() for ln in sec.values()), default=1)

    def need(key: str):
        if key not in model_raw:
            raise ConfigError(end, f"[model] is missing required key {key!r}")

    out: dict = {"model": {}, "warp": None, "weight": None}

    preset = model_raw.get("family")
    if preset is not None:
        try:
            fam = catalog_family(preset)
        except ValueError as exc:
            raise ConfigError(model_lines["family"], str(exc)) from None
        for sec in ("warp", "weight"):
            if sec in sections:
                raise ConfigError(
                    min(lines[sec].values(), default=end),
                    f"[{sec}] conflicts with model family {preset!r}",
                )
        out["model"]["family"] = preset
        out["warp"] = {"family": fam.warp_family, "params": list(fam.warp_params)}
        out["weight"] = {"family": fam.weight_family, "params": list(fam.weight_params)}
        defaults = {"n": fam.n, "radius": fam.radius, "bc": fam.bc}
    else:
        need("n")
        need("radius")
        defaults = {"bc": "dirichlet"}
        for sec, fams, default_family in (
            ("warp", _WARP_FAMILIES, "euclidean"),
            ("weight", _WEIGHT_FAMILIES, "zero"),
        ):
            raw = sections.get(sec, {})
            fam_name = raw.get("family", default_family)
            if fam_name not in fams:
                ln = lines.get(sec, {}).get("family", end)
                raise ConfigError(ln, f"unknown {sec} family {fam_name!r}")
            params = []
            if "params" in raw:
                ln = lines[sec]["params"]
                for tok in raw["params"].replace(",", " ").split():
                    params.append(_parse_float(tok, ln, "params"))
            out[sec] = {"family": fam_name, "params": params}

    m = out["model"]
    if "n" in model_raw:
        m["n"] = _parse_int(model_raw["n"], model_lines["n"], "n")
        if m["n"] < 1:
            raise ConfigError(model_lines["n"], f"n must be >= 1, got {m['n']}")
    elif "n" in defaults:
        m["n"] = defaults["n"]
    if "radius" in model_raw:
        m["radius"] = _parse_float(model_raw["radius"], model_lines["radius"], "radius")
        if m["radius"] <= 0.0:
            raise ConfigError(model_lines["radius"], "radius must be positive")
    elif "radius" in defaults:
        m["radius"] = defaults["radius"]
    bc = model_raw.get("bc", defaults.get("bc", "dirichlet"))
    if bc not in _BCS:
        raise ConfigError(model_lines.get("bc", end), f"bc must be one of {_BCS}, got {bc!r}")
    m["bc"] = bc
    if "q" in model_raw:
        m["q"] = _parse_int(model_raw["q"], model_lines["q"], "q")
        if m["q"] < 1:
            raise ConfigError(model_lines["q"], f"q must be >= 1, got {m['q']}")
    else:
        m["q"] = 1
    if "epsilon" in model_raw:
        m["epsilon"] = _parse_float(model_raw["epsilon"], model_lines["epsilon"], "epsilon")
        if m["epsilon"] <= 0.0:
            raise ConfigError(model_lines["epsilon"], "epsilon must be positive")
    else:
        m["epsilon"] = 1.0
    return out


def render_config(cfg: dict) -> str:
    """Canonical text form; parse_config(render_config(cfg)) == cfg."""
    out = ["[model]"]
    m = cfg["model"]
    if "family" in m:
        out.append(f"family = {m['family']}")
    out.append(f"n = {m['n']}")
    out.append(f"q = {m['q']}")
    out.append(f"epsilon = {m['epsilon']!r}")
    out.append(f"radius = {m['radius']!r}")
    out.append(f"bc = {m['bc']}")
    if "family" not in m:
        for sec in ("warp", "weight"):
            out.append("")
            out.append(f"[{sec}]")
            out.append(f"family = {cfg[sec]['family']}")
            if cfg[sec]["params"]:
                out.append(
                    "params = " + ", ".join(repr(p) for p in cfg[sec]["params"])
                )
    return "\n".join(out) + "\n"


def build_model(cfg: dict) -> WeightedModel:
    m = cfg["model"]
    if "family" in m:
        return catalog_family(m["family"]).build(
            n=m["n"], radius=m["radius"], bc=m["bc"]
        )
    radius = m["radius"]
    wf = cfg["warp"]["family"]
    wp = tuple(cfg["warp"]["params"])
    if wf == "euclidean":
        warp = euclidean_warp()
    elif wf == "hyperbolic":
        warp = hyperbolic_warp(wp[0] if wp else 1.0)
    else:
        warp = tabulated_warp_from(hyperbolic_warp(wp[0] if wp else 1.0).value, radius)
    gf = cfg["weight"]["family"]
    gp = tuple(cfg["weight"]["params"])
    if gf == "tabulated":
        weight = tabulated_weight_from(
            WeightFunction("log_poly", (gp[0] if gp else 1.0,)).value, radius
        )
    else:
        weight = WeightFunction(gf, gp)
    return WeightedModel(m["n"], warp, weight, radius, m["bc"])


def build_product(cfg: dict) -> WarpedProductModel:
    m = cfg["model"]
    return WarpedProductModel(build_model(cfg), m["q"], m["epsilon"])
