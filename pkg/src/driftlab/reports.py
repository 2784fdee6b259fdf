"""Shared verdict/report containers used by every verification suite.

A BoundReport separates hard identities (violation = defect) from calibrated
bounds (violation = soft warning) and keeps per-sample margins so the CLI can
serialize evidence instead of a bare boolean.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class BoundReport:
    """Outcome of one verification check.

    hard      True when a violation is an assertion failure (exact identity,
              derived comparison form); False for calibrated constants where
              violations downgrade to warnings.
    passed    overall verdict; None means the check was inconclusive.
    samples   list of per-sample dicts (r, t, lhs, rhs, margin, ...).
    constants fitted or frozen constants used by the bound.
    policy    knobs that shaped the run (grids, splits, safety factors).
    """

    name: str
    hard: bool
    passed: bool | None = None
    samples: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    policy: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def min_margin(self):
        margins = [s["margin"] for s in self.samples if "margin" in s]
        return min(margins) if margins else None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "hard": self.hard,
            "passed": self.passed,
            "min_margin": self.min_margin(),
            "n_samples": len(self.samples),
            "samples": self.samples,
            "constants": self.constants,
            "policy": self.policy,
            "notes": list(self.notes),
            "warnings": list(self.warnings),
        }


def require(report: BoundReport) -> BoundReport:
    """Raise if a hard report failed; soft failures pass through as warnings."""
    if report.hard and report.passed is False:
        worst = report.min_margin()
        raise AssertionError(
            f"hard check {report.name!r} failed (worst margin {worst})"
        )
    return report
