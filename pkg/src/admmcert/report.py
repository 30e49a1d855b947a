"""Check records and report containers shared by certificates and suites."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["CheckResult", "CertificateReport", "SuiteReport"]


@dataclass
class CheckResult:
    """Outcome of one named check over a k-range.

    ``worst_slack`` is min(rhs - lhs) for inequality checks (nonnegative
    means the inequality held with margin) and -max|deviation| for
    identity checks. ``passed`` applies the check's own tolerance, so a
    slightly negative slack can still pass.
    """

    name: str
    passed: bool
    worst_slack: float
    k_range: tuple[int, int] | None = None
    note: str = ""


@dataclass
class CertificateReport:
    """A bundle of checks produced by one certificate or lemma battery."""

    name: str
    checks: list[CheckResult] = field(default_factory=list)
    series: dict = field(default_factory=dict)
    not_applicable: bool = False
    note: str = ""

    @property
    def passed(self):
        return self.not_applicable or all(c.passed for c in self.checks)

    def worst_slacks(self):
        return {c.name: c.worst_slack for c in self.checks}

    def failed_checks(self):
        return [c for c in self.checks if not c.passed]


@dataclass
class SuiteReport:
    """Aggregated outcome of one verification suite run."""

    suite: str
    seed: int
    config: dict = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def worst_slacks(self):
        return {c.name: c.worst_slack for c in self.checks}

    def to_text(self):
        lines = [f"suite: {self.suite} (seed={self.seed})"]
        for key in sorted(self.config):
            lines.append(f"  config.{key}: {self.config[key]}")
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            rng = f" k={c.k_range[0]}..{c.k_range[1]}" if c.k_range else ""
            note = f" ({c.note})" if c.note else ""
            lines.append(f"  [{status}] {c.name}: worst_slack={c.worst_slack:.6e}{rng}{note}")
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"
