"""
CheckResult data model for storing the outcome of a numerical check.
"""

from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional
import json
import math


@dataclass
class CheckResult:
    """
    Represents the outcome of one invariant or acceptance check.

    Attributes:
        name: check identifier
        passed: True when the measured value satisfies the threshold
        measured: measured quantity
        threshold: acceptance threshold the measurement is compared with
        detail: short human-readable explanation
        elapsed: wall-clock seconds spent on the check
        extras: additional measured values
    """
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""
    elapsed: float = 0.0
    extras: Dict[str, Any] = None

    def __post_init__(self):
        """Validate check result data after initialization."""
        if self.extras is None:
            self.extras = {}
        self._validate_data()

    def _validate_data(self):
        """Validate check result data."""
        if not isinstance(self.name, str) or not self.name.strip():
            raise ValueError("name must be a non-empty string")

        if not isinstance(self.passed, bool):
            raise ValueError("passed must be a boolean")

        if not isinstance(self.elapsed, (int, float)) or self.elapsed < 0:
            raise ValueError("elapsed must be a non-negative number")

    def is_passed(self) -> bool:
        """Check if the check passed."""
        return self.passed

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        """Convert check result to dictionary; timing is excluded unless requested."""
        data = {
            'name': self.name,
            'passed': self.passed,
            'measured': _finite_or_text(self.measured),
            'threshold': _finite_or_text(self.threshold),
            'detail': self.detail,
            'extras': {k: _finite_or_text(v) for k, v in sorted(self.extras.items())},
        }
        if include_timing:
            data['elapsed'] = self.elapsed
        return data

    def to_json(self) -> str:
        """Convert check result to JSON string."""
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CheckResult':
        """Create CheckResult from dictionary."""
        return cls(**data)


@dataclass
class SuiteReport:
    """
    Aggregate of check results.

    Attributes:
        checks: results in execution order
    """
    checks: List[CheckResult] = field(default_factory=list)

    def add(self, result: CheckResult):
        self.checks.append(result)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def get_summary(self) -> Dict[str, Any]:
        """Summary without wall-clock values, so identical inputs give identical output."""
        return {
            'passed': self.passed,
            'n_checks': len(self.checks),
            'failed': self.failed(),
            'checks': [c.to_dict() for c in self.checks],
        }

    def format_table(self) -> str:
        """Plain-text table with wall-clock per check."""
        width = max([len(c.name) for c in self.checks] + [5])
        lines = [f"{'check'.ljust(width)}  result  {'measured':>12}  {'threshold':>12}  {'seconds':>8}"]
        for c in self.checks:
            status = 'PASS' if c.passed else 'FAIL'
            lines.append(
                f"{c.name.ljust(width)}  {status:<6}  {c.measured:>12.4e}  {c.threshold:>12.4e}  {c.elapsed:>8.2f}"
            )
        return "\n".join(lines)


def _finite_or_text(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, 'item'):
        value = value.item()
        if isinstance(value, float) and not math.isfinite(value):
            return str(value)
    return value


@dataclass
class RunOutcome:
    """
    Result of one scenario run.

    Attributes:
        name: scenario name
        run_dir: directory holding the run log, snapshots and summary
        exit_code: 0 all checks passed, 2 configuration error, 3 failed check or numerical failure
        summary: content written to summary.json
        report: check results (None when the run aborted before checks)
    """
    name: str
    run_dir: str
    exit_code: int
    summary: Dict[str, Any]
    report: Optional[SuiteReport] = None

    @property
    def passed(self) -> bool:
        return self.exit_code == 0
