"""
Result records for rough integrals, compositions and curve-induced fields.
"""

from dataclasses import dataclass
from typing import Dict, Any, Optional

import numpy as np


def _plain(value):
    """numpy values to JSON-friendly python values."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass(frozen=True, eq=False)
class IntegralResult:
    """
    Compensated-sum rough integral over the circle.

    Attributes:
        total: integral over the full loop
        local: per-segment compensated terms, node axis first
        partials: integral from node s to node t at [t, s], or None when not requested
        q_norm: |Q|_3nu when computed, else None
    """
    total: np.ndarray
    local: np.ndarray
    partials: Optional[np.ndarray] = None
    q_norm: Optional[float] = None


@dataclass(frozen=True)
class QRemainderReport:
    """
    Q-remainder norm and its bound.

    Attributes:
        q_norm: |Q|_3nu on the grid
        bound_base: (1 + |X|_nu + |XX|_2nu) |W|_D |Z|_D, the bound without its constant
        constant: fitted constant q_norm / bound_base
    """
    q_norm: float
    bound_base: float
    constant: float


@dataclass(frozen=True)
class CompositionReport:
    """
    Two-way remainder check and norm bound of a composition m(Y).

    Attributes:
        remainder_error: max |R_definition - R_formula|
        remainder_scale: max |R_definition|
        norm_value: |m(Y)|_D
        bound_base: |grad m|_C1 |Y|_D* (1 + |Y|_D*) (1 + |X|_nu)^2
        constant: fitted K = max(1, norm_value / bound_base)
    """
    remainder_error: float
    remainder_scale: float
    norm_value: float
    bound_base: float
    constant: float

    @property
    def relative_error(self) -> float:
        return self.remainder_error / max(1.0, self.remainder_scale)


@dataclass(frozen=True)
class VelocityEvaluation:
    """
    Velocity and its gradients at a point.

    Attributes:
        point: evaluation point
        u: velocity
        grad_u: grad_u[m, l] = d u_m / d x_l, or None
        grad2_u: grad2_u[m, l, p] = d^2 u_m / d x_l d x_p, or None
    """
    point: np.ndarray
    u: np.ndarray
    grad_u: Optional[np.ndarray] = None
    grad2_u: Optional[np.ndarray] = None

    @property
    def divergence(self) -> float:
        if self.grad_u is None:
            raise ValueError("grad_u was not computed")
        return float(np.trace(self.grad_u))


@dataclass(frozen=True)
class EnergyReport:
    """
    Energy of a curve computed three ways.

    Attributes:
        h_rough: rough-integral energy
        h_double: double-sum energy (smooth curves only)
        h_fourier: k-space energy
        agreement: max pairwise relative difference among available values
    """
    h_rough: float
    h_double: Optional[float]
    h_fourier: Optional[float]
    agreement: float

    @property
    def is_nonnegative(self) -> bool:
        return self.h_rough >= -1e-9 * max(1.0, abs(self.h_rough))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'h_rough': self.h_rough,
            'h_double': self.h_double,
            'h_fourier': self.h_fourier,
            'agreement': self.agreement,
        }


@dataclass(frozen=True)
class BoundReport:
    """
    Sampled sup of a field quantity against its analytic bound.

    Attributes:
        name: bound identifier
        order: derivative order n
        sampled_max: max found over the sample cloud
        bound: bound value
        n_samples: number of sample points
    """
    name: str
    order: int
    sampled_max: float
    bound: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.sampled_max <= self.bound * (1.0 + 1e-12) + 1e-300

    @property
    def slack(self) -> float:
        """bound / sampled_max, inf when the field vanishes."""
        return float('inf') if self.sampled_max == 0 else self.bound / self.sampled_max

    def to_dict(self) -> Dict[str, Any]:
        return {k: _plain(v) for k, v in {
            'name': self.name,
            'order': self.order,
            'sampled_max': self.sampled_max,
            'bound': self.bound,
            'n_samples': self.n_samples,
            'passed': self.passed,
        }.items()}
