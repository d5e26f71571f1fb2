"""
Evolution state, run diagnostics and envelope reports.
"""

from dataclasses import dataclass, field
from typing import Dict, Any, List

import numpy as np

from .rough_path import RoughPath, ControlledCurve
from .errors import GridMismatch


@dataclass(frozen=True, eq=False)
class FilamentState:
    """
    State (gamma, gamma') over the fixed reference rough path.

    Attributes:
        t: time
        gamma: curve, shape (N, 3)
        gamma_prime: Gubinelli derivative over the base, shape (N, 3, 3)
        base: lift of the initial curve, fixed for the run
    """
    t: float
    gamma: np.ndarray
    gamma_prime: np.ndarray
    base: RoughPath

    def __post_init__(self):
        n = self.base.n_points
        if self.gamma.shape != (n, 3):
            raise GridMismatch(f"gamma must have shape ({n}, 3), got {self.gamma.shape}")
        if self.gamma_prime.shape != (n, 3, 3):
            raise GridMismatch(f"gamma_prime must have shape ({n}, 3, 3), got {self.gamma_prime.shape}")

    @classmethod
    def initial(cls, base: RoughPath) -> 'FilamentState':
        """gamma_0 controlled by itself: derivative identity, remainder zero."""
        eye = np.broadcast_to(np.eye(3), (base.n_points, 3, 3)).copy()
        return cls(0.0, base.x.copy(), eye, base)

    def controlled(self) -> ControlledCurve:
        return ControlledCurve(self.gamma, self.gamma_prime, self.base)

    def advanced(self, dt: float, d_gamma: np.ndarray, d_prime: np.ndarray) -> 'FilamentState':
        return FilamentState(self.t + dt, self.gamma + d_gamma, self.gamma_prime + d_prime, self.base)


@dataclass(frozen=True, eq=False)
class TrajectoryPoint:
    """
    One time step of a run, kept for the integral-form checks.

    Attributes:
        t: time
        gamma: curve at t
        gamma_prime: derivative at t
        velocity: u at the nodes
        prime_rate: grad u gamma' at the nodes
    """
    t: float
    gamma: np.ndarray
    gamma_prime: np.ndarray
    velocity: np.ndarray
    prime_rate: np.ndarray


@dataclass
class RunDiagnostics:
    """
    Time series recorded during an evolution.

    Attributes:
        times: diagnostic times
        energy: energy H(t)
        sup_gamma: |gamma|_inf (max entry)
        sup_gamma_prime: |gamma'|_inf (max entry)
        holder_gamma: |gamma|_nu
        holder_gamma_prime: |gamma'|_nu
        remainder_norm: |R|_2nu
        constants: envelope constants fitted at t = 0
        picard_residual: max |gamma(t) - gamma_0 - int u ds| over the run
        remainder_consistency: max |R_definition - R_integrated| over the run
        steps: number of time steps taken
    """
    times: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    sup_gamma: List[float] = field(default_factory=list)
    sup_gamma_prime: List[float] = field(default_factory=list)
    holder_gamma: List[float] = field(default_factory=list)
    holder_gamma_prime: List[float] = field(default_factory=list)
    remainder_norm: List[float] = field(default_factory=list)
    constants: Dict[str, float] = field(default_factory=dict)
    picard_residual: float = 0.0
    remainder_consistency: float = 0.0
    steps: int = 0

    def record(self, t: float, energy: float, norms: Dict[str, float]):
        self.times.append(float(t))
        self.energy.append(float(energy))
        self.sup_gamma.append(norms['sup_gamma'])
        self.sup_gamma_prime.append(norms['sup_gamma_prime'])
        self.holder_gamma.append(norms['holder_gamma'])
        self.holder_gamma_prime.append(norms['holder_gamma_prime'])
        self.remainder_norm.append(norms['remainder_norm'])

    @property
    def energy_drift(self) -> float:
        """max |H(t) - H(0)| / H(0); absolute drift when H(0) vanishes."""
        if not self.energy:
            return 0.0
        h0 = self.energy[0]
        drift = max(abs(h - h0) for h in self.energy)
        return drift / abs(h0) if h0 != 0 else drift

    def all_finite(self) -> bool:
        series = (self.energy, self.sup_gamma, self.sup_gamma_prime,
                  self.holder_gamma, self.holder_gamma_prime, self.remainder_norm)
        return all(np.all(np.isfinite(s)) for s in series)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'times': self.times,
            'energy': self.energy,
            'sup_gamma': self.sup_gamma,
            'sup_gamma_prime': self.sup_gamma_prime,
            'holder_gamma': self.holder_gamma,
            'holder_gamma_prime': self.holder_gamma_prime,
            'remainder_norm': self.remainder_norm,
            'constants': dict(self.constants),
            'energy_drift': self.energy_drift,
            'picard_residual': self.picard_residual,
            'remainder_consistency': self.remainder_consistency,
            'steps': self.steps,
        }


@dataclass(frozen=True)
class EnvelopeReport:
    """
    Pass/fail of each a-priori envelope over the recorded samples.

    Attributes:
        results: envelope name -> passed at every sample
        worst_ratio: envelope name -> max of measured / envelope over samples
    """
    results: Dict[str, bool]
    worst_ratio: Dict[str, float]

    @property
    def passed(self) -> bool:
        return all(self.results.values())

    def failed(self) -> List[str]:
        return [name for name, ok in self.results.items() if not ok]

    def to_dict(self) -> Dict[str, Any]:
        return {'results': dict(self.results), 'worst_ratio': dict(self.worst_ratio), 'passed': self.passed}
