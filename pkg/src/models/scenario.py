"""
Scenario data model: what curve, which kernel, how to run, which checks.
"""

from dataclasses import dataclass, field, asdict
from typing import Dict, Any, List, Optional

from .circle_grid import is_power_of_two, MIN_POINTS, MAX_POINTS
from .errors import ConfigError
from .kernel_spec import KernelSpec

CURVE_KINDS = ('circle', 'trefoil', 'brownian_bridge', 'file')
SCHEMES = ('euler', 'rk4')
PIPELINES = ('validate', 'energy', 'evolve', 'sweep')
SMOOTH_NU = 0.9
BRIDGE_NU = 0.4


@dataclass
class CurveBlock:
    """
    Curve section of a scenario.

    Attributes:
        kind: circle | trefoil | brownian_bridge | file
        n_points: grid size
        nu: Hölder exponent; None picks 0.4 for bridges and 0.9 otherwise
        seed: random seed (bridges)
        scale: radius, trefoil scale or bridge amplitude
        path: snapshot file for kind = file
    """
    kind: str = 'circle'
    n_points: int = 128
    nu: Optional[float] = None
    seed: int = 0
    scale: float = 1.0
    path: str = ''

    def __post_init__(self):
        if self.nu is None:
            self.nu = BRIDGE_NU if self.kind == 'brownian_bridge' else SMOOTH_NU
        self._validate()

    def _validate(self):
        if self.kind not in CURVE_KINDS:
            raise ConfigError(f"curve.kind must be one of {', '.join(CURVE_KINDS)}, got '{self.kind}'")
        if not is_power_of_two(self.n_points) or not MIN_POINTS <= self.n_points <= MAX_POINTS:
            raise ConfigError(
                f"curve.n_points must be a power of two in [{MIN_POINTS}, {MAX_POINTS}], got {self.n_points}"
            )
        if not 1.0 / 3.0 < self.nu < 1.0:
            raise ConfigError(f"curve.nu must satisfy ν∈(1/3,1), got {self.nu}")
        if self.scale < 0:
            raise ConfigError("curve.scale must be non-negative")
        if self.kind == 'file' and not self.path.strip():
            raise ConfigError("curve.path is required when curve.kind = file")


@dataclass
class RunBlock:
    """
    Time integration section of a scenario.

    Attributes:
        t_final: final time T
        dt: step size
        scheme: euler | rk4
        diagnostics_every: steps between diagnostic samples
        snapshot_every: diagnostic samples between snapshots, 0 disables snapshots
    """
    t_final: float = 0.1
    dt: float = 1e-2
    scheme: str = 'rk4'
    diagnostics_every: int = 1
    snapshot_every: int = 0

    def __post_init__(self):
        if self.t_final <= 0:
            raise ConfigError("run.t_final must be positive")
        if self.dt <= 0:
            raise ConfigError("run.dt must be positive")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"run.scheme must be one of {', '.join(SCHEMES)}, got '{self.scheme}'")
        if self.diagnostics_every < 1:
            raise ConfigError("run.diagnostics_every must be a positive integer")
        if self.snapshot_every < 0:
            raise ConfigError("run.snapshot_every must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass
class Scenario:
    """
    A complete scenario.

    Attributes:
        name: run name, used for the run directory
        pipeline: validate | energy | evolve | sweep
        curve: curve section
        kernel: kernel section
        run: time integration section
        checks: enabled check names (empty means all)
        output_dir: root directory for run directories
        sweep: parameter name -> list of values, for the sweep pipeline
        sweep_pipeline: pipeline each sweep member runs
        inject_area_perturbation: perturb one area entry (validate pipeline)
        kernel_resolution: spectral table size, 0 keeps the process default
    """
    name: str = 'scenario'
    pipeline: str = 'energy'
    curve: CurveBlock = field(default_factory=CurveBlock)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    run: RunBlock = field(default_factory=RunBlock)
    checks: List[str] = field(default_factory=list)
    output_dir: str = 'runs'
    sweep: Dict[str, List[Any]] = field(default_factory=dict)
    sweep_pipeline: str = 'energy'
    inject_area_perturbation: bool = False
    kernel_resolution: int = 0

    def __post_init__(self):
        if self.kernel_resolution and self.kernel_resolution < 32:
            raise ConfigError("kernel.resolution must be at least 32")
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {', '.join(PIPELINES)}, got '{self.pipeline}'")
        if self.sweep_pipeline not in ('energy', 'evolve'):
            raise ConfigError("sweep.pipeline must be energy or evolve")
        if not self.name or not self.name.strip():
            raise ConfigError("name must be a non-empty string")

    def check_enabled(self, name: str) -> bool:
        return not self.checks or name in self.checks

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'pipeline': self.pipeline,
            'curve': asdict(self.curve),
            'kernel': self.kernel.to_dict(),
            'run': asdict(self.run),
            'checks': list(self.checks),
            'output_dir': self.output_dir,
            'sweep': {k: list(v) for k, v in self.sweep.items()},
            'sweep_pipeline': self.sweep_pipeline,
            'inject_area_perturbation': self.inject_area_perturbation,
            'kernel_resolution': self.kernel_resolution,
        }
