"""
Simulation configuration data model for the rough filament simulator.
"""

import os
from dataclasses import dataclass, field
from typing import Dict, Any, Tuple

from .errors import ConfigError


@dataclass
class SimulationConfig:
    """
    Process-wide numerical settings, loaded from environment variables.

    Attributes:
        sewing_tolerance: relative tolerance for the delta2-exactness check of the sewing map
        chen_tolerance: Chen defect tolerance per unit scale squared
        quadrature_points: Gauss-Legendre points for the composition remainder r-integral
        damping_factors: damping values (in units of |k|) for the Abel-summed radial transform
        spectral_resolution: number of log-spaced k nodes in the spectral table
        angular_nodes: angular nodes of the default k-quadrature (26 = octahedral design)
        radial_nodes: radial log nodes of the default k-quadrature
        fourier_tolerance: relative change accepted by the k-quadrature doubling check
        blowup_factor: guard on |gamma'| growth relative to its initial value
        workers: process pool size for sweeps
        log_level: logging level name
        output_dir: default root for run directories
    """
    sewing_tolerance: float = 1e-10
    chen_tolerance: float = 1e-12
    quadrature_points: int = 8
    damping_factors: Tuple[float, ...] = field(default=(1e-3, 5e-4, 2.5e-4))
    spectral_resolution: int = 256
    angular_nodes: int = 26
    radial_nodes: int = 64
    fourier_tolerance: float = 1e-4
    blowup_factor: float = 1e6
    workers: int = 1
    log_level: str = "INFO"
    output_dir: str = "runs"

    def __post_init__(self):
        """Validate configuration after initialization."""
        self._validate_config()

    def _validate_config(self):
        """Validate configuration values."""
        if self.sewing_tolerance <= 0:
            raise ConfigError("sewing_tolerance must be positive")

        if self.chen_tolerance <= 0:
            raise ConfigError("chen_tolerance must be positive")

        if self.quadrature_points < 2:
            raise ConfigError("quadrature_points must be at least 2")

        if len(self.damping_factors) != 3 or any(e <= 0 for e in self.damping_factors):
            raise ConfigError("damping_factors must hold three positive values")

        if self.spectral_resolution < 32:
            raise ConfigError("spectral_resolution must be at least 32")

        if self.angular_nodes != 26 and self.angular_nodes < 8:
            raise ConfigError("angular_nodes must be 26 or a polar count of at least 8")

        if self.radial_nodes < 16:
            raise ConfigError("radial_nodes must be at least 16")

        if self.blowup_factor <= 1:
            raise ConfigError("blowup_factor must be greater than 1")

        if self.workers < 1:
            raise ConfigError("workers must be a positive integer")

        if not self.output_dir or not self.output_dir.strip():
            raise ConfigError("output_dir must be a non-empty string")

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        return {
            'sewing_tolerance': self.sewing_tolerance,
            'chen_tolerance': self.chen_tolerance,
            'quadrature_points': self.quadrature_points,
            'damping_factors': list(self.damping_factors),
            'spectral_resolution': self.spectral_resolution,
            'angular_nodes': self.angular_nodes,
            'radial_nodes': self.radial_nodes,
            'fourier_tolerance': self.fourier_tolerance,
            'blowup_factor': self.blowup_factor,
            'workers': self.workers,
            'log_level': self.log_level,
            'output_dir': self.output_dir,
        }

    @classmethod
    def from_env(cls) -> 'SimulationConfig':
        """
        Create SimulationConfig from environment variables, with defaults.

        Recognised environment variables:
        - FILAMENT_SEWING_TOL, FILAMENT_CHEN_TOL
        - FILAMENT_QUADRATURE_POINTS, FILAMENT_SPECTRAL_RESOLUTION
        - FILAMENT_ANGULAR_NODES, FILAMENT_RADIAL_NODES, FILAMENT_FOURIER_TOL
        - FILAMENT_BLOWUP_FACTOR, FILAMENT_WORKERS
        - FILAMENT_LOG_LEVEL, FILAMENT_OUTPUT_DIR

        Returns:
            SimulationConfig: configuration loaded from the environment

        Raises:
            ConfigError: if a variable is present but not a valid number
        """
        # .env 파일이 있으면 먼저 로드
        from dotenv import load_dotenv
        load_dotenv()

        defaults = cls()
        numeric = {
            'sewing_tolerance': ('FILAMENT_SEWING_TOL', float),
            'chen_tolerance': ('FILAMENT_CHEN_TOL', float),
            'quadrature_points': ('FILAMENT_QUADRATURE_POINTS', int),
            'spectral_resolution': ('FILAMENT_SPECTRAL_RESOLUTION', int),
            'angular_nodes': ('FILAMENT_ANGULAR_NODES', int),
            'radial_nodes': ('FILAMENT_RADIAL_NODES', int),
            'fourier_tolerance': ('FILAMENT_FOURIER_TOL', float),
            'blowup_factor': ('FILAMENT_BLOWUP_FACTOR', float),
            'workers': ('FILAMENT_WORKERS', int),
        }

        values: Dict[str, Any] = {}
        invalid_vars = []
        for name, (var, cast) in numeric.items():
            raw = os.getenv(var)
            if raw is None or not raw.strip():
                values[name] = getattr(defaults, name)
                continue
            try:
                values[name] = cast(raw)
            except ValueError:
                invalid_vars.append(var)

        if invalid_vars:
            raise ConfigError(f"Invalid numeric environment variables: {', '.join(invalid_vars)}")

        values['log_level'] = os.getenv('FILAMENT_LOG_LEVEL', defaults.log_level).upper()
        values['output_dir'] = os.getenv('FILAMENT_OUTPUT_DIR', defaults.output_dir)

        return cls(**values)
