# Data models package

from .app_config import SimulationConfig
from .circle_grid import CircleGrid
from .rough_path import RoughPath, ControlledCurve, ControlledNorm
from .kernel_spec import KernelSpec, SpectralTable, HypothesisReport, KQuadrature
from .field_results import (IntegralResult, QRemainderReport, CompositionReport,
                            VelocityEvaluation, EnergyReport, BoundReport)
from .filament_state import FilamentState, TrajectoryPoint, RunDiagnostics, EnvelopeReport
from .scenario import Scenario, CurveBlock, RunBlock
from .check_result import CheckResult, SuiteReport, RunOutcome

__all__ = [
    'SimulationConfig', 'CircleGrid', 'RoughPath', 'ControlledCurve', 'ControlledNorm',
    'KernelSpec', 'SpectralTable', 'HypothesisReport', 'KQuadrature',
    'IntegralResult', 'QRemainderReport', 'CompositionReport', 'VelocityEvaluation',
    'EnergyReport', 'BoundReport', 'FilamentState', 'TrajectoryPoint', 'RunDiagnostics', 'EnvelopeReport',
    'Scenario', 'CurveBlock', 'RunBlock', 'CheckResult', 'SuiteReport', 'RunOutcome',
]
