"""
데이터 모델 테스트
격자, 설정, 검사 결과, 시나리오, 진단 기록, 상태 검증
"""

import sys
import os

import numpy as np
import pytest

# 경로 설정
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from models import (SimulationConfig, CircleGrid, CheckResult, SuiteReport, Scenario, CurveBlock, RunBlock,
                    RunDiagnostics, BoundReport, EnergyReport, FilamentState, KQuadrature, KernelSpec)
from models.errors import ConfigError, GridMismatch, FilamentError
from services.rough_path_service import lift_piecewise_linear, circle_curve


def test_circle_grid():
    grid = CircleGrid(16)
    assert grid.spacing == pytest.approx(1 / 16)
    assert grid.nodes[-1] == pytest.approx(15 / 16)
    assert grid.coarsen().n_points == 8
    for bad in (12, 4, 2048, True):
        with pytest.raises(ValueError):
            CircleGrid(bad)


def test_config_from_env(monkeypatch):
    monkeypatch.setenv('FILAMENT_WORKERS', '3')
    monkeypatch.setenv('FILAMENT_FOURIER_TOL', '1e-5')
    monkeypatch.setenv('FILAMENT_LOG_LEVEL', 'debug')
    config = SimulationConfig.from_env()
    assert config.workers == 3
    assert config.fourier_tolerance == 1e-5
    assert config.log_level == 'DEBUG'
    assert config.spectral_resolution == 256


def test_config_from_env_rejects_bad_values(monkeypatch):
    monkeypatch.setenv('FILAMENT_WORKERS', 'many')
    with pytest.raises(ConfigError) as excinfo:
        SimulationConfig.from_env()
    assert 'FILAMENT_WORKERS' in str(excinfo.value)

    monkeypatch.setenv('FILAMENT_WORKERS', '0')
    with pytest.raises(ConfigError):
        SimulationConfig.from_env()


def test_config_validation():
    with pytest.raises(ConfigError):
        SimulationConfig(damping_factors=(1e-3, 5e-4))
    with pytest.raises(ConfigError):
        SimulationConfig(blowup_factor=1.0)
    assert SimulationConfig().to_dict()['damping_factors'] == [1e-3, 5e-4, 2.5e-4]


def test_config_error_is_a_value_error():
    error = ConfigError("bad")
    assert isinstance(error, ValueError)
    assert isinstance(error, FilamentError)
    assert error.check == 'config'
    assert FilamentError("x", check='custom').check == 'custom'


def test_check_result_serialization():
    result = CheckResult(name='chen_relation', passed=True, measured=1e-14, threshold=1e-12,
                         elapsed=0.5, extras={'n': 3, 'ratio': float('inf')})
    data = result.to_dict()
    assert 'elapsed' not in data
    assert data['extras'] == {'n': 3, 'ratio': 'inf'}
    assert result.to_dict(include_timing=True)['elapsed'] == 0.5
    assert '"chen_relation"' in result.to_json()

    with pytest.raises(ValueError):
        CheckResult(name='', passed=True, measured=0.0, threshold=0.0)
    with pytest.raises(ValueError):
        CheckResult(name='x', passed=1, measured=0.0, threshold=0.0)


def test_suite_report():
    report = SuiteReport()
    report.add(CheckResult(name='a', passed=True, measured=0.0, threshold=1.0))
    report.add(CheckResult(name='b', passed=False, measured=2.0, threshold=1.0, elapsed=1.25))
    assert not report.passed
    assert report.failed() == ['b']
    summary = report.get_summary()
    assert summary['n_checks'] == 2
    assert all('elapsed' not in c for c in summary['checks'])
    table = report.format_table().splitlines()
    assert len(table) == 3
    assert 'FAIL' in table[2] and '1.25' in table[2]


def test_scenario_blocks():
    with pytest.raises(ConfigError):
        CurveBlock(kind='spiral')
    with pytest.raises(ConfigError):
        CurveBlock(kind='file')
    with pytest.raises(ConfigError):
        CurveBlock(nu=1.0)
    with pytest.raises(ConfigError):
        RunBlock(scheme='leapfrog')
    with pytest.raises(ConfigError):
        Scenario(pipeline='train')
    with pytest.raises(ConfigError):
        Scenario(sweep_pipeline='validate')
    assert RunBlock(t_final=0.1, dt=0.025).n_steps == 4

    scenario = Scenario(checks=['energy_positivity'], kernel=KernelSpec(2.0, 0.5))
    data = scenario.to_dict()
    assert data['kernel'] == {'gamma_strength': 2.0, 'mu': 0.5, 'max_order': 4}
    assert data['curve']['nu'] == 0.9


def test_run_diagnostics():
    diag = RunDiagnostics()
    assert diag.energy_drift == 0.0
    norms = {'sup_gamma': 1.0, 'sup_gamma_prime': 1.0, 'holder_gamma': 2.0,
             'holder_gamma_prime': 0.0, 'remainder_norm': 0.0}
    for t, h in ((0.0, 2.0), (0.1, 2.002), (0.2, 1.999)):
        diag.record(t, h, norms)
    assert diag.energy_drift == pytest.approx(1e-3)
    assert diag.all_finite()
    assert diag.to_dict()['times'] == [0.0, 0.1, 0.2]

    diag.record(0.3, float('nan'), norms)
    assert not diag.all_finite()

    still = RunDiagnostics()
    still.record(0.0, 0.0, norms)
    still.record(0.1, 1e-14, norms)
    assert still.energy_drift == pytest.approx(1e-14)


def test_bound_and_energy_reports():
    report = BoundReport(name='velocity_bound_n0', order=0, sampled_max=0.5, bound=1.0, n_samples=10)
    assert report.passed and report.slack == pytest.approx(2.0)
    assert report.to_dict()['passed'] is True
    assert not BoundReport('b', 1, 2.0, 1.0, 10).passed
    assert BoundReport('z', 0, 0.0, 0.0, 10).slack == float('inf')

    energy = EnergyReport(h_rough=-1e-12, h_double=None, h_fourier=None, agreement=0.0)
    assert energy.is_nonnegative
    assert energy.to_dict()['h_double'] is None


def test_filament_state_shapes():
    base = lift_piecewise_linear(circle_curve(16), 0.9)
    state = FilamentState.initial(base)
    assert np.array_equal(state.gamma_prime[3], np.eye(3))
    assert state.controlled().y.shape == (16, 3)
    with pytest.raises(GridMismatch):
        FilamentState(0.0, np.zeros((8, 3)), np.zeros((16, 3, 3)), base)
    with pytest.raises(GridMismatch):
        FilamentState(0.0, np.zeros((16, 3)), np.zeros((16, 3)), base)

    later = state.advanced(0.1, np.ones((16, 3)), np.zeros((16, 3, 3)))
    assert later.t == pytest.approx(0.1)
    assert np.allclose(later.gamma, state.gamma + 1.0)


def test_rough_path_with_area():
    base = lift_piecewise_linear(circle_curve(16), 0.9)
    area = base.area.copy()
    area[4, 1, 0, 2] += 1.0
    changed = base.with_area(area)
    assert changed.area[4, 1, 0, 2] == base.area[4, 1, 0, 2] + 1.0
    assert changed.x is base.x
    with pytest.raises(GridMismatch):
        base.with_area(area[:8])
    with pytest.raises(ValueError):
        lift_piecewise_linear(circle_curve(16), 1.0)


def test_k_quadrature_weights():
    dirs, weights = KQuadrature().directions()
    assert dirs.shape == (26, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert np.sum(weights) == pytest.approx(4 * np.pi)

    refined = KQuadrature().refined()
    assert refined.angular_nodes == 8 and refined.radial_nodes == 128
    dirs, weights = refined.directions()
    assert np.sum(weights) == pytest.approx(4 * np.pi)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
