"""
시나리오 실행 서비스 모듈
시나리오에 따라 곡선과 커널을 만들고 validate / energy / evolve / sweep 파이프라인을 실행하여
실행 디렉터리에 실행 로그, 스냅샷, summary.json 을 기록합니다.
"""

import itertools
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

import sys
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.app_config import SimulationConfig
from models.check_result import CheckResult, SuiteReport, RunOutcome
from models.errors import FilamentError, ConfigError
from models.filament_state import FilamentState
from models.scenario import Scenario, CurveBlock
from handlers.run_log_handler import RunLogHandler, dump_json
from handlers.snapshot_handler import SnapshotHandler, load_curve
from parsers.scenario_parser import apply_overrides
from services.rough_path_service import (lift_piecewise_linear, circle_curve, trefoil_curve,
                                         sample_brownian_bridge)
from services.kernel_service import get_kernel_service
from services.filament_fields import FilamentFieldService
from services.evolution_service import EvolutionService, gronwall_envelopes, envelope_series
from services.validation_suite import validate_suite, SUITE_CHECKS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILED = 3

ENERGY_CHECKS = ('energy_agreement', 'energy_positivity', 'velocity_bound', 'kernel_hypothesis',
                 'remainder_increment', 'energy_upper_bound')
EVOLVE_CHECKS = ('energy_drift', 'norms_finite', 'gronwall_envelopes')
PIPELINE_CHECKS = {
    'validate': SUITE_CHECKS,
    'energy': ENERGY_CHECKS,
    'evolve': EVOLVE_CHECKS,
}
AGREEMENT_TOLERANCE = 1e-3
DRIFT_TOLERANCE = {'smooth': 1e-6, 'rough': 1e-3}
SWEEP_SUMMARY_NAME = "sweep_summary.json"
# 실행 환경에 따라 달라지는 설정은 요약에서 제외
VOLATILE_CONFIG_KEYS = ('workers', 'log_level', 'output_dir')


def build_curve(curve: CurveBlock) -> Tuple[np.ndarray, float]:
    """
    곡선 블록에서 노드와 Hölder 지수를 만듭니다.

    kind = file 이면 격자 크기와 ν 는 스냅샷 헤더의 값을 사용합니다.

    Returns:
        (곡선 노드 (N, 3), ν)
    """
    if curve.kind == 'circle':
        return circle_curve(curve.n_points, curve.scale), curve.nu
    if curve.kind == 'trefoil':
        return trefoil_curve(curve.n_points, curve.scale), curve.nu
    if curve.kind == 'brownian_bridge':
        return sample_brownian_bridge(curve.n_points, curve.seed, None, curve.scale), curve.nu
    samples, header = load_curve(curve.path)
    if not 1.0 / 3.0 < header['nu'] < 1.0:
        raise ConfigError(f"{curve.path}: snapshot nu must satisfy ν∈(1/3,1), got {header['nu']}")
    return samples, header['nu']


def sweep_members(scenario: Scenario) -> List[Tuple[Dict[str, Any], Scenario]]:
    """
    sweep 매개변수의 데카르트 곱으로 구성원 시나리오 목록을 만듭니다.

    Raises:
        ConfigError: sweep 매개변수가 없거나 값이 범위를 벗어날 때
    """
    if not scenario.sweep:
        raise ConfigError("sweep pipeline needs at least one parameter in [sweep]")
    keys = sorted(scenario.sweep)
    sweep_dir = os.path.join(scenario.output_dir, scenario.name)
    members = []
    for index, values in enumerate(itertools.product(*(scenario.sweep[k] for k in keys))):
        params = dict(zip(keys, values))
        overrides = dict(params)
        overrides.update({
            'name': f"run_{index:03d}",
            'pipeline': scenario.sweep_pipeline,
            'output_dir': sweep_dir,
        })
        members.append((params, apply_overrides(scenario, overrides)))
    return members


def _run_member(member: Tuple[Scenario, SimulationConfig]) -> Dict[str, Any]:
    """프로세스 풀 작업 단위: 구성원 하나를 실행하고 요약 항목을 반환"""
    scenario, config = member
    service = ScenarioService(config)
    outcome = service.run(scenario)
    return {'name': outcome.name, 'exit_code': outcome.exit_code,
            'failed': outcome.summary.get('failed', [])}


class ScenarioService:
    """시나리오 실행 서비스 클래스"""

    def __init__(self, config: Optional[SimulationConfig] = None):
        """
        ScenarioService 초기화

        Args:
            config: 수치 설정
        """
        self.config = config or SimulationConfig()

    def run(self, scenario: Scenario) -> RunOutcome:
        """
        시나리오를 실행합니다.

        설정 오류는 요약에 기록한 뒤 종료 코드 2, 수치 오류와 실패한 검사는 종료 코드 3 입니다.

        Args:
            scenario: 검증된 시나리오

        Returns:
            RunOutcome: 종료 코드와 요약
        """
        if scenario.pipeline == 'sweep':
            return self.run_sweep(scenario)

        run_dir = os.path.join(scenario.output_dir, scenario.name)
        run_log = RunLogHandler(run_dir)
        start_time = time.time()
        logger.info(f"시나리오 '{scenario.name}' 실행 시작: pipeline={scenario.pipeline}, 출력 {run_dir}")

        summary: Dict[str, Any] = {
            'scenario': scenario.to_dict(),
            'config': self._summary_config(scenario),
        }
        report = None
        try:
            self._check_names(scenario)
            config = self._config_for(scenario)
            if scenario.pipeline == 'validate':
                report = validate_suite(config, scenario.kernel, scenario.curve.seed,
                                        scenario.inject_area_perturbation, scenario.checks or None)
            elif scenario.pipeline == 'energy':
                report, results = self._run_energy(scenario, config, run_log, run_dir)
                summary['results'] = results
            else:
                report, results = self._run_evolve(scenario, config, run_log, run_dir)
                summary['results'] = results
            exit_code = EXIT_OK if report.passed else EXIT_FAILED
        except ConfigError as e:
            logger.error(f"시나리오 설정 오류: {str(e)}")
            summary['error'] = {'check': e.check, 'message': str(e)}
            exit_code = EXIT_CONFIG
        except FilamentError as e:
            logger.error(f"수치 검사 '{e.check}' 실패: {str(e)}")
            summary['error'] = {'check': e.check, 'message': str(e)}
            exit_code = EXIT_FAILED

        checks = report.get_summary() if report is not None else {'checks': [], 'failed': []}
        summary['checks'] = checks['checks']
        summary['failed'] = checks['failed'] + ([summary['error']['check']] if 'error' in summary else [])
        summary['passed'] = exit_code == EXIT_OK
        summary['exit_code'] = exit_code
        run_log.write_summary(summary)

        logger.info(
            f"시나리오 '{scenario.name}' 완료: 종료 코드 {exit_code} ({time.time() - start_time:.2f}초)"
        )
        return RunOutcome(name=scenario.name, run_dir=run_dir, exit_code=exit_code,
                          summary=summary, report=report)

    def _summary_config(self, scenario: Scenario) -> Dict[str, Any]:
        data = self._config_for(scenario).to_dict()
        for key in VOLATILE_CONFIG_KEYS:
            data.pop(key, None)
        return data

    def _config_for(self, scenario: Scenario) -> SimulationConfig:
        if scenario.kernel_resolution:
            return replace(self.config, spectral_resolution=scenario.kernel_resolution)
        return self.config

    @staticmethod
    def _check_names(scenario: Scenario):
        known = PIPELINE_CHECKS[scenario.pipeline]
        unknown = [name for name in scenario.checks if name not in known]
        if unknown:
            raise ConfigError(
                f"checks not available in the {scenario.pipeline} pipeline: {', '.join(unknown)}"
            )

    # ------------------------------------------------------------------
    # energy
    # ------------------------------------------------------------------

    def _run_energy(self, scenario: Scenario, config: SimulationConfig, run_log: RunLogHandler,
                    run_dir: str) -> Tuple[SuiteReport, Dict[str, Any]]:
        samples, nu = build_curve(scenario.curve)
        base = lift_piecewise_linear(samples, nu)
        c = FilamentState.initial(base).controlled()
        fields = FilamentFieldService(scenario.kernel, config)
        kernel = scenario.kernel
        smooth = nu > 0.5

        SnapshotHandler(run_dir).write_snapshot(0, samples, nu, scenario.curve.seed, scenario.curve.scale)

        with_fourier = smooth and scenario.check_enabled('energy_agreement')
        energy = fields.energy_report(c, with_fourier=with_fourier)
        record = {'t': 0.0}
        record.update(energy.to_dict())
        run_log.append(record)

        report = SuiteReport()
        results: Dict[str, Any] = {'energy': energy.to_dict(), 'nu': nu, 'n_points': base.n_points}

        if smooth and scenario.check_enabled('energy_agreement'):
            report.add(CheckResult(
                name='energy_agreement', passed=energy.agreement <= AGREEMENT_TOLERANCE,
                measured=energy.agreement, threshold=AGREEMENT_TOLERANCE,
                detail="max pairwise relative difference of rough, double-sum and k-space energies",
            ))

        if scenario.check_enabled('energy_positivity'):
            floor = -1e-9 * kernel.gamma_strength ** 2 / kernel.mu
            report.add(CheckResult(name='energy_positivity', passed=energy.h_rough >= floor,
                                   measured=energy.h_rough, threshold=floor))

        if scenario.check_enabled('velocity_bound'):
            bounds = [fields.velocity_bound_check(c, n, energy.h_rough, scenario.curve.seed) for n in range(3)]
            ratios = {b.name: (b.sampled_max / b.bound if b.bound > 0 else 0.0) for b in bounds}
            results['velocity_bounds'] = [b.to_dict() for b in bounds]
            report.add(CheckResult(name='velocity_bound', passed=all(b.passed for b in bounds),
                                   measured=max(ratios.values()), threshold=1.0,
                                   detail="sampled sup / spectral bound, n = 0, 1, 2", extras=ratios))

        if scenario.check_enabled('kernel_hypothesis'):
            hypothesis = get_kernel_service(kernel, config).validate_hypothesis(seed=scenario.curve.seed)
            results['kernel_hypothesis'] = hypothesis.to_dict()
            report.add(CheckResult(name='kernel_hypothesis', passed=hypothesis.passed,
                                   measured=hypothesis.min_ratio, threshold=-1e-9,
                                   detail="evenness, non-negative transform, finite weighted integral",
                                   extras={'parseval_error': hypothesis.parseval_error}))

        if scenario.check_enabled('remainder_increment'):
            increment = fields.remainder_increment_bound(c, energy.h_rough)
            report.add(CheckResult(name='remainder_increment', passed=increment.passed,
                                   measured=increment.sampled_max, threshold=increment.bound))

        if scenario.check_enabled('energy_upper_bound'):
            upper = fields.energy_upper_bound(c, energy.h_rough)
            ratio = upper.sampled_max / upper.bound if upper.bound > 0 else 0.0
            report.add(CheckResult(name='energy_upper_bound', passed=bool(np.isfinite(ratio)),
                                   measured=ratio, threshold=float('inf'),
                                   detail="energy over the C4 and D-norm bound shape"))

        return report, results

    # ------------------------------------------------------------------
    # evolve
    # ------------------------------------------------------------------

    def _run_evolve(self, scenario: Scenario, config: SimulationConfig, run_log: RunLogHandler,
                    run_dir: str) -> Tuple[SuiteReport, Dict[str, Any]]:
        samples, nu = build_curve(scenario.curve)
        base = lift_piecewise_linear(samples, nu)
        run = scenario.run
        evolution = EvolutionService(scenario.kernel, config)

        diag, snapshots = evolution.evolve(FilamentState.initial(base), run.t_final, run.dt, run.scheme,
                                           run.diagnostics_every, run.snapshot_every)

        envelopes = gronwall_envelopes(diag)
        series = envelope_series(diag)
        measured = {
            'sup_gamma': diag.sup_gamma,
            'sup_gamma_prime': diag.sup_gamma_prime,
            'holder_gamma': diag.holder_gamma,
            'holder_gamma_prime': diag.holder_gamma_prime,
            'remainder_norm': diag.remainder_norm,
        }
        for i, t in enumerate(diag.times):
            flags = {name: bool(values[i] <= series[name][i] * (1.0 + 1e-9) + 1e-12)
                     for name, values in measured.items()}
            record = {'t': t, 'energy': diag.energy[i], 'envelopes': flags}
            record.update({name: values[i] for name, values in measured.items()})
            run_log.append(record)

        snapshot_handler = SnapshotHandler(run_dir)
        for index, (t, gamma) in enumerate(snapshots):
            snapshot_handler.write_snapshot(index, gamma, nu, scenario.curve.seed, scenario.curve.scale, t)

        report = SuiteReport()
        if scenario.check_enabled('energy_drift'):
            tolerance = DRIFT_TOLERANCE['smooth' if nu > 0.5 else 'rough']
            report.add(CheckResult(name='energy_drift', passed=diag.energy_drift <= tolerance,
                                   measured=diag.energy_drift, threshold=tolerance,
                                   detail=f"{run.scheme}, dt={run.dt}, T={run.t_final}"))
        if scenario.check_enabled('norms_finite'):
            report.add(CheckResult(name='norms_finite', passed=diag.all_finite(),
                                   measured=float(max(diag.sup_gamma_prime)), threshold=float('inf'),
                                   detail="largest |gamma'| over the run"))
        if scenario.check_enabled('gronwall_envelopes'):
            detail = "all envelopes hold" if envelopes.passed else f"failed: {', '.join(envelopes.failed())}"
            report.add(CheckResult(name='gronwall_envelopes', passed=envelopes.passed,
                                   measured=max(envelopes.worst_ratio.values()), threshold=1.0,
                                   detail=detail, extras=dict(envelopes.worst_ratio)))

        results = {
            'diagnostics': diag.to_dict(),
            'envelopes': envelopes.to_dict(),
            'snapshots': len(snapshots),
            'nu': nu,
            'n_points': base.n_points,
        }
        return report, results

    # ------------------------------------------------------------------
    # sweep
    # ------------------------------------------------------------------

    def run_sweep(self, scenario: Scenario) -> RunOutcome:
        """
        매개변수 조합마다 구성원 시나리오를 실행하고 sweep_summary.json 을 기록합니다.

        구성원은 각자 하위 디렉터리에 기록하므로 프로세스 간 쓰기 경합이 없습니다.

        Returns:
            RunOutcome: 모든 구성원이 통과하면 종료 코드 0
        """
        sweep_dir = os.path.join(scenario.output_dir, scenario.name)
        os.makedirs(sweep_dir, exist_ok=True)
        members = sweep_members(scenario)
        workers = min(self.config.workers, len(members))
        start_time = time.time()
        logger.info(f"sweep '{scenario.name}' 시작: 구성원 {len(members)}개, 작업자 {workers}개")

        jobs = [(member, self.config) for _, member in members]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(_run_member, jobs))
        else:
            results = [_run_member(job) for job in jobs]

        entries = []
        for (params, _), result in zip(members, results):
            entry = {'params': params}
            entry.update(result)
            entries.append(entry)
        exit_code = max([r['exit_code'] for r in results] + [EXIT_OK])

        summary = {
            'scenario': scenario.to_dict(),
            'members': entries,
            'passed': exit_code == EXIT_OK,
            'exit_code': exit_code,
            'failed': [e['name'] for e in entries if e['exit_code'] != EXIT_OK],
        }
        path = os.path.join(sweep_dir, SWEEP_SUMMARY_NAME)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(dump_json(summary) + "\n")

        logger.info(
            f"sweep '{scenario.name}' 완료: {len(entries) - len(summary['failed'])}/{len(entries)} 통과 "
            f"({time.time() - start_time:.2f}초)"
        )
        return RunOutcome(name=scenario.name, run_dir=sweep_dir, exit_code=exit_code, summary=summary)
