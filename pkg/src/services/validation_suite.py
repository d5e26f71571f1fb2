"""
검증 스위트 모듈
코체인, sewing, Chen 관계, Young 적분, 합성, 커널 가정, 에너지, 속도 상계,
보존 검사를 한 번에 실행하고 표로 보고합니다.
"""

import logging
import time
from typing import Callable, Iterable, List, Optional

import numpy as np

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.app_config import SimulationConfig
from models.check_result import CheckResult, SuiteReport
from models.errors import FilamentError, ConfigError
from models.filament_state import FilamentState
from models.kernel_spec import KernelSpec
from models.rough_path import RoughPath
from services.circle_algebra import delta1, delta2, holder_norm_2, holder_norm_3, sewing, sewing_bound, sup_norm
from services.rough_path_service import (lift_piecewise_linear, sample_brownian_bridge, circle_curve,
                                         perturbed_circle_curve, trefoil_curve, chen_defect)
from services.rough_integral import rough_integral, young_integral, compose_smooth, composition_report
from services.smooth_maps import ExponentialComponentMap, QuadraticMap
from services.kernel_service import get_kernel_service
from services.filament_fields import FilamentFieldService
from services.evolution_service import EvolutionService, gronwall_envelopes

logger = logging.getLogger(__name__)

SUITE_CHECKS = (
    'cochain_exactness', 'sewing_bound', 'chen_relation', 'young_agreement',
    'composition_remainder', 'kernel_hypothesis', 'energy_agreement', 'energy_positivity',
    'velocity_bound', 'energy_upper_bound', 'conservation_smoke', 'drift_order',
)
SEWING_EXPONENTS = (1.1, 1.2, 1.5)
HYPOTHESIS_MU = (0.25, 0.5, 1.0, 2.0)
PERTURBATION = 1e-3
BRIDGE_SEEDS = 10
POSITIVITY_SEEDS = 100
DRIFT_THRESHOLD = {'circle': 1e-6, 'bridge': 1e-3}
DRIFT_ORDER_DTS = (0.05, 0.025, 0.0125)
DRIFT_ORDER_MIN = 3.5


def _timed(name: str, check: Callable[[], CheckResult]) -> CheckResult:
    """검사 실행 시간 기록, 수치 오류는 FAIL 로 기록"""
    start_time = time.time()
    try:
        result = check()
    except FilamentError as e:
        logger.error(f"검사 '{name}' 실행 실패 ({e.check}): {str(e)}")
        result = CheckResult(name=name, passed=False, measured=float('nan'), threshold=float('nan'),
                             detail=f"{type(e).__name__}: {str(e)}")
    result.elapsed = time.time() - start_time
    status = 'PASS' if result.passed else 'FAIL'
    logger.info(f"검사 '{name}' {status}: 측정 {result.measured:.4e}, 기준 {result.threshold:.4e}")
    return result


def check_cochain_exactness(seed: int = 0, n_points: int = 64, trials: int = 100) -> CheckResult:
    """무작위 격자 함수 100개에서 δ₂δ₁g = 0"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        g = rng.standard_normal((n_points, 3))
        worst = max(worst, sup_norm(delta2(delta1(g))) / max(sup_norm(g), 1.0))
    threshold = 1e-13
    return CheckResult(name='cochain_exactness', passed=worst <= threshold, measured=worst,
                       threshold=threshold, detail=f"{trials} random grid functions, N={n_points}")


def check_sewing_bound(config: SimulationConfig, seed: int = 0, n_points: int = 32,
                       trials: int = 20) -> CheckResult:
    """
    δ₂-완전 입력에서 ‖Λh‖_μ ≤ (2^μ−2)^{-1}‖h‖_μ 와 δ₂Λh = h

    측정값은 노름 비율의 최댓값 (1 이하면 통과) 입니다.
    """
    rng = np.random.default_rng(seed)
    worst_ratio = 0.0
    worst_defect = 0.0
    for mu in SEWING_EXPONENTS:
        for _ in range(trials):
            germ = rng.standard_normal((n_points, n_points, 3))
            germ[np.arange(n_points), np.arange(n_points)] = 0.0
            h = delta2(germ)
            sewn = sewing(h, mu, config.sewing_tolerance)
            lhs = holder_norm_2(sewn, mu, metric='chart', ordered=True)
            rhs = sewing_bound(mu) * holder_norm_3(h, mu)
            worst_ratio = max(worst_ratio, lhs / rhs if rhs > 0 else 0.0)
            worst_defect = max(worst_defect, sup_norm(delta2(sewn) - h) / max(sup_norm(h), 1e-300))
    passed = worst_ratio <= 1.0 and worst_defect <= config.sewing_tolerance
    return CheckResult(name='sewing_bound', passed=passed, measured=worst_ratio, threshold=1.0,
                       detail=f"mu in {list(SEWING_EXPONENTS)}, {trials} inputs each",
                       extras={'exactness_defect': worst_defect})


def perturb_area(rp: RoughPath, size: float = PERTURBATION) -> RoughPath:
    """면적 한 성분 (5, 3) 을 size × scale² 만큼 교란한 복사본"""
    area = rp.area.copy()
    area[5, 3, 0, 1] += size * rp.scale ** 2
    return rp.with_area(area)


def check_chen_relation(config: SimulationConfig, seed: int = 0, n_points: int = 128,
                        inject_area_perturbation: bool = False) -> CheckResult:
    """원, 트레포일, 브라운 다리 10개의 구간별 선형 리프트에서 Chen 결함 / scale²"""
    curves = [('circle', circle_curve(n_points), 0.9), ('trefoil', trefoil_curve(n_points), 0.9)]
    for k in range(BRIDGE_SEEDS):
        curves.append((f"bridge_{seed + k}", sample_brownian_bridge(n_points, seed + k), 0.4))

    worst = 0.0
    worst_curve = ''
    for label, samples, nu in curves:
        rp = lift_piecewise_linear(samples, nu)
        if inject_area_perturbation and label == 'circle':
            logger.warning("면적 교란 주입: circle 리프트의 XX(5, 3)")
            rp = perturb_area(rp)
        defect = chen_defect(rp, seed=seed) / rp.scale ** 2
        if defect >= worst:
            worst, worst_curve = defect, label
    return CheckResult(name='chen_relation', passed=worst <= config.chen_tolerance, measured=worst,
                       threshold=config.chen_tolerance,
                       detail=f"{len(curves)} curves at N={n_points}, worst {worst_curve}",
                       extras={'area_perturbed': inject_area_perturbation})


def young_comparison(n_points: int, nu: float = 0.9) -> tuple:
    """단위 원 위 ∮ e^{x₁} dx₂ 의 러프 적분과 Young 적분"""
    samples = circle_curve(n_points)
    base = lift_piecewise_linear(samples, nu)
    c = FilamentState.initial(base).controlled()
    integrand = compose_smooth(ExponentialComponentMap(0, 1), c)
    rough = float(rough_integral(integrand, c).total)
    young = float(young_integral(integrand.y, samples, nu))
    return rough, young


def check_young_agreement(n_points: int = 512) -> CheckResult:
    rough, young = young_comparison(n_points)
    relative = abs(rough - young) / abs(young)
    threshold = 1e-3
    return CheckResult(name='young_agreement', passed=relative <= threshold, measured=relative,
                       threshold=threshold, detail=f"unit circle, nu=0.9, N={n_points}",
                       extras={'rough': rough, 'young': young})


def check_composition_remainder(config: SimulationConfig, seed: int = 0, n_points: int = 64) -> CheckResult:
    """이차 사상에서 정의식 나머지와 표현식 나머지 비교 (원, 브라운 다리)"""
    worst = 0.0
    for samples, nu in ((circle_curve(n_points), 0.9), (sample_brownian_bridge(n_points, seed), 0.4)):
        base = lift_piecewise_linear(samples, nu)
        c = FilamentState.initial(base).controlled()
        report = composition_report(QuadraticMap(), c, config.quadrature_points)
        worst = max(worst, report.relative_error)
    threshold = 1e-9
    return CheckResult(name='composition_remainder', passed=worst <= threshold, measured=worst,
                       threshold=threshold, detail="quadratic map over circle and bridge")


def check_kernel_hypothesis(config: SimulationConfig, seed: int = 0) -> CheckResult:
    """μ ∈ {0.25, 0.5, 1, 2} 에서 커널 가정과 Parseval 오차"""
    worst_parseval = 0.0
    failed = []
    for mu in HYPOTHESIS_MU:
        report = get_kernel_service(KernelSpec(1.0, mu), config).validate_hypothesis(seed=seed)
        worst_parseval = max(worst_parseval, report.parseval_error)
        if not report.passed:
            failed.append(mu)
    threshold = 1e-4
    passed = not failed and worst_parseval <= threshold
    detail = f"mu in {list(HYPOTHESIS_MU)}" + (f", failed clauses at mu={failed}" if failed else "")
    return CheckResult(name='kernel_hypothesis', passed=passed, measured=worst_parseval,
                       threshold=threshold, detail=detail)


def check_energy_agreement(fields: FilamentFieldService, n_points: int = 256) -> CheckResult:
    """단위 원에서 세 가지 에너지의 최대 쌍별 상대 차이"""
    samples = circle_curve(n_points)
    base = lift_piecewise_linear(samples, 0.9)
    c = FilamentState.initial(base).controlled()
    report = fields.energy_report(c)
    threshold = 1e-3
    return CheckResult(name='energy_agreement', passed=report.agreement <= threshold,
                       measured=report.agreement, threshold=threshold,
                       detail=f"unit circle, N={n_points}", extras=report.to_dict())


def check_energy_positivity(fields: FilamentFieldService, seed: int = 0, n_points: int = 256,
                            seeds: int = POSITIVITY_SEEDS) -> CheckResult:
    """브라운 다리 100개에서 최소 러프 에너지 ≥ −1e−9 Γ²/μ"""
    kernel = fields.kernel
    floor = -1e-9 * kernel.gamma_strength ** 2 / kernel.mu
    lowest = float('inf')
    lowest_seed = seed
    for k in range(seeds):
        base = lift_piecewise_linear(sample_brownian_bridge(n_points, seed + k), 0.4)
        energy = fields.energy_rough(FilamentState.initial(base).controlled())
        if energy < lowest:
            lowest, lowest_seed = energy, seed + k
    return CheckResult(name='energy_positivity', passed=lowest >= floor, measured=lowest, threshold=floor,
                       detail=f"{seeds} bridges, N={n_points}, nu=0.4, lowest at seed {lowest_seed}")


def check_velocity_bound(fields: FilamentFieldService, seed: int = 0, n_points: int = 64,
                         bridges: int = BRIDGE_SEEDS) -> CheckResult:
    """원, 트레포일, 브라운 다리에서 n = 0, 1, 2 의 표본 최대 / 스펙트럼 상계 (1 이하면 통과)"""
    curves = [('circle', circle_curve(n_points), 0.9), ('trefoil', trefoil_curve(n_points, 0.5), 0.9)]
    for k in range(bridges):
        curves.append((f"bridge_{seed + k}", sample_brownian_bridge(n_points, seed + k), 0.4))

    worst = 0.0
    worst_curve = ''
    for label, samples, nu in curves:
        c = FilamentState.initial(lift_piecewise_linear(samples, nu)).controlled()
        energy = fields.energy_rough(c)
        for n in range(3):
            report = fields.velocity_bound_check(c, n, energy, seed)
            if report.bound > 0:
                ratio = report.sampled_max / report.bound
            else:
                ratio = float('inf') if report.sampled_max > 0 else 0.0
            if ratio >= worst:
                worst, worst_curve = ratio, f"{label} n={n}"
    return CheckResult(name='velocity_bound', passed=worst <= 1.0, measured=worst, threshold=1.0,
                       detail=f"circle, trefoil and {bridges} bridges, n = 0, 1, 2, worst {worst_curve}")


def check_energy_upper_bound(fields: FilamentFieldService, n_points: int = 64) -> CheckResult:
    """H / (‖φ‖_{C⁴}‖γ‖_D⁴(1+‖γ‖_D)²) 비율 기록; 유한하면 통과"""
    c = FilamentState.initial(lift_piecewise_linear(circle_curve(n_points), 0.9)).controlled()
    report = fields.energy_upper_bound(c)
    ratio = report.sampled_max / report.bound if report.bound > 0 else 0.0
    return CheckResult(name='energy_upper_bound', passed=bool(np.isfinite(ratio)), measured=ratio,
                       threshold=float('inf'), detail="fitted constant on the unit circle",
                       extras=report.to_dict())


def check_conservation_smoke(kernel: KernelSpec, config: SimulationConfig, seed: int = 0) -> CheckResult:
    """
    RK4 보존 검사: 단위 원 (N=128, T=0.5, dt=1e-3) 드리프트 ≤ 1e-6,
    브라운 다리 (ν=0.4, N=256, T=0.2, dt=1e-2) 드리프트 ≤ 1e-3, 두 실행 모두 노름 유한, 포락선 성립

    측정값은 임계값 대비 드리프트 비율의 최댓값 (1 이하면 통과) 입니다.
    """
    evolution = EvolutionService(kernel, config)
    runs = (
        ('circle', lift_piecewise_linear(circle_curve(128), 0.9), 0.5, 1e-3, 50),
        ('bridge', lift_piecewise_linear(sample_brownian_bridge(256, seed), 0.4), 0.2, 1e-2, 1),
    )
    worst = 0.0
    passed = True
    drifts = {}
    notes = []
    for label, base, t_final, dt, every in runs:
        diag, _ = evolution.evolve(FilamentState.initial(base), t_final, dt, 'rk4', diagnostics_every=every)
        envelopes = gronwall_envelopes(diag)
        threshold = DRIFT_THRESHOLD[label]
        drifts[label] = diag.energy_drift
        worst = max(worst, diag.energy_drift / threshold)
        ok = diag.energy_drift <= threshold and diag.all_finite() and envelopes.passed
        if not envelopes.passed:
            notes.append(f"{label} envelopes failed: {envelopes.failed()}")
        passed = passed and ok
    detail = "circle N=128 T=0.5 dt=1e-3, bridge N=256 T=0.2 dt=1e-2, rk4"
    if notes:
        detail += ", " + "; ".join(notes)
    return CheckResult(name='conservation_smoke', passed=passed, measured=worst, threshold=1.0,
                       detail=detail, extras={f"{label}_drift": value for label, value in drifts.items()})


def check_drift_order(kernel: KernelSpec, config: SimulationConfig, n_points: int = 32,
                      t_final: float = 0.2) -> CheckResult:
    """섭동된 원의 RK4 에너지 드리프트가 dt 반감마다 2^3.5 배 이상 줄어드는지"""
    evolution = EvolutionService(kernel, config)
    initial = FilamentState.initial(lift_piecewise_linear(perturbed_circle_curve(n_points, amplitude=0.3), 0.9))
    study = evolution.drift_order(initial, t_final, DRIFT_ORDER_DTS, 'rk4')
    observed = min(study['order'])
    return CheckResult(name='drift_order', passed=observed >= DRIFT_ORDER_MIN, measured=observed,
                       threshold=DRIFT_ORDER_MIN,
                       detail=f"perturbed circle N={n_points}, T={t_final}, dt in {list(DRIFT_ORDER_DTS)}",
                       extras={'drift': study['drift'], 'order': study['order']})


def validate_suite(config: Optional[SimulationConfig] = None, kernel: Optional[KernelSpec] = None,
                   seed: int = 0, inject_area_perturbation: bool = False,
                   checks: Optional[Iterable[str]] = None) -> SuiteReport:
    """
    전체 불변량 검사 배터리를 실행합니다.

    Args:
        config: 수치 설정
        kernel: 에너지, 속도, 보존 검사에 쓸 커널 (기본 Γ=1, μ=1)
        seed: 무작위 입력 시드
        inject_area_perturbation: Chen 검사 전에 면적 한 성분을 교란 (결함 주입)
        checks: 실행할 검사 이름 (None 이면 전체)

    Returns:
        SuiteReport: 검사별 결과 (실패한 검사도 예외 없이 기록)
    """
    config = config or SimulationConfig()
    kernel = kernel or KernelSpec()
    selected: List[str] = list(checks) if checks else list(SUITE_CHECKS)
    unknown = [name for name in selected if name not in SUITE_CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks: {', '.join(unknown)}")

    fields = FilamentFieldService(kernel, config)
    runners = {
        'cochain_exactness': lambda: check_cochain_exactness(seed),
        'sewing_bound': lambda: check_sewing_bound(config, seed),
        'chen_relation': lambda: check_chen_relation(config, seed,
                                                     inject_area_perturbation=inject_area_perturbation),
        'young_agreement': check_young_agreement,
        'composition_remainder': lambda: check_composition_remainder(config, seed),
        'kernel_hypothesis': lambda: check_kernel_hypothesis(config, seed),
        'energy_agreement': lambda: check_energy_agreement(fields),
        'energy_positivity': lambda: check_energy_positivity(fields, seed),
        'velocity_bound': lambda: check_velocity_bound(fields, seed),
        'energy_upper_bound': lambda: check_energy_upper_bound(fields),
        'conservation_smoke': lambda: check_conservation_smoke(kernel, config, seed),
        'drift_order': lambda: check_drift_order(kernel, config),
    }

    start_time = time.time()
    logger.info(f"검증 스위트 시작: {len(selected)}개 검사")
    report = SuiteReport()
    for name in SUITE_CHECKS:
        if name in selected:
            report.add(_timed(name, runners[name]))
    logger.info(
        f"검증 스위트 완료: {len(report.checks) - len(report.failed())}/{len(report.checks)} 통과 "
        f"({time.time() - start_time:.2f}초)"
    )
    return report
