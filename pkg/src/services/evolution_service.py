"""
필라멘트 시간 적분 서비스 모듈
고정 기준 러프 패스 γ₀ 위 제어 경로 구조 (γ, γ′) 로 dγ/dt = u^γ(γ) 를 적분하고
에너지 보존, 적분형 일관성, Gronwall 포락선 진단을 수행합니다.
"""

import logging
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.app_config import SimulationConfig
from models.kernel_spec import KernelSpec
from models.filament_state import FilamentState, TrajectoryPoint, RunDiagnostics, EnvelopeReport
from models.errors import StepRejected, BlowUpSuspected
from services.circle_algebra import holder_norm_1, holder_norm_2, sup_norm
from services.filament_fields import FilamentFieldService

logger = logging.getLogger(__name__)

SCHEMES = ('euler', 'rk4')
ENVELOPE_RTOL = 1e-9
ENVELOPE_ATOL = 1e-12
PROJECTION_FLOOR = 1e-24

Snapshot = Tuple[float, np.ndarray]


class EvolutionService:
    """필라멘트 시간 적분 서비스 클래스"""

    def __init__(self, kernel: KernelSpec, config: Optional[SimulationConfig] = None,
                 conserve_energy: bool = True):
        """
        EvolutionService 초기화

        Args:
            kernel: 커널 명세
            config: 수치 설정 (blow-up 배수)
            conserve_energy: 노드 속도를 반이산 에너지 기울기에 직교 사영할지 여부
        """
        self.kernel = kernel
        self.config = config or SimulationConfig()
        self.conserve_energy = conserve_energy
        self.fields = FilamentFieldService(kernel, self.config)

    def rhs(self, state: FilamentState) -> Tuple[np.ndarray, np.ndarray]:
        """
        우변 (dγ/dt, dγ′/dt) = (u^γ(γ), ∇u^γ(γ)·γ′)

        conserve_energy 이면 각 노드의 u 에서 ∂H_d/∂γ 방향 성분을 제거하므로
        반이산 흐름에서 dH_d/dt = 0 이 정확히 성립하고, 남는 드리프트는 시간 스킴 오차뿐입니다.

        Returns:
            (N, 3) 속도와 (N, 3, 3) 미분 변화율
        """
        u, grad = self.fields.velocity_batch(state.controlled(), state.gamma, 1)
        if self.conserve_energy:
            u = conserving_projection(u, self.fields.discrete_energy_gradient(state.gamma))
        return u, np.einsum('nml,nla->nma', grad, state.gamma_prime)

    def step(self, state: FilamentState, dt: float, scheme: str = 'rk4',
             first_stage: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> FilamentState:
        """
        (γ, γ′) 를 한 스텝 전진; 나머지 R 은 이후 정의식에서 다시 유도됨

        Args:
            state: 현재 상태
            dt: 시간 간격 (≥ 0)
            scheme: 'euler' 또는 'rk4'
            first_stage: 이미 계산한 rhs(state)

        Raises:
            StepRejected: 결과가 유한하지 않을 때
        """
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got '{scheme}'")
        if dt < 0:
            raise ValueError("dt must be non-negative")
        if dt == 0:
            return state

        k1 = first_stage or self.rhs(state)
        if scheme == 'euler':
            d_gamma, d_prime = dt * k1[0], dt * k1[1]
        else:
            k2 = self.rhs(state.advanced(0.5 * dt, 0.5 * dt * k1[0], 0.5 * dt * k1[1]))
            k3 = self.rhs(state.advanced(0.5 * dt, 0.5 * dt * k2[0], 0.5 * dt * k2[1]))
            k4 = self.rhs(state.advanced(dt, dt * k3[0], dt * k3[1]))
            d_gamma = dt / 6.0 * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
            d_prime = dt / 6.0 * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])

        nxt = state.advanced(dt, d_gamma, d_prime)
        if not (np.all(np.isfinite(nxt.gamma)) and np.all(np.isfinite(nxt.gamma_prime))):
            logger.error(f"t={nxt.t:.4f} 에서 유한하지 않은 상태, 스텝 거부")
            raise StepRejected(f"non-finite state at t = {nxt.t:.6g}")
        return nxt

    def norms(self, state: FilamentState) -> Dict[str, float]:
        """진단용 노름: sup|γ|, sup|γ′|, |γ|_ν, |γ′|_ν, |R|_{2ν}"""
        nu = state.base.nu
        values = {
            'sup_gamma': sup_norm(state.gamma),
            'sup_gamma_prime': sup_norm(state.gamma_prime),
            'holder_gamma': holder_norm_1(state.gamma, nu),
            'holder_gamma_prime': holder_norm_1(state.gamma_prime, nu),
            'remainder_norm': holder_norm_2(state.controlled().remainder, 2.0 * nu),
        }
        if not all(np.isfinite(v) for v in values.values()):
            raise StepRejected(f"non-finite norm at t = {state.t:.6g}: {values}")
        return values

    def evolve(self, initial: FilamentState, t_final: float, dt: float, scheme: str = 'rk4',
               diagnostics_every: int = 1, snapshot_every: int = 0,
               on_record: Optional[Callable[[Dict], None]] = None) -> Tuple[RunDiagnostics, List[Snapshot]]:
        """
        T 까지 적분하며 진단 기록

        Args:
            initial: 초기 상태
            t_final: 최종 시각 T (> 0)
            dt: 시간 간격
            scheme: 'euler' 또는 'rk4'
            diagnostics_every: 진단 간격 (스텝 수)
            snapshot_every: 스냅샷 간격 (진단 표본 수, 0 이면 없음)
            on_record: 진단 표본마다 호출되는 기록 콜백 (실행 로그)

        Returns:
            (RunDiagnostics, [(t, γ)] 스냅샷)

        Raises:
            BlowUpSuspected: |γ′|_∞ 가 초기값의 blowup_factor 배를 넘을 때
            StepRejected: 유한하지 않은 상태 또는 노름
        """
        if t_final <= 0 or dt <= 0:
            raise ValueError("t_final and dt must be positive")
        n_steps = int(round(t_final / dt))
        if abs(n_steps * dt - t_final) > 1e-9 * t_final:
            raise ValueError(f"dt = {dt} does not divide t_final = {t_final}")

        start_time = time.time()
        logger.info(f"시간 적분 시작: N={initial.base.n_points}, T={t_final}, dt={dt}, {scheme}")

        diag = RunDiagnostics()
        snapshots: List[Snapshot] = []
        trajectory: List[TrajectoryPoint] = []
        initial_prime = max(sup_norm(initial.gamma_prime), np.finfo(float).tiny)
        guard = self.config.blowup_factor * initial_prime

        state = initial
        for index in range(n_steps + 1):
            stage = self.rhs(state)
            trajectory.append(TrajectoryPoint(state.t, state.gamma, state.gamma_prime, stage[0], stage[1]))

            if index % diagnostics_every == 0 or index == n_steps:
                self._record(diag, state, on_record)
                if index == 0:
                    diag.constants = self.envelope_constants(self.fields.energy_rough(state.controlled()))
                samples = len(diag.times)
                if snapshot_every and (samples - 1) % snapshot_every == 0:
                    snapshots.append((state.t, state.gamma.copy()))

            if index == n_steps:
                break
            state = self.step(state, dt, scheme, first_stage=stage)
            diag.steps += 1

            sup_prime = sup_norm(state.gamma_prime)
            if sup_prime > guard:
                logger.error(f"t={state.t:.4f}: |γ′|_∞ = {sup_prime:.3e} 가 상한 {guard:.3e} 초과")
                raise BlowUpSuspected(
                    f"|gamma'| reached {sup_prime:.3e} at t = {state.t:.6g}, "
                    f"{self.config.blowup_factor:g} times its initial value"
                )

        diag.picard_residual = picard_residual(trajectory)
        diag.remainder_consistency = remainder_evolution_check(trajectory, initial.base.x)

        logger.info(
            f"시간 적분 완료: {diag.steps} 스텝, 에너지 드리프트 {diag.energy_drift:.3e} "
            f"({time.time() - start_time:.2f}초)"
        )
        return diag, snapshots

    def _record(self, diag: RunDiagnostics, state: FilamentState, on_record):
        # 보존량은 반이산 에너지 H_d
        energy = self.fields.discrete_energy(state.gamma)
        norms = self.norms(state)
        diag.record(state.t, energy, norms)
        if on_record is not None:
            record = {'t': state.t, 'energy': energy}
            record.update(norms)
            on_record(record)

    def drift_order(self, initial: FilamentState, t_final: float, dts: Sequence[float],
                    scheme: str = 'rk4') -> Dict[str, List[float]]:
        """
        dt 반감 연구: 각 dt 의 에너지 드리프트와 인접 dt 쌍의 관측 차수

        Args:
            initial: 초기 상태
            t_final: 최종 시각
            dts: 줄어드는 순서의 시간 간격들
            scheme: 'euler' 또는 'rk4'

        Returns:
            Dict: {'dt': [...], 'drift': [...], 'order': [...]} (order 는 len(dts) − 1 개)
        """
        dts = [float(dt) for dt in dts]
        if len(dts) < 2 or any(a <= b for a, b in zip(dts[:-1], dts[1:])):
            raise ValueError("dts must hold at least two strictly decreasing time steps")
        start_time = time.time()
        drifts = [self.evolve(initial, t_final, dt, scheme)[0].energy_drift for dt in dts]

        orders = []
        for (coarse_dt, fine_dt), (coarse, fine) in zip(zip(dts[:-1], dts[1:]), zip(drifts[:-1], drifts[1:])):
            if fine == 0.0:
                orders.append(float('inf'))
            elif coarse == 0.0:
                orders.append(float('-inf'))
            else:
                orders.append(float(np.log(coarse / fine) / np.log(coarse_dt / fine_dt)))
        logger.info(f"드리프트 차수 연구 완료 ({scheme}): 드리프트 {drifts}, 차수 {orders} "
                    f"({time.time() - start_time:.2f}초)")
        return {'dt': dts, 'drift': drifts, 'order': orders}

    def envelope_constants(self, energy: float) -> Dict[str, float]:
        """t = 0 의 러프 에너지와 스펙트럼 모멘트로 정한 포락선 상수"""
        return {
            'energy': energy,
            'velocity_bound_0': self.fields.velocity_bound(0, energy),
            'velocity_bound_1': self.fields.velocity_bound(1, energy),
            'velocity_bound_2': self.fields.velocity_bound(2, energy),
        }


def conserving_projection(u: np.ndarray, gradient: np.ndarray) -> np.ndarray:
    """
    노드별로 u 에서 에너지 기울기 방향 성분을 제거: ⟨∂H/∂γ_k, v_k⟩ = 0

    Args:
        u: (N, 3) 노드 속도
        gradient: (N, 3) 에너지 기울기

    Returns:
        np.ndarray: 사영된 속도 (기울기가 0 인 노드는 그대로)
    """
    g2 = np.einsum('na,na->n', gradient, gradient)
    largest = float(np.max(g2)) if g2.size else 0.0
    if largest == 0.0:
        return u
    safe = g2 > PROJECTION_FLOOR * largest
    coefficient = np.zeros_like(g2)
    coefficient[safe] = np.einsum('na,na->n', u[safe], gradient[safe]) / g2[safe]
    return u - coefficient[:, None] * gradient


def picard_residual(trajectory: List[TrajectoryPoint]) -> float:
    """
    적분형 γ(t) = γ₀ + ∫₀ᵗ u^{γ(s)}(γ(s)) ds 의 잔차 (시간 사다리꼴)

    Returns:
        float: 모든 기록 시각에서의 최대 성분 잔차
    """
    if len(trajectory) < 2:
        return 0.0
    integral = np.zeros_like(trajectory[0].gamma)
    worst = 0.0
    for prev, cur in zip(trajectory[:-1], trajectory[1:]):
        integral += 0.5 * (cur.t - prev.t) * (prev.velocity + cur.velocity)
        worst = max(worst, float(np.max(np.abs(cur.gamma - trajectory[0].gamma - integral))))
    return worst


def _remainder_rate(point: TrajectoryPoint, base_x: np.ndarray) -> np.ndarray:
    # dR/dt(t,s) = δu(t,s) − ∇u(γ_s)γ′_s (X_t − X_s)
    du = point.velocity[:, None] - point.velocity[None, :]
    dx = base_x[:, None, :] - base_x[None, :, :]
    return du - np.einsum('sma,tsa->tsm', point.prime_rate, dx)


def remainder_evolution_check(trajectory: List[TrajectoryPoint], base_x: np.ndarray) -> float:
    """
    나머지 진화식을 시간 적분한 R 과 정의식 R 의 최대 차이

    Returns:
        float: 모든 기록 시각에서의 max |R_정의 − R_적분|
    """
    if len(trajectory) < 2:
        return 0.0
    first = trajectory[0]
    dx = base_x[:, None, :] - base_x[None, :, :]

    def definition(point: TrajectoryPoint) -> np.ndarray:
        dg = point.gamma[:, None] - point.gamma[None, :]
        return dg - np.einsum('sma,tsa->tsm', point.gamma_prime, dx)

    integrated = definition(first)
    rate_prev = _remainder_rate(first, base_x)
    worst = 0.0
    for prev, cur in zip(trajectory[:-1], trajectory[1:]):
        rate_cur = _remainder_rate(cur, base_x)
        integrated = integrated + 0.5 * (cur.t - prev.t) * (rate_prev + rate_cur)
        worst = max(worst, float(np.max(np.abs(definition(cur) - integrated))))
        rate_prev = rate_cur
    return worst


def _growth(a: float, t: np.ndarray) -> np.ndarray:
    """(e^{at} − 1)/a, a = 0 이면 t"""
    if a == 0:
        return t
    return np.expm1(a * t) / a


def envelope_series(diag: RunDiagnostics, constant_scale: float = 1.0) -> Dict[str, np.ndarray]:
    """
    시각별 선험적 포락선 (최대 성분 노름 기준)

    g_n = |∇ⁿu|_∞ 상계, a = 3g₁, b = 9g₂ 일 때
    sup|γ| ≤ sup|γ₀| + g₀t, sup|γ′| ≤ S₀e^{at}, |γ|_ν ≤ B₀e^{at},
    |γ′|_ν ≤ e^{at}[A₀ + (b/a)B₀S₀(e^{at} − 1)],
    |R|_{2ν} ≤ e^{at}[R₀ + (9/2)(g₂B₀²/a)(e^{at} − 1)],
    D-노름 포락선은 sup, |γ′|_ν, |R| 포락선의 합입니다.
    """
    t = np.asarray(diag.times, dtype=float)
    g0 = constant_scale * diag.constants['velocity_bound_0']
    g1 = constant_scale * diag.constants['velocity_bound_1']
    g2 = constant_scale * diag.constants['velocity_bound_2']
    a, b = 3.0 * g1, 9.0 * g2
    sup0, s0 = diag.sup_gamma[0], diag.sup_gamma_prime[0]
    b0, a0, r0 = diag.holder_gamma[0], diag.holder_gamma_prime[0], diag.remainder_norm[0]
    grow = np.exp(a * t)

    sup_env = sup0 + g0 * t
    prime_holder_env = grow * (a0 + b * b0 * s0 * _growth(a, t))
    remainder_env = grow * (r0 + 4.5 * g2 * b0 ** 2 * _growth(a, t))
    return {
        'sup_gamma': sup_env,
        'sup_gamma_prime': s0 * grow,
        'holder_gamma': b0 * grow,
        'holder_gamma_prime': prime_holder_env,
        'remainder_norm': remainder_env,
        'd_norm': sup_env + prime_holder_env + remainder_env,
    }


def gronwall_envelopes(diag: RunDiagnostics, constant_scale: float = 1.0) -> EnvelopeReport:
    """
    기록된 모든 표본에서 포락선 검사 (보고 전용)

    Args:
        diag: 완료된 실행 진단
        constant_scale: 상수 배율 (민감도 검사용)

    Returns:
        EnvelopeReport: 포락선별 통과 여부와 최악 비율
    """
    envelopes = envelope_series(diag, constant_scale)
    measured = {
        'sup_gamma': np.asarray(diag.sup_gamma),
        'sup_gamma_prime': np.asarray(diag.sup_gamma_prime),
        'holder_gamma': np.asarray(diag.holder_gamma),
        'holder_gamma_prime': np.asarray(diag.holder_gamma_prime),
        'remainder_norm': np.asarray(diag.remainder_norm),
    }
    measured['d_norm'] = measured['sup_gamma'] + measured['holder_gamma_prime'] + measured['remainder_norm']

    results = {}
    worst = {}
    for name, env in envelopes.items():
        values = measured[name]
        results[name] = bool(np.all(values <= env * (1.0 + ENVELOPE_RTOL) + ENVELOPE_ATOL))
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(env > 0, values / env, np.where(values > 0, np.inf, 0.0))
        worst[name] = float(np.max(ratio)) if ratio.size else 0.0

    report = EnvelopeReport(results=results, worst_ratio=worst)
    if not report.passed:
        logger.warning(f"포락선 위반: {', '.join(report.failed())}")
    return report
