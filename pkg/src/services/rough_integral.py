"""
러프 적분 모듈
보정 리만 합 (compensated Riemann sum) 러프 적분, Young 적분, Q-나머지,
매끄러운 사상과 제어 곡선의 합성을 제공합니다.
"""

import logging
from typing import Tuple

import numpy as np

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.rough_path import RoughPath, ControlledCurve
from models.field_results import IntegralResult, QRemainderReport, CompositionReport
from models.errors import BaseMismatch, ExponentTooLow, InsufficientSmoothness
from services.circle_algebra import holder_norm_2
from services.rough_path_service import make_controlled, controlled_norm, AREA_MAX_DISTANCE
from services.smooth_maps import SmoothMap

logger = logging.getLogger(__name__)

PAIRINGS = ('dot', 'scale')
DEFAULT_QUADRATURE_POINTS = 8


def _same_base(a: RoughPath, b: RoughPath) -> bool:
    if a is b:
        return True
    return (a.n_points == b.n_points and a.nu == b.nu
            and np.array_equal(a.x, b.x) and np.array_equal(a.area, b.area))


def _check_inputs(w: ControlledCurve, z: ControlledCurve, pairing: str):
    if pairing not in PAIRINGS:
        raise ValueError(f"pairing must be one of {PAIRINGS}, got '{pairing}'")
    if not _same_base(w.base, z.base):
        raise BaseMismatch("integrand and integrator are controlled by different rough paths")
    if 3.0 * w.base.nu <= 1.0:
        raise ExponentTooLow(f"rough integral requires 3*nu > 1, got nu = {w.base.nu}")
    if z.y.ndim != 2:
        raise ValueError(f"integrator values must have shape (N, d), got {z.y.shape}")


def _first_order(w_values: np.ndarray, dz: np.ndarray, pairing: str) -> np.ndarray:
    if pairing == 'dot':
        return np.einsum('n...j,nj->n...', w_values, dz)
    return np.einsum('n...,nj->n...j', w_values, dz)


def _second_order(w_prime: np.ndarray, z_prime: np.ndarray, area: np.ndarray, pairing: str) -> np.ndarray:
    """W′ Z′ XX 항; area 는 노드 축이 첫 축인 (n, 3, 3)"""
    if pairing == 'dot':
        return np.einsum('n...ja,njb,nab->n...', w_prime, z_prime, area)
    return np.einsum('n...a,njb,nab->n...j', w_prime, z_prime, area)


def local_terms(w: ControlledCurve, z: ControlledCurve, pairing: str = 'dot') -> np.ndarray:
    """
    선분별 보정 항 W(ξ_i)(Z(ξ_{i+1})−Z(ξ_i)) + W′(ξ_i)Z′(ξ_i)XX(ξ_{i+1},ξ_i)

    마지막 선분은 seam 을 지나 노드 0 으로 돌아갑니다.
    """
    _check_inputs(w, z, pairing)
    dz = np.roll(z.y, -1, axis=0) - z.y
    return (_first_order(w.y, dz, pairing)
            + _second_order(w.y_prime, z.y_prime, w.base.segment_area, pairing))


def rough_integral(w: ControlledCurve, z: ControlledCurve, pairing: str = 'dot',
                   with_partials: bool = False, with_q_norm: bool = False) -> IntegralResult:
    """
    닫힌 곡선 위 러프 적분 ∮ W dZ

    Args:
        w: 적분 함수 (값 형태는 배치 축을 포함할 수 있음)
        z: 적분자, 값 형태 (N, d)
        pairing: 'dot' 은 W 의 마지막 축을 dZ 와 축약, 'scale' 은 W ⊗ dZ
        with_partials: 노드 쌍 부분 적분 격자 계산 여부
        with_q_norm: |Q|_{3ν} 계산 여부 (부분 적분 포함)

    Returns:
        IntegralResult: 적분 결과

    Raises:
        BaseMismatch: 기준 러프 패스가 다를 때
        ExponentTooLow: 3ν ≤ 1
    """
    local = local_terms(w, z, pairing)
    total = local.sum(axis=0)

    partials = None
    q_norm = None
    if with_partials or with_q_norm:
        partials = partial_integrals(local)
    if with_q_norm:
        q_norm = holder_norm_2(q_grid(w, z, partials, pairing), 3.0 * w.base.nu,
                               max_distance=AREA_MAX_DISTANCE, metric='chart')

    return IntegralResult(total=total, local=local, partials=partials, q_norm=q_norm)


def partial_integrals(local: np.ndarray) -> np.ndarray:
    """chart 누적합에서 ∫_{ξ_s}^{ξ_t} 부분 적분 격자 [t, s]"""
    running = np.concatenate([np.zeros((1,) + local.shape[1:]), np.cumsum(local[:-1], axis=0)])
    return running[:, None] - running[None, :]


def q_grid(w: ControlledCurve, z: ControlledCurve, partials: np.ndarray, pairing: str = 'dot') -> np.ndarray:
    """Q(t,s) = ∫_s^t W dZ − W(s)(Z(t)−Z(s)) − W′(s)Z′(s)XX(t,s)"""
    dz = z.y[:, None] - z.y[None, :]
    area = w.base.area
    if pairing == 'dot':
        first = np.einsum('s...j,tsj->ts...', w.y, dz)
        second = np.einsum('s...ja,sjb,tsab->ts...', w.y_prime, z.y_prime, area)
    else:
        first = np.einsum('s...,tsj->ts...j', w.y, dz)
        second = np.einsum('s...a,sjb,tsab->ts...j', w.y_prime, z.y_prime, area)
    return partials - first - second


def q_remainder(result: IntegralResult, w: ControlledCurve, z: ControlledCurve,
                pairing: str = 'dot') -> QRemainderReport:
    """
    Q-나머지 노름과 상계 (1 + |X|_ν + |XX|_{2ν}) |W|_D |Z|_D 의 비율

    Args:
        result: with_partials 로 계산된 적분 결과
        w: 적분 함수
        z: 적분자
        pairing: 적분에 사용한 축약

    Returns:
        QRemainderReport: 노름, 상수 없는 상계, 맞춘 상수
    """
    if result.partials is None:
        raise ValueError("q_remainder needs partial integrals; call rough_integral(..., with_partials=True)")
    q_norm = result.q_norm
    if q_norm is None:
        q_norm = holder_norm_2(q_grid(w, z, result.partials, pairing), 3.0 * w.base.nu,
                               max_distance=AREA_MAX_DISTANCE, metric='chart')
    base = w.base
    bound_base = ((1.0 + base.holder_x + base.holder_area)
                  * controlled_norm(w).full_norm * controlled_norm(z).full_norm)
    constant = q_norm / bound_base if bound_base > 0 else 0.0
    return QRemainderReport(q_norm=q_norm, bound_base=bound_base, constant=constant)


def young_integral(w: np.ndarray, z: np.ndarray, nu: float, pairing: str = 'dot') -> np.ndarray:
    """
    닫힌 곡선 위 1차 Riemann–Stieltjes 합 Σ w(ξ_i)(z(ξ_{i+1}) − z(ξ_i))

    Raises:
        ExponentTooLow: ν ≤ 1/2
    """
    if nu <= 0.5:
        raise ExponentTooLow(f"Young integral requires nu > 1/2, got {nu}")
    if pairing not in PAIRINGS:
        raise ValueError(f"pairing must be one of {PAIRINGS}, got '{pairing}'")
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    dz = np.roll(z, -1, axis=0) - z
    if dz.ndim == 1:
        dz = dz[:, None]
        if pairing == 'dot':
            w = w[..., None]
    return _first_order(w, dz, pairing).sum(axis=0)


def _require_smoothness(m: SmoothMap):
    if m.order < 2:
        raise InsufficientSmoothness(f"map provides derivatives up to order {m.order}, at least 2 needed")


def compose_smooth(m: SmoothMap, c: ControlledCurve) -> ControlledCurve:
    """
    사상과 제어 곡선의 합성 (m(Y), Dm(Y)·Y′)

    Raises:
        InsufficientSmoothness: 사상의 도함수 차수가 부족할 때
    """
    _require_smoothness(m)
    if c.y.ndim != 2:
        raise ValueError(f"composition needs vector values of shape (N, d), got {c.y.shape}")
    y = m.value(c.y)
    y_prime = np.einsum('n...i,nia->n...a', m.jacobian(c.y), c.y_prime)
    return make_controlled(y, y_prime, c.base)


def _unit_gauss_legendre(points: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(points)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def composition_remainder(m: SmoothMap, c: ControlledCurve,
                          points: int = DEFAULT_QUADRATURE_POINTS) -> Tuple[np.ndarray, np.ndarray]:
    """
    합성의 나머지를 두 가지로 계산

    정의식 R(t,s) 과 표현식
    Dm(Y_s)R^Y(t,s) + ∫₀¹ [Dm(Y_s + rΔ) − Dm(Y_s)] dr · Δ,  Δ = Y_t − Y_s
    (r 적분은 Gauss–Legendre) 를 반환합니다.

    Returns:
        (정의식 나머지, 표현식 나머지), 형태 (N, N) + 출력 형태
    """
    _require_smoothness(m)
    composed = compose_smooth(m, c)
    n, d = c.y.shape
    jac_nodes = m.jacobian(c.y)
    delta = c.y[:, None, :] - c.y[None, :, :]

    first = np.einsum('s...i,tsi->ts...', jac_nodes, c.remainder)

    r_nodes, r_weights = _unit_gauss_legendre(points)
    mean_jac = np.zeros((n, n) + jac_nodes.shape[1:])
    for r, weight in zip(r_nodes, r_weights):
        shifted = (c.y[None, :, :] + r * delta).reshape(-1, d)
        mean_jac += weight * m.jacobian(shifted).reshape((n, n) + jac_nodes.shape[1:])
    second = np.einsum('ts...i,tsi->ts...', mean_jac - jac_nodes[None], delta)

    return composed.remainder, first + second


def composition_report(m: SmoothMap, c: ControlledCurve,
                       points: int = DEFAULT_QUADRATURE_POINTS) -> CompositionReport:
    """
    합성 나머지 이중 계산 비교와 노름 상계
    |m(Y)|_D ≤ K |∇m|_{C¹} |Y|_D (1 + |Y|_D) (1 + |X|_ν)² 의 K 를 맞춤
    """
    r_def, r_formula = composition_remainder(m, c, points)
    remainder_error = float(np.max(np.abs(r_def - r_formula))) if r_def.size else 0.0
    remainder_scale = float(np.max(np.abs(r_def))) if r_def.size else 0.0

    norm_value = controlled_norm(compose_smooth(m, c)).full_norm
    y_norm = controlled_norm(c).full_norm
    bound_base = (m.derivative_bound(c.y) * y_norm * (1.0 + y_norm)
                  * (1.0 + c.base.holder_x) ** 2)
    constant = max(1.0, norm_value / bound_base) if bound_base > 0 else 1.0

    report = CompositionReport(
        remainder_error=remainder_error,
        remainder_scale=remainder_scale,
        norm_value=norm_value,
        bound_base=bound_base,
        constant=constant,
    )
    logger.debug(f"합성 나머지 상대 오차 {report.relative_error:.3e}, 상수 K = {constant:.3f}")
    return report
