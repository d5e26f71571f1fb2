"""
러프 패스 구성 및 검증 모듈
닫힌 곡선의 piecewise-linear 리프트, Brownian bridge 표본, Chen 관계 검사,
제어 경로 (Y, Y′, R) 와 그 노름을 제공합니다.
"""

import logging
from typing import Optional, Sequence

import numpy as np

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.circle_grid import CircleGrid
from models.rough_path import RoughPath, ControlledCurve, ControlledNorm
from models.errors import DegenerateCurve
from services.circle_algebra import (holder_norm_1, holder_norm_2, sup_norm, delta2)

logger = logging.getLogger(__name__)

# 2ν 스케일 노름은 chart 거리 1/4 이하의 쌍에서만 취함 (seam 인공물 제외)
AREA_MAX_DISTANCE = 0.25
FULL_CHEN_LIMIT = 64
SAMPLED_TRIPLES = 20000


def area_norm(area: np.ndarray, nu: float) -> float:
    """|XX|_{2ν}: chart 거리 ≤ 1/4 쌍에서의 Hölder 노름"""
    return holder_norm_2(area, 2.0 * nu, max_distance=AREA_MAX_DISTANCE, metric='chart')


def lift_piecewise_linear(samples: np.ndarray, nu: float, require_nondegenerate: bool = False) -> RoughPath:
    """
    닫힌 곡선 표본의 piecewise-linear 기하 러프 패스 리프트

    선분 하나의 면적은 ½ΔX⊗ΔX 이고, 떨어진 노드 사이의 면적은 Chen 관계로
    누적합에서 조립됩니다.

    Args:
        samples: (N, 3) 곡선 표본, N 은 2의 거듭제곱
        nu: Hölder 지수
        require_nondegenerate: True면 길이 0 선분이 있을 때 오류

    Returns:
        RoughPath: 리프트된 러프 패스

    Raises:
        DegenerateCurve: 길이 0 선분이 있고 require_nondegenerate 일 때
    """
    x = np.asarray(samples, dtype=float)
    grid = CircleGrid(x.shape[0])
    if x.ndim != 2 or x.shape[1] != 3:
        raise ValueError(f"samples must have shape (N, 3), got {x.shape}")

    increments = np.roll(x, -1, axis=0) - x
    if require_nondegenerate and np.any(np.max(np.abs(increments), axis=1) == 0):
        raise DegenerateCurve("curve has a zero-length segment")

    # 평행 이동 불변이므로 첫 노드 기준으로 계산해 반올림 오차를 줄임
    xc = x - x[0]
    dxc = np.diff(xc, axis=0)
    steps = np.einsum('ia,ib->iab', xc[:-1], dxc) + 0.5 * np.einsum('ia,ib->iab', dxc, dxc)
    running = np.concatenate([np.zeros((1, 3, 3)), np.cumsum(steps, axis=0)])

    area = (running[:, None] - running[None, :]
            - np.einsum('sa,tsb->tsab', xc, xc[:, None, :] - xc[None, :, :]))
    segment_area = 0.5 * np.einsum('ia,ib->iab', increments, increments)

    return RoughPath(
        nu=nu,
        grid=grid,
        x=x,
        area=area,
        segment_area=segment_area,
        holder_x=holder_norm_1(x, nu),
        holder_area=area_norm(area, nu),
    )


def sample_brownian_bridge(n_points: int, seed: int, basepoint: Optional[Sequence[float]] = None,
                           scale: float = 1.0) -> np.ndarray:
    """
    이분 세분으로 3차원 Brownian bridge 를 격자 위에서 표본 추출

    각 단계에서 길이 L 구간의 중점은 양 끝 평균에 분산 L/4 정규 잡음을 더해
    정확한 bridge 공분산 min(s,t) − st 를 가집니다.

    Args:
        n_points: 격자 크기 (2의 거듭제곱)
        seed: 난수 시드
        basepoint: 고정점 x₀ (기본 원점)
        scale: 진폭

    Returns:
        np.ndarray: (N, 3) 표본, 암묵적 노드 N 의 값은 x₀
    """
    grid = CircleGrid(n_points)
    n = grid.n_points
    x0 = np.zeros(3) if basepoint is None else np.asarray(basepoint, dtype=float)
    rng = np.random.default_rng(seed)

    bridge = np.zeros((n + 1, 3))
    step = n
    while step > 1:
        half = step // 2
        mids = np.arange(half, n, step)
        spread = np.sqrt(step / n / 4.0)
        bridge[mids] = 0.5 * (bridge[mids - half] + bridge[mids + half]) + spread * rng.standard_normal((mids.size, 3))
        step = half

    return x0 + scale * bridge[:n]


def circle_curve(n_points: int, radius: float = 1.0) -> np.ndarray:
    """z = 0 평면의 원 (r cos 2πξ, r sin 2πξ, 0)"""
    xi = CircleGrid(n_points).nodes
    theta = 2.0 * np.pi * xi
    return radius * np.stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)], axis=1)


def trefoil_curve(n_points: int, scale: float = 1.0) -> np.ndarray:
    """삼엽 매듭 ((2+cos 4πξ)cos 2πξ, (2+cos 4πξ)sin 2πξ, sin 4πξ)·a"""
    xi = CircleGrid(n_points).nodes
    ring = 2.0 + np.cos(4.0 * np.pi * xi)
    return scale * np.stack([
        ring * np.cos(2.0 * np.pi * xi),
        ring * np.sin(2.0 * np.pi * xi),
        np.sin(4.0 * np.pi * xi),
    ], axis=1)


def perturbed_circle_curve(n_points: int, radius: float = 1.0, amplitude: float = 0.1) -> np.ndarray:
    """반지름 방향 3모드, 축 방향 2모드 섭동이 있는 원"""
    xi = CircleGrid(n_points).nodes
    theta = 2.0 * np.pi * xi
    r = radius * (1.0 + amplitude * np.cos(3.0 * theta))
    return np.stack([r * np.cos(theta), r * np.sin(theta), radius * amplitude * np.sin(2.0 * theta)], axis=1)


def chen_rhs(x: np.ndarray, t, u, s) -> np.ndarray:
    """Chen 관계 우변 (X(u) − X(s)) ⊗ (X(t) − X(u))"""
    return np.einsum('...a,...b->...ab', x[u] - x[s], x[t] - x[u])


def chen_defect(rp: RoughPath, max_triples: int = SAMPLED_TRIPLES, seed: int = 0) -> float:
    """
    Chen 관계 결함 max |δ₂XX(t,u,s) − (X(u)−X(s))⊗(X(t)−X(u))|

    N ≤ 64 이면 모든 삼중쌍, 그보다 크면 인접 삼중쌍 전체와 무작위 삼중쌍 표본을 사용합니다.
    """
    n = rp.n_points
    x = rp.x
    if n <= FULL_CHEN_LIMIT:
        idx = np.arange(n)
        rhs = chen_rhs(x, idx[:, None, None], idx[None, :, None], idx[None, None, :])
        return float(np.max(np.abs(delta2(rp.area) - rhs)))

    rng = np.random.default_rng(seed)
    t = rng.integers(0, n, max_triples)
    u = rng.integers(0, n, max_triples)
    s = rng.integers(0, n, max_triples)
    base = np.arange(n - 2)
    t = np.concatenate([t, base + 2])
    u = np.concatenate([u, base + 1])
    s = np.concatenate([s, base])

    area = rp.area
    lhs = area[t, s] - area[t, u] - area[u, s]
    return float(np.max(np.abs(lhs - chen_rhs(x, t, u, s))))


def make_controlled(y: np.ndarray, y_prime: np.ndarray, base: RoughPath) -> ControlledCurve:
    """
    (Y, Y′) 와 기준 러프 패스로 제어 곡선을 구성; R 은 정의식에서 유도

    Raises:
        GridMismatch: 격자 크기가 다를 때
    """
    return ControlledCurve(np.asarray(y, dtype=float), np.asarray(y_prime, dtype=float), base)


def derivative_sup(y_prime: np.ndarray) -> float:
    """Y′ 의 행 합 노름 (∞→∞ 작용소 노름) 의 최댓값"""
    y_prime = np.asarray(y_prime, dtype=float)
    if y_prime.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(y_prime), axis=-1)))


def controlled_norm(c: ControlledCurve) -> ControlledNorm:
    """
    제어 곡선 노름: 반노름 |Y′|_ν + |R|_{2ν}, 전체 노름은 sup|Y| 추가

    R 은 점별 양이므로 2ν 노름을 원 거리의 모든 쌍에서 취합니다.
    """
    nu = c.base.nu
    return ControlledNorm(
        derivative_holder=holder_norm_1(c.y_prime, nu),
        remainder_norm=holder_norm_2(c.remainder, 2.0 * nu),
        sup_value=sup_norm(c.y),
        derivative_sup=derivative_sup(c.y_prime),
        holder_value=holder_norm_1(c.y, nu),
        base_holder=c.base.holder_x,
    )


def rough_distance(coarse: RoughPath, fine: RoughPath) -> float:
    """
    공통 노드에서 |X_c − X_f|_ν + |XX_c − XX_f|_{2ν}

    fine 격자는 coarse 격자의 2의 거듭제곱 배 세분이어야 합니다.
    """
    factor = fine.n_points // coarse.n_points
    if factor * coarse.n_points != fine.n_points:
        raise ValueError("fine grid must refine the coarse grid")
    x_fine = fine.x[::factor]
    area_fine = fine.area[::factor, ::factor]
    nu = coarse.nu
    return holder_norm_1(coarse.x - x_fine, nu) + area_norm(coarse.area - area_fine, nu)
