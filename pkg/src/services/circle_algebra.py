"""
원 위의 이산 미적분 모듈
격자 위 δ 코체인 연산자, 1·2·3-매개변수 Hölder 노름, 이산 sewing 사상을 제공합니다.
"""

import logging
from typing import Optional

import numpy as np

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.errors import NotExact, ExponentOutOfRange

logger = logging.getLogger(__name__)

METRICS = ('circle', 'chart')


def circle_distance(a, b):
    """
    원 S¹ ≅ [0,1) 위의 거리 min(|a−b|, 1−|a−b|)

    Args:
        a: 노드 값 (스칼라 또는 배열)
        b: 노드 값 (스칼라 또는 배열)

    Returns:
        [0, 1/2] 범위의 거리
    """
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    d = np.minimum(d, 1.0 - d)
    return float(d) if np.ndim(d) == 0 else d


def pair_distances(n_points: int, metric: str = 'circle') -> np.ndarray:
    """노드 쌍 (i, j) 사이 거리 표; chart는 [0,1) 구간 거리 |a−b|"""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got '{metric}'")
    nodes = np.arange(n_points) / n_points
    if metric == 'chart':
        return np.abs(nodes[:, None] - nodes[None, :])
    return circle_distance(nodes[:, None], nodes[None, :])


def magnitude(values: np.ndarray, leading: int) -> np.ndarray:
    """앞쪽 `leading`개 축을 남기고 나머지 축의 최대 절댓값 (max-entry 크기)"""
    shape = values.shape[:leading]
    if values.ndim == leading:
        return np.abs(values)
    return np.abs(values).reshape(shape + (-1,)).max(axis=-1)


def delta1(g: np.ndarray) -> np.ndarray:
    """δ₁g(t, s) = g(t) − g(s); 노드 축이 첫 축"""
    g = np.asarray(g, dtype=float)
    return g[:, None] - g[None, :]


def delta2(h: np.ndarray) -> np.ndarray:
    """δ₂h(t, u, s) = h(t, s) − h(t, u) − h(u, s)"""
    h = np.asarray(h, dtype=float)
    return h[:, None, :] - h[:, :, None] - h[None, :, :]


def holder_norm_2(f: np.ndarray, mu: float, max_distance: Optional[float] = None,
                  metric: str = 'circle', ordered: bool = False) -> float:
    """
    2-매개변수 Hölder 노름 sup |f(a,b)| / d(a,b)^μ

    Args:
        f: (N, N, ...) 격자 함수
        mu: 지수 μ > 0
        max_distance: 주어지면 d(a,b) ≤ max_distance 인 쌍만 사용
        metric: 'circle' 또는 'chart'
        ordered: True면 a > b 인 쌍만 사용 (구간 위 sewing 설정)

    Returns:
        float: 노름 값
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    dist = pair_distances(n, metric)
    admissible = dist > 0
    if max_distance is not None:
        admissible &= dist <= max_distance + 1e-15
    if ordered:
        admissible &= np.tri(n, k=-1, dtype=bool)
    if not admissible.any():
        return 0.0
    size = magnitude(f, 2)
    return float(np.max(size[admissible] / dist[admissible] ** mu))


def holder_norm_1(g: np.ndarray, mu: float, metric: str = 'circle') -> float:
    """1-매개변수 Hölder 반노름 |g|_μ = |δ₁g|_μ"""
    return holder_norm_2(delta1(g), mu, metric=metric)


def holder_norm_3(h: np.ndarray, mu: float, metric: str = 'chart', ordered: bool = True) -> float:
    """
    3-매개변수 노름, ρ = μ/2 단일 항 분해
    sup |h(t,u,s)| / (d(t,u)^{μ/2} d(u,s)^{μ/2})
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    dist = pair_distances(n, metric)
    d_tu = dist[:, :, None]
    d_us = dist[None, :, :]
    admissible = (d_tu > 0) & (d_us > 0)
    if ordered:
        idx = np.arange(n)
        admissible &= (idx[:, None, None] > idx[None, :, None]) & (idx[None, :, None] > idx[None, None, :])
    if not admissible.any():
        return 0.0
    denom = (d_tu ** (0.5 * mu)) * (d_us ** (0.5 * mu))
    size = magnitude(h, 3)
    return float(np.max(size[admissible] / np.broadcast_to(denom, size.shape)[admissible]))


def sup_norm(g: np.ndarray) -> float:
    """최대 성분 절댓값"""
    g = np.asarray(g, dtype=float)
    return float(np.max(np.abs(g))) if g.size else 0.0


def sewing(h: np.ndarray, mu: float, tolerance: float = 1e-10) -> np.ndarray:
    """
    이산 sewing 사상 Λ: δ₂-완전 3-매개변수 함수 h 에서 δ₂F = h 인 F 를 구성

    h = δ₂A 이면 A(t,s) = −h(0,t,s) 가 하나의 원시 함수입니다. 이분 구성은
    F(t,s) = lim_n [A(t,s) − Σ_{u_k ∈ P_n(s,t)} A(u_{k+1}, u_k)] 이고, 격자 위에서
    P_n 의 이분 세분은 격자 간격에서 멈추므로 극한은 유한 단계에서 인접 노드 쌍의
    합 Σ_{s ≤ i < t} A(i+1, i) 에 도달합니다. 이 합을 누적합 running[t] − running[s]
    로 한 번에 계산하므로 결과는 이분 구성과 같고, F 는 인접 쌍 (i+1, i) 에서 0 이 됩니다.

    Args:
        h: (N, N, N, ...) 3-매개변수 격자 함수
        mu: 지수 (μ > 1)
        tolerance: δ₂-완전성 상대 허용 오차

    Returns:
        np.ndarray: (N, N, ...) 2-매개변수 함수 F

    Raises:
        ExponentOutOfRange: μ ≤ 1
        NotExact: h 가 δ₂ 의 상에 있지 않을 때
    """
    if mu <= 1:
        raise ExponentOutOfRange(f"sewing requires mu > 1, got {mu}")

    h = np.asarray(h, dtype=float)
    germ = -h[0]
    defect = float(np.max(np.abs(delta2(germ) - h))) if h.size else 0.0
    scale = sup_norm(h)
    if defect > tolerance * max(scale, np.finfo(float).tiny):
        logger.error(f"sewing 입력이 δ₂-완전하지 않음: 결함 {defect:.3e}, 크기 {scale:.3e}")
        raise NotExact(f"input is not delta2-exact: defect {defect:.3e} exceeds tolerance")

    n = h.shape[0]
    idx = np.arange(n - 1)
    adjacent = germ[idx + 1, idx]
    running = np.concatenate([np.zeros((1,) + adjacent.shape[1:]), np.cumsum(adjacent, axis=0)])
    return germ - (running[:, None] - running[None, :])


def sewing_bound(mu: float) -> float:
    """Λ 의 노름 상수 1 / (2^μ − 2)"""
    if mu <= 1:
        raise ExponentOutOfRange(f"sewing bound requires mu > 1, got {mu}")
    return 1.0 / (2.0 ** mu - 2.0)
