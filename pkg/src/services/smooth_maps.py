"""
매끄러운 사상 모듈
제어 곡선과 합성할 수 있는 사상들 (값, 1차·2차 도함수를 점 배열에 대해 벡터화)
"""

import logging
from typing import Tuple

import numpy as np

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from services.kernel_service import KernelService

logger = logging.getLogger(__name__)

# 다항식 사상은 임의 차수까지 미분 가능
UNLIMITED_ORDER = 64


class SmoothMap:
    """
    매끄러운 사상 m: ℝ^d → 출력 텐서 공간의 기본 클래스

    점 배열은 (M, d) 형태이며, 반환 형태는
    value (M,)+out_shape, jacobian (M,)+out_shape+(d,), hessian (M,)+out_shape+(d, d) 입니다.
    """

    order: int = 2
    out_shape: Tuple[int, ...] = ()

    def value(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative_bound(self, points: np.ndarray) -> float:
        """표본 점에서 |Dm|_∞ + |D²m|_∞ (∇m 의 C¹ 노름 추정)"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        jac = self.jacobian(points)
        hess = self.hessian(points)
        first = float(np.max(np.abs(jac))) if jac.size else 0.0
        second = float(np.max(np.abs(hess))) if hess.size else 0.0
        return first + second


class IdentityMap(SmoothMap):
    """항등 사상"""

    order = UNLIMITED_ORDER

    def __init__(self, dim: int = 3):
        self.dim = dim
        self.out_shape = (dim,)

    def value(self, points):
        return np.array(points, dtype=float)

    def jacobian(self, points):
        return np.broadcast_to(np.eye(self.dim), (len(points), self.dim, self.dim)).copy()

    def hessian(self, points):
        return np.zeros((len(points), self.dim, self.dim, self.dim))


class AffineMap(SmoothMap):
    """m(x) = A x + b"""

    order = UNLIMITED_ORDER

    def __init__(self, matrix: np.ndarray, offset: np.ndarray = None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        rows, _ = self.matrix.shape
        self.offset = np.zeros(rows) if offset is None else np.asarray(offset, dtype=float)
        self.out_shape = (rows,)

    def value(self, points):
        return np.asarray(points, dtype=float) @ self.matrix.T + self.offset

    def jacobian(self, points):
        return np.broadcast_to(self.matrix, (len(points),) + self.matrix.shape).copy()

    def hessian(self, points):
        rows, cols = self.matrix.shape
        return np.zeros((len(points), rows, cols, cols))


class QuadraticMap(SmoothMap):
    """스칼라 이차 형식 m(x) = xᵀQx (기본 |x|²)"""

    order = UNLIMITED_ORDER
    out_shape = ()

    def __init__(self, form: np.ndarray = None, dim: int = 3):
        form = np.eye(dim) if form is None else np.asarray(form, dtype=float)
        self.form = 0.5 * (form + form.T)

    def value(self, points):
        points = np.asarray(points, dtype=float)
        return np.einsum('ma,ab,mb->m', points, self.form, points)

    def jacobian(self, points):
        return 2.0 * np.asarray(points, dtype=float) @ self.form

    def hessian(self, points):
        return np.broadcast_to(2.0 * self.form, (len(points),) + self.form.shape).copy()


class ExponentialComponentMap(SmoothMap):
    """m(x) = e^{x_source} · e_target (Young 비교용 적분 함수)"""

    order = UNLIMITED_ORDER

    def __init__(self, source: int = 0, target: int = 1, dim: int = 3):
        self.source = source
        self.target = target
        self.dim = dim
        self.out_shape = (dim,)

    def value(self, points):
        points = np.asarray(points, dtype=float)
        out = np.zeros((len(points), self.dim))
        out[:, self.target] = np.exp(points[:, self.source])
        return out

    def jacobian(self, points):
        points = np.asarray(points, dtype=float)
        out = np.zeros((len(points), self.dim, self.dim))
        out[:, self.target, self.source] = np.exp(points[:, self.source])
        return out

    def hessian(self, points):
        points = np.asarray(points, dtype=float)
        out = np.zeros((len(points), self.dim, self.dim, self.dim))
        out[:, self.target, self.source, self.source] = np.exp(points[:, self.source])
        return out


class FourierModeMap(SmoothMap):
    """
    파동수 묶음 k_1..k_K 에 대한 m(x) = (cos⟨k,x⟩, sin⟨k,x⟩)

    출력 형태 (K, 2): 마지막 축이 실수부·허수부
    """

    order = UNLIMITED_ORDER

    def __init__(self, wavevectors: np.ndarray):
        self.wavevectors = np.atleast_2d(np.asarray(wavevectors, dtype=float))
        self.out_shape = (len(self.wavevectors), 2)

    def _phase(self, points):
        return np.asarray(points, dtype=float) @ self.wavevectors.T

    def value(self, points):
        phase = self._phase(points)
        return np.stack([np.cos(phase), np.sin(phase)], axis=-1)

    def jacobian(self, points):
        phase = self._phase(points)
        rates = np.stack([-np.sin(phase), np.cos(phase)], axis=-1)
        return rates[..., None] * self.wavevectors[None, :, None, :]

    def hessian(self, points):
        phase = self._phase(points)
        curvature = np.stack([-np.cos(phase), -np.sin(phase)], axis=-1)
        outer = np.einsum('ka,kb->kab', self.wavevectors, self.wavevectors)
        return curvature[..., None, None] * outer[None, :, None]


class KernelMap(SmoothMap):
    """고정점 x₀ 에서 본 커널 m(y) = φ(x₀ − y)"""

    out_shape = ()

    def __init__(self, kernel: KernelService, point: np.ndarray):
        self.kernel = kernel
        self.point = np.asarray(point, dtype=float)
        self.order = kernel.spec.max_order

    def _derivatives(self, points, order):
        return self.kernel.derivatives(self.point[None, :] - np.asarray(points, dtype=float), order)

    def value(self, points):
        return self._derivatives(points, 0)[0]

    def jacobian(self, points):
        return -self._derivatives(points, 1)[1]

    def hessian(self, points):
        return self._derivatives(points, 2)[2]
