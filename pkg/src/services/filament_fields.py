"""
곡선 유도장 서비스 모듈
속도 u^γ 와 그 기울기, 벡터 퍼텐셜 ψ^γ, 세 가지 형태의 에너지,
속도 상계 검사를 담당합니다.
"""

import logging
import time
from itertools import combinations
from typing import List, Optional

import numpy as np

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.app_config import SimulationConfig
from models.kernel_spec import KernelSpec, KQuadrature
from models.rough_path import ControlledCurve
from models.field_results import VelocityEvaluation, EnergyReport, BoundReport
from models.errors import InsufficientSmoothness, ExponentTooLow, QuadratureFailure
from services.circle_algebra import holder_norm_1, holder_norm_2
from services.kernel_service import get_kernel_service
from services.rough_integral import rough_integral, compose_smooth
from services.rough_path_service import make_controlled, controlled_norm
from services.smooth_maps import SmoothMap, FourierModeMap

logger = logging.getLogger(__name__)

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0

POINT_CHUNK = 64
WAVE_CHUNK = 2048
MAX_REFINEMENTS = 4
FALLBACK_TOLERANCE = 1e-2
OFFSET_POINTS = 50


class FilamentFieldService:
    """곡선 유도장 서비스 클래스"""

    def __init__(self, kernel: KernelSpec, config: Optional[SimulationConfig] = None):
        """
        FilamentFieldService 초기화

        Args:
            kernel: 커널 명세
            config: 수치 설정
        """
        self.kernel = kernel
        self.config = config or SimulationConfig()
        self.kernel_service = get_kernel_service(kernel, self.config)

    # ------------------------------------------------------------------
    # 속도
    # ------------------------------------------------------------------

    def velocity_batch(self, c: ControlledCurve, points: np.ndarray, n_deriv: int = 0) -> List[np.ndarray]:
        """
        여러 점에서 ∇ⁿu (n = 0..n_deriv)

        적분 함수 W(ξ) = ∇ⁿA(x − γ(ξ)), A_{mj} = ε_{mkj}∂_kφ 를
        W′ = −∇ⁿ⁺¹A(x − γ)·γ′ 와 함께 dγ 에 대해 러프 적분합니다.

        Args:
            c: 곡선 (제어 곡선)
            points: (P, 3) 평가 점
            n_deriv: 최고 미분 차수 (0..2)

        Returns:
            List[np.ndarray]: [u (P,3), ∇u (P,3,3), ∇²u (P,3,3,3)] 길이 n_deriv+1,
                ∇u[m, l] = ∂u_m/∂x_l

        Raises:
            InsufficientSmoothness: 커널 차수가 n_deriv + 2 보다 작을 때
        """
        if self.kernel.max_order < n_deriv + 2:
            raise InsufficientSmoothness(
                f"velocity derivative {n_deriv} needs kernel order {n_deriv + 2}, "
                f"kernel provides {self.kernel.max_order}"
            )
        points = np.atleast_2d(np.asarray(points, dtype=float))
        chunks = [self._velocity_chunk(c, points[i:i + POINT_CHUNK], n_deriv)
                  for i in range(0, len(points), POINT_CHUNK)]
        return [np.concatenate([chunk[n] for chunk in chunks]) for n in range(n_deriv + 1)]

    def _velocity_chunk(self, c: ControlledCurve, points: np.ndarray, n_deriv: int) -> List[np.ndarray]:
        n_nodes, n_points = c.y.shape[0], len(points)
        z = (points[None, :, :] - c.y[:, None, :]).reshape(-1, 3)
        derivs = self.kernel_service.derivatives(z, n_deriv + 2)

        out = []
        for n in range(n_deriv + 1):
            w = np.einsum('mkj,Mk...->Mm...j', LEVI_CIVITA, derivs[n + 1])
            w = w.reshape((n_nodes, n_points) + w.shape[1:])
            lifted = np.einsum('mkj,Mk...p->Mm...jp', LEVI_CIVITA, derivs[n + 2])
            lifted = lifted.reshape((n_nodes, n_points) + lifted.shape[1:])
            w_prime = -np.einsum('NP...q,Nqa->NP...a', lifted, c.y_prime)
            integrand = make_controlled(w, w_prime, c.base)
            out.append(rough_integral(integrand, c, 'dot').total)
        return out

    def velocity(self, c: ControlledCurve, x: np.ndarray, n_deriv: int = 0) -> VelocityEvaluation:
        """한 점에서 u, ∇u, ∇²u"""
        x = np.asarray(x, dtype=float)
        values = [v[0] for v in self.velocity_batch(c, x[None, :], n_deriv)]
        return VelocityEvaluation(
            point=x,
            u=values[0],
            grad_u=values[1] if n_deriv >= 1 else None,
            grad2_u=values[2] if n_deriv >= 2 else None,
        )

    def rosenhead_velocity(self, samples: np.ndarray, points: np.ndarray) -> np.ndarray:
        """
        중점 규칙 기준 속도 u(x) = Σ ∇φ(x − m_i) × Δγ_i (매끄러운 곡선용 독립 비교값)

        Args:
            samples: (N, 3) 닫힌 곡선 표본
            points: (3,) 또는 (P, 3) 평가 점

        Returns:
            np.ndarray: (3,) 또는 (P, 3) 속도
        """
        samples = np.asarray(samples, dtype=float)
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        points = np.atleast_2d(points)
        chords = np.roll(samples, -1, axis=0) - samples
        mids = samples + 0.5 * chords
        out = np.zeros((len(points), 3))
        for i in range(0, len(points), POINT_CHUNK):
            block = points[i:i + POINT_CHUNK]
            z = (block[:, None, :] - mids[None, :, :]).reshape(-1, 3)
            grad = self.kernel_service.derivatives(z, 1)[1].reshape(len(block), len(mids), 3)
            out[i:i + POINT_CHUNK] = np.cross(grad, chords[None, :, :]).sum(axis=1)
        return out[0] if single else out

    # ------------------------------------------------------------------
    # 벡터 퍼텐셜
    # ------------------------------------------------------------------

    def vector_potential_batch(self, c: ControlledCurve, points: np.ndarray, order: int = 0) -> List[np.ndarray]:
        """
        여러 점에서 ψ(x) = ∮φ(x − γ)dγ 와 x 에 대한 도함수

        Returns:
            List[np.ndarray]: [ψ (P,3), Dψ (P,3,3), D²ψ (P,3,3,3)] 길이 order+1,
                Dψ[j, l] = ∂ψ_j/∂x_l
        """
        if self.kernel.max_order < order + 1:
            raise InsufficientSmoothness(f"vector potential derivative {order} exceeds the kernel order")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        chunks = [self._potential_chunk(c, points[i:i + POINT_CHUNK], order)
                  for i in range(0, len(points), POINT_CHUNK)]
        return [np.concatenate([chunk[n] for chunk in chunks]) for n in range(order + 1)]

    def _potential_chunk(self, c: ControlledCurve, points: np.ndarray, order: int) -> List[np.ndarray]:
        n_nodes, n_points = c.y.shape[0], len(points)
        z = (points[None, :, :] - c.y[:, None, :]).reshape(-1, 3)
        derivs = self.kernel_service.derivatives(z, order + 1)

        out = []
        for n in range(order + 1):
            w = derivs[n].reshape((n_nodes, n_points) + derivs[n].shape[1:])
            nxt = derivs[n + 1].reshape((n_nodes, n_points) + derivs[n + 1].shape[1:])
            w_prime = -np.einsum('NP...q,Nqa->NP...a', nxt, c.y_prime)
            total = rough_integral(make_controlled(w, w_prime, c.base), c, 'scale').total
            # 출력 성분 j 를 도함수 축 앞으로
            out.append(np.moveaxis(total, -1, 1))
        return out

    def vector_potential(self, c: ControlledCurve, x: np.ndarray) -> np.ndarray:
        """한 점에서 ψ^γ(x)"""
        return self.vector_potential_batch(c, np.asarray(x, dtype=float)[None, :])[0][0]

    # ------------------------------------------------------------------
    # 에너지
    # ------------------------------------------------------------------

    def energy_rough(self, c: ControlledCurve) -> float:
        """
        러프 적분 에너지 H = ½∮ ψ^γ(γ(ξ)) · dγ(ξ)

        ψ^γ(γ) 는 벡터 퍼텐셜 사상과의 합성으로 제어 곡선이 됩니다.

        Raises:
            InsufficientSmoothness: 커널 차수 < 4
        """
        if self.kernel.max_order < 4:
            raise InsufficientSmoothness("energy needs a kernel with derivatives up to order 4")
        if self.kernel.gamma_strength == 0:
            return 0.0
        integrand = compose_smooth(VectorPotentialMap(self, c), c)
        return float(0.5 * rough_integral(integrand, c, 'dot').total)

    def energy_double_integral(self, samples: np.ndarray, nu: float) -> float:
        """
        이중 합 에너지 ½ΣΣ φ̄_{ij}⟨Δγ_i, Δγ_j⟩ (전진 증분의 사다리꼴 합)

        Raises:
            ExponentTooLow: ν ≤ 1/2 (매끄러운 곡선 전용)
        """
        if nu <= 0.5:
            raise ExponentTooLow(f"double-integral energy requires nu > 1/2, got {nu}")
        return self.discrete_energy(samples)

    def _pair_kernel(self, samples: np.ndarray, order: int) -> List[np.ndarray]:
        n = len(samples)
        z = (samples[:, None, :] - samples[None, :, :]).reshape(-1, 3)
        return [d.reshape((n, n) + d.shape[1:]) for d in self.kernel_service.derivatives(z, order)]

    def discrete_energy(self, samples: np.ndarray) -> float:
        """
        반이산 에너지 H_d = ½ΣΣ φ̄_{ij}⟨Δγ_i, Δγ_j⟩

        Δγ_i = γ_{i+1} − γ_i 이고 φ̄_{ij} 는 두 선분 끝점 네 쌍에서 φ 의 평균입니다.
        φ 가 양의 정부호 커널이므로 모든 격자 곡선에서 H_d ≥ 0 입니다.
        """
        samples = np.asarray(samples, dtype=float)
        increments = np.roll(samples, -1, axis=0) - samples
        phi = self._pair_kernel(samples, 0)[0]
        ahead = np.roll(phi, -1, axis=0)
        phi_bar = 0.25 * (phi + ahead + np.roll(phi, -1, axis=1) + np.roll(ahead, -1, axis=1))
        return float(0.5 * np.einsum('ij,ia,ja->', phi_bar, increments, increments))

    def discrete_energy_gradient(self, samples: np.ndarray) -> np.ndarray:
        """
        ∂H_d/∂γ_m (N, 3)

        끝점 평균을 풀면 H_d = ½ΣΣ φ(γ_k − γ_l)⟨E_k, E_l⟩, E_k = ½(γ_{k+1} − γ_{k−1}) 이므로
        ∂H_d/∂γ_m = Σ_l ∇φ(γ_m − γ_l)⟨E_m, E_l⟩ + ½(F_{m−1} − F_{m+1}), F_k = Σ_l φ_{kl}E_l 입니다.
        """
        samples = np.asarray(samples, dtype=float)
        steps = 0.5 * (np.roll(samples, -1, axis=0) - np.roll(samples, 1, axis=0))
        phi, grad_phi = self._pair_kernel(samples, 1)
        pull = phi @ steps
        return (np.einsum('mla,mb,lb->ma', grad_phi, steps, steps)
                + 0.5 * (np.roll(pull, 1, axis=0) - np.roll(pull, -1, axis=0)))

    def energy_fourier(self, c: ControlledCurve, quadrature: Optional[KQuadrature] = None) -> float:
        """
        k 공간 에너지 H = ½(2π)^{-3}∫ φ̂(k) |∮e^{i⟨k,γ⟩}dγ|² dk

        내부 선적분은 복소 지수 사상과의 합성 러프 적분입니다.
        격자를 두 배씩 세분하며 상대 변화가 허용치 이하가 될 때까지 반복합니다.

        Raises:
            QuadratureFailure: 세분해도 1e-2 이내로 안정되지 않을 때
        """
        if self.kernel.gamma_strength == 0:
            return 0.0
        quadrature = quadrature or KQuadrature(self.config.angular_nodes, self.config.radial_nodes)
        tolerance = self.config.fourier_tolerance

        current = self._fourier_sum(c, quadrature)
        change = float('inf')
        for _ in range(MAX_REFINEMENTS):
            quadrature = quadrature.refined()
            refined = self._fourier_sum(c, quadrature)
            change = abs(refined - current) / max(abs(refined), np.finfo(float).tiny)
            current = refined
            if change <= tolerance:
                return current

        if change <= FALLBACK_TOLERANCE:
            logger.warning(f"k 공간 구적이 허용치에 도달하지 못함 (상대 변화 {change:.2e})")
            return current
        logger.error(f"k 공간 구적 실패: 상대 변화 {change:.2e}")
        raise QuadratureFailure(f"k-space quadrature did not settle: relative change {change:.2e}")

    def _fourier_sum(self, c: ControlledCurve, quadrature: KQuadrature) -> float:
        dirs, dir_weights = quadrature.directions()
        k, radial_weights = quadrature.radial(self.kernel.mu)
        phi_hat = self.kernel_service.phi_hat_at(k)
        vectors = (k[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        weights = ((radial_weights * phi_hat)[:, None] * dir_weights[None, :]).ravel()

        total = 0.0
        for i in range(0, len(vectors), WAVE_CHUNK):
            modes = compose_smooth(FourierModeMap(vectors[i:i + WAVE_CHUNK]), c)
            loop = rough_integral(modes, c, 'scale').total
            total += float(np.dot(weights[i:i + WAVE_CHUNK], np.sum(loop ** 2, axis=(1, 2))))
        return 0.5 * total / (2.0 * np.pi) ** 3

    def energy_report(self, c: ControlledCurve, with_fourier: bool = True) -> EnergyReport:
        """세 가지 방법의 에너지와 최대 쌍별 상대 차이"""
        start_time = time.time()
        h_rough = self.energy_rough(c)
        h_double = self.energy_double_integral(c.y, c.base.nu) if c.base.nu > 0.5 else None
        h_fourier = self.energy_fourier(c) if with_fourier else None

        values = [v for v in (h_rough, h_double, h_fourier) if v is not None]
        agreement = 0.0
        for a, b in combinations(values, 2):
            scale = max(abs(a), abs(b))
            if scale > 0:
                agreement = max(agreement, abs(a - b) / scale)

        report = EnergyReport(h_rough=h_rough, h_double=h_double, h_fourier=h_fourier, agreement=agreement)
        logger.info(f"에너지 계산 완료: {report.to_dict()} ({time.time() - start_time:.2f}초)")
        return report

    # ------------------------------------------------------------------
    # 상계
    # ------------------------------------------------------------------

    def velocity_bound(self, n: int, energy: float) -> float:
        """
        |∇ⁿu|_∞ ≤ (2π)^{-3/2} M_n^{1/2} (2H)^{1/2}

        에너지 H 는 ½ 인자를 포함하므로 Fourier 형태의 적분은 2H 입니다.
        """
        moment = self.kernel_service.spectral_moment(n)
        return float((2.0 * np.pi) ** -1.5 * np.sqrt(moment * 2.0 * max(energy, 0.0)))

    def sample_cloud(self, c: ControlledCurve, seed: int = 0) -> np.ndarray:
        """곡선 노드 + 반지름 μ/2, μ, 2μ 에서 각 50개 오프셋 점"""
        rng = np.random.default_rng(seed)
        cloud = [c.y]
        for radius in (0.5 * self.kernel.mu, self.kernel.mu, 2.0 * self.kernel.mu):
            anchors = c.y[rng.integers(0, len(c.y), OFFSET_POINTS)]
            directions = rng.standard_normal((OFFSET_POINTS, 3))
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            cloud.append(anchors + radius * directions)
        return np.concatenate(cloud)

    def velocity_bound_check(self, c: ControlledCurve, n: int, energy: Optional[float] = None,
                             seed: int = 0) -> BoundReport:
        """
        점 구름에서 표본 최대 |∇ⁿu| 와 스펙트럼 상계 비교 (보고 전용)

        Args:
            c: 곡선
            n: 미분 차수 0..2
            energy: 미리 계산한 에너지 (없으면 러프 에너지 계산)
            seed: 구름 시드
        """
        if energy is None:
            energy = self.energy_rough(c)
        cloud = self.sample_cloud(c, seed)
        field = self.velocity_batch(c, cloud, n)[n]
        sampled = float(np.max(np.abs(field))) if field.size else 0.0
        report = BoundReport(
            name=f"velocity_bound_n{n}",
            order=n,
            sampled_max=sampled,
            bound=self.velocity_bound(n, energy),
            n_samples=len(cloud),
        )
        if not report.passed:
            logger.warning(f"속도 상계 위반: n={n}, 표본 {sampled:.4e} > 상계 {report.bound:.4e}")
        return report

    def remainder_increment_bound(self, c: ControlledCurve, energy: Optional[float] = None) -> BoundReport:
        """
        흐름에 의한 나머지 증분 상계
        |R^{u(γ)}|_{2ν} ≤ 3|∇u|_∞|R^γ|_{2ν} + (9/2)|∇²u|_∞|γ|_ν²
        (최대 성분 크기 기준, ∇ⁿu 는 스펙트럼 상계 사용)
        """
        if energy is None:
            energy = self.energy_rough(c)
        nu = c.base.nu
        u, grad = self.velocity_batch(c, c.y, 1)
        driven = make_controlled(u, np.einsum('nml,nla->nma', grad, c.y_prime), c.base)
        lhs = holder_norm_2(driven.remainder, 2.0 * nu)
        rhs = (3.0 * self.velocity_bound(1, energy) * holder_norm_2(c.remainder, 2.0 * nu)
               + 4.5 * self.velocity_bound(2, energy) * holder_norm_1(c.y, nu) ** 2)
        return BoundReport(name='remainder_increment', order=2, sampled_max=lhs, bound=rhs,
                           n_samples=len(c.y))

    def energy_upper_bound(self, c: ControlledCurve, energy: Optional[float] = None) -> BoundReport:
        """
        에너지 상계 모양 ‖φ‖_{C⁴}‖γ‖_D⁴(1 + ‖γ‖_D)² 대비 에너지 (상수 C = 1 기준; 비율 기록용)
        """
        if energy is None:
            energy = self.energy_rough(c)
        d_norm = controlled_norm(c).full_norm
        radii = np.linspace(0.0, 3.0 * self.kernel.mu, 64)
        test_points = np.concatenate([np.outer(radii, e) for e in (np.eye(3)[0], np.ones(3) / np.sqrt(3.0))])
        derivs = self.kernel_service.derivatives(test_points, 4)
        c4 = sum(float(np.max(np.abs(d))) for d in derivs)
        base = c4 * d_norm ** 4 * (1.0 + d_norm) ** 2
        return BoundReport(name='energy_upper_bound', order=4, sampled_max=float(energy), bound=base,
                           n_samples=len(test_points))


class VectorPotentialMap(SmoothMap):
    """곡선 γ 의 벡터 퍼텐셜 x ↦ ψ^γ(x) 를 사상으로 본 것"""

    out_shape = (3,)

    def __init__(self, fields: FilamentFieldService, curve: ControlledCurve):
        self.fields = fields
        self.curve = curve
        self.order = fields.kernel.max_order - 1

    def value(self, points):
        return self.fields.vector_potential_batch(self.curve, points, 0)[0]

    def jacobian(self, points):
        return self.fields.vector_potential_batch(self.curve, points, 1)[1]

    def hessian(self, points):
        return self.fields.vector_potential_batch(self.curve, points, 2)[2]
