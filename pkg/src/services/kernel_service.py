"""
정규화 커널 서비스 모듈
φ_μ(z) = Γ(|z|² + μ²)^{-1/2} 의 해석적 도함수, 지름 방향 Fourier 변환,
스펙트럼 표와 모멘트, 커널 가설 검증을 담당합니다.
"""

import logging
import time
import warnings
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from models.app_config import SimulationConfig
from models.kernel_spec import KernelSpec, SpectralTable, HypothesisReport
from models.errors import OrderUnsupported, QuadratureFailure

logger = logging.getLogger(__name__)

# d^k/ds^k s^{-1/2} = c_k s^{-1/2-k}
POWER_COEFFICIENTS = (1.0, -0.5, 0.75, -1.875, 6.5625)
N_MOMENTS = 4
RELIABLE_FLOOR = 1e-5
STABILIZATION = 1e-6
TAIL_FIT_NODES = 24


def _eye_products(z: np.ndarray):
    eye = np.eye(3)
    sym3 = (np.einsum('ij,mk->mijk', eye, z) + np.einsum('ik,mj->mijk', eye, z)
            + np.einsum('jk,mi->mijk', eye, z))
    sym4_zz = (np.einsum('ij,mk,ml->mijkl', eye, z, z) + np.einsum('ik,mj,ml->mijkl', eye, z, z)
               + np.einsum('jk,mi,ml->mijkl', eye, z, z) + np.einsum('il,mj,mk->mijkl', eye, z, z)
               + np.einsum('jl,mi,mk->mijkl', eye, z, z) + np.einsum('kl,mi,mj->mijkl', eye, z, z))
    sym4_dd = (np.einsum('ij,kl->ijkl', eye, eye) + np.einsum('ik,jl->ijkl', eye, eye)
               + np.einsum('il,jk->ijkl', eye, eye))
    return eye, sym3, sym4_zz, sym4_dd


class KernelService:
    """정규화 커널 서비스 클래스"""

    def __init__(self, spec: KernelSpec, config: Optional[SimulationConfig] = None):
        """
        KernelService 초기화

        Args:
            spec: 커널 명세 (Γ, μ, 최대 미분 차수)
            config: 수치 설정 (감쇠 계수, 표 해상도)
        """
        self.spec = spec
        self.config = config or SimulationConfig()
        self._table: Optional[SpectralTable] = None
        self._spline: Optional[CubicSpline] = None

    # ------------------------------------------------------------------
    # 실공간 도함수
    # ------------------------------------------------------------------

    def derivatives(self, points: np.ndarray, order: int) -> List[np.ndarray]:
        """
        점 배열에서 φ 와 도함수 텐서들

        Args:
            points: (M, 3) 점 배열
            order: 최고 미분 차수 (0..max_order)

        Returns:
            List[np.ndarray]: [φ (M,), ∇φ (M,3), ∇²φ (M,3,3), ...] 길이 order+1

        Raises:
            OrderUnsupported: order 가 max_order 보다 클 때
        """
        if order < 0 or order > self.spec.max_order or order >= len(POWER_COEFFICIENTS):
            raise OrderUnsupported(
                f"derivative order {order} is not available (max_order = {self.spec.max_order})"
            )
        z = np.atleast_2d(np.asarray(points, dtype=float))
        s = np.einsum('ma,ma->m', z, z) + self.spec.mu ** 2
        f = [self.spec.gamma_strength * c * s ** (-0.5 - k) for k, c in enumerate(POWER_COEFFICIENTS[:order + 1])]

        out = [f[0]]
        if order >= 1:
            out.append(2.0 * f[1][:, None] * z)
        if order >= 2:
            eye, sym3, sym4_zz, sym4_dd = _eye_products(z)
            out.append(4.0 * f[2][:, None, None] * np.einsum('mi,mj->mij', z, z)
                       + 2.0 * f[1][:, None, None] * eye)
        if order >= 3:
            out.append(8.0 * f[3][:, None, None, None] * np.einsum('mi,mj,mk->mijk', z, z, z)
                       + 4.0 * f[2][:, None, None, None] * sym3)
        if order >= 4:
            out.append(16.0 * f[4][:, None, None, None, None] * np.einsum('mi,mj,mk,ml->mijkl', z, z, z, z)
                       + 8.0 * f[3][:, None, None, None, None] * sym4_zz
                       + 4.0 * f[2][:, None, None, None, None] * sym4_dd)
        return out

    def kernel_eval(self, z: np.ndarray, order: int) -> List[np.ndarray]:
        """한 점에서 φ(z) 와 order 차까지의 도함수 텐서"""
        return [d[0] for d in self.derivatives(np.asarray(z, dtype=float)[None, :], order)]

    # ------------------------------------------------------------------
    # Fourier 변환
    # ------------------------------------------------------------------

    def closed_form(self, k: np.ndarray) -> np.ndarray:
        """후보 닫힌 형태 4πΓμK₁(μk)/k (수치 검증 대상)"""
        k = np.asarray(k, dtype=float)
        mu = self.spec.mu
        return 4.0 * np.pi * self.spec.gamma_strength * mu * special.k1(mu * k) / k

    def _damped_transform(self, k: float, eps: float) -> float:
        gamma, mu = self.spec.gamma_strength, self.spec.mu

        def correction(r):
            s = np.sqrt(r * r + mu * mu)
            return -gamma * mu * mu / (s * (r + s)) * np.exp(-eps * r)

        with warnings.catch_warnings():
            warnings.simplefilter('ignore', integrate.IntegrationWarning)
            oscillatory, _ = integrate.quad(correction, 0.0, np.inf, weight='sin', wvar=k,
                                            epsabs=1e-14 * gamma, limlst=100, limit=200)
        return 4.0 * np.pi / k * (gamma * k / (k * k + eps * eps) + oscillatory)

    def kernel_fourier(self, k: float) -> float:
        """
        지름 방향 3차원 Fourier 변환 φ̂(k) = (4π/k)∫₀^∞ r sin(kr) φ(r) dr

        rφ(r) = Γ + g(r) 로 나누어 상수 부분은 감쇠 e^{−εr} 하에서 해석적으로,
        g 부분은 진동 구적 (QAWF) 으로 적분한 뒤 ε → 0 Richardson 외삽합니다.

        Args:
            k: 파수 크기 (> 0)

        Returns:
            float: φ̂(k)

        Raises:
            QuadratureFailure: 외삽이 안정되지 않을 때
        """
        if k <= 0:
            raise ValueError("k must be positive")
        if self.spec.gamma_strength == 0:
            return 0.0

        eps = np.asarray(self.config.damping_factors, dtype=float) * k
        values = np.array([self._damped_transform(k, e) for e in eps])
        if not np.all(np.isfinite(values)):
            raise QuadratureFailure(f"damped transform is not finite at k = {k:.4g}")

        # Neville 외삽: 일차 두 개와 이차 하나
        linear_a = (values[0] * eps[1] - values[1] * eps[0]) / (eps[1] - eps[0])
        linear_b = (values[1] * eps[2] - values[2] * eps[1]) / (eps[2] - eps[1])
        quadratic = (linear_a * eps[2] - linear_b * eps[0]) / (eps[2] - eps[0])

        scale = 4.0 * np.pi * self.spec.gamma_strength / (k * k)
        if abs(quadratic - linear_b) > STABILIZATION * scale:
            raise QuadratureFailure(
                f"Richardson limit did not stabilize at k = {k:.4g}: "
                f"|R3 - R2| = {abs(quadratic - linear_b):.3e}"
            )
        return float(quadratic)

    # ------------------------------------------------------------------
    # 스펙트럼 표
    # ------------------------------------------------------------------

    def spectral_table(self) -> SpectralTable:
        """
        로그 격자 [1e-2, 10²/μ] 위 φ̂ 표 (계산 후 캐시)

        상쇄로 정밀도를 잃는 큰 k 에서는 꼬리 적합
        log φ̂ = log A − p log k − b k 로 대체합니다.
        """
        if self._table is None:
            self._table = self._build_table()
        return self._table

    def _build_table(self) -> SpectralTable:
        start_time = time.time()
        mu = self.spec.mu
        k = np.geomspace(1e-2, 1e2 / mu, self.config.spectral_resolution)

        if self.spec.gamma_strength == 0:
            zeros = np.zeros_like(k)
            return SpectralTable(k, zeros, np.ones_like(k, dtype=bool), (0.0, 0.0, 0.0),
                                 tuple(0.0 for _ in range(N_MOMENTS)), 0.0)

        phi_hat = np.zeros_like(k)
        reliable = np.zeros_like(k, dtype=bool)
        coulomb = 4.0 * np.pi * self.spec.gamma_strength / k ** 2
        failures = 0
        for i, kv in enumerate(k):
            try:
                phi_hat[i] = self.kernel_fourier(kv)
            except QuadratureFailure:
                failures += 1
                continue
            reliable[i] = phi_hat[i] >= RELIABLE_FLOOR * coulomb[i]
        # 신뢰 구간은 첫 실패 이전의 연속 구간
        if not reliable[0]:
            raise QuadratureFailure("transform is unreliable at the smallest tabulated k")
        cut = int(np.argmin(reliable)) if not reliable.all() else len(k)
        reliable[cut:] = False
        if failures:
            logger.warning(f"Fourier 변환 구적 실패 {failures}개 노드, 꼬리 적합으로 대체")

        tail = self._fit_tail(k[:cut], phi_hat[:cut])
        log_a, power, rate = tail
        phi_hat[cut:] = np.exp(log_a - power * np.log(k[cut:]) - rate * k[cut:])

        table = SpectralTable(k, phi_hat, reliable, tail)
        low_k = k[0] * k[0] ** 2 * phi_hat[0]
        moments = tuple(self._radial_moment(table, 2 * n + 4) for n in range(N_MOMENTS))
        table = SpectralTable(k, phi_hat, reliable, tail, moments, low_k)

        logger.info(
            f"스펙트럼 표 생성 완료 (μ={mu}, 신뢰 노드 {cut}/{len(k)}, "
            f"꼬리 감쇠율 {rate:.4f}, {time.time() - start_time:.2f}초)"
        )
        return table

    def _fit_tail(self, k: np.ndarray, phi_hat: np.ndarray) -> Tuple[float, float, float]:
        count = min(TAIL_FIT_NODES, len(k))
        if count < 3:
            raise QuadratureFailure("too few reliable nodes for the tail fit")
        kk = k[-count:]
        design = np.stack([np.ones_like(kk), -np.log(kk), -kk], axis=1)
        coeffs, *_ = np.linalg.lstsq(design, np.log(phi_hat[-count:]), rcond=None)
        return float(coeffs[0]), float(coeffs[1]), float(coeffs[2])

    def _radial_moment(self, table: SpectralTable, power: int) -> float:
        """4π ∫₀^∞ k^power φ̂(k) dk: 저주파 근사 + 신뢰 구간 Simpson + 해석적 꼬리"""
        k, phi_hat = table.k, table.phi_hat
        idx = np.flatnonzero(table.reliable)
        cut = idx[-1] + 1
        kr = k[:cut]
        integrand = kr ** power * phi_hat[:cut]

        # k² φ̂ 는 k → 0 에서 상수에 수렴
        low = k[0] ** (power - 1) * (k[0] ** 2 * phi_hat[0]) / (power - 1)
        body = integrate.simpson(integrand * kr, x=np.log(kr))
        tail = self._tail_integral(table.tail, power, kr[-1])
        return float(4.0 * np.pi * (low + body + tail))

    @staticmethod
    def _tail_integral(tail: Tuple[float, float, float], power: int, k_cut: float) -> float:
        """∫_{k_cut}^∞ k^power A k^{-p} e^{-bk} dk (상부 불완전 감마 함수)"""
        log_a, p, b = tail
        a = power - p + 1.0
        if b <= 0 or a <= 0:
            raise QuadratureFailure(f"tail fit is not integrable (power {p:.3f}, rate {b:.3f})")
        return float(np.exp(log_a) * b ** (-a) * special.gammaincc(a, b * k_cut) * special.gamma(a))

    def spectral_moment(self, n: int) -> float:
        """
        M_n = ∫_{ℝ³} |k|^{2(1+n)} φ̂(k) dk = 4π∫₀^∞ k^{2n+4} φ̂(k) dk

        Raises:
            ValueError: n 이 0..3 밖일 때
            QuadratureFailure: 꼬리가 적분 불가능할 때
        """
        if not 0 <= n < N_MOMENTS:
            raise ValueError(f"moment order must be in 0..{N_MOMENTS - 1}, got {n}")
        return self.spectral_table().moments[n]

    def phi_hat_at(self, k: np.ndarray) -> np.ndarray:
        """
        임의 k 에서 φ̂: 신뢰 구간은 log-log 삼차 스플라인, 그 너머는 꼬리 모델,
        최소 k 아래는 Coulomb 형태 φ̂ ∝ k^{-2}
        """
        table = self.spectral_table()
        k = np.asarray(k, dtype=float)
        if self.spec.gamma_strength == 0:
            return np.zeros_like(k)

        if self._spline is None:
            self._spline = _log_spline(table)
        spline = self._spline
        k_cut = table.k_cut
        log_a, power, rate = table.tail
        out = np.empty_like(k)
        inner = (k >= table.k[0]) & (k <= k_cut)
        out[inner] = np.exp(spline(np.log(k[inner])))
        outer = k > k_cut
        out[outer] = np.exp(log_a - power * np.log(k[outer]) - rate * k[outer])
        low = k < table.k[0]
        out[low] = table.phi_hat[0] * (table.k[0] / k[low]) ** 2
        return out

    # ------------------------------------------------------------------
    # 가설 검증
    # ------------------------------------------------------------------

    def validate_hypothesis(self, table: Optional[SpectralTable] = None,
                            seed: int = 0) -> HypothesisReport:
        """
        커널 가설 검증: (i) 짝함수, (ii) φ̂ ≥ 0, (iii) ∫(1+|k|²)²φ̂ dk 유한

        실패는 예외가 아닌 보고서로 기록됩니다.

        Args:
            table: 검증할 표 (기본은 이 커널의 표; 부호 주입 테스트용)
            seed: 짝함수 검사 표본 시드

        Returns:
            HypothesisReport: 조항별 결과
        """
        if table is None:
            table = self.spectral_table()
        rng = np.random.default_rng(seed)
        test_points = rng.normal(scale=2.0 * self.spec.mu, size=(32, 3))
        even = bool(np.allclose(self.derivatives(test_points, 0)[0], self.derivatives(-test_points, 0)[0],
                                rtol=1e-14, atol=0.0))

        peak = float(np.max(np.abs(table.phi_hat))) if table.phi_hat.size else 0.0
        min_ratio = float(np.min(table.phi_hat)) / peak if peak > 0 else 0.0
        nonnegative = min_ratio >= -1e-9

        tail_rate = float(table.tail[2])
        if self.spec.gamma_strength == 0:
            weighted = 0.0
            mass = 0.0
        else:
            try:
                mass = self._radial_moment(table, 2)
                weighted = mass + 2.0 * self._radial_moment(table, 4) + self._radial_moment(table, 6)
            except QuadratureFailure:
                mass = float('nan')
                weighted = float('inf')
        finite = bool(np.isfinite(weighted)) and (tail_rate > 0 or weighted == 0.0)

        target = self.spec.peak_value
        parseval = mass / (2.0 * np.pi) ** 3
        parseval_error = abs(parseval - target) / target if target > 0 else abs(parseval)

        report = HypothesisReport(
            even=even,
            nonnegative_transform=nonnegative,
            finite_weighted_integral=finite,
            min_ratio=min_ratio,
            weighted_integral=float(weighted),
            tail_rate=tail_rate,
            parseval_error=float(parseval_error),
        )
        if report.passed:
            logger.info(f"커널 가설 검증 통과 (μ={self.spec.mu}, Parseval 오차 {parseval_error:.2e})")
        else:
            logger.warning(f"커널 가설 검증 실패: {report.to_dict()}")
        return report


@lru_cache(maxsize=16)
def _cached_service(gamma_strength: float, mu: float, max_order: int, resolution: int,
                    damping: Tuple[float, ...]) -> KernelService:
    config = SimulationConfig(spectral_resolution=resolution, damping_factors=damping)
    return KernelService(KernelSpec(gamma_strength, mu, max_order), config)


def get_kernel_service(spec: KernelSpec, config: Optional[SimulationConfig] = None) -> KernelService:
    """(Γ, μ, 표 설정) 별로 스펙트럼 표를 공유하는 서비스"""
    config = config or SimulationConfig()
    return _cached_service(spec.gamma_strength, spec.mu, spec.max_order,
                           config.spectral_resolution, tuple(config.damping_factors))


def _log_spline(table: SpectralTable) -> CubicSpline:
    idx = np.flatnonzero(table.reliable)
    return CubicSpline(np.log(table.k[idx]), np.log(table.phi_hat[idx]))
