"""
정규화 커널 테스트
실공간 도함수, 지름 방향 Fourier 변환, 스펙트럼 모멘트, 커널 가정 검증
"""

import sys
import os

import numpy as np
import pytest
from scipy import special

# 경로 설정
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from models.app_config import SimulationConfig
from models.errors import OrderUnsupported
from models.kernel_spec import KernelSpec
from services.kernel_service import KernelService, get_kernel_service
from services.validation_suite import check_kernel_hypothesis


def exact_moment(n, gamma_strength=1.0, mu=1.0):
    """4π∫k^{2n+4}·4πΓμK₁(μk)/k dk 의 닫힌 형태"""
    a = 2 * n + 3
    integral = 2.0 ** (a - 1) * special.gamma((a + 2) / 2) * special.gamma(a / 2)
    return 16 * np.pi ** 2 * gamma_strength * mu ** (-a) * integral


def test_kernel_values():
    """φ(0) = Γ/μ, φ(1,0,0) = 1/√2, ∂₁φ(1,0,0) = −2^{-3/2}"""
    kernel = KernelService(KernelSpec(2.0, 0.5))
    value, grad = kernel.kernel_eval(np.zeros(3), 1)
    assert value == pytest.approx(4.0)
    assert np.array_equal(grad, np.zeros(3))

    unit = KernelService(KernelSpec(1.0, 1.0))
    value, grad = unit.kernel_eval(np.array([1.0, 0.0, 0.0]), 1)
    assert value == pytest.approx(0.70711, abs=1e-5)
    assert grad[0] == pytest.approx(-0.35355, abs=1e-5)
    assert grad[1] == 0.0 and grad[2] == 0.0


def test_derivatives_match_finite_differences():
    """order 차 텐서와 (order−1) 차 텐서의 중심 차분 비교"""
    kernel = KernelService(KernelSpec(1.0, 0.7))
    rng = np.random.default_rng(5)
    points = rng.normal(scale=1.5, size=(6, 3))
    step = 1e-4
    for order in range(1, 5):
        exact = kernel.derivatives(points, order)[order]
        numeric = np.zeros_like(exact)
        for axis in range(3):
            shift = np.zeros(3)
            shift[axis] = step
            upper = kernel.derivatives(points + shift, order - 1)[order - 1]
            lower = kernel.derivatives(points - shift, order - 1)[order - 1]
            numeric[..., axis] = (upper - lower) / (2 * step)
        assert np.allclose(numeric, exact, rtol=0.0, atol=1e-6 * np.max(np.abs(exact)))


def test_derivative_tensors_are_symmetric():
    kernel = KernelService(KernelSpec())
    fourth = kernel.derivatives(np.array([[0.3, -0.2, 0.9]]), 4)[4][0]
    assert np.allclose(fourth, np.transpose(fourth, (1, 0, 2, 3)))
    assert np.allclose(fourth, np.transpose(fourth, (0, 1, 3, 2)))
    assert np.allclose(fourth, np.transpose(fourth, (2, 1, 0, 3)))


def test_order_above_kernel_is_rejected():
    kernel = KernelService(KernelSpec(max_order=4))
    with pytest.raises(OrderUnsupported):
        kernel.derivatives(np.zeros((1, 3)), 5)
    with pytest.raises(OrderUnsupported):
        KernelService(KernelSpec(max_order=4)).derivatives(np.zeros((1, 3)), -1)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(mu=0.0)
    with pytest.raises(ValueError):
        KernelSpec(gamma_strength=-1.0)
    with pytest.raises(ValueError):
        KernelSpec(max_order=3)
    assert KernelSpec(3.0, 1.5).peak_value == pytest.approx(2.0)


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0, 4.0])
def test_fourier_transform_matches_closed_form(k):
    kernel = KernelService(KernelSpec(1.0, 1.0))
    assert kernel.kernel_fourier(k) == pytest.approx(float(kernel.closed_form(np.array([k]))[0]), rel=1e-5)


def test_fourier_transform_coulomb_limit():
    """μk → 0 에서 φ̂ ≈ 4πΓ/k²"""
    kernel = KernelService(KernelSpec(1.0, 0.05))
    k = 0.1
    assert kernel.kernel_fourier(k) * k ** 2 / (4 * np.pi) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError):
        kernel.kernel_fourier(0.0)


def test_spectral_table_is_nonnegative():
    table = get_kernel_service(KernelSpec(1.0, 1.0)).spectral_table()
    peak = np.max(np.abs(table.phi_hat))
    assert np.min(table.phi_hat) >= -1e-9 * peak
    assert table.reliable[0]
    assert table.tail[2] > 0
    assert len(table.moments) == 4


def test_hypothesis_passes_and_detects_sign_flip():
    kernel = get_kernel_service(KernelSpec(1.0, 1.0))
    report = kernel.validate_hypothesis()
    assert report.passed
    assert report.parseval_error <= 1e-4

    flipped = kernel.validate_hypothesis(kernel.spectral_table().negated())
    assert not flipped.passed
    assert not flipped.nonnegative_transform
    assert flipped.even


@pytest.mark.slow
def test_hypothesis_check_over_widths():
    assert check_kernel_hypothesis(SimulationConfig()).passed


def test_spectral_moments_against_closed_form():
    kernel = get_kernel_service(KernelSpec(1.0, 1.0))
    assert kernel.spectral_moment(0) == pytest.approx(exact_moment(0), rel=1e-3)
    assert kernel.spectral_moment(1) == pytest.approx(exact_moment(1), rel=2e-2)
    assert kernel.spectral_moment(2) == pytest.approx(exact_moment(2), rel=2e-2)
    with pytest.raises(ValueError):
        kernel.spectral_moment(4)


def test_spectral_moment_scaling():
    """Γ 에 선형, μ 가 커지면 감소"""
    base = get_kernel_service(KernelSpec(1.0, 1.0))
    doubled = get_kernel_service(KernelSpec(2.0, 1.0))
    wide = get_kernel_service(KernelSpec(1.0, 2.0))
    for n in range(3):
        assert doubled.spectral_moment(n) == pytest.approx(2.0 * base.spectral_moment(n), rel=1e-8)
    assert wide.spectral_moment(0) < base.spectral_moment(0)


def test_zero_strength_kernel():
    kernel = KernelService(KernelSpec(0.0, 1.0))
    assert kernel.kernel_fourier(1.0) == 0.0
    assert kernel.spectral_moment(0) == 0.0
    assert np.array_equal(kernel.phi_hat_at(np.array([0.5, 5.0])), np.zeros(2))
    assert np.array_equal(kernel.derivatives(np.ones((2, 3)), 2)[2], np.zeros((2, 3, 3)))


def test_phi_hat_interpolation():
    """표 사이 값은 닫힌 형태와 가깝고, 최소 k 아래는 Coulomb 형태"""
    kernel = get_kernel_service(KernelSpec(1.0, 1.0))
    k = np.array([0.3, 1.7, 6.0])
    assert np.allclose(kernel.phi_hat_at(k), kernel.closed_form(k), rtol=1e-3)
    table = kernel.spectral_table()
    below = kernel.phi_hat_at(np.array([table.k[0] / 2]))
    assert below[0] == pytest.approx(4.0 * table.phi_hat[0])


def test_spectral_table_is_built_once(mocker):
    kernel = KernelService(KernelSpec(1.0, 2.0), SimulationConfig(spectral_resolution=64))
    spy = mocker.spy(KernelService, '_build_table')
    kernel.spectral_moment(0)
    kernel.spectral_moment(1)
    kernel.phi_hat_at(np.array([1.0]))
    assert spy.call_count == 1


def test_kernel_service_is_shared():
    assert get_kernel_service(KernelSpec(1.0, 1.0)) is get_kernel_service(KernelSpec(1.0, 1.0))
    assert get_kernel_service(KernelSpec(1.0, 1.0)) is not get_kernel_service(KernelSpec(1.0, 0.5))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
