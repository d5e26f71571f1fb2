"""
곡선 유도장 테스트
속도와 기울기, 벡터 퍼텐셜, 세 가지 에너지, 속도 상계
"""

import sys
import os

import numpy as np
import pytest
from scipy import integrate

# 경로 설정
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from models.errors import InsufficientSmoothness, ExponentTooLow, QuadratureFailure
from models.filament_state import FilamentState
from models.kernel_spec import KernelSpec
from services import filament_fields
from services.filament_fields import FilamentFieldService, LEVI_CIVITA
from services.rough_path_service import (lift_piecewise_linear, sample_brownian_bridge, circle_curve,
                                         trefoil_curve)
from services.validation_suite import check_energy_agreement, check_energy_positivity


def curve_of(samples, nu=0.9):
    return FilamentState.initial(lift_piecewise_linear(samples, nu)).controlled()


def axial_velocity(height, gamma_strength, mu):
    """단위 원 축 위 속도 2πΓ/(1 + h² + μ²)^{3/2}"""
    return 2 * np.pi * gamma_strength / (1 + height ** 2 + mu ** 2) ** 1.5


def unit_circle_energy(mu=1.0):
    """단위 원 에너지 2π² ∫₀¹ cos 2πu / √(2 − 2cos 2πu + μ²) du"""
    value, _ = integrate.quad(lambda u: np.cos(2 * np.pi * u) / np.sqrt(2 - 2 * np.cos(2 * np.pi * u) + mu ** 2),
                              0.0, 1.0, epsabs=1e-13, limit=200)
    return 2 * np.pi ** 2 * value


def test_point_curve_has_no_field():
    c = curve_of(np.tile([0.5, 0.5, 0.5], (16, 1)))
    fields = FilamentFieldService(KernelSpec())
    u = fields.velocity_batch(c, np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]))[0]
    assert np.array_equal(u, np.zeros((2, 3)))
    assert fields.energy_rough(c) == 0.0
    assert fields.energy_double_integral(c.y, 0.9) == 0.0
    report = fields.velocity_bound_check(c, 0, 0.0)
    assert report.sampled_max == 0.0 and report.passed


def test_ring_velocity_on_axis():
    """원 축 위 속도: 수직 성분 없음, 축 성분은 닫힌 형태에 2차 수렴"""
    fields = FilamentFieldService(KernelSpec(1.0, 0.5))
    x = np.array([0.0, 0.0, 1.0])
    exact = axial_velocity(1.0, 1.0, 0.5)
    errors = []
    for n in (128, 256):
        u = fields.velocity(curve_of(circle_curve(n)), x).u
        assert np.max(np.abs(u[:2])) <= 1e-10
        errors.append(abs(u[2] - exact) / exact)
    assert errors[1] <= 5e-3
    assert errors[1] < errors[0]


def test_rosenhead_reference_agrees():
    fields = FilamentFieldService(KernelSpec(1.0, 0.5))
    samples = circle_curve(256)
    points = np.array([[0.0, 0.0, 1.0], [0.3, -0.2, 0.4], [1.5, 0.0, 0.2]])
    rough = fields.velocity_batch(curve_of(samples), points)[0]
    reference = fields.rosenhead_velocity(samples, points)
    assert np.allclose(rough, reference, rtol=0.0, atol=1e-3 * np.max(np.abs(reference)))


def test_velocity_is_divergence_free():
    """해석적 기울기의 대각합과 중심 차분 발산"""
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    c = curve_of(trefoil_curve(64, 0.5))
    rng = np.random.default_rng(4)
    points = c.y[rng.integers(0, 64, 20)] + rng.normal(scale=0.3, size=(20, 3))

    grad = fields.velocity_batch(c, points, 1)[1]
    scale = np.max(np.abs(grad))
    assert np.max(np.abs(np.trace(grad, axis1=1, axis2=2))) <= 1e-10 * scale

    step = 1e-4
    divergence = np.zeros(len(points))
    for axis in range(3):
        shift = np.zeros(3)
        shift[axis] = step
        upper = fields.velocity_batch(c, points + shift)[0][:, axis]
        lower = fields.velocity_batch(c, points - shift)[0][:, axis]
        divergence += (upper - lower) / (2 * step)
    assert np.max(np.abs(divergence)) <= 1e-6 * scale

    single = fields.velocity(c, points[0], n_deriv=2)
    assert single.grad2_u.shape == (3, 3, 3)
    assert abs(single.divergence) <= 1e-10 * scale


def test_curl_of_vector_potential_is_velocity():
    fields = FilamentFieldService(KernelSpec(1.0, 0.8))
    c = curve_of(sample_brownian_bridge(64, 6, scale=0.5), 0.4)
    rng = np.random.default_rng(9)
    points = rng.normal(scale=0.5, size=(10, 3))

    potential, jacobian = fields.vector_potential_batch(c, points, 1)
    curl = np.einsum('mlj,pjl->pm', LEVI_CIVITA, jacobian)
    u = fields.velocity_batch(c, points)[0]
    assert np.allclose(curl, u, rtol=1e-5, atol=1e-8 * np.max(np.abs(u)))
    assert np.allclose(fields.vector_potential(c, points[0]), potential[0])


def test_velocity_uses_rough_integrals(mocker):
    spy = mocker.spy(filament_fields, 'rough_integral')
    fields = FilamentFieldService(KernelSpec())
    fields.velocity(curve_of(circle_curve(16)), np.zeros(3), n_deriv=1)
    assert spy.call_count == 2


def test_insufficient_kernel_order():
    fields = FilamentFieldService(KernelSpec(max_order=4))
    c = curve_of(circle_curve(16))
    with pytest.raises(InsufficientSmoothness):
        fields.velocity_batch(c, np.zeros((1, 3)), 3)
    with pytest.raises(ExponentTooLow):
        fields.energy_double_integral(c.y, 0.4)


def test_unit_circle_energy():
    """러프 에너지와 이중 합 에너지는 기준값과 일치"""
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    c = curve_of(circle_curve(256))
    reference = unit_circle_energy()
    h_rough = fields.energy_rough(c)
    h_double = fields.energy_double_integral(c.y, 0.9)
    assert h_rough > 0
    assert h_rough == pytest.approx(reference, rel=1e-3)
    assert h_double == pytest.approx(reference, rel=1e-3)
    assert h_rough == pytest.approx(h_double, rel=1e-3)


def test_energy_is_linear_in_kernel_strength():
    c = curve_of(circle_curve(64))
    one = FilamentFieldService(KernelSpec(1.0, 1.0)).energy_rough(c)
    three = FilamentFieldService(KernelSpec(3.0, 1.0)).energy_rough(c)
    assert three == pytest.approx(3.0 * one, rel=1e-12)
    assert FilamentFieldService(KernelSpec(0.0, 1.0)).energy_rough(c) == 0.0


@pytest.mark.slow
def test_fourier_energy_agrees_on_circle():
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    c = curve_of(circle_curve(64))
    report = fields.energy_report(c)
    assert report.h_fourier > 0
    assert report.h_fourier == pytest.approx(report.h_rough, rel=1e-2)
    assert report.agreement >= 0.0


def test_fourier_refinement_stops_when_settled(mocker):
    fields = FilamentFieldService(KernelSpec())
    c = curve_of(circle_curve(16))
    mocker.patch.object(FilamentFieldService, '_fourier_sum', side_effect=[1.0, 1.0])
    assert fields.energy_fourier(c) == 1.0


def test_fourier_refinement_fallback_and_failure(mocker):
    fields = FilamentFieldService(KernelSpec())
    c = curve_of(circle_curve(16))
    mocker.patch.object(FilamentFieldService, '_fourier_sum', side_effect=[1.0, 1.5, 1.2, 1.1, 1.105])
    assert fields.energy_fourier(c) == 1.105

    mocker.patch.object(FilamentFieldService, '_fourier_sum', side_effect=[1.0, 2.0, 3.0, 4.0, 5.0])
    with pytest.raises(QuadratureFailure):
        fields.energy_fourier(c)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_bridge_energy_is_nonnegative(seed):
    kernel = KernelSpec(1.0, 1.0)
    fields = FilamentFieldService(kernel)
    energy = fields.energy_rough(curve_of(sample_brownian_bridge(64, seed), 0.4))
    assert energy >= -1e-9 * kernel.gamma_strength ** 2 / kernel.mu


@pytest.mark.slow
def test_bridge_energy_under_refinement():
    """같은 bridge 를 세분해도 에너지는 거의 같음"""
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    coarse = fields.energy_rough(curve_of(sample_brownian_bridge(256, 12), 0.4))
    fine = fields.energy_rough(curve_of(sample_brownian_bridge(512, 12), 0.4))
    assert fine == pytest.approx(coarse, rel=5e-2)


def test_velocity_bounds_on_circle():
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    c = curve_of(circle_curve(64))
    energy = fields.energy_rough(c)
    for n in range(3):
        report = fields.velocity_bound_check(c, n, energy)
        assert report.passed
        assert report.slack >= 1.0
        assert report.n_samples == 64 + 150


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_velocity_gradient_bound_on_bridges(seed):
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    c = curve_of(sample_brownian_bridge(64, seed), 0.4)
    assert fields.velocity_bound_check(c, 1, seed=seed).passed


def test_remainder_increment_and_energy_bounds():
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    c = curve_of(circle_curve(64))
    energy = fields.energy_rough(c)
    assert fields.remainder_increment_bound(c, energy).passed

    upper = fields.energy_upper_bound(c, energy)
    assert upper.bound > 0
    assert np.isfinite(upper.sampled_max / upper.bound)
    assert upper.sampled_max == energy


def pairwise_kernel(fields, samples):
    n = len(samples)
    return np.array([[fields.kernel_service.derivatives((samples[i] - samples[j])[None, :], 0)[0][0]
                      for j in range(n)] for i in range(n)])


def test_discrete_energy_is_forward_increment_sum():
    """½ΣΣ φ̄⟨Δγ_i, Δγ_j⟩ (네 끝점 평균) 는 중심 차분 형태 ½Σφ⟨E_k, E_l⟩ 와 같음"""
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    samples = trefoil_curve(16, 0.5)
    n = len(samples)
    phi = pairwise_kernel(fields, samples)

    forward = 0.0
    for i in range(n):
        for j in range(n):
            i1, j1 = (i + 1) % n, (j + 1) % n
            phi_bar = 0.25 * (phi[i, j] + phi[i1, j] + phi[i, j1] + phi[i1, j1])
            forward += 0.5 * phi_bar * np.dot(samples[i1] - samples[i], samples[j1] - samples[j])

    steps = 0.5 * (np.roll(samples, -1, axis=0) - np.roll(samples, 1, axis=0))
    central = 0.5 * np.einsum('kl,ka,la->', phi, steps, steps)

    assert fields.discrete_energy(samples) == pytest.approx(forward, rel=1e-12)
    assert forward == pytest.approx(central, rel=1e-12)
    assert fields.energy_double_integral(samples, 0.9) == fields.discrete_energy(samples)


def test_discrete_energy_gradient_by_finite_differences():
    fields = FilamentFieldService(KernelSpec(1.0, 0.5))
    samples = trefoil_curve(16, 0.5)
    gradient = fields.discrete_energy_gradient(samples)
    assert gradient.shape == samples.shape

    rng = np.random.default_rng(3)
    eps = 1e-6
    for _ in range(3):
        direction = rng.standard_normal(samples.shape)
        slope = (fields.discrete_energy(samples + eps * direction)
                 - fields.discrete_energy(samples - eps * direction)) / (2 * eps)
        assert slope == pytest.approx(np.sum(gradient * direction), rel=1e-6, abs=1e-9)


def test_discrete_energy_is_translation_invariant():
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    samples = trefoil_curve(32, 0.5)
    shifted = samples + np.array([0.3, -1.2, 2.0])
    assert fields.discrete_energy(shifted) == pytest.approx(fields.discrete_energy(samples), rel=1e-12)
    # 평행 이동 방향의 기울기 합은 0
    assert np.allclose(fields.discrete_energy_gradient(samples).sum(axis=0), 0.0, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_discrete_energy_is_nonnegative_on_bridges(seed):
    kernel = KernelSpec(1.0, 1.0)
    fields = FilamentFieldService(kernel)
    assert fields.discrete_energy(sample_brownian_bridge(64, seed)) >= -1e-9 * kernel.gamma_strength ** 2 / kernel.mu


@pytest.mark.slow
def test_energy_positivity_over_hundred_bridges():
    """브라운 다리 100개 (N=256, ν=0.4) 에서 러프 에너지 ≥ −1e−9 Γ²/μ"""
    result = check_energy_positivity(FilamentFieldService(KernelSpec(1.0, 1.0)))
    assert result.passed, result.detail
    assert "100 bridges, N=256" in result.detail


@pytest.mark.slow
def test_three_energies_agree_on_circle():
    """단위 원 N=256: 러프, 이중 합, Fourier 에너지의 쌍별 상대 차이 ≤ 1e−3"""
    fields = FilamentFieldService(KernelSpec(1.0, 1.0))
    report = fields.energy_report(curve_of(circle_curve(256)))
    assert report.h_double is not None and report.h_fourier is not None
    assert report.agreement <= 1e-3
    assert check_energy_agreement(fields).passed


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
