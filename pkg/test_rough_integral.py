"""
러프 적분 테스트
보정 리만 합, Young 적분 비교, Q-나머지, 매끄러운 사상과의 합성
"""

import sys
import os

import numpy as np
import pytest
from scipy import special

# 경로 설정
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from models.app_config import SimulationConfig
from models.errors import BaseMismatch, ExponentTooLow, InsufficientSmoothness
from models.filament_state import FilamentState
from models.kernel_spec import KernelSpec
from services.rough_path_service import (lift_piecewise_linear, sample_brownian_bridge, circle_curve,
                                         make_controlled)
from services.rough_integral import (rough_integral, young_integral, q_grid, q_remainder,
                                     compose_smooth, composition_remainder, composition_report)
from services.smooth_maps import (SmoothMap, IdentityMap, AffineMap, QuadraticMap,
                                  ExponentialComponentMap, KernelMap)
from services.kernel_service import KernelService
from services.validation_suite import young_comparison, check_young_agreement, check_composition_remainder


def identity_curve(samples, nu):
    """γ 를 자기 자신으로 제어 (γ′ = I)"""
    return FilamentState.initial(lift_piecewise_linear(samples, nu)).controlled()


class ScalarOnlyMap(SmoothMap):
    """1차 도함수까지만 제공하는 사상"""

    order = 1
    out_shape = ()

    def value(self, points):
        return np.sum(points, axis=1)

    def jacobian(self, points):
        return np.ones_like(points)


def test_constant_integrand_against_itself():
    """상수 적분자는 0"""
    c = identity_curve(circle_curve(64), 0.9)
    constant = make_controlled(np.tile([0.3, -1.0, 2.0], (64, 1)), np.zeros((64, 3, 3)), c.base)
    result = rough_integral(c, constant)
    assert abs(float(result.total)) <= 1e-14


def test_gradient_loop_integral_vanishes():
    """∮⟨γ, dγ⟩ = 0"""
    c = identity_curve(circle_curve(256), 0.9)
    assert abs(float(rough_integral(c, c, 'dot').total)) <= 1e-10

    bridge = identity_curve(sample_brownian_bridge(256, 3), 0.4)
    assert abs(float(rough_integral(bridge, bridge, 'dot').total)) <= 1e-10


def test_loop_integral_recovers_loop_area():
    """∮X ⊗ dX 는 리프트의 전체 고리 면적"""
    c = identity_curve(sample_brownian_bridge(128, 8), 0.4)
    total = rough_integral(c, c, 'scale').total
    assert total.shape == (3, 3)
    assert np.allclose(total, c.base.loop_area, atol=1e-10)
    assert np.allclose(0.5 * (total - total.T), c.base.levy_area, atol=1e-10)


def test_young_integral_examples():
    n = 512
    theta = 2 * np.pi * np.arange(n) / n
    z = circle_curve(n)
    assert np.allclose(young_integral(np.ones(n), z, 0.9, pairing='scale'), 0.0, atol=1e-13)
    assert float(young_integral(np.cos(theta), np.sin(theta), 0.9)) == pytest.approx(np.pi, abs=1e-4)

    with pytest.raises(ExponentTooLow):
        young_integral(np.cos(theta), np.sin(theta), 0.5)


def test_rough_integral_matches_young_on_smooth_curve():
    """∮ e^{x₁} dx₂ = 2π I₁(1)"""
    rough, young = young_comparison(512)
    exact = 2 * np.pi * special.iv(1, 1.0)
    assert abs(rough - young) / abs(young) <= 1e-3
    assert rough == pytest.approx(exact, rel=1e-3)
    assert check_young_agreement().passed


def test_rough_young_difference_order():
    """러프 합과 Young 합의 차이는 N^{-1.5} 보다 빠르게 감소"""
    sizes = np.array([64, 128, 256, 512])
    errors = []
    for n in sizes:
        rough, young = young_comparison(int(n))
        errors.append(abs(rough - young) / abs(young))
    slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
    assert slope <= -1.5


def test_q_remainder_vanishes_for_exact_chain_rule():
    """W = Z = γ 또는 상수 W 이면 Q ≡ 0"""
    c = identity_curve(circle_curve(32), 0.9)
    result = rough_integral(c, c, 'dot', with_q_norm=True)
    assert result.q_norm <= 1e-9

    constant = make_controlled(np.tile([1.0, 2.0, -1.0], (32, 1)), np.zeros((32, 3, 3)), c.base)
    partial = rough_integral(constant, c, 'dot', with_partials=True)
    q = q_grid(constant, c, partial.partials)
    assert np.max(np.abs(q)) <= 1e-12
    assert np.array_equal(np.diagonal(q), np.zeros(32))


def test_q_remainder_report_is_stable():
    """e^{x₁} e₂ 적분에서 |Q|_{3ν} 와 상수는 세분해도 안정"""
    norms = []
    for n in (64, 128):
        c = identity_curve(circle_curve(n), 0.9)
        w = compose_smooth(ExponentialComponentMap(0, 1), c)
        result = rough_integral(w, c, 'dot', with_partials=True)
        report = q_remainder(result, w, c)
        assert np.isfinite(report.q_norm) and report.q_norm > 0
        assert report.constant > 0
        norms.append(report.q_norm)
    assert abs(norms[1] - norms[0]) / norms[0] <= 0.1

    with pytest.raises(ValueError):
        q_remainder(rough_integral(w, c), w, c)


def test_integral_input_errors():
    a = identity_curve(circle_curve(16), 0.9)
    b = identity_curve(sample_brownian_bridge(16, 0), 0.9)
    with pytest.raises(BaseMismatch):
        rough_integral(a, b)

    low = identity_curve(circle_curve(16), 0.3)
    with pytest.raises(ExponentTooLow):
        rough_integral(low, low)

    with pytest.raises(ValueError):
        rough_integral(a, a, pairing='cross')


def test_identity_and_affine_composition():
    """항등 사상은 곡선을 그대로, 아핀 사상의 나머지는 A R"""
    c = identity_curve(sample_brownian_bridge(32, 1), 0.4)
    same = compose_smooth(IdentityMap(), c)
    assert np.array_equal(same.y, c.y)
    assert np.array_equal(same.y_prime, c.y_prime)

    matrix = np.array([[1.0, 2.0, 0.0], [0.0, -1.0, 3.0]])
    plain = make_controlled(c.y, np.zeros((32, 3, 3)), c.base)
    mapped = compose_smooth(AffineMap(matrix, offset=np.array([1.0, -1.0])), plain)
    assert mapped.y.shape == (32, 2)
    assert np.allclose(mapped.remainder, np.einsum('ij,tsj->tsi', matrix, plain.remainder), atol=1e-12)


@pytest.mark.parametrize("samples,nu", [
    (circle_curve(64), 0.9),
    (sample_brownian_bridge(64, 0), 0.4),
])
def test_quadratic_composition_remainder(samples, nu):
    """이차 사상에서 정의식과 표현식 나머지 일치"""
    c = identity_curve(samples, nu)
    r_def, r_formula = composition_remainder(QuadraticMap(), c)
    assert r_def.shape == (64, 64)
    report = composition_report(QuadraticMap(), c)
    assert report.relative_error <= 1e-9
    assert report.constant >= 1.0


def test_kernel_composition_remainder():
    """커널 사상 φ_μ(x₀ − ·) 합성의 나머지"""
    kernel = KernelService(KernelSpec(1.0, 1.0))
    point = np.array([0.2, -0.1, 0.3])
    for samples, nu in ((circle_curve(64, 0.5), 0.9), (sample_brownian_bridge(64, 2, scale=0.5), 0.4)):
        c = identity_curve(samples, nu)
        report = composition_report(KernelMap(kernel, point), c)
        assert report.relative_error <= 1e-6


def test_composition_needs_second_derivatives():
    c = identity_curve(circle_curve(16), 0.9)
    with pytest.raises(InsufficientSmoothness):
        compose_smooth(ScalarOnlyMap(), c)
    with pytest.raises(InsufficientSmoothness):
        composition_remainder(ScalarOnlyMap(), c)


def test_composition_check():
    assert check_composition_remainder(SimulationConfig()).passed


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
