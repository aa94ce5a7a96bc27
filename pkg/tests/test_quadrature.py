"""
Tests for top-form quadrature
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / "src"))

from forms.core import FormField
from forms.quadrature import integrate_density, integrate_top_form, stratified_unit_cube
from models import build_hyperbolic_utb, build_t3_contact

TWO_PI = 2 * np.pi


class TestStratifiedSampler:
    """Test the stratified unit-cube sampler"""

    def test_weights_sum_to_one(self):
        """Weights cover the cube once"""
        blocks = stratified_unit_cube(1000, seed=3)
        weights = np.concatenate([w for _, _, w in blocks])
        samples = np.concatenate([u for _, u, _ in blocks])
        assert weights.sum() == pytest.approx(1.0)
        assert len(samples) == 1000
        assert np.all((samples >= 0) & (samples < 1))

    def test_reproducible(self):
        """Same seed, same samples"""
        a = np.concatenate([u for _, u, _ in stratified_unit_cube(500, seed=9)])
        b = np.concatenate([u for _, u, _ in stratified_unit_cube(500, seed=9)])
        assert np.array_equal(a, b)

    def test_too_few_samples(self):
        """Every stratum needs two samples"""
        with pytest.raises(ValueError, match="need at least"):
            stratified_unit_cube(100, seed=0, per_axis=8)


class TestIntegrateTopForm:
    """Test integrate_top_form on the periodic box"""

    def test_volume_grid(self):
        """∫ μ = (2π)^3"""
        model = build_t3_contact()
        estimate = integrate_top_form(model, model.mu.form, scheme="grid", resolution=8)
        assert estimate.value == pytest.approx(TWO_PI ** 3, rel=1e-12)
        assert estimate.scheme == "grid"
        assert estimate.samples == 8 ** 3

    def test_volume_monte_carlo(self):
        """Constant densities integrate exactly under the stratified weights"""
        model = build_t3_contact()
        estimate = integrate_top_form(model, model.mu.form, scheme="monte_carlo", resolution=4000, seed=1)
        assert estimate.value == pytest.approx(TWO_PI ** 3, rel=1e-10)
        assert estimate.error >= 0

    def test_oscillating_density_grid(self):
        """sin x sin y sin z μ integrates to zero on the trapezoid grid"""
        model = build_t3_contact()
        field = model.mu.form.multiplied(lambda p: np.sin(p[:, 0]) * np.sin(p[:, 1]) * np.sin(p[:, 2]))
        estimate = integrate_top_form(model, field, scheme="grid", resolution=16)
        assert abs(estimate.value) < 1e-10

    def test_monte_carlo_error_covers_truth(self):
        """The reported error brackets the exact value of a smooth integrand"""
        model = build_t3_contact()
        density = lambda p, frames: 1.0 + np.cos(p[:, 0]) ** 2  # noqa: E731
        estimate = integrate_density(model, density, scheme="monte_carlo", resolution=20000, seed=4)
        exact = 1.5 * TWO_PI ** 3
        assert abs(estimate.value - exact) < 5 * estimate.error

    def test_wrong_degree(self):
        """Only top-degree integrands are accepted"""
        model = build_t3_contact()
        with pytest.raises(ValueError, match="integrand must have degree 3"):
            integrate_top_form(model, model.omega)

    def test_unsupported_scheme(self):
        """The hyperbolic bundle only integrates on its grid"""
        model = build_hyperbolic_utb(0.5)
        volume = FormField.constant(3, 3, [1.0])
        with pytest.raises(ValueError, match="not supported"):
            integrate_top_form(model, volume, scheme="monte_carlo")
