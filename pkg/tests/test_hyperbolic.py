"""
Tests for the hyperbolic unit tangent bundle
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / "src"))

from forms.quadrature import integrate_top_form
from models import ReductionError, build_hyperbolic_utb, reduce_to_fundamental_domain
from models.hyperbolic import (SIDE_PAIRINGS, base_point, classify, distance_to_center,
                               side_excess)


def _same_point(g, h):
    """g and -g represent the same element of PSL(2, R)"""
    return np.allclose(g, h, atol=1e-10) or np.allclose(g, -h, atol=1e-10)


class TestReduction:
    """Test reduce_to_fundamental_domain"""

    def test_identity_is_fixed(self):
        reduced = reduce_to_fundamental_domain(np.eye(2))
        assert _same_point(reduced, np.eye(2))

    @pytest.mark.parametrize("k", range(8))
    def test_side_pairing_undone(self, k):
        """T_k · I lies beyond side k and reduces back to I"""
        g = SIDE_PAIRINGS[k]
        assert np.max(side_excess(g)) > 0
        assert _same_point(reduce_to_fundamental_domain(g), np.eye(2))

    def test_reduced_points_inside(self):
        """Random products of pairings land in the closed octagon with unit determinant"""
        rng = np.random.default_rng(2)
        words = []
        for _ in range(20):
            g = np.eye(2)
            for k in rng.integers(0, 8, size=3):
                g = SIDE_PAIRINGS[k] @ g
            words.append(g)
        reduced = reduce_to_fundamental_domain(np.stack(words))
        assert reduced.shape == (20, 2, 2)
        assert np.all(side_excess(reduced) <= 1e-9)
        assert np.allclose(np.linalg.det(reduced), 1.0, atol=1e-9)

    def test_flattened_shape_preserved(self):
        flat = np.tile(np.eye(2).ravel(), (3, 1))
        assert reduce_to_fundamental_domain(flat).shape == (3, 4)

    def test_non_unimodular(self):
        with pytest.raises(ReductionError, match="non-unimodular"):
            reduce_to_fundamental_domain(2 * np.eye(2))

    def test_word_cap(self):
        """Two translation lengths out cannot be reduced in one step"""
        far = SIDE_PAIRINGS[0] @ SIDE_PAIRINGS[0]
        with pytest.raises(ReductionError, match="word length cap"):
            reduce_to_fundamental_domain(far, max_word=1)

    def test_base_point_of_identity(self):
        assert abs(base_point(np.eye(2))[0]) < 1e-15
        assert distance_to_center(np.eye(2))[0] == pytest.approx(0.0, abs=1e-12)


class TestHyperbolicModel:
    """Test the twisted bundle at several energies"""

    def test_classification(self):
        assert classify(0.5) == "elliptic"
        assert classify(1.0) == "parabolic"
        assert classify(2.0) == "hyperbolic"

    def test_epsilon_positive(self):
        with pytest.raises(ValueError, match="epsilon must be positive"):
            build_hyperbolic_utb(-0.5)

    def test_metadata(self):
        model = build_hyperbolic_utb(0.5)
        volume = 8 * np.pi ** 2
        assert model.metadata["lk_exact"] == pytest.approx(-0.75 * volume)
        assert model.metadata["closed_form_periods"][0] == pytest.approx(2 * np.pi / np.sqrt(0.75))
        assert "closed_form_periods" not in build_hyperbolic_utb(1.5).metadata

    def test_volume(self):
        """vol = area(Bolza) · 2π = 8π^2"""
        model = build_hyperbolic_utb(0.5)
        estimate = integrate_top_form(model, model.mu.form, resolution=16)
        assert estimate.value == pytest.approx(8 * np.pi ** 2, rel=1e-4)

    def test_sampled_points_unimodular(self):
        model = build_hyperbolic_utb(0.5)
        points = model.sample_points(50, seed=1)
        assert np.allclose(model.constraint_drift(points), 0.0, atol=1e-10)
        assert np.all(side_excess(points) <= 1e-9)

    def test_action_density_constant(self):
        """α(X) = ε^2 - 1 everywhere"""
        model = build_hyperbolic_utb(0.5)
        points = model.sample_points(10, seed=0)
        assert np.allclose(model.action_density(points), -0.75)
