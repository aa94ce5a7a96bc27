"""
Tests for the pointwise exterior algebra
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / "src"))

from forms.core import (BoxChart, FormField, GroupChart, exterior_derivative,
                        exterior_derivative_eval, wedge, wedge_eval)
from models import build_hyperbolic_utb, build_t3_contact

vectors = st.lists(st.floats(min_value=-2.0, max_value=2.0, allow_nan=False), min_size=9, max_size=9)
coordinates = st.lists(st.floats(min_value=0.0, max_value=6.28, allow_nan=False), min_size=3, max_size=3)


class TestFormField:
    """Test form construction and evaluation"""

    def test_coordinate_forms(self):
        """dx evaluates to the first component"""
        dx = FormField.coordinate(3, 0)
        value = dx.eval(np.zeros((1, 3)), np.array([[2.5, -1.0, 4.0]]))
        assert value[0] == pytest.approx(2.5)

    def test_degree_exceeds_dimension(self):
        """Forms above top degree are rejected"""
        with pytest.raises(ValueError, match="degree exceeds dimension"):
            FormField(4, 3, lambda p: np.zeros((len(p), 0)))

    def test_wrong_vector_shape(self):
        """Evaluation checks the vector stack shape"""
        omega = build_t3_contact().omega
        with pytest.raises(ValueError, match="expected vectors"):
            omega.eval(np.zeros((1, 3)), np.eye(3))

    def test_sum_keeps_analytic_derivative(self):
        """(α + df) keeps a closed-form derivative equal to dα"""
        model = build_t3_contact()
        df = FormField.function(3, lambda p: np.sin(p[:, 0]),
                                gradient=lambda p: np.stack([np.cos(p[:, 0]), 0 * p[:, 0], 0 * p[:, 0]], axis=1))
        shifted = model.alpha + df.analytic_derivative
        assert shifted.analytic_derivative is not None

        points = np.array([[0.3, 1.1, 2.0], [4.0, 0.2, 5.5]])
        pair = np.array([[1.0, 0.5, -0.2], [0.0, 1.0, 0.7]])
        assert np.allclose(exterior_derivative_eval(shifted, points, pair),
                           model.omega.eval(points, pair), atol=1e-12)


class TestWedge:
    """Test the wedge product"""

    @settings(max_examples=50, deadline=None)
    @given(point=coordinates, components=vectors)
    def test_shuffle_sum_matches_sign_table(self, point, components):
        """wedge_eval agrees with the symbolic product"""
        model = build_t3_contact()
        p = np.array([point])
        V = np.array(components).reshape(1, 3, 3)
        direct = wedge_eval(model.alpha, model.omega, p, V)
        table = wedge(model.alpha, model.omega).eval(p, V)
        assert direct[0] == pytest.approx(table[0], abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(point=coordinates, components=vectors)
    def test_alternating(self, point, components):
        """Swapping two vectors flips the sign"""
        model = build_t3_contact()
        p = np.array([point])
        V = np.array(components).reshape(1, 3, 3)
        swapped = V[:, [1, 0, 2]]
        a = wedge_eval(model.alpha, model.omega, p, V)
        b = wedge_eval(model.alpha, model.omega, p, swapped)
        assert a[0] == pytest.approx(-b[0], abs=1e-9)

    def test_t3_contact_density(self):
        """α∧ω = -μ on the T^3 reference"""
        model = build_t3_contact()
        points = np.random.default_rng(0).uniform(0, 2 * np.pi, size=(50, 3))
        values = wedge_eval(model.alpha, model.omega, points, model.frame(points))
        assert np.allclose(values, -1.0, atol=1e-12)

    def test_linear_in_first_factor(self):
        """(2α)∧ω = 2(α∧ω)"""
        model = build_t3_contact()
        points = np.array([[0.4, 0.9, 1.7]])
        frames = model.frame(points)
        single = wedge_eval(model.alpha, model.omega, points, frames)
        double = wedge_eval(model.alpha.scaled(2.0), model.omega, points, frames)
        assert double[0] == pytest.approx(2 * single[0])

    def test_wedge_degree_overflow(self):
        """ω∧ω has degree 4 > 3"""
        omega = build_t3_contact().omega
        with pytest.raises(ValueError, match="degree exceeds dimension"):
            wedge(omega, omega)
        with pytest.raises(ValueError, match="degree exceeds dimension"):
            wedge_eval(omega, omega, np.zeros((1, 3)), np.zeros((1, 4, 3)))


class TestExteriorDerivative:
    """Test dθ evaluation"""

    def test_finite_differences_match_analytic(self):
        """Central differences reproduce dα = ω on the box chart"""
        model = build_t3_contact()
        rng = np.random.default_rng(3)
        points = rng.uniform(0, 2 * np.pi, size=(40, 3))
        pairs = rng.normal(size=(40, 2, 3))
        numeric = exterior_derivative_eval(model.alpha, points, pairs, chart=BoxChart([2 * np.pi] * 3),
                                           analytic=False)
        analytic = exterior_derivative_eval(model.alpha, points, pairs)
        assert np.allclose(numeric, analytic, atol=1e-6)

    def test_group_chart_brackets(self):
        """On the group chart dα picks up the bracket terms: d(εa + r) = ε b∧r - a∧b"""
        eps = 0.5
        model = build_hyperbolic_utb(eps)
        points = np.tile(np.eye(2).ravel(), (6, 1))
        pairs = np.random.default_rng(5).normal(size=(6, 2, 3))
        numeric = exterior_derivative_eval(model.alpha, points, pairs, chart=GroupChart(), analytic=False)
        assert np.allclose(numeric, model.omega.eval(points, pairs), atol=1e-8)

    def test_numeric_form_coefficients(self):
        """exterior_derivative builds coefficient functions when no closed form exists"""
        theta = FormField(1, 3, lambda p: np.stack([np.sin(p[:, 1]), 0 * p[:, 0], 0 * p[:, 0]], axis=1),
                          name="sin y dx")
        d_theta = exterior_derivative(theta)
        coeffs = d_theta.coefficients(np.array([[0.0, 0.3, 0.0]]))
        # d(sin y dx) = -cos y dx∧dy
        assert coeffs[0, 0] == pytest.approx(-np.cos(0.3), abs=1e-6)
        assert np.allclose(coeffs[0, 1:], 0.0, atol=1e-9)

    def test_top_degree_rejected(self):
        """d of a 3-form in dimension 3 is not defined here"""
        volume = FormField.constant(3, 3, [1.0])
        with pytest.raises(ValueError, match="degree exceeds dimension"):
            exterior_derivative_eval(volume, np.zeros((1, 3)), np.zeros((1, 4, 3)))
