"""
Tests for the model catalog
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / "src"))

from forms.core import wedge_eval
from models import (FourierTerm, LevelSetSpec, MagneticSpec, PolynomialHamiltonian,
                    build_levelset, build_magnetic_torus, build_t3_contact, check_model_invariants)


class TestT3Contact:
    """Test the T^3 reference model"""

    def test_metadata(self, t3_model):
        """Exact values carried by the model"""
        assert t3_model.metadata["lk_exact"] == pytest.approx(-(2 * np.pi) ** 3)
        assert t3_model.metadata["volume"] == pytest.approx((2 * np.pi) ** 3)
        assert len(t3_model.h1_basis) == 3

    def test_invariants(self, t3_model):
        """dα = ω, ω nowhere zero, H^1 basis closed, μ positive"""
        check = check_model_invariants(t3_model, n_points=200, n_comass=2000)
        assert check.passed
        assert check.min_comass == pytest.approx(1.0)

    def test_characteristic_field(self, t3_model):
        """Closed-form X agrees with the linear solve of i_X μ = ω"""
        points = t3_model.sample_points(25, seed=2)
        assert np.allclose(t3_model.characteristic_field(points),
                           t3_model.solve_characteristic(points), atol=1e-12)

    def test_function_basis_size(self, t3_model):
        """cos and sin per ±k pair with 1 <= |k|_1 <= 1"""
        assert len(t3_model.function_basis(1)) == 6


class TestLevelSet:
    """Test star-shaped level sets in R^4"""

    def test_sphere_points_on_level(self, sphere_model):
        """Sampled points satisfy H = c"""
        points = sphere_model.sample_points(100, seed=0)
        assert np.allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-12)

    def test_sphere_invariants(self, sphere_model):
        """The restricted structure passes the invariant checks"""
        assert check_model_invariants(sphere_model, n_points=100, n_comass=1000).passed

    def test_sphere_field_is_hamiltonian(self, sphere_model):
        """On the round sphere X_H is the Hopf rotation, tangent to the level"""
        points = sphere_model.sample_points(20, seed=1)
        X = sphere_model.characteristic_field(points)
        assert np.allclose(np.sum(X * points, axis=1), 0.0, atol=1e-12)
        assert np.allclose(sphere_model.solve_characteristic(points), X, atol=1e-8)

    def test_contact_density_positive(self, sphere_model):
        """λ∧ω0 is positive on the oriented frame of the sphere"""
        points = sphere_model.sample_points(50, seed=3)
        values = wedge_eval(sphere_model.alpha, sphere_model.omega, points, sphere_model.frame(points))
        assert np.all(values > 0)

    def test_ellipsoid_metadata(self):
        """E(a, b) carries its two closed-form actions and Lk = ab"""
        model = build_levelset(LevelSetSpec.ellipsoid(1.0, 2.0))
        assert model.metadata["closed_form_actions"] == pytest.approx([1.0, 2.0])
        assert model.metadata["lk_exact"] == pytest.approx(2.0)

    def test_ellipsoid_capacities_positive(self):
        """Non-positive capacities are rejected"""
        with pytest.raises(ValueError, match="capacities must be positive"):
            LevelSetSpec.ellipsoid(-1.0, 2.0)

    @pytest.mark.parametrize("spec, axis_radii", [
        (LevelSetSpec.sphere(), [1.0, 1.0, 1.0, 1.0]),
        (LevelSetSpec.ellipsoid(1.0, 1.6180339887),
         [1 / np.sqrt(np.pi)] * 2 + [np.sqrt(1.6180339887 / np.pi)] * 2),
    ], ids=["sphere", "ellipsoid"])
    def test_catalog_levels_are_star_shaped(self, spec, axis_radii):
        """The crossing grid hits the sphere exactly on the level; that is still one crossing"""
        model = build_levelset(spec)
        model.check_star_shaped(seed=7)
        assert model.radius(np.eye(4)) == pytest.approx(axis_radii, rel=1e-12)

    def test_radius_solves_level(self, rng):
        hamiltonian = PolynomialHamiltonian((
            (0.5, (2, 0, 0, 0)), (0.5, (0, 2, 0, 0)), (0.5, (0, 0, 2, 0)), (0.5, (0, 0, 0, 2)),
            (0.25, (4, 0, 0, 0)), (0.25, (0, 0, 0, 4)),
        ))
        model = build_levelset(LevelSetSpec(hamiltonian, 1.0, name="quartic"))
        u = rng.normal(size=(200, 4))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        points = model.radius(u)[:, None] * u
        assert np.all(np.abs(hamiltonian.value(points) - 1.0) < 1e-12)

    def test_level_below_origin_value(self):
        """A level the origin does not sit inside is not star-shaped"""
        hamiltonian = PolynomialHamiltonian.sphere()
        with pytest.raises(ValueError, match="radial sampler requires star-shaped level"):
            build_levelset(LevelSetSpec(hamiltonian, -1.0, name="empty"))

    def test_non_star_shaped_level(self):
        """H = x1^2 - y1^2 + ... has rays that never reach the level"""
        hamiltonian = PolynomialHamiltonian((
            (1.0, (2, 0, 0, 0)), (-1.0, (0, 2, 0, 0)), (1.0, (0, 0, 2, 0)), (1.0, (0, 0, 0, 2)),
        ))
        with pytest.raises(ValueError, match="radial sampler requires star-shaped level"):
            build_levelset(LevelSetSpec(hamiltonian, 1.0, name="saddle"))

    def test_projection_restores_level(self, sphere_model):
        """Newton projection removes a small normal displacement"""
        points = sphere_model.sample_points(10, seed=4) * 1.001
        projected = sphere_model.project(points)
        assert np.all(sphere_model.constraint_drift(projected) < 1e-12)


class TestMagneticTorus:
    """Test the twisted flat torus"""

    def test_epsilon_positive(self):
        """ε must be positive"""
        with pytest.raises(ValueError, match="epsilon must be positive"):
            build_magnetic_torus(MagneticSpec(0.0))

    def test_linking_metadata(self):
        """Lk = -ε^2 (2π)^3 for an exact field"""
        model = build_magnetic_torus(MagneticSpec(0.1))
        assert model.metadata["lk_exact"] == pytest.approx(-0.01 * (2 * np.pi) ** 3)
        assert abs(model.metadata["flux"]) < 1e-9

    def test_invariants(self):
        """The magnetic structure passes the invariant checks"""
        model = build_magnetic_torus(MagneticSpec(0.05))
        assert check_model_invariants(model, n_points=200, n_comass=2000).passed

    def test_fourier_term_validation(self):
        """Potential terms need integer waves and a known kind"""
        with pytest.raises(ValueError, match="kind"):
            FourierTerm(1.0, 1, 0, "tan")
        with pytest.raises(ValueError, match="integers"):
            FourierTerm(1.0, 0.5, 0, "sin")

    def test_hamiltonian_parametrization(self):
        """X_H = -X on the magnetic torus"""
        model = build_magnetic_torus(MagneticSpec(0.2))
        points = model.sample_points(5, seed=0)
        assert np.allclose(model.field(points, "hamiltonian"), -model.field(points), atol=1e-15)

    def test_unknown_parametrization(self):
        with pytest.raises(ValueError, match="unknown parametrization"):
            build_t3_contact().field(np.zeros((1, 3)), "geodesic")

    def test_t3_has_no_hamiltonian_sign(self):
        with pytest.raises(ValueError, match="no Hamiltonian parametrization"):
            build_t3_contact().field(np.zeros((1, 3)), "hamiltonian")
