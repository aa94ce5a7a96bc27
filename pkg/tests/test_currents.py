"""
Tests for currents X⊗ν, their pairings and actions
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / "src"))

from dynamics.flow import integrate_characteristic
from dynamics.orbits import OrbitRecord
from ergodic.currents import (CURRENT_SIGN, MeasureSpec, boundary_bound, current_action, current_pairing,
                              pairing_estimate, random_exact_forms, structure_boundary_estimate,
                              structure_boundary_residual)
from forms.core import FormField
from invariants.linking import linking_number
from models import (LevelSetSpec, MagneticSpec, build_hyperbolic_utb, build_levelset, build_magnetic_torus,
                    build_t3_contact)

TWO_PI = 2 * np.pi

CATALOG = {
    "t3_contact": build_t3_contact,
    "sphere": lambda: build_levelset(LevelSetSpec.sphere()),
    "ellipsoid": lambda: build_levelset(LevelSetSpec.ellipsoid(1.0, 1.6180339887)),
    "magnetic_torus": lambda: build_magnetic_torus(MagneticSpec(0.05)),
    "hyperbolic_utb": lambda: build_hyperbolic_utb(0.5),
}


def hopf_circle() -> OrbitRecord:
    return OrbitRecord(base_point=np.array([1.0, 0.0, 0.0, 0.0]), period=TWO_PI,
                       action=np.pi, residual=0.0, contractible=True)


class TestMeasureSpec:
    """Test measure validation"""

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown measure kind"):
            MeasureSpec("counting")

    def test_empirical_needs_trajectory(self):
        with pytest.raises(ValueError, match="needs a trajectory"):
            MeasureSpec("empirical")

    def test_orbit_needs_record(self):
        with pytest.raises(ValueError, match="needs an orbit record"):
            MeasureSpec("orbit")

    def test_to_dict(self):
        data = MeasureSpec.volume(normalized=True, scheme="grid", resolution=8).to_dict()
        assert data == {"kind": "volume", "normalized": True, "scheme": "grid", "resolution": 8}


class TestCurrentPairing:
    """Test ⟨X⊗ν, β⟩"""

    def test_volume_pairing_with_closed_forms(self, t3_model):
        """∫ dx(X) μ = -∫ cos z μ = 0"""
        nu = MeasureSpec.volume(scheme="grid", resolution=8)
        for beta in t3_model.h1_basis:
            assert abs(current_pairing(t3_model, nu, beta)) < 1e-10

    def test_empirical_pairing(self, t3_model):
        """dx(X) = -cos z is constant along a T^3 trajectory"""
        trajectory = integrate_characteristic(t3_model, np.array([0.2, 0.4, 1.1]), 5.0, samples=64)
        dx = t3_model.h1_basis[0]
        value = current_pairing(t3_model, MeasureSpec.empirical(trajectory), dx)
        assert value == pytest.approx(-np.cos(1.1), abs=1e-12)

    def test_empirical_error_from_half_horizons(self, t3_model):
        """d(sin x)(X) = -cos t from the origin; the error is the half-horizon spread"""
        d_sin_x = FormField.function(
            3, lambda p: np.sin(p[:, 0]),
            gradient=lambda p: np.stack([np.cos(p[:, 0]), 0 * p[:, 0], 0 * p[:, 0]], axis=1),
        ).analytic_derivative
        trajectory = integrate_characteristic(t3_model, np.zeros(3), 5.0, samples=256)
        value, error = pairing_estimate(t3_model, MeasureSpec.empirical(trajectory), d_sin_x)
        assert value == pytest.approx(-np.sin(5.0) / 5.0, abs=1e-3)
        # halves average -sin(2.5)/2.5 and (sin 2.5 - sin 5)/2.5
        assert error == pytest.approx(0.5 * abs(np.sin(5.0) - 2 * np.sin(2.5)) / 2.5, abs=1e-3)
        assert error > trajectory.tol

    def test_orbit_pairing(self, sphere_model):
        """The normalized Hopf-circle measure pairs with λ to 1/2"""
        value = current_pairing(sphere_model, MeasureSpec.from_orbit(hopf_circle()), sphere_model.alpha)
        assert value == pytest.approx(0.5, rel=1e-9)

    def test_degree_checked(self, t3_model):
        with pytest.raises(ValueError, match="needs a 1-form"):
            current_pairing(t3_model, MeasureSpec.volume(scheme="grid", resolution=8), t3_model.omega)


class TestStructureBoundary:
    """Test structure_boundary_residual"""

    def test_volume_is_a_boundary(self, t3_model):
        nu = MeasureSpec.volume(scheme="grid", resolution=16)
        assert structure_boundary_residual(t3_model, nu) < 1e-6 * TWO_PI ** 3

    def test_orbit_measure_is_a_boundary(self, sphere_model):
        residual = structure_boundary_residual(sphere_model, MeasureSpec.from_orbit(hopf_circle()))
        assert residual < 1e-8

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_volume_is_a_boundary_on_catalog(self, name):
        model = CATALOG[name]()
        nu = MeasureSpec.volume(scheme="grid", resolution=16)
        residual, error = structure_boundary_estimate(model, nu)
        assert residual <= boundary_bound(current_action(model, nu).mass, error)
        assert structure_boundary_residual(model, nu) == residual

    def test_random_forms_are_exact(self, t3_model):
        """Random df are closed and reproducible"""
        first = random_exact_forms(t3_model, 3, seed=5)
        second = random_exact_forms(t3_model, 3, seed=5)
        points = t3_model.sample_points(10, seed=0)
        pair = np.random.default_rng(0).normal(size=(10, 2, 3))
        for a, b in zip(first, second):
            assert np.allclose(a.eval(points, pair[:, :1]), b.eval(points, pair[:, :1]))
            assert np.allclose(a.analytic_derivative.eval(points, pair), 0.0)


class TestCurrentAction:
    """Test A(X⊗ν) and its identity with Lk"""

    def test_t3_volume_action(self, t3_model):
        action = current_action(t3_model, MeasureSpec.volume(scheme="grid", resolution=16))
        assert action.value == pytest.approx(CURRENT_SIGN * -(TWO_PI ** 3), rel=1e-12)
        assert action.mass == pytest.approx(TWO_PI ** 3)
        assert action.primitive_independent

    def test_sphere_volume_action(self, sphere_model):
        action = current_action(sphere_model, MeasureSpec.volume(scheme="grid", resolution=16))
        assert action.value == pytest.approx(np.pi ** 2, rel=1e-8)
        assert action.to_dict()["kind"] == "volume"

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_identity_with_lk_on_catalog(self, name):
        """A(X⊗μ) = s·Lk with the same s on every model"""
        model = CATALOG[name]()
        link = linking_number(model, scheme="grid", resolution=16)
        action = current_action(model, MeasureSpec.volume(scheme="grid", resolution=16))
        bound = 3 * (action.error + link.error) + 1e-9 * abs(link.value)
        assert abs(action.value - CURRENT_SIGN * link.value) <= bound

    def test_orbit_action_is_normalized(self, sphere_model):
        """The orbit current carries action / period"""
        action = current_action(sphere_model, MeasureSpec.from_orbit(hopf_circle()))
        assert action.value == pytest.approx(np.pi / TWO_PI, rel=1e-9)
        assert action.mass == 1.0
        assert action.primitive_independent

    def test_normalized_volume(self, t3_model):
        nu = MeasureSpec.volume(normalized=True, scheme="grid", resolution=8)
        assert current_pairing(t3_model, nu, t3_model.alpha) == pytest.approx(-1.0, rel=1e-12)

    def test_custom_primitive_pairing(self, t3_model):
        """Pairing is linear in β"""
        nu = MeasureSpec.volume(scheme="grid", resolution=8)
        doubled = current_pairing(t3_model, nu, t3_model.alpha.scaled(2.0))
        single = current_pairing(t3_model, nu, t3_model.alpha)
        assert doubled == pytest.approx(2 * single)
        zero = FormField.zero(1, 3)
        assert current_pairing(t3_model, nu, zero) == 0.0
