"""
Tests for the integrator and characteristic flows
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / "src"))

from dynamics.flow import (characteristic_field, flow_jacobian_determinant, integrate_batch,
                           integrate_characteristic)
from dynamics.integrator import DOP853Stepper, IntegrationError
from models import MagneticSpec, build_magnetic_torus


def rotation(y):
    return np.stack([-y[:, 1], y[:, 0]], axis=1)


class TestDOP853Stepper:
    """Test the batched Runge-Kutta stepper"""

    def test_rotation_closes(self):
        """One turn of the harmonic oscillator returns to the start"""
        stepper = DOP853Stepper(rotation, rtol=1e-11)
        end = stepper.integrate(np.array([[1.0, 0.0], [0.0, 2.0]]), 2 * np.pi)
        assert np.allclose(end, [[1.0, 0.0], [0.0, 2.0]], atol=1e-8)

    def test_lands_on_stops(self):
        """Stop callbacks see the exact stop times"""
        seen = []
        stepper = DOP853Stepper(rotation, rtol=1e-10)
        stepper.integrate(np.array([[1.0, 0.0]]), 3.0, stops=[0.5, 1.0, 2.5],
                          on_stop=lambda i, t, y: seen.append((i, t, y[0, 0])))
        assert [s[1] for s in seen] == [0.5, 1.0, 2.5, 3.0]
        assert seen[1][2] == pytest.approx(np.cos(1.0), abs=1e-9)

    def test_backwards(self):
        stepper = DOP853Stepper(rotation, rtol=1e-10)
        end = stepper.integrate(np.array([[1.0, 0.0]]), -np.pi / 2)
        assert np.allclose(end, [[0.0, -1.0]], atol=1e-8)

    def test_blow_up_raises(self):
        """y' = y^2 leaves every step size behind at t = 1"""
        stepper = DOP853Stepper(lambda y: y * y, rtol=1e-8)
        with pytest.raises(IntegrationError, match="stiff segment|step budget"):
            stepper.integrate(np.array([[1.0]]), 2.0)

    def test_tolerance_positive(self):
        with pytest.raises(ValueError, match="tolerance must be positive"):
            DOP853Stepper(rotation, rtol=0.0)


class TestCharacteristicFlow:
    """Test integrate_characteristic on the catalog"""

    def test_t3_straight_lines(self, t3_model):
        """x(t) = x0 - t (cos z, sin z, 0)"""
        x0 = np.array([0.1, 0.2, 0.7])
        trajectory = integrate_characteristic(t3_model, x0, 5.0, tol=1e-10, samples=50)
        expected = x0 + 5.0 * np.array([-np.cos(0.7), -np.sin(0.7), 0.0])
        assert np.allclose(trajectory.endpoint, expected, atol=1e-8)
        assert np.all(np.diff(trajectory.times) > 0)
        assert len(trajectory.times) == 51

    def test_negative_time(self, t3_model):
        x0 = np.array([0.0, 0.0, 0.0])
        trajectory = integrate_characteristic(t3_model, x0, -2.0, samples=10)
        assert np.all(np.diff(trajectory.times) < 0)
        assert trajectory.endpoint == pytest.approx([2.0, 0.0, 0.0], abs=1e-8)

    def test_sphere_hopf_period(self, sphere_model):
        """Every characteristic of the round sphere closes after 2π"""
        x0 = sphere_model.sample_points(1, seed=5)[0]
        trajectory = integrate_characteristic(sphere_model, x0, 2 * np.pi, tol=1e-10)
        assert np.allclose(trajectory.endpoint, x0, atol=1e-7)
        assert trajectory.max_drift < 1e-9

    def test_magnetic_energy_conserved(self):
        model = build_magnetic_torus(MagneticSpec(0.3))
        trajectory = integrate_characteristic(model, np.array([0.5, 1.0, 2.0]), 30.0)
        assert trajectory.max_drift < 1e-12

    def test_zero_horizon(self, t3_model):
        with pytest.raises(ValueError, match="horizon must be non-zero"):
            integrate_characteristic(t3_model, np.zeros(3), 0.0)

    def test_frame_columns(self, t3_model):
        trajectory = integrate_characteristic(t3_model, np.zeros(3), 1.0, samples=4)
        frame = trajectory.to_frame(t3_model.coordinates)
        assert list(frame.columns) == ["t", "x", "y", "z", "drift"]
        assert len(frame) == 5

    def test_single_point_field(self, t3_model):
        X = characteristic_field(t3_model, np.array([0.0, 0.0, 0.0]))
        assert X.shape == (3,)
        assert X == pytest.approx([-1.0, 0.0, 0.0])

    def test_batch_accumulates_integrals(self, t3_model):
        """∫_0^T cos z dt = T cos z for every seed"""
        seeds = np.array([[0.0, 0.0, 0.3], [1.0, 2.0, 1.2]])
        flow = integrate_batch(t3_model, seeds, 4.0, stops=[1.0, 4.0],
                               observables={"cos z": lambda p: np.cos(p[:, 2])}, max_step=0.1)
        averages = flow.averages()["cos z"]
        assert np.allclose(averages, np.cos(seeds[:, 2])[None, :], atol=1e-12)


class TestFlowGeometry:
    """Test volume preservation, winding and the choice of volume form"""

    def test_t3_flow_preserves_volume(self, t3_model):
        points = t3_model.sample_points(5, seed=3)
        det = flow_jacobian_determinant(t3_model, points, 3.0)
        assert np.allclose(det, 1.0, atol=1e-6)

    def test_winding(self, t3_model):
        start = np.zeros(3)
        end = np.array([4 * np.pi, -2 * np.pi, 1e-3])
        assert t3_model.winding(start, end) == (2, -1, 0)
        assert t3_model.is_contractible(start, end) is False
        assert t3_model.is_contractible(start, start + 1e-9) is True

    def test_rescaled_volume_rescales_field(self, t3_model):
        """i_X(e^g μ) = ω gives X e^-g; the line field does not change"""
        g = lambda p: 0.3 * np.cos(p[:, 0])  # noqa: E731
        rescaled = t3_model.with_volume(g)
        points = t3_model.sample_points(20, seed=4)
        expected = t3_model.characteristic_field(points) * np.exp(-g(points))[:, None]
        assert np.allclose(rescaled.characteristic_field(points), expected, atol=1e-12)
        assert np.allclose(rescaled.solve_characteristic(points), expected, atol=1e-10)
