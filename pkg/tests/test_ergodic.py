"""
Tests for Birkhoff averages and the unique-ergodicity diagnostic
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / "src"))

from ergodic.birkhoff import (CONSISTENT, INCONCLUSIVE, NOT_UNIQUELY_ERGODIC, UEThresholds,
                              birkhoff_average, space_average, ue_diagnostic, ue_verdict)
from models import build_hyperbolic_utb


class TestVerdict:
    """Test ue_verdict on hand-made curves"""

    def test_decaying_curve(self):
        assert ue_verdict([0.4, 0.15, 0.05]) == CONSISTENT

    def test_flat_large_curve(self):
        assert ue_verdict([0.5, 0.5, 0.5]) == NOT_UNIQUELY_ERGODIC

    def test_flat_small_curve(self):
        assert ue_verdict([0.05, 0.04, 0.04]) == INCONCLUSIVE

    def test_converged_curve(self):
        """Deviations at rounding level count as decayed"""
        assert ue_verdict([1e-3, 1e-10, 1e-11]) == CONSISTENT

    def test_custom_thresholds(self):
        curve = [0.3, 0.2, 0.15]
        assert ue_verdict(curve) == NOT_UNIQUELY_ERGODIC
        assert ue_verdict(curve, UEThresholds(fail_threshold=0.2, decay_factor=0.5)) == INCONCLUSIVE
        assert ue_verdict(curve, UEThresholds(fail_threshold=0.2, decay_factor=0.8)) == CONSISTENT


class TestAverages:
    """Test time and space averages"""

    def test_invariant_observable(self, t3_model):
        """z is constant along the T^3 flow"""
        x0 = np.array([0.3, 0.1, 0.9])
        value = birkhoff_average(t3_model, lambda p: np.cos(p[:, 2]), x0, 10.0)
        assert value == pytest.approx(np.cos(0.9), abs=1e-12)

    def test_moving_observable(self, t3_model):
        """(1/T)∫ cos(x0 - t cos z) dt in closed form"""
        x0 = np.array([0.3, 0.1, 0.9])
        T, c = 10.0, np.cos(0.9)
        exact = (np.sin(0.3) - np.sin(0.3 - c * T)) / (c * T)
        value = birkhoff_average(t3_model, lambda p: np.cos(p[:, 0]), x0, T)
        assert value == pytest.approx(exact, abs=1e-3)

    def test_negative_horizon(self, t3_model):
        with pytest.raises(ValueError, match="horizon must be positive"):
            birkhoff_average(t3_model, lambda p: p[:, 0], np.zeros(3), -1.0)

    def test_space_average(self, t3_model):
        assert space_average(t3_model, lambda p: np.cos(p[:, 2]) ** 2, scheme="grid",
                             resolution=16) == pytest.approx(0.5, abs=1e-12)
        assert abs(space_average(t3_model, lambda p: np.sin(p[:, 0]), scheme="grid", resolution=16)) < 1e-12


class TestDiagnostic:
    """Test ue_diagnostic"""

    def test_t3_invariant_tori(self, t3_model):
        """The T^3 flow preserves z, so time averages of cos z never approach 0"""
        report = ue_diagnostic(t3_model, seeds=8, horizons=(10.0, 20.0, 40.0), scheme="grid", resolution=16)
        assert report.verdict == NOT_UNIQUELY_ERGODIC
        assert report.curve.shape == (3,)
        assert report.to_dict()["note"] == "finite-time evidence, not a proof"

    def test_needs_eight_seeds(self, t3_model):
        with pytest.raises(ValueError, match="at least 8 seeds"):
            ue_diagnostic(t3_model, seeds=4)

    def test_needs_three_horizons(self, t3_model):
        with pytest.raises(ValueError, match="increasing positive horizons"):
            ue_diagnostic(t3_model, horizons=(10.0, 100.0))
        with pytest.raises(ValueError, match="increasing positive horizons"):
            ue_diagnostic(t3_model, horizons=(10.0, 5.0, 100.0))

    def test_needs_three_observables(self, t3_model):
        observables = {"x": lambda p: p[:, 0], "y": lambda p: p[:, 1]}
        with pytest.raises(ValueError, match="at least 3 observables"):
            ue_diagnostic(t3_model, observables=observables)

    @pytest.mark.extended
    def test_horocycle_flow_equidistributes(self):
        """At ε = 1 the deviation curve decreases with the horizon"""
        report = ue_diagnostic(build_hyperbolic_utb(1.0), seeds=8, horizons=(1e2, 1e3, 1e4))
        assert np.all(np.diff(report.curve) < 0)
