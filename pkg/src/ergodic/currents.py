"""
Structure currents X⊗ν: pairings with 1-forms, the boundary test and the action
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

try:
    from ..dynamics.flow import Trajectory
    from ..dynamics.orbits import OrbitRecord, sample_loop
    from ..forms.core import FormField
    from ..forms.quadrature import integrate_density
    from ..config import Config
except ImportError:
    from dynamics.flow import Trajectory
    from dynamics.orbits import OrbitRecord, sample_loop
    from forms.core import FormField
    from forms.quadrature import integrate_density
    from config import Config

logger = logging.getLogger(__name__)

MEASURE_KINDS = ("volume", "empirical", "orbit")
# A(X⊗μ) = s·Lk; α∧ω = α(X) μ whenever i_X μ = ω
CURRENT_SIGN = 1
RANDOM_EXACT_FORMS = 10
LOOP_SAMPLES = 512


@dataclass
class MeasureSpec:
    """
    Invariant measure ν paired with X.

    volume: μ itself (mass vol M) or μ / vol M when normalized;
    empirical: time average along a trajectory (probability);
    orbit: normalized loop measure of a closed orbit (probability).
    """
    kind: str
    trajectory: Optional[Trajectory] = None
    orbit: Optional[OrbitRecord] = None
    normalized: bool = False
    scheme: Optional[str] = None
    resolution: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ValueError(f"unknown measure kind '{self.kind}'; expected one of {MEASURE_KINDS}")
        if self.kind == "empirical" and self.trajectory is None:
            raise ValueError("empirical measure needs a trajectory")
        if self.kind == "orbit" and self.orbit is None:
            raise ValueError("orbit measure needs an orbit record")

    @classmethod
    def volume(cls, normalized: bool = False, scheme: Optional[str] = None,
               resolution: Optional[int] = None, seed: int = 0) -> "MeasureSpec":
        return cls("volume", normalized=normalized, scheme=scheme, resolution=resolution, seed=seed)

    @classmethod
    def empirical(cls, trajectory: Trajectory) -> "MeasureSpec":
        return cls("empirical", trajectory=trajectory)

    @classmethod
    def from_orbit(cls, orbit: OrbitRecord) -> "MeasureSpec":
        return cls("orbit", orbit=orbit)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        data: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "volume":
            data.update({"normalized": self.normalized, "scheme": self.scheme,
                         "resolution": self.resolution})
        elif self.kind == "orbit":
            data.update({"period": float(self.orbit.period), "action": float(self.orbit.action)})
        else:
            data.update({"t_end": float(self.trajectory.times[-1])})
        return data


@dataclass
class CurrentAction:
    """A(X⊗ν) with a shifted-primitive recomputation"""
    value: float
    error: float
    shifted_value: float
    kind: str
    mass: float
    sign_convention: int = CURRENT_SIGN

    @property
    def primitive_independent(self) -> bool:
        return abs(self.value - self.shifted_value) <= max(1e-8 * abs(self.value), 3 * self.error, 1e-12)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            "value": self.value,
            "error": self.error,
            "shifted_value": self.shifted_value,
            "primitive_independent": self.primitive_independent,
            "kind": self.kind,
            "mass": self.mass,
            "sign_convention": self.sign_convention,
        }


def _pairing_density(model, beta: FormField):
    def density(points: np.ndarray, frames: np.ndarray) -> np.ndarray:
        X = model.characteristic_field(points)
        return beta.eval(points, X[:, None, :]) * model.mu.density(points, frames)
    return density


def _time_average(times: np.ndarray, values: np.ndarray) -> float:
    span = float(times[-1] - times[0])
    if len(values) == 1 or span == 0:
        return float(values[0])
    return float(trapezoid(values, times) / span)


def empirical_estimate(trajectory: Trajectory, values: np.ndarray) -> Tuple[float, float]:
    """
    Time average of sampled values with an O(1/T) error: half the gap between the
    averages over the two halves of the horizon, never below the integrator tolerance.
    """
    # elapsed time is increasing for backward runs too
    times = np.abs(trajectory.times - trajectory.times[0])
    mean = _time_average(times, values)
    half = int(np.searchsorted(times, 0.5 * times[-1], side="right"))
    if half < 2 or len(values) - half < 1:
        return mean, trajectory.tol
    first = _time_average(times[:half], values[:half])
    second = _time_average(times[half - 1:], values[half - 1:])
    return mean, max(0.5 * abs(first - second), trajectory.tol)


def _orbit_points(model, orbit: OrbitRecord) -> np.ndarray:
    return sample_loop(model, orbit.base_point, orbit.period, LOOP_SAMPLES,
                       Config.INTEGRATOR_TOL, orbit.parametrization)


def pairing_estimate(model, nu: MeasureSpec, beta: FormField,
                     _cache: Optional[Dict[str, Any]] = None) -> Tuple[float, float]:
    """⟨X⊗ν, β⟩ with its error estimate"""
    if beta.degree != 1:
        raise ValueError(f"current pairing needs a 1-form, got degree {beta.degree}")
    if nu.kind == "volume":
        scheme = nu.scheme or ("grid" if "grid" in model.supported_schemes else None)
        estimate = integrate_density(model, _pairing_density(model, beta), scheme=scheme,
                                     resolution=nu.resolution, seed=nu.seed)
        if not nu.normalized:
            return estimate.value, estimate.error
        volume = integrate_density(model, model.mu.density, scheme=scheme,
                                   resolution=nu.resolution, seed=nu.seed)
        return estimate.value / volume.value, estimate.error / abs(volume.value)

    if nu.kind == "empirical":
        points = nu.trajectory.points
        X = model.characteristic_field(points)
        return empirical_estimate(nu.trajectory, beta.eval(points, X[:, None, :]))

    cache = _cache if _cache is not None else {}
    points = cache.get("loop")
    if points is None:
        points = cache["loop"] = _orbit_points(model, nu.orbit)
    X = model.characteristic_field(points)
    return float(np.mean(beta.eval(points, X[:, None, :]))), float(nu.orbit.residual)


def current_pairing(model, nu: MeasureSpec, beta: FormField) -> float:
    """
    ⟨X⊗ν, β⟩ = ∫ β(X) dν.

    volume: quadrature of β(X) μ; empirical: trajectory time average of β(X);
    orbit: loop average of β(X) (the orbit measure is normalized by the period).
    """
    return pairing_estimate(model, nu, beta)[0]


def random_exact_forms(model, count: int = RANDOM_EXACT_FORMS, seed: int = 0,
                       degree: int = 3) -> List[FormField]:
    """df for random unit combinations f of the model's function basis"""
    basis = model.function_basis(degree)
    rng = np.random.default_rng(seed)
    forms = []
    for k in range(count):
        weights = rng.normal(size=len(basis))
        weights /= np.linalg.norm(weights)
        form = None
        for w, fn in zip(weights, basis):
            term = fn.differential.scaled(float(w))
            form = term if form is None else form + term
        form.name = f"df[{k}]"
        forms.append(form)
    return forms


def structure_boundary_estimate(model, nu: MeasureSpec, exact_count: int = RANDOM_EXACT_FORMS,
                                seed: int = 0) -> Tuple[float, float]:
    """
    max |⟨X⊗ν, β⟩| over the closed forms of the H^1 basis and random exact df,
    with the largest error estimate among those pairings.
    """
    cache: Dict[str, Any] = {}
    residual, error = 0.0, 0.0
    for beta in list(model.h1_basis) + random_exact_forms(model, exact_count, seed):
        value, value_error = pairing_estimate(model, nu, beta, cache)
        residual = max(residual, abs(value))
        error = max(error, value_error)
    logger.info(f"{model.name}: structure boundary residual ({nu.kind}) {residual:.3g} +/- {error:.3g}")
    return residual, error


def structure_boundary_residual(model, nu: MeasureSpec, exact_count: int = RANDOM_EXACT_FORMS,
                                seed: int = 0) -> float:
    """
    max |⟨X⊗ν, β⟩| over the closed forms of the H^1 basis and random exact df.

    Near zero certifies ν as a numerical structure boundary.
    """
    return structure_boundary_estimate(model, nu, exact_count, seed)[0]


def boundary_bound(mass: float, error: float, relative: float = 1e-6) -> float:
    """Largest residual still read as zero: relative to the mass, or three error bars"""
    return max(relative * abs(mass), 3.0 * error)


def current_action(model, nu: MeasureSpec, seed: int = 0) -> CurrentAction:
    """A(X⊗ν) = ⟨X⊗ν, α⟩, recomputed with α + df for a random basis f"""
    cache: Dict[str, Any] = {}
    value, error = pairing_estimate(model, nu, model.alpha, cache)
    shift = random_exact_forms(model, 1, seed=seed + 101)[0]
    shifted, shifted_error = pairing_estimate(model, nu, model.alpha + shift, cache)

    if nu.kind == "volume" and not nu.normalized:
        scheme = nu.scheme or ("grid" if "grid" in model.supported_schemes else None)
        mass = integrate_density(model, model.mu.density, scheme=scheme,
                                 resolution=nu.resolution, seed=nu.seed).value
    else:
        mass = 1.0
    result = CurrentAction(value, max(error, shifted_error), shifted, nu.kind, mass)
    if not result.primitive_independent:
        logger.warning(f"{model.name}: current action changes under α -> α + df "
                       f"({value:.10g} vs {shifted:.10g})")
    return result
