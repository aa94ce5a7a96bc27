"""
Time averages, space averages and the unique-ergodicity diagnostic
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

try:
    from ..config import Config
    from ..dynamics.flow import integrate_batch
    from ..forms.quadrature import gather_nodes, integrate_density
except ImportError:
    from config import Config
    from dynamics.flow import integrate_batch
    from forms.quadrature import gather_nodes, integrate_density

logger = logging.getLogger(__name__)

Observable = Callable[[np.ndarray], np.ndarray]

CONSISTENT = "consistent_with_unique_ergodicity"
NOT_UNIQUELY_ERGODIC = "not_uniquely_ergodic_evidence"
INCONCLUSIVE = "inconclusive"

BIRKHOFF_MAX_STEP = 0.1
# deviations below this are treated as already converged
DEVIATION_FLOOR = 1e-9


@dataclass(frozen=True)
class UEThresholds:
    """Verdict thresholds, in units of each observable's range"""
    fail_threshold: float = Config.UE_FAIL_THRESHOLD
    decay_factor: float = Config.UE_DECAY_FACTOR

    def to_dict(self) -> Dict[str, float]:
        """Convert to dictionary"""
        return {"fail_threshold": self.fail_threshold, "decay_factor": self.decay_factor}


@dataclass
class DiagnosticReport:
    """Deviation matrix (observable, seed, horizon) with the verdict it implies"""
    model: str
    observables: List[str]
    horizons: List[float]
    deviations: np.ndarray
    space_averages: Dict[str, float]
    thresholds: UEThresholds
    verdict: str
    parametrization: str = "characteristic"
    note: str = "finite-time evidence, not a proof"
    seed_points: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def curve(self) -> np.ndarray:
        """Max deviation over observables and seeds at each horizon"""
        return np.max(self.deviations, axis=(0, 1))

    def worst_observable(self) -> str:
        return self.observables[int(np.argmax(np.max(self.deviations[:, :, -1], axis=1)))]

    def recompute_verdict(self) -> str:
        return ue_verdict(self.curve, self.thresholds)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            "model": self.model,
            "observables": list(self.observables),
            "horizons": [float(h) for h in self.horizons],
            "max_deviation": [float(v) for v in self.curve],
            "deviations": np.round(self.deviations, 12).tolist(),
            "space_averages": {k: float(v) for k, v in self.space_averages.items()},
            "thresholds": self.thresholds.to_dict(),
            "verdict": self.verdict,
            "worst_observable": self.worst_observable(),
            "parametrization": self.parametrization,
            "note": self.note,
        }


def ue_verdict(curve: Sequence[float], thresholds: Optional[UEThresholds] = None) -> str:
    """
    Verdict from the max-deviation curve over increasing horizons.

    consistent: every successive horizon shrinks the deviation by decay_factor.
    not uniquely ergodic: no such decay and the final deviation exceeds fail_threshold.
    """
    thresholds = thresholds or UEThresholds()
    values = np.asarray(curve, dtype=float)
    decaying = all(
        later <= thresholds.decay_factor * earlier or later <= DEVIATION_FLOOR
        for earlier, later in zip(values[:-1], values[1:])
    )
    if decaying:
        return CONSISTENT
    if values[-1] > thresholds.fail_threshold:
        return NOT_UNIQUELY_ERGODIC
    return INCONCLUSIVE


def birkhoff_average(model, f: Observable, x0: np.ndarray, T: float,
                     parametrization: str = "characteristic", tol: Optional[float] = None,
                     max_step: float = BIRKHOFF_MAX_STEP) -> float:
    """(1/T) ∫_0^T f(x(t)) dt, trapezoid over the integrator's accepted steps"""
    if T <= 0:
        raise ValueError("horizon must be positive")
    flow = integrate_batch(model, np.atleast_2d(x0), T, tol=tol, parametrization=parametrization,
                           observables={"f": f}, max_step=max_step)
    return float(flow.averages()["f"][-1, 0])


def space_average(model, f: Observable, scheme: Optional[str] = None,
                  resolution: Optional[int] = None, seed: int = 0) -> float:
    """∫ f dμ / ∫ dμ"""
    numerator = integrate_density(model, lambda p, fr: f(p) * model.mu.density(p, fr),
                                  scheme=scheme, resolution=resolution, seed=seed)
    volume = integrate_density(model, model.mu.density, scheme=scheme, resolution=resolution, seed=seed)
    return numerator.value / volume.value


def _space_statistics(model, observables: Mapping[str, Observable], scheme: Optional[str],
                      resolution: Optional[int], seed: int):
    """Space averages and value ranges from one set of quadrature nodes"""
    scheme = scheme or model.default_scheme
    resolution = int(resolution or model.default_resolution(scheme))
    nodes = gather_nodes(model, scheme, resolution, seed)
    weights = nodes.weights * model.mu.density(nodes.points, nodes.frames)
    averages, ranges = {}, {}
    for name, f in observables.items():
        values = np.asarray(f(nodes.points), dtype=float)
        averages[name] = float(np.sum(weights * values) / np.sum(weights))
        spread = float(np.max(values) - np.min(values))
        ranges[name] = spread if spread > 1e-12 else 1.0
    return averages, ranges


def ue_diagnostic(model, observables: Optional[Mapping[str, Observable]] = None,
                  seeds: Union[int, np.ndarray] = 8, horizons: Sequence[float] = (1e2, 1e3, 1e4),
                  thresholds: Optional[UEThresholds] = None, seed: int = 0,
                  parametrization: str = "characteristic", tol: Optional[float] = None,
                  scheme: Optional[str] = None, resolution: Optional[int] = None,
                  max_step: float = BIRKHOFF_MAX_STEP) -> DiagnosticReport:
    """
    Birkhoff deviations |time average - space average| / range over seeds and horizons.

    One batched run per seed set serves all horizons.

    Args:
        model: HamiltonianStructureModel
        observables: name -> function (model battery when None)
        seeds: Seed count or explicit seed points
        horizons: Increasing horizons
        thresholds: Verdict thresholds
        seed: RNG seed for seed points
        parametrization: Flow parametrization
        tol: Integrator tolerance
        scheme, resolution: Quadrature for the space averages

    Returns:
        DiagnosticReport
    """
    observables = dict(observables or model.observables())
    points = (model.sample_points(seeds, seed=seed) if isinstance(seeds, (int, np.integer))
              else np.atleast_2d(np.asarray(seeds, dtype=float)))
    horizons = [float(h) for h in horizons]
    if len(observables) < 3:
        raise ValueError("ue_diagnostic needs at least 3 observables")
    if len(points) < 8:
        raise ValueError("ue_diagnostic needs at least 8 seeds")
    if len(horizons) < 3 or any(b <= a for a, b in zip(horizons[:-1], horizons[1:])) or horizons[0] <= 0:
        raise ValueError("ue_diagnostic needs at least 3 increasing positive horizons")
    thresholds = thresholds or UEThresholds()

    averages, ranges = _space_statistics(model, observables, scheme, resolution, seed)
    flow = integrate_batch(model, points, horizons[-1], tol=tol, parametrization=parametrization,
                           stops=horizons, observables=observables, max_step=max_step)
    time_averages = flow.averages()

    names = list(observables)
    deviations = np.empty((len(names), len(points), len(horizons)))
    for i, name in enumerate(names):
        deviations[i] = (np.abs(time_averages[name] - averages[name]) / ranges[name]).T

    curve = np.max(deviations, axis=(0, 1))
    verdict = ue_verdict(curve, thresholds)
    logger.info(f"{model.name}: max deviation {np.round(curve, 4).tolist()} -> {verdict}")
    return DiagnosticReport(model.name, names, horizons, deviations, averages, thresholds, verdict,
                            parametrization=parametrization, seed_points=points)
