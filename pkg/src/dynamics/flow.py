"""
Characteristic flow of a model: single trajectories and batched runs with accumulators
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

try:
    from ..config import Config
    from ..forms.core import sl2_components
except ImportError:
    from config import Config
    from forms.core import sl2_components

from .integrator import DOP853Stepper, IntegrationError, StepStats

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 256


@dataclass
class Trajectory:
    """Sampled integral curve of the characteristic foliation"""
    model_name: str
    times: np.ndarray
    points: np.ndarray
    drift: np.ndarray
    parametrization: str
    tol: float
    stats: StepStats = field(default_factory=StepStats)

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]

    @property
    def max_drift(self) -> float:
        return float(np.max(self.drift)) if len(self.drift) else 0.0

    def to_frame(self, coordinates: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """Table with columns t, chart coordinates, drift"""
        names = list(coordinates or [f"x{i}" for i in range(self.points.shape[1])])
        frame = pd.DataFrame(self.points, columns=names)
        frame.insert(0, "t", self.times)
        frame["drift"] = self.drift
        return frame

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary (summary only)"""
        return {
            "model": self.model_name,
            "parametrization": self.parametrization,
            "samples": int(len(self.times)),
            "t_end": float(self.times[-1]),
            "tol": self.tol,
            "max_drift": self.max_drift,
            "stats": self.stats.to_dict(),
        }


@dataclass
class BatchFlow:
    """
    Result of integrating many seeds together.

    integrals[name][i, j] is ∫_0^{stops[i]} f(x_j(t)) dt (trapezoid over accepted steps).
    """
    stops: np.ndarray
    integrals: Dict[str, np.ndarray]
    final: np.ndarray
    stats: StepStats
    max_drift: float
    points: Optional[np.ndarray] = None

    def averages(self) -> Dict[str, np.ndarray]:
        """Time averages (1/T) ∫_0^T f dt at every stop"""
        return {name: values / self.stops[:, None] for name, values in self.integrals.items()}


def characteristic_field(model, p: np.ndarray) -> np.ndarray:
    """
    X(p) with i_X μ = ω, in the model's tangent components.

    Accepts one point or a stack of points; a single point gives a single vector.
    """
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    X = model.characteristic_field(np.atleast_2d(pts))
    if np.any(np.linalg.norm(X, axis=1) == 0):
        raise ValueError(f"characteristic field vanishes on model {model.name} (model bug)")
    return X[0] if single else X


def _stepper(model, tol: float, parametrization: str, recenter: bool,
             max_step: float = np.inf) -> DOP853Stepper:
    def project(y: np.ndarray) -> np.ndarray:
        y = model.project(y)
        return model.recenter(y) if recenter else y

    return DOP853Stepper(lambda y: model.velocity(y, parametrization), rtol=tol,
                         project=project, max_step=max_step)


def integrate_characteristic(model, x0: np.ndarray, T: float, tol: Optional[float] = None,
                             parametrization: str = "characteristic",
                             samples: int = DEFAULT_SAMPLES) -> Trajectory:
    """
    Integrate one seed of the characteristic flow.

    Args:
        model: HamiltonianStructureModel
        x0: Start point
        T: Horizon (negative integrates backwards)
        tol: Relative and absolute tolerance (defaults to CHARFLOW_TOL)
        parametrization: "characteristic" or "hamiltonian"
        samples: Number of uniformly spaced output samples after t = 0

    Returns:
        Trajectory with strictly monotone sample times

    Raises:
        IntegrationError: "stiff segment at t=..." on step-size underflow
    """
    tol = Config.INTEGRATOR_TOL if tol is None else tol
    if T == 0 or tol <= 0:
        raise ValueError("horizon must be non-zero and tolerance positive")
    model.field(np.atleast_2d(x0), parametrization)  # validates the parametrization early

    start = model.project(np.atleast_2d(np.asarray(x0, dtype=float)))
    times = np.linspace(0.0, T, samples + 1)
    points = np.empty((samples + 1, start.shape[1]))
    points[0] = start[0]

    def record(index: int, t: float, y: np.ndarray) -> None:
        points[index + 1] = y[0]

    stepper = _stepper(model, tol, parametrization, recenter=False)
    stepper.integrate(start, T, stops=times[1:], on_stop=record)
    drift = model.constraint_drift(points)
    bound = tol * (1.0 + abs(T))
    if np.max(drift) > bound:
        logger.warning(f"{model.name}: constraint drift {np.max(drift):.3g} above {bound:.3g}")
    return Trajectory(model.name, times, points, drift, parametrization, tol, stepper.stats)


def integrate_batch(model, x0s: np.ndarray, T: float, tol: Optional[float] = None,
                    parametrization: str = "characteristic",
                    stops: Optional[Sequence[float]] = None,
                    observables: Optional[Mapping[str, Any]] = None,
                    recenter: bool = True, record_points: bool = False,
                    max_step: float = np.inf) -> BatchFlow:
    """
    Integrate every seed on a shared time grid, accumulating observable integrals.

    Args:
        model: HamiltonianStructureModel
        x0s: Seeds, shape (N, d)
        T: Horizon
        tol: Integrator tolerance
        parametrization: "characteristic" or "hamiltonian"
        stops: Horizons at which integrals (and optionally points) are recorded
        observables: name -> function of points
        recenter: Apply the model's deck recentering after each step
        record_points: Keep the states at every stop
        max_step: Step cap (keeps the trapezoid accumulation accurate)

    Returns:
        BatchFlow
    """
    tol = Config.INTEGRATOR_TOL if tol is None else tol
    if T <= 0:
        raise ValueError("horizon must be positive")
    seeds = model.project(np.atleast_2d(np.asarray(x0s, dtype=float)))
    stop_times = np.asarray(stops if stops is not None else [T], dtype=float)
    if np.any(np.diff(stop_times) <= 0) or stop_times[0] <= 0 or stop_times[-1] > T:
        raise ValueError("stops must be increasing within (0, T]")
    observables = dict(observables or {})

    running = {name: np.zeros(len(seeds)) for name in observables}
    integrals = {name: np.zeros((len(stop_times), len(seeds))) for name in observables}
    recorded = np.empty((len(stop_times),) + seeds.shape) if record_points else None
    state = {"t": 0.0, "values": {name: np.asarray(f(seeds), dtype=float) for name, f in observables.items()},
             "drift": float(np.max(model.constraint_drift(seeds)))}

    def on_step(t: float, y: np.ndarray) -> None:
        dt = t - state["t"]
        for name, f in observables.items():
            value = np.asarray(f(y), dtype=float)
            running[name] += 0.5 * dt * (state["values"][name] + value)
            state["values"][name] = value
        state["t"] = t
        state["drift"] = max(state["drift"], float(np.max(model.constraint_drift(y))))

    def on_stop(index: int, t: float, y: np.ndarray) -> None:
        for name in observables:
            integrals[name][index] = running[name]
        if recorded is not None:
            recorded[index] = y

    stepper = _stepper(model, tol, parametrization, recenter, max_step=max_step)
    final = stepper.integrate(seeds, float(stop_times[-1]), stops=stop_times,
                              on_stop=on_stop, on_step=on_step)
    logger.debug(f"{model.name}: batch of {len(seeds)} to T={stop_times[-1]:g}, {stepper.stats.to_dict()}")
    return BatchFlow(stop_times, integrals, final, stepper.stats, state["drift"], recorded)


def _tangent_difference(model, base: np.ndarray, plus: np.ndarray, minus: np.ndarray,
                        h: float) -> np.ndarray:
    """Central difference of flowed points as tangent components at base"""
    if model.chart.name == "group":
        g = base.reshape(-1, 2, 2)
        delta = (plus - minus).reshape(-1, 2, 2) / (2 * h)
        return sl2_components(np.linalg.solve(g, delta))
    return model.displacement(plus, minus) / (2 * h)


def flow_jacobian_determinant(model, points: np.ndarray, T: float, tol: Optional[float] = None,
                              h: float = 1e-5) -> np.ndarray:
    """
    det(dφ_T) measured in μ: det of the flow derivative in the model frames,
    times μ(frame at φ_T(p)) / μ(frame at p). Equals 1 for a μ-preserving flow.
    """
    tol = Config.INTEGRATOR_TOL if tol is None else tol
    p = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(p)
    frames = model.frame(p)
    shifted: List[np.ndarray] = [p]
    for i in range(3):
        shifted.append(model.project(model.chart.shift(p, frames[:, i], h)))
        shifted.append(model.project(model.chart.shift(p, frames[:, i], -h)))
    stepper = _stepper(model, tol, "characteristic", recenter=False)
    flowed = stepper.integrate(np.concatenate(shifted), T)
    q = flowed[:n]
    frames_q = model.frame(q)

    columns = []
    for i in range(3):
        v = _tangent_difference(model, q, flowed[(2 * i + 1) * n:(2 * i + 2) * n],
                                flowed[(2 * i + 2) * n:(2 * i + 3) * n], h)
        # coefficients of v in the frame at q (normal equations)
        gram = np.einsum("nid,njd->nij", frames_q, frames_q)
        rhs = np.einsum("nid,nd->ni", frames_q, v)
        columns.append(np.linalg.solve(gram, rhs[..., None])[..., 0])
    jacobian = np.stack(columns, axis=2)
    ratio = model.mu.density(q, frames_q) / model.mu.density(p, frames)
    return np.linalg.det(jacobian) * ratio


__all__ = [
    "BatchFlow",
    "IntegrationError",
    "Trajectory",
    "characteristic_field",
    "flow_jacobian_determinant",
    "integrate_batch",
    "integrate_characteristic",
]
