"""
Common structure of the model catalog
"""

import copy
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, asdict
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

try:
    from ..forms.core import (Chart, FormField, VolumeForm, exterior_derivative_eval,
                              frame_stack)
    from ..forms.quadrature import NodeBlock
    from ..config import Config
except ImportError:
    from forms.core import Chart, FormField, VolumeForm, exterior_derivative_eval, frame_stack
    from forms.quadrature import NodeBlock
    from config import Config

logger = logging.getLogger(__name__)

Observable = Callable[[np.ndarray], np.ndarray]

PARAMETRIZATIONS = ("characteristic", "hamiltonian")

# cyclic pairs (j, k) paired with the missing index i in i_X μ (e_j, e_k)
_CYCLIC_PAIRS = [(1, 2), (2, 0), (0, 1)]


@dataclass
class BasisFunction:
    """Smooth function on a model with its differential"""
    name: str
    value: Observable
    differential: FormField


@dataclass
class ModelCheck:
    """Outcome of the structure invariants on a model"""
    model: str
    exactness_residual: float
    min_comass: float
    h1_closed_residual: float
    volume_positive: bool

    @property
    def passed(self) -> bool:
        return (self.exactness_residual < 1e-8 and self.min_comass > 0
                and self.h1_closed_residual < 1e-8 and self.volume_positive)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        data = asdict(self)
        data["passed"] = self.passed
        return data


class HamiltonianStructureModel(ABC):
    """
    Closed 3-manifold with an exact nowhere-vanishing 2-form.

    Holds ω, a primitive α, a volume μ and closed 1-forms spanning H^1. Points
    are chart coordinates; tangent vectors are components in the chart's frame.
    Models are treated as immutable once built.
    """

    intrinsic_dim = 3
    supported_schemes = ("grid",)
    default_scheme = "grid"

    def __init__(self, name: str, chart: Chart, omega: FormField, alpha: FormField,
                 mu: VolumeForm, h1_basis: Sequence[FormField] = (),
                 metadata: Optional[Dict[str, Any]] = None,
                 field: Optional[Observable] = None,
                 hamiltonian_sign: Optional[int] = None):
        if omega.degree != 2 or alpha.degree != 1:
            raise ValueError("omega must be a 2-form and alpha a 1-form")
        self.name = name
        self.chart = chart
        self.omega = omega
        self.alpha = alpha
        self.mu = mu
        self.h1_basis = tuple(h1_basis)
        self.metadata = dict(metadata or {})
        self._field = field
        self.hamiltonian_sign = hamiltonian_sign
        logger.info(f"Built model {name}")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"

    @property
    def tangent_dim(self) -> int:
        return self.chart.tangent_dim

    @abstractmethod
    def frame(self, points: np.ndarray) -> np.ndarray:
        """Positively oriented tangent frames, shape (N, 3, tangent_dim)"""

    @abstractmethod
    def points_from_unit_cube(self, u: np.ndarray) -> np.ndarray:
        """Map parameters in [0, 1)^3 to model points"""

    @abstractmethod
    def quadrature_blocks(self, scheme: str, resolution: int, seed: int) -> List[NodeBlock]:
        """Lazily built node blocks for integrate_density"""

    @abstractmethod
    def function_basis(self, degree: int) -> List[BasisFunction]:
        """Truncated smooth function basis, used for exact forms df"""

    @abstractmethod
    def observables(self) -> Dict[str, Observable]:
        """Default observable battery for ergodicity diagnostics"""

    def default_resolution(self, scheme: str) -> int:
        return Config.GRID_RESOLUTION if scheme == "grid" else Config.MC_SAMPLES

    def sample_points(self, n: int, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self.points_from_unit_cube(rng.random((n, 3)))

    def project(self, points: np.ndarray, fixed: Optional[int] = None) -> np.ndarray:
        """Project back onto the constraint set (identity for intrinsic charts)"""
        return points

    def recenter(self, points: np.ndarray) -> np.ndarray:
        """Deck transformation keeping coordinates bounded during long runs"""
        return points

    def constraint_drift(self, points: np.ndarray) -> np.ndarray:
        return np.zeros(len(np.atleast_2d(points)))

    def constraint_residual(self, point: np.ndarray) -> np.ndarray:
        """Residual rows added to orbit refinement (empty for intrinsic charts)"""
        return np.zeros(0)

    def wrap(self, points: np.ndarray) -> np.ndarray:
        return points

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a - b

    def loop_features(self, points: np.ndarray) -> np.ndarray:
        """Embedding used to compare loops by Euclidean distance"""
        return points

    def is_contractible(self, start: np.ndarray, end_unwrapped: np.ndarray) -> Optional[bool]:
        return None

    def solve_characteristic(self, points: np.ndarray) -> np.ndarray:
        """
        X with i_X μ = ω, from the 3x3 system on the oriented frame.

        Row (j, k) of the system reads Σ_i c_i μ(e_i, e_j, e_k) = ω(e_j, e_k).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        frames = self.frame(pts)
        triples = [(i, j, k) for (j, k) in _CYCLIC_PAIRS for i in range(3)]
        system = self.mu.density(pts, frame_stack(frames, triples)).reshape(-1, 3, 3)
        rhs = self.omega.eval(pts, frame_stack(frames, _CYCLIC_PAIRS))
        scale = np.max(np.abs(system), axis=(1, 2))
        if np.any(np.abs(np.linalg.det(system)) <= 1e-14 * np.maximum(scale, 1e-300) ** 3):
            raise ValueError(f"singular characteristic solve on model {self.name} (model bug)")
        try:
            coeffs = np.linalg.solve(system, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as e:
            raise ValueError(f"singular characteristic solve on model {self.name}: {e}") from e
        return np.einsum("ni,nid->nd", coeffs, frames)

    def characteristic_field(self, points: np.ndarray) -> np.ndarray:
        """Characteristic field in tangent components (closed form when the model has one)"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self._field is not None:
            return self._field(pts)
        return self.solve_characteristic(pts)

    def field(self, points: np.ndarray, parametrization: str = "characteristic") -> np.ndarray:
        if parametrization not in PARAMETRIZATIONS:
            raise ValueError(
                f"unknown parametrization '{parametrization}'; expected one of {PARAMETRIZATIONS}"
            )
        X = self.characteristic_field(points)
        if parametrization == "characteristic":
            return X
        if self.hamiltonian_sign is None:
            raise ValueError(f"model {self.name} has no Hamiltonian parametrization")
        return self.hamiltonian_sign * X

    def velocity(self, points: np.ndarray, parametrization: str = "characteristic") -> np.ndarray:
        """Coordinate velocity of the flow at points"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.chart.velocity(pts, self.field(pts, parametrization))

    def action_density(self, points: np.ndarray, primitive: Optional[FormField] = None) -> np.ndarray:
        """α(X), the integrand of the action"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        X = self.characteristic_field(pts)
        return (primitive or self.alpha).eval(pts, X[:, None, :])

    def with_volume(self, log_density: Observable) -> "HamiltonianStructureModel":
        """Copy with μ replaced by e^g μ (the characteristic field rescales by e^-g)"""
        clone = copy.copy(self)
        clone.mu = self.mu.rescaled(log_density)
        if self._field is not None:
            base = self._field
            clone._field = lambda p: base(p) * np.exp(-log_density(p))[:, None]
        clone.name = f"{self.name}[e^g mu]"
        return clone

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            "name": self.name,
            "chart": self.chart.name,
            "h1_rank": len(self.h1_basis),
            "metadata": self.metadata,
        }


def random_unit_tangents(model: HamiltonianStructureModel, points: np.ndarray,
                         count: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit tangent vectors (N, count, tangent_dim) spanned by the frame"""
    frames = orthonormal_frames(model, points)
    coeffs = rng.normal(size=(len(points), count, 3))
    coeffs /= np.linalg.norm(coeffs, axis=-1, keepdims=True)
    return np.einsum("nci,nid->ncd", coeffs, frames)


def orthonormal_frames(model: HamiltonianStructureModel, points: np.ndarray) -> np.ndarray:
    frames = model.frame(points)
    q, _ = np.linalg.qr(np.swapaxes(frames, 1, 2))
    return np.swapaxes(q, 1, 2)


def check_model_invariants(model: HamiltonianStructureModel, n_points: int = 1000,
                           n_comass: int = 10000, seed: int = 0) -> ModelCheck:
    """
    Check exactness of ω, its non-vanishing and closedness of the H^1 basis

    Args:
        model: Model to check
        n_points: Random points for the derivative checks
        n_comass: Sample points for the comass minimum
        seed: Random seed

    Returns:
        ModelCheck with the residuals found
    """
    rng = np.random.default_rng(seed)
    points = model.sample_points(n_points, seed=seed)
    pairs = random_unit_tangents(model, points, 2, rng)

    d_alpha = exterior_derivative_eval(model.alpha, points, pairs, chart=model.chart, analytic=False)
    omega_values = model.omega.eval(points, pairs)
    exactness = float(np.max(np.abs(d_alpha - omega_values)) / max(1.0, np.max(np.abs(omega_values))))

    closed = 0.0
    for beta in model.h1_basis:
        d_beta = exterior_derivative_eval(beta, points, pairs, chart=model.chart, analytic=False)
        closed = max(closed, float(np.max(np.abs(d_beta))))

    comass_points = model.sample_points(n_comass, seed=seed + 1)
    ortho = orthonormal_frames(model, comass_points)
    components = model.omega.eval(comass_points, frame_stack(ortho, _CYCLIC_PAIRS))
    min_comass = float(np.min(np.linalg.norm(components, axis=1)))

    positive = model.mu.is_positive(comass_points, model.frame(comass_points))

    check = ModelCheck(model.name, exactness, min_comass, closed, positive)
    if check.passed:
        logger.info(f"Model {model.name} invariants pass: {check.to_dict()}")
    else:
        logger.warning(f"Model {model.name} invariants fail: {check.to_dict()}")
    return check
