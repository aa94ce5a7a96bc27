"""
Periodic-box models: the T^3 contact reference and the magnetic flat torus
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

try:
    from ..forms.core import BoxChart, FormField, VolumeForm
    from ..forms.quadrature import QuadratureNodes, stratified_unit_cube
except ImportError:
    from forms.core import BoxChart, FormField, VolumeForm
    from forms.quadrature import QuadratureNodes, stratified_unit_cube

from .base import BasisFunction, HamiltonianStructureModel, Observable

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def trig_modes(degree: int) -> List[Tuple[int, int, int]]:
    """Wave vectors with 1 <= |k|_1 <= degree, one per ±k pair"""
    modes = []
    for k in itertools.product(range(-degree, degree + 1), repeat=3):
        if not 1 <= sum(abs(c) for c in k) <= degree:
            continue
        leading = next(c for c in k if c != 0)
        if leading > 0:
            modes.append(k)
    return modes


def _trig_function(k: Tuple[int, int, int], kind: str, names: Sequence[str]) -> BasisFunction:
    wave = np.asarray(k, dtype=float)
    label = "+".join(f"{c}{n}" for c, n in zip(k, names) if c)

    if kind == "cos":
        value = lambda p: np.cos(p @ wave)  # noqa: E731
        gradient = lambda p: -np.sin(p @ wave)[:, None] * wave  # noqa: E731
    else:
        value = lambda p: np.sin(p @ wave)  # noqa: E731
        gradient = lambda p: np.cos(p @ wave)[:, None] * wave  # noqa: E731

    differential = FormField(1, 3, gradient, analytic_derivative=lambda: FormField.zero(2, 3),
                             name=f"d{kind}({label})")
    return BasisFunction(name=f"{kind}({label})", value=value, differential=differential)


class PeriodicBoxModel(HamiltonianStructureModel):
    """Model on the box [0, 2π)^3 with periodic identifications"""

    supported_schemes = ("grid", "monte_carlo")

    def __init__(self, name: str, omega: FormField, alpha: FormField,
                 coordinates: Sequence[str] = ("x", "y", "z"), mu: Optional[VolumeForm] = None,
                 **kwargs):
        mu = mu or VolumeForm(FormField.constant(3, 3, [1.0], name="dx^dy^dz"))
        h1 = [FormField.coordinate(3, i, name=f"d{c}") for i, c in enumerate(coordinates)]
        super().__init__(name, BoxChart([TWO_PI] * 3), omega, alpha, mu, h1_basis=h1, **kwargs)
        self.coordinates = tuple(coordinates)

    def frame(self, points: np.ndarray) -> np.ndarray:
        n = len(np.atleast_2d(points))
        return np.broadcast_to(np.eye(3), (n, 3, 3)).copy()

    def points_from_unit_cube(self, u: np.ndarray) -> np.ndarray:
        return TWO_PI * np.asarray(u, dtype=float)

    def wrap(self, points: np.ndarray) -> np.ndarray:
        return self.chart.wrap(points)

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = np.asarray(a) - np.asarray(b)
        return d - TWO_PI * np.round(d / TWO_PI)

    def winding(self, start: np.ndarray, end_unwrapped: np.ndarray) -> Tuple[int, ...]:
        turns = np.round((np.asarray(end_unwrapped) - np.asarray(start)) / TWO_PI)
        return tuple(int(t) for t in turns)

    def is_contractible(self, start: np.ndarray, end_unwrapped: np.ndarray) -> Optional[bool]:
        return all(t == 0 for t in self.winding(start, end_unwrapped))

    def loop_features(self, points: np.ndarray) -> np.ndarray:
        return np.concatenate([np.cos(points), np.sin(points)], axis=-1)

    def quadrature_blocks(self, scheme: str, resolution: int, seed: int):
        if scheme == "grid":
            return self._grid_blocks(resolution)
        return self._monte_carlo_blocks(resolution, seed)

    def _grid_blocks(self, n: int):
        axis = TWO_PI * np.arange(n) / n
        weight = (TWO_PI / n) ** 3
        slabs = np.array_split(np.arange(n), min(n, 8))

        def build(rows: np.ndarray) -> QuadratureNodes:
            grid = np.stack(np.meshgrid(axis[rows], axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
            return QuadratureNodes(grid, self.frame(grid), np.full(len(grid), weight))

        return [lambda rows=rows: build(rows) for rows in slabs]

    def _monte_carlo_blocks(self, samples: int, seed: int):
        volume = TWO_PI ** 3

        def build(block) -> QuadratureNodes:
            ids, u, weights = block
            points = self.points_from_unit_cube(u)
            return QuadratureNodes(points, self.frame(points), volume * weights, strata=ids)

        return [lambda block=block: build(block) for block in stratified_unit_cube(samples, seed)]

    def function_basis(self, degree: int) -> List[BasisFunction]:
        basis = []
        for k in trig_modes(degree):
            basis.append(_trig_function(k, "cos", self.coordinates))
            basis.append(_trig_function(k, "sin", self.coordinates))
        return basis

    def observables(self) -> Dict[str, Observable]:
        battery: Dict[str, Observable] = {"alpha(X)": self.action_density}
        for beta in self.h1_basis:
            battery[f"{beta.name}(X)"] = (
                lambda p, beta=beta: beta.eval(p, self.characteristic_field(p)[:, None, :])
            )
        for i, c in enumerate(self.coordinates):
            battery[f"cos {c}"] = lambda p, i=i: np.cos(p[:, i])
            battery[f"sin {c}"] = lambda p, i=i: np.sin(p[:, i])
        return battery


def build_t3_contact() -> PeriodicBoxModel:
    """
    T^3 with α = cos z dx + sin z dy, ω = dα, μ = dx∧dy∧dz.

    The characteristic field is X = -(cos z, sin z, 0) and α∧ω = -μ.
    """
    omega = FormField(
        2, 3,
        lambda p: np.stack([np.zeros(len(p)), np.sin(p[:, 2]), -np.cos(p[:, 2])], axis=1),
        analytic_derivative=lambda: FormField.zero(3, 3),
        name="omega",
    )
    alpha = FormField(
        1, 3,
        lambda p: np.stack([np.cos(p[:, 2]), np.sin(p[:, 2]), np.zeros(len(p))], axis=1),
        analytic_derivative=omega,
        name="alpha",
    )

    def field(p: np.ndarray) -> np.ndarray:
        return -np.stack([np.cos(p[:, 2]), np.sin(p[:, 2]), np.zeros(len(p))], axis=1)

    metadata = {
        "kind": "t3_contact",
        "coordinates": ["x", "y", "z"],
        "volume": TWO_PI ** 3,
        "lk_exact": -TWO_PI ** 3,
    }
    return PeriodicBoxModel("t3_contact", omega, alpha, metadata=metadata, field=field)


@dataclass(frozen=True)
class FourierTerm:
    """amplitude * trig(kx x + ky y) with trig in {sin, cos}"""
    amplitude: float
    kx: int
    ky: int
    kind: str = "sin"

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"Fourier term kind must be 'sin' or 'cos', got {self.kind!r}")
        if int(self.kx) != self.kx or int(self.ky) != self.ky:
            raise ValueError("Fourier wave numbers must be integers (periodic potential)")


@dataclass(frozen=True)
class MagneticSpec:
    """Flat T^2 with magnetic potential f, σ = d(f dy), kinetic K = |p|^2/2 at energy ε"""
    epsilon: float
    potential: Tuple[FourierTerm, ...] = field(default_factory=lambda: (FourierTerm(1.0, 1, 0, "sin"),))

    def f(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        total = np.zeros_like(x)
        for t in self.potential:
            phase = t.kx * x + t.ky * y
            total = total + t.amplitude * (np.sin(phase) if t.kind == "sin" else np.cos(phase))
        return total

    def f_gradient(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        fx = np.zeros_like(x)
        fy = np.zeros_like(x)
        for t in self.potential:
            phase = t.kx * x + t.ky * y
            d = t.amplitude * (np.cos(phase) if t.kind == "sin" else -np.sin(phase))
            fx = fx + t.kx * d
            fy = fy + t.ky * d
        return fx, fy

    def field_strength(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """B = ∂_x f, so σ = B dx∧dy"""
        return self.f_gradient(x, y)[0]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            "epsilon": self.epsilon,
            "potential": [[t.amplitude, t.kx, t.ky, t.kind] for t in self.potential],
        }


def magnetic_flux(spec: MagneticSpec, n: int = 64) -> float:
    """∫_{T^2} σ on a trapezoid grid (zero for any periodic potential)"""
    axis = TWO_PI * np.arange(n) / n
    x, y = np.meshgrid(axis, axis, indexing="ij")
    return float(np.sum(spec.field_strength(x, y)) * (TWO_PI / n) ** 2)


def build_magnetic_torus(spec: MagneticSpec) -> PeriodicBoxModel:
    """
    Energy level M_ε = {K = ε^2/2} of the twisted flat torus, coordinates (x, y, θ).

    p = ε(cos θ, sin θ), α = ε cos θ dx + (ε sin θ + f) dy, μ = dx∧dy∧dθ.
    The characteristic field is X = (-ε cos θ, -ε sin θ, B) = -X_H, where the
    Hamiltonian field (i_{X_H} ω = -dH) moves forward along p and turns as θ' = -B.
    """
    eps = float(spec.epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    flux = magnetic_flux(spec)
    if abs(flux) > 1e-9:
        raise ValueError(f"magnetic field is not exact: flux {flux:.3g}")

    def omega_coefficients(p: np.ndarray) -> np.ndarray:
        theta = p[:, 2]
        B = spec.field_strength(p[:, 0], p[:, 1])
        return np.stack([B, eps * np.sin(theta), -eps * np.cos(theta)], axis=1)

    def alpha_coefficients(p: np.ndarray) -> np.ndarray:
        theta = p[:, 2]
        return np.stack([eps * np.cos(theta), eps * np.sin(theta) + spec.f(p[:, 0], p[:, 1]),
                         np.zeros(len(p))], axis=1)

    omega = FormField(2, 3, omega_coefficients, analytic_derivative=lambda: FormField.zero(3, 3),
                      name="omega")
    alpha = FormField(1, 3, alpha_coefficients, analytic_derivative=omega, name="alpha")

    def field(p: np.ndarray) -> np.ndarray:
        theta = p[:, 2]
        B = spec.field_strength(p[:, 0], p[:, 1])
        return np.stack([-eps * np.cos(theta), -eps * np.sin(theta), B], axis=1)

    metadata = {
        "kind": "magnetic_torus",
        "coordinates": ["x", "y", "theta"],
        "spec": spec.to_dict(),
        "volume": TWO_PI ** 3,
        "lk_exact": -eps ** 2 * TWO_PI ** 3,
        "flux": flux,
    }
    return MagneticTorusModel(spec, omega, alpha, metadata=metadata, field=field)


class MagneticTorusModel(PeriodicBoxModel):
    """Twisted flat torus on a kinetic energy level"""

    def __init__(self, spec: MagneticSpec, omega: FormField, alpha: FormField, **kwargs):
        super().__init__("magnetic_torus", omega, alpha, coordinates=("x", "y", "theta"),
                         hamiltonian_sign=-1, **kwargs)
        self.spec = spec

    def constraint_drift(self, points: np.ndarray) -> np.ndarray:
        """|K - ε^2/2| with p rebuilt from θ"""
        theta = np.atleast_2d(points)[:, 2]
        p = self.spec.epsilon * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return np.abs(0.5 * np.sum(p * p, axis=1) - 0.5 * self.spec.epsilon ** 2)

    def observables(self) -> Dict[str, Observable]:
        battery = super().observables()
        battery["B(x, y)"] = lambda p: self.spec.field_strength(p[:, 0], p[:, 1])
        return battery
