"""
Star-shaped regular levels of Hamiltonians on R^4 with the standard symplectic form

Coordinates are (x1, y1, x2, y2). ω0 = dx1∧dy1 + dx2∧dy2 with primitive
λ = ½ Σ (x_j dy_j - y_j dx_j). The level is oriented by the outward normal and
carries the Leray volume μ = i_Y vol with Y = ∇H/|∇H|^2, for which the
characteristic field equals the Hamiltonian field (i_{X_H} ω0 = -dH).
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

try:
    from ..forms.core import Chart, FormField, VolumeForm
    from ..forms.quadrature import IntegralEstimate, QuadratureNodes, integrate_density, stratified_unit_cube
except ImportError:
    from forms.core import Chart, FormField, VolumeForm
    from forms.quadrature import IntegralEstimate, QuadratureNodes, integrate_density, stratified_unit_cube

from .base import BasisFunction, HamiltonianStructureModel, Observable

logger = logging.getLogger(__name__)

STAR_SHAPE_ERROR = "radial sampler requires star-shaped level"
SPHERE_AREA = 2.0 * np.pi ** 2
BISECTION_STEPS = 24

Monomial = Tuple[int, int, int, int]


@dataclass(frozen=True)
class PolynomialHamiltonian:
    """H = Σ c · x1^e0 y1^e1 x2^e2 y2^e3"""
    terms: Tuple[Tuple[float, Monomial], ...]
    name: str = "custom"

    def __post_init__(self):
        for coefficient, exponents in self.terms:
            if len(exponents) != 4 or any(int(e) != e or e < 0 for e in exponents):
                raise ValueError(f"monomial exponents must be 4 non-negative integers, got {exponents}")

    @staticmethod
    def _monomial(p: np.ndarray, exponents: Sequence[int]) -> np.ndarray:
        # integer powers column by column; zero exponents are skipped
        out = np.ones(len(p))
        for i, e in enumerate(exponents):
            if e:
                out = out * np.power(p[:, i], int(e))
        return out

    def value(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        total = np.zeros(len(p))
        for coefficient, exponents in self.terms:
            total += coefficient * self._monomial(p, exponents)
        return total

    def gradient(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        grad = np.zeros_like(p, dtype=float)
        for coefficient, exponents in self.terms:
            for i, e in enumerate(exponents):
                if e == 0:
                    continue
                lowered = list(exponents)
                lowered[i] -= 1
                grad[:, i] += coefficient * e * self._monomial(p, lowered)
        return grad

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {"name": self.name, "terms": [[c, list(e)] for c, e in self.terms]}

    @classmethod
    def sphere(cls) -> "PolynomialHamiltonian":
        """|x|^2 / 2"""
        return cls(tuple((0.5, tuple(2 if j == i else 0 for j in range(4))) for i in range(4)),
                   name="sphere")

    @classmethod
    def ellipsoid(cls, a: float, b: float) -> "PolynomialHamiltonian":
        """π|z1|^2/a + π|z2|^2/b"""
        if a <= 0 or b <= 0:
            raise ValueError("ellipsoid capacities must be positive")
        terms = (
            (np.pi / a, (2, 0, 0, 0)), (np.pi / a, (0, 2, 0, 0)),
            (np.pi / b, (0, 0, 2, 0)), (np.pi / b, (0, 0, 0, 2)),
        )
        return cls(terms, name=f"ellipsoid({a:g}, {b:g})")


@dataclass(frozen=True)
class LevelSetSpec:
    """Regular level {H = c} of a polynomial Hamiltonian on R^4"""
    hamiltonian: PolynomialHamiltonian
    level: float
    name: Optional[str] = None

    @classmethod
    def sphere(cls) -> "LevelSetSpec":
        return cls(PolynomialHamiltonian.sphere(), 0.5, name="sphere")

    @classmethod
    def ellipsoid(cls, a: float, b: float) -> "LevelSetSpec":
        return cls(PolynomialHamiltonian.ellipsoid(a, b), 1.0, name="ellipsoid")


def hopf_directions(eta: np.ndarray, xi1: np.ndarray, xi2: np.ndarray) -> np.ndarray:
    """u = (cos η cos ξ1, cos η sin ξ1, sin η cos ξ2, sin η sin ξ2) on S^3"""
    return np.stack([np.cos(eta) * np.cos(xi1), np.cos(eta) * np.sin(xi1),
                     np.sin(eta) * np.cos(xi2), np.sin(eta) * np.sin(xi2)], axis=-1)


def sphere_frame(u: np.ndarray) -> np.ndarray:
    """Orthonormal frame of T_u S^3 with (u, f1, f2, f3) positively oriented"""
    u0, u1, u2, u3 = u[:, 0], u[:, 1], u[:, 2], u[:, 3]
    f1 = np.stack([-u1, u0, -u3, u2], axis=1)
    f2 = np.stack([-u2, u3, u0, -u1], axis=1)
    f3 = np.stack([-u3, -u2, u1, u0], axis=1)
    return np.stack([f1, f2, f3], axis=1)


def ambient_primitive() -> FormField:
    """λ = ½ Σ (x_j dy_j - y_j dx_j), dλ = ω0"""
    omega0 = FormField.constant(2, 4, [1.0, 0.0, 0.0, 0.0, 0.0, 1.0], name="omega0")
    return FormField(
        1, 4,
        lambda p: 0.5 * np.stack([-p[:, 1], p[:, 0], -p[:, 3], p[:, 2]], axis=1),
        analytic_derivative=omega0,
        name="lambda",
    )


class LevelSetModel(HamiltonianStructureModel):
    """Radial graph r(u)·u over S^3 of a star-shaped level"""

    supported_schemes = ("monte_carlo", "grid")
    default_scheme = "monte_carlo"

    def __init__(self, spec: LevelSetSpec):
        self.spec = spec
        self.hamiltonian = spec.hamiltonian
        self.level = float(spec.level)
        lam = ambient_primitive()

        def leray(p: np.ndarray) -> np.ndarray:
            g = self.hamiltonian.gradient(p)
            Y = g / np.sum(g * g, axis=1, keepdims=True)
            # i_Y (dx1∧dy1∧dx2∧dy2) on combinations (012, 013, 023, 123)
            return np.stack([-Y[:, 3], Y[:, 2], -Y[:, 1], Y[:, 0]], axis=1)

        mu = VolumeForm(FormField(3, 4, leray, name="leray"))
        super().__init__(spec.name or self.hamiltonian.name, Chart(4), lam.analytic_derivative,
                         lam, mu, h1_basis=(), metadata=self._metadata(), field=self._hamiltonian_field,
                         hamiltonian_sign=1)

    def _metadata(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": "levelset", "hamiltonian": self.hamiltonian.to_dict(),
                                "level": self.level}
        name = self.spec.name
        if name == "sphere":
            data.update({"closed_form_periods": [2 * np.pi], "closed_form_actions": [np.pi],
                         "lk_exact": np.pi ** 2, "max_period": 1.9 * 2 * np.pi})
        elif name == "ellipsoid":
            a = np.pi / self.hamiltonian.terms[0][0]
            b = np.pi / self.hamiltonian.terms[2][0]
            data.update({"a": a, "b": b, "closed_form_periods": sorted([a, b]),
                         "closed_form_actions": sorted([a, b]), "lk_exact": a * b,
                         "max_period": 1.9 * min(a, b)})
        return data

    def _hamiltonian_field(self, p: np.ndarray) -> np.ndarray:
        g = self.hamiltonian.gradient(p)
        return np.stack([-g[:, 1], g[:, 0], -g[:, 3], g[:, 2]], axis=1)

    def radius(self, directions: np.ndarray) -> np.ndarray:
        """r(u) with H(r u) = c: bracket by doubling, bisection, Newton polish"""
        u = np.atleast_2d(directions)
        excess = lambda r: self.hamiltonian.value(r[:, None] * u) - self.level  # noqa: E731
        hi = np.ones(len(u))
        for _ in range(60):
            low = excess(hi) <= 0
            if not low.any():
                break
            hi[low] *= 2.0
        else:
            raise ValueError(STAR_SHAPE_ERROR)
        lo = np.zeros(len(u))
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            above = excess(mid) > 0
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        r = 0.5 * (lo + hi)
        # Newton polish, steps leaving the bracket are rejected
        for _ in range(4):
            slope = np.sum(self.hamiltonian.gradient(r[:, None] * u) * u, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = r - excess(r) / slope
            r = np.where(np.isfinite(step) & (step >= lo) & (step <= hi), step, r)
        return r

    def check_star_shaped(self, seed: int = 0) -> None:
        """Origin inside, one transverse crossing per ray on a direction grid"""
        if self.hamiltonian.value(np.zeros((1, 4)))[0] >= self.level:
            raise ValueError(STAR_SHAPE_ERROR)
        eta, xi1, xi2 = np.meshgrid(np.linspace(0.0, np.pi / 2, 7), np.linspace(0, 2 * np.pi, 12, endpoint=False),
                                    np.linspace(0, 2 * np.pi, 12, endpoint=False), indexing="ij")
        grid = hopf_directions(eta.ravel(), xi1.ravel(), xi2.ravel())
        rng = np.random.default_rng(seed)
        scattered = rng.normal(size=(512, 4))
        u = np.concatenate([grid, scattered / np.linalg.norm(scattered, axis=1, keepdims=True)])

        r = self.radius(u)
        slope = np.sum(self.hamiltonian.gradient(r[:, None] * u) * u, axis=1)
        if np.any(slope <= 0) or np.any(~np.isfinite(r)):
            raise ValueError(STAR_SHAPE_ERROR)
        radii = np.linspace(0.0, 1.0, 97)[1:, None] * 4.0 * r[None, :]
        # a node may sit exactly on the level; only count outside/inside flips
        outside = self.hamiltonian.value((radii[..., None] * u[None]).reshape(-1, 4)) > self.level
        crossings = np.sum(np.diff(outside.reshape(radii.shape).astype(np.int8), axis=0) != 0, axis=0)
        if np.any(crossings != 1):
            raise ValueError(STAR_SHAPE_ERROR)
        grad = self.hamiltonian.gradient(r[:, None] * u)
        if np.any(np.linalg.norm(grad, axis=1) <= 1e-12):
            raise ValueError("gradient of H vanishes on the level")

    def frame(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        r = np.linalg.norm(p, axis=1)
        return self._pushed_frame(p / r[:, None], r, self.hamiltonian.gradient(p))

    @staticmethod
    def _pushed_frame(u: np.ndarray, r: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """dΦ(f) = r (f - (∇H·f / ∇H·u) u) for the radial graph Φ(u) = r(u) u"""
        f = sphere_frame(u)
        ratio = np.einsum("nd,nkd->nk", grad, f) / np.sum(grad * u, axis=1)[:, None]
        return r[:, None, None] * (f - ratio[..., None] * u[:, None, :])

    def points_from_unit_cube(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(u)
        directions = hopf_directions(np.arcsin(np.sqrt(u[:, 0])), 2 * np.pi * u[:, 1], 2 * np.pi * u[:, 2])
        return self.radius(directions)[:, None] * directions

    def _nodes(self, directions: np.ndarray, weights: np.ndarray,
               strata: Optional[np.ndarray] = None) -> QuadratureNodes:
        r = self.radius(directions)
        points = r[:, None] * directions
        frames = self._pushed_frame(directions, r, self.hamiltonian.gradient(points))
        return QuadratureNodes(points, frames, weights, strata=strata)

    def quadrature_blocks(self, scheme: str, resolution: int, seed: int):
        if scheme == "grid":
            return self._grid_blocks(resolution)

        def build(block) -> QuadratureNodes:
            ids, u, weights = block
            directions = hopf_directions(np.arcsin(np.sqrt(u[:, 0])), 2 * np.pi * u[:, 1],
                                         2 * np.pi * u[:, 2])
            return self._nodes(directions, SPHERE_AREA * weights, strata=ids)

        return [lambda block=block: build(block) for block in stratified_unit_cube(resolution, seed)]

    def _grid_blocks(self, n: int):
        """Gauss-Legendre in η, trapezoid in ξ1 and ξ2; dσ = sin η cos η dη dξ1 dξ2"""
        x, w = roots_legendre(n)
        eta = 0.25 * np.pi * (x + 1.0)
        eta_weights = 0.25 * np.pi * w * np.sin(eta) * np.cos(eta)
        xi = 2 * np.pi * np.arange(n) / n
        step = (2 * np.pi / n) ** 2

        def build(rows: np.ndarray) -> QuadratureNodes:
            e, a, b = np.meshgrid(eta[rows], xi, xi, indexing="ij")
            weights = np.broadcast_to(eta_weights[rows][:, None, None], e.shape) * step
            return self._nodes(hopf_directions(e.ravel(), a.ravel(), b.ravel()), weights.ravel().copy())

        return [lambda rows=rows: build(rows) for rows in np.array_split(np.arange(n), min(n, 8))]

    def domain_integral(self, scheme: Optional[str] = None, resolution: Optional[int] = None,
                        seed: int = 0) -> IntegralEstimate:
        """∫_W ω0^2 = 2 vol(W) = ∫_{S^3} r^4 / 2 dσ"""
        return integrate_density(self, lambda p, frames: 0.5 * np.sum(p * p, axis=1) ** 2,
                                 scheme=scheme, resolution=resolution, seed=seed)

    def project(self, points: np.ndarray, fixed: Optional[int] = None) -> np.ndarray:
        """Newton steps along ∇H (keeping one coordinate fixed when asked)"""
        p = np.array(points, dtype=float, copy=True)
        flat = p.reshape(-1, 4)
        for _ in range(3):
            g = self.hamiltonian.gradient(flat)
            if fixed is not None:
                g[:, fixed] = 0.0
            excess = self.hamiltonian.value(flat) - self.level
            flat -= (excess / np.sum(g * g, axis=1))[:, None] * g
        return flat.reshape(p.shape)

    def constraint_drift(self, points: np.ndarray) -> np.ndarray:
        return np.abs(self.hamiltonian.value(np.atleast_2d(points)) - self.level)

    def constraint_residual(self, point: np.ndarray) -> np.ndarray:
        return self.hamiltonian.value(np.atleast_2d(point)) - self.level

    def is_contractible(self, start: np.ndarray, end_unwrapped: np.ndarray) -> Optional[bool]:
        return True

    def function_basis(self, degree: int) -> List[BasisFunction]:
        basis = []
        for total in range(1, degree + 1):
            for combo in itertools.combinations_with_replacement(range(4), total):
                exponents = tuple(combo.count(i) for i in range(4))
                monomial = PolynomialHamiltonian(((1.0, exponents),))
                label = "*".join(f"{v}^{e}" if e > 1 else v
                                 for v, e in zip(("x1", "y1", "x2", "y2"), exponents) if e)
                differential = FormField(1, 4, monomial.gradient,
                                         analytic_derivative=lambda: FormField.zero(2, 4),
                                         name=f"d({label})")
                basis.append(BasisFunction(label, monomial.value, differential))
        return basis

    def observables(self) -> Dict[str, Observable]:
        return {
            "alpha(X)": self.action_density,
            "pi|z1|^2": lambda p: np.pi * (p[:, 0] ** 2 + p[:, 1] ** 2),
            "pi|z2|^2": lambda p: np.pi * (p[:, 2] ** 2 + p[:, 3] ** 2),
            "x1": lambda p: p[:, 0],
            "y2": lambda p: p[:, 3],
            "x1*x2": lambda p: p[:, 0] * p[:, 2],
        }


def build_levelset(spec: LevelSetSpec) -> LevelSetModel:
    """
    Restrict ω0 and λ to a star-shaped level {H = c}.

    Raises:
        ValueError: "radial sampler requires star-shaped level" when the origin is
            not inside or some ray does not cross the level exactly once
    """
    model = LevelSetModel(spec)
    model.check_star_shaped()
    logger.info(f"Level set {model.name} passed the star-shape check")
    return model
