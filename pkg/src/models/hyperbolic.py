"""
Unit tangent bundle of the Bolza surface with the twisted form at energy ε

Points are SL(2, R) matrices stored flattened as (a, b, c, d); tangent vectors are
components in the left-invariant frame (A, B, R) of the group chart, with coframe
(a, b, r) satisfying da = b∧r, db = -a∧r, dr = -a∧b. A generates the unit-speed
geodesic flow, B the orthogonal motion and R the unit-speed rotation of the fibre.
The surface is the quotient of the hyperbolic disk by the side pairings of the
regular octagon with angles π/4.
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.special import roots_legendre

try:
    from ..forms.core import FormField, GroupChart, VolumeForm
    from ..forms.quadrature import QuadratureNodes
except ImportError:
    from forms.core import FormField, GroupChart, VolumeForm
    from forms.quadrature import QuadratureNodes

from .base import BasisFunction, HamiltonianStructureModel, Observable

logger = logging.getLogger(__name__)

# Cayley transform: upper half-plane to the unit disk
CAYLEY = np.array([[1.0, -1.0j], [1.0, 1.0j]])
CAYLEY_INV = np.linalg.inv(CAYLEY)

INRADIUS = float(np.arccosh(1.0 / np.tan(np.pi / 8)))
CIRCUMRADIUS = float(np.arccosh(1.0 / np.tan(np.pi / 8) ** 2))
KLEIN_SIDE = float(np.tanh(INRADIUS))

MAX_WORD_LENGTH = 64
SIDE_TOLERANCE = 1e-12
BUMP_RADII = (0.8, 1.0, 1.4)
FIBRE_LENGTH = 2.0 * np.pi
SURFACE_AREA = 4.0 * np.pi


class ReductionError(ValueError):
    """Group element could not be reduced to the fundamental octagon"""


def disk_rotation(theta: float) -> np.ndarray:
    """z -> e^{iθ} z as an SU(1, 1) matrix"""
    return np.diag([np.exp(0.5j * theta), np.exp(-0.5j * theta)])


def to_disk(g: np.ndarray) -> np.ndarray:
    """SL(2, R) matrices (..., 2, 2) to SU(1, 1) through the Cayley transform"""
    return CAYLEY @ np.asarray(g, dtype=complex) @ CAYLEY_INV


def from_disk(gd: np.ndarray) -> np.ndarray:
    return np.real(CAYLEY_INV @ gd @ CAYLEY)


def _side_pairings() -> np.ndarray:
    half = INRADIUS  # translation length 2 r_in, halved in the matrix entries
    t0 = np.array([[np.cosh(half), np.sinh(half)], [np.sinh(half), np.cosh(half)]], dtype=complex)
    disk = [disk_rotation(k * np.pi / 4) @ t0 @ disk_rotation(-k * np.pi / 4) for k in range(8)]
    return from_disk(np.stack(disk))


# T_k translates towards direction kπ/4 and maps side k+4 onto side k; T_{k+4} = T_k^-1
SIDE_PAIRINGS = _side_pairings()
SIDE_PAIRINGS_INV = np.linalg.inv(SIDE_PAIRINGS)
_SIDE_DIRECTIONS = np.exp(-1j * np.pi * np.arange(8) / 4)


def _as_matrices(g: np.ndarray) -> np.ndarray:
    arr = np.asarray(g, dtype=float)
    if arr.shape[-2:] == (2, 2):
        return arr.reshape(-1, 2, 2)
    if arr.shape[-1] == 4:
        return arr.reshape(-1, 2, 2)
    raise ValueError(f"expected 2x2 matrices or flattened (..., 4) arrays, got {arr.shape}")


def base_point(g: np.ndarray) -> np.ndarray:
    """Base point in the disk of the unit tangent vector represented by g"""
    gd = to_disk(_as_matrices(g))
    return gd[:, 0, 1] / gd[:, 1, 1]


def direction_angle(g: np.ndarray) -> np.ndarray:
    """Angle of the unit tangent vector in the Euclidean frame of the disk"""
    gd = to_disk(_as_matrices(g))
    return -2.0 * np.angle(gd[:, 1, 1])


def distance_to_center(g: np.ndarray) -> np.ndarray:
    """Hyperbolic distance from the octagon centre to the base point"""
    return 2.0 * np.arctanh(np.minimum(np.abs(base_point(g)), 1.0 - 1e-16))


def side_excess(g: np.ndarray) -> np.ndarray:
    """Signed Klein-model excess beyond each of the eight side lines, shape (N, 8)"""
    w = base_point(g)
    klein = 2.0 * w / (1.0 + np.abs(w) ** 2)
    return np.real(klein[:, None] * _SIDE_DIRECTIONS[None, :]) - KLEIN_SIDE


def reduce_to_fundamental_domain(g: np.ndarray, max_word: int = MAX_WORD_LENGTH) -> np.ndarray:
    """
    Left-multiply by side pairings until the base point lies in the closed octagon.

    Each step applies the inverse pairing of a violated side that brings the base
    point closest to the centre, so the distance to the centre strictly decreases.
    The result represents the same point of the bundle up to the sign of the matrix.

    Args:
        g: Matrix (2, 2), stack (N, 2, 2) or flattened (N, 4)
        max_word: Cap on the word length

    Returns:
        Reduced elements in the input shape

    Raises:
        ReductionError: Non-unimodular input or word cap exceeded
    """
    shape = np.shape(g)
    mats = _as_matrices(g).copy()
    det = np.linalg.det(mats)
    if np.any(np.abs(det - 1.0) > 1e-8):
        raise ReductionError(f"non-unimodular input: max |det - 1| = {np.max(np.abs(det - 1.0)):.3g}")

    for step in range(max_word + 1):
        excess = side_excess(mats)
        outside = np.max(excess, axis=1) > SIDE_TOLERANCE
        if not outside.any():
            return mats.reshape(shape)
        if step == max_word:
            raise ReductionError(f"reduction exceeded the word length cap {max_word}")
        idx = np.flatnonzero(outside)
        candidates = SIDE_PAIRINGS_INV[None] @ mats[idx][:, None]
        radius = np.abs(base_point(candidates.reshape(-1, 2, 2))).reshape(len(idx), 8)
        radius = np.where(excess[idx] > SIDE_TOLERANCE, radius, np.inf)
        best = np.argmin(radius, axis=1)
        mats[idx] = candidates[np.arange(len(idx)), best]
    return mats.reshape(shape)


def classify(epsilon: float) -> str:
    """elliptic / parabolic / hyperbolic type of the flow generator εA - R"""
    if abs(epsilon - 1.0) <= 1e-12:
        return "parabolic"
    return "elliptic" if epsilon < 1.0 else "hyperbolic"


def _bump(rho: np.ndarray, radius: float) -> np.ndarray:
    s = np.clip(rho / radius, 0.0, 1.0)
    inside = s < 1.0
    safe = np.where(inside, 1.0 - s * s, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def _group_differential(value: Observable, chart: GroupChart, name: str, h: float = 1e-5) -> FormField:
    """df in the left-invariant coframe by central differences along the frame"""
    eye = np.eye(3)

    def coefficients(p: np.ndarray) -> np.ndarray:
        columns = []
        for i in range(3):
            v = np.broadcast_to(eye[i], (len(p), 3))
            columns.append((value(chart.shift(p, v, h)) - value(chart.shift(p, v, -h))) / (2 * h))
        return np.stack(columns, axis=1)

    return FormField(1, 3, coefficients, analytic_derivative=lambda: FormField.zero(2, 3), name=name)


class HyperbolicBundleModel(HamiltonianStructureModel):
    """Quotient Γ\\SL(2, R) with ω = ε b∧r - a∧b, α = ε a + r, μ = a∧b∧r"""

    supported_schemes = ("grid",)
    default_scheme = "grid"

    def __init__(self, epsilon: float):
        eps = float(epsilon)
        self.epsilon = eps
        omega = FormField.constant(2, 3, [-1.0, 0.0, eps], name="omega")
        alpha = FormField(1, 3, lambda p: np.array([eps, 0.0, 1.0]),
                          analytic_derivative=omega, name="alpha")
        mu = VolumeForm(FormField.constant(3, 3, [1.0], name="a^b^r"))
        generator = np.array([eps, 0.0, -1.0])

        def field(p: np.ndarray) -> np.ndarray:
            return np.broadcast_to(generator, (len(p), 3)).copy()

        super().__init__(f"hyperbolic_utb(eps={eps:g})", GroupChart(), omega, alpha, mu,
                         h1_basis=(), metadata=self._metadata(eps), field=field, hamiltonian_sign=1)

    @staticmethod
    def _metadata(eps: float) -> Dict[str, Any]:
        volume = SURFACE_AREA * FIBRE_LENGTH
        data: Dict[str, Any] = {
            "kind": "hyperbolic_utb",
            "epsilon": eps,
            "classification": classify(eps),
            "volume": volume,
            "lk_exact": (eps ** 2 - 1.0) * volume,
            "inradius": INRADIUS,
            "circumradius": CIRCUMRADIUS,
        }
        if eps < 1.0:
            period = 2.0 * np.pi / np.sqrt(1.0 - eps ** 2)
            data["closed_form_periods"] = [period]
            data["closed_form_actions"] = [(eps ** 2 - 1.0) * period]
            data["max_period"] = 1.5 * period
        return data

    def frame(self, points: np.ndarray) -> np.ndarray:
        n = len(np.atleast_2d(points))
        return np.broadcast_to(np.eye(3), (n, 3, 3)).copy()

    def points_from_unit_cube(self, u: np.ndarray) -> np.ndarray:
        """Uniform on the circumscribed disk bundle, then reduced (covers the octagon)"""
        u = np.atleast_2d(u)
        rho = np.arccosh(1.0 + u[:, 1] * (np.cosh(CIRCUMRADIUS) - 1.0))
        w = np.tanh(rho / 2.0) * np.exp(2j * np.pi * u[:, 0])
        g = from_disk(self._disk_elements(w, 2 * np.pi * u[:, 2]))
        return reduce_to_fundamental_domain(g).reshape(-1, 4)

    @staticmethod
    def _disk_elements(w: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """P(w) Rot(ψ): base point w, direction ψ"""
        scale = 1.0 / np.sqrt(1.0 - np.abs(w) ** 2)
        P = np.empty((len(w), 2, 2), dtype=complex)
        P[:, 0, 0] = scale
        P[:, 0, 1] = scale * w
        P[:, 1, 0] = scale * np.conj(w)
        P[:, 1, 1] = scale
        R = np.zeros((len(w), 2, 2), dtype=complex)
        R[:, 0, 0] = np.exp(0.5j * psi)
        R[:, 1, 1] = np.exp(-0.5j * psi)
        return P @ R

    def quadrature_blocks(self, scheme: str, resolution: int, seed: int):
        """Eight sectors; Gauss in angle and radius (weight sinh ρ), trapezoid in the fibre"""
        n = resolution
        x, wx = roots_legendre(n)
        phi_local = np.pi / 8 * x
        phi_weights = np.pi / 8 * wx
        n_psi = max(4, n // 2)
        psi = FIBRE_LENGTH * np.arange(n_psi) / n_psi

        def build(sector: int) -> QuadratureNodes:
            rho_max = np.arctanh(KLEIN_SIDE / np.cos(phi_local))
            rho = 0.5 * rho_max[:, None] * (x[None, :] + 1.0)
            rho_weights = 0.5 * rho_max[:, None] * wx[None, :] * np.sinh(rho)
            area = phi_weights[:, None] * rho_weights
            phi = sector * np.pi / 4 + np.broadcast_to(phi_local[:, None], rho.shape)
            w = np.tanh(rho / 2.0) * np.exp(1j * phi)
            w_all = np.repeat(w.ravel(), n_psi)
            psi_all = np.tile(psi, w.size)
            points = from_disk(self._disk_elements(w_all, psi_all)).reshape(-1, 4)
            weights = np.repeat(area.ravel(), n_psi) * (FIBRE_LENGTH / n_psi)
            return QuadratureNodes(points, self.frame(points), weights)

        return [lambda sector=sector: build(sector) for sector in range(8)]

    def project(self, points: np.ndarray, fixed: Optional[int] = None) -> np.ndarray:
        """Rescale to unit determinant"""
        p = np.asarray(points, dtype=float)
        mats = p.reshape(-1, 2, 2)
        det = np.linalg.det(mats)
        return (mats / np.sqrt(np.abs(det))[:, None, None]).reshape(p.shape)

    def recenter(self, points: np.ndarray) -> np.ndarray:
        """Reduce elements whose base point wandered far from the octagon"""
        p = np.asarray(points, dtype=float)
        far = distance_to_center(p) > 2.0 * CIRCUMRADIUS
        if not far.any():
            return p
        out = p.reshape(-1, 4).copy()
        out[far] = reduce_to_fundamental_domain(self.project(out[far])).reshape(-1, 4)
        return out.reshape(p.shape)

    def wrap(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return reduce_to_fundamental_domain(self.project(p).reshape(-1, 4)).reshape(p.shape)

    def constraint_drift(self, points: np.ndarray) -> np.ndarray:
        return np.abs(np.linalg.det(np.atleast_2d(points).reshape(-1, 2, 2)) - 1.0)

    def constraint_residual(self, point: np.ndarray) -> np.ndarray:
        return np.linalg.det(np.atleast_2d(point).reshape(-1, 2, 2)) - 1.0

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """a - b or a + b, whichever is shorter (g and -g are the same point)"""
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        minus, plus = a - b, a + b
        flip = np.linalg.norm(plus, axis=-1) < np.linalg.norm(minus, axis=-1)
        return np.where(flip[..., None], plus, minus)

    def loop_features(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        lead = np.take_along_axis(p, np.argmax(np.abs(p), axis=-1)[..., None], axis=-1)
        return p * np.sign(lead)

    def is_contractible(self, start: np.ndarray, end_unwrapped: np.ndarray) -> Optional[bool]:
        # closed loops of the lift are homotopic to multiples of the fibre
        return False

    def _reduced_polar(self, p: np.ndarray):
        reduced = reduce_to_fundamental_domain(self.project(np.atleast_2d(p)))
        return distance_to_center(reduced), direction_angle(reduced)

    def function_basis(self, degree: int) -> List[BasisFunction]:
        """Radial bumps, and for degree > 1 bumps times cos/sin of the direction"""
        basis = []
        for radius in BUMP_RADII:
            radial = lambda p, r=radius: _bump(self._reduced_polar(p)[0], r)  # noqa: E731
            basis.append(BasisFunction(f"bump({radius:g})", radial,
                                       _group_differential(radial, self.chart, f"d bump({radius:g})")))
            for harmonic in range(1, degree):
                for kind, trig in (("cos", np.cos), ("sin", np.sin)):
                    def value(p, r=radius, k=harmonic, trig=trig):
                        rho, theta = self._reduced_polar(p)
                        return _bump(rho, r) * trig(k * theta)

                    label = f"bump({radius:g}) {kind}({harmonic} dir)"
                    basis.append(BasisFunction(label, value,
                                               _group_differential(value, self.chart, f"d {label}")))
        return basis

    def observables(self) -> Dict[str, Observable]:
        battery: Dict[str, Observable] = {"alpha(X)": self.action_density}
        for radius in BUMP_RADII:
            battery[f"bump({radius:g})"] = lambda p, r=radius: _bump(self._reduced_polar(p)[0], r)
        battery["bump(1.4) cos(dir)"] = (
            lambda p: _bump(self._reduced_polar(p)[0], 1.4) * np.cos(self._reduced_polar(p)[1])
        )
        battery["bump(1.4) sin(dir)"] = (
            lambda p: _bump(self._reduced_polar(p)[0], 1.4) * np.sin(self._reduced_polar(p)[1])
        )
        return battery


def build_hyperbolic_utb(epsilon: float) -> HyperbolicBundleModel:
    """
    Energy level M_ε of the twisted geodesic flow on the Bolza surface.

    The characteristic field is the left-invariant X = εA - R: elliptic for ε < 1
    (every orbit closed with period 2π/√(1-ε^2)), the horocycle flow at ε = 1 and
    conjugate to the geodesic flow for ε > 1. α(X) = ε^2 - 1 is constant.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    model = HyperbolicBundleModel(epsilon)
    logger.info(f"Hyperbolic bundle at eps={epsilon:g} is {model.metadata['classification']}")
    return model
