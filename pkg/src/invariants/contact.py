"""
Contact-type evidence: margins of primitives, LP certification, action-sign test
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog
from scipy.stats import qmc

try:
    from ..config import Config
    from ..forms.core import FormField, exterior_derivative_eval, wedge_eval
    from ..models.base import random_unit_tangents
except ImportError:
    from config import Config
    from forms.core import FormField, exterior_derivative_eval, wedge_eval
    from models.base import random_unit_tangents

logger = logging.getLogger(__name__)

CONTACT_CERTIFIED = "contact_certified"
INFEASIBLE_ON_SAMPLES = "infeasible_on_samples"
INCONCLUSIVE = "inconclusive"

OBSTRUCTED = "obstructed"
UNOBSTRUCTED = "unobstructed"

PRIMITIVE_TOLERANCE = 1e-6
ACTION_FLOOR = 1e-6
REVALIDATION_FACTOR = 10
REVALIDATION_FLOOR = 0.95
# second LP keeps this share of the optimal margin while shrinking the coefficients
MARGIN_KEEP = 0.99


class CertificationError(RuntimeError):
    """The certification LP could not be solved"""


@dataclass
class CertificateResult:
    """Outcome of the sampled contact certification"""
    status: str
    margin: float
    sign: int
    coefficients: List[float]
    sample_count: int
    basis_cap: int
    basis_size: int
    fresh_margin: Optional[float] = None
    lp_margins: Dict[str, float] = field(default_factory=dict)
    obstruction: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            "status": self.status,
            "margin": float(self.margin),
            "sign": int(self.sign),
            "coefficients": [float(c) for c in self.coefficients],
            "sample_count": self.sample_count,
            "basis_cap": self.basis_cap,
            "basis_size": self.basis_size,
            "fresh_margin": self.fresh_margin,
            "lp_margins": dict(self.lp_margins),
            "obstruction": self.obstruction,
        }


def sobol_points(model, count: int, seed: int) -> np.ndarray:
    """Scrambled Sobol samples of the unit cube mapped onto the model"""
    sampler = qmc.Sobol(d=3, scramble=True, seed=seed)
    u = sampler.random_base2(int(np.ceil(np.log2(max(count, 2)))))[:count]
    return model.points_from_unit_cube(u)


def _check_primitive(model, primitive: FormField, seed: int, count: int = 256) -> None:
    rng = np.random.default_rng(seed)
    points = model.sample_points(count, seed=seed)
    pairs = random_unit_tangents(model, points, 2, rng)
    d_primitive = exterior_derivative_eval(primitive, points, pairs, chart=model.chart)
    omega = model.omega.eval(points, pairs)
    scale = max(1.0, float(np.max(np.abs(omega))))
    residual = float(np.max(np.abs(d_primitive - omega))) / scale
    if residual > PRIMITIVE_TOLERANCE:
        raise ValueError(f"primitive is not a primitive of omega (residual {residual:.3g})")


def contact_density(model, primitive: FormField, points: np.ndarray) -> np.ndarray:
    """(primitive ∧ ω) / μ on the model frames"""
    frames = model.frame(points)
    return wedge_eval(primitive, model.omega, points, frames) / model.mu.density(points, frames)


def contact_margin(model, primitive: Optional[FormField] = None, samples: int = 4096,
                   seed: int = 0) -> Tuple[float, int]:
    """
    (min |r|, sign) for r = (primitive ∧ ω)/μ at Sobol samples, or (0, 0) on a sign change.

    Raises:
        ValueError: "primitive is not a primitive of omega" when d(primitive) != ω
    """
    primitive = primitive or model.alpha
    _check_primitive(model, primitive, seed)
    r = contact_density(model, primitive, sobol_points(model, samples, seed))
    if np.all(r > 0):
        return float(np.min(r)), 1
    if np.all(r < 0):
        return float(np.min(-r)), -1
    return 0.0, 0


def action_sign_obstruction(orbits: Sequence[Union[float, Any]],
                            contractible: Optional[Sequence[Optional[bool]]] = None) -> str:
    """
    "obstructed" iff two contractible orbits have actions of strictly opposite sign,
    each larger than 1e-6 in magnitude.

    Args:
        orbits: OrbitRecords or bare actions
        contractible: Flags per orbit (defaults to the records' own flags, True for bare actions)
    """
    actions = [float(getattr(o, "action", o)) for o in orbits]
    if contractible is None:
        contractible = [getattr(o, "contractible", True) for o in orbits]
    if len(contractible) != len(actions):
        raise ValueError("one contractible flag per orbit is required")
    relevant = [a for a, flag in zip(actions, contractible) if flag and abs(a) > ACTION_FLOOR]
    if any(a > 0 for a in relevant) and any(a < 0 for a in relevant):
        return OBSTRUCTED
    return UNOBSTRUCTED


def _combined_primitive(model, basis, coefficients: np.ndarray) -> FormField:
    primitive = model.alpha
    for c, fn in zip(coefficients, basis):
        if c != 0:
            primitive = primitive + fn.differential.scaled(float(c))
    primitive.name = "alpha + df_c"
    return primitive


def _solve_margin(r0: np.ndarray, R: np.ndarray, sign: int, bound: float) -> Tuple[float, np.ndarray]:
    """max t s.t. sign·(r0 + R c) >= t, |c_j| <= bound, then the smallest-|c| near-optimal c"""
    n, m = R.shape
    A_ub = np.hstack([-sign * R, np.ones((n, 1))])
    objective = np.r_[np.zeros(m), -1.0]
    bounds = [(-bound, bound)] * m + [(None, None)]
    result = linprog(objective, A_ub=A_ub, b_ub=sign * r0, bounds=bounds, method="highs")
    if result.status == 3:
        raise CertificationError("certification LP is unbounded")
    if result.status != 0:
        raise CertificationError(f"certification LP failed: {result.message}")
    t = float(result.x[-1])
    if t <= 0:
        return t, result.x[:m]

    # minimize Σ u with -u <= c <= u, keeping sign·(r0 + R c) >= MARGIN_KEEP·t
    eye = np.eye(m)
    A_ub = np.vstack([
        np.hstack([-sign * R, np.zeros((n, m))]),
        np.hstack([eye, -eye]),
        np.hstack([-eye, -eye]),
    ])
    b_ub = np.r_[sign * r0 - MARGIN_KEEP * t, np.zeros(2 * m)]
    sparse = linprog(np.r_[np.zeros(m), np.ones(m)], A_ub=A_ub, b_ub=b_ub,
                     bounds=[(-bound, bound)] * m + [(0, bound)] * m, method="highs")
    c = sparse.x[:m] if sparse.status == 0 else result.x[:m]
    return float(np.min(sign * (r0 + R @ c))), c


def certify_contact(model, basis_cap: int = 3, sample_count: int = 4096, seed: int = 0,
                    recorded_orbits: Optional[Iterable[Any]] = None,
                    bound: Optional[float] = None) -> CertificateResult:
    """
    Search for f in the truncated basis with (α + df)∧ω nowhere zero on samples.

    For each sign s the LP maximizes t subject to s·(α + df_c)(X)(p_i) >= t, which equals
    s·((α + df_c)∧ω)/μ at p_i. A positive optimum is revalidated on 10x fresh samples.

    Args:
        model: HamiltonianStructureModel
        basis_cap: Degree of the function basis
        sample_count: LP constraint samples (at least 10 per basis function)
        seed: Sobol scramble seed
        recorded_orbits: Orbits whose actions feed the action-sign obstruction
        bound: Box bound on the coefficients (defaults to CHARFLOW_LP_BOUND)

    Returns:
        CertificateResult
    """
    if basis_cap < 1:
        raise ValueError("basis_cap must be at least 1")
    basis = model.function_basis(basis_cap)
    if sample_count < 10 * len(basis):
        raise ValueError(f"sample_count must be at least {10 * len(basis)} for {len(basis)} basis functions")
    bound = Config.LP_COEFFICIENT_BOUND if bound is None else bound

    points = sobol_points(model, sample_count, seed)
    X = model.characteristic_field(points)[:, None, :]
    r0 = model.alpha.eval(points, X)
    R = np.stack([fn.differential.eval(points, X) for fn in basis], axis=1)

    solutions = {s: _solve_margin(r0, R, s, bound) for s in (1, -1)}
    lp_margins = {f"{s:+d}": t for s, (t, _) in solutions.items()}
    logger.info(f"{model.name}: certification LP margins {lp_margins}")

    sign = max(solutions, key=lambda s: solutions[s][0])
    margin, coefficients = solutions[sign]
    result = CertificateResult(INCONCLUSIVE, margin, sign, list(coefficients), sample_count,
                               basis_cap, len(basis), lp_margins=lp_margins)

    if all(t > 0 for t, _ in solutions.values()):
        logger.warning(f"{model.name}: both signs feasible on samples; inconclusive")
    elif margin <= 0:
        result.status = INFEASIBLE_ON_SAMPLES
        result.sign = 0
    else:
        primitive = _combined_primitive(model, basis, coefficients)
        fresh, fresh_sign = contact_margin(model, primitive, samples=REVALIDATION_FACTOR * sample_count,
                                           seed=seed + 1)
        result.fresh_margin = fresh
        if fresh_sign == sign and fresh >= REVALIDATION_FLOOR * margin:
            result.status = CONTACT_CERTIFIED
        else:
            logger.warning(f"{model.name}: revalidation failed (fresh margin {fresh:.4g}, "
                           f"sign {fresh_sign}, LP margin {margin:.4g})")

    if recorded_orbits is not None:
        result.obstruction = action_sign_obstruction(list(recorded_orbits))
        if result.obstruction == OBSTRUCTED and result.status == CONTACT_CERTIFIED:
            logger.warning(f"{model.name}: recorded actions are obstructed; certificate withheld")
            result.status = INCONCLUSIVE

    logger.info(f"{model.name}: {result.status} (margin {result.margin:.4g}, sign {result.sign:+d})")
    return result
