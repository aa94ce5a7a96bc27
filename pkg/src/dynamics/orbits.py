"""
Closed characteristic search: return candidates, least-squares refinement, dedup
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares
from sklearn.neighbors import NearestNeighbors

try:
    from ..config import Config
    from ..forms.core import FormField
    from ..workers import parallel_map
except ImportError:
    from config import Config
    from forms.core import FormField
    from workers import parallel_map

from .integrator import DOP853Stepper, IntegrationError

logger = logging.getLogger(__name__)

SCAN_STOPS = 512
ACTION_SAMPLES = 256
LOOP_SAMPLES = 1024
DEDUP_DISTANCE = 1e-3
FAMILY_RATIO = 1e-6
CANDIDATES_PER_SEED = 2


@dataclass(frozen=True)
class SectionSpec:
    """Hyperplane {x[coordinate] = value}; seeds and refined orbits are pinned to it"""
    coordinate: int
    value: float
    constrain: bool = True

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {"coordinate": self.coordinate, "value": self.value, "constrain": self.constrain}


@dataclass
class OrbitRecord:
    """Closed characteristic found by the search"""
    base_point: np.ndarray
    period: float
    action: float
    residual: float
    multiplicity: int = 1
    family: bool = False
    parametrization: str = "characteristic"
    contractible: Optional[bool] = None
    winding: Optional[Tuple[int, ...]] = None
    endpoint: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            "base_point": [float(v) for v in self.base_point],
            "period": float(self.period),
            "action": float(self.action),
            "residual": float(self.residual),
            "multiplicity": int(self.multiplicity),
            "family": bool(self.family),
            "parametrization": self.parametrization,
            "contractible": self.contractible,
            "winding": list(self.winding) if self.winding is not None else None,
        }


def flow_map(model, points: np.ndarray, T: float, tol: float,
             parametrization: str = "characteristic") -> np.ndarray:
    """Time-T map of the lifted flow (no recentering, no wrapping)"""
    stepper = DOP853Stepper(lambda y: model.velocity(y, parametrization), rtol=tol, project=model.project)
    return stepper.integrate(np.atleast_2d(points), T)


def sample_loop(model, base: np.ndarray, period: float, samples: int, tol: float,
                parametrization: str = "characteristic") -> np.ndarray:
    """Points at uniformly spaced times t_k = k T / samples, k < samples"""
    times = np.linspace(0.0, period, samples + 1)
    points = np.empty((samples + 1, len(base)))
    points[0] = base

    def record(index: int, t: float, y: np.ndarray) -> None:
        points[index + 1] = y[0]

    stepper = DOP853Stepper(lambda y: model.velocity(y, parametrization), rtol=tol, project=model.project)
    stepper.integrate(np.atleast_2d(base), period, stops=times[1:], on_stop=record)
    return points[:-1]


def orbit_action(model, orbit: OrbitRecord, primitive: Optional[FormField] = None,
                 parametrization: Optional[str] = None, samples: int = ACTION_SAMPLES,
                 tol: Optional[float] = None) -> float:
    """
    ∮ α over the closed orbit, oriented by the characteristic field.

    The loop is sampled uniformly in time; for a periodic integrand the trapezoid
    rule converges spectrally. α(X) is evaluated pointwise, so the value does not
    depend on the parametrization used to trace the loop.
    """
    tol = Config.INTEGRATOR_TOL if tol is None else tol
    loop = sample_loop(model, orbit.base_point, orbit.period, samples, tol,
                       parametrization or orbit.parametrization)
    return float(np.mean(model.action_density(loop, primitive)) * orbit.period)


class OrbitSearch:
    """
    Poincaré-style search for closed characteristics of one model.

    Seeds are integrated in the lift; local minima of the distance to the seed
    become candidates, which are refined by least squares in (x, T).
    """

    def __init__(self, model, section: Optional[SectionSpec] = None, tol: Optional[float] = None,
                 parametrization: str = "characteristic", integrator_tol: Optional[float] = None):
        self.model = model
        self.section = section
        self.tol = Config.ORBIT_TOL if tol is None else tol
        self.integrator_tol = integrator_tol or min(Config.INTEGRATOR_TOL, 1e-3 * self.tol)
        self.parametrization = parametrization
        model.field(model.sample_points(1), parametrization)

    def seeds(self, count: int, seed: int) -> np.ndarray:
        points = self.model.sample_points(count, seed=seed)
        if self.section is not None:
            points[:, self.section.coordinate] = self.section.value
            points = self.model.project(points, fixed=self.section.coordinate)
        return points

    def candidates(self, seeds: np.ndarray, max_period: float) -> List[Tuple[np.ndarray, float]]:
        """Local minima of the return distance, at most two per seed"""
        stops = np.linspace(max_period / SCAN_STOPS, max_period, SCAN_STOPS)
        recorded = np.empty((SCAN_STOPS,) + seeds.shape)

        def record(index: int, t: float, y: np.ndarray) -> None:
            recorded[index] = y

        stepper = DOP853Stepper(lambda y: self.model.velocity(y, self.parametrization),
                                rtol=max(self.integrator_tol, 1e-9), project=self.model.project)
        stepper.integrate(seeds, max_period, stops=stops, on_stop=record)

        distance = np.linalg.norm(self.model.displacement(recorded, seeds[None]), axis=-1)
        found = []
        for j in range(len(seeds)):
            d = distance[:, j]
            scale = np.max(d)
            if scale <= 0:
                continue
            left = np.flatnonzero(d > 0.5 * scale)
            if not len(left):
                continue
            interior = np.arange(max(left[0], 1), len(d) - 1)
            minima = interior[(d[interior] <= d[interior - 1]) & (d[interior] <= d[interior + 1])
                              & (d[interior] < 0.5 * scale)]
            if not len(minima):
                continue
            best = minima[np.argsort(d[minima])[:CANDIDATES_PER_SEED]]
            found.extend((seeds[j], float(stops[i])) for i in sorted(best))
        logger.info(f"{self.model.name}: {len(found)} return candidates from {len(seeds)} seeds")
        return found

    def _residual(self, x: np.ndarray, end: np.ndarray, anchor: np.ndarray,
                  direction: np.ndarray) -> np.ndarray:
        parts = [self.model.displacement(end, x)]
        if self.section is not None and self.section.constrain:
            parts.append([x[self.section.coordinate] - self.section.value])
        else:
            parts.append([np.dot(x - anchor, direction)])
        parts.append(np.atleast_1d(self.model.constraint_residual(x)))
        return np.concatenate([np.ravel(p) for p in parts])

    def refine(self, x0: np.ndarray, T0: float, max_period: float) -> Optional[OrbitRecord]:
        """Least squares on displacement, section (or phase) and constraint rows"""
        d = len(x0)
        anchor = np.array(x0, dtype=float)
        direction = self.model.velocity(anchor[None], self.parametrization)[0]
        direction = direction / np.linalg.norm(direction)
        step = 1e-6

        def residual(z: np.ndarray) -> np.ndarray:
            end = flow_map(self.model, z[:d], z[d], self.integrator_tol, self.parametrization)[0]
            return self._residual(z[:d], end, anchor, direction)

        def jacobian(z: np.ndarray) -> np.ndarray:
            x, T = z[:d], z[d]
            batch = np.vstack([x, x + step * np.eye(d)])
            ends = flow_map(self.model, batch, T, self.integrator_tol, self.parametrization)
            base = self._residual(x, ends[0], anchor, direction)
            J = np.empty((len(base), d + 1))
            for i in range(d):
                J[:, i] = (self._residual(batch[i + 1], ends[i + 1], anchor, direction) - base) / step
            J[:, d] = 0.0
            J[:d, d] = self.model.velocity(ends[:1], self.parametrization)[0]
            return J

        lower = np.r_[np.full(d, -np.inf), 0.5 * T0]
        upper = np.r_[np.full(d, np.inf), min(1.5 * T0, 1.05 * max_period)]
        try:
            result = least_squares(residual, np.r_[x0, T0], jac=jacobian, method="trf",
                                   bounds=(lower, upper), xtol=1e-14, ftol=1e-14, gtol=1e-14,
                                   max_nfev=60)
        except (IntegrationError, np.linalg.LinAlgError, ValueError) as e:
            logger.warning(f"{self.model.name}: refinement from T={T0:.4g} failed: {e}")
            return None

        x, T = result.x[:d], float(result.x[d])
        end = flow_map(self.model, x, T, self.integrator_tol, self.parametrization)[0]
        closure = float(np.linalg.norm(self.model.displacement(end, x)))
        if closure >= self.tol or T > max_period * (1 + 1e-9) or np.isclose(T, upper[d]) \
                or np.isclose(T, lower[d]):
            logger.warning(f"{self.model.name}: refinement from T={T0:.4g} diverged "
                           f"(closure {closure:.3g}, T={T:.4g}); candidate dropped")
            return None

        singular = np.linalg.svd(result.jac[:, :d], compute_uv=False)
        family = bool(singular[-1] < FAMILY_RATIO * singular[0])
        contractible = self.model.is_contractible(x, end)
        winding = self.model.winding(x, end) if hasattr(self.model, "winding") else None
        record = OrbitRecord(base_point=x, period=T, action=0.0, residual=closure, family=family,
                             parametrization=self.parametrization, contractible=contractible,
                             winding=winding, endpoint=end)
        record.action = orbit_action(self.model, record, tol=self.integrator_tol)
        return record

    def _same_loop(self, record: OrbitRecord, kept: OrbitRecord, loop: np.ndarray) -> bool:
        if abs(record.period - kept.period) > 1e-5 * max(1.0, kept.period):
            return False
        if record.family and kept.family:
            return abs(record.action - kept.action) <= 1e-6 * max(1.0, abs(kept.action))
        base = self.model.loop_features(record.base_point[None])
        index = NearestNeighbors(n_neighbors=1).fit(loop).kneighbors(base, return_distance=False)[0, 0]
        closest = np.inf
        for a, b in ((index - 1, index), (index, index + 1)):
            p, q = loop[a % len(loop)], loop[b % len(loop)]
            segment = q - p
            s = np.clip(np.dot(base[0] - p, segment) / max(np.dot(segment, segment), 1e-300), 0, 1)
            closest = min(closest, float(np.linalg.norm(base[0] - p - s * segment)))
        return closest < DEDUP_DISTANCE

    def deduplicate(self, records: Sequence[OrbitRecord]) -> List[OrbitRecord]:
        """Merge refinements of the same loop; multiplicity counts the merged records"""
        kept: List[Tuple[OrbitRecord, np.ndarray]] = []
        for record in sorted(records, key=lambda r: (r.period, r.residual)):
            for orbit, loop in kept:
                if self._same_loop(record, orbit, loop):
                    orbit.multiplicity += 1
                    break
            else:
                points = sample_loop(self.model, record.base_point, record.period, LOOP_SAMPLES,
                                     self.integrator_tol, self.parametrization)
                kept.append((record, self.model.loop_features(points)))
        return [orbit for orbit, _ in kept]

    def run(self, seed_count: int, max_period: float, seed: int = 0,
            dedup: bool = True) -> List[OrbitRecord]:
        seeds = self.seeds(seed_count, seed)
        candidates = self.candidates(seeds, max_period)
        refined = parallel_map(lambda c: self.refine(c[0], c[1], max_period), candidates)
        records = [r for r in refined if r is not None]
        if dedup:
            records = self.deduplicate(records)
        logger.info(f"{self.model.name}: {len(records)} closed orbits "
                    f"({sum(r.family for r in records)} families) below T={max_period:g}")
        return records


def find_periodic_orbits(model, section: Optional[SectionSpec] = None, seeds: int = 16,
                         max_period: Optional[float] = None, tol: Optional[float] = None,
                         parametrization: str = "characteristic", seed: int = 0,
                         dedup: bool = True) -> List[OrbitRecord]:
    """
    Closed characteristics with period at most max_period.

    Args:
        model: HamiltonianStructureModel
        section: Optional section pinning one coordinate (else a phase condition is used)
        seeds: Number of seed points
        max_period: Longest period searched (model metadata hint, else 4π)
        tol: Closure tolerance (defaults to CHARFLOW_ORBIT_TOL)
        parametrization: "characteristic" or "hamiltonian"
        seed: Seed for the seed points
        dedup: Merge duplicates and family members

    Returns:
        OrbitRecords sorted by period; empty when nothing closes
    """
    if max_period is None:
        max_period = float(model.metadata.get("max_period", 4 * np.pi))
    if max_period <= 0 or seeds < 1:
        raise ValueError("max_period and seed count must be positive")
    return OrbitSearch(model, section, tol, parametrization).run(seeds, max_period, seed, dedup)
