"""
Scenario runner: builds the model, runs the requested tasks and cross-checks them
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

try:
    from ..config import Config
    from ..dynamics.flow import Trajectory, integrate_characteristic
    from ..dynamics.orbits import OrbitRecord, SectionSpec, find_periodic_orbits
    from ..ergodic.birkhoff import NOT_UNIQUELY_ERGODIC, DiagnosticReport, UEThresholds, ue_diagnostic
    from ..ergodic.currents import (CURRENT_SIGN, MeasureSpec, current_action,
                                    boundary_bound, random_exact_forms,
                                    structure_boundary_estimate)
    from ..forms.quadrature import ROUNDING_FLOOR
    from ..invariants.contact import (CONTACT_CERTIFIED, UNOBSTRUCTED, CertificateResult,
                                      action_sign_obstruction, certify_contact)
    from ..invariants.linking import LinkResult, linking_number
    from ..models import (FourierTerm, LevelSetSpec, MagneticSpec, PolynomialHamiltonian,
                          build_hyperbolic_utb, build_levelset, build_magnetic_torus,
                          build_t3_contact)
except ImportError:
    from config import Config
    from dynamics.flow import Trajectory, integrate_characteristic
    from dynamics.orbits import OrbitRecord, SectionSpec, find_periodic_orbits
    from ergodic.birkhoff import NOT_UNIQUELY_ERGODIC, DiagnosticReport, UEThresholds, ue_diagnostic
    from ergodic.currents import (CURRENT_SIGN, MeasureSpec, current_action,
                                  boundary_bound, random_exact_forms,
                                  structure_boundary_estimate)
    from forms.quadrature import ROUNDING_FLOOR
    from invariants.contact import (CONTACT_CERTIFIED, UNOBSTRUCTED, CertificateResult,
                                    action_sign_obstruction, certify_contact)
    from invariants.linking import LinkResult, linking_number
    from models import (FourierTerm, LevelSetSpec, MagneticSpec, PolynomialHamiltonian,
                        build_hyperbolic_utb, build_levelset, build_magnetic_torus,
                        build_t3_contact)

from .config_schema import ConfigError, ModelConfig, ScenarioConfig

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"

TOOL_VERSION = "0.1.0"


@dataclass
class TaskOutcome:
    """Result or captured failure of one scenario task"""
    name: str
    status: str
    result: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    seconds: float = 0.0

    def to_dict(self, normalize: bool = False) -> Dict[str, Any]:
        """Convert to dictionary"""
        data = {"status": self.status, "result": self.result, "error": self.error}
        if not normalize:
            data["seconds"] = round(self.seconds, 6)
        return data


@dataclass
class CheckOutcome:
    """Pass/fail of one cross-task consistency property"""
    name: str
    status: str
    detail: str

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {"status": self.status, "detail": self.detail}


@dataclass
class ReportDocument:
    """Everything a scenario run produced"""
    config: Dict[str, Any]
    model: Dict[str, Any]
    tasks: Dict[str, TaskOutcome]
    checks: Dict[str, CheckOutcome]
    version: str = TOOL_VERSION
    schema_version: int = Config.REPORT_SCHEMA_VERSION
    seconds: float = 0.0
    orbits: List[OrbitRecord] = field(default_factory=list)
    diagnostic: Optional[DiagnosticReport] = None
    trajectory: Optional[Trajectory] = None
    currents: List[Dict[str, Any]] = field(default_factory=list)
    coordinates: Optional[List[str]] = None

    @property
    def failed_tasks(self) -> List[str]:
        return [name for name, outcome in self.tasks.items() if outcome.status == FAIL]

    @property
    def failed_checks(self) -> List[str]:
        return [name for name, outcome in self.checks.items() if outcome.status == FAIL]

    def to_dict(self, normalize: bool = False) -> Dict[str, Any]:
        """
        Convert to dictionary.

        Args:
            normalize: Drop wall-clock timings so repeated runs compare byte for byte
        """
        data = {
            "schema_version": self.schema_version,
            "tool_version": self.version,
            "config": self.config,
            "model": self.model,
            "tasks": {name: outcome.to_dict(normalize) for name, outcome in self.tasks.items()},
            "checks": {name: outcome.to_dict() for name, outcome in self.checks.items()},
        }
        if not normalize:
            data["timings"] = {"total_seconds": round(self.seconds, 6)}
        return data


def build_model(config: ModelConfig):
    """Catalog model for a validated model section"""
    if config.kind == "t3_contact":
        return build_t3_contact()
    if config.kind == "magnetic_torus":
        potential = tuple(FourierTerm(*term) for term in config.potential)
        spec = MagneticSpec(config.epsilon, potential) if potential else MagneticSpec(config.epsilon)
        return build_magnetic_torus(spec)
    if config.kind == "hyperbolic_utb":
        return build_hyperbolic_utb(config.epsilon)

    if config.hamiltonian == "sphere":
        spec = LevelSetSpec.sphere()
    elif config.hamiltonian == "ellipsoid":
        spec = LevelSetSpec.ellipsoid(config.a, config.b)
    else:
        spec = LevelSetSpec(PolynomialHamiltonian(config.terms), config.level, name="custom")
    if config.level is not None and config.hamiltonian != "custom":
        spec = LevelSetSpec(spec.hamiltonian, config.level, name=spec.name)
    return build_levelset(spec)


class ScenarioRunner:
    """Runs the tasks of one scenario in the fixed order, capturing failures per task"""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        try:
            self.model = build_model(config.model)
        except ValueError as e:
            raise ConfigError("model", str(e)) from e
        if config.integrator.parametrization == "hamiltonian" and self.model.hamiltonian_sign is None:
            raise ConfigError("integrator.parametrization",
                              f"model {self.model.name} has no Hamiltonian parametrization")
        scheme = config.quadrature.scheme
        if scheme is not None and scheme not in self.model.supported_schemes:
            raise ConfigError("quadrature.scheme", f"model {self.model.name} supports only "
                                                   f"{list(self.model.supported_schemes)}")

        self.link: Optional[LinkResult] = None
        self.shifted_link: Optional[LinkResult] = None
        self.volume_action = None
        self.boundary_residuals: Dict[str, Tuple[float, float]] = {}
        self.orbits: Optional[List[OrbitRecord]] = None
        self.diagnostic: Optional[DiagnosticReport] = None
        self.certificate: Optional[CertificateResult] = None
        self.trajectory: Optional[Trajectory] = None
        self.current_rows: List[Dict[str, Any]] = []

    @property
    def _quadrature(self) -> Dict[str, Any]:
        return {"scheme": self.config.quadrature.scheme, "resolution": self.config.quadrature.resolution}

    def run_lk(self) -> Dict[str, Any]:
        self.link = linking_number(self.model, seed=self.config.seed, **self._quadrature)
        shift = random_exact_forms(self.model, 1, seed=self.config.seed + 7)[0]
        self.shifted_link = linking_number(self.model, seed=self.config.seed,
                                           primitive=self.model.alpha + shift, **self._quadrature)
        result = self.link.to_dict()
        result["shifted_value"] = self.shifted_link.value
        result["shifted_error"] = self.shifted_link.error
        return result

    def _find_orbits(self) -> List[OrbitRecord]:
        if self.orbits is None:
            cfg = self.config.orbits
            section = (SectionSpec(cfg.section_coordinate, cfg.section_value)
                       if cfg.section_coordinate is not None else None)
            self.orbits = find_periodic_orbits(
                self.model, section=section, seeds=cfg.seeds, max_period=cfg.max_period,
                tol=cfg.tol, parametrization=self.config.integrator.parametrization,
                seed=self.config.seed,
            )
        return self.orbits

    def _measures(self) -> List[MeasureSpec]:
        measures = []
        for kind in self.config.currents.measures:
            if kind == "volume":
                measures.append(MeasureSpec.volume(seed=self.config.seed, **self._quadrature))
            elif kind == "empirical":
                start = sample_start(self.model, self.config.seed)
                horizon = self.config.currents.horizon
                samples = max(self.config.integrator.samples, int(10 * horizon))
                self.trajectory = integrate_characteristic(self.model, start, horizon,
                                                           tol=self.config.integrator.tol, samples=samples)
                measures.append(MeasureSpec.empirical(self.trajectory))
            else:
                orbits = self._find_orbits()
                if not orbits:
                    logger.warning(f"{self.model.name}: no closed orbit for the orbit measure")
                measures.extend(MeasureSpec.from_orbit(orbit) for orbit in orbits[:3])
        return measures

    def run_currents(self) -> Dict[str, Any]:
        self.current_rows = []
        for nu in self._measures():
            action = current_action(self.model, nu, seed=self.config.seed)
            residual, boundary_error = structure_boundary_estimate(
                self.model, nu, self.config.currents.exact_forms, seed=self.config.seed)
            if nu.kind == "volume":
                self.volume_action = action
                self.boundary_residuals["volume"] = (residual, boundary_error)
            row = {"measure": nu.to_dict(), "boundary_residual": residual, "boundary_error": boundary_error}
            row.update(action.to_dict())
            self.current_rows.append(row)
        return {"sign_convention": CURRENT_SIGN, "rows": self.current_rows}

    def run_orbits(self) -> Dict[str, Any]:
        orbits = self._find_orbits()
        result: Dict[str, Any] = {"count": len(orbits), "orbits": [o.to_dict() for o in orbits],
                                  "tol": self.config.orbits.tol}
        for key in ("closed_form_periods", "closed_form_actions"):
            if key in self.model.metadata:
                result[key] = self.model.metadata[key]
        return result

    def run_ergodicity(self) -> Dict[str, Any]:
        cfg = self.config.ergodicity
        self.diagnostic = ue_diagnostic(
            self.model, seeds=cfg.seeds, horizons=cfg.horizons,
            thresholds=UEThresholds(cfg.fail_threshold, cfg.decay_factor), seed=self.config.seed,
            parametrization=self.config.integrator.parametrization, tol=self.config.integrator.tol,
            **self._quadrature,
        )
        return self.diagnostic.to_dict()

    def run_certify(self) -> Dict[str, Any]:
        self.certificate = certify_contact(
            self.model, basis_cap=self.config.certify.basis_cap,
            sample_count=self.config.certify.samples, seed=self.config.seed,
            recorded_orbits=self.orbits,
        )
        return self.certificate.to_dict()

    def consistency_checks(self) -> Dict[str, CheckOutcome]:
        """Cross-task properties; a check without its inputs is skipped"""
        checks = [
            self._check_primitive_independence(),
            self._check_boundary_formula(),
            self._check_current_identity(),
            self._check_structure_boundary(),
            self._check_criterion(),
            self._check_lk_dichotomy(),
        ]
        return {check.name: check for check in checks}

    def _check_primitive_independence(self) -> CheckOutcome:
        name = "primitive_independence"
        if self.link is None or self.shifted_link is None:
            return CheckOutcome(name, SKIPPED, "lk not run")
        gap = abs(self.link.value - self.shifted_link.value)
        bound = 3 * (self.link.error + self.shifted_link.error) + ROUNDING_FLOOR * max(1.0, abs(self.link.value))
        return CheckOutcome(name, PASS if gap <= bound else FAIL, f"|dLk| = {gap:.3g}, bound {bound:.3g}")

    def _check_boundary_formula(self) -> CheckOutcome:
        name = "boundary_formula"
        if self.link is None or self.link.domain_value is None:
            return CheckOutcome(name, SKIPPED, "no domain-side value")
        gap = self.link.boundary_gap
        bound = 3 * self.link.combined_error() + ROUNDING_FLOOR * max(1.0, abs(self.link.value))
        return CheckOutcome(name, PASS if gap <= bound else FAIL, f"gap {gap:.3g}, bound {bound:.3g}")

    def _check_current_identity(self) -> CheckOutcome:
        name = "current_lk_identity"
        if self.link is None or self.volume_action is None:
            return CheckOutcome(name, SKIPPED, "needs lk and a volume current")
        gap = abs(self.volume_action.value - CURRENT_SIGN * self.link.value)
        bound = 3 * (self.volume_action.error + self.link.error) + ROUNDING_FLOOR * max(1.0, abs(self.link.value))
        return CheckOutcome(name, PASS if gap <= bound else FAIL,
                            f"|A - s*Lk| = {gap:.3g}, bound {bound:.3g}, s = {CURRENT_SIGN:+d}")

    def _check_structure_boundary(self) -> CheckOutcome:
        name = "structure_boundary"
        if "volume" not in self.boundary_residuals or self.volume_action is None:
            return CheckOutcome(name, SKIPPED, "no volume current")
        residual, boundary_error = self.boundary_residuals["volume"]
        bound = boundary_bound(self.volume_action.mass, max(boundary_error, self.volume_action.error))
        return CheckOutcome(name, PASS if residual <= bound else FAIL,
                            f"residual {residual:.3g}, bound {bound:.3g}")

    def _check_criterion(self) -> CheckOutcome:
        name = "criterion_consistency"
        if self.certificate is None or not self.orbits:
            return CheckOutcome(name, SKIPPED, "needs a certificate and closed orbits")
        if self.certificate.status != CONTACT_CERTIFIED:
            return CheckOutcome(name, PASS, f"certificate status {self.certificate.status}")
        obstruction = action_sign_obstruction(self.orbits)
        return CheckOutcome(name, PASS if obstruction == UNOBSTRUCTED else FAIL,
                            f"certified; actions {obstruction}")

    def _check_lk_dichotomy(self) -> CheckOutcome:
        name = "lk_contact_or_not_uniquely_ergodic"
        if self.link is None:
            return CheckOutcome(name, SKIPPED, "lk not run")
        if abs(self.link.value) <= 3 * self.link.error + ROUNDING_FLOOR:
            return CheckOutcome(name, PASS, "Lk vanishes within error; no constraint")
        if self.certificate is not None and self.certificate.status == CONTACT_CERTIFIED:
            return CheckOutcome(name, PASS, "certified contact")
        if self.diagnostic is not None and self.diagnostic.verdict == NOT_UNIQUELY_ERGODIC:
            return CheckOutcome(name, PASS, "not uniquely ergodic evidence")
        if self.certificate is None or self.diagnostic is None:
            return CheckOutcome(name, SKIPPED, "needs certify and ergodicity")
        return CheckOutcome(name, FAIL, f"Lk = {self.link.value:.6g} with certificate "
                                        f"{self.certificate.status} and verdict {self.diagnostic.verdict}")

    def run(self) -> ReportDocument:
        tasks: Dict[str, TaskOutcome] = {}
        handlers: Dict[str, Callable[[], Dict[str, Any]]] = {
            "lk": self.run_lk,
            "currents": self.run_currents,
            "orbits": self.run_orbits,
            "ergodicity": self.run_ergodicity,
            "certify": self.run_certify,
        }
        started = time.perf_counter()
        for task in self.config.ordered_tasks():
            logger.info(f"Running task {task} on {self.model.name}")
            task_start = time.perf_counter()
            try:
                outcome = TaskOutcome(task, PASS, handlers[task]())
            except Exception as e:
                logger.error(f"Task {task} failed on {self.model.name}: {e}")
                outcome = TaskOutcome(task, FAIL, error=f"{type(e).__name__}: {e}")
            outcome.seconds = time.perf_counter() - task_start
            logger.info(f"Task {task} finished in {outcome.seconds:.2f}s ({outcome.status})")
            tasks[task] = outcome

        checks = self.consistency_checks()
        for check in checks.values():
            if check.status == FAIL:
                logger.warning(f"Consistency check {check.name} failed: {check.detail}")

        coordinates = getattr(self.model, "coordinates", None)
        return ReportDocument(
            config=self.config.to_dict(),
            model=self.model.to_dict(),
            tasks=tasks,
            checks=checks,
            seconds=time.perf_counter() - started,
            orbits=list(self.orbits or []),
            diagnostic=self.diagnostic,
            trajectory=self.trajectory,
            currents=self.current_rows,
            coordinates=list(coordinates) if coordinates else None,
        )


def run_scenario(config: ScenarioConfig) -> ReportDocument:
    """
    Build the model and run the requested tasks in the order lk, currents, orbits,
    ergodicity, certify. Task failures are captured in the report; the run continues.

    Raises:
        ConfigError: the model cannot be built from the configuration
    """
    logger.info(f"Starting scenario {config.name or config.model.kind}")
    report = ScenarioRunner(config).run()
    logger.info(f"Scenario finished: {len(report.failed_tasks)} failed tasks, "
                f"{len(report.failed_checks)} failed checks")
    return report


def sample_start(model, seed: int) -> np.ndarray:
    """Reproducible start point for single trajectories"""
    return model.sample_points(1, seed=seed)[0]
