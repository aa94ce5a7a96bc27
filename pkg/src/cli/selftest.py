"""
Invariant suite over the model catalog
"""

import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, List, Tuple

import numpy as np

try:
    from ..dynamics.orbits import find_periodic_orbits
    from ..ergodic.birkhoff import NOT_UNIQUELY_ERGODIC, ue_diagnostic
    from ..ergodic.currents import (CURRENT_SIGN, MeasureSpec, boundary_bound, current_action,
                                    structure_boundary_estimate)
    from ..forms.core import FormField
    from ..invariants.contact import (CONTACT_CERTIFIED, OBSTRUCTED, UNOBSTRUCTED,
                                      action_sign_obstruction, certify_contact)
    from ..invariants.linking import linking_number
    from ..models import (LevelSetSpec, MagneticSpec, build_hyperbolic_utb, build_levelset,
                          build_magnetic_torus, build_t3_contact, check_model_invariants)
except ImportError:
    from dynamics.orbits import find_periodic_orbits
    from ergodic.birkhoff import NOT_UNIQUELY_ERGODIC, ue_diagnostic
    from ergodic.currents import (CURRENT_SIGN, MeasureSpec, boundary_bound, current_action,
                                  structure_boundary_estimate)
    from forms.core import FormField
    from invariants.contact import (CONTACT_CERTIFIED, OBSTRUCTED, UNOBSTRUCTED,
                                    action_sign_obstruction, certify_contact)
    from invariants.linking import linking_number
    from models import (LevelSetSpec, MagneticSpec, build_hyperbolic_utb, build_levelset,
                        build_magnetic_torus, build_t3_contact, check_model_invariants)

logger = logging.getLogger(__name__)

GOLDEN = 1.6180339887
SPHERE_MC_SAMPLES = 10 ** 6

CheckFn = Callable[[], Tuple[bool, str]]


@dataclass
class SelftestCheck:
    name: str
    passed: bool
    detail: str
    seconds: float
    extended: bool = False

    def to_dict(self):
        """Convert to dictionary"""
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "seconds": round(self.seconds, 3), "extended": self.extended}


def sin_product_differential() -> FormField:
    """d(sin x sin y sin z) on the box chart"""

    def gradient(p: np.ndarray) -> np.ndarray:
        s, c = np.sin(p), np.cos(p)
        return np.stack([c[:, 0] * s[:, 1] * s[:, 2], s[:, 0] * c[:, 1] * s[:, 2],
                         s[:, 0] * s[:, 1] * c[:, 2]], axis=1)

    return FormField(1, 3, gradient, analytic_derivative=lambda: FormField.zero(2, 3),
                     name="d(sin x sin y sin z)")


def catalog() -> List[Tuple[Any, int]]:
    """Every catalog model with the grid resolution its volume checks use"""
    return [
        (build_t3_contact(), 32),
        (build_levelset(LevelSetSpec.sphere()), 32),
        (build_levelset(LevelSetSpec.ellipsoid(1.0, GOLDEN)), 32),
        (build_magnetic_torus(MagneticSpec(0.05)), 32),
        (build_hyperbolic_utb(0.5), 16),
    ]


def check_catalog_invariants() -> Tuple[bool, str]:
    models = [build_t3_contact(), build_levelset(LevelSetSpec.sphere()),
              build_levelset(LevelSetSpec.ellipsoid(1.0, GOLDEN)),
              build_magnetic_torus(MagneticSpec(0.05))]
    results = [check_model_invariants(m, n_points=200, n_comass=2000) for m in models]
    failed = [r.model for r in results if not r.passed]
    return not failed, f"failed: {failed}" if failed else f"{len(results)} models pass"


def check_t3_linking() -> Tuple[bool, str]:
    link = linking_number(build_t3_contact(), scheme="grid", resolution=64)
    exact = -(2 * np.pi) ** 3
    relative = abs(link.value - exact) / abs(exact)
    return relative < 5e-3, f"Lk = {link.value:.6f}, relative error {relative:.2e}"


def check_sphere_linking() -> Tuple[bool, str]:
    link = linking_number(build_levelset(LevelSetSpec.sphere()), scheme="grid", resolution=32)
    relative = abs(link.value - np.pi ** 2) / np.pi ** 2
    bound = 3 * link.combined_error() + 1e-9
    passed = relative < 1e-2 and link.value > 0 and link.boundary_gap < bound
    return passed, f"Lk = {link.value:.6f}, boundary gap {link.boundary_gap:.2e} (bound {bound:.2e})"


def check_sphere_monte_carlo() -> Tuple[bool, str]:
    link = linking_number(build_levelset(LevelSetSpec.sphere()), scheme="monte_carlo",
                          resolution=SPHERE_MC_SAMPLES)
    relative = abs(link.value - np.pi ** 2) / np.pi ** 2
    bound = 3 * link.combined_error() + 1e-9
    passed = relative < 1e-2 and link.value > 0 and link.boundary_gap < bound
    return passed, f"Lk = {link.value:.6f} from {link.samples} samples, boundary gap {link.boundary_gap:.2e}"


def check_primitive_independence() -> Tuple[bool, str]:
    model = build_t3_contact()
    base = linking_number(model, scheme="grid", resolution=32)
    shifted = linking_number(model, scheme="grid", resolution=32,
                             primitive=model.alpha + sin_product_differential())
    gap = abs(base.value - shifted.value)
    return gap < 1e-6 * abs(base.value), f"|dLk| = {gap:.3e}"


def check_structure_boundary() -> Tuple[bool, str]:
    details, passed = [], True
    for model, resolution in catalog():
        nu = MeasureSpec.volume(scheme="grid", resolution=resolution)
        residual, error = structure_boundary_estimate(model, nu)
        mass = current_action(model, nu).mass
        passed = passed and residual <= boundary_bound(mass, error)
        details.append(f"{model.name}: {residual:.2e}")
    return passed, ", ".join(details)


def check_current_identity() -> Tuple[bool, str]:
    """A(X⊗μ) = s·Lk on every catalog model with one global sign s"""
    details, passed = [], True
    for model, resolution in catalog():
        link = linking_number(model, scheme="grid", resolution=resolution)
        action = current_action(model, MeasureSpec.volume(scheme="grid", resolution=resolution))
        gap = abs(action.value - CURRENT_SIGN * link.value)
        passed = passed and gap <= 3 * (action.error + link.error) + 1e-9 * max(1.0, abs(link.value))
        details.append(f"{model.name}: {gap:.2e}")
    return passed, ", ".join(details)


def check_t3_certificate() -> Tuple[bool, str]:
    result = certify_contact(build_t3_contact(), basis_cap=3, sample_count=4096)
    passed = result.status == CONTACT_CERTIFIED and result.margin >= 0.9 and result.sign == -1
    return passed, f"{result.status}, margin {result.margin:.4f}, sign {result.sign:+d}"


def check_action_sign() -> Tuple[bool, str]:
    synthetic = action_sign_obstruction([1.0, -1.0])
    ellipsoid = action_sign_obstruction([1.0, GOLDEN])
    return synthetic == OBSTRUCTED and ellipsoid == UNOBSTRUCTED, f"{synthetic}, {ellipsoid}"


def check_ellipsoid_orbits() -> Tuple[bool, str]:
    model = build_levelset(LevelSetSpec.ellipsoid(1.0, GOLDEN))
    orbits = find_periodic_orbits(model, seeds=16)
    actions = sorted(o.action for o in orbits)
    passed = len(orbits) == 2 and np.allclose(actions, [1.0, GOLDEN], atol=1e-6)
    if not orbits:
        return False, "no closed orbits found"
    # the two closed orbits sit on opposite ends of the range of pi|z1|^2
    seeds = np.array([o.base_point for o in orbits] * 4)[:8]
    report = ue_diagnostic(model, seeds=seeds, horizons=(10.0, 100.0, 1000.0))
    deviation = float(np.max(report.deviations[report.observables.index("pi|z1|^2")]))
    passed = passed and deviation >= 0.5 and report.verdict == NOT_UNIQUELY_ERGODIC
    return passed, (f"actions {np.round(actions, 8).tolist()}, pi|z1|^2 deviation {deviation:.4f}, "
                    f"verdict {report.verdict}")


def check_magnetic_orbits() -> Tuple[bool, str]:
    model = build_magnetic_torus(MagneticSpec(0.05))
    orbits = find_periodic_orbits(model, seeds=16)
    periods = [o.period for o in orbits]
    near = [T for T in periods if abs(T - 2 * np.pi) < 0.1 * 2 * np.pi]
    report = ue_diagnostic(model, seeds=8)
    passed = bool(near) and report.verdict == NOT_UNIQUELY_ERGODIC
    return passed, f"periods {np.round(periods, 4).tolist()}, verdict {report.verdict}"


def check_hyperbolic() -> Tuple[bool, str]:
    elliptic = build_hyperbolic_utb(0.5)
    periods = np.array([o.period for o in find_periodic_orbits(elliptic, seeds=8)])
    expected = 2 * np.pi / np.sqrt(1 - 0.25)
    common = len(periods) > 0 and bool(np.all(np.abs(periods - expected) < 1e-6 * expected))

    horocycle = build_hyperbolic_utb(1.0)
    link = linking_number(horocycle)
    vanishing = abs(link.value) <= 3 * link.error
    curve = ue_diagnostic(horocycle, seeds=8, horizons=(1e2, 1e3, 1e4)).curve
    decreasing = bool(np.all(np.diff(curve) < 0))
    return common and vanishing and decreasing, (
        f"eps=0.5 periods {np.round(periods, 8).tolist()}; eps=1 Lk = {link.value:.3e} "
        f"+/- {link.error:.1e}, deviations {np.round(curve, 5).tolist()}"
    )


DEFAULT_CHECKS: List[Tuple[str, CheckFn]] = [
    ("catalog_invariants", check_catalog_invariants),
    ("t3_linking", check_t3_linking),
    ("sphere_linking", check_sphere_linking),
    ("sphere_monte_carlo", check_sphere_monte_carlo),
    ("primitive_independence", check_primitive_independence),
    ("structure_boundary", check_structure_boundary),
    ("current_lk_identity", check_current_identity),
    ("t3_certificate", check_t3_certificate),
    ("action_sign", check_action_sign),
    ("ellipsoid_orbits", check_ellipsoid_orbits),
    ("magnetic_orbits", check_magnetic_orbits),
]

EXTENDED_CHECKS: List[Tuple[str, CheckFn]] = [
    ("hyperbolic_bundle", check_hyperbolic),
]


def run_selftest(extended: bool = False) -> List[SelftestCheck]:
    """
    Run the invariant suite; every check runs even when an earlier one fails.

    Args:
        extended: Add the hyperbolic bundle checks

    Returns:
        One SelftestCheck per check
    """
    plan = [(name, fn, False) for name, fn in DEFAULT_CHECKS]
    if extended:
        plan += [(name, fn, True) for name, fn in EXTENDED_CHECKS]

    results = []
    for name, fn, is_extended in plan:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as e:
            logger.error(f"Selftest {name} raised: {e}")
            passed, detail = False, f"{type(e).__name__}: {e}"
        check = SelftestCheck(name, bool(passed), detail, time.perf_counter() - start, is_extended)
        log = logger.info if check.passed else logger.warning
        log(f"Selftest {name}: {'pass' if check.passed else 'FAIL'} ({detail})")
        results.append(check)
    return results
