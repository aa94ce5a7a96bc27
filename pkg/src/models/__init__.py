"""
Catalog of Hamiltonian structure models
"""

from .base import (
    BasisFunction,
    HamiltonianStructureModel,
    ModelCheck,
    check_model_invariants,
)
from .hyperbolic import (
    HyperbolicBundleModel,
    ReductionError,
    build_hyperbolic_utb,
    reduce_to_fundamental_domain,
)
from .levelset import LevelSetModel, LevelSetSpec, PolynomialHamiltonian, build_levelset
from .torus import (
    FourierTerm,
    MagneticSpec,
    MagneticTorusModel,
    PeriodicBoxModel,
    build_magnetic_torus,
    build_t3_contact,
)

__all__ = [
    "BasisFunction",
    "HamiltonianStructureModel",
    "ModelCheck",
    "check_model_invariants",
    "HyperbolicBundleModel",
    "ReductionError",
    "build_hyperbolic_utb",
    "reduce_to_fundamental_domain",
    "LevelSetModel",
    "LevelSetSpec",
    "PolynomialHamiltonian",
    "build_levelset",
    "FourierTerm",
    "MagneticSpec",
    "MagneticTorusModel",
    "PeriodicBoxModel",
    "build_magnetic_torus",
    "build_t3_contact",
]
