"""
Characteristic flows and closed characteristics
"""

from .flow import (
    BatchFlow,
    Trajectory,
    characteristic_field,
    flow_jacobian_determinant,
    integrate_batch,
    integrate_characteristic,
)
from .integrator import DOP853Stepper, IntegrationError, StepStats
from .orbits import OrbitRecord, OrbitSearch, SectionSpec, find_periodic_orbits, orbit_action

__all__ = [
    "BatchFlow",
    "Trajectory",
    "characteristic_field",
    "flow_jacobian_determinant",
    "integrate_batch",
    "integrate_characteristic",
    "DOP853Stepper",
    "IntegrationError",
    "StepStats",
    "OrbitRecord",
    "OrbitSearch",
    "SectionSpec",
    "find_periodic_orbits",
    "orbit_action",
]
