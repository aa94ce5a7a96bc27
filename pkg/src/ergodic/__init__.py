"""
Ergodic diagnostics and structure currents
"""

from .birkhoff import (
    CONSISTENT,
    INCONCLUSIVE,
    NOT_UNIQUELY_ERGODIC,
    DiagnosticReport,
    UEThresholds,
    birkhoff_average,
    space_average,
    ue_diagnostic,
    ue_verdict,
)
from .currents import (
    CURRENT_SIGN,
    CurrentAction,
    MeasureSpec,
    current_action,
    current_pairing,
    boundary_bound,
    random_exact_forms,
    structure_boundary_estimate,
    structure_boundary_residual,
)

__all__ = [
    "CONSISTENT",
    "INCONCLUSIVE",
    "NOT_UNIQUELY_ERGODIC",
    "DiagnosticReport",
    "UEThresholds",
    "birkhoff_average",
    "space_average",
    "ue_diagnostic",
    "ue_verdict",
    "CURRENT_SIGN",
    "CurrentAction",
    "MeasureSpec",
    "current_action",
    "current_pairing",
    "boundary_bound",
    "random_exact_forms",
    "structure_boundary_estimate",
    "structure_boundary_residual",
]
