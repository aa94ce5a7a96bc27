"""
Invariants of Hamiltonian structures: self-linking and contact-type evidence
"""

from .contact import (
    CONTACT_CERTIFIED,
    INCONCLUSIVE,
    INFEASIBLE_ON_SAMPLES,
    OBSTRUCTED,
    UNOBSTRUCTED,
    CertificateResult,
    CertificationError,
    action_sign_obstruction,
    certify_contact,
    contact_density,
    contact_margin,
    sobol_points,
)
from .linking import LinkResult, linking_number

__all__ = [
    "CONTACT_CERTIFIED",
    "INCONCLUSIVE",
    "INFEASIBLE_ON_SAMPLES",
    "OBSTRUCTED",
    "UNOBSTRUCTED",
    "CertificateResult",
    "CertificationError",
    "action_sign_obstruction",
    "certify_contact",
    "contact_density",
    "contact_margin",
    "sobol_points",
    "LinkResult",
    "linking_number",
]
