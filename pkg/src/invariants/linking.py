"""
Self-linking number Lk(ω) = ∫_M α∧ω
"""

import logging
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional

import numpy as np

try:
    from ..forms.core import FormField, wedge_eval
    from ..forms.quadrature import integrate_density
except ImportError:
    from forms.core import FormField, wedge_eval
    from forms.quadrature import integrate_density

logger = logging.getLogger(__name__)

# absolute error floor relative to the coefficient scale, used when Lk nearly vanishes
CANCELLATION_FLOOR = 1e-12


@dataclass
class LinkResult:
    """Lk(ω) with its quadrature descriptor and, for level sets, the domain-side value"""
    value: float
    error: float
    scheme: str
    resolution: int
    samples: int
    primitive: str
    domain_value: Optional[float] = None
    domain_error: Optional[float] = None
    exact: Optional[float] = None

    @property
    def boundary_gap(self) -> Optional[float]:
        """|surface value - ∫_W ω^2| (level sets only)"""
        if self.domain_value is None:
            return None
        return abs(self.value - self.domain_value)

    def combined_error(self) -> float:
        return self.error + (self.domain_error or 0.0)

    def agrees_with(self, other: "LinkResult", factor: float = 3.0) -> bool:
        return abs(self.value - other.value) <= factor * (self.error + other.error)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        data = asdict(self)
        data["boundary_gap"] = self.boundary_gap
        return data


def _cancellation_floor(model, alpha: FormField, scheme: Optional[str],
                        resolution: Optional[int], seed: int) -> float:
    """Rounding bound for integrands that cancel pointwise"""
    def magnitude(points, frames):
        return (np.sum(np.abs(alpha.coefficients(points)), axis=1)
                * np.sum(np.abs(model.omega.coefficients(points)), axis=1)
                * np.abs(model.mu.density(points, frames)))

    scale = integrate_density(model, magnitude, scheme=scheme, resolution=resolution, seed=seed)
    return CANCELLATION_FLOOR * scale.value


def linking_number(model, scheme: Optional[str] = None, resolution: Optional[int] = None,
                   seed: int = 0, primitive: Optional[FormField] = None) -> LinkResult:
    """
    Integrate α∧ω over the model against its orientation.

    Args:
        model: HamiltonianStructureModel
        scheme: "grid" or "monte_carlo" (model default when None)
        resolution: Grid nodes per axis or Monte Carlo samples
        seed: Monte Carlo seed
        primitive: Primitive to use instead of the model's α

    Returns:
        LinkResult; level-set models also carry ∫_W ω^2 from an independent sample
    """
    alpha = primitive or model.alpha
    estimate = integrate_density(
        model, lambda p, frames: wedge_eval(alpha, model.omega, p, frames),
        scheme=scheme, resolution=resolution, seed=seed,
    )
    error = estimate.error
    if abs(estimate.value) <= 1e3 * error:
        error = max(error, _cancellation_floor(model, alpha, scheme, resolution, seed))
    result = LinkResult(
        value=estimate.value,
        error=error,
        scheme=estimate.scheme,
        resolution=estimate.resolution,
        samples=estimate.samples,
        primitive=alpha.name,
        exact=model.metadata.get("lk_exact"),
    )
    if hasattr(model, "domain_integral"):
        domain = model.domain_integral(scheme=scheme, resolution=resolution, seed=seed + 1)
        result.domain_value = domain.value
        result.domain_error = domain.error

    logger.info(f"Lk({model.name}) = {result.value:.10g} +/- {result.error:.3g} [{result.scheme}]")
    return result
