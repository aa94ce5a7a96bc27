"""
Exterior algebra and quadrature for charflow
"""

from .core import (
    BoxChart,
    Chart,
    FormField,
    GroupChart,
    VolumeForm,
    exterior_derivative,
    exterior_derivative_eval,
    wedge,
    wedge_eval,
)
from .quadrature import IntegralEstimate, QuadratureNodes, integrate_density, integrate_top_form

__all__ = [
    "BoxChart",
    "Chart",
    "FormField",
    "GroupChart",
    "VolumeForm",
    "exterior_derivative",
    "exterior_derivative_eval",
    "wedge",
    "wedge_eval",
    "IntegralEstimate",
    "QuadratureNodes",
    "integrate_density",
    "integrate_top_form",
]
