"""gcflab: numerical laboratory for alpha-Gauss curvature flow with flat sides."""

__version__ = "0.1.0"

from .params import FlowParams, derive_exponents, height_from_pressure, pressure_from_height

__all__ = [
    "FlowParams",
    "derive_exponents",
    "pressure_from_height",
    "height_from_pressure",
    "__version__",
]
