"""Half-space Stokes flows generated by localized boundary flux.

Evaluates the explicit solution kernels of the half-space Stokes system
(heat kernel, fundamental solution, the layer functions A, B, C_i, the
Golovkin tensor), the flow they generate from a compactly supported,
Hoelder-in-time boundary flux, and the quantitative facts about that flow:
pointwise envelopes, boundary-gradient blow-up rates, dipole sign regions,
and a desk-scale Picard iteration over a surrogate Green-envelope kernel.
"""

__version__ = "0.1.0"

from .errors import (
    StokesFluxError,
    DimensionError,
    DomainError,
    SingularPointError,
    ConfigError,
    QuadratureError,
)
from .quad import QuadSpec, QuadResult, Singularity
from .flux import FluxSpec

__all__ = [
    "StokesFluxError",
    "DimensionError",
    "DomainError",
    "SingularPointError",
    "ConfigError",
    "QuadratureError",
    "QuadSpec",
    "QuadResult",
    "Singularity",
    "FluxSpec",
]
