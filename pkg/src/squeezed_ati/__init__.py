"""Direct above-threshold ionization driven by squeezed light.

Submodules: ``qoptics`` (truncated Fock-space kernel), ``field`` (driver and
displacements), ``saddle`` (saddle-point solver), ``dati`` (observables) and
``cli`` (experiment runner).
"""

from .errors import (
    ComputeError, ConfigError, DimensionMismatch, Diverged, GridTooSmall, NoSeed,
    SingularHessian, SqueezedATIError, TruncationError,
)
from .field import LaserParams, SqueezeParams

__version__ = "0.1.0"

__all__ = [
    "ComputeError", "ConfigError", "DimensionMismatch", "Diverged", "GridTooSmall",
    "LaserParams", "NoSeed", "SingularHessian", "SqueezeParams", "SqueezedATIError",
    "TruncationError",
]
