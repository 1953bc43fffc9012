"""Verification lab for quantitative homogenisation of evolutionary equations.

The package certifies first-order (in the period eps) error estimates for
wave, heat and thermoelastic equations with rapidly oscillating periodic
coefficients: cell correctors and effective tensors, single-fibre
(quasimomentum x temporal frequency) error bounds, and full space-time
convergence studies on a periodic box.
"""

from .errors import ConfigError, HomoglabError, NoConvergence, NonElliptic
from .torus import (
    CellGrid,
    CoefficientCell,
    SpectralField,
    cell_mean,
    constant_coefficient,
    ellipticity_check,
    h1_norm,
    inner,
    norm,
    replicate,
    scalar_coefficient,
    shifted_divergence,
    shifted_gradient,
    to_frequency,
    to_physical,
)

__all__ = [
    "CellGrid",
    "CoefficientCell",
    "ConfigError",
    "HomoglabError",
    "NoConvergence",
    "NonElliptic",
    "SpectralField",
    "cell_mean",
    "constant_coefficient",
    "ellipticity_check",
    "h1_norm",
    "inner",
    "norm",
    "replicate",
    "scalar_coefficient",
    "shifted_divergence",
    "shifted_gradient",
    "to_frequency",
    "to_physical",
]

__version__ = "0.1.0"
