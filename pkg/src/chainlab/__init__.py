"""Numerical lab for the infinite harmonic chain built on integer-order Bessel kernels."""
from .bessel import BesselRow, bessel_j, bessel_j_oracle, bessel_row
from .errors import ConstructionError, DomainError, PreconditionError
from .propagator import LatticeWindow, evolve, kernel_row, light_cone_window
from .report import ExperimentReport

__version__ = "0.1.0"

__all__ = [
    "BesselRow",
    "bessel_j",
    "bessel_j_oracle",
    "bessel_row",
    "ConstructionError",
    "DomainError",
    "PreconditionError",
    "LatticeWindow",
    "evolve",
    "kernel_row",
    "light_cone_window",
    "ExperimentReport",
]
