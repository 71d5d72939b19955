"""Eight-component matrix form of Maxwell's equations built on the Riemann-Silberstein-Weber vector."""

from .algebra import ConstantSet
from .grid import Grid
from .medium import MediumSpec, sample, units

__all__ = ["ConstantSet", "Grid", "MediumSpec", "sample", "units"]
__version__ = "0.1.0"
