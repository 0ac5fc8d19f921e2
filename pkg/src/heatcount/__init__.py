"""Full counting statistics of dissipated heat and Landauer-type bounds."""

from . import fcs, lindblad, quantum, vmodel
from .fcs import HeatDistribution, landauer_audit
from .quantum import INFINITE_BETA, DensityMatrix, Operator
from .vmodel import ModelParams

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "HeatDistribution",
    "INFINITE_BETA",
    "ModelParams",
    "Operator",
    "__version__",
    "fcs",
    "landauer_audit",
    "lindblad",
    "quantum",
    "vmodel",
]
