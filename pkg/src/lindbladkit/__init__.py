"""Infinite-time behavior of Lindblad master equations."""
__version__ = "0.1.0"

from .asymptotics import (AsymptoticDecomposition, RotatingMode, asymptotic_project,
                          coefficients, decompose, infinite_time_state)
from .estimator import AsymptoticProjector
from .liouvillian import Liouvillian, Model, build_liouvillian, dissipation_gap, spectrum
from .modelspec import load_model
from .operator_core import HilbertSpace
from .structure import block_structure, parity_partition
from .validation import NumericalError

__all__ = [
    "AsymptoticDecomposition", "AsymptoticProjector", "HilbertSpace", "Liouvillian", "Model",
    "NumericalError", "RotatingMode", "asymptotic_project", "block_structure",
    "build_liouvillian", "coefficients", "decompose", "dissipation_gap", "infinite_time_state",
    "load_model", "parity_partition", "spectrum", "__version__",
]
