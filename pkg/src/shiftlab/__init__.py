"""Shift spaces, pseudo-orbits and d-bar limit constructions on binary sequences."""
from .errors import (BudgetError, EmptyShiftError, HorizonError, InvalidArgument, NotFoundError,
                     ParseError, RatioViolation, ShiftLabError)
from .seq_core import IndexSet, SymSequence, density_window, run_set

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "EmptyShiftError", "HorizonError", "InvalidArgument", "NotFoundError",
    "ParseError", "RatioViolation", "ShiftLabError", "IndexSet", "SymSequence",
    "density_window", "run_set",
]
