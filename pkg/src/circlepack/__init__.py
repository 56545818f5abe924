"""Circle packing in rectangular bins with exact rational arithmetic.

Knapsack, multiple knapsack, bin packing, strip and container variants
through gap-structured partitions, configuration LPs and recursive grid
placement.  See the README for the command line.
"""
from .assembler import (Packing, ShortDescription, short_description, solve_binpack, solve_container,
                        solve_knapsack, solve_multiknapsack, solve_strip, verify_structure)
from .errors import BudgetError, InputError, InvariantError, PackError, ParameterError
from .geometry import Bin, Circle, Instance, Placement, SideConstraint, verify_packing
from .partition import ScaleProfile, SchemeParams

__version__ = "0.1.0"

__all__ = [
    "Bin", "BudgetError", "Circle", "InputError", "Instance", "InvariantError", "PackError", "Packing",
    "ParameterError", "Placement", "ScaleProfile", "SchemeParams", "ShortDescription", "SideConstraint",
    "short_description", "solve_binpack", "solve_container", "solve_knapsack", "solve_multiknapsack",
    "solve_strip", "verify_packing", "verify_structure",
]
