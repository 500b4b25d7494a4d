"""Arithmetic multiplicities of linear configurations over finite abelian groups."""

__version__ = "0.1.0"

from .errors import CapExceeded, ConfigError, InequalityViolation, MulticommonError, NoConstruction
from .group_core import DensityTable, GroupElement, GroupSpec, make_group, vector_space
from .linear_forms import FormSystem, detect_four_ap, detect_proportional_pair, induce_system
from .multiplicity import (
    CounterexampleRecipe,
    PhaseAtom,
    min_coloring,
    monochromatic_pair,
    multiplicity_direct,
    multiplicity_structured,
)

__all__ = [
    "CapExceeded",
    "ConfigError",
    "CounterexampleRecipe",
    "DensityTable",
    "FormSystem",
    "GroupElement",
    "GroupSpec",
    "InequalityViolation",
    "MulticommonError",
    "NoConstruction",
    "PhaseAtom",
    "detect_four_ap",
    "detect_proportional_pair",
    "induce_system",
    "make_group",
    "min_coloring",
    "monochromatic_pair",
    "multiplicity_direct",
    "multiplicity_structured",
    "vector_space",
]
