"""Exact lattice volumes of rational polytopes by signed decomposition of the dual cone."""

from .cone import (
    ConeSystem,
    DualGenerators,
    build_cone,
    check_full_dimensional,
    eliminate_equations,
    parse_input,
)
from .exact import FixedPointAccumulator, det_fraction_free, dual_basis_rows
from .oracle import monte_carlo, primal_volume
from .signed import VolumeResult, lawrence_volume
from .triangulation import hollow_triangulation, placing_triangulation

__all__ = [
    "ConeSystem",
    "DualGenerators",
    "FixedPointAccumulator",
    "VolumeResult",
    "build_cone",
    "check_full_dimensional",
    "det_fraction_free",
    "dual_basis_rows",
    "eliminate_equations",
    "hollow_triangulation",
    "lawrence_volume",
    "monte_carlo",
    "parse_input",
    "placing_triangulation",
    "primal_volume",
]

__version__ = "0.1.0"
