from .diamond import (
    DiamondResult,
    build_diamond_norm,
    build_diamond_unital,
    solve_diamond_norm,
    solve_diamond_unital,
)
from .problem import LinearConstraint, ResidualReport, SdpProblem, SdpSolution, verify
from .solver import solve

__all__ = [
    "DiamondResult",
    "LinearConstraint",
    "ResidualReport",
    "SdpProblem",
    "SdpSolution",
    "build_diamond_norm",
    "build_diamond_unital",
    "solve",
    "solve_diamond_norm",
    "solve_diamond_unital",
    "verify",
]
