from .assembly import (
    assemble_load,
    assemble_mass,
    assemble_mixed,
    assemble_mixed_gradient,
    assemble_stiffness,
    assemble_surface_advection,
    write_matrix_market,
)
from .solvers import IncompatibleRHSError, SolverError, solve_general, solve_spd
from .spaces import ElementData, FESpace, p1_space, p2_space, surface_p2_space

__all__ = [
    "ElementData",
    "FESpace",
    "IncompatibleRHSError",
    "SolverError",
    "assemble_load",
    "assemble_mass",
    "assemble_mixed",
    "assemble_mixed_gradient",
    "assemble_stiffness",
    "assemble_surface_advection",
    "p1_space",
    "p2_space",
    "solve_general",
    "solve_spd",
    "surface_p2_space",
    "write_matrix_market",
]
