"""Finite-element solvers for the penalized ternary and N-phase Cahn-Hilliard model."""

from .chemistry import ModelParams, SpreadingCoefficients, sigma_from_pairwise
from .linalg import SolverSettings, solve_sparse
from .mesh import Mesh, build_structured_mesh, mesh_for_spacing
from .schemes import PhaseState, SchemeConfig, init_state, run, step

__all__ = [
    "Mesh",
    "ModelParams",
    "PhaseState",
    "SchemeConfig",
    "SolverSettings",
    "SpreadingCoefficients",
    "build_structured_mesh",
    "init_state",
    "mesh_for_spacing",
    "run",
    "sigma_from_pairwise",
    "solve_sparse",
    "step",
]
