"""Minimal MILP layer: model container, PWL embeddings with logarithmic
binary coding, a desk-scale branch-and-bound solver, and MPS export."""

from ptlopt.milp.model import (
    Model,
    Constraint,
    Variable,
    ModelError,
    verify_solution,
)
from ptlopt.milp.solve import Solution, SolveLimits, solve, SolverError
from ptlopt.milp.embed import (
    EmbeddingInfo,
    SharedBreakpoints,
    embed_pwl_1d,
    embed_pwl_simplex_log,
    embed_pwl_simplex_naive,
    embed_breakpoints_shared,
    DomainMismatchError,
    MeshNotGridCompatibleError,
)
from ptlopt.milp.mps import write_mps, read_mps
