"""Techno-economic optimization toolkit for a 1 MW power-to-liquid plant.

Couples the plant operating point (co-SOEC cell voltage) with stage-wise
heat exchanger network synthesis in a single MILP, traces the
efficiency/production-cost Pareto front with a double-sided epsilon
constraint sweep, and studies electricity / CO2 price scenarios through
exact linear front shifting.
"""

from ptlopt.pwl import PWLModel, Breakpoints1D, SimplexMesh, fit_1d, fit_nd, evaluate
from ptlopt.milp import Model, Solution, SolveLimits, solve, write_mps, read_mps

__version__ = "0.1.0"
