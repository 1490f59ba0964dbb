"""MILP model container: variables, linear constraints, objective."""

import math
from dataclasses import dataclass, field


class ModelError(Exception):
    """Invalid model edit (duplicate name, unknown variable, bad coefficient)."""


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    integer: bool = False


@dataclass
class Constraint:
    name: str
    coeffs: dict
    sense: str   # "<=", ">=", "=="
    rhs: float


_SENSES = ("<=", ">=", "==")


class Model:
    """A mixed-integer linear program under construction.

    Rows and columns are kept by name; matrices are materialized lazily
    by the solver.  Integer variables must carry finite bounds.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict = {}
        self.objective_sense: str = "min"
        self.objective_constant: float = 0.0
        self._var_index: dict = {}
        self._row_names: set = set()

    # ------------------------------------------------------------------ edits
    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf,
                     integer: bool = False) -> str:
        """Register a variable; returns its name."""
        if name in self._var_index:
            raise ModelError(f"duplicate variable name {name!r}")
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise ModelError(f"invalid bounds [{lb}, {ub}] for {name!r}")
        if integer and not (math.isfinite(lb) and math.isfinite(ub)):
            raise ModelError(f"integer variable {name!r} needs finite bounds")
        self._var_index[name] = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), integer))
        return name

    def add_binary(self, name: str) -> str:
        return self.add_variable(name, 0.0, 1.0, integer=True)

    def add_constraint(self, coeffs: dict, sense: str, rhs: float,
                       name: str | None = None) -> str:
        """Add a linear row  sum(coeffs[v] * v)  <sense>  rhs."""
        if sense not in _SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        if not math.isfinite(rhs):
            raise ModelError(f"nonfinite rhs {rhs!r}")
        for var, coef in coeffs.items():
            if var not in self._var_index:
                raise ModelError(f"constraint references unknown variable {var!r}")
            if not math.isfinite(coef):
                raise ModelError(f"nonfinite coefficient {coef!r} on {var!r}")
        if name is None:
            name = f"c{len(self.constraints)}"
        if name in self._row_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        self._row_names.add(name)
        row = Constraint(name, {v: float(c) for v, c in coeffs.items() if c != 0.0},
                         sense, float(rhs))
        self.constraints.append(row)
        return name

    def set_objective(self, coeffs: dict, sense: str = "min",
                      constant: float = 0.0) -> None:
        if sense not in ("min", "max"):
            raise ModelError(f"objective sense must be min or max, got {sense!r}")
        for var, coef in coeffs.items():
            if var not in self._var_index:
                raise ModelError(f"objective references unknown variable {var!r}")
            if not math.isfinite(coef):
                raise ModelError(f"nonfinite objective coefficient on {var!r}")
        if not math.isfinite(constant):
            raise ModelError("nonfinite objective constant")
        self.objective = {v: float(c) for v, c in coeffs.items()}
        self.objective_sense = sense
        self.objective_constant = float(constant)

    # ------------------------------------------------------------------ lookup
    def var(self, name: str) -> Variable:
        return self.variables[self._var_index[name]]

    def var_index(self, name: str) -> int:
        return self._var_index[name]

    def has_var(self, name: str) -> bool:
        return name in self._var_index

    def set_bounds(self, name: str, lb: float | None = None,
                   ub: float | None = None) -> None:
        v = self.var(name)
        if lb is not None:
            v.lb = float(lb)
        if ub is not None:
            v.ub = float(ub)
        if v.lb > v.ub:
            raise ModelError(f"crossed bounds on {name!r}")

    @property
    def n_binaries(self) -> int:
        return sum(1 for v in self.variables if v.integer and v.lb >= 0 and v.ub <= 1)

    @property
    def integer_names(self) -> list:
        return [v.name for v in self.variables if v.integer]

    def objective_value(self, assignment: dict) -> float:
        val = self.objective_constant
        for var, coef in self.objective.items():
            val += coef * assignment[var]
        return val


def verify_solution(model: Model, assignment: dict, tol: float = 1e-6) -> float:
    """Independent row-evaluation pass over the constraint dictionaries.

    Returns the maximum violation (bounds, integrality, and rows) and
    raises nothing; callers compare against their tolerance.
    """
    worst = 0.0
    for v in model.variables:
        x = assignment[v.name]
        worst = max(worst, v.lb - x, x - v.ub)
        if v.integer:
            worst = max(worst, abs(x - round(x)))
    for row in model.constraints:
        lhs = sum(c * assignment[v] for v, c in row.coeffs.items())
        if row.sense == "<=":
            worst = max(worst, lhs - row.rhs)
        elif row.sense == ">=":
            worst = max(worst, row.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - row.rhs))
    return worst
