"""Best-first branch-and-bound over LP relaxations with MIP-gap termination.

LP relaxations are delegated to HiGHS through scipy.optimize.linprog;
node selection, branching, the diving heuristic, and the gap certificate
live here.  Sequential solves are deterministic: best-bound node
selection with insertion-order tie breaking, branching on the most
fractional integer variable with ties by variable index.
"""

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ptlopt.milp.model import Model, verify_solution

INT_TOL = 1e-6
FEAS_TOL = 1e-6

_HIGHS_OPTIONS = {
    "presolve": True,
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
}


class SolverError(Exception):
    """Numerical failure in an LP relaxation or a rejected incumbent."""


@dataclass
class SolveLimits:
    """Termination limits; config keys mip_gap, time_limit_s, node_limit."""

    mip_gap: float = 0.01
    time_limit_s: float | None = None
    node_limit: int = 1_000_000


@dataclass
class Solution:
    """Solve result with the MIP-gap certificate.

    gap = (objective - bound) / max(|objective|, 1e-9) for minimization
    (mirrored for maximization); the reported assignment satisfies every
    constraint to 1e-6, checked by an independent row pass.
    """

    status: str                      # optimal-within-gap | time-limit | infeasible | unbounded
    objective: float | None = None
    best_bound: float | None = None
    gap: float | None = None
    assignment: dict | None = None
    node_count: int = 0
    max_violation: float = 0.0

    def __getitem__(self, name: str) -> float:
        return self.assignment[name]

    def value(self, name: str, default: float = 0.0) -> float:
        if self.assignment is None:
            return default
        return self.assignment.get(name, default)


@dataclass
class _LPData:
    c: np.ndarray
    A_ub: object
    b_ub: np.ndarray
    A_eq: object
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    int_idx: np.ndarray
    names: list
    sign: float          # +1 minimize, -1 internal negation for maximize
    constant: float


def _build_lp(model: Model) -> _LPData:
    n = len(model.variables)
    names = [v.name for v in model.variables]
    index = {name: i for i, name in enumerate(names)}
    sign = 1.0 if model.objective_sense == "min" else -1.0
    c = np.zeros(n)
    for var, coef in model.objective.items():
        c[index[var]] = sign * coef

    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for row in model.constraints:
        cols = [index[v] for v in row.coeffs]
        vals = list(row.coeffs.values())
        if row.sense == "==":
            eq_rows.append((cols, vals))
            eq_rhs.append(row.rhs)
        elif row.sense == "<=":
            ub_rows.append((cols, vals))
            ub_rhs.append(row.rhs)
        else:  # >=  ->  negate
            ub_rows.append((cols, [-v for v in vals]))
            ub_rhs.append(-row.rhs)

    def to_csr(rows):
        data, ri, ci = [], [], []
        for r, (cols, vals) in enumerate(rows):
            ri.extend([r] * len(cols))
            ci.extend(cols)
            data.extend(vals)
        return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))

    A_ub = to_csr(ub_rows) if ub_rows else None
    A_eq = to_csr(eq_rows) if eq_rows else None
    lb = np.array([v.lb for v in model.variables])
    ub = np.array([v.ub for v in model.variables])
    int_idx = np.array([i for i, v in enumerate(model.variables) if v.integer], dtype=int)
    return _LPData(c, A_ub, np.asarray(ub_rhs, dtype=float), A_eq,
                   np.asarray(eq_rhs, dtype=float), lb, ub, int_idx, names,
                   sign, model.objective_constant)


def _solve_lp(lp: _LPData, lb: np.ndarray, ub: np.ndarray):
    """Returns (status, objective, x) with status in {0 ok, 2 infeasible, 3 unbounded}."""
    if lp.c.size == 0:
        return 0, 0.0, np.zeros(0)
    bounds = np.column_stack([lb, ub])
    res = linprog(lp.c, A_ub=lp.A_ub, b_ub=lp.b_ub, A_eq=lp.A_eq, b_eq=lp.b_eq,
                  bounds=bounds, method="highs", options=_HIGHS_OPTIONS)
    if res.status == 4:
        # retry without presolve before giving up
        opts = dict(_HIGHS_OPTIONS, presolve=False)
        res = linprog(lp.c, A_ub=lp.A_ub, b_ub=lp.b_ub, A_eq=lp.A_eq, b_eq=lp.b_eq,
                      bounds=bounds, method="highs", options=opts)
    if res.status in (2, 3):
        return res.status, None, None
    if res.status != 0:
        raise SolverError(f"LP relaxation failed: {res.message}")
    return 0, float(res.fun), np.asarray(res.x)


def _fractionality(x: np.ndarray, int_idx: np.ndarray) -> np.ndarray:
    xi = x[int_idx]
    return np.abs(xi - np.round(xi))


def _dive(lp: _LPData, lb0: np.ndarray, ub0: np.ndarray, x0: np.ndarray,
          max_rounds: int = 80):
    """LP-guided dive: round near-integral binaries in bulk, fix the most
    fractional one, re-solve; flip once on infeasibility.  Deterministic."""
    lb, ub = lb0.copy(), ub0.copy()
    x = x0
    for _ in range(max_rounds):
        frac = _fractionality(x, lp.int_idx)
        if frac.size == 0 or frac.max() <= INT_TOL:
            return x
        snap = frac <= 0.01
        lb_try, ub_try = lb.copy(), ub.copy()
        for i in lp.int_idx[snap]:
            v = round(x[i])
            lb_try[i] = ub_try[i] = v
        worst_rel = int(np.argmax(frac))
        j = int(lp.int_idx[worst_rel])
        vj = round(x[j])
        lb_try[j] = ub_try[j] = vj
        status, _, xn = _solve_lp(lp, lb_try, ub_try)
        if status != 0:
            # retry fixing only j, flipped to the other side
            lb_try, ub_try = lb.copy(), ub.copy()
            flip = vj + 1 if vj <= x[j] else vj - 1
            flip = min(max(flip, lb[j]), ub[j])
            lb_try[j] = ub_try[j] = flip
            status, _, xn = _solve_lp(lp, lb_try, ub_try)
            if status != 0:
                return None
        lb, ub, x = lb_try, ub_try, xn
    return None


def solve(model: Model, limits: SolveLimits | None = None) -> Solution:
    """Solve a Model by branch and bound; returns a Solution with gap
    certificate.  Infeasibility and unboundedness are reported through
    the status field, not exceptions."""
    limits = limits or SolveLimits()
    lp = _build_lp(model)
    t0 = time.monotonic()

    def timed_out() -> bool:
        return limits.time_limit_s is not None and time.monotonic() - t0 > limits.time_limit_s

    status, obj, x = _solve_lp(lp, lp.lb, lp.ub)
    if status == 2:
        return Solution(status="infeasible")
    if status == 3:
        return Solution(status="unbounded")

    incumbent_x = None
    incumbent_obj = math.inf

    def _external(v: float) -> float:
        return lp.sign * v + lp.constant if v is not None else None

    def _gap(inc_internal: float, bound_internal: float) -> float:
        # (objective - bound) / max(|objective|, 1e-9) in the external sense;
        # the numerator equals the internal difference under either sense.
        raw = (inc_internal - bound_internal) / max(abs(_external(inc_internal)), 1e-9)
        return max(0.0, raw)

    def finish(status_str: str, bound: float) -> Solution:
        if incumbent_x is None:
            return Solution(status=status_str, best_bound=_external(bound),
                            node_count=nodes)
        assignment = {name: float(v) for name, v in zip(lp.names, incumbent_x)}
        violation = verify_solution(model, assignment, FEAS_TOL)
        if violation > FEAS_TOL:
            raise SolverError(f"incumbent failed verification ({violation:.2e})")
        gap = _gap(incumbent_obj, bound)
        return Solution(status=status_str,
                        objective=_external(incumbent_obj),
                        best_bound=_external(bound),
                        gap=gap, assignment=assignment, node_count=nodes,
                        max_violation=violation)

    nodes = 1
    frac = _fractionality(x, lp.int_idx)
    if frac.size == 0 or frac.max() <= INT_TOL:
        incumbent_x, incumbent_obj = x, obj
        return finish("optimal-within-gap", obj)

    xd = _dive(lp, lp.lb, lp.ub, x)
    if xd is not None:
        incumbent_x = xd
        incumbent_obj = float(lp.c @ xd)

    counter = 0
    heap = [(obj, counter, lp.lb, lp.ub, x)]
    last_dive_node = 0
    while heap:
        if timed_out() or nodes >= limits.node_limit:
            return finish("time-limit", heap[0][0])
        bound, _, lb, ub, x = heapq.heappop(heap)
        if incumbent_x is not None:
            if bound >= incumbent_obj - 1e-12:
                return finish("optimal-within-gap", min(bound, incumbent_obj))
            if _gap(incumbent_obj, bound) <= limits.mip_gap:
                return finish("optimal-within-gap", bound)
        elif nodes - last_dive_node >= 25:
            last_dive_node = nodes
            xd = _dive(lp, lb, ub, x)
            if xd is not None:
                do = float(lp.c @ xd)
                if do < incumbent_obj:
                    incumbent_x, incumbent_obj = xd, do

        # branch on the most fractional integer variable (lowest index on ties)
        frac = _fractionality(x, lp.int_idx)
        rel = int(np.argmax(frac))
        j = int(lp.int_idx[rel])
        floor_v = math.floor(x[j] + INT_TOL)
        for side, (blb, bub) in enumerate(((lb[j], floor_v), (floor_v + 1, ub[j]))):
            if blb > bub:
                continue
            lbn, ubn = lb.copy(), ub.copy()
            lbn[j], ubn[j] = blb, bub
            status, cobj, cx = _solve_lp(lp, lbn, ubn)
            nodes += 1
            if status != 0:
                continue
            cfrac = _fractionality(cx, lp.int_idx)
            if cfrac.max() <= INT_TOL:
                if cobj < incumbent_obj:
                    incumbent_x, incumbent_obj = cx, cobj
                continue
            if incumbent_x is not None and cobj >= incumbent_obj - 1e-12:
                continue
            counter += 1
            heapq.heappush(heap, (cobj, counter, lbn, ubn, cx))

    if incumbent_x is None:
        return Solution(status="infeasible", node_count=nodes)
    return finish("optimal-within-gap", incumbent_obj)
