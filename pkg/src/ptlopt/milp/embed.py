"""Embeddings of piecewise-linear models into MILP constraints.

1-D curves embed binary-free when convexity and the declared objective
pressure allow an epigraph/hypograph form; otherwise a convex-combination
formulation with logarithmically coded segment selection is used
(reflected Gray codes).  Simplex meshes on tensor grids embed with
disaggregated convex-combination weights and structured log codes:
Gray-coded interval bits per axis plus simplex-selection bits per cell.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ptlopt.milp.model import Model, ModelError
from ptlopt.pwl import Breakpoints1D, PWLModel, SimplexMesh

SLOPE_TOL = 1e-9


class DomainMismatchError(ModelError):
    """x-variable bounds do not match the PWL model's domain box."""


class MeshNotGridCompatibleError(ModelError):
    """The mesh lacks the tensor-grid structure the log coding needs."""


@dataclass
class EmbeddingInfo:
    mode: str
    binaries: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    @property
    def n_binaries(self) -> int:
        return len(self.binaries)


def _gray(value: int, bits: int) -> list:
    g = value ^ (value >> 1)
    return [(g >> p) & 1 for p in range(bits)]


def _binary(value: int, bits: int) -> list:
    return [(value >> p) & 1 for p in range(bits)]


def _nbits(count: int) -> int:
    return 0 if count <= 1 else math.ceil(math.log2(count))


def _check_bounds(model: Model, var: str, lo: float, hi: float) -> None:
    v = model.var(var)
    span = max(1.0, abs(hi - lo))
    if abs(v.lb - lo) > 1e-9 * span or abs(v.ub - hi) > 1e-9 * span:
        raise DomainMismatchError(
            f"{var!r} bounds [{v.lb}, {v.ub}] do not match domain [{lo}, {hi}]")


def _classify_curvature(slopes: np.ndarray) -> str:
    d = np.diff(slopes)
    if d.size == 0 or np.all(np.abs(d) <= SLOPE_TOL):
        return "affine"
    if np.all(d >= -SLOPE_TOL):
        return "convex"
    if np.all(d <= SLOPE_TOL):
        return "concave"
    return "general"


def embed_pwl_1d(model: Model, pwl: PWLModel, x_var: str, y_var: str,
                 pressure: str | None = None, encoding: str = "log",
                 stem: str | None = None) -> EmbeddingInfo:
    """Constrain ``y_var`` to the 1-D piecewise-linear graph of ``pwl``.

    A convex curve under minimizing pressure on y (or a concave curve
    under maximizing pressure) embeds as its epigraph (hypograph) with
    zero binaries; the caller declares the pressure direction.  Affine
    curves collapse to a single equality row.  Everything else uses a
    convex combination over the knots with ceil(log2(segments)) binaries
    ("log") or one binary per segment ("naive").

    Returns EmbeddingInfo listing created binaries, lambda weights and rows.
    """
    if not isinstance(pwl.data, Breakpoints1D):
        raise ModelError("embed_pwl_1d needs a 1-D breakpoint model")
    bp = pwl.data
    lo, hi = pwl.domain[0]
    _check_bounds(model, x_var, lo, hi)
    stem = stem or f"p1d{len(model.variables)}"
    info = EmbeddingInfo(mode="")

    slopes = bp.segment_slopes()
    shape = _classify_curvature(slopes)
    if shape == "affine":
        m = slopes[0]
        rhs = bp.ys[0] - m * bp.xs[0]
        info.rows.append(model.add_constraint({y_var: 1.0, x_var: -m}, "==", rhs,
                                              name=f"{stem}_aff"))
        info.mode = "affine"
        return info
    if shape == "convex" and pressure == "min":
        for s, m in enumerate(slopes):
            rhs = bp.ys[s] - m * bp.xs[s]
            info.rows.append(model.add_constraint({y_var: 1.0, x_var: -m}, ">=", rhs,
                                                  name=f"{stem}_epi{s}"))
        info.mode = "epigraph"
        return info
    if shape == "concave" and pressure == "max":
        for s, m in enumerate(slopes):
            rhs = bp.ys[s] - m * bp.xs[s]
            info.rows.append(model.add_constraint({y_var: 1.0, x_var: -m}, "<=", rhs,
                                                  name=f"{stem}_hyp{s}"))
        info.mode = "hypograph"
        return info

    block = _lambda_block_1d(model, x_var, bp.xs, stem, encoding, info)
    row = {y_var: 1.0}
    row.update({lam: -float(y) for lam, y in zip(block, bp.ys)})
    info.rows.append(model.add_constraint(row, "==", 0.0, name=f"{stem}_y"))
    info.mode = f"lambda-{encoding}"
    return info


def _lambda_block_1d(model: Model, x_var: str, xs: np.ndarray, stem: str,
                     encoding: str, info: EmbeddingInfo) -> list:
    """Knot weights lambda plus segment-selection rows; returns lambda names."""
    n_knots = xs.size
    n_seg = n_knots - 1
    lams = [model.add_variable(f"{stem}_l{t}", 0.0, 1.0) for t in range(n_knots)]
    info.lambdas.extend(lams)
    info.rows.append(model.add_constraint({l: 1.0 for l in lams}, "==", 1.0,
                                          name=f"{stem}_sum"))
    xrow = {x_var: 1.0}
    xrow.update({lam: -float(x) for lam, x in zip(lams, xs)})
    info.rows.append(model.add_constraint(xrow, "==", 0.0, name=f"{stem}_x"))

    if n_seg <= 1:
        return lams
    if encoding == "log":
        bits = _nbits(n_seg)
        codes = [_gray(s, bits) for s in range(n_seg)]
        ys = [model.add_binary(f"{stem}_b{p}") for p in range(bits)]
        info.binaries.extend(ys)
        for p in range(bits):
            for bitval in (0, 1):
                # knots all of whose segments carry the opposite bit must vanish
                forced = [t for t in range(n_knots)
                          if all(codes[s][p] != bitval
                                 for s in (t - 1, t) if 0 <= s < n_seg)]
                if not forced:
                    continue
                row = {lams[t]: 1.0 for t in forced}
                if bitval == 0:
                    row[ys[p]] = -1.0   # sum <= y_p
                    info.rows.append(model.add_constraint(row, "<=", 0.0,
                                                          name=f"{stem}_s{p}a"))
                else:
                    row[ys[p]] = 1.0    # sum <= 1 - y_p
                    info.rows.append(model.add_constraint(row, "<=", 1.0,
                                                          name=f"{stem}_s{p}b"))
    elif encoding == "naive":
        bs = [model.add_binary(f"{stem}_b{s}") for s in range(n_seg)]
        info.binaries.extend(bs)
        info.rows.append(model.add_constraint({b: 1.0 for b in bs}, "==", 1.0,
                                              name=f"{stem}_one"))
        for t in range(n_knots):
            row = {lams[t]: 1.0}
            for s in (t - 1, t):
                if 0 <= s < n_seg:
                    row[bs[s]] = -1.0
            info.rows.append(model.add_constraint(row, "<=", 0.0,
                                                  name=f"{stem}_k{t}"))
    else:
        raise ModelError(f"unknown encoding {encoding!r}")
    return lams


@dataclass
class SharedBreakpoints:
    """One knot-weight block over a shared x variable.

    Any number of output variables can be linked to the same weights, so
    a family of curves sampled on the same knots costs one set of
    binaries.
    """

    x_var: str
    xs: np.ndarray
    lambda_names: list
    info: EmbeddingInfo
    stem: str
    _n_outputs: int = 0

    def add_output(self, model: Model, name: str, values, lb: float | None = None,
                   ub: float | None = None) -> str:
        """Create variable ``name`` equal to the interpolant of ``values``."""
        values = np.asarray(values, dtype=float)
        if values.size != self.xs.size:
            raise ModelError("one value per knot required")
        if lb is None:
            lb = float(values.min())
        if ub is None:
            ub = float(values.max())
        model.add_variable(name, lb, ub)
        row = {name: 1.0}
        row.update({lam: -float(v) for lam, v in zip(self.lambda_names, values)})
        self.info.rows.append(
            model.add_constraint(row, "==", 0.0, name=f"{self.stem}_o{self._n_outputs}"))
        self._n_outputs += 1
        return name

    def output_expr(self, values) -> dict:
        """Coefficient dict for the interpolant, for inlining into rows."""
        values = np.asarray(values, dtype=float)
        return {lam: float(v) for lam, v in zip(self.lambda_names, values)}


def embed_breakpoints_shared(model: Model, x_var: str, xs, stem: str,
                             encoding: str = "log") -> SharedBreakpoints:
    """Create a shared knot-weight block bound to ``x_var`` over knots ``xs``."""
    xs = np.asarray(xs, dtype=float)
    _check_bounds(model, x_var, float(xs[0]), float(xs[-1]))
    info = EmbeddingInfo(mode=f"shared-{encoding}")
    lams = _lambda_block_1d(model, x_var, xs, stem, encoding, info)
    return SharedBreakpoints(x_var=x_var, xs=xs, lambda_names=lams, info=info, stem=stem)


def _mesh_codes(mesh: SimplexMesh):
    """Structured code per simplex: Gray bits per axis plus selection bits.

    Total bits = sum over axes of ceil(log2(cells_axis)) plus
    ceil(log2(d!)) for the simplex within the cell.
    """
    d = mesh.dim
    cells = mesh.cells_per_axis
    n_perm = math.factorial(d)
    bits_axes = [_nbits(c) for c in cells]
    bits_perm = _nbits(n_perm)
    total_bits = sum(bits_axes) + bits_perm
    codes = []
    n_simplices = int(np.prod(cells)) * n_perm
    for t in range(n_simplices):
        cell_flat, perm = divmod(t, n_perm)
        cell_multi = np.unravel_index(cell_flat, cells) if d > 1 else (cell_flat,)
        bits = []
        for a in range(d):
            bits.extend(_gray(int(cell_multi[a]), bits_axes[a]))
        bits.extend(_binary(perm, bits_perm))
        codes.append(bits)
    return codes, total_bits


def embed_pwl_simplex_log(model: Model, pwl: PWLModel, x_vars: list, y_var: str,
                          stem: str | None = None) -> EmbeddingInfo:
    """Constrain ``y_var`` to a simplex-mesh interpolant with log coding.

    Uses disaggregated convex-combination weights (one per simplex
    vertex) so the selection code can be arbitrary; any feasible integer
    assignment selects exactly one simplex and y equals the barycentric
    interpolant there.
    """
    if not isinstance(pwl.data, SimplexMesh):
        raise MeshNotGridCompatibleError("a tensor-grid SimplexMesh is required")
    return _embed_simplex(model, pwl, x_vars, y_var, stem, log=True)


def embed_pwl_simplex_naive(model: Model, pwl: PWLModel, x_vars: list, y_var: str,
                            stem: str | None = None) -> EmbeddingInfo:
    """Reference encoding with one binary per simplex (for audits/tests)."""
    if not isinstance(pwl.data, SimplexMesh):
        raise MeshNotGridCompatibleError("a tensor-grid SimplexMesh is required")
    return _embed_simplex(model, pwl, x_vars, y_var, stem, log=False)


def _embed_simplex(model: Model, pwl: PWLModel, x_vars: list, y_var: str,
                   stem: str | None, log: bool) -> EmbeddingInfo:
    mesh: SimplexMesh = pwl.data
    d = mesh.dim
    if len(x_vars) != d:
        raise ModelError(f"expected {d} x variables, got {len(x_vars)}")
    for a, (lo, hi) in enumerate(pwl.domain):
        _check_bounds(model, x_vars[a], lo, hi)
    stem = stem or f"pnd{len(model.variables)}"
    info = EmbeddingInfo(mode="simplex-log" if log else "simplex-naive")

    simplices = mesh.simplices
    verts = mesh.vertices
    vals = mesh.vertex_values
    n_simplices = simplices.shape[0]

    lam = [[model.add_variable(f"{stem}_l{t}_{k}", 0.0, 1.0) for k in range(d + 1)]
           for t in range(n_simplices)]
    info.lambdas.extend(name for row in lam for name in row)

    info.rows.append(model.add_constraint(
        {name: 1.0 for row in lam for name in row}, "==", 1.0, name=f"{stem}_sum"))
    for a in range(d):
        row = {x_vars[a]: 1.0}
        for t in range(n_simplices):
            for k in range(d + 1):
                row[lam[t][k]] = row.get(lam[t][k], 0.0) - float(verts[simplices[t, k], a])
        info.rows.append(model.add_constraint(row, "==", 0.0, name=f"{stem}_x{a}"))
    yrow = {y_var: 1.0}
    for t in range(n_simplices):
        for k in range(d + 1):
            yrow[lam[t][k]] = yrow.get(lam[t][k], 0.0) - float(vals[simplices[t, k]])
    info.rows.append(model.add_constraint(yrow, "==", 0.0, name=f"{stem}_y"))

    if n_simplices <= 1:
        return info
    if log:
        codes, bits = _mesh_codes(mesh)
        ys = [model.add_binary(f"{stem}_b{p}") for p in range(bits)]
        info.binaries.extend(ys)
        for p in range(bits):
            row0 = {lam[t][k]: 1.0 for t in range(n_simplices) if codes[t][p] == 0
                    for k in range(d + 1)}
            row0[ys[p]] = 1.0
            info.rows.append(model.add_constraint(row0, "<=", 1.0, name=f"{stem}_c{p}a"))
            row1 = {lam[t][k]: 1.0 for t in range(n_simplices) if codes[t][p] == 1
                    for k in range(d + 1)}
            row1[ys[p]] = -1.0
            info.rows.append(model.add_constraint(row1, "<=", 0.0, name=f"{stem}_c{p}b"))
    else:
        bs = [model.add_binary(f"{stem}_b{t}") for t in range(n_simplices)]
        info.binaries.extend(bs)
        info.rows.append(model.add_constraint({b: 1.0 for b in bs}, "==", 1.0,
                                              name=f"{stem}_one"))
        for t in range(n_simplices):
            row = {lam[t][k]: 1.0 for k in range(d + 1)}
            row[bs[t]] = -1.0
            info.rows.append(model.add_constraint(row, "<=", 0.0, name=f"{stem}_s{t}"))
    return info
