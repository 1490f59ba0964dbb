"""Piecewise-linear approximation of nonlinear scalar functions.

Supports 1-D breakpoint models on intervals and N-D simplex meshes on
boxes (tensor grids with a Kuhn triangulation per cell, d <= 3).  Fits
refine deterministically until a relative RMSE target is met on a dense
validation grid.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

VALIDATION_POINTS_1D = 10_000
VALIDATION_POINTS_PER_AXIS = 100
DEFAULT_MAX_KNOTS = 256
DEFAULT_MAX_VERTICES = 4096


class PWLError(Exception):
    """Base error for piecewise-linear fitting and evaluation."""


class RefinementBudgetError(PWLError):
    """Knot/vertex budget exhausted before reaching the RMSE target."""


class DegenerateDomainError(PWLError):
    """A domain axis has zero (or negative) width."""


class OutOfDomainError(PWLError):
    """Evaluation point lies outside the model's domain box."""


@dataclass(frozen=True)
class Breakpoints1D:
    """Ascending knots with function values; linear interpolation between."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xs", np.asarray(self.xs, dtype=float))
        object.__setattr__(self, "ys", np.asarray(self.ys, dtype=float))
        if self.xs.size < 2:
            raise PWLError("at least two knots required")
        if not np.all(np.diff(self.xs) > 0):
            raise PWLError("knots must be strictly ascending")

    @property
    def n_segments(self) -> int:
        return self.xs.size - 1

    def segment_slopes(self) -> np.ndarray:
        return np.diff(self.ys) / np.diff(self.xs)

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)


@dataclass(frozen=True)
class SimplexMesh:
    """Tensor-grid simplex mesh over a box.

    Each grid cell is split into d! Kuhn simplices.  Vertices are grid
    points in row-major order; simplices are (d+1)-tuples of vertex
    indices.  The grid structure (``axes``) is retained so the mesh can
    be embedded into a MILP with logarithmically many binaries.
    """

    axes: tuple          # per-axis ascending breakpoint arrays
    values: np.ndarray   # per-vertex values, shape = grid shape

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        for a in axes:
            if a.size < 2 or not np.all(np.diff(a) > 0):
                raise PWLError("axis breakpoints must be strictly ascending with >= 2 points")
        if self.values.shape != tuple(a.size for a in axes):
            raise PWLError("values shape must match the grid")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def grid_shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def cells_per_axis(self) -> tuple:
        return tuple(a.size - 1 for a in self.axes)

    @property
    def n_vertices(self) -> int:
        return int(np.prod(self.grid_shape))

    @property
    def vertices(self) -> np.ndarray:
        """Vertex coordinates, shape (n_vertices, d), row-major grid order."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @property
    def vertex_values(self) -> np.ndarray:
        return self.values.ravel()

    def vertex_index(self, multi_idx) -> int:
        return int(np.ravel_multi_index(multi_idx, self.grid_shape))

    @property
    def simplices(self) -> np.ndarray:
        """All Kuhn simplices as (d+1)-tuples of flat vertex indices.

        Order: cells in row-major order, permutations in lexicographic
        order within each cell (deterministic).
        """
        d = self.dim
        out = []
        for cell in itertools.product(*(range(n) for n in self.cells_per_axis)):
            base = np.asarray(cell, dtype=int)
            for perm in itertools.permutations(range(d)):
                idx = base.copy()
                chain = [self.vertex_index(idx)]
                for axis in perm:
                    idx = idx.copy()
                    idx[axis] += 1
                    chain.append(self.vertex_index(idx))
                out.append(chain)
        return np.asarray(out, dtype=int)


@dataclass
class PWLModel:
    """A fitted piecewise-linear model with validation metadata.

    ``rmse`` is the root-mean-square error on the validation grid,
    relative to max|f| over that grid (the normalization constant is
    stored in ``scale``).
    """

    data: object                      # Breakpoints1D | SimplexMesh
    domain: list                      # list of (lo, hi) per axis
    rmse: float = 0.0
    rmse_target: float = 0.0
    scale: float = 1.0                # max|f| on the validation grid
    validation_points: int = 0
    max_rel_error: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return 1 if isinstance(self.data, Breakpoints1D) else self.data.dim

    def __call__(self, x):
        return evaluate(self, x)


def _check_interval(domain) -> tuple:
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise DegenerateDomainError(f"interval [{lo}, {hi}] has zero width")
    return lo, hi


def fit_1d(f, domain, rmse_target: float, max_knots: int = DEFAULT_MAX_KNOTS) -> PWLModel:
    """Fit a 1-D piecewise-linear model to ``f`` on an interval.

    Knots start at the interval endpoints and the segment holding the
    largest validation-grid error is bisected until the relative RMSE
    (w.r.t. max|f|) drops to ``rmse_target``.

    Args:
        f: scalar function, vectorized over numpy arrays.
        domain: (lo, hi) interval.
        rmse_target: relative RMSE stopping criterion (> 0).
        max_knots: refinement budget; exceeding it raises
            RefinementBudgetError.

    Returns:
        PWLModel wrapping Breakpoints1D, RMSE metadata recorded.
    """
    if rmse_target <= 0:
        raise PWLError("rmse_target must be positive")
    lo, hi = _check_interval(domain)
    grid = np.linspace(lo, hi, VALIDATION_POINTS_1D)
    fg = np.asarray(f(grid), dtype=float)
    scale = float(np.max(np.abs(fg)))
    denom = scale if scale > 0 else 1.0

    xs = [lo, hi]
    while True:
        xs_arr = np.asarray(xs)
        ys_arr = np.asarray(f(xs_arr), dtype=float)
        approx = np.interp(grid, xs_arr, ys_arr)
        err = approx - fg
        rmse = float(np.sqrt(np.mean(err**2))) / denom
        max_err = float(np.max(np.abs(err))) / denom
        if rmse <= rmse_target:
            bp = Breakpoints1D(xs_arr, ys_arr)
            return PWLModel(
                data=bp, domain=[(lo, hi)], rmse=rmse, rmse_target=rmse_target,
                scale=scale, validation_points=grid.size, max_rel_error=max_err,
                meta={"normalization": "max|f| on validation grid"},
            )
        if len(xs) >= max_knots:
            raise RefinementBudgetError(
                f"RMSE {rmse:.3e} > target {rmse_target:.3e} with {len(xs)} knots"
            )
        worst = grid[int(np.argmax(np.abs(err)))]
        seg = int(np.searchsorted(xs_arr, worst) - 1)
        seg = min(max(seg, 0), len(xs) - 2)
        mid = 0.5 * (xs_arr[seg] + xs_arr[seg + 1])
        if mid <= xs_arr[seg] or mid >= xs_arr[seg + 1]:
            raise RefinementBudgetError("segment too narrow to bisect further")
        xs = sorted(xs + [float(mid)])


def _mesh_eval(axes, values, pts) -> np.ndarray:
    """Vectorized Kuhn-simplex interpolation on a tensor grid."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = len(axes)
    n = pts.shape[0]
    base = np.empty((n, d), dtype=int)
    local = np.empty((n, d), dtype=float)
    for a, bps in enumerate(axes):
        idx = np.clip(np.searchsorted(bps, pts[:, a], side="right") - 1, 0, bps.size - 2)
        base[:, a] = idx
        width = bps[idx + 1] - bps[idx]
        local[:, a] = (pts[:, a] - bps[idx]) / width
    local = np.clip(local, 0.0, 1.0)
    # sort local coordinates descending; ties by axis index for determinism
    order = np.argsort(-local, axis=1, kind="stable")
    sorted_loc = np.take_along_axis(local, order, axis=1)
    # barycentric weights along the Kuhn chain
    w = np.empty((n, d + 1), dtype=float)
    w[:, 0] = 1.0 - sorted_loc[:, 0]
    for i in range(1, d):
        w[:, i] = sorted_loc[:, i - 1] - sorted_loc[:, i]
    w[:, d] = sorted_loc[:, d - 1]
    out = np.zeros(n, dtype=float)
    idx = base.copy()
    out += w[:, 0] * values[tuple(idx.T)]
    for step in range(d):
        axis_sel = order[:, step]
        idx[np.arange(n), axis_sel] += 1
        out += w[:, step + 1] * values[tuple(idx.T)]
    return out


def _mesh_weights(axes, values, pt):
    """Vertex indices and barycentric weights for one point (for audits)."""
    pt = np.asarray(pt, dtype=float)
    d = len(axes)
    base = np.empty(d, dtype=int)
    local = np.empty(d, dtype=float)
    for a, bps in enumerate(axes):
        i = int(np.clip(np.searchsorted(bps, pt[a], side="right") - 1, 0, bps.size - 2))
        base[a] = i
        local[a] = (pt[a] - bps[i]) / (bps[i + 1] - bps[i])
    local = np.clip(local, 0.0, 1.0)
    order = sorted(range(d), key=lambda a: (-local[a], a))
    weights = [1.0 - local[order[0]]]
    for i in range(1, d):
        weights.append(local[order[i - 1]] - local[order[i]])
    weights.append(local[order[-1]])
    shape = tuple(bps.size for bps in axes)
    idx = base.copy()
    verts = [int(np.ravel_multi_index(idx, shape))]
    for axis in order:
        idx = idx.copy()
        idx[axis] += 1
        verts.append(int(np.ravel_multi_index(idx, shape)))
    return verts, np.asarray(weights)


def _validation_grid_nd(axes_domains, pts_per_axis):
    grids = [np.linspace(lo, hi, pts_per_axis) for lo, hi in axes_domains]
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def fit_nd(f, domain, rmse_target: float, max_vertices: int = DEFAULT_MAX_VERTICES,
           max_rel_error: float | None = None) -> PWLModel:
    """Fit an N-D simplex-mesh model to ``f`` on a box (d <= 3).

    Starts from a single cell and repeatedly inserts an axis breakpoint
    through the cell holding the largest validation error (axis chosen
    by the largest second-difference of f at that point) until the
    relative RMSE target is met.

    Args:
        f: scalar function of a (n, d) array -> (n,) values.
        domain: sequence of (lo, hi) per axis.
        rmse_target: relative RMSE stopping criterion.
        max_vertices: grid-size budget.
        max_rel_error: optional additional pointwise stopping criterion.

    Returns:
        PWLModel wrapping a SimplexMesh.
    """
    if rmse_target <= 0:
        raise PWLError("rmse_target must be positive")
    domains = [_check_interval(dom) for dom in domain]
    d = len(domains)
    if d < 1 or d > 3:
        raise PWLError("fit_nd supports 1 <= d <= 3")
    pts_per_axis = VALIDATION_POINTS_PER_AXIS if d < 3 else 40
    grid_pts = _validation_grid_nd(domains, pts_per_axis)
    fg = np.asarray(f(grid_pts), dtype=float)
    scale = float(np.max(np.abs(fg)))
    denom = scale if scale > 0 else 1.0

    axes = [np.array([lo, hi]) for lo, hi in domains]
    while True:
        mesh_vals = _grid_values(f, axes)
        approx = _mesh_eval(axes, mesh_vals, grid_pts)
        err = approx - fg
        rmse = float(np.sqrt(np.mean(err**2))) / denom
        max_err = float(np.max(np.abs(err))) / denom
        done = rmse <= rmse_target and (max_rel_error is None or max_err <= max_rel_error)
        if done:
            mesh = SimplexMesh(tuple(axes), mesh_vals)
            return PWLModel(
                data=mesh, domain=domains, rmse=rmse, rmse_target=rmse_target,
                scale=scale, validation_points=grid_pts.shape[0], max_rel_error=max_err,
                meta={"normalization": "max|f| on validation grid"},
            )
        n_vertices = int(np.prod([a.size for a in axes]))
        if n_vertices >= max_vertices:
            raise RefinementBudgetError(
                f"RMSE {rmse:.3e} > target {rmse_target:.3e} with {n_vertices} vertices"
            )
        worst = grid_pts[int(np.argmax(np.abs(err)))]
        axis = _split_axis(f, axes, worst, domains)
        bps = axes[axis]
        seg = int(np.clip(np.searchsorted(bps, worst[axis], side="right") - 1, 0, bps.size - 2))
        mid = 0.5 * (bps[seg] + bps[seg + 1])
        if mid <= bps[seg] or mid >= bps[seg + 1]:
            raise RefinementBudgetError("cell too narrow to split further")
        axes[axis] = np.sort(np.append(bps, mid))


def _grid_values(f, axes) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return np.asarray(f(pts), dtype=float).reshape(tuple(a.size for a in axes))


def _split_axis(f, axes, point, domains) -> int:
    """Pick the axis with the largest curvature contribution at ``point``."""
    d = len(axes)
    best_axis, best_score = 0, -1.0
    for a in range(d):
        bps = axes[a]
        seg = int(np.clip(np.searchsorted(bps, point[a], side="right") - 1, 0, bps.size - 2))
        h = 0.5 * (bps[seg + 1] - bps[seg])
        lo, hi = domains[a]
        x0 = np.array(point, dtype=float)
        xp, xm = x0.copy(), x0.copy()
        xp[a] = min(point[a] + h, hi)
        xm[a] = max(point[a] - h, lo)
        vals = np.asarray(f(np.stack([xm, x0, xp])), dtype=float)
        score = abs(vals[0] - 2.0 * vals[1] + vals[2])
        if score > best_score + 1e-15:
            best_axis, best_score = a, score
    return best_axis


def evaluate(model: PWLModel, x):
    """Evaluate a PWLModel at a point (or array of points for 1-D).

    Raises OutOfDomainError if the point lies outside the domain box
    (with a tiny tolerance for round-off).
    """
    tol = 1e-9
    if isinstance(model.data, Breakpoints1D):
        lo, hi = model.domain[0]
        xs = np.asarray(x, dtype=float)
        span = hi - lo
        if np.any(xs < lo - tol * span) or np.any(xs > hi + tol * span):
            raise OutOfDomainError(f"{x} outside [{lo}, {hi}]")
        return model.data(xs) if xs.ndim else float(model.data(float(xs)))
    pt = np.asarray(x, dtype=float)
    single = pt.ndim == 1
    pts = np.atleast_2d(pt)
    for a, (lo, hi) in enumerate(model.domain):
        span = hi - lo
        if np.any(pts[:, a] < lo - tol * span) or np.any(pts[:, a] > hi + tol * span):
            raise OutOfDomainError(f"coordinate {a} outside [{lo}, {hi}]")
    out = _mesh_eval(model.data.axes, model.data.values, pts)
    return float(out[0]) if single else out


def evaluate_with_weights(model: PWLModel, x):
    """Barycentric decomposition at a point: (vertex indices, weights).

    Weights are nonnegative and sum to one; the indexed vertices span
    the simplex containing ``x``.
    """
    if isinstance(model.data, Breakpoints1D):
        xs = model.data.xs
        xv = float(x)
        seg = int(np.clip(np.searchsorted(xs, xv, side="right") - 1, 0, xs.size - 2))
        t = (xv - xs[seg]) / (xs[seg + 1] - xs[seg])
        return [seg, seg + 1], np.array([1.0 - t, t])
    return _mesh_weights(model.data.axes, model.data.values, x)


def dump_csv(model: PWLModel, path) -> None:
    """Write knots/vertices (and the simplex index list) to a CSV audit file."""
    lines = []
    if isinstance(model.data, Breakpoints1D):
        lines.append("[knots]")
        lines.append("x,y")
        for xv, yv in zip(model.data.xs, model.data.ys):
            lines.append(f"{xv!r},{yv!r}")
    else:
        mesh = model.data
        lines.append("[vertices]")
        lines.append("index," + ",".join(f"x{a}" for a in range(mesh.dim)) + ",value")
        verts = mesh.vertices
        vals = mesh.vertex_values
        for i in range(mesh.n_vertices):
            coords = ",".join(repr(float(c)) for c in verts[i])
            lines.append(f"{i},{coords},{vals[i]!r}")
        lines.append("[simplices]")
        lines.append(",".join(f"v{k}" for k in range(mesh.dim + 1)))
        for simplex in mesh.simplices:
            lines.append(",".join(str(int(v)) for v in simplex))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
