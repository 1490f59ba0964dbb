"""Plant data model: product properties, stream tables, per-voltage samples.

The plant behaves as a function of the co-SOEC cell voltage.  Seven
equidistant voltage samples carry stream states, feed and product mass
flows, system power and the offgas heat budget; anything between samples
is piecewise-linear interpolation.  A reference dataset is reconstructed
by calibration against published corner values, since the underlying
flowsheet simulation data is not public.
"""

import importlib.resources
import math
from dataclasses import dataclass, replace

import numpy as np

VOLTAGE_MIN = 1.275
VOLTAGE_MAX = 1.305
N_SAMPLES = 7
VOLTAGE_GRID = tuple(round(VOLTAGE_MIN + 0.005 * k, 10) for k in range(N_SAMPLES))
HEAT_TRANSFER_COEFF = 0.5    # kW/m2/K, identical for all streams
KWH_PER_MJ = 1.0 / 3.6

# product properties downstream of upgrading (index, name, h [MJ/kg],
# rho [kg/m3], mu [mPa s])
PRODUCT_TABLE = (
    (1, "FT-wax", 43.887, 797.73, 6.7477),
    (2, "diesel", 44.345, 748.81, 1.5983),
    (3, "naphtha", 44.676, 516.17, 0.5893),
)

# stream limits: id -> ((T_in lo, hi), (T_out lo, hi), (F lo, hi)) in degC and kW/K
STREAM_TABLE = {
    "H1": ((40.0, 40.0), (35.0, 35.0), (1.71, 2.16)),
    "H2": ((127.9, 131.1), (34.0, 35.0), (0.09, 0.12)),
    "H3": ((169.8, 174.1), (34.0, 35.0), (0.09, 0.12)),
    "H4": ((210.0, 210.0), (190.0, 190.0), (0.27, 0.28)),
    "H5": ((190.0, 190.0), (120.0, 120.0), (0.56, 0.58)),
    "H6": ((120.0, 120.0), (30.0, 30.0), (0.48, 0.50)),
    "H7": ((45.4, 57.0), (31.0, 31.0), (2.35, 2.95)),
    "H8": ((138.9, 138.9), (137.9, 137.9), (59.60, 94.40)),
    "H9": ((805.2, 825.5), (34.0, 35.0), (0.10, 0.13)),
    "H10": ((49.5, 50.7), (34.0, 35.0), (0.65, 0.88)),
    "H11": ((101.8, 101.8), (30.0, 30.0), (0.51, 0.64)),
    "H12": ((190.0, 190.0), (188.0, 188.0), (76.88, 80.45)),
    "C1": ((318.0, 319.2), (825.0, 870.5), (0.14, 0.18)),
    "C2": ((116.9, 116.9), (124.2, 124.2), (20.02, 25.12)),
    "C3": ((57.3, 58.8), (825.0, 825.0), (0.25, 0.33)),
    "C4": ((137.9, 137.9), (139.9, 139.9), (105.77, 142.64)),
    "C5": ((138.9, 138.9), (426.6, 449.4), (0.10, 0.11)),
    "C6": ((35.0, 35.0), (115.9, 145.4), (0.05, 0.06)),
    "C7": ((20.3, 20.3), (189.5, 199.6), (0.15, 0.21)),
    "CS1": ((900.0, 900.0), (100.0, 890.0), (59.60, 94.40)),
    "CS2": ((900.0, 900.0), (100.0, 890.0), (0.10, 0.13)),
    "CS3": ((900.0, 900.0), (100.0, 890.0), (0.65, 0.88)),
}

FLOW_COLUMNS = ("m_CO2", "m_H2O", "m_air", "m_wax", "m_diesel", "m_naphtha",
                "P_sys", "q_offgas")


class DatasetError(Exception):
    """Base error for dataset IO and validation."""


class DatasetParseError(DatasetError):
    """Malformed dataset file; message names the offending line."""


class DatasetValidationError(DatasetError):
    """Value violates a published bound or grid rule; names row and field."""


class CalibrationError(Exception):
    """Calibration targets are internally infeasible."""


@dataclass(frozen=True)
class ProductSpec:
    index: int
    name: str
    h_prod: float          # MJ/kg
    rho_prod: float        # kg/m3
    mu_prod: float         # mPa s


@dataclass(frozen=True)
class StreamSpec:
    id: str
    kind: str              # hot | cold | internal-hot-utility
    t_in: tuple            # (lo, hi) degC
    t_out: tuple
    f: tuple               # (lo, hi) kW/K
    u: float = HEAT_TRANSFER_COEFF

    @property
    def is_hot(self) -> bool:
        return self.kind in ("hot", "internal-hot-utility")


@dataclass(frozen=True)
class OperatingPoint:
    """Cell voltage of the co-SOEC, the plant's operating degree of freedom."""

    u_cell: float

    def __post_init__(self):
        if not (VOLTAGE_MIN - 1e-12 <= self.u_cell <= VOLTAGE_MAX + 1e-12):
            raise ValueError(
                f"cell voltage {self.u_cell} outside [{VOLTAGE_MIN}, {VOLTAGE_MAX}]")


@dataclass(frozen=True)
class StreamState:
    t_in: float
    t_out: float
    f: float

    @property
    def duty(self) -> float:
        """|T_in - T_out| * F in kW (CS streams report their maximum)."""
        return abs(self.t_in - self.t_out) * self.f


@dataclass(frozen=True)
class PlantSample:
    u_cell: float
    streams: dict           # id -> StreamState
    m_co2: float            # kg/h
    m_h2o: float
    m_air: float
    m_prod: tuple           # (wax, diesel, naphtha) kg/h
    p_sys: float            # kW
    q_offgas: float         # kW available from FT-offgas combustion

    @property
    def m_prod_total(self) -> float:
        return sum(self.m_prod)

    def h_prod_flow(self, products) -> float:
        """Chemically bound product enthalpy flow in kW."""
        return sum(m * p.h_prod for m, p in zip(self.m_prod, products)) * KWH_PER_MJ

    def h_mix(self, products) -> float:
        """Mass-weighted mean product enthalpy in MJ/kg."""
        return sum(m * p.h_prod for m, p in zip(self.m_prod, products)) / self.m_prod_total


@dataclass(frozen=True)
class PlantDataset:
    samples: tuple          # exactly N_SAMPLES, ascending voltage
    products: tuple         # three ProductSpec
    streams: tuple          # StreamSpec collection
    provenance: str = "user-supplied"

    @property
    def voltages(self) -> np.ndarray:
        return np.array([s.u_cell for s in self.samples])

    def stream(self, sid: str) -> StreamSpec:
        for s in self.streams:
            if s.id == sid:
                return s
        raise KeyError(sid)

    @property
    def hot_ids(self) -> list:
        return [s.id for s in self.streams if s.kind == "hot"]

    @property
    def cold_ids(self) -> list:
        return [s.id for s in self.streams if s.kind == "cold"]

    @property
    def cs_ids(self) -> list:
        return [s.id for s in self.streams if s.kind == "internal-hot-utility"]


def canonical_products() -> tuple:
    return tuple(ProductSpec(*row) for row in PRODUCT_TABLE)


def canonical_streams() -> tuple:
    specs = []
    for sid, (tin, tout, f) in STREAM_TABLE.items():
        if sid.startswith("CS"):
            kind = "internal-hot-utility"
        elif sid.startswith("H"):
            kind = "hot"
        else:
            kind = "cold"
        specs.append(StreamSpec(sid, kind, tin, tout, f))
    return tuple(specs)


# --------------------------------------------------------------------------
# validation

def _inside(value: float, bounds: tuple, rtol: float = 1e-9) -> bool:
    lo, hi = bounds
    pad = rtol * max(1.0, abs(hi - lo), abs(hi))
    return lo - pad <= value <= hi + pad


def _check_field(sample_v: float, sid: str, field: str, value: float, bounds: tuple):
    lo, hi = bounds
    if lo == hi:
        if abs(value - lo) > 1e-9:
            raise DatasetValidationError(
                f"sample U_cell={sample_v}, stream {sid}, field {field}: "
                f"{value} must equal the published constant {lo}")
    elif not _inside(value, bounds):
        raise DatasetValidationError(
            f"sample U_cell={sample_v}, stream {sid}, field {field}: "
            f"{value} outside published interval [{lo}, {hi}]")


def validate_dataset(ds: PlantDataset) -> None:
    """Check grid, bounds, orientations and positivity; raises on violation."""
    if len(ds.samples) != N_SAMPLES:
        raise DatasetValidationError(
            f"expected {N_SAMPLES} voltage samples, found {len(ds.samples)}")
    for sample, v_ref in zip(ds.samples, VOLTAGE_GRID):
        if abs(sample.u_cell - v_ref) > 1e-9:
            raise DatasetValidationError(
                f"voltage grid mismatch: sample at {sample.u_cell}, expected {v_ref}")
    if len(ds.products) != 3:
        raise DatasetValidationError("exactly three products required")
    for spec, row in zip(ds.products, PRODUCT_TABLE):
        if not 40.0 < spec.h_prod < 50.0:
            raise DatasetValidationError(
                f"product {spec.name}: h_prod {spec.h_prod} outside (40, 50) MJ/kg")
        if ds.provenance == "reference-calibrated":
            if (spec.index, spec.name, spec.h_prod, spec.rho_prod, spec.mu_prod) != row:
                raise DatasetValidationError(
                    f"product {spec.name}: properties must match the published table")
    ids = {s.id for s in ds.streams}
    missing = set(STREAM_TABLE) - ids
    if missing:
        raise DatasetValidationError(f"missing streams: {sorted(missing)}")
    for sample in ds.samples:
        for spec in ds.streams:
            if spec.id not in sample.streams:
                raise DatasetValidationError(
                    f"sample U_cell={sample.u_cell}: stream {spec.id} missing")
            st = sample.streams[spec.id]
            bounds = STREAM_TABLE[spec.id]
            _check_field(sample.u_cell, spec.id, "T_in", st.t_in, bounds[0])
            _check_field(sample.u_cell, spec.id, "T_out", st.t_out, bounds[1])
            _check_field(sample.u_cell, spec.id, "F", st.f, bounds[2])
            if spec.is_hot and st.t_in < st.t_out - 1e-9:
                raise DatasetValidationError(
                    f"sample U_cell={sample.u_cell}, stream {spec.id}: "
                    f"hot stream with T_in < T_out")
            if spec.kind == "cold" and st.t_in > st.t_out + 1e-9:
                raise DatasetValidationError(
                    f"sample U_cell={sample.u_cell}, stream {spec.id}: "
                    f"cold stream with T_in > T_out")
        flows = (sample.m_co2, sample.m_h2o, sample.m_air, *sample.m_prod,
                 sample.p_sys)
        if any(x <= 0 for x in flows):
            raise DatasetValidationError(
                f"sample U_cell={sample.u_cell}: mass flows and P_sys must be positive")
        if sample.q_offgas < 0:
            raise DatasetValidationError(
                f"sample U_cell={sample.u_cell}: q_offgas must be nonnegative")
        if sample.h_prod_flow(ds.products) >= sample.p_sys:
            raise DatasetValidationError(
                f"sample U_cell={sample.u_cell}: product enthalpy flow exceeds "
                f"electric input (efficiency >= 100 %)")


# --------------------------------------------------------------------------
# CSV round trip

def save_dataset(ds: PlantDataset, path) -> None:
    """Write the dataset CSV (products, stream limits, samples, flows)."""
    lines = ["# ptl-plant-dataset v1", f"# provenance: {ds.provenance}"]
    lines.append("[products]")
    lines.append("v,name,h_prod,rho_prod,mu_prod")
    for p in ds.products:
        lines.append(f"{p.index},{p.name},{p.h_prod!r},{p.rho_prod!r},{p.mu_prod!r}")
    lines.append("[streams]")
    lines.append("id,kind,T_in_lo,T_in_hi,T_out_lo,T_out_hi,F_lo,F_hi,U")
    for s in ds.streams:
        lines.append(
            f"{s.id},{s.kind},{s.t_in[0]!r},{s.t_in[1]!r},{s.t_out[0]!r},"
            f"{s.t_out[1]!r},{s.f[0]!r},{s.f[1]!r},{s.u!r}")
    lines.append("[samples]")
    lines.append("U_cell,stream_id,T_in,T_out,F")
    for sample in ds.samples:
        for sid in STREAM_TABLE:
            st = sample.streams[sid]
            lines.append(f"{sample.u_cell!r},{sid},{st.t_in!r},{st.t_out!r},{st.f!r}")
    lines.append("[flows]")
    lines.append("U_cell," + ",".join(FLOW_COLUMNS))
    for sample in ds.samples:
        w, d, n = sample.m_prod
        vals = (sample.m_co2, sample.m_h2o, sample.m_air, w, d, n,
                sample.p_sys, sample.q_offgas)
        lines.append(f"{sample.u_cell!r}," + ",".join(repr(float(v)) for v in vals))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path) -> PlantDataset:
    """Load and validate a dataset CSV; raises DatasetParseError /
    DatasetValidationError naming the offending row and field."""
    provenance = "user-supplied"
    section = None
    products = []
    streams = []
    sample_rows: dict = {}
    flow_rows: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# provenance:"):
                    provenance = line.split(":", 1)[1].strip()
                continue
            if line.startswith("["):
                section = line.strip("[]")
                continue
            fields = line.split(",")
            try:
                if section == "products":
                    if fields[0] == "v":
                        continue
                    products.append(ProductSpec(int(fields[0]), fields[1],
                                                float(fields[2]), float(fields[3]),
                                                float(fields[4])))
                elif section == "streams":
                    if fields[0] == "id":
                        continue
                    streams.append(StreamSpec(
                        fields[0], fields[1],
                        (float(fields[2]), float(fields[3])),
                        (float(fields[4]), float(fields[5])),
                        (float(fields[6]), float(fields[7])), float(fields[8])))
                elif section == "samples":
                    if fields[0] == "U_cell":
                        continue
                    v = float(fields[0])
                    sample_rows.setdefault(v, {})[fields[1]] = StreamState(
                        float(fields[2]), float(fields[3]), float(fields[4]))
                elif section == "flows":
                    if fields[0] == "U_cell":
                        continue
                    v = float(fields[0])
                    flow_rows[v] = [float(x) for x in fields[1:]]
                elif section is None:
                    raise DatasetParseError(f"line {lineno}: data before any section")
                else:
                    raise DatasetParseError(f"line {lineno}: unknown section {section!r}")
            except (ValueError, IndexError) as exc:
                raise DatasetParseError(f"line {lineno}: malformed row {line!r}") from exc

    voltages = sorted(sample_rows)
    if sorted(flow_rows) != voltages:
        raise DatasetValidationError(
            "samples and flows tables cover different voltage grids")
    samples = []
    for v in voltages:
        flows = flow_rows[v]
        if len(flows) != len(FLOW_COLUMNS):
            raise DatasetParseError(f"flow row at U_cell={v}: expected "
                                    f"{len(FLOW_COLUMNS)} values")
        samples.append(PlantSample(
            u_cell=v, streams=sample_rows[v],
            m_co2=flows[0], m_h2o=flows[1], m_air=flows[2],
            m_prod=(flows[3], flows[4], flows[5]),
            p_sys=flows[6], q_offgas=flows[7]))
    ds = PlantDataset(samples=tuple(samples), products=tuple(products),
                      streams=tuple(streams), provenance=provenance)
    validate_dataset(ds)
    return ds


def reference_dataset_path():
    """Path of the calibrated reference dataset shipped with the package."""
    return importlib.resources.files("ptlopt").joinpath("data/reference_dataset.csv")


def load_reference_dataset() -> PlantDataset:
    return load_dataset(reference_dataset_path())


# --------------------------------------------------------------------------
# interpolation

def evaluate_at_voltage(ds: PlantDataset, u_cell) -> PlantSample:
    """Piecewise-linear interpolation of a sample at any admissible voltage.

    Exact (bit-for-bit) at the seven sample voltages.
    """
    if isinstance(u_cell, OperatingPoint):
        v = u_cell.u_cell
    else:
        v = float(u_cell)
        OperatingPoint(v)  # range check
    grid = ds.voltages
    for k, vk in enumerate(grid):
        if abs(v - vk) <= 1e-12:
            return ds.samples[k]
    hi = int(np.searchsorted(grid, v))
    lo = hi - 1
    t = (v - grid[lo]) / (grid[hi] - grid[lo])
    a, b = ds.samples[lo], ds.samples[hi]

    def mix(x, y):
        return (1.0 - t) * x + t * y

    streams = {sid: StreamState(mix(a.streams[sid].t_in, b.streams[sid].t_in),
                                mix(a.streams[sid].t_out, b.streams[sid].t_out),
                                mix(a.streams[sid].f, b.streams[sid].f))
               for sid in a.streams}
    return PlantSample(
        u_cell=v, streams=streams,
        m_co2=mix(a.m_co2, b.m_co2), m_h2o=mix(a.m_h2o, b.m_h2o),
        m_air=mix(a.m_air, b.m_air),
        m_prod=tuple(mix(x, y) for x, y in zip(a.m_prod, b.m_prod)),
        p_sys=mix(a.p_sys, b.p_sys), q_offgas=mix(a.q_offgas, b.q_offgas))


# --------------------------------------------------------------------------
# calibration of the reference dataset

@dataclass(frozen=True)
class CalibrationTargets:
    """Published corner values the reference dataset is fitted against.

    Efficiencies are fractions; costs in EUR/kg.  ``cost_best`` /
    ``cost_worst`` are the shifted production costs at the price-box
    corners (10 EUR/MWh, 0 EUR/t) and (100 EUR/MWh, 150 EUR/t), given as
    (at min-cost end, at max-efficiency end).
    """

    eta_range: tuple = (0.5767, 0.6184)
    cost_range: tuple = (1.83, 2.36)
    cost_best: tuple = (1.42, 1.97)
    cost_worst: tuple = (3.88, 4.28)

    def validate(self) -> None:
        lo, hi = self.eta_range
        if not (0.0 < lo < hi < 1.0):
            raise CalibrationError(
                f"efficiency targets {self.eta_range} must lie strictly inside (0, 1)")
        c_lo, c_hi = self.cost_range
        if not (0.0 < c_lo < c_hi):
            raise CalibrationError(f"cost targets {self.cost_range} must be positive "
                                   f"and ordered")
        for pair in (self.cost_best, self.cost_worst):
            if any(c <= 0 for c in pair):
                raise CalibrationError("corner cost targets must be positive")


# interior shape of the targets along the voltage grid, as fractions of the
# end-to-end range (index 0 = 1.275 V).  The cost curve is deliberately flat
# at the high-efficiency end and steep near maximum voltage, which is what
# exposes the high-electricity-price pocket.
_ETA_SHAPE = (1.0, 0.8465, 0.6787, 0.4988, 0.3189, 0.1511, 0.0)
_COST_SHAPE = (1.0, 0.9811, 0.9623, 0.9340, 0.9057, 0.4151, 0.0)

_PRODUCT_MIX = (0.78, 0.14, 0.08)     # wax / diesel / naphtha mass fractions
_H2O_PER_PRODUCT = 1.9                # kg H2O per kg product
_AIR_PER_PRODUCT = 2.0                # kg air per kg product
_CO2_SKEW = 0.10                      # shift of the CO2 ratio above the balanced fit
_OFFGAS_SHORTFALL_KW = 3.0            # electric hot utility needed at 1.275 V
_HEX_COST_GUESS = 2500.0              # annualized HEN capital seed, EUR/y


def corner_sensitivity_anchors(base_cost: float, best_cost: float,
                               worst_cost: float) -> tuple:
    """Solve the two-corner linear system for (kWh/kg, kgCO2/kg) anchors.

    0.01 E + 0.05 M = base - best   and   0.08 E + 0.10 M = worst - base.
    """
    a = np.array([[0.01, 0.05], [0.08, 0.10]])
    b = np.array([base_cost - best_cost, worst_cost - base_cost])
    e, m = np.linalg.solve(a, b)
    return float(e), float(m)


def _stream_states_at(fraction: float) -> dict:
    """Stream states at normalized voltage position ``fraction`` in [0, 1].

    Flow capacities sit at their interval midpoints; bracketed
    temperatures ramp linearly across their published interval (low end
    at 1.275 V).  Keeping F constant makes every stream duty piecewise
    linear in voltage, so MILP balances close exactly.
    """
    states = {}
    for sid, (tin, tout, f) in STREAM_TABLE.items():
        f_mid = 0.5 * (f[0] + f[1])
        if sid.startswith("CS"):
            states[sid] = StreamState(tin[0], tout[0], f_mid)
            continue
        t_in = tin[0] + (tin[1] - tin[0]) * fraction
        t_out = tout[0] + (tout[1] - tout[0]) * fraction
        states[sid] = StreamState(t_in, t_out, f_mid)
    return states


def _utility_demand(fraction: float, config, budget: float | None):
    """Minimum electric utility duties of the reduced superstructure."""
    from ptlopt.hens import minimum_utilities
    return minimum_utilities(_stream_states_at(fraction), config, budget=budget)


def calibrate_reference_dataset(targets: CalibrationTargets | None = None,
                                config=None, costs=None,
                                refine_iterations: int = 0) -> PlantDataset:
    """Reconstruct the reference dataset from published corner values.

    Stream tables follow the published limits directly; product mix,
    mass flows and system power are fitted so that the optimizer's
    anchor solutions reproduce the target efficiency and cost corners:
    the electricity sensitivity is pinned through the energy-bookkeeping
    identity (eta * grad_el = mean product enthalpy) and the CO2 intake
    ratio balances the two corner-cost equations.

    With ``refine_iterations`` > 0 the pipeline anchor solves run on the
    candidate dataset and the fit absorbs the realized heat-exchanger
    capital and utility duties.
    """
    from ptlopt.hens import SuperstructureConfig
    from ptlopt.objectives import CostParameters

    targets = targets or CalibrationTargets()
    targets.validate()
    config = config or SuperstructureConfig.reduced_reference()
    costs = costs or CostParameters()

    products = canonical_products()
    h_mix = sum(frac * p.h_prod for frac, p in zip(_PRODUCT_MIX, products))
    h_kwh = h_mix * KWH_PER_MJ

    eta_lo, eta_hi = targets.eta_range
    cost_lo, cost_hi = targets.cost_range

    # per-sample targets (index 0 = 1.275 V)
    etas = [eta_lo + (eta_hi - eta_lo) * s for s in _ETA_SHAPE]
    cvals = [cost_lo + (cost_hi - cost_lo) * s for s in _COST_SHAPE]

    # CO2 intake ratio: balanced against the corner costs at both ends,
    # linear in between
    m_ratio_ends = []
    for end, (c_base, eta) in enumerate(((cost_hi, eta_hi), (cost_lo, eta_lo))):
        e_anchor = h_kwh / eta
        best = targets.cost_best[1 - end]
        worst = targets.cost_worst[1 - end]
        m_bal = ((worst - best) - 0.09 * e_anchor) / 0.15
        m_ratio_ends.append(m_bal + _CO2_SKEW)
    if any(m <= 0 for m in m_ratio_ends):
        raise CalibrationError("corner costs imply a nonpositive CO2 intake ratio")
    m_ratios = list(np.linspace(m_ratio_ends[0], m_ratio_ends[1], N_SAMPLES))

    hex_cost = [_HEX_COST_GUESS] * N_SAMPLES
    utility_overhead = [0.0] * N_SAMPLES

    dataset = None
    for _ in range(max(1, refine_iterations + 1)):
        dataset = _assemble(targets, config, costs, products, h_kwh, etas, cvals,
                            m_ratios, hex_cost, utility_overhead)
        if refine_iterations <= 0:
            break
        refine_iterations -= 1
        hex_cost, utility_overhead = _measure_pipeline(dataset, config, costs,
                                                       hex_cost, utility_overhead)
    return dataset


def _assemble(targets, config, costs, products, h_kwh, etas, cvals, m_ratios,
              hex_cost, utility_overhead) -> PlantDataset:
    samples = []
    feed_unit = (costs.c_h2o / 1000.0 * _H2O_PER_PRODUCT
                 + costs.c_air / 1000.0 * _AIR_PER_PRODUCT)
    for k, v in enumerate(VOLTAGE_GRID):
        fraction = k / (N_SAMPLES - 1)
        states = _stream_states_at(fraction)
        q_hu_free, q_cu, cs_need = _utility_demand(fraction, config, budget=None)
        budget = max(0.0, cs_need - _OFFGAS_SHORTFALL_KW * (1.0 - fraction))
        q_hu, q_cu, cs_used = _utility_demand(fraction, config, budget=budget)

        eta, c_target, m_ratio = etas[k], cvals[k], m_ratios[k]
        e_kwh = h_kwh / eta
        denom = (c_target - costs.c_co2 / 1000.0 * m_ratio - feed_unit
                 - costs.c_el / 1000.0 * e_kwh)
        if denom <= 0:
            raise CalibrationError(
                f"cost target {c_target} at sample {k} cannot cover feedstock and "
                f"electricity alone")
        m_prod = (costs.af_inv * costs.c_sys + hex_cost[k]) / (costs.t * denom)
        p_el = e_kwh * m_prod
        p_sys = (p_el - costs.eps_hu * q_hu - costs.eps_cu * q_cu
                 - utility_overhead[k])
        h_flow = m_prod * h_kwh
        if p_sys <= h_flow:
            raise CalibrationError(
                f"targets at sample {k} imply efficiency >= 100 % "
                f"(P_sys {p_sys:.1f} kW vs product flow {h_flow:.1f} kW)")
        samples.append(PlantSample(
            u_cell=v, streams=states,
            m_co2=m_ratio * m_prod,
            m_h2o=_H2O_PER_PRODUCT * m_prod,
            m_air=_AIR_PER_PRODUCT * m_prod,
            m_prod=tuple(frac * m_prod for frac in _PRODUCT_MIX),
            p_sys=p_sys, q_offgas=budget))

    for key in ("m_prod_total", "m_co2", "p_sys"):
        vals = [getattr(s, key) if key != "m_prod_total" else s.m_prod_total
                for s in samples]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise CalibrationError(
                f"no monotone interpolant: {key} not increasing with voltage")

    ds = PlantDataset(samples=tuple(samples), products=products,
                      streams=canonical_streams(),
                      provenance="reference-calibrated")
    validate_dataset(ds)
    return ds


def _measure_pipeline(dataset, config, costs, hex_cost, utility_overhead):
    """Run the two anchor solves and return refined capital/utility figures."""
    from ptlopt.pipeline import solve_anchor

    refined_hex = list(hex_cost)
    refined_overhead = list(utility_overhead)
    ends = {"max_eta": 0, "min_cost": N_SAMPLES - 1}
    measured_hex = {}
    measured_overhead = {}
    for kind, idx in ends.items():
        point = solve_anchor(dataset, config, costs, kind)
        if point is None:
            continue
        fraction = idx / (N_SAMPLES - 1)
        q_hu_lp, q_cu_lp, _ = _utility_demand(
            fraction, config, budget=dataset.samples[idx].q_offgas)
        measured_hex[idx] = point.hen_annual_capital
        measured_overhead[idx] = (
            costs.eps_hu * (point.q_hu_total - q_hu_lp)
            + costs.eps_cu * (point.q_cu_total - q_cu_lp))
    if measured_hex:
        lo = measured_hex.get(0, hex_cost[0])
        hi = measured_hex.get(N_SAMPLES - 1, hex_cost[-1])
        refined_hex = list(np.linspace(lo, hi, N_SAMPLES))
        lo_o = measured_overhead.get(0, 0.0)
        hi_o = measured_overhead.get(N_SAMPLES - 1, 0.0)
        refined_overhead = list(np.linspace(lo_o, hi_o, N_SAMPLES))
    return refined_hex, refined_overhead


def endpoint_objectives(dataset: PlantDataset, config=None, costs=None) -> list:
    """Evaluate (eta, c_prod) at both end samples with minimum utilities.

    Used to verify calibration targets without running MILP solves; the
    heat-exchanger capital is approximated by the calibration seed.
    """
    from ptlopt.hens import SuperstructureConfig, minimum_utilities
    from ptlopt.objectives import CostParameters

    config = config or SuperstructureConfig.reduced_reference()
    costs = costs or CostParameters()
    out = []
    for idx in (0, N_SAMPLES - 1):
        sample = dataset.samples[idx]
        q_hu, q_cu, _ = minimum_utilities(sample.streams, config,
                                          budget=sample.q_offgas)
        p_el = sample.p_sys + costs.eps_hu * q_hu + costs.eps_cu * q_cu
        eta = sample.h_prod_flow(dataset.products) / p_el
        opex = costs.af_op * costs.t * (
            costs.c_co2 / 1000.0 * sample.m_co2
            + costs.c_h2o / 1000.0 * sample.m_h2o
            + costs.c_air / 1000.0 * sample.m_air
            + costs.c_el / 1000.0 * p_el)
        capex = costs.af_inv * costs.c_sys + _HEX_COST_GUESS
        c_prod = (capex + opex) / (costs.t * sample.m_prod_total)
        out.append((eta, c_prod))
    return out
