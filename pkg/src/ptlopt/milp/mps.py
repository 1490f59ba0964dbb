"""Fixed-format MPS export/import (8-character name fields).

Row and column names are mapped to fixed-width identifiers (R0000001,
C0000001) so arbitrary model names survive the 8-character limit; the
original names are kept in comment lines for audit.  Integer columns are
wrapped in INTORG/INTEND markers; maximization is recorded through an
OBJSENSE section.
"""

import math

from ptlopt.milp.model import Model, ModelError

_SENSE_TO_ROW = {"<=": "L", ">=": "G", "==": "E"}
_ROW_TO_SENSE = {"L": "<=", "G": ">=", "E": "=="}


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def write_mps(model: Model, path) -> None:
    """Write the model as fixed-format MPS; round-trips via read_mps."""
    rows = []
    col_ids = {v.name: f"C{i + 1:07d}" for i, v in enumerate(model.variables)}
    row_ids = {c.name: f"R{i + 1:07d}" for i, c in enumerate(model.constraints)}

    rows.append(f"* generated by ptlopt")
    for orig, short in col_ids.items():
        rows.append(f"* COLUMN {short} = {orig}")
    for orig, short in row_ids.items():
        rows.append(f"* ROW    {short} = {orig}")
    rows.append(f"NAME          {model.name[:8].upper() or 'MODEL'}")
    if model.objective_sense == "max":
        rows.append("OBJSENSE")
        rows.append("    MAX")
    rows.append("ROWS")
    rows.append(" N  OBJ")
    for c in model.constraints:
        rows.append(f" {_SENSE_TO_ROW[c.sense]}  {row_ids[c.name]}")

    # column-major coefficient lists
    by_col: dict = {v.name: [] for v in model.variables}
    for c in model.constraints:
        for var, coef in c.coeffs.items():
            by_col[var].append((row_ids[c.name], coef))
    for var, coef in model.objective.items():
        by_col[var].append(("OBJ", coef))

    rows.append("COLUMNS")
    in_integer = False
    marker = 0
    for v in model.variables:
        if v.integer != in_integer:
            kind = "'INTORG'" if v.integer else "'INTEND'"
            rows.append(f"    MARKER{marker:02d}  'MARKER'                 {kind}")
            marker += 1
            in_integer = v.integer
        entries = by_col[v.name]
        if not entries:
            entries = [("OBJ", 0.0)]
        for row_name, coef in entries:
            rows.append(f"    {col_ids[v.name]:<8}  {row_name:<8}  {_fmt(coef)}")
    if in_integer:
        rows.append(f"    MARKER{marker:02d}  'MARKER'                 'INTEND'")

    rows.append("RHS")
    for c in model.constraints:
        if c.rhs != 0.0:
            rows.append(f"    RHS       {row_ids[c.name]:<8}  {_fmt(c.rhs)}")
    if model.objective_constant != 0.0:
        rows.append(f"    RHS       OBJ       {_fmt(-model.objective_constant)}")

    rows.append("BOUNDS")
    for v in model.variables:
        cid = col_ids[v.name]
        if v.integer and v.lb == 0.0 and v.ub == 1.0:
            rows.append(f" BV BND       {cid}")
            continue
        if v.lb == 0.0 and math.isinf(v.ub) and not v.integer:
            continue  # MPS default
        if math.isinf(v.lb) and math.isinf(v.ub):
            rows.append(f" FR BND       {cid}")
            continue
        if math.isinf(v.lb):
            rows.append(f" MI BND       {cid}")
        elif v.lb != 0.0 or v.integer:
            rows.append(f" LO BND       {cid}  {_fmt(v.lb)}")
        if not math.isinf(v.ub):
            rows.append(f" UP BND       {cid}  {_fmt(v.ub)}")
    rows.append("ENDATA")

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


def read_mps(path) -> Model:
    """Parse a fixed-format MPS file written by :func:`write_mps`.

    Returns an equivalent Model (short MPS identifiers as names).
    """
    section = None
    sense = "min"
    row_sense: dict = {}
    row_order: list = []
    col_entries: dict = {}
    col_order: list = []
    integer_cols: set = set()
    rhs: dict = {}
    bounds: dict = {}
    obj_constant = 0.0
    in_integer = False
    name = "model"

    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("*"):
                continue
            if not line[0].isspace():
                head = line.split()
                section = head[0].upper()
                if section == "NAME" and len(head) > 1:
                    name = head[1]
                if section == "ENDATA":
                    break
                continue
            tokens = line.split()
            if section == "OBJSENSE":
                sense = "max" if tokens[0].upper().startswith("MAX") else "min"
            elif section == "ROWS":
                kind, rname = tokens[0].upper(), tokens[1]
                if kind == "N":
                    continue
                row_sense[rname] = _ROW_TO_SENSE[kind]
                row_order.append(rname)
            elif section == "COLUMNS":
                if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                    in_integer = tokens[2] == "'INTORG'"
                    continue
                cname = tokens[0]
                if cname not in col_entries:
                    col_entries[cname] = []
                    col_order.append(cname)
                    if in_integer:
                        integer_cols.add(cname)
                for i in range(1, len(tokens) - 1, 2):
                    col_entries[cname].append((tokens[i], float(tokens[i + 1])))
            elif section == "RHS":
                for i in range(1, len(tokens) - 1, 2):
                    if tokens[i] == "OBJ":
                        obj_constant = -float(tokens[i + 1])
                    else:
                        rhs[tokens[i]] = float(tokens[i + 1])
            elif section == "BOUNDS":
                btype = tokens[0].upper()
                cname = tokens[2]
                val = float(tokens[3]) if len(tokens) > 3 else None
                lb, ub = bounds.get(cname, (0.0, math.inf))
                if btype == "UP":
                    ub = val
                elif btype == "LO":
                    lb = val
                elif btype == "FX":
                    lb = ub = val
                elif btype == "FR":
                    lb, ub = -math.inf, math.inf
                elif btype == "MI":
                    lb = -math.inf
                elif btype == "PL":
                    ub = math.inf
                elif btype == "BV":
                    lb, ub = 0.0, 1.0
                    integer_cols.add(cname)
                else:
                    raise ModelError(f"unsupported bound type {btype!r}")
                bounds[cname] = (lb, ub)

    model = Model(name=name)
    for cname in col_order:
        lb, ub = bounds.get(cname, (0.0, math.inf))
        if cname in integer_cols and math.isinf(ub):
            raise ModelError(f"integer column {cname!r} lacks an upper bound")
        model.add_variable(cname, lb, ub, integer=cname in integer_cols)

    obj: dict = {}
    row_coeffs: dict = {rname: {} for rname in row_order}
    for cname in col_order:
        for rname, coef in col_entries[cname]:
            if rname == "OBJ":
                if coef != 0.0:
                    obj[cname] = obj.get(cname, 0.0) + coef
            else:
                row_coeffs[rname][cname] = row_coeffs[rname].get(cname, 0.0) + coef
    for rname in row_order:
        model.add_constraint(row_coeffs[rname], row_sense[rname],
                             rhs.get(rname, 0.0), name=rname)
    model.set_objective(obj, sense=sense, constant=obj_constant)
    return model
