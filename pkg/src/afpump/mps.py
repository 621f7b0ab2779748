"""MPS reader (fixed and free format) and canonical writer."""

from __future__ import annotations

import gzip
import math
import os
from collections import OrderedDict

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, MipInstance, ModelError

SECTIONS = ("NAME", "OBJSENSE", "OBJSENS", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")
BOUND_TYPES = ("UP", "LO", "FX", "BV", "MI", "PL", "UI", "LI", "FR")
_ROW_TYPES = {"N": None, "L": LE, "G": GE, "E": EQ}


class MpsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _number(tok: str, lineno: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise MpsError(f"malformed number {tok!r}", lineno) from None
    if math.isnan(value):
        raise MpsError(f"malformed number {tok!r}", lineno)
    return value


def _fixed_fields(line: str) -> list[str]:
    # 1-based columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    spans = ((1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61))
    out = [line[a:b].strip() for a, b in spans]
    while out and not out[-1]:
        out.pop()
    return out


def _detect_fixed(lines: list[tuple[int, str]]) -> bool:
    """Fixed format is assumed only when a ROWS record cannot be split on whitespace."""
    in_rows = False
    for _, raw in lines:
        if raw and not raw[0].isspace():
            in_rows = raw.split()[0].upper() == "ROWS"
            continue
        if in_rows and len(raw.split()) > 2:
            return True
    return False


def _tokens(raw: str, fixed: bool, section: str) -> list[str]:
    if not fixed:
        return raw.split()
    fields = _fixed_fields(raw)
    if section == "ROWS":
        return [f for f in fields[:2] if f]
    if section == "BOUNDS":
        return [f for f in fields[:4] if f != ""] if fields and fields[0] else raw.split()
    # COLUMNS / RHS / RANGES: field 1 (type) is unused, the set/column name may be blank
    return [f for f in fields[1:] if f != ""]


def parse_mps(text: str | bytes, name: str | None = None) -> MipInstance:
    """Parse MPS text into a validated :class:`MipInstance`.

    Variables between INTORG/INTEND markers are integer; an integer column
    with no explicit upper bound gets [0, 1]. RANGES are expanded into an
    extra row named ``<row>_rng`` so every row keeps a single sense.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    lines = [(i + 1, raw.rstrip("\r\n")) for i, raw in enumerate(text.splitlines())]
    lines = [(i, raw) for i, raw in lines if raw.strip() and not raw.lstrip().startswith("*")]
    fixed = _detect_fixed(lines)

    prob_name = name or ""
    maximize = False
    obj_row: str | None = None
    row_sense: OrderedDict[str, str] = OrderedDict()
    columns: OrderedDict[str, dict[str, float]] = OrderedDict()
    integer_cols: set[str] = set()
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    bounds: dict[str, list] = {}
    section = None
    in_marker = False
    marker_line = None
    seen_end = False

    for lineno, raw in lines:
        if not raw[0].isspace():
            head = raw.split()
            key = head[0].upper()
            if key not in SECTIONS:
                raise MpsError(f"unknown section {head[0]!r}", lineno)
            section = "OBJSENSE" if key == "OBJSENS" else key
            if key == "NAME":
                if name is None:
                    prob_name = raw[4:].strip() if fixed else " ".join(head[1:])
            elif section == "OBJSENSE" and len(head) > 1:
                maximize = _objsense(head[1], lineno)
            elif key == "ENDATA":
                seen_end = True
                break
            elif len(head) > 1 and key not in ("RHS", "RANGES", "BOUNDS"):
                raise MpsError(f"unexpected tokens after {key}", lineno)
            continue
        if section is None:
            raise MpsError("data record before any section", lineno)
        if section == "NAME":
            raise MpsError("unexpected record in NAME section", lineno)
        if section == "OBJSENSE":
            maximize = _objsense(raw.split()[0], lineno)
            continue
        tok = _tokens(raw, fixed, section)
        if section == "ROWS":
            if len(tok) != 2:
                raise MpsError("ROWS record needs a type and a name", lineno)
            rtype, rname = tok[0].upper(), tok[1]
            if rtype not in _ROW_TYPES:
                raise MpsError(f"unknown row type {tok[0]!r}", lineno)
            if rname in row_sense or rname == obj_row:
                raise MpsError(f"duplicate row {rname!r}", lineno)
            if rtype == "N":
                if obj_row is not None:
                    raise MpsError("more than one objective (N) row", lineno)
                obj_row = rname
            else:
                row_sense[rname] = _ROW_TYPES[rtype]
        elif section == "COLUMNS":
            if "'MARKER'" in tok:
                kind = tok[-1].strip("'").upper()
                if kind == "INTORG":
                    if in_marker:
                        raise MpsError("nested INTORG marker", lineno)
                    in_marker, marker_line = True, lineno
                elif kind == "INTEND":
                    if not in_marker:
                        raise MpsError("INTEND without INTORG", lineno)
                    in_marker = False
                else:
                    raise MpsError(f"unknown marker {tok[-1]!r}", lineno)
                continue
            if len(tok) not in (3, 5):
                raise MpsError("COLUMNS record needs a column and row/value pairs", lineno)
            col = tok[0]
            entries = columns.setdefault(col, {})
            if in_marker:
                integer_cols.add(col)
            for rname, val in zip(tok[1::2], tok[2::2]):
                if rname != obj_row and rname not in row_sense:
                    raise MpsError(f"undeclared row {rname!r}", lineno)
                entries[rname] = entries.get(rname, 0.0) + _number(val, lineno)
        elif section in ("RHS", "RANGES"):
            pairs = _pairs(tok, row_sense, obj_row, lineno)
            target = rhs if section == "RHS" else ranges
            for rname, val in pairs:
                if section == "RANGES" and rname == obj_row:
                    raise MpsError("RANGES entry on the objective row", lineno)
                target[rname] = _number(val, lineno)
        elif section == "BOUNDS":
            btype, col, val = _bound_record(tok, columns, lineno)
            bounds.setdefault(col, []).append((btype, val, lineno))
    if in_marker:
        raise MpsError("INTORG marker never closed", marker_line)
    if not seen_end:
        raise MpsError("missing ENDATA")
    if obj_row is None:
        raise MpsError("no objective (N) row declared")
    return _assemble(prob_name, maximize, obj_row, row_sense, columns, integer_cols, rhs, ranges, bounds)


def _objsense(tok: str, lineno: int) -> bool:
    t = tok.upper()
    if t in ("MAX", "MAXIMIZE"):
        return True
    if t in ("MIN", "MINIMIZE"):
        return False
    raise MpsError(f"unknown OBJSENSE {tok!r}", lineno)


def _pairs(tok, row_sense, obj_row, lineno):
    def known(r):
        return r == obj_row or r in row_sense

    if len(tok) in (2, 4) and known(tok[0]):
        body = tok
    elif len(tok) in (3, 5):
        body = tok[1:]
    else:
        raise MpsError("malformed RHS/RANGES record", lineno)
    out = list(zip(body[0::2], body[1::2]))
    for r, _ in out:
        if not known(r):
            raise MpsError(f"undeclared row {r!r}", lineno)
    return out


def _bound_record(tok, columns, lineno):
    if not tok:
        raise MpsError("empty BOUNDS record", lineno)
    btype = tok[0].upper()
    if btype not in BOUND_TYPES:
        raise MpsError(f"unsupported bound type {tok[0]!r}", lineno)
    rest = tok[1:]
    needs_value = btype not in ("MI", "PL", "FR", "BV")
    # the bound-set name is optional in free format
    if len(rest) >= 2 and rest[1] in columns and not (len(rest) == 2 and needs_value and rest[0] in columns):
        rest = rest[1:]
    if not rest or rest[0] not in columns:
        raise MpsError(f"bound on unknown column {rest[0] if rest else ''!r}", lineno)
    col = rest[0]
    if needs_value:
        if len(rest) < 2:
            raise MpsError(f"{btype} bound needs a value", lineno)
        val = _number(rest[1], lineno)
    else:
        val = _number(rest[1], lineno) if len(rest) > 1 else None
    return btype, col, val


def _assemble(prob_name, maximize, obj_row, row_sense, columns, integer_cols, rhs, ranges, bounds):
    col_names = list(columns)
    col_index = {c: j for j, c in enumerate(col_names)}
    n = len(col_names)
    row_names = list(row_sense)
    senses = [row_sense[r] for r in row_names]
    b = [rhs.get(r, 0.0) for r in row_names]
    row_index = {r: i for i, r in enumerate(row_names)}

    rows, cols, vals = [], [], []
    c = np.zeros(n)
    for j, cname in enumerate(col_names):
        for rname, v in columns[cname].items():
            if rname == obj_row:
                c[j] = v
            else:
                rows.append(row_index[rname])
                cols.append(j)
                vals.append(v)

    extra = []
    for rname, r in ranges.items():
        i = row_index[rname]
        s, base = senses[i], b[i]
        if s == LE:
            lo, hi = base - abs(r), base
        elif s == GE:
            lo, hi = base, base + abs(r)
        else:
            lo, hi = (base, base + abs(r)) if r >= 0 else (base - abs(r), base)
        if s == LE:
            extra.append((i, GE, lo))
        elif s == GE:
            extra.append((i, LE, hi))
        else:
            senses[i], b[i] = GE, lo
            extra.append((i, LE, hi))
    base_nnz = len(vals)
    for i, s, val in extra:
        k = len(row_names)
        row_names.append(f"{row_names[i]}_rng")
        senses.append(s)
        b.append(val)
        for t in range(base_nnz):
            if rows[t] == i:
                rows.append(k)
                cols.append(cols[t])
                vals.append(vals[t])

    is_int = np.zeros(n, dtype=bool)
    for cname in integer_cols:
        is_int[col_index[cname]] = True
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    has_upper = np.zeros(n, dtype=bool)
    for cname, recs in bounds.items():
        j = col_index[cname]
        for btype, val, lineno in recs:
            if btype == "UP":
                upper[j] = val
                has_upper[j] = True
                if val < 0 and lower[j] == 0:
                    lower[j] = -np.inf
            elif btype == "LO":
                lower[j] = val
            elif btype == "FX":
                lower[j] = upper[j] = val
                has_upper[j] = True
            elif btype == "BV":
                is_int[j] = True
                lower[j], upper[j] = 0.0, 1.0
                has_upper[j] = True
            elif btype == "MI":
                lower[j] = -np.inf
            elif btype == "PL":
                upper[j] = np.inf
                has_upper[j] = True
            elif btype == "FR":
                lower[j], upper[j] = -np.inf, np.inf
                has_upper[j] = True
            elif btype == "UI":
                is_int[j] = True
                upper[j] = val
                has_upper[j] = True
            elif btype == "LI":
                is_int[j] = True
                lower[j] = val
    default_up = is_int & ~has_upper & ~(lower > 1.0)
    upper[default_up] = 1.0
    off = 0.0 - rhs.get(obj_row, 0.0)
    objective_sign = -1.0 if maximize else 1.0
    m = len(row_names)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    try:
        return MipInstance(
            name=prob_name,
            objective=objective_sign * c,
            A=A,
            sense=tuple(senses),
            rhs=np.array(b, dtype=float),
            lower=lower,
            upper=upper,
            integers=np.flatnonzero(is_int),
            var_names=tuple(col_names),
            row_names=tuple(row_names),
            objective_offset=objective_sign * off if off else 0.0,
            maximize=maximize,
        )
    except ModelError as exc:
        raise MpsError(f"ingestion failed: {exc}") from exc


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_canonical(inst: MipInstance, obj_name: str = "OBJ") -> str:
    """Free-format MPS text that parses back to an identical instance.

    Every column is listed (columns without coefficients get an explicit
    zero objective entry) and every bound is written out, so no reader
    defaults are involved. Row entries within a column are sorted by row.
    """
    for label in (*inst.var_names, *inst.row_names, inst.name):
        if any(ch.isspace() for ch in label):
            raise ValueError(f"name {label!r} contains whitespace; free-format MPS cannot hold it")
    sign = -1.0 if inst.maximize else 1.0
    out = [f"NAME {inst.name}".rstrip()]
    if inst.maximize:
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out.append(f" N  {obj_name}")
    for rname, s in zip(inst.row_names, inst.sense):
        out.append(f" {s}  {rname}")
    out.append("COLUMNS")
    A = inst.A.tocsc()
    A.sort_indices()
    ints = set(inst.integers.tolist())
    in_marker = False
    marker = 0
    for j, cname in enumerate(inst.var_names):
        if (j in ints) != in_marker:
            tag = "INTORG" if not in_marker else "INTEND"
            out.append(f"    MARKER{marker} 'MARKER' '{tag}'")
            marker += in_marker
            in_marker = not in_marker
        start, end = A.indptr[j], A.indptr[j + 1]
        cj = sign * inst.objective[j]
        if cj != 0.0 or start == end:
            out.append(f"    {cname} {obj_name} {_fmt(cj)}")
        for k in range(start, end):
            out.append(f"    {cname} {inst.row_names[A.indices[k]]} {_fmt(A.data[k])}")
    if in_marker:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if inst.objective_offset:
        out.append(f"    RHS {obj_name} {_fmt(-sign * inst.objective_offset)}")
    for rname, v in zip(inst.row_names, inst.rhs):
        if v != 0.0:
            out.append(f"    RHS {rname} {_fmt(v)}")
    out.append("BOUNDS")
    for j, cname in enumerate(inst.var_names):
        lo, hi = inst.lower[j], inst.upper[j]
        if lo == hi:
            out.append(f" FX BND {cname} {_fmt(lo)}")
            continue
        if j in ints and lo == 0.0 and hi == 1.0:
            out.append(f" BV BND {cname}")
            continue
        if lo == -np.inf:
            out.append(f" MI BND {cname}")
        elif lo != 0.0:
            out.append(f" LO BND {cname} {_fmt(lo)}")
        if hi == np.inf:
            out.append(f" PL BND {cname}")
        else:
            out.append(f" UP BND {cname} {_fmt(hi)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def read_mps(path: str | os.PathLike) -> MipInstance:
    """Read an MPS file, transparently decompressing ``.gz`` input."""
    path = os.fspath(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as fh:
        data = fh.read()
    base = os.path.basename(path)
    for ext in (".gz", ".mps", ".MPS", ".free"):
        if base.endswith(ext):
            base = base[: -len(ext)]
    inst = parse_mps(data)
    if not inst.name:
        return parse_mps(data, name=base)
    return inst


def write_mps(inst: MipInstance, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(dump_canonical(inst))
