"""MILP instances: representation, file formats, standard form and the
brute-force integer optimum used as the desk-scale oracle."""

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import ParseError, TooLarge, UnsupportedFeature
from .linalg_lp import LpProblem, Status, solve_lp

log = logging.getLogger(__name__)

FORMAT_TAG = "vpc-forge-instance"
FORMAT_VERSION = 1
DEFAULT_ENUM_CAP = 2**20

_SENSE_IN = {">=": "G", "<=": "L", "=": "E", "==": "E", "G": "G", "L": "L", "E": "E"}
_SENSE_OUT = {"G": ">=", "L": "<=", "E": "="}


@dataclass(frozen=True, eq=False)
class Transform:
    """Map between raw variables and standard-form variables.

    ``x_raw = offset + sign * x_std`` componentwise.  ``row_origin[i]`` says
    where standard row ``i`` came from: ``("row", k, +-1)`` for raw row ``k``
    (possibly negated) or ``("ub", j, -1)`` for the upper bound of ``x_j``.
    """

    sign: np.ndarray
    offset: np.ndarray
    obj_offset: float
    row_origin: tuple

    def point_to_raw(self, x_std):
        return self.offset + self.sign * np.asarray(x_std, dtype=float)

    def point_from_raw(self, x_raw):
        return self.sign * (np.asarray(x_raw, dtype=float) - self.offset)

    def cut_to_raw(self, alpha, beta):
        a = np.asarray(alpha, dtype=float)
        a_raw = self.sign * a
        return a_raw, float(beta + a_raw @ self.offset)

    def cut_from_raw(self, alpha, beta):
        a = np.asarray(alpha, dtype=float)
        return self.sign * a, float(beta - a @ self.offset)


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    lp: LpProblem
    integer_vars: tuple
    var_names: tuple = None
    row_names: tuple = None
    maximize: bool = False
    transform: Transform = None
    reference: dict = field(default_factory=dict)

    def __post_init__(self):
        n, m = self.lp.n, self.lp.m
        object.__setattr__(self, "integer_vars", tuple(sorted(int(j) for j in self.integer_vars)))
        if self.var_names is None:
            object.__setattr__(self, "var_names", tuple(f"x{j + 1}" for j in range(n)))
        if self.row_names is None:
            object.__setattr__(self, "row_names", tuple(f"r{i + 1}" for i in range(m)))
        if len(self.var_names) != n or len(self.row_names) != m:
            raise ValueError("name lists do not match problem dimensions")
        if any(j < 0 or j >= n for j in self.integer_vars):
            raise ValueError("integer index out of range")

    @property
    def n(self):
        return self.lp.n

    @property
    def q(self):
        return self.lp.m

    @property
    def is_standard(self):
        return self.transform is not None

    def unbounded_integers(self):
        """Integer variables without a finite raw bound on either side."""
        return tuple(j for j in self.integer_vars if not (np.isfinite(self.lp.lo[j]) and np.isfinite(self.lp.hi[j])))

    def is_integral(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        idx = list(self.integer_vars)
        return bool(np.all(np.abs(x[idx] - np.round(x[idx])) <= tol))

    def reference_std(self, key):
        """A stored raw reference value converted to the standard min objective."""
        v = self.reference.get(key)
        if v is None:
            return None
        v = float(v)
        if self.maximize:
            v = -v
        if self.transform is not None:
            v -= self.transform.obj_offset
        return v


# ---------------------------------------------------------------------------
# standard form


def standardize(raw):
    """Rewrite ``raw`` as ``min c x, A x >= b, x >= 0`` (finite upper bounds
    become rows ``-x_j >= -u_j``; integer bounds are rounded inward)."""
    if raw.transform is not None:
        return raw
    lp = raw.lp
    n = lp.n
    ints = set(raw.integer_vars)
    lo = lp.lo.copy()
    hi = lp.hi.copy()
    for j in ints:
        if np.isfinite(lo[j]):
            lo[j] = math.ceil(lo[j] - 1e-9)
        if np.isfinite(hi[j]):
            hi[j] = math.floor(hi[j] + 1e-9)
    sign = np.ones(n)
    offset = np.zeros(n)
    upper = np.full(n, np.inf)
    for j in range(n):
        if np.isfinite(lo[j]):
            offset[j] = lo[j]
            upper[j] = hi[j] - lo[j]
        elif np.isfinite(hi[j]):
            sign[j] = -1.0
            offset[j] = hi[j]
        else:
            raise UnsupportedFeature(f"free variable {raw.var_names[j]!r} has no finite bound")

    A = lp.A * sign
    b = lp.rhs - lp.A @ offset if lp.m else np.zeros(0)
    rows, rhs, origin, names = [], [], [], []
    for i, s in enumerate(lp.senses):
        if s in "GE":
            rows.append(A[i])
            rhs.append(b[i])
            origin.append(("row", i, 1))
            names.append(raw.row_names[i] if s == "G" else raw.row_names[i] + "_ge")
        if s in "LE":
            rows.append(-A[i])
            rhs.append(-b[i])
            origin.append(("row", i, -1))
            names.append(raw.row_names[i] if s == "L" else raw.row_names[i] + "_le")
    for j in range(n):
        if np.isfinite(upper[j]):
            e = np.zeros(n)
            e[j] = -1.0
            rows.append(e)
            rhs.append(-upper[j])
            origin.append(("ub", j, -1))
            names.append(f"ub_{raw.var_names[j]}")
    c = lp.objective * sign
    obj_offset = float(lp.objective @ offset)
    std_lp = LpProblem(c, np.array(rows).reshape(-1, n), np.array(rhs, dtype=float), None, np.zeros(n), np.full(n, np.inf))
    tr = Transform(sign=sign, offset=offset, obj_offset=obj_offset, row_origin=tuple(origin))
    return Instance(
        name=raw.name,
        lp=std_lp,
        integer_vars=raw.integer_vars,
        var_names=raw.var_names,
        row_names=tuple(names),
        maximize=raw.maximize,
        transform=tr,
        reference=dict(raw.reference),
    )


# ---------------------------------------------------------------------------
# native JSON


def _num(v, where):
    if v is None:
        return None
    if isinstance(v, bool):
        raise ParseError(f"expected a number at {where}, got a boolean")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        t = v.strip().lower()
        if t in ("inf", "+inf", "infinity"):
            return math.inf
        if t in ("-inf", "-infinity"):
            return -math.inf
        try:
            return float(Fraction(t))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad number {v!r} at {where}") from None
    raise ParseError(f"expected a number at {where}, got {type(v).__name__}")


def _parse_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    if doc.get("format", FORMAT_TAG) != FORMAT_TAG:
        raise ParseError(f"unknown format tag {doc.get('format')!r}")
    if int(doc.get("version", FORMAT_VERSION)) > FORMAT_VERSION:
        raise UnsupportedFeature(f"format version {doc['version']} is newer than {FORMAT_VERSION}")
    try:
        variables = doc["variables"]
        rows = doc.get("rows", [])
    except KeyError as e:
        raise ParseError(f"missing key {e.args[0]!r}") from None
    names = [str(v["name"]) for v in variables]
    col = {nm: j for j, nm in enumerate(names)}
    if len(col) != len(names):
        raise ParseError("duplicate variable names")
    n = len(names)
    lo = np.array([_num(v.get("lb", 0.0), f"variables[{j}].lb") if v.get("lb", 0.0) is not None else -math.inf for j, v in enumerate(variables)])
    hi = np.array([_num(v.get("ub"), f"variables[{j}].ub") if v.get("ub") is not None else math.inf for j, v in enumerate(variables)])
    ints = [j for j, v in enumerate(variables) if v.get("integer", False)]

    def vec(spec, where):
        out = np.zeros(n)
        if isinstance(spec, list):
            if len(spec) != n:
                raise ParseError(f"{where} has {len(spec)} entries, expected {n}")
            for j, v in enumerate(spec):
                out[j] = _num(v, f"{where}[{j}]")
        elif isinstance(spec, dict):
            for k, v in spec.items():
                if k not in col:
                    raise ParseError(f"{where} references unknown variable {k!r}")
                out[col[k]] = _num(v, f"{where}.{k}")
        else:
            raise ParseError(f"{where} must be a list or an object")
        return out

    c = vec(doc.get("objective", [0.0] * n), "objective")
    sense = doc.get("sense", "min")
    if sense not in ("min", "max"):
        raise ParseError(f"objective sense must be 'min' or 'max', got {sense!r}")
    maximize = sense == "max"
    A, b, senses, rnames = [], [], [], []
    for i, r in enumerate(rows):
        A.append(vec(r.get("coefs", {}), f"rows[{i}].coefs"))
        s = r.get("sense", ">=")
        if s not in _SENSE_IN:
            raise ParseError(f"rows[{i}] has unknown sense {s!r}")
        senses.append(_SENSE_IN[s])
        b.append(_num(r.get("rhs", 0.0), f"rows[{i}].rhs"))
        rnames.append(str(r.get("name", f"r{i + 1}")))
    lp = LpProblem(-c if maximize else c, np.array(A).reshape(-1, n), np.array(b, dtype=float), tuple(senses), lo, hi)
    ref = {k: float(_num(v, f"reference.{k}")) for k, v in (doc.get("reference") or {}).items() if v is not None}
    return Instance(
        name=str(doc.get("name", "unnamed")),
        lp=lp,
        integer_vars=ints,
        var_names=tuple(names),
        row_names=tuple(rnames),
        maximize=maximize,
        reference=ref,
    )


def _jnum(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == int(v) and abs(v) < 2**53:
        return int(v)
    return v


def serialize_instance(inst):
    """Native JSON text (stable key order, exact float repr)."""
    lp = inst.lp
    c = -lp.objective if inst.maximize else lp.objective
    doc = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "name": inst.name,
        "sense": "max" if inst.maximize else "min",
        "variables": [
            {
                "name": inst.var_names[j],
                "lb": None if lp.lo[j] == -math.inf else _jnum(lp.lo[j]),
                "ub": None if lp.hi[j] == math.inf else _jnum(lp.hi[j]),
                "integer": j in inst.integer_vars,
            }
            for j in range(lp.n)
        ],
        "objective": {inst.var_names[j]: _jnum(c[j]) for j in range(lp.n) if c[j] != 0},
        "rows": [
            {
                "name": inst.row_names[i],
                "coefs": {inst.var_names[j]: _jnum(lp.A[i, j]) for j in range(lp.n) if lp.A[i, j] != 0},
                "sense": _SENSE_OUT[lp.senses[i]],
                "rhs": _jnum(lp.rhs[i]),
            }
            for i in range(lp.m)
        ],
    }
    if inst.reference:
        doc["reference"] = {k: _jnum(v) for k, v in sorted(inst.reference.items())}
    return json.dumps(doc, indent=1) + "\n"


# ---------------------------------------------------------------------------
# MPS (fixed and free format, whitespace-separated names)

_MPS_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA", "OBJSENSE", "OBJSENSE MAX", "OBJSENSE MIN"}
_MPS_UNSUPPORTED = {"SOS", "QUADOBJ", "QMATRIX", "QSECTION", "QCMATRIX", "CSECTION", "INDICATORS", "SETS"}


def _tokens(line):
    out, pos = [], 0
    for tok in line.split():
        pos = line.index(tok, pos)
        out.append((tok, pos + 1))
        pos += len(tok)
    return out


def _parse_mps(text):
    name = "unnamed"
    section = None
    obj_row = None
    row_sense = {}
    row_order = []
    cols = {}
    col_order = []
    ints = set()
    in_int = False
    rhs = {}
    ranges = {}
    lb, ub = {}, {}
    maximize = False

    def fnum(tok, ln, cn):
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"bad number {tok!r}", ln, cn) from None

    for ln, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        if not line[0].isspace():
            head = line.split()
            key = head[0].upper()
            if key in _MPS_UNSUPPORTED:
                raise UnsupportedFeature(f"MPS section {key} is not supported (line {ln})")
            if key not in _MPS_SECTIONS:
                raise ParseError(f"unknown MPS section {head[0]!r}", ln, 1)
            section = key
            if key == "NAME":
                name = head[1] if len(head) > 1 else name
            elif key == "OBJSENSE" and len(head) > 1:
                maximize = head[1].upper() in ("MAX", "MAXIMIZE")
            elif key == "ENDATA":
                break
            continue
        toks = _tokens(line)
        words = [t for t, _ in toks]
        if section == "OBJSENSE":
            maximize = words[0].upper() in ("MAX", "MAXIMIZE")
        elif section == "ROWS":
            if len(words) != 2:
                raise ParseError("ROWS entry needs a type and a name", ln, toks[0][1])
            typ, rname = words[0].upper(), words[1]
            if typ == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if typ not in ("G", "L", "E"):
                raise ParseError(f"unknown row type {words[0]!r}", ln, toks[0][1])
            if rname in row_sense:
                raise ParseError(f"duplicate row {rname!r}", ln, toks[1][1])
            row_sense[rname] = typ
            row_order.append(rname)
        elif section == "COLUMNS":
            if len(words) >= 3 and words[1].strip("'\"").upper() == "MARKER":
                mk = words[2].strip("'\"").upper()
                if mk == "INTORG":
                    in_int = True
                elif mk == "INTEND":
                    in_int = False
                else:
                    raise ParseError(f"unknown marker {words[2]!r}", ln, toks[2][1])
                continue
            if len(words) not in (3, 5):
                raise ParseError("COLUMNS entry needs a column and 1 or 2 (row, value) pairs", ln, toks[0][1])
            cname = words[0]
            if cname not in cols:
                cols[cname] = {}
                col_order.append(cname)
            if in_int:
                ints.add(cname)
            for k in range(1, len(words), 2):
                rname = words[k]
                if rname != obj_row and rname not in row_sense:
                    raise ParseError(f"unknown row {rname!r}", ln, toks[k][1])
                cols[cname][rname] = fnum(words[k + 1], ln, toks[k + 1][1])
        elif section in ("RHS", "RANGES"):
            target = rhs if section == "RHS" else ranges
            start = 1 if len(words) % 2 == 1 else 0
            if len(words) - start not in (2, 4):
                raise ParseError(f"{section} entry needs 1 or 2 (row, value) pairs", ln, toks[0][1])
            for k in range(start, len(words), 2):
                rname = words[k]
                if rname != obj_row and rname not in row_sense:
                    raise ParseError(f"unknown row {rname!r}", ln, toks[k][1])
                target[rname] = fnum(words[k + 1], ln, toks[k + 1][1])
        elif section == "BOUNDS":
            typ = words[0].upper()
            if typ in ("FR", "MI", "PL", "BV"):
                cname = words[2] if len(words) >= 3 else words[1]
                val = None
            else:
                if len(words) == 4:
                    cname, val = words[2], fnum(words[3], ln, toks[3][1])
                elif len(words) == 3:
                    cname, val = words[1], fnum(words[2], ln, toks[2][1])
                else:
                    raise ParseError("BOUNDS entry has the wrong number of fields", ln, toks[0][1])
            if cname not in cols:
                raise ParseError(f"bound on unknown column {cname!r}", ln, toks[-1][1])
            if typ == "UP":
                ub[cname] = val
                if val < 0 and lb.get(cname, 0.0) == 0.0:
                    lb[cname] = -math.inf
            elif typ == "LO":
                lb[cname] = val
            elif typ == "FX":
                lb[cname] = ub[cname] = val
            elif typ == "FR":
                lb[cname], ub[cname] = -math.inf, math.inf
            elif typ == "MI":
                lb[cname] = -math.inf
            elif typ == "PL":
                ub[cname] = math.inf
            elif typ == "BV":
                lb[cname], ub[cname] = 0.0, 1.0
                ints.add(cname)
            elif typ in ("LI", "UI"):
                (lb if typ == "LI" else ub)[cname] = val
                ints.add(cname)
            else:
                raise ParseError(f"unknown bound type {words[0]!r}", ln, toks[0][1])
        else:
            raise ParseError("data line outside of a section", ln, toks[0][1])

    n = len(col_order)
    cidx = {c: j for j, c in enumerate(col_order)}
    ridx = {r: i for i, r in enumerate(row_order)}
    A = np.zeros((len(row_order), n))
    c = np.zeros(n)
    for cname, entries in cols.items():
        for rname, v in entries.items():
            if rname == obj_row:
                c[cidx[cname]] = v
            else:
                A[ridx[rname], cidx[cname]] = v
    rows, b, senses, rnames = [], [], [], []
    for rname in row_order:
        i = ridx[rname]
        s = row_sense[rname]
        r = rhs.get(rname, 0.0)
        if rname in ranges:
            R = ranges[rname]
            if s == "G":
                lo_r, hi_r = r, r + abs(R)
            elif s == "L":
                lo_r, hi_r = r - abs(R), r
            else:
                lo_r, hi_r = (r, r + R) if R >= 0 else (r + R, r)
            rows += [A[i], A[i]]
            b += [lo_r, hi_r]
            senses += ["G", "L"]
            rnames += [rname + "_lo", rname + "_hi"]
        else:
            rows.append(A[i])
            b.append(r)
            senses.append(s)
            rnames.append(rname)
    lo = np.array([lb.get(cn, 0.0) for cn in col_order])
    hi = np.array([ub.get(cn, math.inf) for cn in col_order])
    lp = LpProblem(-c if maximize else c, np.array(rows).reshape(-1, n), np.array(b, dtype=float), tuple(senses), lo, hi)
    return Instance(
        name=name,
        lp=lp,
        integer_vars=[cidx[cn] for cn in ints],
        var_names=tuple(col_order),
        row_names=tuple(rnames),
        maximize=maximize,
    )


def parse_instance(text, format="native-json"):
    """Parse instance text (``bytes`` or ``str``) in ``mps`` or ``native-json``."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if format in ("native-json", "json"):
        return _parse_json(text)
    if format == "mps":
        return _parse_mps(text)
    raise ValueError(f"unknown instance format {format!r}")


def load_instance(path):
    """Read an instance file, choosing the format from its suffix."""
    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    fmt = "mps" if path.lower().endswith((".mps", ".free-mps")) else "native-json"
    return parse_instance(data, fmt)


# ---------------------------------------------------------------------------
# brute-force integer optimum


@dataclass(frozen=True, eq=False)
class IpOptimum:
    value: float
    witness: np.ndarray = None

    @property
    def feasible(self):
        return self.witness is not None

    @property
    def infeasible(self):
        return self.witness is None


class IntegerHull:
    """Enumeration of the integer-feasible set of a standard-form instance.

    Pure-integer instances keep the explicit point list; mixed instances keep
    the feasible integer assignments and solve one LP over the continuous
    variables per assignment when asked for a minimum.
    """

    def __init__(self, inst, enum_cap=DEFAULT_ENUM_CAP, tol=1e-9):
        if not inst.is_standard:
            inst = standardize(inst)
        self.inst = inst
        lp = inst.lp
        n = lp.n
        self.ints = list(inst.integer_vars)
        self.conts = [j for j in range(n) if j not in set(self.ints)]
        self.empty = False
        self.points = None
        self.assignments = None
        lo_i, hi_i = [], []
        for j in self.ints:
            e = np.zeros(n)
            e[j] = 1.0
            smin = solve_lp(lp.with_objective(e))
            if smin.status is Status.INFEASIBLE:
                self.empty = True
                self.points = np.zeros((0, n))
                return
            smax = solve_lp(lp.with_objective(-e))
            if smax.status is Status.UNBOUNDED:
                raise TooLarge(f"integer variable {inst.var_names[j]!r} is unbounded; cannot enumerate")
            lo_i.append(math.ceil(smin.obj - 1e-9))
            hi_i.append(math.floor(-smax.obj + 1e-9))
        if not self.ints and lp.m:
            if solve_lp(lp).status is Status.INFEASIBLE:
                self.empty = True
                self.points = np.zeros((0, n))
                return
        lo_i = np.array(lo_i, dtype=np.int64)
        hi_i = np.array(hi_i, dtype=np.int64)
        if np.any(hi_i < lo_i):
            self.empty = True
            self.points = np.zeros((0, n))
            return
        size = 1
        for a, b in zip(lo_i, hi_i):
            size *= int(b - a + 1)
            if size > enum_cap:
                raise TooLarge(f"enumeration of {len(self.ints)} integer variables exceeds cap {enum_cap}")
        A = lp.A
        if not self.conts:
            pts = kernels.box_points(np.ascontiguousarray(A), lp.rhs.copy(), lo_i, hi_i, tol)
            self.points = pts.reshape(-1, n)
            self.empty = self.points.shape[0] == 0
            return
        # rows touching only integer columns filter assignments up front
        only_int = np.all(A[:, self.conts] == 0, axis=1) if lp.m else np.zeros(0, dtype=bool)
        Ai = np.ascontiguousarray(A[only_int][:, self.ints])
        assign = kernels.box_points(Ai, lp.rhs[only_int].copy(), lo_i, hi_i, tol)
        assign = assign.reshape(-1, len(self.ints))
        keep = []
        sub_A = A[:, self.conts]
        for a in assign:
            rhs = lp.rhs - A[:, self.ints] @ a
            sub = LpProblem(np.zeros(len(self.conts)), sub_A, rhs)
            if solve_lp(sub).status is not Status.INFEASIBLE:
                keep.append(a)
        self.assignments = np.array(keep).reshape(-1, len(self.ints))
        self.empty = self.assignments.shape[0] == 0

    @property
    def pure_integer(self):
        return not self.conts

    def minimize(self, c):
        """``min c x`` over the integer-feasible set as an ``IpOptimum``."""
        c = np.asarray(c, dtype=float)
        n = self.inst.n
        if self.empty:
            return IpOptimum(math.inf, None)
        if self.points is not None:
            vals = self.points @ c
            k = int(np.argmin(vals))
            return IpOptimum(float(vals[k]), self.points[k].copy())
        lp = self.inst.lp
        best, wit = math.inf, None
        sub_A = lp.A[:, self.conts]
        for a in self.assignments:
            rhs = lp.rhs - lp.A[:, self.ints] @ a
            sol = solve_lp(LpProblem(c[self.conts], sub_A, rhs))
            if sol.status is Status.INFEASIBLE:
                continue
            if sol.status is Status.UNBOUNDED:
                x = np.zeros(n)
                x[self.ints] = a
                x[self.conts] = sol.x
                return IpOptimum(-math.inf, x)
            v = float(c[self.ints] @ a) + sol.obj
            if v < best - 1e-12:
                best = v
                wit = np.zeros(n)
                wit[self.ints] = a
                wit[self.conts] = sol.x
        return IpOptimum(best, wit)

    def violated_by(self, alpha, beta, tol):
        """True if some integer-feasible point has ``alpha x < beta - tol``."""
        opt = self.minimize(alpha)
        return opt.feasible and opt.value < beta - tol


def brute_force_ip(instance, enum_cap=DEFAULT_ENUM_CAP):
    """Exact optimum over the integer hull by enumeration (standard-form
    objective; the witness is in the standard-form space)."""
    inst = instance if instance.is_standard else standardize(instance)
    hull = IntegerHull(inst, enum_cap)
    opt = hull.minimize(inst.lp.objective)
    if opt.witness is not None:
        w = opt.witness.copy()
        idx = list(inst.integer_vars)
        w[idx] = np.round(w[idx])
        opt = IpOptimum(opt.value, w)
    return opt

