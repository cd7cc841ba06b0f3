"""Gap-closed evaluation, validity oracles and report tables."""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .certify import certify_cut
from .collector import collect
from .disjunction import LEAF_COUNTS, build_partial_tree
from .errors import TooLarge, VpcError, ZeroGap
from .gmic import generate_gmics
from .linalg_lp import Status, solve_lp
from .model import IntegerHull, brute_force_ip, load_instance, standardize
from .monoidal import strengthen_cut, strengthening_stats, term_lower_bounds
from .prlp import build_prlp, cut_is_valid_for_collection, harvest_cuts, stack_cuts
from .tolerances import DEFAULT

log = logging.getLogger(__name__)

COLUMNS = ("G", "V", "V+", "G+V", "G+V+")
WIN_MARGIN = 1e-3
COHORT_MIN = 10.0


def ip_value(inst, enum_cap=None):
    """Standard-form IP optimum: stored reference first, else brute force."""
    std = standardize(inst)
    v = std.reference_std("ip_value")
    if v is not None:
        return v
    opt = brute_force_ip(std) if enum_cap is None else brute_force_ip(std, enum_cap)
    return opt.value


def lp_bound(inst, cuts):
    std = standardize(inst)
    A, b = stack_cuts(list(cuts), std.n)
    sol = solve_lp(std.lp.with_rows(A, b))
    if sol.status is Status.INFEASIBLE:
        # only possible through numerical trouble: every cut is valid for P_I
        log.warning("%s: LP with cuts is infeasible", std.name)
        return math.inf
    return sol.obj


def gap_closed(instance, cuts, z_ip=None, z_lp=None, tol=DEFAULT):
    """Percent of the LP-IP gap closed by appending ``cuts``."""
    std = standardize(instance)
    z_lp = lp_bound(std, []) if z_lp is None else z_lp
    z_ip = ip_value(std) if z_ip is None else z_ip
    if not math.isfinite(z_ip) or z_ip <= z_lp + tol.feas:
        raise ZeroGap(f"{std.name}: no integrality gap (z_lp={z_lp}, z_ip={z_ip})")
    if not cuts:
        return 0.0
    z = lp_bound(std, cuts)
    g = 100.0 * (z - z_lp) / (z_ip - z_lp)
    if g < -1e-6 or g > 100.0 + 1e-6:
        log.warning("%s: gap closed %.6f outside [0, 100]; clamped", std.name, g)
    return float(min(100.0, max(0.0, g)))


@dataclass
class CutVerdict:
    valid_pi: bool
    valid_pd: bool = None


def verify_cuts(instance, cuts, collection=None, hull=None, tol=DEFAULT):
    """Oracle check of each cut against enumerated integer points and, if a
    collection is given, against its points and rays."""
    std = standardize(instance)
    hull = IntegerHull(std) if hull is None else hull
    out = []
    for c in cuts:
        pi = not hull.violated_by(c.alpha, c.beta, tol.feas)
        pd = None
        if collection is not None:
            pd = cut_is_valid_for_collection(c, collection.points, collection.rays, tol.feas)
        out.append(CutVerdict(pi, pd))
    return out


@dataclass
class RowResult:
    instance: str
    leaves: int
    G: float = None
    V: float = None
    Vp: float = None
    GV: float = None
    GVp: float = None
    n_gmic: int = 0
    n_vpc: int = 0
    n_terms: int = 0
    disj_gap: float = None
    time_vpc: float = 0.0
    time_strengthen: float = 0.0
    pct_cuts_strengthened: float = None
    pct_coefs_strengthened: float = None
    cert_failures: int = 0
    error: str = None

    def value(self, col):
        return {"G": self.G, "V": self.V, "V+": self.Vp, "G+V": self.GV, "G+V+": self.GVp}[col]

    @property
    def time_total(self):
        return self.time_vpc + self.time_strengthen

    @property
    def time_per_cut(self):
        return self.time_total / self.n_vpc if self.n_vpc else None

    def to_dict(self, timing=False):
        d = {
            "instance": self.instance,
            "leaves": self.leaves,
            "G": self.G,
            "V": self.V,
            "V+": self.Vp,
            "G+V": self.GV,
            "G+V+": self.GVp,
            "n_gmic": self.n_gmic,
            "n_vpc": self.n_vpc,
            "n_terms": self.n_terms,
            "disj_gap": self.disj_gap,
            "pct_cuts_strengthened": self.pct_cuts_strengthened,
            "pct_coefs_strengthened": self.pct_coefs_strengthened,
            "cert_failures": self.cert_failures,
            "error": self.error,
        }
        if timing:
            d["time_total"] = self.time_total
            d["time_per_cut"] = self.time_per_cut
        return d


@dataclass
class InstanceRun:
    """Everything produced for one instance at one leaf count (for tests)."""

    row: RowResult
    gmics: list = field(default_factory=list)
    vpcs: list = field(default_factory=list)
    strengthened: list = field(default_factory=list)
    disjunction: object = None
    collection: object = None
    results: list = field(default_factory=list)


def _r(x):
    return None if x is None else round(float(x), 9)


def run_instance_leaf(inst, leaves, strengthen=True, z_ip=None, tol=DEFAULT, exact=False):
    std = standardize(inst)
    row = RowResult(std.name, leaves)
    run = InstanceRun(row)
    root = solve_lp(std.lp, tol=tol)
    if not root.optimal:
        row.error = f"root LP {root.status.value}"
        return run
    z_lp = root.obj
    z_ip = ip_value(std) if z_ip is None else z_ip
    try:
        gap_closed(std, [], z_ip, z_lp, tol)
    except ZeroGap as e:
        row.error = f"ZeroGap: {e}"
        return run

    def gc(cuts):
        return _r(gap_closed(std, cuts, z_ip, z_lp, tol))

    gm = generate_gmics(std, root, tol)
    run.gmics = gm
    row.n_gmic = len(gm)
    row.G = gc(gm)
    limit = max(1, len(gm))
    t0 = time.perf_counter()
    try:
        disj = build_partial_tree(std, leaves, tol)
        run.disjunction = disj
        row.n_terms = len(disj)
        bound = disj.best_bound()
        if math.isfinite(bound):
            row.disj_gap = _r(min(100.0, max(0.0, 100.0 * (bound - z_lp) / (z_ip - z_lp))))
        coll = collect(std, disj, tol)
        run.collection = coll
        prlp = build_prlp(coll, root.x, tol)
        vpcs = harvest_cuts(prlp, limit, std.lp.objective, std.integer_vars, tol)
    except VpcError as e:
        row.error = f"{type(e).__name__}: {e}"
        row.time_vpc = time.perf_counter() - t0
        row.V = row.Vp = 0.0
        row.GV = row.GVp = row.G
        return run
    row.time_vpc = time.perf_counter() - t0
    run.vpcs = vpcs
    row.n_vpc = len(vpcs)
    row.V = gc(vpcs)
    row.GV = gc(gm + vpcs)
    if strengthen:
        t1 = time.perf_counter()
        cache = {}
        bounds = {t.term_id: term_lower_bounds(std, t, cache, tol) for t in disj.terms}
        results = []
        for c in vpcs:
            certs, fails = certify_cut(c, coll, tol, exact=False)
            row.cert_failures += len(fails)
            results.append(strengthen_cut(c, certs, bounds, std, fails, exact, tol))
        row.time_strengthen = time.perf_counter() - t1
        run.results = results
        run.strengthened = [r.cut for r in results]
        st = strengthening_stats(results, len(std.integer_vars))
        row.pct_cuts_strengthened = _r(st["pct_cuts_strengthened"])
        row.pct_coefs_strengthened = _r(st["pct_coefs_strengthened"])
        row.Vp = gc(run.strengthened)
        row.GVp = gc(gm + run.strengthened)
    return run


def run_instance(inst, leaf_counts, strengthen=True, tol=DEFAULT):
    """All rows for one instance; failures become rows with ``error`` set."""
    rows = []
    try:
        std = standardize(inst)
        z_ip = ip_value(std)
    except (VpcError, TooLarge) as e:
        return [RowResult(inst.name, L, error=f"{type(e).__name__}: {e}") for L in leaf_counts]
    for L in leaf_counts:
        try:
            rows.append(run_instance_leaf(std, L, strengthen, z_ip, tol).row)
        except Exception as e:  # never abort a sweep
            log.exception("%s at %d leaves failed", inst.name, L)
            rows.append(RowResult(inst.name, L, error=f"{type(e).__name__}: {e}"))
    return rows


def _run_path(args):
    path, leaf_counts, strengthen, tol = args
    try:
        inst = load_instance(path)
    except VpcError as e:
        return [RowResult(str(path), L, error=f"{type(e).__name__}: {e}") for L in leaf_counts]
    return run_instance(inst, leaf_counts, strengthen, tol)


@dataclass
class EvalReport:
    leaf_counts: tuple
    rows: list
    strengthen: bool = True

    @property
    def instances(self):
        seen = []
        for r in self.rows:
            if r.instance not in seen:
                seen.append(r.instance)
        return seen

    def ok_rows(self, instances=None):
        return [r for r in self.rows if r.G is not None and (instances is None or r.instance in instances)]

    def best(self, instance, col):
        vals = [r.value(col) for r in self.rows if r.instance == instance and r.value(col) is not None]
        return max(vals) if vals else None

    def cohort(self, min_best_v=COHORT_MIN):
        """Instances whose best V reaches ``min_best_v`` percent."""
        return [i for i in self.instances if (self.best(i, "V") or 0.0) >= min_best_v]

    def summary(self, instances=None):
        """Table rows: per leaf count averages, Best averages and Wins counts."""
        insts = self.instances if instances is None else instances
        table = []
        for L in self.leaf_counts:
            rs = [r for r in self.ok_rows(insts) if r.leaves == L]
            table.append((f"{L} leaves", {c: _mean([r.value(c) for r in rs]) for c in COLUMNS}))
        best = {c: _mean([self.best(i, c) for i in insts]) for c in COLUMNS}
        table.append(("Best", best))
        wins = {}
        for c in COLUMNS:
            if c == "G":
                wins[c] = None
                continue
            n = 0
            for i in insts:
                b, g = self.best(i, c), self.best(i, "G")
                if b is not None and g is not None and b >= g + WIN_MARGIN:
                    n += 1
            wins[c] = n
        table.append(("Wins", wins))
        return table

    def timing(self):
        out = []
        for L in self.leaf_counts:
            rs = [r for r in self.rows if r.leaves == L and r.error is None]
            out.append(
                (
                    f"{L} leaves",
                    _mean([r.time_total for r in rs]),
                    _mean([r.time_per_cut for r in rs]),
                    _mean([r.pct_cuts_strengthened for r in rs]),
                    _mean([r.pct_coefs_strengthened for r in rs]),
                )
            )
        return out

    def to_json(self, timing=False):
        doc = {
            "leaf_counts": list(self.leaf_counts),
            "strengthen": self.strengthen,
            "columns": list(COLUMNS),
            "rows": [r.to_dict(timing) for r in self.rows],
            "table": [{"row": lbl, **vals} for lbl, vals in self.summary()],
            "cohort_min_best_v": COHORT_MIN,
            "cohort": self.cohort(),
            "cohort_table": [{"row": lbl, **vals} for lbl, vals in self.summary(self.cohort())],
        }
        if timing:
            doc["timing"] = [dict(zip(("row", "time_total", "time_per_cut", "pct_cuts", "pct_coefs"), t)) for t in self.timing()]
        return json.dumps(doc, indent=1, sort_keys=True, default=_jdefault) + "\n"

    def to_csv(self, timing=False):
        buf = io.StringIO()
        keys = list(RowResult("", 0).to_dict(timing).keys())
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt_csv(v) for k, v in r.to_dict(timing).items()})
        return buf.getvalue()

    def to_text(self, timing=True):
        lines = []
        lines += _text_table("Percent gap closed (all instances)", self.summary())
        coh = self.cohort()
        lines.append("")
        lines += _text_table(f"Instances with Best V >= {COHORT_MIN:g}% ({len(coh)})", self.summary(coh))
        if timing:
            lines.append("")
            lines.append("Cut generation time (seconds), strengthening included")
            lines.append(f"{'':<12}{'total':>10}{'per cut':>10}{'%cuts+':>9}{'%coefs+':>9}")
            for lbl, tot, per, pc, pk in self.timing():
                lines.append(f"{lbl:<12}{_fmt(tot, 4):>10}{_fmt(per, 4):>10}{_fmt(pc, 1):>9}{_fmt(pk, 1):>9}")
        errs = [r for r in self.rows if r.error]
        if errs:
            lines.append("")
            lines.append("Failures")
            for r in errs:
                lines.append(f"  {r.instance} @ {r.leaves}: {r.error}")
        return "\n".join(lines) + "\n"


def _text_table(title, table):
    out = [title, f"{'':<12}" + "".join(f"{c:>9}" for c in COLUMNS)]
    for lbl, vals in table:
        if lbl == "Wins":
            cells = ["-" if vals[c] is None else str(vals[c]) for c in COLUMNS]
        else:
            cells = [_fmt(vals[c], 2) for c in COLUMNS]
        out.append(f"{lbl:<12}" + "".join(f"{x:>9}" for x in cells))
    return out


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return round(float(np.mean(vals)), 9) if vals else None


def _fmt(v, digits):
    return "-" if v is None else f"{v:.{digits}f}"


def _fmt_csv(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 9))
    return v


def _jdefault(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def run_experiment(instances, leaf_counts=LEAF_COUNTS, strengthen=True, jobs=1, tol=DEFAULT):
    """Sweep ``instances`` (Instance objects or paths) over ``leaf_counts``.

    Results are ordered by input position regardless of ``jobs``.
    """
    leaf_counts = tuple(int(L) for L in leaf_counts)
    for L in leaf_counts:
        if L not in LEAF_COUNTS:
            raise ValueError(f"leaf count {L} not in {LEAF_COUNTS}")
    items = list(instances)
    rows = []
    if jobs > 1 and len(items) > 1:
        args = [(p, leaf_counts, strengthen, tol) for p in items]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for rs in ex.map(_run_path, args):
                rows.extend(rs)
    else:
        for it in items:
            if isinstance(it, (str, bytes)) or hasattr(it, "__fspath__"):
                rows.extend(_run_path((it, leaf_counts, strengthen, tol)))
            else:
                rows.extend(run_instance(it, leaf_counts, strengthen, tol))
    return EvalReport(leaf_counts, rows, strengthen)
