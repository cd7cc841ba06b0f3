"""Command-line front end: ``vpc-forge <command> ...``."""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import corpus
from .certify import build_certificate, certify_cut, select_term_vertex, supporting_constant
from .collector import collect
from .disjunction import LEAF_COUNTS, build_partial_tree, disjunction_from_json
from .errors import ConfigError, DegenerateUnresolved, InvalidCone, VpcError
from .harness import run_experiment
from .linalg_lp import solve_lp
from .model import _num, load_instance, standardize
from .monoidal import strengthen_cut, strengthening_stats, term_lower_bounds
from .prlp import Cut, build_prlp, harvest_cuts
from .gmic import generate_gmics
from .tolerances import DEFAULT

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger("vpc_forge")

CONFIG_KEYS = {"instances", "leaves", "strengthen", "jobs", "seed", "exact", "out", "timing", "log_level", "tolerances"}
TOL_KEYS = {"feas", "lin", "pivot", "dual", "frac"}


# ---------------------------------------------------------------------------
# config


def load_config(path):
    """Read a TOML config; keys may sit at top level or under ``[vpc_forge]``."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"bad TOML in {path}: {e}") from None
    doc = doc.get("vpc_forge", doc)
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    tols = doc.get("tolerances", {})
    if set(tols) - TOL_KEYS:
        raise ConfigError(f"unknown tolerance keys: {sorted(set(tols) - TOL_KEYS)}")
    return doc


def parse_leaves(v):
    if v is None:
        return None
    items = v if isinstance(v, (list, tuple)) else str(v).split(",")
    try:
        out = tuple(int(x) for x in items if str(x).strip())
    except ValueError:
        raise ConfigError(f"bad leaf list {v!r}") from None
    bad = [x for x in out if x not in LEAF_COUNTS]
    if bad or not out:
        raise ConfigError(f"leaf counts must be drawn from {list(LEAF_COUNTS)}, got {list(out)}")
    return out


def resolve(args, key, cfg, default=None):
    """Flag value if given, else config value, else ``default``."""
    v = getattr(args, key, None)
    if v is not None:
        return v
    return cfg.get(key, default)


def tolerances(args, cfg):
    over = dict(cfg.get("tolerances", {}))
    for item in getattr(args, "tol", None) or []:
        k, _, v = item.partition("=")
        if k not in TOL_KEYS or not v:
            raise ConfigError(f"bad --tol {item!r}; expected one of {sorted(TOL_KEYS)}=VALUE")
        over[k] = v
    try:
        return DEFAULT.with_overrides(**over)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad tolerance value: {e}") from None


def _load(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"instance file {path} does not exist")
    return load_instance(p)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"bad JSON in {path}: {e}") from None


def _emit(doc, out=None):
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# cut I/O in raw variable space


def _raw_vector(spec, names):
    if isinstance(spec, dict):
        idx = {nm: j for j, nm in enumerate(names)}
        v = np.zeros(len(names))
        for k, x in spec.items():
            if k not in idx:
                raise ConfigError(f"unknown variable {k!r} in cut")
            v[idx[k]] = _num(x, k)
        return v
    if len(spec) != len(names):
        raise ConfigError(f"cut has {len(spec)} coefficients, instance has {len(names)} variables")
    return np.array([_num(x, "alpha") for x in spec], dtype=float)


def cut_from_raw_doc(std, d):
    a = _raw_vector(d["alpha"], std.var_names)
    alpha, beta = std.transform.cut_from_raw(a, _num(d["beta"], "beta"))
    return Cut(alpha, beta, dict(d.get("provenance", {})))


def cut_to_raw_doc(std, cut):
    a, b = std.transform.cut_to_raw(cut.alpha, cut.beta)
    return {
        "alpha": {std.var_names[j]: float(a[j]) for j in range(len(a)) if a[j] != 0.0},
        "beta": float(b),
        "provenance": cut.provenance,
    }


def _read_cuts(std, path):
    doc = _read_json(path)
    items = doc["cuts"] if isinstance(doc, dict) and "cuts" in doc else doc
    if isinstance(items, dict):
        items = [items]
    return [cut_from_raw_doc(std, d) for d in items], doc


def _disjunction(std, args, doc, tol):
    spec = None
    if getattr(args, "disjunction", None):
        spec = _read_json(args.disjunction)
        spec = spec.get("disjunction", spec) if isinstance(spec, dict) else spec
    elif isinstance(doc, dict) and "disjunction" in doc:
        spec = doc["disjunction"]
    if spec is not None:
        return disjunction_from_json(std, spec)
    leaves = parse_leaves(getattr(args, "leaves", None) or 2)
    return build_partial_tree(std, leaves[0], tol)


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args, cfg):
    std = standardize(_load(args.instance))
    sol = solve_lp(std.lp, tol=tolerances(args, cfg))
    doc = {"instance": std.name, "status": sol.status.value, "iterations": sol.iterations}
    if sol.optimal:
        sign = -1.0 if std.maximize else 1.0
        doc["objective"] = sign * (sol.obj + std.transform.obj_offset)
        x = std.transform.point_to_raw(sol.x)
        doc["x"] = {nm: float(v) for nm, v in zip(std.var_names, x)}
    print(f"LP {sol.status.value}" + (f": {doc['objective']:.10g}" if sol.optimal else ""), file=sys.stderr)
    _emit(doc, args.out)
    return 0


def _strengthen_all(std, cuts, disj, coll, tol, exact):
    cache = {}
    bounds = {t.term_id: term_lower_bounds(std, t, cache, tol) for t in disj.terms}
    results = []
    for c in cuts:
        certs, fails = certify_cut(c, coll, tol, exact=False)
        results.append(strengthen_cut(c, certs, bounds, std, fails, exact, tol))
    return results


def cmd_cuts(args, cfg):
    tol = tolerances(args, cfg)
    std = standardize(_load(args.instance))
    leaves = parse_leaves(resolve(args, "leaves", cfg, "2"))[0]
    strengthen = bool(resolve(args, "strengthen", cfg, False))
    root = solve_lp(std.lp, tol=tol)
    if not root.optimal:
        raise ConfigError(f"root LP is {root.status.value}")
    gm = generate_gmics(std, root, tol)
    limit = args.limit or max(1, len(gm))
    disj = build_partial_tree(std, leaves, tol)
    coll = collect(std, disj, tol)
    cuts = harvest_cuts(build_prlp(coll, root.x, tol), limit, std.lp.objective, std.integer_vars, tol)
    doc = {"instance": std.name, "leaves": leaves, "terms": len(disj), "limit": limit}
    if strengthen:
        res = _strengthen_all(std, cuts, disj, coll, tol, bool(resolve(args, "exact", cfg, False)))
        cuts = [r.cut for r in res]
        doc["diagnostics"] = strengthening_stats(res, len(std.integer_vars))
    doc["cuts"] = [cut_to_raw_doc(std, c) for c in cuts]
    if args.gmic:
        doc["gmics"] = [cut_to_raw_doc(std, c) for c in gm]
    _emit(doc, args.out)
    return 0


def cmd_certify(args, cfg):
    tol = tolerances(args, cfg)
    std = standardize(_load(args.instance))
    cuts, doc = _read_cuts(std, args.cut)
    disj = _disjunction(std, args, doc, tol)
    coll = collect(std, disj, tol)
    exact = resolve(args, "exact", cfg, None)
    out = {"instance": std.name, "terms": [t.term_id for t in disj.terms], "cuts": []}
    for cut in cuts:
        entry = {"beta": cut.beta, "terms": [], "valid": True}
        for t in disj.terms:
            te = {"term": t.term_id, "bound_changes": [bc.to_json(std.var_names) for bc in t.bound_changes]}
            te["supporting_constant"] = supporting_constant(cut, coll.term_points(t.term_id))
            try:
                cone, tried = select_term_vertex(cut, coll, t.term_id, tol)
                cert = build_certificate(cut, cone, tol, exact, tried)
                te["certificate"] = cert.to_dict()
                te["cobasis_rows"] = [_row_label(std, cone, r) for r in cone.cobasis]
                te["valid"] = bool(cert.beta_t >= cut.beta - tol.feas * (1 + abs(cut.beta)))
            except (InvalidCone, DegenerateUnresolved) as e:
                te["error"] = f"{type(e).__name__}: {e}"
                te["valid"] = False
            entry["valid"] = entry["valid"] and te["valid"]
            entry["terms"].append(te)
        out["cuts"].append(entry)
    _emit(out, args.out)
    return 0


def _row_label(std, cone, r):
    if r < cone.q:
        return std.row_names[r]
    if r < cone.q + cone.q_t:
        return f"disj[{r - cone.q}]"
    return f"{std.var_names[r - cone.q - cone.q_t]}>=0"


def cmd_strengthen(args, cfg):
    tol = tolerances(args, cfg)
    std = standardize(_load(args.instance))
    cuts, doc = _read_cuts(std, args.cuts)
    disj = _disjunction(std, args, doc, tol)
    coll = collect(std, disj, tol)
    res = _strengthen_all(std, cuts, disj, coll, tol, bool(resolve(args, "exact", cfg, False)))
    out = {
        "instance": std.name,
        "cuts": [cut_to_raw_doc(std, r.cut) for r in res],
        "deltas": [{std.var_names[k]: v for k, v in sorted(r.deltas.items())} for r in res],
        "skipped": [{std.var_names[k]: v for k, v in sorted(r.skipped.items())} for r in res],
        "diagnostics": strengthening_stats(res, len(std.integer_vars)),
    }
    _emit(out, args.out)
    return 0


def cmd_evaluate(args, cfg):
    tol = tolerances(args, cfg)
    src = resolve(args, "instances", cfg)
    if src is None:
        raise ConfigError("evaluate needs --instances DIR (or 'instances' in the config)")
    src = Path(src)
    if not src.is_dir():
        raise ConfigError(f"instance directory {src} does not exist")
    leaves = parse_leaves(resolve(args, "leaves", cfg, "2,4,8,16,32,64"))
    strengthen = bool(resolve(args, "strengthen", cfg, False))
    jobs = int(resolve(args, "jobs", cfg, 1))
    timing = bool(resolve(args, "timing", cfg, False))
    paths = corpus.instance_paths(src)
    report = run_experiment(paths, leaves, strengthen, jobs, tol)
    text = report.to_text(timing=True)
    sys.stdout.write(text)
    out = resolve(args, "out", cfg)
    if out:
        base = Path(out)
        if base.suffix.lower() in (".csv", ".json", ".txt"):
            base = base.with_suffix("")
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_suffix(".csv").write_text(report.to_csv(timing))
        base.with_suffix(".json").write_text(report.to_json(timing))
        base.with_suffix(".txt").write_text(text)
    return 0


def cmd_corpus(args, cfg):
    seed = args.seed if args.seed is not None else cfg.get("seed", corpus.env_seed())
    for p in corpus.write_desk(args.out, int(seed)):
        print(p)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="vpc-forge", description="V-polyhedral disjunctive cuts: generation, certificates, strengthening.")
    p.add_argument("--config", help="TOML config file; command-line flags override its values")
    p.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="stderr log level (default WARNING)")
    p.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override, KEY in feas, lin, pivot, dual, frac (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("solve", help="solve the LP relaxation and print its optimum")
    s.add_argument("--instance", required=True, help="instance file (.json native or .mps)")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("cuts", help="generate VPCs from a partial tree with K leaves")
    s.add_argument("--instance", required=True, help="instance file")
    s.add_argument("--leaves", help="leaf count, one of 2,4,8,16,32,64 (default 2)")
    s.add_argument("--strengthen", action=argparse.BooleanOptionalAction, default=None, help="apply monoidal strengthening")
    s.add_argument("--exact", action=argparse.BooleanOptionalAction, default=None, help="rational arithmetic in the monoid solves")
    s.add_argument("--limit", type=int, default=None, help="max cuts (default: number of GMICs)")
    s.add_argument("--gmic", action="store_true", help="also output the GMICs")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_cuts)

    s = sub.add_parser("certify", help="recover and check Farkas certificates of a cut")
    s.add_argument("--instance", required=True, help="instance file")
    s.add_argument("--cut", required=True, help="JSON with alpha, beta and optionally a disjunction")
    s.add_argument("--disjunction", help="JSON list of terms, each a list of {var, sense, bound}")
    s.add_argument("--leaves", help="build the disjunction from a partial tree instead")
    s.add_argument("--exact", action=argparse.BooleanOptionalAction, default=None, help="rational re-verification (default on for n <= 50)")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("strengthen", help="monoidal strengthening of given cuts")
    s.add_argument("--instance", required=True, help="instance file")
    s.add_argument("--cuts", required=True, help="JSON cut pool (as written by 'cuts') or a single cut")
    s.add_argument("--disjunction", help="JSON list of terms")
    s.add_argument("--leaves", help="build the disjunction from a partial tree instead")
    s.add_argument("--exact", action=argparse.BooleanOptionalAction, default=None, help="rational arithmetic in the monoid solves")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_strengthen)

    s = sub.add_parser("evaluate", help="gap-closed sweep over a directory of instances")
    s.add_argument("--instances", help="directory of .json/.mps instances")
    s.add_argument("--leaves", help="comma-separated leaf counts (default 2,4,8,16,32,64)")
    s.add_argument("--strengthen", action=argparse.BooleanOptionalAction, default=None, help="also report V+ and G+V+")
    s.add_argument("--jobs", type=int, default=None, help="worker processes (default 1)")
    s.add_argument("--timing", action=argparse.BooleanOptionalAction, default=None, help="include wall-clock times in CSV/JSON (breaks byte-identical reruns)")
    s.add_argument("--out", help="output base name; writes BASE.csv, BASE.json and BASE.txt")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("corpus", help="write the seeded desk corpus")
    s.add_argument("--out", required=True, help="target directory")
    s.add_argument("--seed", type=int, default=None, help="generator seed (default VPC_FORGE_SEED or built-in)")
    s.set_defaults(func=cmd_corpus)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        level = args.log_level or cfg.get("log_level", "WARNING")
        logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        return args.func(args, cfg)
    except ConfigError as e:
        print(f"vpc-forge: config error: {e}", file=sys.stderr)
        return 1
    except VpcError as e:
        print(f"vpc-forge: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
