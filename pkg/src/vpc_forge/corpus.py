"""Small seeded instance families for desk-scale experiments."""

import json
import os
from pathlib import Path

import numpy as np

from .linalg_lp import LpProblem, Status, solve_lp
from .model import Instance, brute_force_ip, load_instance, serialize_instance, standardize

DEFAULT_SEED = 20240611
DESK_DIR = "desk"


def env_seed(default=DEFAULT_SEED):
    v = os.environ.get("VPC_FORGE_SEED")
    return int(v) if v not in (None, "") else default


def _instance(name, c, A, b, senses, lo, hi, ints, maximize=False):
    n = len(c)
    c = np.asarray(c, dtype=float)
    lp = LpProblem(-c if maximize else c, np.asarray(A, dtype=float), np.asarray(b, dtype=float), tuple(senses), np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    # the stored objective is always in min form
    return Instance(name, lp, tuple(ints), tuple(f"x{j + 1}" for j in range(n)), tuple(f"r{i + 1}" for i in range(len(b))), maximize)


def knapsack(rng, name, n):
    w = rng.integers(3, 20, size=(2, n))
    v = rng.integers(4, 25, size=n)
    cap = np.floor(w.sum(axis=1) * rng.uniform(0.35, 0.6, size=2))
    return _instance(name, v, w, cap, "LL", np.zeros(n), np.ones(n), range(n), maximize=True)


def set_cover(rng, name, n, m):
    A = (rng.random((m, n)) < 0.35).astype(float)
    for i in range(m):
        if A[i].sum() < 2:
            A[i, rng.choice(n, 2, replace=False)] = 1.0
    c = rng.integers(2, 12, size=n)
    return _instance(name, c, A, np.ones(m), "G" * m, np.zeros(n), np.ones(n), range(n))


def packing(rng, name, n, m):
    A = (rng.random((m, n)) < 0.4).astype(float)
    for i in range(m):
        if A[i].sum() < 2:
            A[i, rng.choice(n, 2, replace=False)] = 1.0
    c = rng.integers(1, 10, size=n)
    return _instance(name, c, A, np.ones(m), "L" * m, np.zeros(n), np.ones(n), range(n), maximize=True)


def general_integer(rng, name, n, m, ub=3):
    A = rng.integers(1, 9, size=(m, n)).astype(float)
    b = np.floor(A.sum(axis=1) * ub * rng.uniform(0.25, 0.45, size=m))
    c = rng.integers(1, 12, size=n)
    return _instance(name, c, A, b, "L" * m, np.zeros(n), np.full(n, ub), range(n), maximize=True)


def mixed(rng, name, n_int, n_cont, m):
    n = n_int + n_cont
    A = rng.integers(1, 9, size=(m, n)).astype(float)
    A[:, n_int:] = rng.integers(1, 5, size=(m, n_cont))
    b = np.floor(A[:, :n_int].sum(axis=1) * rng.uniform(0.3, 0.5, size=m)) + 0.5
    c = np.concatenate([rng.integers(3, 12, size=n_int), rng.integers(1, 4, size=n_cont)])
    hi = np.concatenate([np.ones(n_int), np.full(n_cont, 2.0)])
    return _instance(name, c, A, b, "L" * m, np.zeros(n), hi, range(n_int), maximize=True)


FAMILIES = [
    ("knap", lambda rng, nm: knapsack(rng, nm, int(rng.integers(6, 11)))),
    ("cover", lambda rng, nm: set_cover(rng, nm, int(rng.integers(7, 12)), int(rng.integers(5, 9)))),
    ("pack", lambda rng, nm: packing(rng, nm, int(rng.integers(7, 12)), int(rng.integers(4, 8)))),
    ("genint", lambda rng, nm: general_integer(rng, nm, int(rng.integers(3, 6)), int(rng.integers(2, 4)))),
    ("mixed", lambda rng, nm: mixed(rng, nm, int(rng.integers(3, 6)), 2, int(rng.integers(2, 4)))),
]
PLAN = {"knap": 6, "cover": 5, "pack": 5, "genint": 4, "mixed": 3}


def with_reference(inst):
    """Attach brute-force IP and LP reference values (raw objective sense)."""
    std = standardize(inst)
    lp = solve_lp(std.lp)
    ip = brute_force_ip(std)
    sign = -1.0 if inst.maximize else 1.0
    off = std.transform.obj_offset
    ref = {"ip_value": sign * (ip.value + off), "lp_value": sign * (lp.obj + off)}
    return Instance(inst.name, inst.lp, inst.integer_vars, inst.var_names, inst.row_names, inst.maximize, None, ref), lp, ip


def generate_desk(seed=DEFAULT_SEED, plan=None, min_gap=1e-4):
    """Deterministic desk corpus: only instances with a positive LP-IP gap
    and a fractional root LP are kept."""
    plan = PLAN if plan is None else plan
    rng = np.random.default_rng(seed)
    out = []
    for fam, make in FAMILIES:
        k = 0
        tries = 0
        while k < plan.get(fam, 0):
            tries += 1
            if tries > 200:
                raise RuntimeError(f"could not generate enough {fam} instances")
            inst = make(rng, f"{fam}_{k:02d}")
            inst, lp, ip = with_reference(inst)
            if lp.status is not Status.OPTIMAL or not ip.feasible:
                continue
            if ip.value - lp.obj <= min_gap * (1 + abs(ip.value)):
                continue
            out.append(inst)
            k += 1
    return out


def write_desk(directory, seed=DEFAULT_SEED):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for inst in generate_desk(seed):
        p = d / f"{inst.name}.json"
        p.write_text(serialize_instance(inst))
        paths.append(p)
    return paths


def data_path(*parts):
    return Path(__file__).parent.joinpath("data", *parts)


def desk_paths():
    return sorted(data_path(DESK_DIR).glob("*.json"))


def load_desk():
    """Bundled desk corpus plus the two small worked instances."""
    paths = [data_path("toy_k.json"), data_path("example1.json")] + desk_paths()
    return [load_instance(p) for p in paths]


def instance_paths(directory):
    d = Path(directory)
    return sorted(p for p in d.iterdir() if p.suffix.lower() in (".json", ".mps"))


if __name__ == "__main__":  # pragma: no cover
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else str(data_path(DESK_DIR))
    for p in write_desk(target, env_seed()):
        print(p, json.loads(p.read_text())["reference"])
