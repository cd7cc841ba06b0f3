"""Variable disjunctions from the leaves of a partial branch-and-bound tree."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllPruned, NoFractional
from .linalg_lp import LpProblem, Status, solve_lp
from .model import standardize
from .tolerances import DEFAULT

LEAF_COUNTS = (2, 4, 8, 16, 32, 64)


@dataclass(frozen=True)
class BoundChange:
    var: int
    sense: str  # "G" for x_var >= bound, "L" for x_var <= bound
    bound: int

    def to_json(self, names=None):
        v = names[self.var] if names else self.var
        return {"var": v, "sense": ">=" if self.sense == "G" else "<=", "bound": self.bound}


@dataclass(frozen=True, eq=False)
class DisjunctionTerm:
    term_id: int
    bound_changes: tuple
    D: np.ndarray
    D0: np.ndarray
    leaf_lp: object = None

    @property
    def q_t(self):
        return self.D.shape[0]

    def satisfied_by(self, x, tol=1e-9):
        return bool(np.all(self.D @ np.asarray(x, dtype=float) >= self.D0 - tol)) if self.q_t else True


@dataclass(frozen=True, eq=False)
class Disjunction:
    terms: tuple
    tree_log: tuple = ()
    pruned: int = 0

    def __len__(self):
        return len(self.terms)

    def covers(self, x, tol=1e-9):
        return any(t.satisfied_by(x, tol) for t in self.terms)

    def best_bound(self):
        vals = [t.leaf_lp.obj for t in self.terms if t.leaf_lp is not None and t.leaf_lp.status is not Status.INFEASIBLE]
        return min(vals) if vals else math.inf


def term_rows(n, bound_changes):
    """(D, D0) in >=-form, one row per bound change."""
    D = np.zeros((len(bound_changes), n))
    D0 = np.zeros(len(bound_changes))
    for i, bc in enumerate(bound_changes):
        s = 1.0 if bc.sense == "G" else -1.0
        D[i, bc.var] = s
        D0[i] = s * bc.bound
    return D, D0


def normalize_changes(changes):
    """Keep only the tightest >= and <= change per variable, sorted."""
    lo, hi = {}, {}
    for bc in changes:
        if bc.sense == "G":
            lo[bc.var] = max(lo.get(bc.var, -math.inf), bc.bound)
        else:
            hi[bc.var] = min(hi.get(bc.var, math.inf), bc.bound)
    out = [BoundChange(j, "G", int(b)) for j, b in lo.items()]
    out += [BoundChange(j, "L", int(b)) for j, b in hi.items()]
    return tuple(sorted(out, key=lambda bc: (bc.var, bc.sense)))


def make_term(instance, term_id, changes, solve=True):
    inst = standardize(instance)
    changes = normalize_changes(changes)
    D, D0 = term_rows(inst.n, changes)
    sol = solve_lp(leaf_problem(inst, D, D0)) if solve else None
    return DisjunctionTerm(term_id, changes, D, D0, sol)


def leaf_problem(instance, D, D0):
    """Q^t as solved: instance rows then disjunction rows, x >= 0 as bounds."""
    return instance.lp.with_rows(D, D0)


def term_polyhedron(instance, term):
    """Q^t with every constraint as an explicit >= row.

    Row order is fixed: the ``q`` instance rows, the ``q_t`` disjunction rows,
    then the ``n`` nonnegativity rows.  Certificates are indexed by it.
    """
    inst = standardize(instance)
    n = inst.n
    A = np.vstack([inst.lp.A, term.D, np.eye(n)])
    b = np.concatenate([inst.lp.rhs, term.D0, np.zeros(n)])
    return LpProblem(inst.lp.objective, A, b, None, np.full(n, -np.inf), np.full(n, np.inf))


def most_fractional(x, integer_vars, tol=DEFAULT.frac):
    """Index of the most fractional integer variable (lowest index on ties)."""
    best, best_j = tol, None
    for j in integer_vars:
        f = x[j] - math.floor(x[j])
        dist = min(f, 1.0 - f)
        if dist > best + 1e-12:
            best, best_j = dist, j
    return best_j


class _Node:
    __slots__ = ("node_id", "changes", "sol", "depth")

    def __init__(self, node_id, changes, sol, depth):
        self.node_id = node_id
        self.changes = changes
        self.sol = sol
        self.depth = depth


def build_partial_tree(instance, target_leaves, tol=DEFAULT):
    """Grow a best-first partial tree until it has ``target_leaves`` live leaves.

    Branching is on the most fractional integer variable; the next node is
    the open leaf with the smallest LP bound (oldest first on ties).  Leaves
    whose LP is infeasible are dropped; integral and unbounded leaves are kept
    but not branched further.
    """
    if target_leaves not in LEAF_COUNTS:
        raise ValueError(f"target_leaves must be one of {LEAF_COUNTS}, got {target_leaves}")
    inst = standardize(instance)
    ints = inst.integer_vars
    root_sol = solve_lp(inst.lp)
    if root_sol.status is Status.INFEASIBLE:
        raise AllPruned("root LP relaxation is infeasible")
    if root_sol.status is Status.OPTIMAL and most_fractional(root_sol.x, ints, tol.frac) is None:
        raise NoFractional("LP optimum is integral; nothing to branch on")

    leaves = [_Node(0, (), root_sol, 0)]
    log = []
    pruned = 0
    next_id = 1

    def branchable(nd):
        return nd.sol.status is Status.OPTIMAL and most_fractional(nd.sol.x, ints, tol.frac) is not None

    while len(leaves) < target_leaves:
        open_ = [nd for nd in leaves if branchable(nd)]
        if not open_:
            break
        pick = min(open_, key=lambda nd: (round(nd.sol.obj, 9), nd.node_id))
        j = most_fractional(pick.sol.x, ints, tol.frac)
        val = float(pick.sol.x[j])
        kids, entry = [], {"node": pick.node_id, "var": int(j), "value": val, "children": [], "pruned": []}
        for sense, bound in (("L", math.floor(val)), ("G", math.ceil(val))):
            changes = normalize_changes(pick.changes + (BoundChange(int(j), sense, int(bound)),))
            D, D0 = term_rows(inst.n, changes)
            sol = solve_lp(leaf_problem(inst, D, D0))
            nid = next_id
            next_id += 1
            direction = "down" if sense == "L" else "up"
            if sol.status is Status.INFEASIBLE:
                pruned += 1
                entry["pruned"].append([nid, direction])
                continue
            entry["children"].append([nid, direction])
            kids.append(_Node(nid, changes, sol, pick.depth + 1))
        log.append(entry)
        leaves = [nd for nd in leaves if nd is not pick] + kids
        if not leaves:
            raise AllPruned("every leaf of the partial tree is infeasible")

    terms = []
    for t, nd in enumerate(sorted(leaves, key=lambda nd: nd.node_id)):
        D, D0 = term_rows(inst.n, nd.changes)
        terms.append(DisjunctionTerm(t, nd.changes, D, D0, nd.sol))
    return Disjunction(tuple(terms), tuple(log), pruned)


def disjunction_from_json(instance, spec):
    """Disjunction from a list of terms, each a list of ``{var, sense, bound}``
    given in raw variable space; leaf LPs are solved in standard form."""
    inst = standardize(instance)
    names = {nm: j for j, nm in enumerate(inst.var_names)}
    tr = inst.transform
    terms = []
    for t, term in enumerate(spec):
        changes = []
        for bc in term:
            j = names[bc["var"]] if isinstance(bc["var"], str) else int(bc["var"])
            sense = "G" if bc["sense"] in (">=", "G", "ge") else "L"
            bound = float(bc["bound"])
            # raw x_j = offset + sign * x_std_j
            b_std = tr.sign[j] * (bound - tr.offset[j])
            if tr.sign[j] < 0:
                sense = "L" if sense == "G" else "G"
            changes.append(BoundChange(j, sense, int(round(b_std))))
        terms.append(make_term(inst, t, changes))
    live = tuple(t for t in terms if t.leaf_lp.status is not Status.INFEASIBLE)
    if not live:
        raise AllPruned("every term of the given disjunction is infeasible")
    return Disjunction(live, (), len(terms) - len(live))
