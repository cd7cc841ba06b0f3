"""Point-ray LP over a V-description of the disjunctive hull, and cut harvesting.

The PRLP is posed in coordinates translated by the fractional point ``x_bar``
with the right-hand side fixed to one::

    alpha . (p - x_bar) >= 1   for every point p
    alpha . r           >= 0   for every ray r

Any feasible ``alpha`` gives the valid cut ``alpha . x >= 1 + alpha . x_bar``
which ``x_bar`` violates by exactly one before scaling.
"""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotSeparable
from .linalg_lp import LpProblem, Status, solve_lp
from .tolerances import DEFAULT

log = logging.getLogger(__name__)

MIN_VIOLATION = 1e-7
PARALLEL_COS = 1.0 - 1e-9


@dataclass(eq=False)
class Cut:
    """``alpha . x >= beta`` in the structural space of the standardized instance."""

    alpha: np.ndarray
    beta: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = float(self.beta)
        if not (np.all(np.isfinite(self.alpha)) and math.isfinite(self.beta)):
            raise ValueError("cut coefficients must be finite")

    @property
    def strengthened(self):
        return bool(self.provenance.get("strengthened", False))

    def violation(self, x):
        """Positive when ``x`` violates the cut."""
        return float(self.beta - self.alpha @ np.asarray(x, dtype=float))

    def normalized(self):
        s = np.max(np.abs(self.alpha))
        if s <= 0:
            return self
        return Cut(self.alpha / s, self.beta / s, dict(self.provenance))

    def replace(self, alpha=None, beta=None, **prov):
        p = dict(self.provenance)
        p.update(prov)
        return Cut(self.alpha if alpha is None else alpha, self.beta if beta is None else beta, p)

    def as_row(self):
        return self.alpha.reshape(1, -1), np.array([self.beta])

    def to_dict(self):
        return {"alpha": [float(a) for a in self.alpha], "beta": float(self.beta), "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d):
        from .model import _num

        alpha = [_num(a, "alpha") for a in d["alpha"]]
        return cls(np.array(alpha, dtype=float), _num(d["beta"], "beta"), dict(d.get("provenance", {})))


def cuts_to_json(cuts):
    return json.dumps({"cuts": [c.to_dict() for c in cuts]}, indent=1, sort_keys=True)


def cuts_from_json(text):
    data = json.loads(text)
    items = data["cuts"] if isinstance(data, dict) and "cuts" in data else data
    if isinstance(items, dict):
        items = [items]
    return [Cut.from_dict(d) for d in items]


def stack_cuts(cuts, n):
    if not cuts:
        return np.zeros((0, n)), np.zeros(0)
    return np.array([c.alpha for c in cuts]), np.array([c.beta for c in cuts])


@dataclass(frozen=True, eq=False)
class Prlp:
    x_bar: np.ndarray
    points: np.ndarray  # translated: p - x_bar
    rays: np.ndarray
    point_terms: tuple
    collection: object = None
    beta_bar: float = 1.0

    @property
    def n(self):
        return self.x_bar.shape[0]

    @property
    def n_rows(self):
        return len(self.points) + len(self.rays)

    def problem(self, objective):
        A = np.vstack([self.points, self.rays])
        rhs = np.concatenate([np.full(len(self.points), self.beta_bar), np.zeros(len(self.rays))])
        n = self.n
        return LpProblem(objective, A, rhs, None, np.full(n, -np.inf), np.full(n, np.inf))


def build_prlp(collection, x_frac, tol=DEFAULT):
    x_bar = np.asarray(x_frac, dtype=float)
    pr = Prlp(x_bar, collection.points - x_bar, collection.rays, collection.point_terms, collection)
    sol = solve_lp(pr.problem(np.zeros(pr.n)), tol=tol)
    if sol.status is Status.INFEASIBLE:
        raise NotSeparable("x_bar lies in the closed convex hull of the collection")
    return pr


def cut_is_valid_for_collection(cut, points, rays, tol=DEFAULT.feas):
    if len(points) and np.any(points @ cut.alpha < cut.beta - tol * (1.0 + abs(cut.beta))):
        return False
    if len(rays) and np.any(rays @ cut.alpha < -tol):
        return False
    return True


def _objectives(prlp, c, integer_vars, frac_tol):
    """Deterministic objective schedule: one per collection point (by c.p),
    then +/- unit vectors on fractional integer coordinates of x_bar."""
    out = []
    pts = prlp.points + prlp.x_bar
    order = sorted(range(len(pts)), key=lambda i: (round(float(c @ pts[i]), 12), i))
    for i in order:
        out.append((f"point:{i}", prlp.points[i]))
    for j in integer_vars:
        f = prlp.x_bar[j] - math.floor(prlp.x_bar[j])
        if min(f, 1 - f) <= frac_tol:
            continue
        for sgn, tag in ((1.0, "+"), (-1.0, "-")):
            e = np.zeros(prlp.n)
            e[j] = sgn
            out.append((f"unit:{tag}{j}", e))
    return out


def _is_duplicate(cut, pool):
    v = np.append(cut.alpha, cut.beta)
    nv = np.linalg.norm(v)
    for other in pool:
        w = np.append(other.alpha, other.beta)
        if v @ w >= PARALLEL_COS * nv * np.linalg.norm(w):
            return True
    return False


def harvest_cuts(prlp, limit, c=None, integer_vars=None, tol=DEFAULT):
    """Cycle objectives over the PRLP and keep up to ``limit`` distinct cuts."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    n = prlp.n
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    integer_vars = range(n) if integer_vars is None else integer_vars
    pts = prlp.points + prlp.x_bar
    cuts = []
    basis = None
    for name, obj in _objectives(prlp, c, integer_vars, tol.frac):
        if len(cuts) >= limit:
            break
        sol = solve_lp(prlp.problem(obj), warm_basis=basis, tol=tol)
        if sol.status is Status.INFEASIBLE:
            continue
        basis = sol.basis
        alpha = sol.x
        scale = np.max(np.abs(alpha))
        if not np.isfinite(scale) or scale <= 0:
            continue
        beta = prlp.beta_bar + alpha @ prlp.x_bar
        cut = Cut(alpha / scale, beta / scale)
        if cut.violation(prlp.x_bar) < MIN_VIOLATION:
            continue
        if not cut_is_valid_for_collection(cut, pts, prlp.rays, tol.feas):
            log.debug("objective %s: PRLP solution failed the validity check", name)
            continue
        if _is_duplicate(cut, cuts):
            continue
        tight = sorted(
            {t for i, ts in enumerate(prlp.point_terms) if abs(pts[i] @ cut.alpha - cut.beta) <= 1e-7 * (1 + abs(cut.beta)) for t in ts}
        )
        cut.provenance = {"objective": name, "tight_terms": tight, "strengthened": False, "source": "vpc"}
        cuts.append(cut)
    return cuts
