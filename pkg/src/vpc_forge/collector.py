"""Basis cones at leaf optima and the point-ray collection built from them."""

import json
import logging
from dataclasses import dataclass

import numpy as np

from .disjunction import term_polyhedron
from .errors import VpcError
from .linalg_lp import BASIC, CobasisMatrix, Status, invert
from .model import standardize
from .tolerances import DEFAULT

log = logging.getLogger(__name__)

ORIGINAL, DISJUNCTION, VAR_BOUND = "original", "disjunction", "var_bound"


@dataclass(frozen=True, eq=False)
class BasisCone:
    """Simplicial cone ``{x : A_hat[N] x >= b_hat[N]}`` at vertex ``p``.

    ``rays[i]`` is column ``i`` of ``A_hat[N]^-1``, i.e. the direction that
    raises the slack of cobasis row ``N[i]`` and keeps the others tight.
    ``A_hat``/``b_hat`` hold all ``q + q_t + n`` rows of the term so the
    cobasis can be re-chosen among the tight rows.
    """

    term_id: int
    vertex: np.ndarray
    cobasis: tuple
    rays: np.ndarray
    A_hat: np.ndarray
    b_hat: np.ndarray
    q: int
    q_t: int
    tight_rows: tuple
    degenerate: bool = False

    @property
    def n(self):
        return self.vertex.shape[0]

    def class_of(self, row):
        if row < self.q:
            return ORIGINAL
        if row < self.q + self.q_t:
            return DISJUNCTION
        return VAR_BOUND

    @property
    def row_class(self):
        return tuple(self.class_of(r) for r in self.cobasis)

    @property
    def cobasis_matrix(self):
        return CobasisMatrix.from_rows(self.A_hat, self.b_hat, self.cobasis)

    def with_cobasis(self, rows, tol=DEFAULT):
        """Same term and vertex region, different cobasis."""
        rows = tuple(sorted(int(r) for r in rows))
        M = self.A_hat[list(rows)]
        inv = invert(M, tol.pivot)
        p = inv @ self.b_hat[list(rows)]
        return BasisCone(self.term_id, p, rows, inv.T.copy(), self.A_hat, self.b_hat, self.q, self.q_t, self.tight_rows, self.degenerate)

    def coordinates(self, x):
        """Cone coordinates ``s`` with ``x = p + sum_i s_i r^i``."""
        return self.A_hat[list(self.cobasis)] @ (np.asarray(x, dtype=float) - self.vertex)


def tight_rows(A, b, x, tol=DEFAULT.feas):
    act = A @ x - b
    return tuple(int(i) for i in np.flatnonzero(np.abs(act) <= tol * (1.0 + np.abs(b))))


def cone_from_rows(term_id, A_hat, b_hat, q, q_t, rows, tol=DEFAULT):
    """Basis cone for an explicit cobasis (raises Singular if dependent)."""
    rows = tuple(sorted(int(r) for r in rows))
    inv = invert(A_hat[list(rows)], tol.pivot)
    p = inv @ b_hat[list(rows)]
    tight = tight_rows(A_hat, b_hat, p, tol.feas)
    n = A_hat.shape[1]
    return BasisCone(term_id, p, rows, inv.T.copy(), A_hat, b_hat, q, q_t, tight, len(tight) > n)


def term_basis_cone(instance, term, tol=DEFAULT):
    """Basis cone of ``term`` at its leaf LP vertex, cobasis from the LP basis."""
    inst = standardize(instance)
    sol = term.leaf_lp
    if sol is None or sol.status is Status.INFEASIBLE:
        raise VpcError(f"term {term.term_id} has no feasible leaf LP")
    n, q, q_t = inst.n, inst.q, term.q_t
    Q = term_polyhedron(inst, term)
    nonbasic = np.flatnonzero(sol.var_state != BASIC)
    rows = []
    for j in nonbasic:
        rows.append(q + q_t + int(j) if j < n else int(j) - n)
    if len(rows) != n:
        raise VpcError(f"leaf basis of term {term.term_id} has {len(rows)} nonbasics, expected {n}")
    cone = cone_from_rows(term.term_id, Q.A, Q.rhs, q, q_t, rows, tol)
    gap = np.max(np.abs(cone.vertex - sol.x), initial=0.0)
    if gap > 1e-6 * (1.0 + np.max(np.abs(sol.x), initial=0.0)):
        log.warning("term %d: cone vertex differs from LP point by %.2e", term.term_id, gap)
    if cone.degenerate:
        log.debug("term %d: %d rows tight at the vertex (n = %d)", term.term_id, len(cone.tight_rows), n)
    return cone


@dataclass(frozen=True, eq=False)
class PointRayCollection:
    points: np.ndarray
    point_terms: tuple
    rays: np.ndarray
    ray_terms: tuple
    cones: tuple

    @property
    def n(self):
        return self.points.shape[1]

    def term_points(self, term_id):
        idx = [i for i, ts in enumerate(self.point_terms) if term_id in ts]
        return self.points[idx]

    def cones_of(self, term_id):
        return [c for c in self.cones if c.term_id == term_id]

    @property
    def term_ids(self):
        return tuple(c.term_id for c in self.cones)

    def to_json(self):
        return json.dumps(
            {
                "points": self.points.tolist(),
                "point_terms": [list(t) for t in self.point_terms],
                "rays": self.rays.tolist(),
                "ray_terms": [list(t) for t in self.ray_terms],
                "cobases": {str(c.term_id): list(c.cobasis) for c in self.cones},
            },
            indent=1,
        )


def _dedupe(vectors, owners, tol):
    keep, keep_owner = [], []
    for v, o in zip(vectors, owners):
        for k, u in enumerate(keep):
            if np.max(np.abs(u - v)) <= tol:
                if o not in keep_owner[k]:
                    keep_owner[k].append(o)
                break
        else:
            keep.append(v)
            keep_owner.append([o])
    return keep, keep_owner


def assemble_collection(cones, tol=1e-9):
    """Union of the cones' vertices and rays; rays scaled to unit max-norm
    and deduplicated (the cones keep their unscaled rays)."""
    cones = tuple(cones)
    if not cones:
        raise ValueError("need at least one basis cone")
    n = cones[0].n
    pts, pown = _dedupe([c.vertex for c in cones], [c.term_id for c in cones], tol)
    rays, rown = [], []
    for c in cones:
        for r in c.rays:
            s = np.max(np.abs(r))
            if s <= tol:
                continue
            rays.append(r / s)
            rown.append(c.term_id)
    rays, rown = _dedupe(rays, rown, tol)
    return PointRayCollection(
        points=np.array(pts).reshape(-1, n),
        point_terms=tuple(tuple(o) for o in pown),
        rays=np.array(rays).reshape(-1, n),
        ray_terms=tuple(tuple(o) for o in rown),
        cones=cones,
    )


def collect(instance, disjunction, tol=DEFAULT):
    """Basis cones for every term of ``disjunction`` and their collection."""
    cones = [term_basis_cone(instance, t, tol) for t in disjunction.terms]
    return assemble_collection(cones)
