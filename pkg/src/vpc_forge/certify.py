"""Farkas certificates for V-polyhedral cuts read off basis cones.

For a cut ``alpha . x >= beta`` valid on the basis cone
``{x : A_N x >= b_N}`` the multipliers are ``v_i = alpha . r^i`` where
``r^i`` are the columns of ``A_N^-1``; then ``v A_N = alpha`` and
``v b_N = alpha . p`` at the cone vertex ``p``.  No cut-generating LP is
solved.  Under primal degeneracy the LP's cobasis can give a negative
multiplier even though the cut is valid; a bounded search over other tight
cobases repairs that.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .collector import DISJUNCTION, ORIGINAL, VAR_BOUND
from .errors import DegenerateUnresolved, InvalidCone, Singular
from .tolerances import DEFAULT

log = logging.getLogger(__name__)

SEARCH_CAP = 2000
EXACT_MAX_N = 50


@dataclass(eq=False)
class FarkasCertificate:
    term_id: int
    cobasis: tuple
    v: np.ndarray
    u: np.ndarray
    u0: np.ndarray
    u_hat: np.ndarray
    beta_t: float
    searched: int = 0
    exact: dict = field(default=None)

    def residual(self, A, D, alpha):
        """max |u A + u0 D + u_hat - alpha|."""
        lhs = self.u @ A + (self.u0 @ D if len(self.u0) else 0.0) + self.u_hat
        return float(np.max(np.abs(lhs - alpha), initial=0.0))

    def rhs_value(self, b, D0):
        return float(self.u @ b + (self.u0 @ D0 if len(self.u0) else 0.0))

    def to_dict(self):
        d = {
            "term": self.term_id,
            "cobasis": list(self.cobasis),
            "v": self.v.tolist(),
            "u": self.u.tolist(),
            "u0": self.u0.tolist(),
            "u_hat": self.u_hat.tolist(),
            "beta_t": self.beta_t,
            "cobases_tried": self.searched,
        }
        if self.exact is not None:
            d["exact"] = self.exact
        return d


def supporting_constant(cut, term_points):
    """Smallest value of ``alpha . p`` over the term's points."""
    P = np.atleast_2d(np.asarray(term_points, dtype=float))
    if P.size == 0:
        raise ValueError("term has no points")
    return float(np.min(P @ cut.alpha))


def recover_certificate(cut, cone, tol=DEFAULT):
    """Multipliers ``v_i = alpha . r^i`` on the cobasis rows of ``cone``."""
    v = cone.rays @ cut.alpha
    if np.any(v < -tol.feas):
        bad = int(np.argmin(v))
        raise InvalidCone(
            f"cobasis {list(cone.cobasis)} gives multiplier {v[bad]:.6g} on row {cone.cobasis[bad]}",
            multipliers=v,
        )
    return v


def split_certificate(v, cone):
    """Scatter ``v`` to (u on instance rows, u0 on disjunction rows, u_hat on x >= 0)."""
    q, q_t, n = cone.q, cone.q_t, cone.n
    u, u0, u_hat = np.zeros(q), np.zeros(q_t), np.zeros(n)
    for val, row in zip(v, cone.cobasis):
        cls = cone.class_of(row)
        val = max(float(val), 0.0)
        if cls == ORIGINAL:
            u[row] = val
        elif cls == DISJUNCTION:
            u0[row - q] = val
        else:
            u_hat[row - q - q_t] = val
    return u, u0, u_hat


def _exact_solve(M, rhs):
    """Solve ``M y = rhs`` over the rationals (Gauss-Jordan)."""
    n = len(rhs)
    aug = [[Fraction(float(M[i][j])) for j in range(n)] + [rhs[i]] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise Singular("exact cobasis matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [a / p for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def exact_check(cut, cone, beta=None):
    """Rational re-derivation of the certificate on the cone's cobasis.

    Returns the exact multipliers, their minimum, the exact supporting constant
    ``v . b_N`` and whether ``v A_N == alpha`` holds exactly.
    """
    rows = list(cone.cobasis)
    AN = cone.A_hat[rows]
    bN = [Fraction(float(x)) for x in cone.b_hat[rows]]
    alpha = [Fraction(float(a)) for a in cut.alpha]
    v = _exact_solve(AN.T, alpha)
    n = len(alpha)
    recon = all(sum(v[i] * Fraction(float(AN[i][k])) for i in range(n)) == alpha[k] for k in range(n))
    beta_t = sum(vi * bi for vi, bi in zip(v, bN))
    out = {
        "v": [str(x) for x in v],
        "min_multiplier": str(min(v)),
        "nonnegative": min(v) >= 0,
        "reconstruction_exact": recon,
        "beta_t": str(beta_t),
    }
    if beta is not None:
        out["beta_t_ge_beta"] = beta_t >= Fraction(float(beta))
    return out


def build_certificate(cut, cone, tol=DEFAULT, exact=None, searched=0):
    v = recover_certificate(cut, cone, tol)
    u, u0, u_hat = split_certificate(v, cone)
    beta_t = float(v @ cone.b_hat[list(cone.cobasis)])
    if exact is None:
        exact = cone.n <= EXACT_MAX_N
    ex = exact_check(cut, cone, cut.beta) if exact else None
    return FarkasCertificate(cone.term_id, cone.cobasis, v, u, u0, u_hat, beta_t, searched, ex)


def candidate_cobases(cone, cap=SEARCH_CAP):
    """n-subsets of the rows tight at the vertex that contain a disjunction
    row, in lexicographic order; at most ``cap`` are yielded."""
    tight = sorted(cone.tight_rows)
    count = 0
    for combo in itertools.combinations(tight, cone.n):
        if not any(cone.class_of(r) == DISJUNCTION for r in combo):
            continue
        if count >= cap:
            return
        count += 1
        yield combo


def search_cobasis(cut, cone, tol=DEFAULT, cap=SEARCH_CAP):
    """First tight cobasis (lexicographic) on which the certificate is valid.

    Returns ``(cone, tried)``.  Raises DegenerateUnresolved when none works.
    """
    tried = 0
    for combo in candidate_cobases(cone, cap):
        tried += 1
        try:
            alt = cone.with_cobasis(combo, tol)
        except Singular:
            continue
        if np.max(np.abs(alt.vertex - cone.vertex)) > 1e-7 * (1 + np.max(np.abs(cone.vertex))):
            continue
        try:
            recover_certificate(cut, alt, tol)
        except InvalidCone:
            continue
        return alt, tried
    raise DegenerateUnresolved(f"term {cone.term_id}: no valid cobasis among {tried} tight combinations")


def select_term_vertex(cut, collection, term_id, tol=DEFAULT, cap=SEARCH_CAP):
    """Basis cone of ``term_id`` at the point minimizing ``alpha . p`` whose
    certificate validates, repairing the cobasis under degeneracy.

    Returns ``(cone, tried)`` where ``tried`` counts alternative cobases.
    """
    cones = collection.cones_of(term_id)
    if not cones:
        raise ValueError(f"no cone for term {term_id}")
    cone = min(cones, key=lambda c: float(c.vertex @ cut.alpha))
    try:
        recover_certificate(cut, cone, tol)
        return cone, 0
    except InvalidCone as err:
        if not cone.degenerate:
            raise
        log.debug("term %d: LP cobasis rejected (%s); searching tight cobases", term_id, err)
    return search_cobasis(cut, cone, tol, cap)


def certify_cut(cut, collection, tol=DEFAULT, exact=None, cap=SEARCH_CAP):
    """Certificates for every term; failures are returned per term, not raised.

    Returns ``(certs, failures)`` keyed by term id.
    """
    certs, failures = {}, {}
    for t in collection.term_ids:
        try:
            cone, tried = select_term_vertex(cut, collection, t, tol, cap)
            certs[t] = build_certificate(cut, cone, tol, exact, tried)
        except (InvalidCone, DegenerateUnresolved) as err:
            failures[t] = f"{type(err).__name__}: {err}"
    return certs, failures


__all__ = [
    "FarkasCertificate",
    "supporting_constant",
    "recover_certificate",
    "split_certificate",
    "select_term_vertex",
    "search_cobasis",
    "candidate_cobases",
    "build_certificate",
    "certify_cut",
    "exact_check",
    "ORIGINAL",
    "DISJUNCTION",
    "VAR_BOUND",
]
