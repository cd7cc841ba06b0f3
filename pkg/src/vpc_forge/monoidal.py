"""Monoidal strengthening of certified disjunctive cuts.

For an integer variable ``k`` each term ``t`` contributes ``s_t`` (the Farkas
multiplier on ``x_k >= 0``) and ``d_t = u0^t . Delta^t``.  The coefficient
becomes ``alpha_k + z*`` with

    z* = min over m in Z^T, sum(m) >= 0, of  max_t (-s_t + d_t m_t).

``z* <= 0`` always (take m = 0), so the cut never gets weaker.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .linalg_lp import Status, solve_lp
from .model import standardize
from .tolerances import DEFAULT

log = logging.getLogger(__name__)

CLAMP = 1e-9
BISECT_ITERS = 64
FLOOR_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class TermBounds:
    term_id: int
    ell: np.ndarray
    delta: np.ndarray
    infinite: np.ndarray  # bool per disjunction row


@dataclass(frozen=True, eq=False)
class MonoidInstance:
    s: np.ndarray
    d: np.ndarray

    @classmethod
    def clamped(cls, s, d, tol=DEFAULT.feas):
        s = np.asarray(s, dtype=float).copy()
        d = np.asarray(d, dtype=float).copy()
        if np.any(s < -tol) or np.any(d < -tol):
            raise ValueError("monoid data must be nonnegative")
        s[s < CLAMP] = 0.0
        d[d < CLAMP] = 0.0
        return cls(s, d)


def _integer_valued_row(row, integer_vars):
    nz = np.flatnonzero(row)
    return len(nz) > 0 and all(j in integer_vars and float(row[j]).is_integer() for j in nz)


def term_lower_bounds(instance, term, cache=None, tol=DEFAULT):
    """Lower bound on each disjunction row of ``term`` over the LP relaxation,
    rounded up when the row only takes integer values on integer points."""
    inst = standardize(instance)
    ints = set(inst.integer_vars)
    cache = {} if cache is None else cache
    ell = np.zeros(term.q_t)
    inf = np.zeros(term.q_t, dtype=bool)
    for i in range(term.q_t):
        row = term.D[i]
        key = tuple(row.tolist())
        if key not in cache:
            sol = solve_lp(inst.lp.with_objective(row), tol=tol)
            if sol.status is Status.OPTIMAL:
                val = float(sol.obj)
                if _integer_valued_row(row, ints):
                    val = float(math.ceil(val - 1e-9))
                cache[key] = val
            else:
                cache[key] = None
        val = cache[key]
        if val is None:
            inf[i] = True
            ell[i] = -np.inf
        else:
            ell[i] = val
    delta = np.where(inf, np.inf, np.maximum(term.D0 - ell, 0.0))
    return TermBounds(term.term_id, ell, delta, inf)


def monoid_value(m, s, d):
    return max(-s[t] + d[t] * m[t] for t in range(len(s)))


def _floor(x, eps=FLOOR_EPS):
    return int(math.floor(x + eps * max(1.0, abs(x))))


def _trim(m, s, d, z):
    """Lower entries of ``m`` until ``sum(m) == 0``, keeping one entry that
    attains ``z`` (the count argument guarantees enough slack)."""
    excess = sum(m)
    if excess <= 0:
        return m
    at_bp = [t for t in range(len(m)) if d[t] > 0 and abs(-s[t] + d[t] * m[t] - z) <= 1e-9 * (1 + abs(z))]
    others = [t for t in range(len(m)) if t not in at_bp and d[t] > 0]
    for t in others + at_bp[1:]:
        if excess <= 0:
            break
        # lowering a non-breakpoint entry by any amount is harmless
        take = excess if t in others else 1
        m[t] -= take
        excess -= take
    if excess > 0:
        m[at_bp[0]] -= excess
    return m


def solve_monoid(s, d, exact=False):
    """Return ``(z*, m*)`` for the inf-max problem over the monoid."""
    mi = MonoidInstance.clamped(s, d)
    s, d = mi.s, mi.d
    T = len(s)
    if T == 0:
        raise ValueError("need at least one term")
    if not np.any(s > 0):
        return 0.0, np.zeros(T, dtype=np.int64)
    if exact:
        z, m = _solve_exact([Fraction(float(x)) for x in s], [Fraction(float(x)) for x in d])
        return float(z), np.array(m, dtype=np.int64)
    zero = np.flatnonzero(d == 0.0)
    if len(zero):
        slot = int(zero[np.argmax(-s[zero])])
        z = float(np.max(-s[zero]))
        m = np.zeros(T, dtype=np.int64)
        for t in range(T):
            if d[t] > 0:
                m[t] = _floor((z + s[t]) / d[t])
        m[slot] = max(0, -int(m.sum() - m[slot]))
        return z, m
    lo, hi = kernels.monoid_bisect(s, d, BISECT_ITERS, FLOOR_EPS)
    # snap to the largest breakpoint d_t j - s_t not above hi
    z = max(d[t] * _floor((hi + s[t]) / d[t]) - s[t] for t in range(T))
    m = [_floor((z + s[t]) / d[t]) for t in range(T)]
    m = _trim(m, s, d, z)
    z = float(monoid_value(m, s, d))
    return z, np.array(m, dtype=np.int64)


def _g_exact(z, s, d):
    return sum((z + st) // dt for st, dt in zip(s, d))


def _solve_exact(s, d):
    T = len(s)
    zero = [t for t in range(T) if d[t] == 0]
    if zero:
        slot = max(zero, key=lambda t: (-s[t], -t))
        z = -s[slot]
        m = [int((z + s[t]) // d[t]) if d[t] > 0 else 0 for t in range(T)]
        m[slot] = max(0, -(sum(m) - m[slot]))
        return z, m
    # walk breakpoints upward from the lower end of the bracket
    z = max(d[t] * ((-max(s) + s[t]) // d[t]) - s[t] for t in range(T))
    while _g_exact(z, s, d) < 0:
        z = min(d[t] * ((z + s[t]) // d[t] + 1) - s[t] for t in range(T))
    m = [int((z + s[t]) // d[t]) for t in range(T)]
    excess = sum(m)
    at_bp = [t for t in range(T) if -s[t] + d[t] * m[t] == z]
    others = [t for t in range(T) if t not in at_bp]
    for t in others:
        if excess <= 0:
            break
        m[t] -= excess
        excess = 0
    for t in at_bp[1:]:
        if excess <= 0:
            break
        m[t] -= 1
        excess -= 1
    return max(-s[t] + d[t] * m[t] for t in range(T)), m


def brute_force_monoid(s, d, B=5):
    """Exhaustive search over ``m in [-B, B]^T`` (oracle for tests)."""
    import itertools

    best, arg = math.inf, None
    for m in itertools.product(range(-B, B + 1), repeat=len(s)):
        if sum(m) < 0:
            continue
        v = monoid_value(m, s, d)
        if v < best - 1e-15:
            best, arg = v, m
    return best, arg


@dataclass
class StrengthenResult:
    cut: object
    deltas: dict
    skipped: dict

    @property
    def n_strengthened(self):
        return sum(1 for v in self.deltas.values() if v < -DEFAULT.feas)


def strengthen_cut(cut, certificates, bounds, instance, failures=None, exact=False, tol=DEFAULT):
    """Monoidal strengthening of the integer coefficients of ``cut``.

    ``certificates`` and ``bounds`` map term id to FarkasCertificate and
    TermBounds; ``failures`` maps term ids whose certificate could not be
    recovered.  Any such term leaves every coefficient untouched.
    """
    inst = standardize(instance)
    terms = sorted(bounds)
    alpha = cut.alpha.copy()
    deltas, skipped = {}, {}
    missing = [t for t in terms if t not in certificates]
    for k in inst.integer_vars:
        if missing:
            skipped[k] = f"terms {missing} lack a validated certificate" + (f": {failures}" if failures else "")
            continue
        s, d, reason = [], [], None
        for t in terms:
            c, tb = certificates[t], bounds[t]
            u0 = c.u0
            if np.any(tb.infinite & (u0 > tol.feas)):
                reason = f"term {t} has an unbounded disjunction row with positive multiplier"
                break
            dt = float(u0 @ np.where(tb.infinite, 0.0, tb.delta)) if len(u0) else 0.0
            s.append(max(float(c.u_hat[k]), 0.0))
            d.append(max(dt, 0.0))
        if reason:
            skipped[k] = reason
            continue
        if all(v < CLAMP for v in s):
            deltas[k] = 0.0
            continue
        z, _ = solve_monoid(s, d, exact=exact)
        z = min(z, 0.0)
        deltas[k] = z
        alpha[k] = cut.alpha[k] + z
    changed = bool(np.any(alpha < cut.alpha - tol.feas))
    prov = dict(cut.provenance)
    prov["strengthened"] = changed
    out = type(cut)(alpha, cut.beta, prov)
    return StrengthenResult(out, deltas, skipped)


def strengthening_stats(results, n_integer):
    """Percent of cuts changed and of integer coefficients changed."""
    if not results:
        return {"pct_cuts_strengthened": 0.0, "pct_coefs_strengthened": 0.0}
    n_cut = sum(1 for r in results if r.cut.strengthened)
    n_coef = sum(r.n_strengthened for r in results)
    denom = max(1, n_integer * len(results))
    return {
        "pct_cuts_strengthened": 100.0 * n_cut / len(results),
        "pct_coefs_strengthened": 100.0 * n_coef / denom,
    }
