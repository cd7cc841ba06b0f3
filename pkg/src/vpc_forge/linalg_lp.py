"""Bounded-variable revised simplex and the dense linear algebra around it.

Rows are stored as ``A x (sense) b`` with sense in ``G`` (>=), ``L`` (<=),
``E`` (=).  Internally each row gets a slack ``s_i = A_i x - b_i`` whose bounds
encode the sense, so the working system is ``[A, -I] (x, s) = b`` with every
column carrying its own ``[lo, hi]``.  Variable ids ``0..n-1`` are structural,
``n..n+m-1`` are row slacks.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .errors import IterationLimit, NotBasic, Singular
from .tolerances import DEFAULT

__all__ = [
    "Status",
    "LpProblem",
    "LpSolution",
    "CobasisMatrix",
    "solve_lp",
    "inverse_columns",
    "tableau_row",
    "invert",
    "BASIC",
    "AT_LOWER",
    "AT_UPPER",
    "FREE_ZERO",
]

BASIC, AT_LOWER, AT_UPPER, FREE_ZERO = 0, 1, 2, 3
_REFACTOR_EVERY = 40


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LpProblem:
    """min c^T x  s.t.  A x (senses) rhs,  lo <= x <= hi."""

    objective: np.ndarray
    A: np.ndarray
    rhs: np.ndarray
    senses: tuple = None
    lo: np.ndarray = None
    hi: np.ndarray = None

    def __post_init__(self):
        c = _frozen(self.objective).reshape(-1)
        n = c.shape[0]
        A = np.array(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(-1, n) if A.ndim == 2 and A.shape[1] == n else np.zeros((0, n))
        A = A.reshape(-1, n)
        A.setflags(write=False)
        m = A.shape[0]
        rhs = _frozen(self.rhs).reshape(-1)
        senses = tuple(self.senses) if self.senses is not None else ("G",) * m
        lo = _frozen(np.zeros(n) if self.lo is None else self.lo).reshape(-1)
        hi = _frozen(np.full(n, np.inf) if self.hi is None else self.hi).reshape(-1)
        if rhs.shape[0] != m or len(senses) != m:
            raise ValueError("row data lengths disagree")
        if lo.shape[0] != n or hi.shape[0] != n:
            raise ValueError("bound vectors must have length n")
        if any(s not in ("G", "L", "E") for s in senses):
            raise ValueError(f"unknown row sense in {senses!r}")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs)) and np.all(np.isfinite(c))):
            raise ValueError("coefficients must be finite")
        for name, val in (("objective", c), ("A", A), ("rhs", rhs), ("senses", senses), ("lo", lo), ("hi", hi)):
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.objective.shape[0]

    @property
    def m(self):
        return self.A.shape[0]

    def slack_bounds(self):
        slo = np.array([0.0 if s in "GE" else -np.inf for s in self.senses])
        shi = np.array([0.0 if s in "LE" else np.inf for s in self.senses])
        return slo, shi

    def with_rows(self, A_extra, rhs_extra, senses_extra=None):
        A_extra = np.asarray(A_extra, dtype=float).reshape(-1, self.n)
        k = A_extra.shape[0]
        senses_extra = tuple(senses_extra) if senses_extra is not None else ("G",) * k
        return LpProblem(
            self.objective,
            np.vstack([self.A, A_extra]),
            np.concatenate([self.rhs, np.asarray(rhs_extra, dtype=float).reshape(-1)]),
            self.senses + senses_extra,
            self.lo,
            self.hi,
        )

    def with_objective(self, c):
        return LpProblem(c, self.A, self.rhs, self.senses, self.lo, self.hi)

    def with_bounds(self, lo, hi):
        return LpProblem(self.objective, self.A, self.rhs, self.senses, lo, hi)

    def violation(self, x):
        """Largest absolute violation of rows and bounds at ``x``."""
        x = np.asarray(x, dtype=float)
        act = self.A @ x - self.rhs if self.m else np.zeros(0)
        slo, shi = self.slack_bounds()
        v = [0.0]
        if self.m:
            v.append(np.max(np.maximum(slo - act, 0.0)))
            v.append(np.max(np.maximum(act - shi, 0.0)))
        if self.n:
            v.append(np.max(np.maximum(self.lo - x, 0.0)))
            v.append(np.max(np.maximum(x - self.hi, 0.0)))
        return float(max(v))


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: Status
    x: np.ndarray
    obj: float
    basis: tuple
    duals: np.ndarray
    reduced_costs: np.ndarray
    var_state: np.ndarray = field(repr=False)
    slack: np.ndarray = field(repr=False)
    iterations: int = 0

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    def nonbasic(self):
        return tuple(int(j) for j in np.flatnonzero(self.var_state != BASIC))

    def full_x(self):
        return np.concatenate([self.x, self.slack])


@dataclass(frozen=True, eq=False)
class CobasisMatrix:
    row_indices: tuple
    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("cobasis matrix must be square")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float).reshape(-1))
        object.__setattr__(self, "row_indices", tuple(int(i) for i in self.row_indices))

    @classmethod
    def from_rows(cls, A, b, rows):
        rows = tuple(int(i) for i in rows)
        return cls(rows, np.asarray(A, dtype=float)[list(rows)], np.asarray(b, dtype=float)[list(rows)])


def invert(M, tol_pivot=DEFAULT.pivot):
    """Dense inverse by Gauss-Jordan with partial pivoting; raises Singular."""
    M = np.ascontiguousarray(M, dtype=float)
    if M.shape[0] == 0:
        return np.zeros((0, 0))
    inv, ok = kernels.gauss_jordan_inverse(M, tol_pivot)
    if not ok:
        raise Singular("pivot below tolerance; rows are linearly dependent")
    return inv


def inverse_columns(cobasis, tol_pivot=DEFAULT.pivot):
    """Columns r^1..r^n of the cobasis inverse (the rays of its basis cone)."""
    inv = invert(cobasis.matrix, tol_pivot)
    return [inv[:, i].copy() for i in range(inv.shape[1])]


class _Simplex:
    """Working state of one bounded-variable simplex run (dense, explicit B^-1)."""

    def __init__(self, A, b, lo, hi, tol, max_iter, bland_after):
        self.A = A
        self.b = b
        self.lo = lo
        self.hi = hi
        self.tol = tol
        self.max_iter = max_iter
        self.bland_after = bland_after
        self.iters = 0
        self.degenerate = 0
        self.bland = False
        self.since_refactor = 0
        self.unbounded_dir = None

    def refactor(self):
        B = self.A[:, self.basis]
        self.Binv = invert(B, self.tol.pivot)
        nb = self.state != BASIC
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs
        self.since_refactor = 0

    def optimize(self, cost):
        tol = self.tol
        N = self.A.shape[1]
        span_all = self.hi - self.lo
        movable = span_all > 0
        idx = np.arange(N)
        while True:
            if self.iters >= self.max_iter:
                raise IterationLimit(f"simplex exceeded {self.max_iter} pivots")
            if self.since_refactor >= _REFACTOR_EVERY:
                self.refactor()
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            st = self.state
            up = movable & ((st == AT_LOWER) | (st == FREE_ZERO)) & (d < -tol.dual)
            dn = movable & ((st == AT_UPPER) | (st == FREE_ZERO)) & (d > tol.dual)
            elig = up | dn
            if not elig.any():
                return "optimal"
            if self.bland:
                q = int(idx[elig][0])
            else:
                score = np.where(elig, np.abs(d), -1.0)
                q = int(np.argmax(score))
            direction = 1.0 if up[q] else -1.0
            w = self.Binv @ self.A[:, q]
            span = span_all[q]
            bidx = np.asarray(self.basis, dtype=np.int64)
            xB = self.x[bidx]
            theta, r, to_upper = kernels.ratio_test(
                xB, self.lo[bidx], self.hi[bidx], w, direction, span, 1e-9, self.bland, bidx
            )
            if not np.isfinite(theta):
                self.unbounded_dir = (q, direction)
                return "unbounded"
            self.x[q] += direction * theta
            self.x[bidx] = xB - direction * theta * w
            if r < 0:
                self.state[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
            else:
                leaving = int(self.basis[r])
                self.x[leaving] = self.hi[leaving] if to_upper else self.lo[leaving]
                self.state[leaving] = AT_UPPER if to_upper else AT_LOWER
                self.basis[r] = q
                self.state[q] = BASIC
                kernels.eta_update(self.Binv, w, r)
                self.since_refactor += 1
            if theta <= 1e-12:
                self.degenerate += 1
                if self.degenerate > self.bland_after:
                    self.bland = True
            self.iters += 1


def _initial_nonbasic(lo, hi):
    x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    state = np.where(np.isfinite(lo), AT_LOWER, np.where(np.isfinite(hi), AT_UPPER, FREE_ZERO))
    return x.astype(float), state.astype(np.int8)


def _try_warm(sx, warm_basis, m, tol):
    wb = [int(j) for j in warm_basis]
    N = sx.A.shape[1]
    if len(wb) != m or len(set(wb)) != m or any(j < 0 or j >= N for j in wb):
        return False
    x, state = _initial_nonbasic(sx.lo, sx.hi)
    state[wb] = BASIC
    sx.x, sx.state, sx.basis = x, state, np.array(wb, dtype=np.int64)
    try:
        sx.refactor()
    except Singular:
        return False
    xB = sx.x[sx.basis]
    scale = 1.0 + np.abs(sx.b).max(initial=0.0)
    ok = np.all(xB >= sx.lo[sx.basis] - tol.feas * scale) and np.all(xB <= sx.hi[sx.basis] + tol.feas * scale)
    return bool(ok)


def solve_lp(problem, warm_basis=None, *, tol=DEFAULT, max_iter=None):
    """Solve ``problem`` with a dense bounded-variable primal simplex.

    Dantzig pricing, switching to Bland's rule for the rest of the solve after
    ``3 (n + m)`` degenerate pivots.  A warm basis (list of ``m`` variable ids)
    is used when it is nonsingular and primal feasible; otherwise the solve
    starts cold with a phase-one over artificials.
    """
    n, m = problem.n, problem.m
    slo, shi = problem.slack_bounds()
    A = np.hstack([problem.A, -np.eye(m)]) if m else np.zeros((0, n))
    lo = np.concatenate([problem.lo, slo])
    hi = np.concatenate([problem.hi, shi])
    cost = np.concatenate([problem.objective, np.zeros(m)])
    if max_iter is None:
        max_iter = 50 * (n + m) + 1000
    bland_after = 3 * (n + m)

    sx = _Simplex(A, problem.rhs.astype(float), lo, hi, tol, max_iter, bland_after)
    warm = warm_basis is not None and m > 0 and _try_warm(sx, warm_basis, m, tol)

    if not warm:
        x, state = _initial_nonbasic(lo, hi)
        act = problem.A @ x[:n] - problem.rhs if m else np.zeros(0)
        basis = np.empty(m, dtype=np.int64)
        art_rows, art_sign, art_val = [], [], []
        for i in range(m):
            v = act[i]
            if slo[i] <= v <= shi[i]:
                basis[i] = n + i
                x[n + i] = v
                state[n + i] = BASIC
            else:
                bound = slo[i] if v < slo[i] else shi[i]
                x[n + i] = bound
                state[n + i] = AT_LOWER if v < slo[i] else AT_UPPER
                sign = 1.0 if v < slo[i] else -1.0
                art_rows.append(i)
                art_sign.append(sign)
                art_val.append(abs(bound - v))
        k = len(art_rows)
        if k:
            Aart = np.zeros((m, k))
            for a, (i, sgn) in enumerate(zip(art_rows, art_sign)):
                Aart[i, a] = sgn
                basis[i] = n + m + a
            sx.A = np.hstack([A, Aart])
            sx.lo = np.concatenate([lo, np.zeros(k)])
            sx.hi = np.concatenate([hi, np.full(k, np.inf)])
            x = np.concatenate([x, np.array(art_val)])
            state = np.concatenate([state, np.full(k, BASIC, dtype=np.int8)])
        sx.x, sx.state, sx.basis = x, state, basis
        sx.refactor()
        if k:
            c1 = np.concatenate([np.zeros(n + m), np.ones(k)])
            sx.optimize(c1)
            infeas = float(sx.x[n + m:].sum())
            scale = 1.0 + np.abs(problem.rhs).max(initial=0.0)
            if infeas > tol.feas * scale:
                return _package(problem, sx, Status.INFEASIBLE, cost, n, m)
            _drive_out_artificials(sx, n + m)
            sx.A = A
            sx.lo, sx.hi = lo, hi
            sx.x = sx.x[: n + m].copy()
            sx.state = sx.state[: n + m].copy()
            sx.refactor()

    if m == 0:
        # no rows: each variable goes to its cheaper bound independently
        sx.basis = np.empty(0, dtype=np.int64)
        sx.Binv = np.zeros((0, 0))
    outcome = sx.optimize(cost)
    status = Status.OPTIMAL if outcome == "optimal" else Status.UNBOUNDED
    return _package(problem, sx, status, cost, n, m)


def _drive_out_artificials(sx, n_real):
    for r in range(len(sx.basis)):
        if sx.basis[r] < n_real:
            continue
        row = sx.Binv[r] @ sx.A[:, :n_real]
        cand = [j for j in range(n_real) if sx.state[j] != BASIC and abs(row[j]) > 1e-9]
        if not cand:
            raise Singular("cannot drive artificial out of the basis")
        j = max(cand, key=lambda c: (abs(row[c]), -c))
        w = sx.Binv @ sx.A[:, j]
        art = int(sx.basis[r])
        sx.state[art] = AT_LOWER
        sx.x[art] = 0.0
        sx.basis[r] = j
        sx.state[j] = BASIC
        kernels.eta_update(sx.Binv, w, r)
    sx.refactor()


def _package(problem, sx, status, cost, n, m):
    N = n + m
    x_full = sx.x[:N].copy()
    state = sx.state[:N].copy()
    basis = tuple(int(j) for j in sx.basis)
    if status is Status.INFEASIBLE:
        duals = np.full(m, np.nan)
        rc = np.full(n, np.nan)
        obj = np.nan
    else:
        y = cost[list(basis)] @ sx.Binv if m else np.zeros(0)
        duals = y
        rc = problem.objective - (y @ problem.A if m else np.zeros(n))
        obj = float(problem.objective @ x_full[:n]) if status is Status.OPTIMAL else -np.inf
    return LpSolution(
        status=status,
        x=x_full[:n],
        obj=obj,
        basis=basis,
        duals=np.asarray(duals, dtype=float),
        reduced_costs=np.asarray(rc, dtype=float),
        var_state=state,
        slack=x_full[n:],
        iterations=sx.iters,
    )


def tableau_row(solution, problem, basic_var, tol=DEFAULT):
    """Simplex tableau row of ``basic_var`` in shifted nonbasic space.

    Returns ``(rhs, coefs)`` with ``x_basic = rhs - sum_j coefs[j] * x'_j`` where
    ``x'_j = x_j - lo_j`` for nonbasics at lower bound, ``x'_j = hi_j - x_j`` at
    upper bound and ``x'_j = x_j`` for free nonbasics at zero.
    """
    if basic_var not in solution.basis:
        raise NotBasic(f"variable {basic_var} is not basic")
    if not solution.optimal:
        raise ValueError("tableau rows need an optimal solution")
    m = problem.m
    A = np.hstack([problem.A, -np.eye(m)])
    Binv = invert(A[:, list(solution.basis)], tol.pivot)
    r = solution.basis.index(basic_var)
    row = Binv[r] @ A
    coefs = {}
    for j in np.flatnonzero(solution.var_state != BASIC):
        a = row[j]
        if abs(a) <= 1e-12:
            continue
        st = solution.var_state[j]
        coefs[int(j)] = float(-a if st == AT_UPPER else a)
    return float(solution.full_x()[basic_var]), coefs
