"""Hot numeric kernels.

Every kernel exists twice: a loop form compiled with numba and a vectorised
numpy form.  The public names resolve to the numba form unless numba is
missing or ``VPC_FORGE_NO_NUMBA`` is set (see ``_accel``).  Both forms must
return identical results; ``tests/test_kernels.py`` checks this.
"""

import itertools

import numpy as np

from ._accel import HAS_NUMBA, njit

__all__ = [
    "HAS_NUMBA",
    "gauss_jordan_inverse",
    "eta_update",
    "ratio_test",
    "box_points",
    "monoid_count",
    "monoid_bisect",
    "KERNELS_NB",
    "KERNELS_NP",
]


# ---------------------------------------------------------------------------
# dense inverse with partial pivoting


@njit
def _gauss_jordan_inverse_nb(M, tol_pivot):
    n = M.shape[0]
    aug = np.zeros((n, 2 * n))
    for i in range(n):
        for j in range(n):
            aug[i, j] = M[i, j]
        aug[i, n + i] = 1.0
    for col in range(n):
        piv = col
        best = abs(aug[col, col])
        for r in range(col + 1, n):
            v = abs(aug[r, col])
            if v > best:
                best = v
                piv = r
        if best < tol_pivot:
            return np.zeros((n, n)), False
        if piv != col:
            for j in range(2 * n):
                tmp = aug[col, j]
                aug[col, j] = aug[piv, j]
                aug[piv, j] = tmp
        p = aug[col, col]
        for j in range(2 * n):
            aug[col, j] /= p
        for r in range(n):
            if r != col:
                f = aug[r, col]
                if f != 0.0:
                    for j in range(2 * n):
                        aug[r, j] -= f * aug[col, j]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = aug[i, n + j]
    return out, True


def _gauss_jordan_inverse_np(M, tol_pivot):
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    aug = np.hstack([M.copy(), np.eye(n)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < tol_pivot:
            return np.zeros((n, n)), False
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        f = aug[:, col].copy()
        f[col] = 0.0
        aug -= np.outer(f, aug[col])
    return aug[:, n:].copy(), True


# ---------------------------------------------------------------------------
# product-form update of an explicit basis inverse


@njit
def _eta_update_nb(Binv, w, r):
    m = Binv.shape[0]
    p = w[r]
    for j in range(m):
        Binv[r, j] /= p
    for i in range(m):
        if i != r:
            f = w[i]
            if f != 0.0:
                for j in range(m):
                    Binv[i, j] -= f * Binv[r, j]


def _eta_update_np(Binv, w, r):
    Binv[r] /= w[r]
    f = w.copy()
    f[r] = 0.0
    Binv -= np.outer(f, Binv[r])


# ---------------------------------------------------------------------------
# bounded ratio test
#
# The entering variable moves by theta * direction; basic variables move by
# -theta * direction * w.  Returns (theta, row, to_upper); row == -1 means the
# entering variable's own bound flip wins (or theta is infinite).


@njit
def _ratio_test_nb(xB, lB, uB, w, direction, span, piv_tol, bland, basis_ids):
    m = xB.shape[0]
    theta = span
    row = -1
    to_upper = False
    best_w = 0.0
    for i in range(m):
        a = w[i] * direction
        if a > piv_tol:
            if lB[i] == -np.inf:
                continue
            t = (xB[i] - lB[i]) / a
            up = False
        elif a < -piv_tol:
            if uB[i] == np.inf:
                continue
            t = (uB[i] - xB[i]) / (-a)
            up = True
        else:
            continue
        if t < 0.0:
            t = 0.0
        aw = abs(a)
        if row == -1:
            better = t < theta - 1e-12
        elif t < theta - 1e-12:
            better = True
        elif t <= theta + 1e-12:
            if bland:
                better = basis_ids[i] < basis_ids[row]
            else:
                better = aw > best_w
        else:
            better = False
        if better:
            theta = t
            row = i
            to_upper = up
            best_w = aw
    return theta, row, to_upper


def _ratio_test_np(xB, lB, uB, w, direction, span, piv_tol, bland, basis_ids):
    a = w * direction
    t = np.full(a.shape, np.inf)
    up = np.zeros(a.shape, dtype=bool)
    dec = (a > piv_tol) & np.isfinite(lB)
    inc = (a < -piv_tol) & np.isfinite(uB)
    t[dec] = (xB[dec] - lB[dec]) / a[dec]
    t[inc] = (uB[inc] - xB[inc]) / (-a[inc])
    up[inc] = True
    t = np.maximum(t, 0.0)
    cand = np.flatnonzero(dec | inc)
    # same scan as the scalar kernel so tie-breaking agrees exactly
    row = -1
    theta = span
    best_w = 0.0
    for i in cand:
        ti = t[i]
        aw = abs(a[i])
        if row == -1:
            better = ti < theta - 1e-12
        elif ti < theta - 1e-12:
            better = True
        elif ti <= theta + 1e-12:
            better = basis_ids[i] < basis_ids[row] if bland else aw > best_w
        else:
            better = False
        if better:
            theta, row, best_w = ti, int(i), aw
    if row == -1:
        return span, -1, False
    return theta, row, bool(up[row])


# ---------------------------------------------------------------------------
# integer points of a box satisfying A x >= b - tol


@njit
def _box_points_nb(A, b, lo, hi, tol):
    m, n = A.shape
    if n == 0:
        ok = True
        for i in range(m):
            if 0.0 < b[i] - tol:
                ok = False
        if ok:
            return np.zeros((1, 0))
        return np.zeros((0, 0))
    total = 1
    for j in range(n):
        total *= hi[j] - lo[j] + 1
    x = lo.copy()
    buf = np.empty((total, n))
    count = 0
    act = np.zeros(m)
    for i in range(m):
        for j in range(n):
            act[i] += A[i, j] * x[j]
    for _ in range(total):
        ok = True
        for i in range(m):
            if act[i] < b[i] - tol:
                ok = False
                break
        if ok:
            for j in range(n):
                buf[count, j] = x[j]
            count += 1
        # odometer step, first coordinate fastest (colexicographic order)
        j = 0
        while j < n:
            if x[j] < hi[j]:
                x[j] += 1
                for i in range(m):
                    act[i] += A[i, j]
                break
            for i in range(m):
                act[i] -= A[i, j] * (x[j] - lo[j])
            x[j] = lo[j]
            j += 1
    return buf[:count].copy()


def _box_points_np(A, b, lo, hi, tol):
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if n == 0:
        if np.all(0.0 >= b - tol):
            return np.zeros((1, 0))
        return np.zeros((0, 0))
    # itertools.product varies the last factor fastest; reverse for colex order
    ranges = [np.arange(int(lo[j]), int(hi[j]) + 1, dtype=float) for j in reversed(range(n))]
    out = []
    chunk = 1 << 16
    it = itertools.product(*ranges)
    while True:
        block = np.array(list(itertools.islice(it, chunk)), dtype=float)
        if block.size == 0:
            break
        block = block.reshape(-1, n)[:, ::-1]
        mask = np.all(block @ A.T >= b - tol, axis=1) if m else np.ones(len(block), dtype=bool)
        out.append(block[mask])
    if not out:
        return np.zeros((0, n))
    return np.vstack(out)


# ---------------------------------------------------------------------------
# monoid inf-max helpers: g(z) = sum_t floor((z + s_t) / d_t), all d_t > 0


@njit
def _monoid_count_nb(z, s, d, eps):
    tot = 0
    for t in range(s.shape[0]):
        q = (z + s[t]) / d[t]
        tot += int(np.floor(q + eps * max(1.0, abs(q))))
    return tot


def _monoid_count_np(z, s, d, eps):
    q = (z + s) / d
    return int(np.floor(q + eps * np.maximum(1.0, np.abs(q))).sum())


@njit
def _monoid_bisect_nb(s, d, iters, eps):
    lo = -np.max(s) - 1.0
    hi = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _monoid_count_nb(mid, s, d, eps) >= 0:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _monoid_bisect_np(s, d, iters, eps):
    lo = -float(np.max(s)) - 1.0
    hi = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _monoid_count_np(mid, s, d, eps) >= 0:
            hi = mid
        else:
            lo = mid
    return lo, hi


KERNELS_NB = {
    "gauss_jordan_inverse": _gauss_jordan_inverse_nb,
    "eta_update": _eta_update_nb,
    "ratio_test": _ratio_test_nb,
    "box_points": _box_points_nb,
    "monoid_count": _monoid_count_nb,
    "monoid_bisect": _monoid_bisect_nb,
}
KERNELS_NP = {
    "gauss_jordan_inverse": _gauss_jordan_inverse_np,
    "eta_update": _eta_update_np,
    "ratio_test": _ratio_test_np,
    "box_points": _box_points_np,
    "monoid_count": _monoid_count_np,
    "monoid_bisect": _monoid_bisect_np,
}

_active = KERNELS_NB if HAS_NUMBA else KERNELS_NP

gauss_jordan_inverse = _active["gauss_jordan_inverse"]
eta_update = _active["eta_update"]
ratio_test = _active["ratio_test"]
box_points = _active["box_points"]
monoid_count = _active["monoid_count"]
monoid_bisect = _active["monoid_bisect"]
