"""Gomory mixed-integer cuts read from the optimal simplex tableau."""

import math

import numpy as np

from .linalg_lp import AT_UPPER, BASIC, FREE_ZERO, tableau_row
from .model import standardize
from .prlp import Cut
from .tolerances import DEFAULT

MAX_DYNAMISM = 1e7


def _frac(x):
    return x - math.floor(x)


def integer_slacks(instance):
    """Rows whose slack only takes integer values at integer points."""
    inst = standardize(instance)
    ints = set(inst.integer_vars)
    out = []
    for i in range(inst.q):
        row = inst.lp.A[i]
        nz = np.flatnonzero(row)
        if all(j in ints and float(row[j]).is_integer() for j in nz) and float(inst.lp.rhs[i]).is_integer():
            out.append(i)
    return set(out)


def gmi_coefficients(row_coefs, f0, is_integer):
    """Nonbasic-space coefficients of ``sum gamma_j x'_j >= 1``.

    ``row_coefs`` maps nonbasic id to its entry in ``x_B + sum a_j x'_j = rhs``.
    """
    out = {}
    for j, a in row_coefs.items():
        if is_integer(j):
            fj = _frac(a)
            g = fj / f0 if fj <= f0 else (1.0 - fj) / (1.0 - f0)
        else:
            g = a / f0 if a >= 0 else -a / (1.0 - f0)
        if g != 0.0:
            out[j] = g
    return out


def _substitute(gamma, sol, problem):
    """Map ``sum gamma_j x'_j >= 1`` back to the structural variables."""
    n = problem.n
    slo, shi = problem.slack_bounds()
    lo = np.concatenate([problem.lo, slo])
    hi = np.concatenate([problem.hi, shi])
    alpha = np.zeros(n)
    beta = 1.0
    for j, g in gamma.items():
        st = sol.var_state[j]
        # x'_j = sign * (v_j - ref), v_j the structural or the slack
        if st == AT_UPPER:
            sign, ref = -1.0, hi[j]
        elif st == FREE_ZERO:
            sign, ref = 1.0, 0.0
        else:
            sign, ref = 1.0, lo[j]
        if j < n:
            alpha[j] += g * sign
        else:
            i = j - n
            # slack s_i = A_i x - b_i
            alpha += g * sign * problem.A[i]
            beta += g * sign * problem.rhs[i]
        beta += g * sign * ref
    return alpha, beta


def generate_gmics(instance, lp_solution, tol=DEFAULT, max_dynamism=MAX_DYNAMISM):
    """One GMIC per basic integer variable with a fractional value."""
    inst = standardize(instance)
    if not lp_solution.optimal:
        raise ValueError("GMICs need an optimal LP solution")
    problem = inst.lp
    n = problem.n
    ints = set(inst.integer_vars)
    int_rows = integer_slacks(inst)

    def is_integer(j):
        return j in ints if j < n else (j - n) in int_rows

    x = lp_solution.x
    cuts = []
    for j in sorted(v for v in lp_solution.basis if v < n and v in ints):
        f0 = _frac(x[j])
        if f0 < tol.frac or f0 > 1.0 - tol.frac:
            continue
        rhs, coefs = tableau_row(lp_solution, problem, j, tol)
        f0 = _frac(rhs)
        if f0 < tol.frac or f0 > 1.0 - tol.frac:
            continue
        gamma = gmi_coefficients(coefs, f0, is_integer)
        if not gamma:
            continue
        alpha, beta = _substitute(gamma, lp_solution, problem)
        big = np.max(np.abs(alpha))
        nz = np.abs(alpha[np.abs(alpha) > 0])
        if big <= 0 or big / nz.min() > max_dynamism:
            continue
        cut = Cut(alpha / big, beta / big, {"source": "gmic", "row_var": int(j), "strengthened": False})
        if cut.violation(x) < 1e-7:
            continue
        cuts.append(cut)
    return cuts


def count_fractional(instance, lp_solution, tol=DEFAULT):
    inst = standardize(instance)
    return sum(
        1
        for j in inst.integer_vars
        if lp_solution.var_state[j] == BASIC and tol.frac <= _frac(lp_solution.x[j]) <= 1 - tol.frac
    )
