"""Independent oracles used by the test suite.

Nothing in here calls back into the package's solution paths for the thing
it checks: vertex enumeration is plain linear algebra, the user-problem
oracle goes through scipy's HiGHS LP solver, and the grid oracles evaluate
fixed-parameter problems pointwise.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from vesshare.simplex import EQ, GE, LE


def enumerate_lp_optimum(lp, tol=1e-9):
    """Brute-force optimum of a small LP by enumerating candidate vertices.

    Requires finite bounds on every variable (bounded feasible region).
    Returns (status, objective) with status 'optimal' or 'infeasible'.
    """
    A, b, c = lp.A, lp.b, lp.c
    m, n = A.shape
    if not np.all(np.isfinite(lp.upper)):
        raise ValueError("vertex enumeration needs finite upper bounds")

    rows_eq = [i for i, k in enumerate(lp.row_kind) if k == EQ]
    cand = []  # (normal, rhs) rows that may be tight
    for i, k in enumerate(lp.row_kind):
        if k != EQ:
            cand.append((A[i], b[i]))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cand.append((e, lp.lower[j]))
        cand.append((e, lp.upper[j]))

    base_rows = [A[i] for i in rows_eq]
    base_rhs = [b[i] for i in rows_eq]
    need = n - len(rows_eq)
    if need < 0:
        raise ValueError("more equality rows than variables")

    best = None
    feasible = False
    for combo in itertools.combinations(range(len(cand)), need):
        M = np.array(base_rows + [cand[i][0] for i in combo])
        r = np.array(base_rhs + [cand[i][1] for i in combo])
        if M.shape[0] != n:
            continue
        try:
            x = np.linalg.solve(M, r)
        except np.linalg.LinAlgError:
            continue
        if np.any(x < lp.lower - tol) or np.any(x > lp.upper + tol):
            continue
        Ax = A @ x
        ok = True
        for i, k in enumerate(lp.row_kind):
            if k == EQ and abs(Ax[i] - b[i]) > tol:
                ok = False
            elif k == LE and Ax[i] > b[i] + tol:
                ok = False
            elif k == GE and Ax[i] < b[i] - tol:
                ok = False
            if not ok:
                break
        if not ok:
            continue
        feasible = True
        val = float(c @ x)
        if best is None or val < best:
            best = val
    if not feasible:
        return "infeasible", None
    return "optimal", best


def scipy_solve(lp):
    """Solve a LinearProgram with scipy's HiGHS (independent code path)."""
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for i, k in enumerate(lp.row_kind):
        if k == EQ:
            A_eq.append(lp.A[i])
            b_eq.append(lp.b[i])
        elif k == LE:
            A_ub.append(lp.A[i])
            b_ub.append(lp.b[i])
        else:
            A_ub.append(-lp.A[i])
            b_ub.append(-lp.b[i])
    res = linprog(
        lp.c,
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq) if A_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=list(zip(lp.lower, np.where(np.isfinite(lp.upper), lp.upper, None))),
        method="highs",
    )
    if res.status == 0:
        return "optimal", float(res.fun), np.asarray(res.x)
    if res.status == 2:
        return "infeasible", None, None
    if res.status == 3:
        return "unbounded", None, None
    raise RuntimeError(f"scipy linprog failed: {res.message}")


def scipy_user_bill(load, renewable, tariff, tech, grid, capacity):
    """Minimal bill-minus-feedin for one user at a fixed capacity, solved
    with scipy HiGHS.  Variables: p_m, r_u[T], ch[T], dis[T], e[0..T]."""
    T = grid.T
    h = grid.slot_hours
    load = np.asarray(load, dtype=float)
    renewable = np.asarray(renewable, dtype=float)
    n = 1 + 3 * T + (T + 1)
    i_pm = 0
    i_ru = 1
    i_ch = 1 + T
    i_dis = 1 + 2 * T
    i_e = 1 + 3 * T

    c = np.zeros(n)
    c[i_pm] = tariff.pi_p
    c[i_ru : i_ru + T] = (tariff.pi_s - tariff.pi_b) * h
    c[i_ch : i_ch + T] = tariff.pi_b * h
    c[i_dis : i_dis + T] = -tariff.pi_b * h

    A_eq, b_eq, A_ub, b_ub = [], [], [], []
    for t in range(T):
        row = np.zeros(n)
        row[i_e + t + 1] = 1.0
        row[i_e + t] = -1.0
        row[i_ch + t] = -tech.eta_c * h
        row[i_dis + t] = h / tech.eta_d
        A_eq.append(row)
        b_eq.append(0.0)
    row = np.zeros(n)
    row[i_e] = 1.0
    row[i_e + T] = -1.0
    A_eq.append(row)
    b_eq.append(0.0)
    for t in range(T):
        row = np.zeros(n)  # grid draw >= 0: r_u + dis - ch <= load
        row[i_ru + t] = 1.0
        row[i_dis + t] = 1.0
        row[i_ch + t] = -1.0
        A_ub.append(row)
        b_ub.append(load[t])
        row = np.zeros(n)  # grid draw <= p_m
        row[i_ru + t] = -1.0
        row[i_dis + t] = -1.0
        row[i_ch + t] = 1.0
        row[i_pm] = -1.0
        A_ub.append(row)
        b_ub.append(-load[t])
    bounds = [(0, None)]
    bounds += [(0, renewable[t]) for t in range(T)]
    bounds += [(0, None)] * (2 * T)
    bounds += [(0, capacity)] * (T + 1)
    res = linprog(
        c,
        A_ub=np.array(A_ub),
        b_ub=np.array(b_ub),
        A_eq=np.array(A_eq),
        b_eq=np.array(b_eq),
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"oracle LP failed: {res.message}")
    const = tariff.pi_b * float(np.sum(load)) * h - tariff.pi_s * float(np.sum(renewable)) * h
    return float(res.fun) + const


def piecewise_from_grid(xs, fs, slope_tol=1e-7):
    """Recover breakpoints/slopes of an exactly piecewise-linear function
    sampled on a fine grid.  Consecutive same-slope cells are merged; each
    breakpoint is the intersection of the two adjacent affine pieces."""
    xs = np.asarray(xs, dtype=float)
    fs = np.asarray(fs, dtype=float)
    slopes = np.diff(fs) / np.diff(xs)
    pieces = []  # (slope, intercept) fitted on maximal same-slope runs
    start = 0
    for i in range(1, len(slopes) + 1):
        if i == len(slopes) or abs(slopes[i] - slopes[start]) > slope_tol * (1 + abs(slopes[start])):
            k = float(np.median(slopes[start:i]))
            b = float(np.median(fs[start : i + 1] - k * xs[start : i + 1]))
            pieces.append((k, b))
            start = i
    breakpoints = [float(xs[0])]
    for (k1, b1), (k2, b2) in zip(pieces, pieces[1:]):
        breakpoints.append((b2 - b1) / (k1 - k2))
    return np.array(breakpoints), np.array([p[0] for p in pieces])
