"""Right-hand-side parametric LP: trace z(phi) = min{c.x : Ax = b + phi*db}.

The optimal value is continuous, piecewise linear, and convex in phi with
finitely many transition points.  The tracer alternates two LPs:

* max phi over the primal feasible set restricted to columns whose current
  reduced cost is zero (finds the next transition point), and
* the slope problem max{db.y : A^T y + s = c, s >= 0, s.x = 0} at the new
  point (finds the slope of the next interval), solved through its dual so
  the free y variables never appear explicitly.

Tracing stops when the max-phi problem is unbounded (the last slope holds
forever) or the slope problem is unbounded (the problem turns infeasible
just beyond the last transition point).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SolverFailureError
from .simplex import EQ, GE, LE, LinearProgram, solve_lp

__all__ = ["ParametricRay", "parametric_rhs_ray"]

_SUPPORT_TOL = 1e-9
_DEDUP_TOL = 1e-9


@dataclass
class ParametricRay:
    """Piecewise-linear description of z(phi) for phi >= 0.

    transition_points[k] is the start of interval k (the first entry is 0);
    slopes[k] holds on (transition_points[k], transition_points[k+1]), the
    last slope extending to `end` (the phi where the problem turns
    infeasible) or to infinity when end is None.  base_value = z(0).
    """

    direction: np.ndarray
    transition_points: np.ndarray
    slopes: np.ndarray
    base_value: float
    end: float = None

    def __post_init__(self):
        self.transition_points = np.asarray(self.transition_points, dtype=float)
        self.slopes = np.asarray(self.slopes, dtype=float)
        if self.transition_points.shape != self.slopes.shape:
            raise DomainError("transition points and slopes must align")
        if np.any(np.diff(self.transition_points) <= 0):
            raise DomainError("transition points must be strictly increasing")

    def value(self, phi):
        """Reconstruct z(phi) from the stored breakpoints and slopes."""
        phi = float(phi)
        if phi < -1e-12 or (self.end is not None and phi > self.end + 1e-12):
            raise DomainError(f"phi={phi} is outside the traced ray")
        pts = self.transition_points
        z = self.base_value
        for k in range(len(pts)):
            hi = pts[k + 1] if k + 1 < len(pts) else np.inf
            z += self.slopes[k] * (min(phi, hi) - pts[k])
            if phi <= hi:
                break
        return z


def _lower_to_standard(lp: LinearProgram, db):
    """Rewrite an LP as min c.x, Ax = b, x >= 0 and carry the rhs direction
    through the rewrite (slack columns for inequalities, shifted lower
    bounds, finite upper bounds as extra rows with zero direction)."""
    A, b, c = lp.A, lp.b, lp.c
    m, n = A.shape
    db = np.asarray(db, dtype=float)
    if db.shape != (m,):
        raise DomainError(f"direction has shape {db.shape}, expected ({m},)")
    shift = lp.lower
    b = b - A @ shift
    const = float(c @ shift)

    rows = []
    rhs = []
    dirs = []
    slack_cols = 0
    for i, kind in enumerate(lp.row_kind):
        if kind != EQ:
            slack_cols += 1
    finite_up = np.flatnonzero(np.isfinite(lp.upper))
    n_std = n + slack_cols + finite_up.size
    sk = n
    for i, kind in enumerate(lp.row_kind):
        row = np.zeros(n_std)
        row[:n] = A[i]
        if kind == LE:
            row[sk] = 1.0
            sk += 1
        elif kind == GE:
            row[sk] = -1.0
            sk += 1
        rows.append(row)
        rhs.append(b[i])
        dirs.append(db[i])
    for k, j in enumerate(finite_up):
        row = np.zeros(n_std)
        row[j] = 1.0
        row[n + slack_cols + k] = 1.0
        rows.append(row)
        rhs.append(lp.upper[j] - shift[j])
        dirs.append(0.0)
    c_std = np.zeros(n_std)
    c_std[:n] = c
    return np.array(rows), np.array(rhs), np.array(dirs), c_std, n, const


def _slope_problem(A, c, db, support):
    """Slope of z to the right of the current point: solved as the dual
    min{c.w : Aw = db, w_j >= 0 off the support, w_j free on it}.

    Returns (slope, s) where s = c - A^T y is the dual slack certificate,
    or (inf, None) when the ray hits infeasibility here (dual unbounded),
    """
    m, n = A.shape
    sup = np.flatnonzero(support)
    cols = [A]
    cost = [c]
    if sup.size:
        cols.append(-A[:, sup])
        cost.append(-c[sup])
    Aw = np.hstack(cols)
    cw = np.concatenate(cost)
    sol = solve_lp(LinearProgram(c=cw, A=Aw, b=db, row_kind=(EQ,) * m))
    if sol.status == "infeasible":
        return np.inf, None
    if sol.status == "unbounded":
        raise SolverFailureError("slope problem lost dual feasibility")
    s = c - A.T @ sol.y
    s[sup] = 0.0
    return float(sol.objective), s


def parametric_rhs_ray(lp: LinearProgram, db, max_transitions=200) -> ParametricRay:
    """Trace the optimal value of `lp` as its right-hand side moves along
    b + phi*db for phi >= 0.  The LP must be optimal (feasible and bounded)
    at phi = 0."""
    A, b, dirs, c, n_orig, const = _lower_to_standard(lp, db)
    m, n = A.shape

    base = solve_lp(LinearProgram(c=c, A=A, b=b, row_kind=(EQ,) * m))
    if base.status != "optimal":
        raise DomainError(f"lp must be optimal at phi=0, got status {base.status!r}")
    x = base.x

    slope, s = _slope_problem(A, c, dirs, x > _SUPPORT_TOL)
    if not np.isfinite(slope):
        raise SolverFailureError("slope undefined at phi=0 on an optimal lp")
    phis = [0.0]
    slopes = [slope]
    end = None

    # max-phi template: columns are (x restricted by s, phi >= 0)
    A_ext = np.hstack([A, -dirs[:, None]])
    c_ext = np.zeros(n + 1)
    c_ext[n] = -1.0

    for _ in range(max_transitions):
        allowed = s <= _SUPPORT_TOL
        upper = np.full(n + 1, np.inf)
        upper[:n][~allowed] = 0.0
        step = solve_lp(
            LinearProgram(c=c_ext, A=A_ext, b=b, row_kind=(EQ,) * m, upper=upper)
        )
        if step.status == "unbounded":
            return ParametricRay(np.asarray(db, float), phis, slopes, base.objective + const, end)
        if step.status != "optimal":
            raise SolverFailureError(f"max-phi subproblem returned {step.status!r}")
        phi_new = float(step.x[n])
        x_new = step.x[:n]
        slope, s_new = _slope_problem(A, c, dirs, x_new > _SUPPORT_TOL)
        if not np.isfinite(slope):
            end = phi_new  # infeasible beyond this point
            return ParametricRay(np.asarray(db, float), phis, slopes, base.objective + const, end)
        tol = _DEDUP_TOL * (1.0 + abs(phi_new))
        if phi_new > phis[-1] + tol:
            phis.append(phi_new)
            slopes.append(slope)
        else:
            # zero-length interval: keep the right-most slope at this point
            slopes[-1] = slope
        s = s_new
    raise SolverFailureError("parametric ray did not terminate (cycling)")
