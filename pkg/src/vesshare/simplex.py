"""Embedded dense simplex solver for small/medium linear programs.

min c.x  s.t.  A x {=, <=, >=} b,  lower <= x <= upper  (lower default 0).

Two-phase bounded-variable tableau simplex.  The pivot rule is fixed and
deterministic: Dantzig pricing with lowest-index tie-breaking, switching to
Bland's rule after 1000 iterations so cycling cannot occur.  Every optimal
solve is refreshed from the final basis (one dense solve) and then checked
against its own KKT certificate; a failed certificate raises.

Instance sizes here are a few hundred rows/columns at most, so dense
matrices throughout; no sparse storage, no presolve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SolverFailureError

__all__ = ["EQ", "LE", "GE", "LinearProgram", "LpSolution", "solve_lp", "SOLVE_STATS"]

EQ = "="
LE = "<="
GE = ">="

_PIVOT_TOL = 1e-9
_RED_TOL = 1e-9
_FEAS_TOL = 1e-7
_BLAND_AFTER = 1000
_REFRESH_EVERY = 64

# Running tally of solves and certificate checks, mostly for test assertions.
SOLVE_STATS = {"solves": 0, "optimal": 0, "verified": 0, "failures": 0}


@dataclass
class LinearProgram:
    """Dense LP record.  row_kind is a sequence over {'=', '<=', '>='};
    bounds default to [0, inf) per column."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    row_kind: tuple = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        m, n = self.A.shape
        if self.c.shape != (n,):
            raise DimensionError(f"c has shape {self.c.shape}, expected ({n},)")
        if self.b.shape != (m,):
            raise DimensionError(f"b has shape {self.b.shape}, expected ({m},)")
        if self.row_kind is None:
            self.row_kind = (EQ,) * m
        self.row_kind = tuple(self.row_kind)
        if len(self.row_kind) != m:
            raise DimensionError("row_kind length does not match rows of A")
        for k in self.row_kind:
            if k not in (EQ, LE, GE):
                raise DimensionError(f"unknown row kind {k!r}")
        if self.lower is None:
            self.lower = np.zeros(n)
        self.lower = np.asarray(self.lower, dtype=float)
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise DimensionError("bound vectors must have one entry per column")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise DimensionError("c, A, b must be finite")
        if not np.all(np.isfinite(self.lower)):
            raise DimensionError("lower bounds must be finite")
        if np.any(self.upper < self.lower - 1e-12):
            raise DimensionError("upper bound below lower bound")

    @property
    def shape(self):
        return self.A.shape


@dataclass
class LpSolution:
    """Solver output.  For optimal status, x / y / s satisfy the KKT
    certificate at 1e-8 (checked before this object is returned):

    * primal feasibility on rows and bounds,
    * complementary slackness |slack_j * s_j| and |row_slack_i * y_i|,
    * duality gap |c.x - (b.y + bound terms)| <= 1e-8 (1 + |c.x|).

    s = c - A^T y are reduced costs; basis holds the final basic column
    indices in the solver's internal column space (structural columns keep
    their original index).
    """

    status: str
    x: np.ndarray = None
    objective: float = None
    y: np.ndarray = None
    s: np.ndarray = None
    basis: tuple = None
    iterations: int = 0

    def verify(self, lp, tol=1e-8):
        if self.status != "optimal":
            return
        x, y, s = self.x, self.y, self.s
        scale = 1.0 + float(np.max(np.abs(lp.b), initial=0.0))
        row_slack = lp.b - lp.A @ x
        for i, kind in enumerate(lp.row_kind):
            if kind == EQ and abs(row_slack[i]) > tol * scale:
                raise SolverFailureError(f"equality row {i} violated by {row_slack[i]!r}")
            if kind == LE and row_slack[i] < -tol * scale:
                raise SolverFailureError(f"<= row {i} violated by {-row_slack[i]!r}")
            if kind == GE and row_slack[i] > tol * scale:
                raise SolverFailureError(f">= row {i} violated by {row_slack[i]!r}")
            if kind == LE and y[i] > tol:
                raise SolverFailureError(f"<= row {i} has positive dual {y[i]!r}")
            if kind == GE and y[i] < -tol:
                raise SolverFailureError(f">= row {i} has negative dual {y[i]!r}")
            if kind != EQ and abs(row_slack[i] * y[i]) > tol * scale * (1.0 + abs(y[i])):
                raise SolverFailureError(f"row {i}: slack*dual = {row_slack[i] * y[i]!r}")
        bscale = 1.0 + float(np.max(np.abs(x), initial=0.0))
        if np.any(x < lp.lower - tol * bscale) or np.any(x > lp.upper + tol * bscale):
            raise SolverFailureError("variable bound violated")
        lo_gap = (x - lp.lower) * np.maximum(s, 0.0)
        finite_up = np.isfinite(lp.upper)
        up_gap = np.zeros_like(x)
        up_gap[finite_up] = (lp.upper[finite_up] - x[finite_up]) * np.minimum(s[finite_up], 0.0)
        worst = max(np.max(np.abs(lo_gap), initial=0.0), np.max(np.abs(up_gap), initial=0.0))
        if worst > tol * (1.0 + abs(self.objective)):
            raise SolverFailureError(f"complementary slackness violated by {worst!r}")
        dual_obj = float(lp.b @ y)
        dual_obj += float(lp.lower @ np.maximum(s, 0.0))
        finite_u = np.isfinite(lp.upper)
        dual_obj += float(lp.upper[finite_u] @ np.minimum(s[finite_u], 0.0))
        gap = abs(self.objective - dual_obj)
        if gap > tol * (1.0 + abs(self.objective)):
            raise SolverFailureError(f"duality gap {gap!r} exceeds tolerance")
        SOLVE_STATS["verified"] += 1


class _Tableau:
    """Working state of the bounded-variable simplex (one solve)."""

    def __init__(self, lp: LinearProgram):
        m, n = lp.A.shape
        self.lp = lp
        self.m, self.n = m, n
        # shift lower bounds to zero
        self.shift = lp.lower.copy()
        b = lp.b - lp.A @ self.shift
        ub = lp.upper - lp.lower

        kinds = lp.row_kind
        n_slack = sum(1 for k in kinds if k != EQ)
        N = n + n_slack + m  # structural + slacks + room for artificials
        W = np.zeros((m, N))
        W[:, :n] = lp.A
        u = np.full(N, np.inf)
        u[:n] = ub
        self.slack_col = np.full(m, -1, dtype=int)
        col = n
        for i, k in enumerate(kinds):
            if k != EQ:
                W[i, col] = 1.0 if k == LE else -1.0
                self.slack_col[i] = col
                col += 1
        self.row_scale = np.where(b < 0, -1.0, 1.0)
        W *= self.row_scale[:, None]
        b = b * self.row_scale

        basis = np.empty(m, dtype=int)
        self.n_art = 0
        for i in range(m):
            sc = self.slack_col[i]
            if sc >= 0 and W[i, sc] == 1.0:
                basis[i] = sc
            else:
                ac = n + n_slack + self.n_art
                W[i, ac] = 1.0
                basis[i] = ac
                self.n_art += 1
        N = n + n_slack + self.n_art
        self.W = np.ascontiguousarray(W[:, :N])
        self.u = u[:N]
        self.b = b
        self.N = N
        self.n_slack = n_slack
        self.basis = basis
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[basis] = True
        self.at_upper = np.zeros(N, dtype=bool)
        self.is_art = np.zeros(N, dtype=bool)
        if self.n_art:
            self.is_art[n + n_slack:] = True
        self.tab = self.W.copy()
        self.xB = b.copy()
        self._buf = np.empty_like(self.tab)
        # static column scaling for pricing (steepest-edge flavour without
        # the update cost); purely a pivot-choice heuristic
        self.price_scale = 1.0 / (1.0 + np.linalg.norm(self.W, axis=0))
        self.iterations = 0

    def _reduced(self, cost):
        red = cost - cost[self.basis] @ self.tab
        red[self.basis] = 0.0
        return red

    def _price(self, red, bland):
        viol = np.where(self.at_upper, red, -red)
        viol[self.is_basic] = -np.inf
        viol[self.is_art] = -np.inf
        if bland:
            ok = np.flatnonzero(viol > _RED_TOL)
            return int(ok[0]) if ok.size else -1
        j = int(np.argmax(viol * self.price_scale))
        if viol[j] > _RED_TOL:
            return j
        j = int(np.argmax(viol))  # scaled pick can miss small violations
        return j if viol[j] > _RED_TOL else -1

    def _step(self, j, red, bland, guard_art):
        """One pivot or bound flip with entering column j; updates red in
        place on a pivot.  Returns 'ok' or 'unbounded'."""
        from_upper = self.at_upper[j]
        col = self.tab[:, j]
        g = -col if from_upper else col
        u_basis = self.u[self.basis]
        theta = self.u[j]  # own-bound flip distance
        pos = g > _PIVOT_TOL
        neg = g < -_PIVOT_TOL
        r_pos = np.full(self.m, np.inf)
        np.divide(self.xB, g, out=r_pos, where=pos)
        r_neg = np.full(self.m, np.inf)
        np.divide(u_basis - self.xB, -g, out=r_neg, where=neg & np.isfinite(u_basis))
        if guard_art and self.n_art:
            # phase 2: a zero-level basic artificial must never rise again
            r_pos[self.is_art[self.basis] & neg] = 0.0
        ratios = np.minimum(np.maximum(r_pos, 0.0), np.maximum(r_neg, 0.0))
        row_theta = float(np.min(ratios)) if ratios.size else np.inf
        leave_row = -1
        if row_theta < theta - 1e-12 or (np.isinf(theta) and not np.isinf(row_theta)):
            theta = row_theta
            tie = 1e-9 * (1.0 + abs(theta))
            rows = np.flatnonzero(ratios <= theta + tie)
            if bland:
                leave_row = int(rows[int(np.argmin(self.basis[rows]))])
            else:
                leave_row = int(rows[int(np.argmax(np.abs(g[rows])))])
        if np.isinf(theta):
            return "unbounded"
        theta = max(theta, 0.0)
        self.xB -= theta * g
        if leave_row < 0:
            self.at_upper[j] = not from_upper
            return "ok"
        leave_to_upper = r_neg[leave_row] < r_pos[leave_row]
        new_val = (self.u[j] - theta) if from_upper else theta
        l = self.basis[leave_row]
        self.is_basic[l] = False
        self.at_upper[l] = leave_to_upper
        self.basis[leave_row] = j
        self.is_basic[j] = True
        self.at_upper[j] = False
        piv = self.tab[leave_row, j]
        row = self.tab[leave_row]
        row /= piv
        colv = self.tab[:, j].copy()
        colv[leave_row] = 0.0
        np.multiply(colv[:, None], row[None, :], out=self._buf)
        np.subtract(self.tab, self._buf, out=self.tab)
        self.tab[:, j] = 0.0
        self.tab[leave_row, j] = 1.0
        rj = red[j]
        if rj != 0.0:
            red -= rj * row
        red[j] = 0.0
        self.xB[leave_row] = new_val
        return "ok"

    def run(self, cost, cap, guard_art=True):
        """Simplex iterations with the given working-space cost vector."""
        red = self._reduced(cost)
        since_refresh = 0
        while True:
            bland = self.iterations >= _BLAND_AFTER
            j = self._price(red, bland)
            if j < 0:
                if since_refresh == 0:
                    return "optimal"
                red = self._reduced(cost)
                since_refresh = 0
                continue
            if self._step(j, red, bland, guard_art) == "unbounded":
                return "unbounded"
            self.iterations += 1
            since_refresh += 1
            if since_refresh >= _REFRESH_EVERY:
                red = self._reduced(cost)
                since_refresh = 0
            if self.iterations > cap:
                raise SolverFailureError(
                    f"simplex stalled after {self.iterations} iterations"
                )

    def drive_out_artificials(self):
        for i in range(self.m):
            bi = self.basis[i]
            if not self.is_art[bi]:
                continue
            row_slice = self.tab[i, : self.n + self.n_slack]
            cand = np.flatnonzero(np.abs(row_slice) > 1e-7)
            cand = cand[~self.is_basic[cand]]
            if cand.size == 0:
                continue  # redundant row; artificial stays basic at zero
            # prefer an at-lower candidate; the basis swap moves no variable
            at_lo = cand[~self.at_upper[cand]]
            j = int(at_lo[0]) if at_lo.size else int(cand[0])
            piv = self.tab[i, j]
            row = self.tab[i]
            row /= piv
            colv = self.tab[:, j].copy()
            colv[i] = 0.0
            self.tab -= colv[:, None] * row[None, :]
            self.tab[:, j] = 0.0
            self.tab[i, j] = 1.0
            self.is_basic[bi] = False
            self.basis[i] = j
            self.is_basic[j] = True
            # the entering variable keeps its current value (0 or its upper
            # bound); the artificial it replaces sits at zero
            self.xB[i] = self.u[j] if self.at_upper[j] else 0.0
            self.at_upper[j] = False


def solve_lp(lp: LinearProgram, verify=True) -> LpSolution:
    """Solve an LP; statuses 'optimal' / 'infeasible' / 'unbounded'.

    Deterministic: identical inputs give identical solutions and bases.
    Raises SolverFailureError if pivoting stalls beyond 50*(rows+cols)
    iterations or the final certificate fails.
    """
    SOLVE_STATS["solves"] += 1
    t = _Tableau(lp)
    cap = max(50 * (t.m + t.N), 2000)

    if t.n_art:
        phase1 = np.zeros(t.N)
        phase1[t.is_art] = 1.0
        if t.run(phase1, cap, guard_art=False) == "unbounded":
            raise SolverFailureError("phase-1 problem reported unbounded")
        infeas = float(np.sum(t.xB[t.is_art[t.basis]]))
        if infeas > _FEAS_TOL * (1.0 + float(np.max(np.abs(t.b), initial=0.0))):
            return LpSolution(status="infeasible", iterations=t.iterations)
        t.drive_out_artificials()

    cost = np.zeros(t.N)
    cost[: t.n] = lp.c
    status = t.run(cost, cap)
    if status == "unbounded":
        return LpSolution(status="unbounded", iterations=t.iterations)

    # refresh primal/dual from the final basis to drop accumulated drift
    B = t.W[:, t.basis]
    nb_up = np.flatnonzero(t.at_upper & ~t.is_basic)
    rhs = t.b.copy()
    if nb_up.size:
        rhs = rhs - t.W[:, nb_up] @ t.u[nb_up]
    try:
        xB = np.linalg.solve(B, rhs)
        yw = np.linalg.solve(B.T, cost[t.basis])
    except np.linalg.LinAlgError:
        xB = np.linalg.lstsq(B, rhs, rcond=None)[0]
        yw = np.linalg.lstsq(B.T, cost[t.basis], rcond=None)[0]
    xw = np.zeros(t.N)
    xw[nb_up] = t.u[nb_up]
    xw[t.basis] = xB
    x = xw[: t.n] + t.shift
    y = t.row_scale * yw
    s = lp.c - lp.A.T @ y
    sol = LpSolution(
        status="optimal",
        x=x,
        objective=float(lp.c @ x),
        y=y,
        s=s,
        basis=tuple(int(v) for v in t.basis),
        iterations=t.iterations,
    )
    SOLVE_STATS["optimal"] += 1
    if verify:
        try:
            sol.verify(lp)
        except SolverFailureError:
            SOLVE_STATS["failures"] += 1
            raise
    return sol
