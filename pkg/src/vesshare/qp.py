"""Convex quadratic programming by a primal active-set method.

min 1/2 x.Q.x + c.x  s.t.  A x {=, <=, >=} b,  lower <= x <= upper.

Q is symmetric PSD (a 1-D array is taken as a diagonal).  Each iteration
solves the KKT system of the equality-constrained subproblem on the current
working set, steps to the nearest blocking constraint, and drops working
constraints with negative multipliers.  A tiny deterministic Tikhonov term
(1e-14 relative to the largest curvature) keeps the subproblems strictly
convex; it perturbs solutions far below every tolerance used downstream.

Feasible start: taken from the caller when available (warm start), else
from the LP relaxation solved with the embedded simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SolverFailureError
from .simplex import EQ, GE, LE, LinearProgram, solve_lp

__all__ = ["QuadraticProgram", "QpSolution", "solve_qp"]

_ACT_TOL = 1e-9
_MULT_TOL = 1e-9
_STEP_TOL = 1e-9


@dataclass
class QuadraticProgram:
    """Quadratic objective over the same constraint record as LinearProgram."""

    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    row_kind: tuple = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        lp = LinearProgram(
            c=self.c, A=self.A, b=self.b, row_kind=self.row_kind,
            lower=self.lower, upper=self.upper,
        )
        self.c, self.A, self.b = lp.c, lp.A, lp.b
        self.row_kind, self.lower, self.upper = lp.row_kind, lp.lower, lp.upper
        n = self.c.shape[0]
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim == 1:
            if Q.shape != (n,):
                raise DimensionError("diagonal Q must have one entry per column")
            if np.any(Q < 0):
                raise DimensionError("diagonal Q must be nonnegative (PSD)")
            Q = np.diag(Q)
        if Q.shape != (n, n):
            raise DimensionError(f"Q has shape {Q.shape}, expected ({n}, {n})")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise DimensionError("Q must be symmetric")
        self.Q = Q

    def objective(self, x):
        return 0.5 * float(x @ self.Q @ x) + float(self.c @ x)

    def relaxation(self) -> LinearProgram:
        return LinearProgram(
            c=self.c, A=self.A, b=self.b, row_kind=self.row_kind,
            lower=self.lower, upper=self.upper,
        )


@dataclass
class QpSolution:
    """Mirrors LpSolution: y holds row multipliers with LP sign semantics
    (<= rows nonpositive, >= rows nonnegative), s is the reduced gradient
    Qx + c - A^T y, and the objective excludes the internal Tikhonov term."""

    status: str
    x: np.ndarray = None
    objective: float = None
    y: np.ndarray = None
    s: np.ndarray = None
    iterations: int = 0

    def verify(self, qp: QuadraticProgram, tol=1e-7):
        if self.status != "optimal":
            return
        x = self.x
        scale = 1.0 + float(np.max(np.abs(qp.b), initial=0.0))
        resid = qp.b - qp.A @ x
        for i, kind in enumerate(qp.row_kind):
            if kind == EQ and abs(resid[i]) > tol * scale:
                raise SolverFailureError(f"equality row {i} violated by {resid[i]!r}")
            if kind == LE and resid[i] < -tol * scale:
                raise SolverFailureError(f"<= row {i} violated by {-resid[i]!r}")
            if kind == GE and resid[i] > tol * scale:
                raise SolverFailureError(f">= row {i} violated by {resid[i]!r}")
        if np.any(x < qp.lower - tol) or np.any(x > qp.upper + tol):
            raise SolverFailureError("variable bound violated")
        grad = qp.Q @ x + qp.c
        stat = grad - qp.A.T @ self.y - self.s
        if np.max(np.abs(stat), initial=0.0) > 1e-6 * (1.0 + np.max(np.abs(grad))):
            raise SolverFailureError("stationarity residual too large")


def _independent_rows(C, tol=1e-9):
    """Greedy maximal independent subset of rows (modified Gram-Schmidt,
    with one re-orthogonalization pass for stability)."""
    m, n = C.shape
    keep = []
    B = np.empty((min(m, n), n))
    nb = 0
    for i in range(m):
        v = C[i].astype(float)
        nrm0 = float(np.linalg.norm(v))
        if nrm0 < tol:
            continue
        if nb:
            Bv = B[:nb]
            v = v - Bv.T @ (Bv @ v)
            v = v - Bv.T @ (Bv @ v)
        nrm = float(np.linalg.norm(v))
        if nrm > tol * (1.0 + nrm0) and nb < B.shape[0]:
            B[nb] = v / nrm
            nb += 1
            keep.append(i)
    return keep


def solve_qp(qp: QuadraticProgram, start=None, max_iter=None) -> QpSolution:
    """Solve a convex QP.  `start` may carry a feasible warm-start point;
    otherwise the LP relaxation provides a starting vertex."""
    n = qp.c.shape[0]
    Q = qp.Q
    mu = 1e-13 * (1.0 + float(np.max(np.abs(np.diag(Q)), initial=0.0)))
    Qs = Q + mu * np.eye(n)

    # Unified inequality list: rows then bounds, each as g.x <= h.
    # meta_kind: 0 = general row, 1 = lower bound, 2 = upper bound.
    G_rows = []
    h_rows = []
    meta_kind = []
    meta_idx = []
    meta_sgn = []
    E_rows = []
    f_rows = []
    eq_idx = []
    for i, kind in enumerate(qp.row_kind):
        if kind == EQ:
            E_rows.append(qp.A[i])
            f_rows.append(qp.b[i])
            eq_idx.append(i)
        elif kind == LE:
            G_rows.append(qp.A[i])
            h_rows.append(qp.b[i])
            meta_kind.append(0)
            meta_idx.append(i)
            meta_sgn.append(-1.0)
        else:
            G_rows.append(-qp.A[i])
            h_rows.append(-qp.b[i])
            meta_kind.append(0)
            meta_idx.append(i)
            meta_sgn.append(1.0)
    for j in range(n):
        G_rows.append(-_unit(n, j))
        h_rows.append(-qp.lower[j])
        meta_kind.append(1)
        meta_idx.append(j)
        meta_sgn.append(1.0)
        if np.isfinite(qp.upper[j]):
            G_rows.append(_unit(n, j))
            h_rows.append(qp.upper[j])
            meta_kind.append(2)
            meta_idx.append(j)
            meta_sgn.append(-1.0)
    G = np.array(G_rows) if G_rows else np.zeros((0, n))
    h = np.array(h_rows)
    E = np.array(E_rows) if E_rows else np.zeros((0, n))
    f = np.array(f_rows) if f_rows else np.zeros(0)
    meta_kind = np.array(meta_kind, dtype=int)
    meta_idx = np.array(meta_idx, dtype=int)
    meta_sgn = np.array(meta_sgn)
    m_e = E.shape[0]

    if start is None:
        rel = solve_lp(qp.relaxation())
        if rel.status == "infeasible":
            return QpSolution(status="infeasible")
        if rel.status == "unbounded":
            # feasibility-only start when the linear relaxation is unbounded
            rel = solve_lp(LinearProgram(
                c=np.zeros(n), A=qp.A, b=qp.b, row_kind=qp.row_kind,
                lower=qp.lower, upper=qp.upper,
            ))
            if rel.status != "optimal":
                return QpSolution(status="infeasible")
        x = rel.x.copy()
    else:
        x = np.asarray(start, dtype=float).copy()

    slack = h - G @ x
    active0 = np.flatnonzero(slack <= _ACT_TOL * (1.0 + np.abs(h)))
    active_mask = np.zeros(G.shape[0], dtype=bool)
    if active0.size:
        keep = _independent_rows(np.vstack([E, G[active0]]) if m_e else G[active0])
        keep = [k - m_e for k in keep if k >= m_e]
        active_mask[active0[keep]] = True

    if max_iter is None:
        max_iter = 50 * (n + G.shape[0]) + 200
    iters = 0
    while True:
        iters += 1
        if iters > max_iter:
            raise SolverFailureError(f"active-set QP stalled after {iters} iterations")
        W = np.flatnonzero(active_mask)
        grad = Qs @ x + qp.c
        # split the working set: active variable bounds just pin their
        # variable (p_j = 0), so the KKT system only needs the free
        # variables and the general active rows
        is_bound = meta_kind[W] != 0
        wb = W[is_bound]
        if wb.size:
            # a variable pinned twice (lower == upper) keeps one pin only
            _, first = np.unique(meta_idx[wb], return_index=True)
            dup = np.ones(wb.size, dtype=bool)
            dup[first] = False
            bound_rows = wb[~dup]
            gen_rows = np.concatenate([W[~is_bound], wb[dup]])
        else:
            bound_rows = wb
            gen_rows = W[~is_bound]
        fixed = np.zeros(n, dtype=bool)
        fixed[meta_idx[bound_rows]] = True
        free = np.flatnonzero(~fixed)
        nf = free.size
        Cg = np.vstack([E, G[gen_rows]]) if gen_rows.size else E
        Cf = Cg[:, free]
        kg = Cf.shape[0]
        K = np.zeros((nf + kg, nf + kg))
        K[:nf, :nf] = Qs[np.ix_(free, free)]
        if kg:
            K[:nf, nf:] = Cf.T
            K[nf:, :nf] = Cf
        rhs = np.concatenate([-grad[free], np.zeros(kg)])
        if rhs.size == 0:
            z = rhs
        else:
            try:
                z = np.linalg.solve(K, rhs)
                resid = float(np.max(np.abs(K @ z - rhs)))
                if not np.isfinite(resid) or resid > 1e-7 * (1.0 + float(np.max(np.abs(rhs)))):
                    z = np.linalg.lstsq(K, rhs, rcond=None)[0]
            except np.linalg.LinAlgError:
                z = np.linalg.lstsq(K, rhs, rcond=None)[0]
        p = np.zeros(n)
        p[free] = z[:nf]
        mu_all = z[nf:]
        # recover bound-row multipliers from full stationarity
        r_vec = Qs @ p + grad + Cg.T @ mu_all
        lam_full = np.zeros(G.shape[0])
        lam_full[gen_rows] = mu_all[m_e:]
        lam_full[bound_rows] = meta_sgn[bound_rows] * r_vec[meta_idx[bound_rows]]
        mults = np.concatenate([mu_all[:m_e], lam_full[W]])
        # step toward the subproblem optimum, stopping at the first
        # blocking inactive constraint.  The threshold on g.p scales with
        # the step size: a constraint dependent on the working set has
        # g.p = 0 exactly, and its numerical residue must not re-enter
        # (that is the classic add/drop cycle at a degenerate point).
        gp = G @ p
        sl = h - G @ x
        blocking = -1
        alpha = 1.0
        pmax = float(np.max(np.abs(p), initial=0.0))
        cand = np.flatnonzero((gp > 1e-9 * (1.0 + pmax)) & ~active_mask)
        if cand.size:
            ratios = np.maximum(sl[cand] / gp[cand], 0.0)
            jmin = int(np.argmin(ratios))
            if ratios[jmin] < alpha:
                alpha = float(ratios[jmin])
                blocking = int(cand[jmin])
        x = x + alpha * p
        if blocking >= 0:
            active_mask[blocking] = True
            continue
        # unblocked full step: x is now the subproblem optimum for W and
        # mults are its multipliers; decide from them
        lam = mults[m_e:]
        if lam.size == 0 or float(np.min(lam)) >= -_MULT_TOL * (1.0 + float(np.max(np.abs(mults), initial=0.0))):
            y = np.zeros(len(qp.row_kind))
            s = np.zeros(n)
            for i, idx in enumerate(eq_idx):
                y[idx] = -mults[i]
            is_b = meta_kind[W] != 0
            for w, lam_j in zip(W[~is_b], lam[~is_b]):
                y[meta_idx[w]] = meta_sgn[w] * lam_j
            np.add.at(s, meta_idx[W[is_b]], meta_sgn[W[is_b]] * lam[is_b])
            sol = QpSolution(
                status="optimal", x=x, objective=qp.objective(x),
                y=y, s=s, iterations=iters,
            )
            sol.verify(qp)
            return sol
        drop = int(np.argmin(lam))
        active_mask[W[drop]] = False


def _unit(n, j):
    e = np.zeros(n)
    e[j] = 1.0
    return e
