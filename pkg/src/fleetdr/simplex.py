"""Dense two-phase primal simplex for small box-constrained LPs.

Solves

    min  c . x
    s.t. A_eq x  = b_eq
         A_ub x <= b_ub
         lo <= x <= up   (entries may be -inf/+inf)

with upper-bounding (nonbasic variables rest at either bound) and Bland's
anti-cycling rule. Problem sizes here are tiny -- tens of variables, a few
dozen constraints -- so every iteration just refactorises the basis with a
dense solve; no effort is spent on revised-simplex updates.

Infeasibility and unboundedness are reported through ``LpResult.status``
rather than exceptions, so callers can attach their own context.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2
_FREE = 3  # nonbasic with both bounds infinite, parked at zero

DEFAULT_TOL = 1e-9


@dataclass
class LpResult:
    """Outcome of a solve: status, solution, objective, iteration count."""

    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _bound_start(lo: float, up: float) -> tuple[float, int]:
    """Initial resting value and status for a nonbasic variable."""
    if np.isfinite(lo):
        return lo, _AT_LOWER
    if np.isfinite(up):
        return up, _AT_UPPER
    return 0.0, _FREE


class _Tableau:
    """Mutable solver state over the equality-form problem min c.x, Ax=b."""

    def __init__(self, c, A, b, lo, up, tol):
        self.c = c
        self.A = A
        self.b = b
        self.lo = lo
        self.up = up
        self.tol = tol
        self.m, self.n = A.shape
        self.status = np.full(self.n, _AT_LOWER, dtype=int)
        self.x = np.zeros(self.n)
        self.basis = np.zeros(self.m, dtype=int)
        self.iterations = 0

    def set_basic_values(self) -> None:
        nonbasic = self.status != _BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        B = self.A[:, self.basis]
        self.x[self.basis] = np.linalg.solve(B, rhs)

    def reduced_costs(self) -> np.ndarray:
        B = self.A[:, self.basis]
        y = np.linalg.solve(B.T, self.c[self.basis])
        return self.c - y @ self.A

    def run(self, max_iter: int) -> str:
        """Iterate to optimality; returns "optimal", "unbounded" or
        "iteration_limit"."""
        while self.iterations < max_iter:
            d = self.reduced_costs()
            entering = -1
            increase = True
            for j in range(self.n):
                if self.status[j] == _BASIC:
                    continue
                if self.up[j] - self.lo[j] <= self.tol:
                    continue  # fixed variable, nothing to gain
                if self.status[j] == _AT_LOWER and d[j] < -self.tol:
                    entering, increase = j, True
                    break
                if self.status[j] == _AT_UPPER and d[j] > self.tol:
                    entering, increase = j, False
                    break
                if self.status[j] == _FREE and abs(d[j]) > self.tol:
                    entering, increase = j, d[j] < 0
                    break
            if entering < 0:
                return "optimal"
            if not self._pivot(entering, increase):
                return "unbounded"
            self.iterations += 1
        return "iteration_limit"

    def _pivot(self, j: int, increase: bool) -> bool:
        """Move variable j off its resting value; False on unboundedness."""
        B = self.A[:, self.basis]
        w = np.linalg.solve(B, self.A[:, j])
        # per unit step t of x_j in its chosen direction, basic values move
        # by -w (increase) or +w (decrease)
        delta = -w if increase else w

        # the entering variable itself stops at its opposite bound
        span = (self.up[j] - self.x[j]) if increase else (self.x[j] - self.lo[j])
        t_best = span
        leave_pos = -1  # position in basis; -1 means bound flip
        leave_to = _AT_LOWER
        for pos in range(self.m):
            i = self.basis[pos]
            if delta[pos] < -self.tol:
                room = self.x[i] - self.lo[i]
                t = max(room, 0.0) / -delta[pos]
                to = _AT_LOWER
            elif delta[pos] > self.tol:
                room = self.up[i] - self.x[i]
                t = max(room, 0.0) / delta[pos]
                to = _AT_UPPER
            else:
                continue
            if t < t_best - self.tol or (
                t < t_best + self.tol
                and (leave_pos < 0 or i < self.basis[leave_pos])
            ):
                # Bland: on ties prefer the smallest leaving variable index
                t_best = min(t, t_best)
                leave_pos = pos
                leave_to = to
        if not np.isfinite(t_best):
            return False

        t = max(t_best, 0.0)
        self.x[self.basis] += delta * t
        self.x[j] = self.x[j] + t if increase else self.x[j] - t
        if leave_pos < 0:
            # bound flip: j traverses its whole span, basis unchanged
            self.status[j] = _AT_UPPER if increase else _AT_LOWER
            self.x[j] = self.up[j] if increase else self.lo[j]
        else:
            out = self.basis[leave_pos]
            self.status[out] = leave_to
            self.x[out] = self.lo[out] if leave_to == _AT_LOWER else self.up[out]
            self.basis[leave_pos] = j
            self.status[j] = _BASIC
        return True


def _solve_unconstrained(c, lo, up) -> LpResult:
    """Degenerate case with no constraint rows: bound-greedy per variable."""
    n = len(c)
    x = np.zeros(n)
    for j in range(n):
        if c[j] > 0:
            if not np.isfinite(lo[j]):
                return LpResult(status="unbounded")
            x[j] = lo[j]
        elif c[j] < 0:
            if not np.isfinite(up[j]):
                return LpResult(status="unbounded")
            x[j] = up[j]
        else:
            x[j] = lo[j] if np.isfinite(lo[j]) else min(up[j], 0.0)
    return LpResult(status="optimal", x=x, objective=float(c @ x))


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
             lo=None, up=None, *, tol: float = DEFAULT_TOL,
             max_iter: int = 5000) -> LpResult:
    """Solve the box-constrained LP; see module docstring for the form.

    ``lo`` defaults to zeros and ``up`` to +inf, matching the usual LP
    convention. Inequalities are converted to equalities with slack
    variables internally.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    lo = np.full(n, 0.0) if lo is None else np.asarray(lo, dtype=float).copy()
    up = np.full(n, np.inf) if up is None else np.asarray(up, dtype=float).copy()
    if lo.shape != (n,) or up.shape != (n,):
        raise ValueError("bound shapes do not match the cost vector")
    if np.any(lo > up + tol):
        return LpResult(status="infeasible")

    rows = []
    rhs = []
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        rows.append(A_eq)
        rhs.append(np.atleast_1d(np.asarray(b_eq, dtype=float)))
    n_slack = 0
    if A_ub is not None:
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        n_slack = A_ub.shape[0]
        rows.append(A_ub)
        rhs.append(np.atleast_1d(np.asarray(b_ub, dtype=float)))
    if not rows:
        return _solve_unconstrained(c, lo, up)

    A = np.vstack(rows)
    b = np.concatenate(rhs)
    m = A.shape[0]
    if n_slack:
        S = np.zeros((m, n_slack))
        S[m - n_slack:, :] = np.eye(n_slack)
        A = np.hstack([A, S])
        c = np.concatenate([c, np.zeros(n_slack)])
        lo = np.concatenate([lo, np.zeros(n_slack)])
        up = np.concatenate([up, np.full(n_slack, np.inf)])

    n_total = A.shape[1]

    # phase 1: artificial basis covering the residual at the bound start
    x0 = np.zeros(n_total)
    status0 = np.zeros(n_total, dtype=int)
    for j in range(n_total):
        x0[j], status0[j] = _bound_start(lo[j], up[j])
    resid = b - A @ x0
    signs = np.where(resid >= 0, 1.0, -1.0)
    A1 = np.hstack([A, np.diag(signs)])
    c1 = np.concatenate([np.zeros(n_total), np.ones(m)])
    lo1 = np.concatenate([lo, np.zeros(m)])
    up1 = np.concatenate([up, np.full(m, np.inf)])

    tab = _Tableau(c1, A1, b, lo1, up1, tol)
    tab.x[:n_total] = x0
    tab.status[:n_total] = status0
    tab.basis = np.arange(n_total, n_total + m)
    tab.status[n_total:] = _BASIC
    tab.x[n_total:] = np.abs(resid)

    outcome = tab.run(max_iter)
    iters1 = tab.iterations
    if outcome != "optimal":
        return LpResult(status=outcome, iterations=iters1)
    phase1_obj = float(c1 @ tab.x)
    if phase1_obj > np.sqrt(tol):
        return LpResult(status="infeasible", iterations=iters1)

    # phase 2: real costs; artificials pinned to zero so they cannot return
    tab.c = np.concatenate([c, np.zeros(m)])
    tab.up[n_total:] = 0.0
    tab.lo[n_total:] = 0.0
    outcome = tab.run(max_iter)
    if outcome != "optimal":
        return LpResult(status=outcome, iterations=tab.iterations)

    x = tab.x[:n]
    return LpResult(status="optimal", x=x.copy(),
                    objective=float(np.asarray(c[:n]) @ x),
                    iterations=tab.iterations)
