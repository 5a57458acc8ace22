"""Dense linear programming with box-bounded variables.

Problems here have few variables (one per satellite in view) but may carry
thousands of inequality rows, most of them redundant. :func:`solve` therefore
runs a bounded-variable primal simplex on a working set of rows and adds the
most violated remaining rows until none is violated (constraint generation).
The inner simplex is a two-phase tableau method using Bland's rule, so the
outcome is a deterministic function of the input.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure

FEAS_TOL = 1e-9
INFEAS_TOL = 1e-7
PIVOT_TOL = 1e-11
COST_TOL = 1e-12


@dataclass
class LinearProgram:
    """minimize ``c @ x`` subject to ``A @ x <= b`` and ``lower <= x <= upper``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise ValueError("constraint matrix and right-hand side disagree")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds must have one entry per variable")
        for arr in (self.c, self.A, self.b, self.lower, self.upper):
            if not np.all(np.isfinite(arr)):
                raise ValueError("linear program data must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size


@dataclass
class LpOutcome:
    status: str  # "optimal" or "infeasible"
    x: np.ndarray | None = None
    objective: float | None = None
    pivots: int = 0
    rounds: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Bounded-variable simplex tableau for ``A x = rhs, 0 <= x <= ub``.

    ``basis[i]`` is the column basic in row ``i``; nonbasic columns sit at
    zero or, when ``at_upper`` is set, at their upper bound.
    """

    def __init__(self, A, rhs, ub, basis):
        self.A0 = A.copy()
        self.rhs0 = rhs.copy()
        self.T = A.copy()
        self.beta = rhs.copy()
        self.ub = ub.copy()
        self.basis = list(basis)
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.pivots = 0

    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.ub, 0.0)
        x[self.basis] = self.beta
        return x

    def run(self, cost: np.ndarray, max_iter: int) -> None:
        m, ncol = self.T.shape
        basic = np.zeros(ncol, dtype=bool)
        basic[self.basis] = True
        d = cost - cost[self.basis] @ self.T if m else cost.copy()
        for _ in range(max_iter):
            eligible = (~basic) & (((~self.at_upper) & (d < -COST_TOL) & (self.ub > 0))
                                   | (self.at_upper & (d > COST_TOL)))
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return
            j = int(cand[0])  # Bland: lowest index
            delta = -1.0 if self.at_upper[j] else 1.0
            alpha = self.T[:, j] * delta
            theta = self.ub[j]
            leave, leave_to_upper = -1, False
            if m:
                ub_b = self.ub[self.basis]
                ratios = np.full(m, np.inf)
                dec = alpha > PIVOT_TOL
                ratios[dec] = np.maximum(self.beta[dec], 0.0) / alpha[dec]
                inc = (alpha < -PIVOT_TOL) & np.isfinite(ub_b)
                ratios[inc] = np.maximum(ub_b[inc] - self.beta[inc], 0.0) / -alpha[inc]
                best = ratios.min()
                if best < theta:
                    theta = best
                    ties = np.flatnonzero(ratios <= best + 1e-15)
                    # Bland: among tied rows leave the lowest-index variable
                    leave = int(min(ties, key=lambda r: self.basis[r]))
                    leave_to_upper = bool(inc[leave] and not dec[leave])
            if not np.isfinite(theta):
                raise NumericalFailure("unbounded direction in a bounded problem")
            if m:
                self.beta -= theta * alpha
            if leave < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            entering_value = (self.ub[j] if self.at_upper[j] else 0.0) + delta * theta
            out = self.basis[leave]
            self._pivot(leave, j)
            self.beta[leave] = entering_value
            self.at_upper[j] = False
            basic[out], basic[j] = False, True
            self.at_upper[out] = leave_to_upper
            self.basis[leave] = j
            d = d - d[j] * self.T[leave]
        raise NumericalFailure("simplex iteration limit reached")

    def _pivot(self, r: int, j: int) -> None:
        piv = self.T[r, j]
        self.T[r] /= piv
        col = self.T[:, j].copy()
        col[r] = 0.0
        self.T -= np.outer(col, self.T[r])
        self.pivots += 1

    def polish(self) -> None:
        """Recompute basic values from the original data to shed pivot drift."""
        if not self.basis:
            return
        x = np.where(self.at_upper, self.ub, 0.0)
        x[self.basis] = 0.0
        B = self.A0[:, self.basis]
        try:
            self.beta = np.linalg.solve(B, self.rhs0 - self.A0 @ x)
        except np.linalg.LinAlgError:
            pass


def _simplex(c: np.ndarray, A: np.ndarray, b: np.ndarray, u: np.ndarray):
    """min c.y s.t. A y <= b, 0 <= y <= u. Returns (status, y, pivots)."""
    m, n = A.shape
    neg = b < 0
    n_art = int(neg.sum())
    ncol = n + m + n_art
    full = np.zeros((m, ncol))
    full[:, :n] = A
    full[:, n:n + m] = np.eye(m)
    rhs = b.copy()
    full[neg] *= -1.0
    rhs[neg] *= -1.0
    basis = list(range(n, n + m))
    for k, i in enumerate(np.flatnonzero(neg)):
        full[i, n + m + k] = 1.0
        basis[i] = n + m + k
    ub = np.concatenate([u, np.full(m + n_art, np.inf)])
    tab = _Tableau(full, rhs, ub, basis)
    max_iter = 50 * (ncol + m + 10)
    if n_art:
        cost1 = np.zeros(ncol)
        cost1[n + m:] = 1.0
        tab.run(cost1, max_iter)
        tab.polish()
        if tab.values()[n + m:].sum() > INFEAS_TOL:
            return "infeasible", None, tab.pivots
        tab.ub[n + m:] = 0.0
        tab.beta = np.maximum(tab.beta, 0.0)
    cost2 = np.zeros(ncol)
    cost2[:n] = c
    tab.run(cost2, max_iter)
    tab.polish()
    y = np.clip(tab.values()[:n], 0.0, u)
    return "optimal", y, tab.pivots


def solve(lp: LinearProgram, batch: int | None = None) -> LpOutcome:
    """Solve ``lp`` exactly (to floating tolerance)."""
    A, b = lp.A, lp.b
    scale = np.abs(A).max(axis=1) if lp.m else np.zeros(0)
    zero = scale == 0.0
    if np.any(b[zero] < -FEAS_TOL):
        return LpOutcome("infeasible")
    keep = ~zero
    An = A[keep] / scale[keep, None]
    bn = b[keep] / scale[keep]
    u = lp.upper - lp.lower
    bs = bn - An @ lp.lower  # shifted so that y = x - lower >= 0
    batch = batch or max(10, 2 * lp.n)

    working = np.zeros(An.shape[0], dtype=bool)
    pivots = rounds = 0
    while True:
        rounds += 1
        rows = np.flatnonzero(working)
        status, y, piv = _simplex(lp.c, An[rows], bs[rows], u)
        pivots += piv
        if status == "infeasible":
            return LpOutcome("infeasible", pivots=pivots, rounds=rounds)
        viol = An @ y - bs
        viol[working] = -np.inf
        bad = np.flatnonzero(viol > FEAS_TOL)
        if bad.size == 0:
            break
        order = bad[np.lexsort((bad, -viol[bad]))][:batch]
        working[order] = True
    x = np.clip(y + lp.lower, lp.lower, lp.upper)
    return LpOutcome("optimal", x, float(lp.c @ x), pivots, rounds)


def is_feasible(lp: LinearProgram, x, tol: float = FEAS_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    scale = np.maximum(np.abs(lp.A).max(axis=1), 1.0) if lp.m else np.zeros(0)
    return bool(np.all(lp.A @ x <= lp.b + tol * scale)
                and np.all(x >= lp.lower - 1e-12) and np.all(x <= lp.upper + 1e-12))


def format_lp(lp: LinearProgram) -> str:
    """Plain-text dump of an LP.

    Layout::

        LP <n> variables <m> constraints
        minimize
          c  <c_1> ... <c_n>
        subject to
          r<i>  <a_i1> ... <a_in>  <=  <b_i>   [# label]
        bounds
          x<j>  <lower>  <upper>
        end
    """
    out = io.StringIO()
    fmt = "{:.12g}".format
    out.write(f"LP {lp.n} variables {lp.m} constraints\nminimize\n")
    out.write("  c  " + " ".join(fmt(v) for v in lp.c) + "\n")
    out.write("subject to\n")
    for i in range(lp.m):
        label = f"   # {lp.labels[i]}" if i < len(lp.labels) else ""
        out.write(f"  r{i + 1}  " + " ".join(fmt(v) for v in lp.A[i]) + f"  <=  {fmt(lp.b[i])}{label}\n")
    out.write("bounds\n")
    for j in range(lp.n):
        out.write(f"  x{j + 1}  {fmt(lp.lower[j])}  {fmt(lp.upper[j])}\n")
    out.write("end\n")
    return out.getvalue()
