"""Dense two-phase primal simplex and a dichotomic bi-objective LP solver.

Every risk minimization and frontier computation in the package goes through
:func:`solve_lp`. Problems are small to medium (at most a few thousand rows),
so a dense tableau with Dantzig pricing and Bland's rule as the anti-cycling
fallback is fast enough and fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
PERTURB = 1e-9

LE, EQ, GE = "<=", "=", ">="


class LpError(RuntimeError):
    """Raised when an LP is malformed or the solver breaks down."""


@dataclass
class LinearProgram:
    """``min c @ x`` subject to ``A x (sense) b`` and ``lower <= x <= upper``.

    ``senses`` holds one of ``"<="``, ``"="``, ``">="`` per row. Infinite
    bounds are given as ``-inf`` / ``inf``. ``offset`` is a constant added to
    the reported objective value.
    """

    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    names: list[str] | None = None
    offset: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        self.senses = list(self.senses)
        if self.A.shape[0] != self.b.size or len(self.senses) != self.b.size:
            raise LpError("row count mismatch between A, b and senses")
        if self.lower.size != n or self.upper.size != n:
            raise LpError("bounds must have the same width as the objective")
        if not np.all(np.isfinite(self.b)):
            raise LpError("right-hand sides must be finite")
        if not np.all(np.isfinite(self.A)) or not np.all(np.isfinite(self.c)):
            raise LpError("coefficients must be finite")
        bad = set(self.senses) - {LE, EQ, GE}
        if bad:
            raise LpError(f"unknown constraint relation(s): {sorted(bad)}")
        if np.any(self.lower > self.upper):
            raise LpError("a lower bound exceeds its upper bound")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    def with_objective(self, c) -> "LinearProgram":
        return LinearProgram(c, self.A, self.senses, self.b, self.lower, self.upper, self.names)

    def with_rows(self, rows: Sequence[tuple[np.ndarray, str, float]]) -> "LinearProgram":
        if not rows:
            return self
        extra = np.array([np.asarray(r[0], dtype=float) for r in rows])
        return LinearProgram(
            self.c,
            np.vstack([self.A, extra]),
            self.senses + [r[1] for r in rows],
            np.concatenate([self.b, [float(r[2]) for r in rows]]),
            self.lower,
            self.upper,
            self.names,
            self.offset,
        )


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | error
    value: float = math.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    ray: np.ndarray | None = None
    iterations: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class LpBuilder:
    """Incremental construction of a :class:`LinearProgram` with named variable blocks."""

    def __init__(self):
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._names: list[str] = []
        self._rows: list[tuple[dict[int, float], str, float]] = []
        self.blocks: dict[str, np.ndarray] = {}

    def add_vars(self, name: str, count: int, lower=0.0, upper=math.inf) -> np.ndarray:
        start = len(self._lower)
        idx = np.arange(start, start + count)
        lo = np.broadcast_to(np.asarray(lower, dtype=float), (count,))
        hi = np.broadcast_to(np.asarray(upper, dtype=float), (count,))
        self._lower.extend(lo.tolist())
        self._upper.extend(hi.tolist())
        self._names.extend(f"{name}[{k}]" for k in range(count))
        self.blocks[name] = idx
        return idx

    def add_var(self, name: str, lower=0.0, upper=math.inf) -> int:
        return int(self.add_vars(name, 1, lower, upper)[0])

    def add_row(self, coefs: dict[int, float], sense: str, rhs: float) -> int:
        merged: dict[int, float] = {}
        for k, v in coefs.items():
            merged[int(k)] = merged.get(int(k), 0.0) + float(v)
        self._rows.append((merged, sense, float(rhs)))
        return len(self._rows) - 1

    @property
    def n_vars(self) -> int:
        return len(self._lower)

    def objective(self, coefs: dict[int, float]) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for k, v in coefs.items():
            c[int(k)] += v
        return c

    def build(self, c=None, offset: float = 0.0) -> LinearProgram:
        n = self.n_vars
        A = np.zeros((len(self._rows), n))
        for i, (coefs, _, _) in enumerate(self._rows):
            for k, v in coefs.items():
                A[i, k] += v
        if c is None:
            c = np.zeros(n)
        elif isinstance(c, dict):
            c = self.objective(c)
        return LinearProgram(
            c,
            A,
            [r[1] for r in self._rows],
            np.array([r[2] for r in self._rows]),
            np.array(self._lower),
            np.array(self._upper),
            list(self._names),
            offset,
        )


# ---------------------------------------------------------------------------
# standard form


@dataclass
class _StandardForm:
    A: np.ndarray  # rows already flipped so that b >= 0
    b: np.ndarray
    c: np.ndarray
    c0: float
    # reconstruction x = offset + M @ xs (M sparse in practice; kept as index maps)
    pos_col: np.ndarray  # column of x' for each original var (or -1)
    neg_col: np.ndarray  # column of x^- for free vars (or -1)
    sign: np.ndarray  # +1 if x = lo + x', -1 if x = hi - x'
    offset: np.ndarray
    row_flip: np.ndarray  # +1/-1 per original row
    n_orig_rows: int
    slack_col: np.ndarray  # slack column per row (or -1)
    n_struct: int


def _to_standard(lp: LinearProgram) -> _StandardForm:
    n = lp.n_vars
    lo, hi = lp.lower, lp.upper
    cols = []
    pos_col = np.full(n, -1)
    neg_col = np.full(n, -1)
    sign = np.ones(n)
    offset = np.zeros(n)
    bound_rows: list[tuple[int, float]] = []
    k = 0
    for j in range(n):
        if np.isfinite(lo[j]):
            offset[j] = lo[j]
            pos_col[j] = k
            k += 1
            if np.isfinite(hi[j]):
                bound_rows.append((pos_col[j], hi[j] - lo[j]))
        elif np.isfinite(hi[j]):
            offset[j] = hi[j]
            sign[j] = -1.0
            pos_col[j] = k
            k += 1
        else:
            pos_col[j] = k
            neg_col[j] = k + 1
            k += 2
    n_struct = k
    m0 = lp.n_rows
    m = m0 + len(bound_rows)

    A = np.zeros((m, n_struct))
    c = np.zeros(n_struct)
    A[:m0, pos_col] = lp.A * sign
    c[pos_col] = lp.c * sign
    free = neg_col >= 0
    if np.any(free):
        A[:m0, neg_col[free]] = -lp.A[:, free]
        c[neg_col[free]] = -lp.c[free]
    b = np.empty(m)
    b[:m0] = lp.b - lp.A @ offset
    c0 = float(lp.c @ offset)
    senses = list(lp.senses)
    for r, (col, ub) in enumerate(bound_rows):
        A[m0 + r, col] = 1.0
        b[m0 + r] = ub
        senses.append(LE)

    # slacks
    n_slack = sum(1 for s in senses if s != EQ)
    S = np.zeros((m, n_slack))
    slack_col = np.full(m, -1)
    s_idx = 0
    for i, s in enumerate(senses):
        if s == LE:
            S[i, s_idx] = 1.0
        elif s == GE:
            S[i, s_idx] = -1.0
        else:
            continue
        slack_col[i] = n_struct + s_idx
        s_idx += 1
    A = np.hstack([A, S])
    c = np.concatenate([c, np.zeros(n_slack)])
    row_flip = np.where(b < 0, -1.0, 1.0)
    A *= row_flip[:, None]
    b = b * row_flip
    return _StandardForm(A, b, c, c0, pos_col, neg_col, sign, offset, row_flip[:m0], m0, slack_col, n_struct)


# ---------------------------------------------------------------------------
# tableau simplex


class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, basis: np.ndarray):
        m, n = A.shape
        self.m, self.n = m, n
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = basis.copy()
        self.iterations = 0

    def set_objective(self, c: np.ndarray):
        T = self.T
        T[self.m, : self.n] = c
        T[self.m, self.n] = 0.0
        cb = c[self.basis]
        nz = np.nonzero(cb)[0]
        if nz.size:
            T[self.m] -= cb[nz] @ T[nz]

    def pivot(self, r: int, s: int):
        T = self.T
        prow = T[r] / T[r, s]
        col = T[:, s].copy()
        col[r] = 0.0
        nz = np.nonzero(np.abs(col) > 0.0)[0]
        pnz = np.nonzero(np.abs(prow) > 1e-300)[0]
        if nz.size:
            if pnz.size < 0.5 * prow.size:
                T[np.ix_(nz, pnz)] -= np.outer(col[nz], prow[pnz])
            else:
                T[nz] -= np.outer(col[nz], prow)
        T[r] = prow
        T[nz, s] = 0.0
        T[r, s] = 1.0
        self.basis[r] = s
        self.iterations += 1

    def run(self, eligible: np.ndarray, max_iter: int) -> str:
        """Minimize the objective row. Returns 'optimal', 'unbounded' or 'iterlimit'."""
        T, m, n = self.T, self.m, self.n
        degenerate_run = 0
        bland = False
        for _ in range(max_iter):
            d = T[m, :n]
            cand = np.nonzero((d < -OPT_TOL) & eligible)[0]
            if cand.size == 0:
                return "optimal"
            if bland:
                s = int(cand[0])
            else:
                s = int(cand[np.argmin(d[cand])])
            col = T[:m, s]
            pos = np.nonzero(col > PIVOT_TOL)[0]
            if pos.size == 0:
                self.unbounded_col = s
                return "unbounded"
            rhs = T[pos, n]
            ratios = np.maximum(rhs, 0.0) / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            if ties.size > 1:
                # Bland on ties: leave the lowest-indexed basic variable
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[0])
            if best <= 1e-12:
                degenerate_run += 1
                if degenerate_run > 50:
                    bland = True  # stays on: guarantees termination
            else:
                degenerate_run = 0
            self.pivot(r, s)
        return "iterlimit"

    def dual_run(self, max_iter: int, tol: float) -> str:
        """Dual simplex from a dual-feasible basis until the rhs column is nonnegative."""
        T, m, n = self.T, self.m, self.n
        for _ in range(max_iter):
            rhs = T[:m, n]
            r = int(np.argmin(rhs))
            if rhs[r] >= -tol:
                return "optimal"
            row = T[r, :n]
            cand = np.nonzero(row < -PIVOT_TOL)[0]
            if cand.size == 0:
                return "infeasible"
            ratios = np.maximum(T[m, cand], 0.0) / -row[cand]
            self.pivot(r, int(cand[np.argmin(ratios)]))
        return "iterlimit"


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Solve ``lp`` to optimality, or report infeasibility / unboundedness."""
    sf = _to_standard(lp)
    A, b = sf.A, sf.b
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    # initial basis: slack columns with +1 after flip; artificials elsewhere
    basis = np.full(m, -1)
    for i in range(m):
        sc = sf.slack_col[i]
        if sc >= 0 and A[i, sc] > 0:
            basis[i] = sc
    need_art = np.nonzero(basis < 0)[0]
    n_art = need_art.size
    if n_art:
        Aart = np.zeros((m, n_art))
        Aart[need_art, np.arange(n_art)] = 1.0
        A_full = np.hstack([A, Aart])
        basis[need_art] = n + np.arange(n_art)
    else:
        A_full = A
    # A small deterministic rhs perturbation breaks the heavy degeneracy of
    # scenario LPs (most rows have zero rhs); it is removed before reporting.
    eps = PERTURB * (1.0 + b) * np.random.default_rng(0).uniform(1.0, 2.0, m)
    tab = _Tableau(A_full, b + eps, basis)
    N = A_full.shape[1]
    iters = 0

    if n_art:
        c1 = np.zeros(N)
        c1[n:] = 1.0
        tab.set_objective(c1)
        status = tab.run(np.ones(N, dtype=bool), max_iter)
        iters = tab.iterations
        if status == "iterlimit":
            return LpSolution("error", iterations=iters, message="phase 1 iteration limit")
        infeas = -tab.T[m, N]
        if infeas > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpSolution("infeasible", iterations=iters, message=f"phase 1 residual {infeas:.3e}")
        # drive artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= n:
                row = tab.T[r, :n]
                cand = np.nonzero(np.abs(row) > 1e-9)[0]
                if cand.size:
                    tab.pivot(r, int(cand[np.argmax(np.abs(row[cand]))]))
                else:
                    keep[r] = False
        if not np.all(keep):
            rows = np.concatenate([np.nonzero(keep)[0], [m]])
            tab.T = tab.T[rows]
            tab.basis = tab.basis[keep]
            tab.m = int(keep.sum())
        tab.T = np.delete(tab.T, np.s_[n:N], axis=1)
        tab.n = n
        m_eff = tab.m
    else:
        keep = np.ones(m, dtype=bool)
        m_eff = m

    c = sf.c
    tab.set_objective(c)
    status = tab.run(np.ones(n, dtype=bool), max_iter)
    iters = tab.iterations
    if status == "iterlimit":
        return LpSolution("error", iterations=iters, message="phase 2 iteration limit")
    if status == "unbounded":
        s = tab.unbounded_col
        d = np.zeros(n)
        d[s] = 1.0
        d[tab.basis] = -tab.T[:m_eff, s]
        return LpSolution("unbounded", value=-math.inf, ray=_map_back_direction(sf, d, lp.n_vars), iterations=iters)

    # recompute the basic solution from the original data for accuracy
    B = A[np.ix_(np.nonzero(keep)[0], tab.basis)]
    bk = b[keep]
    try:
        tab.T[:m_eff, n] = np.linalg.solve(B, bk)
    except np.linalg.LinAlgError:
        pass  # keep the (perturbed) tableau values
    tab.T[m_eff, n] = -float(c[tab.basis] @ tab.T[:m_eff, n])
    status = tab.dual_run(max_iter, FEAS_TOL)
    iters = tab.iterations
    if status != "optimal":
        return LpSolution("error", iterations=iters, message=f"cleanup after perturbation: {status}")
    B = A[np.ix_(np.nonzero(keep)[0], tab.basis)]
    try:
        xb = np.linalg.solve(B, bk)
        y_keep = np.linalg.solve(B.T, c[tab.basis])
    except np.linalg.LinAlgError:
        xb = tab.T[:m_eff, n]
        y_keep = None
    xs = np.zeros(n)
    xs[tab.basis] = xb
    xs[np.abs(xs) < 1e-13] = 0.0
    resid = np.abs(A @ xs - b).max(initial=0.0)
    if resid > 1e-7 * max(1.0, float(np.abs(b).max(initial=0.0))) or xs.min(initial=0.0) < -1e-7:
        # fall back on the tableau values if the refactorization misbehaved
        xs = np.zeros(n)
        xs[tab.basis] = tab.T[:m_eff, n]
        resid = np.abs(A @ xs - b).max(initial=0.0)
        if resid > 1e-6 * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpSolution("error", iterations=iters, message=f"primal residual {resid:.3e}")
    xs = np.maximum(xs, 0.0)
    x = _map_back(sf, xs, lp.n_vars)
    y_std = np.zeros(m)
    if y_keep is not None:
        y_std[keep] = y_keep
    duals = y_std[: sf.n_orig_rows] * sf.row_flip
    reduced = lp.c - lp.A.T @ duals
    value = float(lp.c @ x) + lp.offset
    return LpSolution("optimal", value=value, x=x, duals=duals, reduced_costs=reduced, iterations=iters)


def _map_back(sf: _StandardForm, xs: np.ndarray, n: int) -> np.ndarray:
    x = sf.offset + sf.sign * xs[sf.pos_col]
    free = sf.neg_col >= 0
    x[free] -= xs[sf.neg_col[free]]
    return x


def _map_back_direction(sf: _StandardForm, ds: np.ndarray, n: int) -> np.ndarray:
    d = sf.sign * ds[sf.pos_col]
    free = sf.neg_col >= 0
    d[free] -= ds[sf.neg_col[free]]
    return d


def primal_residual(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest violation of any row or bound at ``x``."""
    ax = lp.A @ x
    viol = [0.0]
    for i, s in enumerate(lp.senses):
        if s == LE:
            viol.append(ax[i] - lp.b[i])
        elif s == GE:
            viol.append(lp.b[i] - ax[i])
        else:
            viol.append(abs(ax[i] - lp.b[i]))
    viol.append(float(np.max(lp.lower - x, initial=0.0)))
    viol.append(float(np.max(x - lp.upper, initial=0.0)))
    return max(viol)


def dual_value(lp: LinearProgram, sol: LpSolution) -> float:
    """Lagrangian dual objective ``b @ y + sum(bound terms)`` at the reported multipliers."""
    y, d = sol.duals, sol.reduced_costs
    val = float(lp.b @ y) + lp.offset
    for j in range(lp.n_vars):
        if abs(d[j]) <= OPT_TOL:
            continue  # round-off on a basic or free variable
        bound = lp.lower[j] if d[j] > 0 else lp.upper[j]
        val += d[j] * bound if np.isfinite(bound) else -math.inf
    return val


def complementary_slackness_residual(lp: LinearProgram, sol: LpSolution) -> float:
    x, y, d = sol.x, sol.duals, sol.reduced_costs
    slack = lp.A @ x - lp.b
    res = float(np.max(np.abs(y * slack), initial=0.0))
    for j in range(lp.n_vars):
        if d[j] > 1e-9:
            gap = x[j] - lp.lower[j]
        elif d[j] < -1e-9:
            gap = lp.upper[j] - x[j]
        else:
            continue
        res = max(res, abs(d[j]) * gap if np.isfinite(gap) else math.inf)
    return res


def to_lp_text(lp: LinearProgram) -> str:
    """Render ``lp`` in CPLEX-style LP text format (debugging aid)."""
    names = lp.names or [f"x{j}" for j in range(lp.n_vars)]
    safe = [n.replace("[", "_").replace("]", "").replace(",", "_") for n in names]

    def expr(coefs):
        parts = []
        for j in np.nonzero(coefs)[0]:
            v = coefs[j]
            parts.append(f"{'-' if v < 0 else '+'} {abs(v):.17g} {safe[j]}")
        return " ".join(parts) if parts else "0 " + safe[0]

    lines = ["Minimize", f" obj: {expr(lp.c)}", "Subject To"]
    for i in range(lp.n_rows):
        op = {LE: "<=", GE: ">=", EQ: "="}[lp.senses[i]]
        lines.append(f" c{i}: {expr(lp.A[i])} {op} {lp.b[i]:.17g}")
    lines.append("Bounds")
    for j in range(lp.n_vars):
        lo, hi = lp.lower[j], lp.upper[j]
        if not np.isfinite(lo) and not np.isfinite(hi):
            lines.append(f" {safe[j]} free")
        else:
            los = f"{lo:.17g}" if np.isfinite(lo) else "-inf"
            his = f"{hi:.17g}" if np.isfinite(hi) else "+inf"
            lines.append(f" {los} <= {safe[j]} <= {his}")
    lines.append("End")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# bi-objective


@dataclass
class BiObjectiveLp:
    """Two minimized objectives ``f1 = c1 @ x + o1`` and ``f2 = c2 @ x + o2`` over a shared feasible set."""

    c1: np.ndarray
    c2: np.ndarray
    base: LinearProgram
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.c1 = np.asarray(self.c1, dtype=float)
        self.c2 = np.asarray(self.c2, dtype=float)
        if self.c1.shape != self.c2.shape or self.c1.size != self.base.n_vars:
            raise LpError("objective widths differ")


@dataclass
class FrontierPolyline:
    """Extreme points of a 2-D Pareto frontier, stored in objective space.

    ``points[k] = (f1, f2)`` with both objectives minimized, sorted by strictly
    decreasing ``f1`` / strictly increasing ``f2``. With the mean-risk
    convention ``f1 = -mean`` and ``f2 = risk``, :attr:`risk` and :attr:`mean`
    give the (risk, mean) view used in plots. ``ray`` is the recession
    direction (in objective space) of an unbounded last edge.
    """

    points: np.ndarray
    ray: np.ndarray | None = None
    solutions: list[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    @property
    def risk(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def mean(self) -> np.ndarray:
        return -self.points[:, 0]

    @property
    def vertices(self) -> np.ndarray:
        """(risk, mean) pairs."""
        return np.column_stack([self.risk, self.mean])

    @property
    def ray_direction(self) -> np.ndarray | None:
        """Recession direction in (risk, mean) coordinates."""
        if self.ray is None:
            return None
        return np.array([self.ray[1], -self.ray[0]])

    def __len__(self):
        return len(self.points)

    def scaled(self, w: float) -> "FrontierPolyline":
        return FrontierPolyline(self.points * w, None if self.ray is None else self.ray.copy())

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        """Inequalities ``A f >= b`` describing the upper image (frontier + R^2_+)."""
        P = self.points
        rows, rhs = [], []
        rows.append([0.0, 1.0])
        rhs.append(P[0, 1])
        for a, c in zip(P[:-1], P[1:]):
            nrm = np.array([c[1] - a[1], a[0] - c[0]])
            scale = np.abs(nrm).max()
            nrm = nrm / scale
            rows.append(nrm)
            rhs.append(float(nrm @ a))
        if self.ray is None:
            rows.append([1.0, 0.0])
            rhs.append(P[-1, 0])
        else:
            r = self.ray
            nrm = np.array([r[1], -r[0]])
            nrm = nrm / np.abs(nrm).max()
            rows.append(nrm)
            rhs.append(float(nrm @ P[-1]))
        return np.array(rows), np.array(rhs)

    def contains(self, f, tol: float = 1e-7) -> bool:
        """True when ``f`` (objective space) lies in the upper image."""
        A, b = self.halfspaces()
        return bool(np.all(A @ np.asarray(f, dtype=float) >= b - tol))

    def on_boundary(self, f, tol: float = 1e-7) -> bool:
        """True when ``f`` lies on the efficient boundary (within ``tol``)."""
        return self.distance(f) <= tol

    def distance(self, f) -> float:
        """Euclidean distance from ``f`` to the frontier polyline (incl. ray)."""
        f = np.asarray(f, dtype=float)
        P = self.points
        best = float(np.min(np.linalg.norm(P - f, axis=1)))
        for a, c in zip(P[:-1], P[1:]):
            best = min(best, _seg_dist(f, a, c))
        if self.ray is not None:
            r = self.ray / np.linalg.norm(self.ray)
            t = max(0.0, float((f - P[-1]) @ r))
            best = min(best, float(np.linalg.norm(P[-1] + t * r - f)))
        return best

    def domination_margin(self, f) -> float:
        """Largest ``delta`` with ``f - delta*(1, 1)`` in the upper image (positive: strictly dominated)."""
        A, b = self.halfspaces()
        f = np.asarray(f, dtype=float)
        return float(np.min((A @ f - b) / A.sum(axis=1)))

    def pareto_gap(self, f, tol: float = 1e-8) -> float:
        """Largest gain in one objective the frontier offers over ``f`` without losing in the other.

        Positive means ``f`` is Pareto dominated (not efficient); ``-inf`` when
        no frontier point is at least as good in both objectives. ``f`` up to
        ``tol`` outside the frontier's range is clamped onto its end vertex.
        """
        f = np.asarray(f, dtype=float)
        P = self.points
        gaps = [-math.inf]
        # best f1 at risk <= f[1]
        if f[1] >= P[0, 1] - tol:
            r = max(f[1], P[0, 1])
            if r >= P[-1, 1]:
                g1 = P[-1, 0]
                if self.ray is not None:
                    g1 = -math.inf if self.ray[1] <= 0 else P[-1, 0] + (r - P[-1, 1]) * self.ray[0] / self.ray[1]
            else:
                g1 = float(np.interp(r, P[:, 1], P[:, 0]))
            gaps.append(f[0] - g1)
        # best f2 at f1 <= f[0]; f1 decreases along the polyline
        has_ray = self.ray is not None and self.ray[0] < 0
        if f[0] >= P[-1, 0] - tol or has_ray:
            m = f[0] if has_ray else max(f[0], P[-1, 0])
            if m >= P[0, 0]:
                g2 = P[0, 1]
            elif m >= P[-1, 0]:
                g2 = float(np.interp(-m, -P[:, 0], P[:, 1]))
            else:
                g2 = P[-1, 1] + (m - P[-1, 0]) * self.ray[1] / self.ray[0]
            gaps.append(f[1] - g2)
        return float(max(gaps))


def _seg_dist(p, a, c) -> float:
    v = c - a
    L = float(v @ v)
    if L == 0.0:
        return float(np.linalg.norm(p - a))
    t = min(1.0, max(0.0, float((p - a) @ v) / L))
    return float(np.linalg.norm(a + t * v - p))


class UnboundedFrontierError(LpError):
    pass


def _lexmin(lp: LinearProgram, first: np.ndarray, second: np.ndarray) -> LpSolution:
    """Minimize ``first``; among minimizers minimize ``second``."""
    s1 = solve_lp(lp.with_objective(first))
    if not s1.optimal:
        return s1
    tol = 1e-12 * max(1.0, abs(s1.value))
    s2 = solve_lp(lp.with_objective(second).with_rows([(first, LE, s1.value + tol)]))
    if not s2.optimal:
        return s1
    return s2


def solve_biobjective(blp: BiObjectiveLp, tol: float = 1e-9, max_points: int = 10_000) -> FrontierPolyline:
    """Extreme points of the Pareto frontier of a bi-objective LP (dichotomic scheme).

    Solves the two lexicographic extremes and then, recursively, the weighted
    sum normal to each chord; a chord is final once the weighted objective
    improves by less than ``tol`` (scaled). An unbounded ``f1`` direction is
    reported as a ray attached to the last vertex.
    """
    lp, c1, c2 = blp.base, blp.c1, blp.c2

    o = np.asarray(blp.offset, dtype=float)

    def image(x):
        return np.array([c1 @ x, c2 @ x]) + o

    sa = _lexmin(lp, c2, c1)
    if sa.status == "infeasible":
        raise LpError("bi-objective problem is infeasible")
    if sa.status == "unbounded":
        raise UnboundedFrontierError("second objective is unbounded below")
    if not sa.optimal:
        raise LpError(f"solver failure: {sa.message}")
    ray = None
    sb = _lexmin(lp, c1, c2)
    if sb.status == "unbounded":
        ray = _recession_slope(blp)
        # vertex where the ray attaches: minimize f1 + slope*f2, then f2
        sb = _lexmin(lp, c1 - (ray[0] / ray[1]) * c2, c2)
        if not sb.optimal:
            raise UnboundedFrontierError("frontier is unbounded in a degenerate direction")
    elif not sb.optimal:
        raise LpError(f"solver failure: {sb.message}")

    A_pt, B_pt = image(sa.x), image(sb.x)
    sols = {0: sa.x, 1: sb.x}
    pts = [A_pt, B_pt]
    scale = max(1.0, float(np.abs(np.concatenate([A_pt, B_pt])).max()))

    # chords as index pairs into pts, processed with an explicit stack
    order = [0, 1]
    if np.allclose(A_pt, B_pt, atol=tol * scale):
        order = [0]
    else:
        stack = [(0, 1)]
        children: dict[tuple[int, int], int] = {}
        while stack:
            i, j = stack.pop()
            a, c = pts[i], pts[j]
            lam = np.array([c[1] - a[1], a[0] - c[0]])
            if lam[0] < 0 or lam[1] < 0 or not np.any(lam > 0):
                continue
            lam = lam / lam.sum()
            s = solve_lp(lp.with_objective(lam[0] * c1 + lam[1] * c2))
            if not s.optimal:
                raise LpError(f"weighted-sum solve failed: {s.status}")
            p = image(s.x)
            if lam @ a - lam @ p > tol * scale and len(pts) < max_points:
                pts.append(p)
                sols[len(pts) - 1] = s.x
                k = len(pts) - 1
                children[(i, j)] = k
                stack.append((k, j))
                stack.append((i, k))
        # in-order walk
        def walk(i, j, out):
            k = children.get((i, j))
            if k is None:
                out.append(j)
            else:
                walk(i, k, out)
                walk(k, j, out)

        order = [0]
        walk(0, 1, order)

    P = np.array([pts[k] for k in order])
    X = [sols[k] for k in order]
    P, X = _clean_polyline(P, X, tol * scale * 10)
    return FrontierPolyline(P, ray, X)


def _clean_polyline(P, X, tol):
    """Drop duplicate and collinear points; enforce f1 decreasing / f2 increasing."""
    keep_p, keep_x = [P[0]], [X[0]]
    for p, x in zip(P[1:], X[1:]):
        if np.linalg.norm(p - keep_p[-1]) <= tol:
            continue
        keep_p.append(p)
        keep_x.append(x)
    changed = True
    while changed and len(keep_p) > 2:
        changed = False
        for k in range(1, len(keep_p) - 1):
            a, b, c = keep_p[k - 1], keep_p[k], keep_p[k + 1]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            # distance of b from the chord a-c
            if abs(cross) <= tol * np.linalg.norm(c - a):
                del keep_p[k]
                del keep_x[k]
                changed = True
                break
    return np.array(keep_p), keep_x


def _recession_slope(blp: BiObjectiveLp) -> np.ndarray:
    """Steepest recession direction ``(f1, f2) = (-s, 1)`` of the image (or ``(-1, 0)``)."""
    lp = blp.base
    rec = LinearProgram(
        -blp.c1,
        lp.A,
        lp.senses,
        np.zeros(lp.n_rows),
        np.where(np.isfinite(lp.lower), 0.0, -np.inf),
        np.where(np.isfinite(lp.upper), 0.0, np.inf),
    ).with_rows([(blp.c2, LE, 1.0)])
    s = solve_lp(rec.with_objective(blp.c1))
    if s.status == "unbounded":
        raise UnboundedFrontierError("first objective unbounded at bounded second objective")
    if not s.optimal:
        raise LpError(f"recession LP failed: {s.status}")
    slope = -s.value
    return np.array([-slope, 1.0])
