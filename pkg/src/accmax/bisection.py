"""Bisection over risk-minimization problems to maximize an acceptability index.

For an increasing family of risk measures ``rho^x`` the maximal acceptability
is ``alpha* = sup{x : p(x) <= 0}`` with ``p(x) = min_D rho^x(D)``. Only the
sign of ``p`` is needed, so each probe is one LP.

Four variants are provided:

``original``
    Step 1 doubles or halves ``x`` from ``x0`` until a positive lower bound
    and a finite upper bound are known (at most ``M`` probes); Step 2 bisects
    on ``x``.
``modified``
    Bisection on the level ``q`` (``1/(1+x)`` or ``1/(2+x)``), whose range is
    bounded, after checking the signs at ``x = inf`` and ``x = 0``. The stopping
    rule is measured on ``x``.
``mixed``
    ``modified`` until a finite upper bound exists, then bisection on ``x``.
``zero_level``
    ``original``, but each non-positive probe raises the lower bound to the
    level at which the found minimizer has zero risk.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .acceptability import level_of_zero_risk
from .risk import RiskFamilySpec, build_level_lp, build_minrisk_lp, solve_minrisk
from .scenario import ScenarioModel, pnl_of_weights

VARIANTS = ("original", "modified", "mixed", "zero_level")
TRACE_COLUMNS = ("phase", "iter", "x_L", "x_U", "x", "q", "sign", "zero_level_y")
LEVEL_ITER_CAP = 200  # safety stop for the level-space variants


class BisectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class BisectionConfig:
    x0: float = 2.0
    max_iterations: int = 15
    tolerance: float = 1e-4
    variant: str = "original"
    sign_tolerance: float = 1e-9

    def __post_init__(self):
        if not self.x0 > 0 or math.isinf(self.x0):
            raise ValueError("x0 must be a positive finite number")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be an integer >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class TraceRow:
    phase: int
    iteration: int
    x_L: float
    x_U: float
    x: float
    sign: str
    value: float
    q: float | None = None
    q_L: float | None = None
    q_U: float | None = None
    zero_level_y: float | None = None


@dataclass
class BisectionTrace:
    step1_rows: list[TraceRow] = field(default_factory=list)
    step2_rows: list[TraceRow] = field(default_factory=list)
    final_interval: tuple[float, float] = (0.0, math.inf)
    epsilon_solution: np.ndarray | None = None
    status: str = "bracketed"
    variant: str = "original"

    @property
    def rows(self) -> list[TraceRow]:
        return self.step1_rows + self.step2_rows

    @property
    def midpoint(self) -> float:
        lo, hi = self.final_interval
        if math.isinf(hi):
            return math.inf
        return 0.5 * (lo + hi)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.rows:
            w.writerow([r.phase, r.iteration, _fmt(r.x_L), _fmt(r.x_U), _fmt(r.x), _fmt(r.q), r.sign,
                        _fmt(r.zero_level_y)])
        lo, hi = self.final_interval
        w.writerow(["final", "", _fmt(lo), _fmt(hi), "", "", "", ""])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


# a probe returns (p value, payload); the payload of non-positive probes is kept
Probe = Callable[[float], tuple[float, object]]


def run_bisection(
    cfg: BisectionConfig,
    probe_x: Probe,
    probe_q: Probe | None = None,
    x_of_q: Callable[[float], float] | None = None,
    q_range: tuple[float, float] | None = None,
    zero_level: Callable[[object], float] | None = None,
) -> BisectionTrace:
    """Run one bisection variant against arbitrary sign oracles.

    ``probe_q``, ``x_of_q`` and ``q_range`` (levels for ``x = inf`` and
    ``x = 0``) are needed by the level-space variants, ``zero_level`` by the
    zero-level variant.
    """
    if cfg.variant in ("modified", "mixed"):
        if probe_q is None or x_of_q is None or q_range is None:
            raise ValueError(f"variant {cfg.variant} needs a level-space probe")
        return _level_bisection(cfg, probe_x, probe_q, x_of_q, q_range)
    if cfg.variant == "zero_level" and zero_level is None:
        raise ValueError("variant zero_level needs a zero-level map")
    return _x_bisection(cfg, probe_x, zero_level if cfg.variant == "zero_level" else None)


def _sign(v: float, cfg: BisectionConfig) -> str:
    if math.isnan(v):
        raise BisectionError("risk minimization returned NaN")
    if v == -math.inf:
        raise BisectionError("risk minimization is unbounded below; the feasible set is not compact")
    return "+" if v > cfg.sign_tolerance else "-"


def _status(x_L: float, x_U: float) -> str:
    if x_L == 0.0:
        return "below_lower_range"
    if math.isinf(x_U):
        return "above_upper_range"
    return "bracketed"


def _x_bisection(cfg: BisectionConfig, probe: Probe, zero_level) -> BisectionTrace:
    tr = BisectionTrace(variant=cfg.variant)
    x_L, x_U, x, n = 0.0, math.inf, cfg.x0, 0
    best = None

    def visit(phase, it, x):
        nonlocal x_L, x_U, best
        v, payload = probe(x)
        s = _sign(v, cfg)
        y = zero_level(payload) if zero_level is not None and payload is not None else None
        row = TraceRow(phase, it, x_L, x_U, x, s, v, zero_level_y=y)
        if s == "+":
            x_U = x
        else:
            x_L = x if y is None else min(max(x, y), x_U)
            best = payload
        return row

    # Step 1: find a positive lower and a finite upper bound
    while (x_L == 0.0 or math.isinf(x_U)) and n < cfg.max_iterations:
        tr.step1_rows.append(visit(1, n + 1, x))
        n += 1
        if math.isinf(x_L):
            break
        x = x_U / 2.0 if x_L == 0.0 else 2.0 * x_L
    # Step 2: bisection; the counter n keeps its Step-1 value
    it = 0
    if not (x_L == 0.0 or math.isinf(x_U)):
        while x_U - x_L >= cfg.tolerance and n < cfg.max_iterations:
            it += 1
            tr.step2_rows.append(visit(2, it, 0.5 * (x_L + x_U)))
    tr.final_interval = (x_L, x_U)
    tr.status = _status(x_L, x_U)
    tr.epsilon_solution = best
    return tr


def _level_bisection(cfg, probe_x, probe_q, x_of_q, q_range) -> BisectionTrace:
    tr = BisectionTrace(variant=cfg.variant)
    q_inf, q_zero = q_range  # levels of x = inf and x = 0
    best = None

    def row_for(phase, it, q, q_L, q_U, v):
        return TraceRow(phase, it, x_of_q(q_U), x_of_q(q_L), x_of_q(q), _sign(v, cfg), v, q=q, q_L=q_L, q_U=q_U)

    # endpoint signs
    v_inf, pay_inf = probe_q(q_inf)
    tr.step1_rows.append(row_for(1, 1, q_inf, q_inf, q_zero, v_inf))
    if _sign(v_inf, cfg) == "-":
        tr.final_interval = (math.inf, math.inf)
        tr.status = "above_upper_range"
        tr.epsilon_solution = pay_inf
        return tr
    v_zero, pay_zero = probe_q(q_zero)
    tr.step1_rows.append(row_for(1, 2, q_zero, q_inf, q_zero, v_zero))
    if _sign(v_zero, cfg) == "+":
        tr.final_interval = (0.0, 0.0)
        tr.status = "below_lower_range"
        return tr
    best = pay_zero

    q_L, q_U = q_inf, q_zero  # q_L <-> x_U, q_U <-> x_L
    it = 0
    while x_of_q(q_L) - x_of_q(q_U) >= cfg.tolerance and it < LEVEL_ITER_CAP:
        if cfg.variant == "mixed" and q_L > q_inf:
            break
        it += 1
        q = 0.5 * (q_L + q_U)
        v, pay = probe_q(q)
        row = row_for(2, it, q, q_L, q_U, v)
        tr.step2_rows.append(row)
        if row.sign == "+":
            q_L = q
        else:
            q_U = q
            best = pay
    x_L, x_U = x_of_q(q_U), x_of_q(q_L)
    if cfg.variant == "mixed":
        while x_U - x_L >= cfg.tolerance and it < LEVEL_ITER_CAP:
            it += 1
            x = 0.5 * (x_L + x_U)
            v, pay = probe_x(x)
            s = _sign(v, cfg)
            tr.step2_rows.append(TraceRow(2, it, x_L, x_U, x, s, v))
            if s == "+":
                x_U = x
            else:
                x_L = x
                best = pay
    tr.final_interval = (x_L, x_U)
    tr.status = "bracketed"
    tr.epsilon_solution = best
    return tr


# ---------------------------------------------------------------------------
# static portfolio problems


def maximize(spec: RiskFamilySpec, model: ScenarioModel, shortselling: bool = False,
             cfg: BisectionConfig | None = None) -> BisectionTrace:
    """Maximize the acceptability index attached to ``spec`` over fully invested portfolios."""
    cfg = cfg or BisectionConfig()
    d = model.n_assets

    def probe_x(x):
        r = solve_minrisk(build_minrisk_lp(spec, model, x, shortselling), d)
        return r.value, r.weights

    def probe_q(q):
        r = solve_minrisk(build_level_lp(spec, model, q, shortselling), d)
        return r.value, r.weights

    def zero_level(h):
        return level_of_zero_risk(spec, model, pnl_of_weights(model, h, shortselling=True))

    return run_bisection(cfg, probe_x, probe_q, spec.x_of_level, spec.level_range, zero_level)


def predict_step2_bound(cfg: BisectionConfig) -> int:
    """Upper bound on Step-2 iterations of the original variant."""
    if cfg.variant != "original":
        raise ValueError("the bound applies to the original variant")
    val = math.log2(cfg.x0 / cfg.tolerance) + cfg.max_iterations - 2
    return max(0, math.ceil(val - 1e-12))


def guard_interval(cfg: BisectionConfig) -> tuple[float, float]:
    """Range of maximal acceptability the original variant can bracket."""
    if cfg.variant != "original":
        raise ValueError("the guard interval applies to the original variant")
    m = int(cfg.max_iterations)
    return math.ldexp(cfg.x0, 1 - m), math.ldexp(cfg.x0, m - 1)
