"""Constant maximal acceptability under recursively composed TVaR families.

For the family ``rho^x`` built by composing one-step TVaR at level
``1/(1+x)``, the maximal acceptability of ``V_T - V_t`` over self-financing
strategies does not depend on the node or on the wealth, and the optimum is
attained by investing constant proportions ``h*`` solving the one-period
problem. This module computes both sides on small trees so the claim can be
checked numerically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bisection import BisectionConfig, BisectionTrace, maximize, run_bisection
from .dynrisk import OneStepRisk, recursive_risk
from .lp import GE, EQ, LpBuilder, solve_lp
from .market import DividendStream, Strategy, dividends_of, node_to_str, wealth_of
from .risk import RiskFamilySpec
from .scenario import Node, ScenarioModel, TreeModel


@dataclass(frozen=True)
class RecursiveIndexSpec:
    """``x -> `` one-step TVaR at level ``1/(1+x)``, composed through the tree."""

    def step_risk(self, x: float) -> OneStepRisk:
        return OneStepRisk("tvar", 1.0 / (1.0 + x))

    @property
    def static_family(self) -> RiskFamilySpec:
        return RiskFamilySpec("tvar_family")


def one_period_max(spec: RecursiveIndexSpec, step: ScenarioModel, shortselling: bool = False, eps: float = 1e-4,
                   cfg: BisectionConfig | None = None) -> tuple[float, np.ndarray | None, BisectionTrace]:
    """Maximal one-period acceptability: bracket midpoint, ε-optimal weights and the trace."""
    cfg = cfg or BisectionConfig(tolerance=eps)
    tr = maximize(spec.static_family, step, shortselling, cfg)
    if tr.status == "above_upper_range":
        return math.inf, tr.epsilon_solution, tr
    if tr.status == "below_lower_range":
        return 0.0, tr.epsilon_solution, tr
    return tr.midpoint, tr.epsilon_solution, tr


def build_constant_proportion_strategy(tree: TreeModel, h_star, v0: float = 1.0) -> Strategy:
    """Invest the current wealth in fixed proportions ``h_star`` at every node."""
    h_star = np.asarray(h_star, dtype=float)
    if abs(h_star.sum() - 1.0) > 1e-10:
        raise ValueError("h_star must sum to one")
    alloc = {}
    wealth = {(): float(v0)}
    for t in range(tree.horizon):
        for node in tree.nodes_at(t):
            alloc[node] = wealth[node] * h_star
            w = tree.returns_at(node).T @ alloc[node]
            for i, c in enumerate(tree.children(node)):
                wealth[c] = float(w[i])
    return Strategy(alloc, shortselling=bool(np.any(h_star < 0)))


# ---------------------------------------------------------------------------
# node risk minimization


class NodeRiskSolver:
    """Minimal composed risk of ``V_T - V_t`` per unit wealth, node by node.

    With unit wealth at ``n`` and child wealths ``w_i = R_i^T h``, the best
    continuation from child ``c_i`` contributes ``w_i r(c_i)`` (homogeneity),
    so ``r(n) = min_h TVaR_q(X)`` with ``X_i = w_i (1 - r(c_i)) - 1``; leaves have
    ``r = 0``. Values are cached per probe level ``x``.
    """

    def __init__(self, tree: TreeModel, spec: RecursiveIndexSpec | None = None):
        self.tree = tree
        self.spec = spec or RecursiveIndexSpec()
        self._cache: dict[tuple[float, Node], tuple[float, np.ndarray]] = {}
        self.lp_count = 0

    def risk(self, x: float, node: Node) -> tuple[float, np.ndarray | None]:
        node = tuple(node)
        if len(node) == self.tree.horizon:
            return 0.0, None
        key = (x, node)
        if key not in self._cache:
            cont = np.array([self.risk(x, c)[0] for c in self.tree.children(node)])
            self._cache[key] = self._node_lp(x, node, cont)
        return self._cache[key]

    def _node_lp(self, x: float, node: Node, cont: np.ndarray) -> tuple[float, np.ndarray]:
        R = self.tree.returns_at(node)
        p = self.tree.step.probabilities
        q = self.spec.step_risk(x).q
        d, k = R.shape
        b = LpBuilder()
        h = b.add_vars("h", d)
        b.add_row({int(j): 1.0 for j in h}, EQ, 1.0)
        z = b.add_var("z", lower=-math.inf)
        s = b.add_vars("s", k)
        for i in range(k):
            # s_i >= -X_i - z = w_i (r_i - 1) + 1 - z
            coefs = {int(s[i]): 1.0, z: 1.0}
            for j in range(d):
                coefs[int(h[j])] = coefs.get(int(h[j]), 0.0) + (1.0 - cont[i]) * R[j, i]
            b.add_row(coefs, GE, 1.0)
        c = b.objective({z: 1.0, **{int(s[i]): p[i] / q for i in range(k)}})
        sol = solve_lp(b.build(c))
        self.lp_count += 1
        if not sol.optimal:
            raise RuntimeError(f"node LP at {node_to_str(node) or 'root'} failed: {sol.status}")
        return sol.value, sol.x[:d].copy()


def node_alpha(solver: NodeRiskSolver, node: Node, wealth: float, cfg: BisectionConfig) -> BisectionTrace:
    """Bracket the maximal acceptability at ``node`` starting from ``wealth``."""

    def probe(x):
        r, h = solver.risk(x, node)
        return wealth * r, h

    return run_bisection(cfg, probe)


def eval_recursive_index(tree: TreeModel, stream: DividendStream, node: Node = (), spec: RecursiveIndexSpec | None = None,
                         tol: float = 1e-10, x_max: float = 1e6) -> float:
    """``sup{x : rho^x_t(D) <= 0}`` for the composed family, by scalar bisection."""
    spec = spec or RecursiveIndexSpec()
    node = tuple(node)

    def risk(x):
        return recursive_risk(tree, stream, spec.step_risk(x), node)[node]

    if risk(x_max) <= 0.0:
        return math.inf
    if risk(0.0) > 0.0:
        return 0.0
    lo, hi = 0.0, x_max
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if risk(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class ConstancyReport:
    epsilon: float
    alpha_static: float
    brackets: dict[str, dict[str, tuple[float, float]]] = field(default_factory=dict)
    discrepancies: list[str] = field(default_factory=list)
    max_spread: float = 0.0
    lp_count: int = 0

    @property
    def passed(self) -> bool:
        return not self.discrepancies

    def to_json(self) -> str:
        return json.dumps({
            "epsilon": self.epsilon,
            "alpha_static": self.alpha_static,
            "max_spread": self.max_spread,
            "passed": self.passed,
            "lp_count": self.lp_count,
            "discrepancies": self.discrepancies,
            "nodes": {k: {w: list(b) for w, b in v.items()} for k, v in self.brackets.items()},
        }, indent=2)


def verify_constant_acceptability(spec: RecursiveIndexSpec, tree: TreeModel, eps: float = 1e-3, depth_cap: int = 3,
                                  wealths=(0.5, 1.0, 3.0), cfg: BisectionConfig | None = None) -> ConstancyReport:
    """Compute ε-brackets of the maximal acceptability at every node and wealth.

    All bracket midpoints are compared with the root value at unit wealth;
    nodes differing by ``2 eps`` or more are listed as discrepancies.
    """
    if tree.horizon > depth_cap:
        raise ValueError(f"tree horizon {tree.horizon} exceeds depth cap {depth_cap}")
    cfg = cfg or BisectionConfig(tolerance=eps)
    alpha_static, _, _ = one_period_max(spec, tree.step, eps=eps)
    solver = NodeRiskSolver(tree, spec)
    rep = ConstancyReport(eps, alpha_static)
    root = node_alpha(solver, (), 1.0, cfg)
    ref = root.midpoint
    mids = []
    for t in range(tree.horizon):
        for node in tree.nodes_at(t):
            key = node_to_str(node)
            rep.brackets[key] = {}
            for w in wealths:
                tr = node_alpha(solver, node, w, cfg)
                rep.brackets[key][repr(float(w))] = tr.final_interval
                mid = tr.midpoint
                mids.append(mid)
                if tr.status != "bracketed" or not abs(mid - ref) < 2 * eps:
                    rep.discrepancies.append(
                        f"node {key or 'root'} wealth {w}: bracket {tr.final_interval} vs root midpoint {ref:.6f}")
    rep.max_spread = float(max(mids) - min(mids))
    rep.lp_count = solver.lp_count
    return rep


def constant_strategy_index(tree: TreeModel, h_star, v0: float = 1.0, spec: RecursiveIndexSpec | None = None) -> float:
    """Root acceptability of the constant-proportion strategy's dividend stream."""
    strat = build_constant_proportion_strategy(tree, h_star, v0)
    stream = dividends_of(tree, wealth_of(tree, strat, v0))
    return eval_recursive_index(tree, stream, (), spec)
