"""Recursive dynamic risk measures on trees and the dynamic indices dRAROC, dGLR."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .market import DividendStream, node_to_str, tail_dividends
from .scenario import Node, ScenarioModel, TreeModel


@dataclass(frozen=True)
class OneStepRisk:
    """Conditional one-step risk measure applied identically at every node."""

    kind: str = "tvar"
    q: float = 0.01

    def __post_init__(self):
        if self.kind not in ("tvar", "expectation_of_loss"):
            raise ValueError(f"unknown one-step risk {self.kind!r}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must lie in (0, 1]")

    def __call__(self, probs: np.ndarray, payoff: np.ndarray) -> float:
        if self.kind == "expectation_of_loss":
            return float(-probs @ payoff)
        return tvar_discrete(probs, payoff, self.q)


def tvar_discrete(probs: np.ndarray, payoff: np.ndarray, q: float) -> float:
    """TVaR of a discrete payoff; ``q`` below the smallest atom gives the worst loss."""
    loss = -np.asarray(payoff, dtype=float)
    order = np.argsort(-loss, kind="stable")
    loss, p = loss[order], np.asarray(probs, dtype=float)[order]
    cum = np.cumsum(p)
    k = min(int(np.searchsorted(cum, q - 1e-15)), loss.size - 1)
    rest = q - (cum[k - 1] if k else 0.0)
    return float((loss[:k] @ p[:k] + max(rest, 0.0) * loss[k]) / q)


@dataclass
class NodeValuation:
    values: dict[Node, float] = field(default_factory=dict)

    def __getitem__(self, node: Node) -> float:
        return self.values[tuple(node)]


def _subtree(tree: TreeModel, start: Node, depth: int):
    for tail in tree.nodes_at(depth - len(start)):
        yield tuple(start) + tail


def recursive_risk(tree: TreeModel, stream: DividendStream, step: OneStepRisk, start: Node = ()) -> NodeValuation:
    """Backward recursion ``rho_t = rho_{t,t+1}(-rho_{t+1}) - D_t``, ``rho_T = -D_T``."""
    start = tuple(start)
    D = stream.values
    probs = tree.step.probabilities
    val = {leaf: -D.get(leaf, 0.0) for leaf in _subtree(tree, start, tree.horizon)}
    for t in range(tree.horizon - 1, len(start) - 1, -1):
        for node in _subtree(tree, start, t):
            child = np.array([-val[c] for c in tree.children(node)])
            val[node] = step(probs, child) - D.get(node, 0.0)
    return NodeValuation(val)


def conditional_tail(tree: TreeModel, stream: DividendStream, node: Node, t: int | None = None):
    """Leaf probabilities (conditional on ``node``) and tail sums ``sum_{s>=t} D_s``."""
    node = tuple(node)
    t = len(node) if t is None else t
    probs, sums = [], []
    for leaf, p in tree.leaves_under(node):
        probs.append(p)
        sums.append(stream.path_sum(leaf, t))
    return np.array(probs), np.array(sums)


def flat_tvar_valuation(q: float) -> Callable[[TreeModel, DividendStream], NodeValuation]:
    """Non-recursive valuation: TVaR of the tail sum over all leaves below each node."""

    def valuation(tree: TreeModel, stream: DividendStream) -> NodeValuation:
        out = {}
        for t in range(tree.horizon + 1):
            for node in tree.nodes_at(t):
                p, x = conditional_tail(tree, stream, node)
                out[node] = tvar_discrete(p, x, q)
        return NodeValuation(out)

    return valuation


# ---------------------------------------------------------------------------
# strong time consistency


@dataclass
class ConsistencyReport:
    checked: int = 0
    max_gap: float = 0.0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def random_stream(tree: TreeModel, rng, scale: float = 1.0) -> DividendStream:
    vals = {(): 0.0}
    for t in range(1, tree.horizon + 1):
        for node in tree.nodes_at(t):
            vals[node] = float(rng.normal(scale=scale))
    return DividendStream(vals, tree.horizon)


def check_strong_consistency(tree: TreeModel, step: OneStepRisk | None = None, samples: int = 50, seed: int = 0,
                             valuation: Callable[[TreeModel, DividendStream], NodeValuation] | None = None,
                             tol: float = 1e-10, constant: bool = False) -> ConsistencyReport:
    """Check ``D_t = D'_t`` and ``rho_{t+1}(D) = rho_{t+1}(D')`` imply ``rho_t(D) = rho_t(D')``.

    Pairs are built by payout surgery: below every child ``c`` of a sampled
    node, the stream is redrawn and then ``D'_{t+1}(c)`` is shifted so that the
    child's valuation is unchanged (translation invariance). ``valuation``
    defaults to the recursive composition of ``step``.
    """
    if valuation is None:
        step = step or OneStepRisk()

        def valuation(tr, st):
            return recursive_risk(tr, st, step)

    rng = np.random.default_rng(seed)
    rep = ConsistencyReport()
    if tree.horizon < 2:
        return rep
    for k in range(samples):
        if constant:
            c = float(rng.normal())
            D = DividendStream({n: (c if n else 0.0) for t in range(tree.horizon + 1) for n in tree.nodes_at(t)},
                               tree.horizon)
        else:
            D = random_stream(tree, rng)
        t = int(rng.integers(0, tree.horizon - 1))
        nodes = list(tree.nodes_at(t))
        node = nodes[rng.integers(len(nodes))]
        rho = valuation(tree, D)
        new = dict(D.values)
        for c in tree.children(node):
            for depth in range(len(c), tree.horizon + 1):
                for m in _subtree(tree, c, depth):
                    if constant:
                        continue
                    new[m] = float(rng.normal())
        D2 = DividendStream(new, tree.horizon)
        rho2 = valuation(tree, D2)
        for c in tree.children(node):
            new[c] += rho2[c] - rho[c]
        D2 = DividendStream(new, tree.horizon)
        rho2 = valuation(tree, D2)
        pre = max(abs(rho2[c] - rho[c]) for c in tree.children(node))
        gap = abs(rho2[node] - rho[node])
        rep.checked += 1
        if pre > tol:
            rep.failures.append(f"sample {k}: surgery did not equalize child values ({pre:.3e})")
            continue
        rep.max_gap = max(rep.max_gap, gap)
        if gap > tol:
            rep.failures.append(f"sample {k}: node {node_to_str(node) or 'root'} values differ by {gap:.3e}")
    return rep


# ---------------------------------------------------------------------------
# dynamic indices


def _ratio(num: float, den: float) -> float:
    if den <= 0.0:
        return math.inf if num >= 0.0 else 0.0
    return max(num, 0.0) / den


def eval_draroc(tree: TreeModel, stream: DividendStream, t: int, node: Node,
                pi: OneStepRisk | None = None) -> float:
    """``E_t(sum_{s>=t} D_s)^+ / pi_t(sum_{s>=t} D_s)^+`` with the recursive TVaR as ``pi``."""
    node = tuple(node)
    if len(node) != t:
        raise ValueError("node must lie at depth t")
    pi = pi or OneStepRisk("tvar", 0.01)
    p, x = conditional_tail(tree, stream, node, t)
    mean = float(p @ x)
    risk = recursive_risk(tree, tail_dividends(stream, t), pi, node)[node]
    if mean <= 0.0 and risk > 0.0:
        return 0.0
    return _ratio(mean, risk)


def eval_dglr(tree: TreeModel, stream: DividendStream, t: int, node: Node) -> float:
    """``E_t(X)^+ / E_t(X^-)`` for the tail sum ``X = sum_{s>=t} D_s``."""
    node = tuple(node)
    if len(node) != t:
        raise ValueError("node must lie at depth t")
    p, x = conditional_tail(tree, stream, node, t)
    mean = float(p @ x)
    if mean < 0.0:
        return 0.0
    return _ratio(mean, float(p @ np.maximum(-x, 0.0)))


def one_period_tree(model: ScenarioModel) -> TreeModel:
    return TreeModel(1, model)
