"""Self-financing strategies, wealth processes and dividend streams on scenario trees."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .scenario import Node, TreeModel

SF_TOL = 1e-10


class MarketError(ValueError):
    pass


def node_to_str(node: Node) -> str:
    return ".".join(str(i) for i in node)


def str_to_node(s: str) -> Node:
    return tuple(int(t) for t in s.split(".")) if s else ()


@dataclass
class Strategy:
    """Monetary allocations ``h_s`` per non-terminal node."""

    allocations: dict[Node, np.ndarray]
    shortselling: bool = False

    def __post_init__(self):
        self.allocations = {tuple(k): np.asarray(v, dtype=float) for k, v in self.allocations.items()}

    def scaled(self, lam: float) -> "Strategy":
        return Strategy({k: lam * v for k, v in self.allocations.items()}, self.shortselling)

    def merged(self, other: "Strategy") -> "Strategy":
        out = dict(self.allocations)
        out.update(other.allocations)
        return Strategy(out, self.shortselling and other.shortselling)

    def to_json(self) -> str:
        return json.dumps({node_to_str(k): v.tolist() for k, v in sorted(self.allocations.items())})

    @classmethod
    def from_json(cls, text: str, shortselling: bool = False) -> "Strategy":
        return cls({str_to_node(k): np.asarray(v) for k, v in json.loads(text).items()}, shortselling)


@dataclass
class WealthProcess:
    values: dict[Node, float]


@dataclass
class DividendStream:
    """Dividends ``D_s`` per node; ``D_0 = 0`` for streams built from wealth."""

    values: dict[Node, float]
    horizon: int

    def path_sum(self, leaf: Node, start: int = 0) -> float:
        return float(sum(self.values.get(leaf[:s], 0.0) for s in range(start, len(leaf) + 1)))


def feasibility_violations(tree: TreeModel, strat: Strategy, v: float, start: Node = ()) -> list[tuple[Node, str]]:
    """Nodes below ``start`` where ``strat`` is missing, not self-financing or short."""
    out = []
    wealth = {tuple(start): float(v)}
    for t in range(len(start), tree.horizon):
        for node in _subtree_nodes(tree, start, t):
            h = strat.allocations.get(node)
            if h is None:
                out.append((node, "missing allocation"))
                continue
            V = wealth[node]
            if abs(h.sum() - V) > SF_TOL * max(1.0, abs(V)):
                out.append((node, f"not self-financing: sum(h)={h.sum():.12g} but V={V:.12g}"))
            if not strat.shortselling and np.any(h < -SF_TOL * max(1.0, abs(V))):
                out.append((node, "negative position without shortselling"))
            w = tree.returns_at(node).T @ h
            for i, child in enumerate(tree.children(node)):
                wealth[child] = float(w[i])
    return out


def _subtree_nodes(tree: TreeModel, start: Node, depth: int):
    start = tuple(start)
    for tail in tree.nodes_at(depth - len(start)):
        yield start + tail


def wealth_of(tree: TreeModel, strat: Strategy, v0: float, start: Node = ()) -> WealthProcess:
    """Forward wealth recursion ``V_{s+1} = R_{s+1}^T h_s`` from ``v0`` at ``start``."""
    if v0 < 0:
        raise MarketError("initial wealth must be nonnegative")
    bad = feasibility_violations(tree, strat, v0, start)
    if bad:
        node, msg = bad[0]
        raise MarketError(f"node {node_to_str(node) or 'root'}: {msg}")
    values = {tuple(start): float(v0)}
    for t in range(len(start), tree.horizon):
        for node in _subtree_nodes(tree, start, t):
            w = tree.returns_at(node).T @ strat.allocations[node]
            for i, child in enumerate(tree.children(node)):
                values[child] = float(w[i])
    return WealthProcess(values)


def dividends_of(tree: TreeModel, wealth: WealthProcess) -> DividendStream:
    """``D_s = V_s - V_{s-1}`` with ``D_0 = 0`` at the starting node."""
    vals = {}
    for node, V in wealth.values.items():
        parent = node[:-1]
        vals[node] = V - wealth.values[parent] if node and parent in wealth.values else 0.0
    return DividendStream(vals, tree.horizon)


def tail_dividends(stream: DividendStream, t: int) -> DividendStream:
    """``D^{[t,T]}``: dividends before time ``t`` set to zero."""
    if not 0 <= t <= stream.horizon:
        raise MarketError(f"time {t} outside 0..{stream.horizon}")
    return DividendStream({k: (v if len(k) >= t else 0.0) for k, v in stream.values.items()}, stream.horizon)


# ---------------------------------------------------------------------------
# feasible-set recursion checks


def _sample_allocation(rng, d: int, V: float, shortselling: bool) -> np.ndarray:
    pi = rng.dirichlet(np.ones(d))
    h = V * pi
    if shortselling:
        z = rng.normal(size=d)
        h = h + (z - z.mean()) * max(1.0, abs(V))
    return h


def sample_strategy(tree: TreeModel, v: float, start: Node, shortselling: bool, rng) -> Strategy:
    """A random self-financing strategy on the subtree below ``start`` from wealth ``v``."""
    alloc = {}
    wealth = {tuple(start): float(v)}
    d = tree.step.n_assets
    for t in range(len(start), tree.horizon):
        for node in _subtree_nodes(tree, start, t):
            h = _sample_allocation(rng, d, wealth[node], shortselling)
            alloc[node] = h
            w = tree.returns_at(node).T @ h
            for i, child in enumerate(tree.children(node)):
                wealth[child] = float(w[i])
    return Strategy(alloc, shortselling)


@dataclass
class RecursionReport:
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def check_feasible_recursion(tree: TreeModel, v_t: float, t: int, shortselling: bool = False, samples: int = 100,
                             seed: int = 0, lam: float = 2.5, corrupt_tail: bool = False) -> RecursionReport:
    """Property checks of the feasible strategy sets at time ``t``.

    (a) scaling: ``lam * h`` is feasible from ``lam * v_t`` and scales every
    wealth exactly; (b) recursion: a one-step allocation followed by tails
    feasible from the child wealths is feasible from ``v_t``. With
    ``corrupt_tail`` the tails start from a wrong wealth (negative control).
    """
    if not v_t > 0:
        raise MarketError("v_t must be positive")
    rng = np.random.default_rng(seed)
    rep = RecursionReport()
    d = tree.step.n_assets
    depth_nodes = list(tree.nodes_at(t)) if t < tree.horizon else []
    if not depth_nodes:
        raise MarketError(f"time {t} has no trading decision")
    for k in range(samples):
        node = depth_nodes[rng.integers(len(depth_nodes))]
        # (a) scaling
        h = sample_strategy(tree, 1.0, node, shortselling, rng)
        hl = h.scaled(lam)
        bad = feasibility_violations(tree, hl, lam, node)
        if bad:
            rep.failures.append(f"scaling sample {k}: node {node_to_str(bad[0][0])}: {bad[0][1]}")
        else:
            w1 = wealth_of(tree, h, 1.0, node).values
            wl = wealth_of(tree, hl, lam, node).values
            err = max(abs(wl[n] - lam * w1[n]) for n in w1)
            if err > 1e-12 * lam * max(1.0, max(abs(x) for x in w1.values())):
                rep.failures.append(f"scaling sample {k}: wealth error {err:.3e}")
        # (b) recursion
        h0 = _sample_allocation(rng, d, v_t, shortselling)
        combined = Strategy({node: h0}, shortselling)
        w = tree.returns_at(node).T @ h0
        for i, child in enumerate(tree.children(node)):
            if len(child) == tree.horizon:
                continue
            start_w = w[i] * (1.01 if corrupt_tail else 1.0)
            combined = combined.merged(sample_strategy(tree, start_w, child, shortselling, rng))
        bad = feasibility_violations(tree, combined, v_t, node)
        if bad:
            rep.failures.append(f"recursion sample {k}: node {node_to_str(bad[0][0])}: {bad[0][1]}")
        rep.checked += 1
    return rep
