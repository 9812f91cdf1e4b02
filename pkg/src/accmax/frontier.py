"""Mean-risk and mean-loss efficient frontiers on scenario trees.

Frontiers live in the objective space ``f = (-mean, risk)`` (both minimized)
of the normalized return ``V_T / V_t - 1``; :class:`FrontierPolyline` exposes
the ``(risk, mean)`` view used for plots and ratios.

The dynamic mean-risk problem with recursive TVaR is solved backwards: the
upper image at depth ``t`` is the image of a one-step LP whose children are
constrained to the depth ``t+1`` upper image, scaled by the child wealth.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dynrisk import OneStepRisk, recursive_risk
from .lp import EQ, GE, LE, BiObjectiveLp, FrontierPolyline, LpBuilder, LpError, UnboundedFrontierError, solve_biobjective, solve_lp
from .market import Strategy, dividends_of, tail_dividends, wealth_of
from .scenario import Node, ScenarioModel, TreeModel

LP_LEAF_CAP = 256  # largest full-tree LP solved by default
STRATEGY_BACKOFF = 1e-6  # relative gap below the slope used to build the optimal strategy
ORIGIN_TOL = 1e-8  # vertices this close to (0, 0) are the trivial strategy


@dataclass
class FrontierSequence:
    """One normalized frontier per decision time ``t = 0..T-1``."""

    frontiers: list[FrontierPolyline]
    q: float
    shortselling: bool = False

    def __getitem__(self, t: int) -> FrontierPolyline:
        return self.frontiers[t]

    def __len__(self):
        return len(self.frontiers)


@dataclass
class ProfilePoint:
    t: int
    node: Node
    mean: float
    risk: float
    ratio: float
    lambda_: float | None = None
    lambda_interval: tuple[float, float] | None = None
    attained: bool = True

    @property
    def objective(self) -> np.ndarray:
        return np.array([-self.mean, self.risk])


def ratio_of(mean: float, risk: float) -> float:
    """``mean^+ / risk^+`` with ``a / 0 = inf`` for ``a >= 0``."""
    if risk <= 0.0:
        return math.inf if mean >= 0.0 else 0.0
    return float(max(mean, 0.0) / risk)


# ---------------------------------------------------------------------------
# set-valued backward recursion


def _node_lp(step: ScenarioModel, child: FrontierPolyline, q: float, shortselling: bool, wealth: float = 1.0,
             R: np.ndarray | None = None):
    """One-step LP mapping a child upper image to the parent's.

    Variables: weights ``h``, scaled child points ``z_i = w_i y_i`` and
    Rockafellar-Uryasev auxiliaries of the one-step TVaR of the losses
    ``z_i2 - w_i + wealth``. Membership of ``y_i`` in the child upper image is
    written through the child's vertices: ``z_i >= sum_k mu_ik v_k + nu_i r``
    with ``sum_k mu_ik = w_i``, which keeps four rows per child.
    """
    R = step.returns if R is None else R
    p = step.probabilities
    d, K = R.shape
    V = child.points
    ray = child.ray
    bld = LpBuilder()
    h = bld.add_vars("h", d, lower=-math.inf if shortselling else 0.0)
    z = np.array([bld.add_vars(f"z{i}", 2, lower=-math.inf) for i in range(K)])
    zeta = bld.add_var("zeta", lower=-math.inf)
    s = bld.add_vars("s", K)
    bld.add_row({int(j): 1.0 for j in h}, EQ, wealth)

    def w_terms(i, scale):
        return {int(h[j]): scale * float(R[j, i]) for j in range(d)}

    for i in range(K):
        mu = bld.add_vars(f"mu{i}", len(V))
        row = w_terms(i, -1.0)
        row.update({int(k): 1.0 for k in mu})
        bld.add_row(row, EQ, 0.0)  # sum_k mu_ik = w_i, so w_i >= 0 (limited liability)
        nu = bld.add_var(f"nu{i}") if ray is not None else None
        for c in range(2):
            row = {int(z[i, c]): 1.0}
            for k in range(len(V)):
                if V[k, c] != 0.0:
                    row[int(mu[k])] = -float(V[k, c])
            if nu is not None:
                row[nu] = -float(ray[c])
            bld.add_row(row, GE, 0.0)
        row = w_terms(i, 1.0)
        row.update({int(s[i]): 1.0, zeta: 1.0})
        row[int(z[i, 1])] = row.get(int(z[i, 1]), 0.0) - 1.0
        bld.add_row(row, GE, wealth)
    c1 = bld.objective({int(z[i, 0]): p[i] for i in range(K)})
    for i in range(K):
        for j in range(d):
            c1[int(h[j])] -= p[i] * R[j, i]
    c2 = bld.objective({zeta: 1.0, **{int(s[i]): p[i] / q for i in range(K)}})
    # pad the objectives to the full width (vertex weights were added after them)
    lp = bld.build()
    n = lp.n_vars
    c1 = np.pad(c1, (0, n - c1.size))
    c2 = np.pad(c2, (0, n - c2.size))
    return lp, c1, c2, (float(wealth), 0.0), h, z


def meanrisk_frontiers(tree: TreeModel, q: float = 0.01, shortselling: bool = False, wealth: float = 1.0) -> FrontierSequence:
    """Mean-risk frontiers of ``V_T - V_t`` (recursive TVaR at level ``q``) for every ``t``.

    With ``wealth != 1`` each frontier is recomputed at that wealth, which by
    homogeneity should equal ``wealth`` times the unit frontier.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    if tree.overrides:
        raise ValueError("the per-depth recursion assumes an iid tree")
    child = FrontierPolyline(np.zeros((1, 2)))  # upper image R^2_+ at T
    out: list[FrontierPolyline] = []
    for _ in range(tree.horizon):
        lp, c1, c2, off, _, _ = _node_lp(tree.step, child, q, shortselling)
        F = solve_biobjective(BiObjectiveLp(c1, c2, lp, off))
        out.append(F)
        child = F
    out.reverse()
    if wealth != 1.0:
        scaled = []
        for t in range(tree.horizon):
            child = out[t + 1] if t + 1 < tree.horizon else FrontierPolyline(np.zeros((1, 2)))
            lp, c1, c2, off, _, _ = _node_lp(tree.step, child, q, shortselling, wealth)
            scaled.append(solve_biobjective(BiObjectiveLp(c1, c2, lp, off)))
        out = scaled
    return FrontierSequence(out, q, shortselling)


def meanrisk_full_tree_frontier(tree: TreeModel, q: float = 0.01, shortselling: bool = False,
                                wealth: float = 1.0) -> FrontierPolyline:
    """Time-0 mean-risk frontier from one LP over the whole tree.

    Variables are the allocations at every non-terminal node plus a recursive
    TVaR epigraph per node; used as an independent check of the recursion.
    """
    if tree.n_nodes_at(tree.horizon) > LP_LEAF_CAP:
        raise LpError("tree too large for the full-tree LP")
    p = tree.step.probabilities
    d = tree.step.n_assets
    bld = LpBuilder()
    H: dict[Node, np.ndarray] = {}
    U: dict[Node, int] = {}
    for t in range(tree.horizon):
        for node in tree.nodes_at(t):
            H[node] = bld.add_vars(f"h{node}", d, lower=-math.inf if shortselling else 0.0)
            U[node] = bld.add_var(f"u{node}", lower=-math.inf)

    def wealth_terms(node, scale=1.0):
        """Linear terms of V_node (without the root constant)."""
        if not node:
            return {}
        R = tree.returns_at(node[:-1])
        hp = H[node[:-1]]
        return {int(hp[j]): scale * float(R[j, node[-1]]) for j in range(d)}

    for t in range(tree.horizon):
        for node in tree.nodes_at(t):
            row = {int(j): 1.0 for j in H[node]}
            for k, v in wealth_terms(node, -1.0).items():
                row[k] = row.get(k, 0.0) + v
            bld.add_row(row, EQ, wealth if not node else 0.0)
            if shortselling and node:
                bld.add_row(wealth_terms(node), GE, 0.0)
            # u_n >= zeta + (1/q) sum p s_i ;  s_i >= rho_child - zeta ; rho_c = u_c - (V_c - V_n)
            zeta = bld.add_var(f"zeta{node}", lower=-math.inf)
            s = bld.add_vars(f"s{node}", tree.branching)
            row = {U[node]: 1.0, zeta: -1.0}
            for i in range(tree.branching):
                row[int(s[i])] = -p[i] / q
            bld.add_row(row, GE, 0.0)
            for i, c in enumerate(tree.children(node)):
                # s_i + zeta - u_c + V_c - V_n >= 0
                row = {int(s[i]): 1.0, zeta: 1.0}
                if c in U:
                    row[U[c]] = row.get(U[c], 0.0) - 1.0
                for k, v in wealth_terms(c).items():
                    row[k] = row.get(k, 0.0) + v
                for k, v in wealth_terms(node, -1.0).items():
                    row[k] = row.get(k, 0.0) + v
                bld.add_row(row, GE, wealth if not node else 0.0)
    c1 = np.zeros(bld.n_vars)
    for leaf in tree.nodes_at(tree.horizon):
        for k, v in wealth_terms(leaf, -tree.path_probability(leaf)).items():
            c1[k] += v
    c2 = bld.objective({U[()]: 1.0})
    lp = bld.build()
    return solve_biobjective(BiObjectiveLp(c1, c2, lp, (wealth, 0.0)))


def hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    P, Q = np.asarray(P, dtype=float), np.asarray(Q, dtype=float)
    D = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


# ---------------------------------------------------------------------------
# ratios and scalarization


def max_ratio_point(frontier: FrontierPolyline, t: int = 0, node: Node = ()) -> ProfilePoint:
    """Frontier point with the largest ``mean^+ / risk^+``.

    A linear-fractional ratio is monotone along each edge, so only vertices
    and the recession ray need checking. The trivial point ``(0, 0)`` is
    skipped; on a ray through the origin the ratio equals the ray's slope.
    """
    if len(frontier) == 0:
        raise ValueError("empty frontier")
    best = None
    for rho, mean in frontier.vertices:
        if abs(rho) <= ORIGIN_TOL and abs(mean) <= ORIGIN_TOL:
            continue
        r = ratio_of(mean, rho)
        if best is None or r > best.ratio:
            best = ProfilePoint(t, tuple(node), float(mean), float(rho), r)
    ray = frontier.ray_direction
    if ray is not None:
        start = frontier.vertices[-1]
        slope = math.inf if ray[0] <= 0 else float(ray[1] / ray[0])
        if best is None or slope > best.ratio:
            pt = start + ray / max(abs(ray[0]), 1e-300) if ray[0] > 0 else start
            through_origin = np.allclose(start, 0.0, atol=ORIGIN_TOL)
            best = ProfilePoint(t, tuple(node), float(pt[1]), float(pt[0]), slope, attained=through_origin)
    if best is None:
        return ProfilePoint(t, tuple(node), 0.0, 0.0, ratio_of(0.0, 0.0))
    return best


def _max_ratio_vertex(frontier: FrontierPolyline) -> int:
    r = [ratio_of(m, rho) if (abs(rho) > ORIGIN_TOL or abs(m) > ORIGIN_TOL) else -1.0 for rho, m in frontier.vertices]
    return int(np.argmax(r))


def moving_scalarization(frontier: FrontierPolyline, point: ProfilePoint, tol: float = 1e-7) -> ProfilePoint:
    """Exponent ``lambda`` for which ``point`` maximizes ``E^lambda / rho`` on the frontier.

    First-order balance ``lambda s rho = E`` with ``s = dE/drho``. At a vertex
    the slope is any value between the adjacent edge slopes, giving an
    interval of exponents; the midpoint is returned. End vertices use their
    single adjacent edge.
    """
    E, rho = point.mean, point.risk
    if E <= 0 or rho <= 0:
        raise ValueError("needs positive mean and risk")
    f = point.objective
    if frontier.distance(f) > tol:
        raise ValueError("point is not on the frontier")
    V = frontier.vertices
    slopes = [(b[1] - a[1]) / (b[0] - a[0]) for a, b in zip(V[:-1], V[1:])]
    if frontier.ray_direction is not None and frontier.ray_direction[0] > 0:
        rd = frontier.ray_direction
        slopes.append(rd[1] / rd[0])
    if not slopes:
        raise ValueError("a single-point frontier has no slope")
    pt = np.array([rho, E])
    k = int(np.argmin(np.linalg.norm(V - pt, axis=1)))
    if np.linalg.norm(V[k] - pt) <= tol:
        adj = [slopes[j] for j in (k - 1, k) if 0 <= j < len(slopes)]
    else:
        # interior of an edge: locate it
        j = int(np.searchsorted(V[:, 0], rho)) - 1
        j = min(max(j, 0), len(slopes) - 1)
        adj = [slopes[j]]
    lams = sorted(float(E / (s * rho)) if s > 0 else math.inf for s in adj)
    lam = 0.5 * (lams[0] + lams[-1])
    return ProfilePoint(point.t, point.node, E, rho, point.ratio, lam, (lams[0], lams[-1]), point.attained)


# ---------------------------------------------------------------------------
# dynamic gain-loss frontier


def meanloss_frontier_dglr(tree: TreeModel, v0: float = 0.0, method: str = "auto",
                           max_leaves: int = LP_LEAF_CAP) -> FrontierPolyline:
    """Mean-loss frontier of ``V_T - v0`` against ``E[(V_T - v0)^-]`` (short positions allowed).

    ``method="lp"`` solves one bi-objective LP over the whole tree.
    ``method="bellman"`` (``v0 = 0`` only) uses that the frontier is then a ray
    from the origin and finds its slope with :func:`dglr_slope`. ``auto``
    takes the LP up to ``max_leaves`` leaves and the ray computation beyond.
    """
    leaves = tree.n_nodes_at(tree.horizon)
    if method == "auto":
        method = "lp" if leaves <= max_leaves or v0 != 0.0 else "bellman"
    if method == "bellman":
        if v0 != 0.0:
            raise ValueError("the ray computation needs v0 = 0")
        s = dglr_slope(tree).slope
        if math.isinf(s):
            return FrontierPolyline(np.zeros((1, 2)), np.array([-1.0, 0.0]))
        if s <= 1e-12:
            return FrontierPolyline(np.zeros((1, 2)))
        return FrontierPolyline(np.zeros((1, 2)), np.array([-s, 1.0]))
    if method != "lp":
        raise ValueError(f"unknown method {method!r}")
    if leaves > max_leaves:
        raise LpError(f"{leaves} leaves exceed the LP size cap {max_leaves}")
    lp, c1, c2, off = _meanloss_lp(tree, v0)
    return solve_biobjective(BiObjectiveLp(c1, c2, lp, off))


def _meanloss_lp(tree: TreeModel, v0: float):
    d = tree.step.n_assets
    bld = LpBuilder()
    H = {}
    for t in range(tree.horizon):
        for node in tree.nodes_at(t):
            H[node] = bld.add_vars(f"h{node}", d, lower=-math.inf)

    def wealth_terms(node, scale=1.0):
        R = tree.returns_at(node[:-1])
        hp = H[node[:-1]]
        return {int(hp[j]): scale * float(R[j, node[-1]]) for j in range(d)}

    for t in range(tree.horizon):
        for node in tree.nodes_at(t):
            row = {int(j): 1.0 for j in H[node]}
            if node:
                for k, v in wealth_terms(node, -1.0).items():
                    row[k] = row.get(k, 0.0) + v
            bld.add_row(row, EQ, v0 if not node else 0.0)
    leaves = list(tree.nodes_at(tree.horizon))
    m = bld.add_vars("m", len(leaves))
    c2 = np.zeros(bld.n_vars)
    c1 = np.zeros(bld.n_vars)
    for li, leaf in enumerate(leaves):
        row = wealth_terms(leaf)
        row[int(m[li])] = 1.0
        bld.add_row(row, GE, v0)  # m >= -(V_leaf - v0)
        P = tree.path_probability(leaf)
        c2[int(m[li])] = P
        for k, v in wealth_terms(leaf, -P).items():
            c1[k] += v
    return bld.build(), c1, c2, (v0, 0.0)


def meanloss_slope_lp(tree: TreeModel) -> float:
    """``max E[V_T]`` subject to ``E[V_T^-] <= 1`` from zero wealth, as one LP."""
    lp, c1, c2, _ = _meanloss_lp(tree, 0.0)
    sol = solve_lp(lp.with_objective(c1).with_rows([(c2, LE, 1.0)]))
    if sol.status == "unbounded":
        return math.inf
    if not sol.optimal:
        raise LpError(f"slope LP failed: {sol.status}")
    return -sol.value


@dataclass
class SlopeResult:
    slope: float
    strategy: Strategy | None = None
    per_depth: list[tuple[float, float]] = field(default_factory=list)


def _gainloss_step(R: np.ndarray, p: np.ndarray, a: float, b: float, v: float, normalize: bool = False):
    """``sup_{1^T h = v} sum_i p_i (a w_i^+ - b w_i^-)`` with ``w = R^T h``.

    Returns (value, h); value ``inf`` when unbounded. With ``normalize`` the
    positions are boxed to ``[-1, 1]`` so a best bounded direction is returned.
    """
    d, K = R.shape
    bld = LpBuilder()
    h = bld.add_vars("h", d, lower=-1.0 if normalize else -math.inf, upper=1.0 if normalize else math.inf)
    m = bld.add_vars("m", K)
    bld.add_row({int(j): 1.0 for j in h}, EQ, v)
    for i in range(K):
        # m_i >= -w_i
        bld.add_row({int(m[i]): 1.0, **{int(h[j]): float(R[j, i]) for j in range(d)}}, GE, 0.0)
    # maximize sum p (a w - (b - a) m)  ->  minimize the negative
    c = np.zeros(bld.n_vars)
    for i in range(K):
        for j in range(d):
            c[int(h[j])] -= p[i] * a * R[j, i]
        c[int(m[i])] += p[i] * (b - a)
    sol = solve_lp(bld.build(c))
    if sol.status == "unbounded":
        return math.inf, None
    if not sol.optimal:
        raise LpError(f"gain-loss step LP failed: {sol.status}")
    val = -sol.value
    if v == 0.0 and not normalize and val > 1e-12:
        return math.inf, None  # positive value at zero cost scales without bound
    return val, sol.x[:d].copy()


def _gainloss_coefficients(tree: TreeModel, x: float):
    """Backward recursion of ``J_t(v) = a_t v^+ - b_t v^-`` for ``E[V_T] - x E[V_T^-]``.

    Entry ``t`` holds the continuation coefficients ``(a, b)`` used at depth
    ``t`` and the unit-wealth maximizers ``h_plus``, ``h_minus`` there (``None``
    at the root). Returns ``None`` once a zero-cost strategy below the root
    has unbounded value.
    """
    R, p = tree.step.returns, tree.step.probabilities
    a, b = 1.0, 1.0 + x
    coeffs = [None] * tree.horizon
    for t in range(tree.horizon - 1, -1, -1):
        if t == 0:
            coeffs[0] = (a, b, None, None)  # the root starts from zero wealth
            break
        z, _ = _gainloss_step(R, p, a, b, 0.0)
        if math.isinf(z):
            return None
        ap, hp = _gainloss_step(R, p, a, b, 1.0)
        am, hm = _gainloss_step(R, p, a, b, -1.0)
        if math.isinf(ap) or math.isinf(am):
            return None
        coeffs[t] = (a, b, hp, hm)
        a, b = ap, -am
    return coeffs


def _zero_cost_improvable(tree: TreeModel, x: float) -> bool:
    res = _gainloss_coefficients(tree, x)
    if res is None:
        return True
    a, b, _, _ = res[0]
    z, _ = _gainloss_step(tree.step.returns, tree.step.probabilities, a, b, 0.0)
    return math.isinf(z)


def dglr_slope(tree: TreeModel, tol: float = 1e-9, with_strategy: bool = False) -> SlopeResult:
    """Slope of the zero-wealth mean-loss ray, i.e. the maximal dynamic gain-loss ratio.

    For fixed ``x`` the value ``J_t(v) = sup E_t[V_T - x V_T^-]`` is positively
    homogeneous in the wealth ``v``, so a one-step LP per depth carries it
    backwards. At zero wealth ``J_0(0)`` is ``0`` or ``inf``, and the slope is
    the smallest ``x`` where it is ``0``; this is found by bisection. The tree
    must be iid.
    """
    if tree.overrides:
        raise ValueError("the per-depth recursion assumes an iid tree")
    lo, hi = 0.0, 1.0
    if not _zero_cost_improvable(tree, 0.0):
        return SlopeResult(0.0)
    while _zero_cost_improvable(tree, hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            return SlopeResult(math.inf)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _zero_cost_improvable(tree, mid):
            lo = mid
        else:
            hi = mid
    res = SlopeResult(hi)
    if with_strategy and hi > 0:
        # slightly below the slope a zero-cost strategy with a positive value exists
        res.strategy = _gainloss_strategy(tree, hi * (1.0 - STRATEGY_BACKOFF))
    return res


def _gainloss_strategy(tree: TreeModel, x: float) -> Strategy:
    """Zero-cost strategy with ``E[V_T] - x E[V_T^-] > 0`` (so gain-loss ratio above ``x``)."""
    R, p = tree.step.returns, tree.step.probabilities
    coeffs = _gainloss_coefficients(tree, x)
    if coeffs is None:
        raise LpError("no finite continuation at this level")
    a0, b0, _, _ = coeffs[0]
    _, h_root = _gainloss_step(R, p, a0, b0, 0.0, normalize=True)
    alloc = {(): h_root}
    wealth = {(): 0.0}
    for t in range(tree.horizon):
        for node in tree.nodes_at(t):
            if node:
                V = wealth[node]
                _, _, hp, hm = coeffs[t]
                alloc[node] = V * hp if V >= 0 else -V * hm
            w = R.T @ alloc[node]
            for i, c in enumerate(tree.children(node)):
                wealth[c] = float(w[i])
    return Strategy(alloc, shortselling=True)


def intermediate_dglr_slopes(tree: TreeModel) -> list[float]:
    """Ray slopes of the zero-wealth frontiers at ``t = 0..T-1`` (remaining horizon ``T - t``)."""
    return [dglr_slope(TreeModel(tree.horizon - t, tree.step)).slope for t in range(tree.horizon)]


# ---------------------------------------------------------------------------
# consistent, switching and myopic behaviour


def _consistent_targets(tree: TreeModel, seq: FrontierSequence, path: list[int]) -> list[np.ndarray]:
    """Normalized objective points of the time-0 max-ratio strategy along ``path``."""
    F0 = seq[0]
    k = _max_ratio_vertex(F0)
    target = F0.points[k].copy()
    out = [target]
    for t in range(tree.horizon - 1):
        child = seq[t + 1] if t + 1 < tree.horizon else FrontierPolyline(np.zeros((1, 2)))
        lp, c1, c2, off, h, z = _node_lp(tree.step, child, seq.q, seq.shortselling)
        tgt_tol = 1e-9 * max(1.0, float(np.abs(target).max()))
        cons = lp.with_rows([(c1, LE, target[0] - off[0] + tgt_tol), (c2, LE, target[1] - off[1] + tgt_tol)])
        sec = np.zeros(lp.n_vars)
        sec[z.reshape(-1)] = 1.0
        sol = solve_lp(cons.with_objective(sec))
        if not sol.optimal:
            raise LpError(f"target recovery failed at t={t}: {sol.status}")
        i = path[t]
        w_i = float(tree.step.returns[:, i] @ sol.x[h])
        target = sol.x[z[i]] / w_i
        out.append(target)
    return out


def _depth_proportions_profile(tree: TreeModel, props: list[np.ndarray], t: int, node: Node, q: float):
    """Normalized (mean, risk) of ``V_T / V_t - 1`` when depth ``s`` invests in ``props[s]``."""
    alloc = {}
    wealth = {tuple(node): 1.0}
    for s in range(t, tree.horizon):
        for tail in tree.nodes_at(s - t):
            n = tuple(node) + tail
            alloc[n] = wealth[n] * props[s]
            w = tree.returns_at(n).T @ alloc[n]
            for i, c in enumerate(tree.children(n)):
                wealth[c] = float(w[i])
    stream = dividends_of(tree, wealth_of(tree, Strategy(alloc, True), 1.0, node))
    mean = sum(pr * (wealth[leaf] - 1.0) for leaf, pr in tree.leaves_under(node))
    risk = recursive_risk(tree, tail_dividends(stream, t), OneStepRisk("tvar", q), node)[node]
    return float(mean), float(risk)


def simulate_policies(tree: TreeModel, frontiers: FrontierSequence, path: list[int] | None = None,
                      q: float | None = None) -> list[tuple[ProfilePoint, ProfilePoint, ProfilePoint]]:
    """Profiles ``(consistent, switching, myopic)`` at every node along ``path``.

    consistent: the time-0 max-ratio strategy, its later profiles recovered
    from the continuation targets; switching: at each depth the first-step
    proportions of that depth's max-ratio strategy; myopic: the one-period
    RAROC maximizer at every step. The latter two are evaluated by full
    enumeration below the node.
    """
    from .bisection import BisectionConfig, maximize
    from .risk import RiskFamilySpec

    q = frontiers.q if q is None else q
    path = [0] * (tree.horizon - 1) if path is None else list(path)
    if len(path) != tree.horizon - 1 or any(not 0 <= i < tree.branching for i in path):
        raise ValueError(f"path must list {tree.horizon - 1} branch indices in 0..{tree.branching - 1}")
    d = tree.step.n_assets
    switch_props = []
    for t in range(tree.horizon):
        F = frontiers[t]
        x = F.solutions[_max_ratio_vertex(F)]
        switch_props.append(np.asarray(x[:d]) / float(np.sum(x[:d])))
    tr = maximize(RiskFamilySpec("raroc_family", q), tree.step, frontiers.shortselling, BisectionConfig(tolerance=1e-8))
    h_myopic = tr.epsilon_solution
    targets = _consistent_targets(tree, frontiers, path)
    out = []
    for t in range(tree.horizon):
        node = tuple(path[:t])
        f = targets[t]
        cons = ProfilePoint(t, node, float(-f[0]), float(f[1]), ratio_of(-f[0], f[1]))
        m, r = _depth_proportions_profile(tree, switch_props, t, node, q)
        sw = ProfilePoint(t, node, m, r, ratio_of(m, r))
        m, r = _depth_proportions_profile(tree, [h_myopic] * tree.horizon, t, node, q)
        my = ProfilePoint(t, node, m, r, ratio_of(m, r))
        out.append((cons, sw, my))
    return out


# ---------------------------------------------------------------------------
# output


def frontiers_to_csv(seq: FrontierSequence | list[FrontierPolyline]) -> str:
    frontiers = seq.frontiers if isinstance(seq, FrontierSequence) else seq
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "rho", "E", "is_max_ratio"])
    for t, F in enumerate(frontiers):
        k = _max_ratio_vertex(F)
        for j, (rho, mean) in enumerate(F.vertices):
            w.writerow([t, repr(float(rho)), repr(float(mean)), int(j == k)])
    return buf.getvalue()


def plot_frontiers(seq: FrontierSequence | list[FrontierPolyline], path: str, profiles=None,
                   xlabel: str = "risk", ylabel: str = "mean", title: str | None = None) -> None:
    """Write an SVG of the frontiers; needs the optional matplotlib dependency."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("plotting needs matplotlib (pip install accmax[plot])") from exc
    frontiers = seq.frontiers if isinstance(seq, FrontierSequence) else seq
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for t, F in enumerate(frontiers):
        V = F.vertices
        if F.ray_direction is not None:
            rd = F.ray_direction / max(np.abs(F.ray_direction).max(), 1e-300)
            span = max(1.0, float(np.abs(V).max()))
            V = np.vstack([V, V[-1] + span * rd])
        ax.plot(V[:, 0], V[:, 1], color="black", lw=1)
        best = max_ratio_point(F, t)
        ax.plot([best.risk], [best.mean], "o", color="green", ms=4)
    if profiles:
        for cons, sw, my in profiles:
            ax.plot([cons.risk], [cons.mean], "o", color="blue", ms=4, mfc="none")
            ax.plot([sw.risk], [sw.mean], "D", color="red", ms=4)
            ax.plot([my.risk], [my.mean], "s", color="magenta", ms=4)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
