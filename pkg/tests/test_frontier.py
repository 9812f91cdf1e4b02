import math

import numpy as np
import pytest

from accmax.acceptability import eval_raroc
from accmax.dynrisk import eval_dglr
from accmax.frontier import (
    ProfilePoint, dglr_slope, frontiers_to_csv, hausdorff, intermediate_dglr_slopes, max_ratio_point,
    meanloss_frontier_dglr, meanloss_slope_lp, meanrisk_frontiers, meanrisk_full_tree_frontier,
    moving_scalarization, plot_frontiers, simulate_policies,
)
from accmax.lp import FrontierPolyline
from accmax.market import dividends_of, wealth_of
from accmax.risk import tvar
from accmax.scenario import ScenarioModel, TreeModel, pnl_of_weights, toy_model, toy_tree


def poly(risk_mean):
    """FrontierPolyline from (risk, mean) vertices."""
    v = np.asarray(risk_mean, dtype=float)
    return FrontierPolyline(np.column_stack([-v[:, 1], v[:, 0]]))


def check_invariants(F):
    V = F.vertices
    assert np.all(np.diff(V[:, 0]) > 0) and np.all(np.diff(V[:, 1]) > 0)
    if len(V) > 2:
        s = np.diff(V[:, 1]) / np.diff(V[:, 0])
        assert np.all(np.diff(s) <= 1e-9)


def test_one_period_frontier_is_static():
    m = toy_model()
    F = meanrisk_frontiers(toy_tree(1))[0]
    check_invariants(F)
    assert max_ratio_point(F).ratio == pytest.approx(float(eval_raroc(m, pnl_of_weights(m, [15 / 16, 1 / 16]))),
                                                     abs=1e-7)
    assert max_ratio_point(F).ratio == pytest.approx(0.8214, abs=1e-4)
    for a in np.linspace(0, 1, 101):
        d = pnl_of_weights(m, [a, 1 - a])
        f = [-float(m.probabilities @ d.values), tvar(m, d, 0.01)]
        assert F.contains(f, tol=1e-9)


def test_sequence_shape_and_last_frontier():
    seq = meanrisk_frontiers(toy_tree(3))
    assert len(seq) == 3
    for F in seq.frontiers:
        check_invariants(F)
    last = meanrisk_frontiers(toy_tree(1))[0]
    assert hausdorff(seq[2].vertices, last.vertices) < 1e-12


def test_deterministic_tree_single_point():
    step = ScenarioModel([1.0], [[1.02], [1.01]])
    for F in meanrisk_frontiers(TreeModel(3, step)).frontiers:
        assert len(F) == 1


def test_oracle_t2():
    tree = toy_tree(2)
    F = meanrisk_frontiers(tree)[0]
    G = meanrisk_full_tree_frontier(tree)
    assert hausdorff(F.vertices, G.vertices) < 1e-6


def test_homogeneity():
    tree = toy_tree(2)
    one = meanrisk_frontiers(tree)
    two = meanrisk_frontiers(tree, wealth=2.0)
    for a, b in zip(one.frontiers, two.frontiers):
        assert len(a) == len(b)
        assert np.allclose(2 * a.vertices, b.vertices, atol=1e-8)


def test_max_ratio_examples():
    p = max_ratio_point(poly([(1, 1), (2, 3), (4, 5)]))
    assert (p.risk, p.mean, p.ratio) == (2.0, 3.0, 1.5)
    assert math.isinf(max_ratio_point(poly([(-0.5, 0.2), (1, 1)])).ratio)
    with pytest.raises(ValueError):
        max_ratio_point(FrontierPolyline(np.zeros((0, 2))))


def test_moving_scalarization_examples():
    F = poly([(1, 1), (2, 3)])
    out = moving_scalarization(F, ProfilePoint(0, (), 3.0, 2.0, 1.5))
    assert out.lambda_ == pytest.approx(0.75)
    edge = poly([(0.5, 1), (1.5, 3)])  # slope 2 through (1, 2): E = s rho
    assert moving_scalarization(edge, ProfilePoint(0, (), 2.0, 1.0, 2.0)).lambda_ == pytest.approx(1.0)
    edge = poly([(0, 1), (2, 3)])  # slope 1, E = 2, rho = 1
    assert moving_scalarization(edge, ProfilePoint(0, (), 2.0, 1.0, 2.0)).lambda_ == pytest.approx(2.0)
    vertex = moving_scalarization(poly([(1, 1), (2, 3), (4, 4)]), ProfilePoint(0, (), 3.0, 2.0, 1.5))
    assert vertex.lambda_interval == pytest.approx((0.75, 3.0))
    assert vertex.lambda_ == pytest.approx(1.875)
    with pytest.raises(ValueError):
        moving_scalarization(F, ProfilePoint(0, (), 5.0, 2.0, 2.5))


def test_dglr_one_period_reduction():
    F = meanloss_frontier_dglr(toy_tree(1), v0=1.0)
    assert max_ratio_point(F).ratio == pytest.approx(22 / 7, abs=1e-5)


def test_dglr_arbitrage_free_single_asset():
    tree = TreeModel(2, ScenarioModel([0.5, 0.5], [[1.1, 0.9]]))
    F = meanloss_frontier_dglr(tree, 0.0, method="lp")
    assert len(F) == 1 and F.ray is None
    assert np.allclose(F.points, 0.0, atol=1e-8)
    assert dglr_slope(tree).slope == 0.0


@pytest.mark.parametrize("T", [1, 2, 3])
def test_dglr_lp_matches_bellman(T):
    tree = toy_tree(T)
    lp = max_ratio_point(meanloss_frontier_dglr(tree, 0.0, method="lp")).ratio
    assert lp == pytest.approx(dglr_slope(tree).slope, abs=1e-7)
    assert meanloss_slope_lp(tree) == pytest.approx(lp, abs=1e-7)


def test_dglr_ray_property():
    F = meanloss_frontier_dglr(toy_tree(2), 0.0, method="lp")
    for f in F.points:
        assert F.distance(2 * f) <= 1e-8
    assert F.ray is not None


def test_dglr_strategy_attains_slope():
    tree = toy_tree(3)
    res = dglr_slope(tree, with_strategy=True)
    stream = dividends_of(tree, wealth_of(tree, res.strategy, 0.0))
    value = eval_dglr(tree, stream, 0, ())
    # the slope is located by LP sign tests, so it is accurate to the LP tolerances only
    assert res.slope * (1 - 1e-5) <= value <= res.slope * (1 + 1e-6)


def test_intermediate_slopes_increase_with_horizon():
    s = intermediate_dglr_slopes(toy_tree(4))
    assert s[-1] == pytest.approx(dglr_slope(toy_tree(1)).slope)
    assert all(a > b for a, b in zip(s, s[1:]))


def test_policies_t2():
    tree = toy_tree(2)
    seq = meanrisk_frontiers(tree)
    prof = simulate_policies(tree, seq)
    cons1, sw1, my1 = prof[1]
    assert seq[1].distance(cons1.objective) <= 1e-7
    best = max_ratio_point(seq[1])
    # one period left: switching and myopic both pick the one-step max-ratio portfolio
    for p in (sw1, my1):
        assert p.mean == pytest.approx(best.mean, abs=1e-7)
        assert p.risk == pytest.approx(best.risk, abs=1e-7)
    assert seq[0].distance(prof[0][0].objective) <= 1e-7


def test_policies_t3_inefficient():
    tree = toy_tree(3)
    seq = meanrisk_frontiers(tree)
    prof = simulate_policies(tree, seq)
    for t, (cons, sw, my) in enumerate(prof):
        assert seq[t].distance(cons.objective) <= 1e-7
    cons, sw, my = prof[1]
    assert seq[1].pareto_gap(sw.objective) > 1e-6
    assert seq[1].pareto_gap(my.objective) > 1e-6
    with pytest.raises(ValueError):
        simulate_policies(tree, seq, path=[0])


def test_csv_and_svg(tmp_path):
    seq = meanrisk_frontiers(toy_tree(2))
    lines = frontiers_to_csv(seq).splitlines()
    assert lines[0] == "t,rho,E,is_max_ratio"
    assert sum(int(l.rsplit(",", 1)[1]) for l in lines[1:]) == 2
    pytest.importorskip("matplotlib")
    out = tmp_path / "f.svg"
    plot_frontiers(seq, str(out), simulate_policies(toy_tree(2), seq))
    assert out.read_text().lstrip().startswith("<?xml")
