import numpy as np
import pytest

from accmax.market import (
    DividendStream, MarketError, Strategy, check_feasible_recursion, dividends_of, tail_dividends, wealth_of,
)
from accmax.recursive import build_constant_proportion_strategy
from accmax.scenario import toy_tree

H_STAR = np.array([0.5517, 0.4483])


def test_constant_proportion_wealth():
    tree = toy_tree(2)
    strat = build_constant_proportion_strategy(tree, H_STAR, 1.0)
    V = wealth_of(tree, strat, 1.0).values
    g = tree.step.returns.T @ H_STAR
    for i in range(4):
        for j in range(4):
            assert V[(i, j)] == pytest.approx(g[i] * g[j], abs=1e-14)


def test_buy_and_hold_asset_one():
    tree = toy_tree(2)
    strat = build_constant_proportion_strategy(tree, [1.0, 0.0], 1.0)
    assert wealth_of(tree, strat, 1.0).values[(0, 0)] == pytest.approx(1.0816, abs=1e-14)


def test_zero_wealth():
    tree = toy_tree(2)
    strat = Strategy({n: np.zeros(2) for t in range(2) for n in tree.nodes_at(t)})
    assert all(v == 0.0 for v in wealth_of(tree, strat, 0.0).values.values())


def test_missing_node_and_budget_errors():
    tree = toy_tree(2)
    with pytest.raises(MarketError):
        wealth_of(tree, Strategy({(): np.array([0.5, 0.5])}), 1.0)
    bad = build_constant_proportion_strategy(tree, [0.5, 0.5], 1.0)
    bad.allocations[(1,)] = bad.allocations[(1,)] * 1.01
    with pytest.raises(MarketError):
        wealth_of(tree, bad, 1.0)


def test_shortselling_flag():
    tree = toy_tree(1)
    with pytest.raises(MarketError):
        wealth_of(tree, Strategy({(): np.array([1.5, -0.5])}), 1.0)
    assert wealth_of(tree, Strategy({(): np.array([1.5, -0.5])}, shortselling=True), 1.0).values[()] == 1.0


def test_dividends_telescope():
    tree = toy_tree(3)
    rng = np.random.default_rng(0)
    strat = build_constant_proportion_strategy(tree, [0.3, 0.7], 2.0)
    V = wealth_of(tree, strat, 2.0)
    D = dividends_of(tree, V)
    assert D.values[()] == 0.0
    for leaf, _ in tree.leaves_under(()):
        assert D.path_sum(leaf) == pytest.approx(V.values[leaf] - 2.0, abs=1e-14)


def test_tail_dividends():
    tree = toy_tree(2)
    D = DividendStream({(): 0.0, **{(i,): 1.0 for i in range(4)},
                        **{(i, j): -1.0 for i in range(4) for j in range(4)}}, 2)
    assert tail_dividends(D, 0).values == D.values
    last = tail_dividends(D, 2).values
    assert all(v == 0.0 for n, v in last.items() if len(n) < 2)
    assert all(last[n] == -1.0 for n in last if len(n) == 2)
    t1 = tail_dividends(D, 1)
    assert t1.path_sum((2, 3)) == 0.0
    with pytest.raises(MarketError):
        tail_dividends(D, 3)


@pytest.mark.parametrize("shortselling", [False, True])
def test_feasible_recursion_passes(shortselling):
    rep = check_feasible_recursion(toy_tree(3), 1.0, 0, shortselling, samples=100, seed=1)
    assert rep.passed and rep.checked == 100


def test_feasible_recursion_negative_control():
    rep = check_feasible_recursion(toy_tree(2), 1.0, 0, samples=5, corrupt_tail=True)
    assert not rep.passed
    assert "node" in rep.failures[0]


def test_scaling_exact():
    tree = toy_tree(2)
    s = build_constant_proportion_strategy(tree, [0.2, 0.8], 1.0)
    s2 = s.scaled(2.5)
    w1, w2 = wealth_of(tree, s, 1.0).values, wealth_of(tree, s2, 2.5).values
    for n in w1:
        assert w2[n] == pytest.approx(2.5 * w1[n], rel=1e-15)


def test_strategy_json_round_trip():
    tree = toy_tree(2)
    s = build_constant_proportion_strategy(tree, [0.2, 0.8], 1.0)
    back = Strategy.from_json(s.to_json())
    assert all(np.array_equal(back.allocations[k], v) for k, v in s.allocations.items())
