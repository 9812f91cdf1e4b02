import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from accmax.acceptability import eval_glr, eval_raroc
from accmax.dynrisk import (
    OneStepRisk, check_strong_consistency, eval_dglr, eval_draroc, flat_tvar_valuation, random_stream,
    recursive_risk,
)
from accmax.market import DividendStream, dividends_of, wealth_of
from accmax.recursive import build_constant_proportion_strategy
from accmax.scenario import pnl_of_weights, toy_model, toy_tree


def stream_of(tree, h, v0=1.0):
    return dividends_of(tree, wealth_of(tree, build_constant_proportion_strategy(tree, h, v0), v0))


def test_terminal_constant():
    tree = toy_tree(3)
    D = DividendStream({n: (0.7 if len(n) == 3 else 0.0) for t in range(4) for n in tree.nodes_at(t)}, 3)
    assert recursive_risk(tree, D, OneStepRisk("tvar", 0.3))[()] == pytest.approx(-0.7, abs=1e-15)


def test_one_step_worst_case():
    tree = toy_tree(2)
    pnl = pnl_of_weights(toy_model(), [15 / 16, 1 / 16]).values
    vals = {(): 0.0, **{(i,): 0.0 for i in range(4)}, **{(i, j): pnl[j] for i in range(4) for j in range(4)}}
    rho = recursive_risk(tree, DividendStream(vals, 2), OneStepRisk("tvar", 0.01))
    for i in range(4):
        assert rho[(i,)] == pytest.approx(0.0153125, abs=1e-15)


def test_nonnegative_payouts():
    tree = toy_tree(2)
    rng = np.random.default_rng(3)
    D = DividendStream({n: (abs(rng.normal()) if n else 0.0) for t in range(3) for n in tree.nodes_at(t)}, 2)
    assert recursive_risk(tree, D, OneStepRisk("tvar", 0.2))[()] <= 0.0


def test_strong_consistency_recursive():
    for q in (0.01, 0.5, 1.0):
        rep = check_strong_consistency(toy_tree(3), OneStepRisk("tvar", q), samples=30, seed=2)
        assert rep.passed, rep.failures[:3]
    assert check_strong_consistency(toy_tree(3), samples=10, constant=True).passed


def test_flat_tvar_is_not_consistent():
    rep = check_strong_consistency(toy_tree(3), samples=30, seed=2, valuation=flat_tvar_valuation(0.5))
    assert not rep.passed


def test_one_period_reductions():
    tree = toy_tree(1)
    m = toy_model()
    for h in ([15 / 16, 1 / 16], [11 / 15, 4 / 15], [0.3, 0.7]):
        D = stream_of(tree, h)
        d = pnl_of_weights(m, h)
        assert eval_draroc(tree, D, 0, ()) == pytest.approx(float(eval_raroc(m, d, 0.01)), abs=1e-12)
        assert eval_dglr(tree, D, 0, ()) == pytest.approx(float(eval_glr(m, d)), abs=1e-12)


def test_index_conventions():
    tree = toy_tree(2)
    neg = DividendStream({n: (-0.1 if n else 0.0) for t in range(3) for n in tree.nodes_at(t)}, 2)
    assert eval_draroc(tree, neg, 0, ()) == 0.0
    assert eval_dglr(tree, neg, 0, ()) == 0.0
    pos = DividendStream({n: (0.1 if n else 0.0) for t in range(3) for n in tree.nodes_at(t)}, 2)
    assert math.isinf(eval_dglr(tree, pos, 0, ()))
    assert math.isinf(eval_draroc(tree, pos, 0, ()))


def test_draroc_leaf_enumeration():
    tree = toy_tree(2)
    D = stream_of(tree, [15 / 16, 1 / 16])
    sums = np.array([D.values[(i,)] + D.values[(i, j)] for i in range(4) for j in range(4)])
    # TVaR at 1% below the 1/4 branch mass is the worst case at every step
    expected = max(sums.mean(), 0) / max(-sums.min(), 0)
    assert eval_draroc(tree, D, 0, ()) == pytest.approx(expected, abs=1e-12)
    glr = sums.mean() / np.maximum(-sums, 0).mean()
    assert eval_dglr(tree, D, 0, ()) == pytest.approx(glr, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 1.0))
def test_recursive_tvar_axioms(seed, q):
    tree = toy_tree(2)
    rng = np.random.default_rng(seed)
    step = OneStepRisk("tvar", q)
    D, E = random_stream(tree, rng), random_stream(tree, rng)
    r = recursive_risk(tree, D, step).values
    nodes = list(r)
    up = DividendStream({n: D.values[n] + abs(E.values[n]) for n in D.values}, 2)
    ru = recursive_risk(tree, up, step).values
    assert all(ru[n] <= r[n] + 1e-10 for n in nodes)
    for lam in (0.5, 2.0):
        rl = recursive_risk(tree, DividendStream({n: lam * v for n, v in D.values.items()}, 2), step).values
        assert all(abs(rl[n] - lam * r[n]) <= 1e-10 for n in nodes)
    s = DividendStream({n: D.values[n] + E.values[n] for n in D.values}, 2)
    rs, re = recursive_risk(tree, s, step).values, recursive_risk(tree, E, step).values
    assert all(rs[n] <= r[n] + re[n] + 1e-10 for n in nodes)
    # translation by a time-1 measurable amount m paid at time 1
    m = {(i,): float(rng.normal()) for i in range(4)}
    shifted = DividendStream({n: D.values[n] + m.get(n, 0.0) for n in D.values}, 2)
    rt = recursive_risk(tree, shifted, step).values
    assert all(abs(rt[(i,)] - (r[(i,)] - m[(i,)])) <= 1e-10 for i in range(4))
