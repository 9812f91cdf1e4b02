import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from accmax.lp import (
    EQ, GE, LE, BiObjectiveLp, FrontierPolyline, LinearProgram, LpBuilder, LpError,
    complementary_slackness_residual, dual_value, primal_residual, solve_biobjective, solve_lp, to_lp_text,
)
from accmax.risk import TVAR, build_minrisk_lp, solve_minrisk
from accmax.scenario import toy_model


def one_var(c, rows, lower=0.0, upper=math.inf):
    A = np.array([[r[0]] for r in rows]).reshape(-1, 1)
    return LinearProgram([c], A, [r[1] for r in rows], [r[2] for r in rows], [lower], [upper])


def test_min_x_at_least_three():
    sol = solve_lp(one_var(1.0, [(1.0, GE, 3.0)], lower=-math.inf))
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(3.0, abs=1e-12)
    assert sol.x[0] == pytest.approx(3.0, abs=1e-12)


def test_unbounded():
    sol = solve_lp(one_var(-1.0, []))
    assert sol.status == "unbounded"
    assert sol.ray is not None and sol.ray[0] > 0


def test_infeasible():
    sol = solve_lp(one_var(1.0, [(1.0, GE, 3.0), (1.0, LE, 2.0)]))
    assert sol.status == "infeasible"


def test_malformed_rejected():
    with pytest.raises(LpError):
        LinearProgram([1.0], [[1.0]], ["<>"], [1.0], [0.0], [1.0])
    with pytest.raises(LpError):
        LinearProgram([1.0], [[1.0]], [LE], [math.inf], [0.0], [1.0])


def test_toy_tvar_lp_at_table_level():
    m = toy_model()
    r = solve_minrisk(build_minrisk_lp(TVAR, m, 0.7653), m.n_assets)
    assert abs(r.value) < 1e-4
    assert np.allclose(r.weights, [0.5517, 0.4483], atol=5e-4)


def test_lp_text_dump():
    b = LpBuilder()
    x = b.add_vars("x", 2)
    b.add_row({int(x[0]): 1.0, int(x[1]): 2.0}, LE, 4.0)
    text = to_lp_text(b.build(b.objective({int(x[0]): -1.0})))
    assert "Minimize" in text and "Subject To" in text and "End" in text


def _vertex_oracle(lp: LinearProgram) -> float:
    """Minimum over all basic feasible points of a bounded LP."""
    n = lp.n_vars
    rows = [(lp.A[i], lp.b[i]) for i in range(lp.n_rows)]
    rows += [(np.eye(n)[j], lp.lower[j]) for j in range(n)]
    rows += [(np.eye(n)[j], lp.upper[j]) for j in range(n) if np.isfinite(lp.upper[j])]
    eq = [i for i, s in enumerate(lp.senses) if s == EQ]
    best = math.inf
    for combo in itertools.combinations(range(len(rows)), n):
        if not set(eq) <= set(combo):
            continue
        M = np.array([rows[k][0] for k in combo])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, np.array([rows[k][1] for k in combo]))
        if primal_residual(lp, x) <= 1e-9:
            best = min(best, float(lp.c @ x))
    return best


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_matches_vertex_enumeration(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n)).round(3)
    x0 = rng.uniform(0, 1, n)
    senses = list(rng.choice([LE, GE, EQ], size=m, p=[0.45, 0.45, 0.1]))
    ax = A @ x0
    b = np.array([ax[i] + (rng.uniform(0, 1) if s == LE else -rng.uniform(0, 1) if s == GE else 0.0)
                  for i, s in enumerate(senses)])
    lp = LinearProgram(rng.normal(size=n), A, senses, b, np.zeros(n), np.full(n, 2.0))
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert primal_residual(lp, sol.x) < 1e-8
    assert complementary_slackness_residual(lp, sol) < 1e-7
    assert sol.value >= dual_value(lp, sol) - 1e-7
    assert sol.value == pytest.approx(_vertex_oracle(lp), abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_weak_duality_free_variables(n, seed):
    rng = np.random.default_rng(seed)
    m = n + 2
    A = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    b = A @ x0 - rng.uniform(0, 1, m)
    # min c x s.t. A x >= b with c a positive combination of rows keeps the LP bounded
    c = rng.uniform(0.1, 1, m) @ A
    lp = LinearProgram(c, A, [GE] * m, b, np.full(n, -math.inf), np.full(n, math.inf))
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert primal_residual(lp, sol.x) < 1e-8
    assert sol.value >= dual_value(lp, sol) - 1e-7
    assert sol.value == pytest.approx(dual_value(lp, sol), abs=1e-7)


def _box_biobjective(rows):
    A = np.array([r[0] for r in rows]) if rows else np.zeros((0, 2))
    lp = LinearProgram([0.0, 0.0], A, [r[1] for r in rows], [r[2] for r in rows], [0.0, 0.0], [1.0, 1.0])
    return BiObjectiveLp([1.0, 0.0], [0.0, 1.0], lp)


def test_biobjective_segment():
    fr = solve_biobjective(_box_biobjective([([1.0, 1.0], EQ, 1.0)]))
    assert np.allclose(fr.points, [[1.0, 0.0], [0.0, 1.0]], atol=1e-8)


def test_biobjective_single_point():
    fr = solve_biobjective(_box_biobjective([([1.0, 0.0], EQ, 0.3), ([0.0, 1.0], EQ, 0.6)]))
    assert len(fr) == 1
    assert np.allclose(fr.points[0], [0.3, 0.6])


def test_biobjective_unbounded_ray():
    lp = LinearProgram([0.0, 0.0], [[1.0, 0.5]], [GE], [0.0], [-math.inf, 0.0], [math.inf, math.inf])
    fr = solve_biobjective(BiObjectiveLp([1.0, 0.0], [0.0, 1.0], lp))
    assert fr.ray is not None
    assert fr.ray[0] < 0 and fr.ray[1] > 0
    assert fr.ray[1] / -fr.ray[0] == pytest.approx(2.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_biobjective_vertices_sorted_and_supported(seed):
    rng = np.random.default_rng(seed)
    n, m = 4, 5
    A = rng.uniform(0.1, 1, size=(m, n))
    lp = LinearProgram(np.zeros(n), A, [GE] * m, np.ones(m), np.zeros(n), np.full(n, 5.0))
    c1, c2 = rng.uniform(0.1, 1, n), rng.uniform(0.1, 1, n)
    fr = solve_biobjective(BiObjectiveLp(c1, c2, lp))
    P = fr.points
    assert np.all(np.diff(P[:, 0]) < 0) and np.all(np.diff(P[:, 1]) > 0)
    for k, p in enumerate(P):
        # normal of the incident chords gives a weight vector for which p is optimal
        lo = P[k - 1] if k else p + np.array([1.0, 0.0])
        hi = P[k + 1] if k + 1 < len(P) else p + np.array([0.0, 1.0])
        w = (np.array([hi[1] - p[1], p[0] - hi[0]]) / (hi[1] - p[1] + p[0] - hi[0])
             + np.array([p[1] - lo[1], lo[0] - p[0]]) / (p[1] - lo[1] + lo[0] - p[0]))
        sol = solve_lp(lp.with_objective(w[0] * c1 + w[1] * c2))
        assert sol.value == pytest.approx(w @ p, abs=1e-8)


def test_pareto_gap_and_margin():
    fr = FrontierPolyline([[0.0, 0.0], [-1.0, 1.0], [-1.5, 2.0]])
    assert fr.pareto_gap([-1.0, 1.0]) <= 1e-12
    assert fr.pareto_gap([-0.5, 1.0]) == pytest.approx(0.5)
    assert fr.domination_margin([0.5, 1.5]) > 0
    assert fr.distance([-0.5, 0.5]) == pytest.approx(0.0, abs=1e-12)
    assert fr.contains([0.0, 3.0]) and not fr.contains([-2.0, 0.5])
