"""Static coherent risk measures and the level-x risk-minimization LPs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lp import EQ, GE, LinearProgram, LpBuilder, LpSolution, solve_lp
from .scenario import PnlVector, ScenarioModel

KINDS = ("tvar_family", "evar_family", "glr_surrogate_family", "raroc_family")


class UnsupportedEncodingError(ValueError):
    """The requested family has no linear-programming encoding."""


def _values(d) -> np.ndarray:
    return d.values if isinstance(d, PnlVector) else np.asarray(d, dtype=float).reshape(-1)


# ---------------------------------------------------------------------------
# single-position evaluators


def tvar(model: ScenarioModel, d, q: float) -> float:
    """Tail value-at-risk: average loss over the worst probability mass ``q``.

    ``q = 0`` is accepted and gives the worst-case loss (the ``q -> 0`` limit).
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"tvar level must lie in [0, 1], got {q}")
    loss = -_values(d)
    p = model.probabilities
    order = np.argsort(-loss, kind="stable")
    loss, p = loss[order], p[order]
    if q == 0.0:
        return float(loss[0])
    cum = np.cumsum(p)
    k = int(np.searchsorted(cum, q - 1e-15))  # first atom reaching mass q
    k = min(k, loss.size - 1)
    full = float(loss[:k] @ p[:k])
    rest = q - (cum[k - 1] if k else 0.0)
    return (full + max(rest, 0.0) * loss[k]) / q


def tvar_ru(model: ScenarioModel, d, q: float) -> float:
    """TVaR through the Rockafellar-Uryasev minimization, solved as an LP."""
    loss = -_values(d)
    p = model.probabilities
    n = loss.size
    b = LpBuilder()
    z = b.add_var("z", lower=-math.inf)
    s = b.add_vars("s", n)
    for w in range(n):
        b.add_row({int(s[w]): 1.0, z: 1.0}, GE, float(loss[w]))
    c = b.objective({z: 1.0, **{int(s[w]): p[w] / q for w in range(n)}})
    sol = solve_lp(b.build(c))
    return float(sol.value)


def var(model: ScenarioModel, d, p: float) -> float:
    """Value-at-risk ``inf{r : P(D + r < 0) <= p}`` on a discrete model."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"var level must lie in (0, 1), got {p}")
    v = _values(d)
    vals, inv = np.unique(v, return_inverse=True)
    mass = np.bincount(inv, weights=model.probabilities, minlength=vals.size)
    below = np.concatenate([[0.0], np.cumsum(mass)[:-1]])  # P(D < vals[j])
    j = int(np.nonzero(below <= p + 1e-12)[0][-1])
    return float(-vals[j])


def expectile(model: ScenarioModel, d, q: float) -> float:
    """The ``e`` solving ``q E[(D-e)^+] = (1-q) E[(D-e)^-]``, found exactly."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"expectile level must lie in (0, 1), got {q}")
    v = _values(d)
    order = np.argsort(v, kind="stable")
    v, p = v[order], model.probabilities[order]
    pv = p * v
    # below set = atoms 0..j; the FOC is linear in e between v[j] and v[j+1]
    P_b, S_b = np.cumsum(p), np.cumsum(pv)
    P_a, S_a = P_b[-1] - P_b, S_b[-1] - S_b
    for j in range(v.size):
        e = (q * S_a[j] + (1 - q) * S_b[j]) / (q * P_a[j] + (1 - q) * P_b[j])
        hi = v[j + 1] if j + 1 < v.size else math.inf
        if e <= hi:
            return float(min(max(e, v[0]), v[-1]))
    return float(v[-1])


def expectile_residual(model: ScenarioModel, d, q: float, e: float) -> float:
    v = _values(d)
    p = model.probabilities
    return float(q * p @ np.maximum(v - e, 0) - (1 - q) * p @ np.maximum(e - v, 0))


def expected_loss(model: ScenarioModel, d) -> float:
    """``E[-D]``."""
    return float(-model.probabilities @ _values(d))


def expected_shortfall_part(model: ScenarioModel, d) -> float:
    """``E[D^-]``."""
    return float(model.probabilities @ np.maximum(-_values(d), 0.0))


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class RiskFamilySpec:
    """An increasing family ``x -> rho^x`` of risk functionals.

    ``level(x)`` maps the acceptability level onto the inner parameter:
    ``1/(1+x)`` for the tvar and raroc families, ``1/(2+x)`` for the expectile
    and gain-loss families. ``base_level`` is the tvar level of the RAROC
    denominator.
    """

    kind: str
    base_level: float = 0.01

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if not 0.0 < self.base_level <= 1.0:
            raise ValueError("base_level must lie in (0, 1]")

    @property
    def _shift(self) -> float:
        return 1.0 if self.kind in ("tvar_family", "raroc_family") else 2.0

    def level(self, x: float) -> float:
        return 0.0 if math.isinf(x) else 1.0 / (self._shift + x)

    def x_of_level(self, q: float) -> float:
        return math.inf if q == 0.0 else 1.0 / q - self._shift

    @property
    def level_range(self) -> tuple[float, float]:
        """Level values corresponding to ``x = inf`` and ``x = 0``."""
        return 0.0, 1.0 / self._shift


TVAR = RiskFamilySpec("tvar_family")
GLR = RiskFamilySpec("glr_surrogate_family")
RAROC = RiskFamilySpec("raroc_family")
EVAR = RiskFamilySpec("evar_family")


@dataclass(frozen=True)
class RiskValue:
    value: float
    level: float


def family_risk(spec: RiskFamilySpec, model: ScenarioModel, d, x: float) -> float:
    """``rho^x(D)`` for the family ``spec``."""
    if not x > 0:
        raise ValueError(f"family level x must be positive, got {x}")
    if spec.kind == "tvar_family":
        return tvar(model, d, spec.level(x))
    if spec.kind == "evar_family":
        return -expectile(model, d, spec.level(x))
    if spec.kind == "glr_surrogate_family":
        return expected_loss(model, d) + x * expected_shortfall_part(model, d)
    pi = tvar(model, d, spec.base_level)
    return min(pi, (expected_loss(model, d) + x * pi) / (1.0 + x))


def _combo(spec: RiskFamilySpec, *, x: float | None = None, q: float | None = None):
    """Weights ``(a, b, c, tail)`` of ``a E[-D] + b E[D^-] + c TVaR_tail(D)``.

    With ``x`` this is ``rho^x`` itself; with a level ``q`` it is a positive
    multiple of ``rho^{x(q)}`` that stays finite at both ends of the level
    range (``q = 0`` means ``x = inf``), which is what level-space bisection
    needs.
    """
    k = spec.kind
    if k == "evar_family":
        raise UnsupportedEncodingError("expectile minimization is not LP-encodable; use glr_surrogate_family")
    if x is not None:
        if k == "tvar_family":
            return 0.0, 0.0, 1.0, spec.level(x)
        if k == "glr_surrogate_family":
            return 1.0, x, 0.0, 1.0
        return 1.0 / (1.0 + x), 0.0, x / (1.0 + x), spec.base_level
    if k == "tvar_family":
        return 0.0, 0.0, 1.0, q
    if k == "glr_surrogate_family":
        return q, 1.0 - 2.0 * q, 0.0, 1.0
    return q, 0.0, 1.0 - q, spec.base_level


def level_risk(spec: RiskFamilySpec, model: ScenarioModel, d, q: float) -> float:
    """Level-normalized family value; same sign as ``rho^{x(q)}(D)``."""
    a, b, c, tail = _combo(spec, q=q)
    out = a * expected_loss(model, d) + b * expected_shortfall_part(model, d)
    if c:
        out += c * tvar(model, d, tail)
    return out


# ---------------------------------------------------------------------------
# LP encodings


def _combo_lp(model: ScenarioModel, shortselling: bool, a: float, b: float, c: float, tail: float) -> LinearProgram:
    """Minimize ``a E[-D] + b E[D^-] + c TVaR_tail(D)`` over ``D = R^T h - 1``, ``1^T h = 1``.

    The first ``d`` LP variables are the weights ``h``.
    """
    R, p = model.returns, model.probabilities
    n_assets, n = R.shape
    bld = LpBuilder()
    h = bld.add_vars("h", n_assets, lower=-math.inf if shortselling else 0.0)
    bld.add_row({int(j): 1.0 for j in h}, EQ, 1.0)
    obj: dict[int, float] = {}

    def add(i, v):
        obj[i] = obj.get(i, 0.0) + v

    # loss in state w: 1 - R[:, w] @ h; E[-D] = 1 - (R p) @ h, constant dropped
    const = a
    if a:
        for j in range(n_assets):
            add(int(h[j]), -a * float(R[j] @ p))
    if b:
        m = bld.add_vars("m", n)
        for w in range(n):
            # m_w >= 1 - R_w h
            bld.add_row({int(m[w]): 1.0, **{int(h[j]): float(R[j, w]) for j in range(n_assets)}}, GE, 1.0)
            add(int(m[w]), b * p[w])
    if c:
        if tail == 0.0:
            t = bld.add_var("t", lower=-math.inf)
            for w in range(n):
                bld.add_row({t: 1.0, **{int(h[j]): float(R[j, w]) for j in range(n_assets)}}, GE, 1.0)
            add(t, c)
        else:
            z = bld.add_var("z", lower=-math.inf)
            s = bld.add_vars("s", n)
            for w in range(n):
                # s_w >= 1 - R_w h - z
                bld.add_row({int(s[w]): 1.0, z: 1.0, **{int(h[j]): float(R[j, w]) for j in range(n_assets)}}, GE, 1.0)
                add(int(s[w]), c * p[w] / tail)
            add(z, c)
    return bld.build(bld.objective(obj), offset=const)


def build_minrisk_lp(spec: RiskFamilySpec, model: ScenarioModel, x: float, shortselling: bool = False) -> LinearProgram:
    """LP whose optimal value is ``p(x) = min_D rho^x(D)``.

    Variables start with the portfolio weights ``h``. TVaR is encoded through
    the Rockafellar-Uryasev auxiliaries, ``E[D^-]`` through per-state shortfall
    variables, and the RAROC family through its affine form (valid because
    ``E[-D] <= TVaR``).
    """
    if not x > 0:
        raise ValueError(f"family level x must be positive, got {x}")
    return _combo_lp(model, shortselling, *_combo(spec, x=x))


def build_level_lp(spec: RiskFamilySpec, model: ScenarioModel, q: float, shortselling: bool = False) -> LinearProgram:
    """Level-normalized counterpart of :func:`build_minrisk_lp` (``q`` in the level range)."""
    lo, hi = spec.level_range
    if not lo <= q <= hi:
        raise ValueError(f"level {q} outside [{lo}, {hi}]")
    return _combo_lp(model, shortselling, *_combo(spec, q=q))


@dataclass(frozen=True)
class MinRisk:
    """Outcome of one risk minimization: value ``p`` and the minimizing weights."""

    value: float
    weights: np.ndarray | None
    solution: LpSolution


def solve_minrisk(lp: LinearProgram, n_assets: int) -> MinRisk:
    sol = solve_lp(lp)
    if sol.status == "unbounded":
        return MinRisk(-math.inf, None, sol)
    if not sol.optimal:
        raise RuntimeError(f"risk minimization failed: {sol.status} {sol.message}")
    return MinRisk(sol.value, sol.x[:n_assets].copy(), sol)


def minimize_risk(spec: RiskFamilySpec, model: ScenarioModel, x: float, shortselling: bool = False) -> MinRisk:
    return solve_minrisk(build_minrisk_lp(spec, model, x, shortselling), model.n_assets)


def minimize_level_risk(spec: RiskFamilySpec, model: ScenarioModel, q: float, shortselling: bool = False) -> MinRisk:
    return solve_minrisk(build_level_lp(spec, model, q, shortselling), model.n_assets)
