"""Direct evaluation of the static acceptability indices AIT, GLR and RAROC.

Ratios follow the convention ``a / 0 = inf`` for ``a >= 0``, so a position
without losses is infinitely acceptable. ``inf`` is a plain float infinity.
"""

from __future__ import annotations

import math

import numpy as np

from .risk import RiskFamilySpec, _values, expected_loss, expected_shortfall_part, tvar
from .scenario import ScenarioModel

INDEX_KINDS = ("AIT", "GLR", "RAROC")


class AcceptabilityValue(float):
    """A nonnegative extended real tagged with the index that produced it."""

    index_kind: str

    def __new__(cls, value: float, index_kind: str):
        if index_kind not in INDEX_KINDS:
            raise ValueError(f"unknown index {index_kind!r}")
        if not value >= 0:
            raise ValueError(f"acceptability must be nonnegative, got {value}")
        obj = super().__new__(cls, value)
        obj.index_kind = index_kind
        return obj

    def __repr__(self):
        return f"{self.index_kind}({float(self)!r})"


def _ratio(num: float, den: float) -> float:
    if den <= 0.0:
        return math.inf if num >= 0.0 else 0.0
    return max(num, 0.0) / den


def eval_glr(model: ScenarioModel, d) -> AcceptabilityValue:
    """Gain-loss ratio ``E[D]^+ / E[D^-]``."""
    mean = -expected_loss(model, d)
    down = expected_shortfall_part(model, d)
    if mean < 0.0:
        return AcceptabilityValue(0.0, "GLR")
    return AcceptabilityValue(_ratio(mean, down), "GLR")


def eval_raroc(model: ScenarioModel, d, pi_level: float = 0.01) -> AcceptabilityValue:
    """``E[D]^+ / TVaR_{pi_level}(D)^+``."""
    if not 0.0 < pi_level <= 1.0:
        raise ValueError("pi_level must lie in (0, 1]")
    mean = -expected_loss(model, d)
    pi = tvar(model, d, pi_level)
    if pi <= 0.0:
        # E[-D] <= pi, so the mean is nonnegative here
        return AcceptabilityValue(math.inf, "RAROC")
    return AcceptabilityValue(max(mean, 0.0) / pi, "RAROC")


def eval_ait(model: ScenarioModel, d) -> AcceptabilityValue:
    """``sup{x : TVaR_{1/(1+x)}(D) <= 0}``, computed exactly.

    ``G(q) = q TVaR_q(D)`` is concave and piecewise linear with slope equal to
    the loss of the atom being entered, so the smallest ``q*`` with
    ``G(q*) = 0`` is read off the first breakpoint where ``G`` turns nonpositive.
    """
    loss = -_values(d)
    p = model.probabilities
    order = np.argsort(-loss, kind="stable")
    loss, p = loss[order], p[order]
    if loss[0] <= 0.0:
        return AcceptabilityValue(math.inf, "AIT")
    if float(loss @ p) > 0.0:
        return AcceptabilityValue(0.0, "AIT")
    g, cum = 0.0, 0.0
    for lk, pk in zip(loss, p):
        g_next = g + lk * pk
        if g_next <= 0.0:
            q_star = cum + g / -lk
            return AcceptabilityValue(1.0 / q_star - 1.0, "AIT")
        g, cum = g_next, cum + pk
    return AcceptabilityValue(0.0, "AIT")  # not reached: G(1) <= 0 above


def eval_index(kind: str, model: ScenarioModel, d, pi_level: float = 0.01) -> AcceptabilityValue:
    kind = kind.upper()
    if kind == "AIT":
        return eval_ait(model, d)
    if kind == "GLR":
        return eval_glr(model, d)
    if kind == "RAROC":
        return eval_raroc(model, d, pi_level)
    raise ValueError(f"unknown index {kind!r}")


def level_of_zero_risk(spec: RiskFamilySpec, model: ScenarioModel, d) -> float:
    """Largest ``y`` with ``rho^y(D) <= 0``; closed form, no optimization.

    The expectile family shares its acceptance sets with the gain-loss ratio,
    so both return the GLR value.
    """
    if spec.kind == "tvar_family":
        return float(eval_ait(model, d))
    if spec.kind == "raroc_family":
        return float(eval_raroc(model, d, spec.base_level))
    return float(eval_glr(model, d))


INDEX_FAMILY = {
    "AIT": RiskFamilySpec("tvar_family"),
    "GLR": RiskFamilySpec("glr_surrogate_family"),
    "RAROC": RiskFamilySpec("raroc_family"),
}
