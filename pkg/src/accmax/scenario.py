"""Finite one-period markets and iid multinomial scenario trees."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

PROB_TOL = 1e-9


class ScenarioError(ValueError):
    """Invalid or unparsable scenario data."""


@dataclass(frozen=True, eq=False)
class ScenarioModel:
    """One-period market: state probabilities and a d x |Omega| gross-return matrix."""

    probabilities: np.ndarray
    returns: np.ndarray
    asset_names: tuple[str, ...] = ()

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).reshape(-1)
        R = np.array(self.returns, dtype=float)
        if R.ndim == 1:
            R = R.reshape(1, -1)
        if R.ndim != 2 or R.shape[1] != p.size:
            raise ScenarioError(f"returns must be d x {p.size}, got shape {R.shape}")
        if p.size == 0 or R.shape[0] == 0:
            raise ScenarioError("need at least one state and one asset")
        if np.any(~np.isfinite(p)) or np.any(p <= 0):
            k = int(np.argmax(~np.isfinite(p) | (p <= 0)))
            raise ScenarioError(f"state {k}: probability must be strictly positive (got {p[k]})")
        total = float(p.sum())
        if abs(total - 1.0) > PROB_TOL:
            raise ScenarioError(f"probabilities sum to {total:.12g}")
        if np.any(~np.isfinite(R)) or np.any(R <= 0):
            j, k = np.argwhere(~np.isfinite(R) | (R <= 0))[0]
            raise ScenarioError(f"state {k}, asset {j}: return must be strictly positive (got {R[j, k]})")
        p.setflags(write=False)
        R.setflags(write=False)
        names = tuple(self.asset_names) or tuple(f"a{j + 1}" for j in range(R.shape[0]))
        if len(names) != R.shape[0]:
            raise ScenarioError("one asset name per return row")
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "returns", R)
        object.__setattr__(self, "asset_names", names)

    @property
    def n_states(self) -> int:
        return self.probabilities.size

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ScenarioModel):
            return NotImplemented
        return (
            np.array_equal(self.probabilities, other.probabilities)
            and np.array_equal(self.returns, other.returns)
            and self.asset_names == other.asset_names
        )

    def to_dict(self) -> dict:
        return {
            "assets": list(self.asset_names),
            "probabilities": self.probabilities.tolist(),
            "returns": self.returns.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioModel":
        try:
            return cls(np.asarray(data["probabilities"], dtype=float), np.asarray(data["returns"], dtype=float),
                       tuple(data.get("assets", ())))
        except KeyError as exc:
            raise ScenarioError(f"missing field {exc}") from None


@dataclass(frozen=True)
class PnlVector:
    """State-indexed profit and loss of a position."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


Node = tuple[int, ...]


@dataclass(frozen=True)
class TreeModel:
    """iid multinomial tree: every node branches with the one-step ``step`` model.

    Nodes are tuples of branch indices; the root is ``()``. ``overrides`` maps
    a node to a replacement return matrix for its branches and exists only to
    build deliberately non-iid trees for negative controls.
    """

    horizon: int
    step: ScenarioModel
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ScenarioError("horizon must be an integer >= 1")
        for node, R in self.overrides.items():
            R = np.asarray(R, dtype=float)
            if R.shape != self.step.returns.shape or np.any(R <= 0):
                raise ScenarioError(f"bad override at node {node}")

    @property
    def branching(self) -> int:
        return self.step.n_states

    def returns_at(self, node: Node) -> np.ndarray:
        """d x branching return matrix for the branches leaving ``node``."""
        R = self.overrides.get(tuple(node))
        return self.step.returns if R is None else np.asarray(R, dtype=float)

    def nodes_at(self, depth: int) -> Iterator[Node]:
        if not 0 <= depth <= self.horizon:
            raise ScenarioError(f"depth {depth} outside 0..{self.horizon}")
        yield from _product(self.branching, depth)

    def n_nodes_at(self, depth: int) -> int:
        return self.branching**depth

    def children(self, node: Node) -> list[Node]:
        return [tuple(node) + (i,) for i in range(self.branching)]

    def path_probability(self, node: Node) -> float:
        p = self.step.probabilities
        return float(np.prod([p[i] for i in node])) if node else 1.0

    def leaves_under(self, node: Node) -> Iterator[tuple[Node, float]]:
        """Leaves below ``node`` with their conditional probabilities."""
        node = tuple(node)
        rest = self.horizon - len(node)
        p = self.step.probabilities
        for tail in _product(self.branching, rest):
            yield node + tail, float(np.prod([p[i] for i in tail])) if tail else 1.0

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "step": self.step.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "TreeModel":
        try:
            return cls(int(data["horizon"]), ScenarioModel.from_dict(data["step"]))
        except KeyError as exc:
            raise ScenarioError(f"missing field {exc}") from None


def _product(k: int, depth: int) -> Iterator[Node]:
    if depth == 0:
        yield ()
        return
    for head in _product(k, depth - 1):
        for i in range(k):
            yield head + (i,)


# ---------------------------------------------------------------------------
# the toy market


TOY_RETURNS = np.array(
    [
        [1.04, 1.045, 0.98, 0.985],
        [1.045, 0.975, 1.055, 0.98],
    ]
)


def toy_model() -> ScenarioModel:
    """Two-asset, four-state toy market with uniform state probabilities."""
    return ScenarioModel(np.full(4, 0.25), TOY_RETURNS, ("asset1", "asset2"))


def toy_tree(horizon: int) -> TreeModel:
    return TreeModel(horizon, toy_model())


# ---------------------------------------------------------------------------
# I/O


def load_scenarios(path, format: str | None = None) -> ScenarioModel:
    """Read a scenario file (CSV rows = states, or JSON mirroring :class:`ScenarioModel`)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
        if "horizon" in data:
            data = data["step"]
        return ScenarioModel.from_dict(data)
    if fmt == "csv":
        return parse_scenario_csv(text, source=str(path))
    raise ScenarioError(f"unknown scenario format {fmt!r}")


def parse_scenario_csv(text: str, source: str = "<csv>") -> ScenarioModel:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ScenarioError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 3 or header[0] != "state" or header[1] != "prob" or not all(h.startswith("r_") for h in header[2:]):
        raise ScenarioError(f"{source}: header must be 'state,prob,r_<asset>,...'")
    names = tuple(h[2:] for h in header[2:])
    probs, rets = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ScenarioError(f"{source}: row {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            vals = [float(c) for c in row[1:]]
        except ValueError:
            raise ScenarioError(f"{source}: row {lineno}: non-numeric field") from None
        if vals[0] <= 0 or not math.isfinite(vals[0]):
            raise ScenarioError(f"{source}: row {lineno}, column prob: probability must be positive")
        for k, r in enumerate(vals[1:]):
            if not r > 0:
                raise ScenarioError(f"{source}: row {lineno}, column {header[k + 2]}: return must be strictly positive")
        probs.append(vals[0])
        rets.append(vals[1:])
    total = sum(probs)
    if abs(total - 1.0) > PROB_TOL:
        raise ScenarioError(f"{source}: probabilities sum to {total:.12g}")
    return ScenarioModel(np.array(probs), np.array(rets).T, names)


def scenario_to_csv(model: ScenarioModel) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["state", "prob"] + [f"r_{n}" for n in model.asset_names])
    for k in range(model.n_states):
        w.writerow([k + 1, repr(float(model.probabilities[k]))] + [repr(float(r)) for r in model.returns[:, k]])
    return out.getvalue()


def save_scenarios(model: ScenarioModel, path, format: str | None = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "json":
        path.write_text(json.dumps(model.to_dict(), indent=1) + "\n", encoding="utf-8")
    elif fmt == "csv":
        path.write_text(scenario_to_csv(model), encoding="utf-8")
    else:
        raise ScenarioError(f"unknown scenario format {fmt!r}")


def load_tree(path) -> TreeModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read tree file {path}: {exc}") from None
    return TreeModel.from_dict(data)


# ---------------------------------------------------------------------------
# generation and P&L


DEFAULT_DOF = 5.0
DEFAULT_DRIFT = 1.002
DEFAULT_SCALE = 0.0004
RETURN_FLOOR = 1e-4


def generate_student_t(
    n_assets: int,
    n_states: int,
    dof: float = DEFAULT_DOF,
    location=None,
    scale=None,
    seed: int = 0,
) -> ScenarioModel:
    """Equiprobable states drawn from a multivariate Student-t law.

    Draws below ``RETURN_FLOOR`` are clipped up to it so that every gross
    return stays strictly positive.
    """
    if n_assets < 1 or n_states < 1:
        raise ScenarioError("need at least one asset and one state")
    if not dof > 2:
        raise ScenarioError("degrees of freedom must exceed 2")
    loc = np.full(n_assets, DEFAULT_DRIFT) if location is None else np.broadcast_to(np.asarray(location, float), (n_assets,))
    S = DEFAULT_SCALE * np.eye(n_assets) if scale is None else np.asarray(scale, dtype=float)
    if S.shape != (n_assets, n_assets) or not np.allclose(S, S.T):
        raise ScenarioError("scale matrix must be symmetric d x d")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise ScenarioError("scale matrix is not positive definite") from None
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_states, n_assets)) @ L.T
    w = rng.chisquare(dof, size=n_states) / dof
    draws = loc + z / np.sqrt(w)[:, None]
    draws = np.maximum(draws, RETURN_FLOOR)
    return ScenarioModel(np.full(n_states, 1.0 / n_states), draws.T)


WEIGHT_TOL = 1e-10


def check_weights(h, n_assets: int, shortselling: bool, budget: float = 1.0) -> np.ndarray:
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != n_assets:
        raise ScenarioError(f"expected {n_assets} weights, got {h.size}")
    if abs(h.sum() - budget) > WEIGHT_TOL * max(1.0, abs(budget)):
        raise ScenarioError(f"weights sum to {h.sum():.12g}, expected {budget:g}")
    if not shortselling and np.any(h < -WEIGHT_TOL):
        raise ScenarioError("negative weight with short selling disallowed")
    return h


def pnl_of_weights(model: ScenarioModel, h, shortselling: bool = False) -> PnlVector:
    """P&L ``R^T h - 1`` of a unit-budget portfolio."""
    h = check_weights(h, model.n_assets, shortselling)
    return PnlVector(model.returns.T @ h - 1.0)
