"""Command-line front end.

Every flag can also be given in a JSON config file (``--config``) whose keys
are the long flag names with dashes or underscores; flags on the command line
win. ``ACCMAX_THREADS`` caps the BLAS thread pools and is the only
environment variable read.

Errors are reported on stderr as one line ``accmax: error: <kind>: <message>``
with exit status 2 for bad input and 1 for failed computations or checks.
"""

from __future__ import annotations

import os

_threads = os.environ.get("ACCMAX_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
from dataclasses import dataclass, fields  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

COMMANDS = ("maximize", "minrisk", "evaluate", "frontier", "dglr", "verify-recursive", "simulate-path", "gen-scenarios")
INDEX_CHOICES = ("ait", "glr", "raroc")
INDEX_TO_FAMILY = {"ait": "tvar_family", "glr": "glr_surrogate_family", "raroc": "raroc_family"}


class CliError(Exception):
    """Bad input: reported with exit status 2."""


class CheckFailed(Exception):
    """A computation finished but an internal check did not pass (exit status 1)."""


@dataclass
class RunConfig:
    command: str
    scenario: str | None = None
    tree: str | None = None
    horizon: int | None = None
    index: str = "glr"
    variant: str = "original"
    x0: float = 2.0
    eps: float | None = None  # 1e-4 for maximize, 1e-3 for verify-recursive
    maxiter: int = 15
    sign_tol: float = 1e-9
    shortselling: bool = False
    pi_level: float = 0.01
    level: float | None = None
    weights: str | None = None
    q: float = 0.01
    v0: float = 0.0
    method: str = "auto"
    path: str | None = None
    depth_cap: int = 3
    wealths: str = "0.5,1,3"
    assets: int = 10
    states: int = 1000
    dof: float = 5.0
    seed: int = 42
    out: str | None = None
    trace_out: str | None = None
    csv_out: str | None = None
    svg_out: str | None = None
    json_out: str | None = None
    lp_out: str | None = None
    strategy_out: str | None = None
    quiet: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise CliError(f"unknown command {self.command!r}")
        if self.index not in INDEX_CHOICES:
            raise CliError(f"index must be one of {', '.join(INDEX_CHOICES)}")
        if self.scenario and self.tree:
            raise CliError("--scenario and --tree are mutually exclusive")
        if self.tree and self.command in ("maximize", "minrisk", "evaluate", "gen-scenarios"):
            raise CliError(f"{self.command} works on a one-period scenario model, not a tree")
        if not 0.0 < self.q <= 1.0 or not 0.0 < self.pi_level <= 1.0:
            raise CliError("tvar levels must lie in (0, 1]")
        if self.horizon is not None and self.horizon < 1:
            raise CliError("horizon must be >= 1")


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _add_common(p: argparse.ArgumentParser, tree: bool = False):
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--scenario", help="scenario file (.csv or .json); the toy market when omitted")
    if tree:
        p.add_argument("--tree", help="tree description JSON {horizon, step}")
        p.add_argument("--horizon", type=int, help="horizon of the iid tree built from --scenario")
    p.add_argument("--shortselling", action="store_true", default=None)
    p.add_argument("--quiet", action="store_true", default=None, help="no human-readable table")


def _add_bisection(p: argparse.ArgumentParser):
    p.add_argument("--index", choices=INDEX_CHOICES)
    p.add_argument("--variant", choices=("original", "modified", "mixed", "zero_level"))
    p.add_argument("--x0", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--maxiter", type=int)
    p.add_argument("--sign-tol", type=float)
    p.add_argument("--pi-level", type=float, help="tvar level of the RAROC denominator")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="accmax", description="Maximize acceptability indices and compute dynamic mean-risk frontiers")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("maximize", help="maximize an acceptability index by bisection")
    _add_common(p)
    _add_bisection(p)
    p.add_argument("--trace-out", help="trace CSV")
    p.add_argument("--json-out", help="result JSON")

    p = sub.add_parser("minrisk", help="one risk minimization at level x")
    _add_common(p)
    p.add_argument("--index", choices=INDEX_CHOICES)
    p.add_argument("--level", type=float, required=False, help="acceptability level x")
    p.add_argument("--pi-level", type=float)
    p.add_argument("--lp-out", help="write the LP in text form")
    p.add_argument("--json-out")

    p = sub.add_parser("evaluate", help="evaluate an index at given weights")
    _add_common(p)
    p.add_argument("--index", choices=INDEX_CHOICES)
    p.add_argument("--weights", help="comma-separated portfolio weights summing to 1")
    p.add_argument("--pi-level", type=float)

    p = sub.add_parser("frontier", help="dynamic mean-risk frontiers (recursive tvar)")
    _add_common(p, tree=True)
    p.add_argument("--q", type=float, help="one-step tvar level")
    p.add_argument("--csv-out")
    p.add_argument("--svg-out")

    p = sub.add_parser("dglr", help="mean-loss frontier and maximal dynamic gain-loss ratio")
    _add_common(p, tree=True)
    p.add_argument("--v0", type=float)
    p.add_argument("--method", choices=("auto", "lp", "bellman"))
    p.add_argument("--csv-out")
    p.add_argument("--svg-out")
    p.add_argument("--strategy-out", help="optimal zero-cost strategy JSON (v0 = 0)")

    p = sub.add_parser("verify-recursive", help="check constant maximal acceptability on a tree")
    _add_common(p, tree=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--depth-cap", type=int)
    p.add_argument("--wealths", help="comma-separated starting wealths")
    p.add_argument("--json-out")

    p = sub.add_parser("simulate-path", help="consistent, switching and myopic profiles along a path")
    _add_common(p, tree=True)
    p.add_argument("--q", type=float)
    p.add_argument("--path", help="comma-separated branch indices (default all zeros)")
    p.add_argument("--csv-out")
    p.add_argument("--svg-out")

    p = sub.add_parser("gen-scenarios", help="equiprobable Student-t scenarios")
    p.add_argument("--config")
    p.add_argument("--assets", type=int)
    p.add_argument("--states", type=int)
    p.add_argument("--dof", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (.csv or .json)")
    p.add_argument("--quiet", action="store_true", default=None)
    return parser


def config_from_args(argv: list[str]) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    values: dict = {}
    cfg_path = ns.pop("config", None)
    if cfg_path:
        try:
            data = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(data, dict):
            raise CliError("config file must hold a JSON object")
        known = {f.name for f in fields(RunConfig)}
        for k, v in data.items():
            key = k.replace("-", "_")
            if key == "command":
                if v != command:
                    raise CliError(f"config is for command {v!r}, not {command!r}")
                continue
            if key not in known:
                raise CliError(f"unknown config key {k!r}")
            values[key] = v
    values.update({k: v for k, v in ns.items() if v is not None})
    try:
        return RunConfig(command, **values)
    except TypeError as exc:
        raise CliError(str(exc)) from None


# ---------------------------------------------------------------------------
# helpers


def _model(cfg: RunConfig):
    from .scenario import load_scenarios, toy_model

    return load_scenarios(cfg.scenario) if cfg.scenario else toy_model()


def _tree(cfg: RunConfig, default_horizon: int):
    from .scenario import TreeModel, load_tree

    if cfg.tree:
        tree = load_tree(cfg.tree)
        if cfg.horizon is not None and cfg.horizon != tree.horizon:
            tree = TreeModel(cfg.horizon, tree.step)
        return tree
    return TreeModel(cfg.horizon or default_horizon, _model(cfg))


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise CliError(f"{what} must be comma-separated numbers") from None


def _pct(h) -> str:
    return "(" + ", ".join(f"{100 * v:.2f}%" for v in h) + ")"


def _num(v: float, digits: int = 5) -> str:
    if v is None:
        return "-"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{digits}f}"


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from None


def _say(cfg: RunConfig, text: str = "") -> None:
    if not cfg.quiet:
        print(text)


def _family(cfg: RunConfig):
    from .risk import RiskFamilySpec

    return RiskFamilySpec(INDEX_TO_FAMILY[cfg.index], cfg.pi_level)


# ---------------------------------------------------------------------------
# commands


def cmd_maximize(cfg: RunConfig) -> int:
    from .acceptability import eval_index
    from .bisection import BisectionConfig, maximize
    from .scenario import pnl_of_weights

    model = _model(cfg)
    try:
        bcfg = BisectionConfig(cfg.x0, cfg.maxiter, cfg.eps or 1e-4, cfg.variant, cfg.sign_tol)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    tr = maximize(_family(cfg), model, cfg.shortselling, bcfg)
    if cfg.trace_out:
        _write(cfg.trace_out, tr.to_csv())
    h = tr.epsilon_solution
    value = None
    if h is not None:
        value = float(eval_index(cfg.index.upper(), model, pnl_of_weights(model, h, True), cfg.pi_level))
    if cfg.json_out:
        _write(cfg.json_out, json.dumps({
            "index": cfg.index, "variant": cfg.variant, "status": tr.status,
            "final_interval": [float(v) for v in tr.final_interval],
            "epsilon_solution": None if h is None else [float(v) for v in h],
            "index_value": value, "step1_iterations": len(tr.step1_rows), "step2_iterations": len(tr.step2_rows),
        }, indent=2) + "\n")
    _say(cfg, f"{cfg.index.upper()} maximization ({cfg.variant}), x0={cfg.x0:g}, eps={bcfg.tolerance:g}, M={cfg.maxiter}")
    _say(cfg, f"{'step':>4} {'iter':>4} {'x_L':>10} {'x_U':>10} {'x':>10} {'sign':>4}")
    for r in tr.rows:
        _say(cfg, f"{r.phase:>4} {r.iteration:>4} {_num(r.x_L):>10} {_num(r.x_U):>10} {_num(r.x):>10} {r.sign:>4}")
    lo, hi = tr.final_interval
    _say(cfg, f"status: {tr.status}")
    _say(cfg, f"final interval: [{_num(lo)}, {_num(hi)}]")
    if h is not None:
        _say(cfg, f"h_eps = {_pct(h)}  index = {_num(value)}")
    return 0


def cmd_minrisk(cfg: RunConfig) -> int:
    from .lp import to_lp_text
    from .risk import build_minrisk_lp, solve_minrisk

    if cfg.level is None:
        raise CliError("minrisk needs --level")
    model = _model(cfg)
    lp = build_minrisk_lp(_family(cfg), model, cfg.level, cfg.shortselling)
    if cfg.lp_out:
        _write(cfg.lp_out, to_lp_text(lp))
    r = solve_minrisk(lp, model.n_assets)
    if r.weights is None:
        raise CheckFailed(f"risk minimization did not produce a solution (value {r.value})")
    if cfg.json_out:
        _write(cfg.json_out, json.dumps({"level": cfg.level, "value": r.value, "weights": [float(v) for v in r.weights]},
                                        indent=2) + "\n")
    _say(cfg, f"min risk at x={cfg.level:g}: {r.value:.10g}")
    _say(cfg, f"weights {_pct(r.weights)}")
    _say(cfg, f"sign: {'+' if r.value > cfg.sign_tol else '-'}")
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    from .acceptability import eval_index
    from .scenario import pnl_of_weights

    if not cfg.weights:
        raise CliError("evaluate needs --weights")
    model = _model(cfg)
    h = np.array(_floats(cfg.weights, "--weights"))
    if abs(h.sum() - 1.0) > 1e-3:
        raise CliError(f"weights sum to {h.sum():.6g}, expected 1")
    h = h / h.sum()  # rounded inputs are renormalized
    d = pnl_of_weights(model, h, cfg.shortselling)
    v = eval_index(cfg.index.upper(), model, d, cfg.pi_level)
    if cfg.quiet:
        print(repr(float(v)))
    else:
        print(f"{cfg.index.upper()} at {_pct(h)}: {float(v):.10g}")
    return 0


def cmd_frontier(cfg: RunConfig) -> int:
    from .frontier import frontiers_to_csv, max_ratio_point, meanrisk_frontiers, plot_frontiers

    tree = _tree(cfg, 2)
    seq = meanrisk_frontiers(tree, cfg.q, cfg.shortselling)
    if cfg.csv_out:
        _write(cfg.csv_out, frontiers_to_csv(seq))
    if cfg.svg_out:
        plot_frontiers(seq, cfg.svg_out, xlabel="risk", ylabel="mean")
    _say(cfg, f"mean-risk frontiers, T={tree.horizon}, q={cfg.q:g}")
    _say(cfg, f"{'t':>3} {'vertices':>8} {'max dRAROC':>11} {'mean':>9} {'risk':>9}")
    for t, F in enumerate(seq.frontiers):
        b = max_ratio_point(F, t)
        _say(cfg, f"{t:>3} {len(F.vertices):>8} {_num(b.ratio):>11} {100 * b.mean:>8.2f}% {100 * b.risk:>8.2f}%")
    return 0


def cmd_dglr(cfg: RunConfig) -> int:
    from .frontier import dglr_slope, frontiers_to_csv, intermediate_dglr_slopes, max_ratio_point
    from .frontier import meanloss_frontier_dglr, plot_frontiers

    tree = _tree(cfg, 6)
    F = meanloss_frontier_dglr(tree, cfg.v0, cfg.method)
    best = max_ratio_point(F)
    frontiers = [F]
    if cfg.v0 == 0.0 and cfg.method != "lp":
        slopes = intermediate_dglr_slopes(tree)
        from .lp import FrontierPolyline

        frontiers = [FrontierPolyline(np.zeros((1, 2)), np.array([-s, 1.0])) for s in slopes]
    if cfg.csv_out:
        _write(cfg.csv_out, frontiers_to_csv(frontiers))
    if cfg.svg_out:
        plot_frontiers(frontiers, cfg.svg_out, xlabel="expected loss", ylabel="expected P&L")
    if cfg.strategy_out:
        if cfg.v0 != 0.0:
            raise CliError("--strategy-out needs v0 = 0")
        res = dglr_slope(tree, with_strategy=True)
        if res.strategy is None:
            raise CheckFailed("no strategy with a positive gain-loss ratio")
        _write(cfg.strategy_out, res.strategy.to_json() + "\n")
    _say(cfg, f"mean-loss frontier, T={tree.horizon}, v0={cfg.v0:g}")
    if len(frontiers) > 1:
        for t, G in enumerate(frontiers):
            _say(cfg, f"  t={t}: dGLR = {_num(max_ratio_point(G, t).ratio)}")
    _say(cfg, f"dGLR_0 = {_num(best.ratio)}")
    return 0


def cmd_verify_recursive(cfg: RunConfig) -> int:
    from .bisection import BisectionConfig
    from .recursive import RecursiveIndexSpec, build_constant_proportion_strategy, one_period_max
    from .recursive import constant_strategy_index, verify_constant_acceptability

    tree = _tree(cfg, 2)
    eps = cfg.eps or 1e-3
    spec = RecursiveIndexSpec()
    try:
        bcfg = BisectionConfig(cfg.x0, cfg.maxiter, eps, "original", cfg.sign_tol)
        rep = verify_constant_acceptability(spec, tree, eps, cfg.depth_cap, tuple(_floats(cfg.wealths, "--wealths")),
                                            bcfg)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    _, h_star, _ = one_period_max(spec, tree.step, cfg.shortselling, eps)
    achieved = constant_strategy_index(tree, h_star, 1.0, spec)
    build_constant_proportion_strategy(tree, h_star)
    out = json.loads(rep.to_json())
    out["h_star"] = [float(v) for v in h_star]
    out["constant_strategy_index"] = achieved
    if cfg.json_out:
        _write(cfg.json_out, json.dumps(out, indent=2) + "\n")
    _say(cfg, f"constant acceptability check, T={tree.horizon}, eps={eps:g}")
    _say(cfg, f"static optimum {rep.alpha_static:.5f}, max spread {rep.max_spread:.2e}, LPs {rep.lp_count}")
    _say(cfg, f"h* = {_pct(h_star)}, index of constant strategy {achieved:.5f}")
    if not rep.passed:
        raise CheckFailed(f"{len(rep.discrepancies)} node(s) disagree: {rep.discrepancies[0]}")
    _say(cfg, "passed")
    return 0


def cmd_simulate_path(cfg: RunConfig) -> int:
    import csv
    import io

    from .frontier import meanrisk_frontiers, moving_scalarization, plot_frontiers, simulate_policies

    tree = _tree(cfg, 6)
    path = [int(v) for v in _floats(cfg.path, "--path")] if cfg.path else None
    seq = meanrisk_frontiers(tree, cfg.q, cfg.shortselling)
    try:
        prof = simulate_policies(tree, seq, path, cfg.q)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    rows = []
    for t, (c, s, m) in enumerate(prof):
        lam = None
        if c.mean > 0 and c.risk > 0:
            try:
                lam = moving_scalarization(seq[t], c).lambda_
            except ValueError:
                lam = None
        for name, pt in (("consistent", c), ("switching", s), ("myopic", m)):
            rows.append((t, name, pt.mean, pt.risk, pt.ratio, seq[t].pareto_gap(pt.objective),
                         lam if name == "consistent" else None))
    if cfg.csv_out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "policy", "mean", "risk", "draroc", "pareto_gap", "lambda"])
        for r in rows:
            w.writerow([r[0], r[1]] + ["" if v is None else repr(float(v)) for v in r[2:]])
        _write(cfg.csv_out, buf.getvalue())
    if cfg.svg_out:
        plot_frontiers(seq, cfg.svg_out, profiles=prof)
    _say(cfg, f"{'t':>3} {'policy':>10} {'mean':>8} {'risk':>8} {'dRAROC':>8} {'efficient':>9} {'lambda':>7}")
    for t, name, mean, risk, ratio, gap, lam in rows:
        eff = "yes" if gap <= 1e-6 else "no"
        _say(cfg, f"{t:>3} {name:>10} {100 * mean:>7.2f}% {100 * risk:>7.2f}% {_num(ratio, 4):>8} {eff:>9} "
                  f"{_num(lam, 3) if lam is not None else '-':>7}")
    return 0


def cmd_gen_scenarios(cfg: RunConfig) -> int:
    from .scenario import generate_student_t, save_scenarios, scenario_to_csv

    model = generate_student_t(cfg.assets, cfg.states, cfg.dof, seed=cfg.seed)
    if cfg.out:
        save_scenarios(model, cfg.out)
        _say(cfg, f"wrote {cfg.states} states x {cfg.assets} assets to {cfg.out}")
    else:
        sys.stdout.write(scenario_to_csv(model))
    return 0


HANDLERS = {
    "maximize": cmd_maximize,
    "minrisk": cmd_minrisk,
    "evaluate": cmd_evaluate,
    "frontier": cmd_frontier,
    "dglr": cmd_dglr,
    "verify-recursive": cmd_verify_recursive,
    "simulate-path": cmd_simulate_path,
    "gen-scenarios": cmd_gen_scenarios,
}


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def _fail(kind: str, msg: str, status: int) -> int:
    msg = " ".join(str(msg).split())
    print(f"accmax: error: {kind}: {msg}", file=sys.stderr)
    return status


def main(argv: list[str] | None = None) -> int:
    from .lp import LpError
    from .scenario import ScenarioError

    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return run(config_from_args(argv))
    except CliError as exc:
        return _fail("usage", exc, 2)
    except ScenarioError as exc:
        return _fail("input", exc, 2)
    except CheckFailed as exc:
        return _fail("check", exc, 1)
    except LpError as exc:
        return _fail("solver", exc, 1)
    except Exception as exc:  # noqa: BLE001 - one-line report for any module failure
        return _fail(type(exc).__name__, exc, 1)


if __name__ == "__main__":
    sys.exit(main())
