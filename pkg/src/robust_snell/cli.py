"""Command line interface: config ingestion, dispatch, bit-exact emission.

Subcommands: ``solve``, ``oracle``, ``decompose``, ``price``.  Every run
writes ``<out>/summary.json`` and ``<out>/nodes.csv``.  All numeric output is
printed with 17 significant digits so results round-trip exactly; identical
configs produce byte-identical outputs.

Exit codes: 0 success, 2 invalid configuration, 3 enumeration size guard
exceeded, 4 unattained supremum in equivalent mode.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .decomposition import flat_off_check, universal_decompose
from .errors import (
    ConfigError,
    InvalidFamilyError,
    InvalidParamsError,
    InvalidPriorSetError,
    InvalidRuleError,
    InvalidTreeError,
    NotMeasurableError,
    RobustSnellError,
    SizeGuardError,
    UnattainedSupremumError,
)
from .filtration import AdaptedFamily, EventTree, NodeRecord, validate_tree
from .oracle import crosscheck
from .pricing import CrrParams, build_crr_barrier_tree, drift_ambiguity_priors, knockin_payoff
from .priors import MODE_CLOSURE, MODE_EQUIVALENT, PriorSet
from .snell import (
    check_optimality_certificate,
    extract_optimal_prior,
    solve,
    u_alpha,
    u_star,
)

CSV_COLUMNS = [
    "node_id",
    "time",
    "parent_id",
    "q",
    "state_S",
    "state_hit",
    "Y",
    "R",
    "R_plus",
    "stop",
    "u_star_stop",
    "argmax_extreme",
    "z_star",
    "M",
    "C",
    "K",
    "A_q",
]


@dataclass
class RunConfig:
    """Parsed and validated run configuration."""

    tree: EventTree
    payoff: AdaptedFamily
    priors: PriorSet
    mode: str
    alphas: tuple[float, ...]
    v: str
    tolerance: float
    seed: int
    crr: CrrParams | None = None


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _json_value(value, indent: int) -> str:
    pad = " " * indent
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt(value)
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        parts = [
            f'{pad}  {json.dumps(str(k))}: {_json_value(v, indent + 2)}'
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        parts = [f"{pad}  {_json_value(v, indent + 2)}" for v in value]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def write_summary(outdir: Path, summary: Mapping[str, object]) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    text = _json_value(summary, 0) + "\n"
    (outdir / "summary.json").write_text(text, encoding="utf-8")


def write_nodes_csv(
    outdir: Path,
    tree: EventTree,
    columns: Mapping[str, Mapping[str, object]],
) -> None:
    """Emit one row per node in tree order; missing fields are left empty."""
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "nodes.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for n in tree.nodes():
            rec = tree.node(n)
            row: list[str] = [
                n,
                str(rec.time),
                rec.parent if rec.parent is not None else "",
                _fmt(rec.q) if rec.q is not None else "",
                _fmt(rec.states["S"]) if "S" in rec.states else "",
                _fmt(rec.states["hit"]) if "hit" in rec.states else "",
            ]
            for name in CSV_COLUMNS[6:]:
                col = columns.get(name)
                if col is None or n not in col:
                    row.append("")
                    continue
                value = col[n]
                if isinstance(value, bool):
                    row.append("1" if value else "0")
                elif isinstance(value, int):
                    row.append(str(value))
                else:
                    row.append(_fmt(value))
            writer.writerow(row)


# -- config parsing -----------------------------------------------------


def _parse_tree_block(block: Mapping) -> tuple[EventTree, AdaptedFamily]:
    try:
        horizon = int(block["horizon"])
        node_dicts = block["nodes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"tree block missing horizon or nodes: {exc}") from exc
    records = []
    payoff = {}
    for nd in node_dicts:
        try:
            node_id = str(nd["id"])
            time = int(nd["time"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"node entry missing id or time: {nd!r}") from exc
        if "Y" not in nd:
            raise ConfigError(f"node {node_id!r} has no payoff value Y")
        records.append(
            NodeRecord(
                id=node_id,
                time=time,
                parent=nd.get("parent"),
                q=float(nd["q"]) if "q" in nd else None,
                states={k: float(v) for k, v in nd.get("states", {}).items()},
            )
        )
        payoff[node_id] = float(nd["Y"])
    try:
        tree = EventTree(horizon=horizon, records=records)
    except InvalidTreeError as exc:
        raise ConfigError(str(exc)) from exc
    report = validate_tree(tree)
    if report:
        raise ConfigError("; ".join(report))
    return tree, AdaptedFamily(payoff)


def _parse_priors_block(block: Mapping, tree: EventTree, mode: str) -> PriorSet:
    if "node_extremes" in block:
        mapping = block["node_extremes"]
        pts = {}
        for node_id, extremes in mapping.items():
            if node_id not in tree:
                raise ConfigError(f"priors reference unknown node {node_id!r}")
            pts[node_id] = [tuple(float(x) for x in d) for d in extremes]
        return PriorSet(extreme_points=pts, mode=mode)
    if "interval_up_probability" in block:
        interval = block["interval_up_probability"]
        try:
            lo = float(interval["lo"])
            hi = float(interval["hi"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("interval_up_probability needs lo and hi") from exc
        if not (0 < lo <= hi < 1):
            raise ConfigError(f"up-probability interval [{lo:g}, {hi:g}] invalid")
        pts = {}
        for n in tree.decision_nodes(tree.root):
            children = tree.children(n)
            if len(children) != 2:
                raise ConfigError(
                    f"interval_up_probability requires binary nodes; node {n!r} "
                    f"has {len(children)} children"
                )
            q1, q2 = tree.q_vector(n)
            ps = [lo] if lo == hi else [lo, hi]
            pts[n] = [(p / q1, (1.0 - p) / q2) for p in ps]
        return PriorSet(extreme_points=pts, mode=mode)
    raise ConfigError("priors block needs node_extremes or interval_up_probability")


def parse_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")

    has_tree = "tree" in raw
    has_crr = "crr" in raw
    if has_tree == has_crr:
        raise ConfigError("config must contain exactly one of: tree, crr")

    mode = raw.get("mode", MODE_CLOSURE)
    if mode not in (MODE_CLOSURE, MODE_EQUIVALENT):
        raise ConfigError(f"unknown mode {mode!r}")
    alphas = tuple(float(a) for a in raw.get("alphas", []))
    for a in alphas:
        if not 0 < a <= 1:
            raise ConfigError(f"alpha {a:g} outside (0, 1]")
    tolerance = float(raw.get("tolerance", 1e-9))
    if tolerance <= 0:
        raise ConfigError(f"tolerance {tolerance:g} must be positive")
    seed = int(raw.get("seed", 0))

    crr_params = None
    if has_crr:
        if "priors" in raw:
            raise ConfigError("priors block is not allowed with a crr block")
        block = raw["crr"]
        try:
            crr_params = CrrParams(
                S0=float(block["S0"]),
                up=float(block["up"]),
                down=float(block["down"]),
                steps=int(block["steps"]),
                rate=float(block.get("rate", 0.0)),
                K=float(block["K"]),
                H=float(block["H"]),
                direction=block.get("direction", "crossed_below"),
                q_up=float(block.get("q_up", 0.5)),
                ambiguity=tuple(float(x) for x in block.get("ambiguity", [0.5, 0.5])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad crr block: {exc}") from exc
        report = crr_params.validate()
        if report:
            raise ConfigError("; ".join(report))
        tree = build_crr_barrier_tree(crr_params)
        payoff = knockin_payoff(tree, crr_params)
        priors = drift_ambiguity_priors(tree, crr_params, mode=mode)
    else:
        tree, payoff = _parse_tree_block(raw["tree"])
        if "priors" not in raw:
            raise ConfigError("config with an explicit tree needs a priors block")
        priors = _parse_priors_block(raw["priors"], tree, mode)

    v = str(raw.get("v", tree.root))
    if v not in tree:
        raise ConfigError(f"evaluation node {v!r} not in tree")
    return RunConfig(
        tree=tree,
        payoff=payoff,
        priors=priors,
        mode=mode,
        alphas=alphas,
        v=v,
        tolerance=tolerance,
        seed=seed,
        crr=crr_params,
    )


# -- commands -----------------------------------------------------------


def _rule_stop_list(tree: EventTree, rule) -> list[str]:
    cut = rule.cut(tree)
    return [n for n in tree.nodes() if n in cut]


def _solve_columns(cfg: RunConfig, solution, rule_star, z_star):
    tree = cfg.tree
    columns: dict[str, dict[str, object]] = {
        "Y": dict(cfg.payoff.items()),
        "R": dict(solution.R.items()),
        "R_plus": dict(solution.R_plus.items()),
        "stop": {n: (n in solution.stop_region) for n in tree.nodes()},
        "argmax_extreme": dict(solution.argmax_extreme),
    }
    if rule_star is not None:
        cut = rule_star.cut(tree)
        reach = set(tree.subtree(cfg.v))
        columns["u_star_stop"] = {n: (n in cut) for n in tree.nodes() if n in reach}
    if z_star is not None:
        columns["z_star"] = dict(z_star.z)
    return columns


def cmd_solve(cfg: RunConfig, outdir: Path) -> int:
    solution = solve(cfg.tree, cfg.payoff, cfg.priors, tol=cfg.tolerance)
    rule_star = u_star(solution, cfg.payoff, cfg.v)
    z_star = extract_optimal_prior(solution, cfg.tree, cfg.priors, cfg.v)
    certificate = check_optimality_certificate(
        cfg.tree, cfg.payoff, cfg.priors, rule_star, z_star, tol=cfg.tolerance
    )
    alpha_stops = {}
    for a in cfg.alphas:
        rule = u_alpha(solution, cfg.payoff, cfg.v, a)
        alpha_stops[_fmt(a)] = _rule_stop_list(cfg.tree, rule)
    summary = {
        "command": "solve",
        "seed": cfg.seed,
        "mode": cfg.mode,
        "v": cfg.v,
        "R_root": solution.R[cfg.tree.root],
        "R_plus_root": solution.R_plus[cfg.tree.root],
        "R_v": solution.R[cfg.v],
        "R_plus_v": solution.R_plus[cfg.v],
        "attained": solution.attained,
        "U_star_stops": _rule_stop_list(cfg.tree, rule_star),
        "u_alpha_stops": alpha_stops,
        "certificate": {
            "optimal": certificate.optimal,
            "cond1": certificate.cond1,
            "cond2": certificate.cond2,
            "value": certificate.value,
            "value_target": certificate.value_target,
        },
    }
    write_summary(outdir, summary)
    write_nodes_csv(outdir, cfg.tree, _solve_columns(cfg, solution, rule_star, z_star))
    return 0


def cmd_oracle(cfg: RunConfig, outdir: Path) -> int:
    solution = solve(cfg.tree, cfg.payoff, cfg.priors, tol=cfg.tolerance)
    report = crosscheck(cfg.tree, cfg.payoff, cfg.priors, solution=solution)
    summary = {
        "command": "oracle",
        "seed": cfg.seed,
        "mode": cfg.mode,
        "max_deviation": report.max_deviation,
        "max_deviation_R": report.max_deviation_R,
        "max_deviation_R_plus": report.max_deviation_R_plus,
        "nodes_checked": report.nodes_checked,
    }
    write_summary(outdir, summary)
    write_nodes_csv(outdir, cfg.tree, _solve_columns(cfg, solution, None, None))
    return 0


def cmd_decompose(cfg: RunConfig, outdir: Path) -> int:
    solution = solve(cfg.tree, cfg.payoff, cfg.priors, tol=cfg.tolerance)
    rule_star = u_star(solution, cfg.payoff, cfg.v)
    decomp = universal_decompose(cfg.tree, solution, cfg.priors)
    flat = flat_off_check(decomp, cfg.tree, rule_star, cfg.v)
    diag = decomp.diagnostics
    summary = {
        "command": "decompose",
        "seed": cfg.seed,
        "mode": cfg.mode,
        "v": cfg.v,
        "X0": decomp.X0,
        "C_increasing": diag.C_increasing,
        "min_delta_C": diag.min_delta_C,
        "universal_martingale_residual": diag.universal_martingale_residual,
        "scaling_closed": diag.premise.scaling_closed_all,
        "flat_off": flat,
    }
    columns = _solve_columns(cfg, solution, rule_star, None)
    columns["M"] = dict(decomp.M.items())
    columns["C"] = dict(decomp.C.items())
    columns["K"] = dict(decomp.K.items())
    columns["A_q"] = dict(decomp.A_q.items())
    write_summary(outdir, summary)
    write_nodes_csv(outdir, cfg.tree, columns)
    return 0


def cmd_price(cfg: RunConfig, outdir: Path) -> int:
    if cfg.crr is None:
        raise ConfigError("the price command needs a crr block")
    solution = solve(cfg.tree, cfg.payoff, cfg.priors, tol=cfg.tolerance)
    rule_star = u_star(solution, cfg.payoff, cfg.v)
    z_star = extract_optimal_prior(solution, cfg.tree, cfg.priors, cfg.v)
    lo, hi = cfg.crr.ambiguity
    ps = [lo] if lo == hi else [lo, hi]
    prior_summary = {
        n: ps[solution.argmax_extreme[n]]
        for n in cfg.tree.decision_nodes(cfg.tree.root)
    }
    summary = {
        "command": "price",
        "seed": cfg.seed,
        "mode": cfg.mode,
        "H_S": solution.R[cfg.tree.root],
        "exercise_boundary": [
            n for n in cfg.tree.nodes() if n in solution.stop_region
        ],
        "optimal_prior_summary": prior_summary,
        "attained": solution.attained,
    }
    write_summary(outdir, summary)
    write_nodes_csv(outdir, cfg.tree, _solve_columns(cfg, solution, rule_star, z_star))
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "decompose": cmd_decompose,
    "price": cmd_price,
}

_CONFIG_ERRORS = (
    ConfigError,
    InvalidTreeError,
    InvalidFamilyError,
    InvalidPriorSetError,
    InvalidParamsError,
    InvalidRuleError,
    NotMeasurableError,
)


def run(argv: Sequence[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="robust-snell",
        description="Best-case optimal stopping under model uncertainty on event trees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "value families, stopping rules, optimal prior, certificate"),
        ("oracle", "brute-force crosscheck of the backward induction"),
        ("decompose", "universal martingale-minus-drift decomposition"),
        ("price", "knock-in barrier put under drift ambiguity"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", default="out", help="output directory (default: out)")
    args = parser.parse_args(list(argv))
    try:
        cfg = parse_config(args.config)
        return _COMMANDS[args.command](cfg, Path(args.out))
    except _CONFIG_ERRORS as exc:
        print(f"robust-snell: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except SizeGuardError as exc:
        print(f"robust-snell: size guard exceeded: {exc}", file=sys.stderr)
        return 3
    except UnattainedSupremumError as exc:
        print(f"robust-snell: unattained supremum: {exc}", file=sys.stderr)
        return 4


def console_main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    console_main()
