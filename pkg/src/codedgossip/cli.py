"""Command-line entry point. Every results command writes CSV.

Exit codes: 0 success, 1 invalid input, 2 when every result row is infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Iterable, Sequence

from codedgossip import estimator
from codedgossip.engine import CodingConfig, ProtocolParams, coded_count
from codedgossip.graph import Graph, GridSpec, RggSpec, TreeSpec, default_source, gen_grid, gen_rgg, gen_tree
from codedgossip.oracle import exact_expectations, exact_reach_probabilities
from codedgossip.tree_analytics import (
    TreeAnalysisInput,
    tree_expected_transmissions,
    tree_min_p_closedform,
    tree_min_p_exact,
    tree_tau_closedform,
)

log = logging.getLogger("codedgossip")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2

# fallbacks for options that may also come from --config
DEFAULTS = {
    "k": 100,
    "delta": 0.1,
    "trials": estimator.DEFAULT_TRIALS,
    "p_tol": estimator.DEFAULT_P_TOLERANCE,
    "seed": estimator.DEFAULT_SEED,
    "threads": None,
    "rho": [],
    "mode": "bisect",
    "step": None,
}

SWEEP_COLUMNS = ["rho", "n", "p_min", "tau", "delta", "feasible"]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means "infeasible" here
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def fmt(x: float | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return f"{x:.6g}"


def _float_list(values) -> list[float]:
    if values is None:
        return []
    if not isinstance(values, (list, tuple)):
        values = [values]
    out: list[float] = []
    for item in values:
        out.extend(float(tok) for tok in str(item).split(",") if tok.strip())
    return out


def write_csv(rows: Iterable[Sequence], header: Sequence[str], out: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    if out:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())


def _add_graph_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("graph")
    g.add_argument("--graph", help="graph JSON file (see `generate`)")
    g.add_argument("--topology", choices=["grid", "tree", "rgg"], help="generate the graph in place")
    _add_generator_options(g)


def _add_generator_options(g) -> None:
    g.add_argument("--rows", type=int, default=31)
    g.add_argument("--cols", type=int, default=31)
    g.add_argument("--row-period", type=int, help="keep horizontal edges only in rows j %% q == 0")
    g.add_argument("--degree", type=int, default=2)
    g.add_argument("--height", type=int, default=10)
    g.add_argument("--nodes", type=int, default=60)
    g.add_argument("--width", type=float, default=20.0)
    g.add_argument("--area-height", type=float, default=20.0)
    g.add_argument("--radius", type=float, default=5.5)
    g.add_argument("--graph-seed", type=int, default=0)


def _add_run_options(p: argparse.ArgumentParser, search: bool = True) -> None:
    p.add_argument("--config", help="JSON file of option values; command-line flags win")
    p.add_argument("--k", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads for trials (default: all processors)")
    p.add_argument("--source", type=int, help="source node (default: grid center, tree root, random for RGG)")
    p.add_argument("--out", help="output file (default: stdout)")
    if search:
        p.add_argument("--rho", action="append", help="redundancy value(s); repeatable or comma-separated")
        p.add_argument("--delta", type=float)
        p.add_argument("--p-tol", type=float)
        p.add_argument("--mode", choices=["bisect", "linear"], help="minimum-p search strategy")
        p.add_argument("--step", type=float, help="step of the linear search (default: --p-tol)")


def _generate_from(kind: str, a: argparse.Namespace) -> Graph:
    if kind == "grid":
        return gen_grid(GridSpec(a.rows, a.cols, a.row_period))
    if kind == "tree":
        return gen_tree(TreeSpec(a.degree, a.height))
    if kind == "rgg":
        return gen_rgg(RggSpec(a.nodes, a.width, a.area_height, a.radius, a.graph_seed))
    raise ValueError(f"unknown topology {kind!r}")


def _load_graph(a: argparse.Namespace) -> Graph:
    if a.graph:
        return Graph.load(a.graph)
    if a.topology:
        return _generate_from(a.topology, a)
    raise ValueError("give --graph FILE or --topology {grid,tree,rgg}")


def _resolve(a: argparse.Namespace) -> None:
    """Fill unset options from --config, then from DEFAULTS."""
    config = {}
    if getattr(a, "config", None):
        config = json.loads(Path(a.config).read_text(encoding="utf-8"))
        config = {key.replace("-", "_"): val for key, val in config.items()}
    for name, fallback in DEFAULTS.items():
        if not hasattr(a, name) or getattr(a, name) is not None:
            continue
        setattr(a, name, config.get(name, fallback))
    if hasattr(a, "rho"):
        a.rho = _float_list(a.rho)
    for key in ("source", "graph", "topology", "n", "p", "out"):
        if hasattr(a, key) and getattr(a, key) is None and key in config:
            setattr(a, key, config[key])


def _source_for(g: Graph, a: argparse.Namespace) -> int:
    src = default_source(g, a.seed) if a.source is None else int(a.source)
    if not 0 <= src < g.node_count:
        raise ValueError(f"source {src} out of range for {g.node_count} nodes")
    return src


def _warn_trials(trials: int) -> None:
    if trials < 1:
        raise ValueError("--trials must be >= 1")
    if trials == 1:
        log.warning("trials=1: results carry no statistical validity")


def _coding(a: argparse.Namespace) -> CodingConfig:
    if a.n is not None:
        return CodingConfig(a.k, a.n)
    rho = _float_list(a.rho)
    return CodingConfig(a.k, coded_count(a.k, rho[0] if rho else 0.0))


def _sweep_rows(points: Sequence[estimator.SweepPoint]) -> list[list]:
    return [[p.rho, p.n, p.p_min, p.tau, p.delta, p.feasible] for p in points]


def _sweep_exit(points: Sequence[estimator.SweepPoint]) -> int:
    return EXIT_INFEASIBLE if points and not any(p.feasible for p in points) else EXIT_OK


def cmd_generate(a: argparse.Namespace) -> int:
    g = _generate_from(a.kind, a)
    if a.out:
        g.save(a.out)
    else:
        sys.stdout.write(json.dumps(g.to_json()) + "\n")
    log.info("generated %s with %d nodes, %d edges", a.kind, g.node_count, g.edge_count)
    return EXIT_OK


def cmd_estimate(a: argparse.Namespace) -> int:
    _warn_trials(a.trials)
    g = _load_graph(a)
    coding = _coding(a)
    src = _source_for(g, a)
    rows = []
    for p in _float_list(a.p) or [1.0]:
        cov, load = estimator.estimate(g, coding, ProtocolParams(p, src), a.trials, a.seed, a.threads)
        rows.append([p, coding.k, coding.n, cov.mean, cov.std_error, load.mean, load.std_error, a.trials])
    header = ["p", "k", "n", "coverage_mean", "coverage_se", "load_mean", "load_se", "trials"]
    write_csv(rows, header, a.out)
    return EXIT_OK


def cmd_sweep(a: argparse.Namespace) -> int:
    _warn_trials(a.trials)
    g = _load_graph(a)
    src = _source_for(g, a)
    points = estimator.sweep_redundancy(
        g, a.k, a.rho, a.delta, a.trials, a.p_tol, a.seed, src, a.mode, a.step, a.threads
    )
    write_csv(_sweep_rows(points), SWEEP_COLUMNS, a.out)
    return _sweep_exit(points)


def tree_exact_rows(H: int, k: int, delta: float, rho_list: Sequence[float]) -> list[list]:
    if H < 2:
        raise ValueError("tree-exact needs --height >= 2")
    rows = []
    for rho in rho_list:
        inp = TreeAnalysisInput(H, k, coded_count(k, rho), delta)
        p_exact = tree_min_p_exact(inp)
        tau_exact = tree_expected_transmissions(inp, p_exact)
        p_closed = tree_min_p_closedform(H, rho)
        try:
            tau_closed: float | None = tree_tau_closedform(H, k, rho)
        except ValueError as exc:
            log.warning("%s", exc)
            tau_closed = None
        rows.append([rho, p_exact, p_closed, tau_exact, tau_closed])
    return rows


def cmd_tree_exact(a: argparse.Namespace) -> int:
    rows = tree_exact_rows(a.height, a.k, a.delta, a.rho)
    write_csv(rows, ["rho", "p_exact", "p_closed", "tau_exact", "tau_closed"], a.out)
    return EXIT_OK


GRID_FAMILY = (("G", None), ("G5", 5), ("G10", 10), ("G15", 15))


def cmd_grid_family(a: argparse.Namespace) -> int:
    _warn_trials(a.trials)
    rows = []
    feasible = []
    for name, q in GRID_FAMILY:
        g = gen_grid(GridSpec(a.rows, a.cols, q))
        src = _source_for(g, a)
        points = estimator.sweep_redundancy(
            g, a.k, a.rho, a.delta, a.trials, a.p_tol, a.seed, src, a.mode, a.step, a.threads
        )
        rows.extend([name] + row for row in _sweep_rows(points))
        feasible.extend(p.feasible for p in points)
    write_csv(rows, ["graph"] + SWEEP_COLUMNS, a.out)
    return EXIT_INFEASIBLE if feasible and not any(feasible) else EXIT_OK


def cmd_oracle(a: argparse.Namespace) -> int:
    g = _load_graph(a)
    coding = _coding(a)
    src = _source_for(g, a)
    rows = []
    for p in _float_list(a.p) or [1.0]:
        profile = exact_reach_probabilities(g, src, p)
        if a.per_node:
            rows.extend([p, v, float(q)] for v, q in enumerate(profile.q))
        else:
            er, et = exact_expectations(profile, coding, g)
            rows.append([p, coding.k, coding.n, er, et])
    header = ["p", "node", "q"] if a.per_node else ["p", "k", "n", "expected_receivers", "expected_transmissions"]
    write_csv(rows, header, a.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="codedgossip", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a graph JSON file")
    gen.add_argument("kind", choices=["grid", "tree", "rgg"])
    _add_generator_options(gen)
    gen.add_argument("--out", help="output file (default: stdout)")
    gen.set_defaults(func=cmd_generate)

    est = sub.add_parser("estimate", help="coverage and load estimates at fixed p")
    _add_graph_options(est)
    _add_run_options(est, search=False)
    est.add_argument("--n", type=int, help="coded packet count (default: from --rho)")
    est.add_argument("--rho", action="append", help="redundancy, used when --n is absent")
    est.add_argument("--p", action="append", help="forwarding probability; repeatable")
    est.set_defaults(func=cmd_estimate)

    sw = sub.add_parser("sweep", help="minimum p and load across redundancies")
    _add_graph_options(sw)
    _add_run_options(sw)
    sw.set_defaults(func=cmd_sweep)

    te = sub.add_parser("tree-exact", help="exact vs closed-form tree analysis")
    te.add_argument("--config")
    te.add_argument("--height", type=int, default=50)
    te.add_argument("--k", type=int)
    te.add_argument("--delta", type=float)
    te.add_argument("--rho", action="append")
    te.add_argument("--out")
    te.set_defaults(func=cmd_tree_exact)

    gf = sub.add_parser("grid-family", help="sweeps on the grid and its row-pruned variants G5, G10, G15")
    _add_run_options(gf)
    gf.add_argument("--rows", type=int, default=31)
    gf.add_argument("--cols", type=int, default=31)
    gf.set_defaults(func=cmd_grid_family)

    orc = sub.add_parser("oracle", help="exact expectations by enumeration (N <= 20)")
    _add_graph_options(orc)
    orc.add_argument("--config")
    orc.add_argument("--k", type=int)
    orc.add_argument("--n", type=int)
    orc.add_argument("--rho", action="append")
    orc.add_argument("--p", action="append")
    orc.add_argument("--seed", type=int)
    orc.add_argument("--source", type=int)
    orc.add_argument("--per-node", action="store_true", help="emit per-node reach probabilities")
    orc.add_argument("--out")
    orc.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        _resolve(a)
        return a.func(a)
    except estimator.InfeasibleError as exc:
        log.error("%s", exc)
        return EXIT_INFEASIBLE
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
