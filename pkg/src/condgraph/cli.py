"""Command line interface: closure, sample, test, enumerate, bench."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bench import bench_sweep, write_bench_csv
from .closure import compute_closure
from .diagnostics import METHODS, TAILS, ChainConfig, make_sampler, pooled_report, run_chains
from .errors import (CondGraphError, ConfigError, DomainError, FrozenStateError,
                     InvariantViolation, ParseError)
from .io import (config_from_dict, config_to_dict, parse_instance, write_edge_list,
                 write_fixed, write_json, write_matrix_csv)
from .oracle import state_space
from .stats import STATISTICS, make_statistic
from .wgs import TARGETS


def _add_instance(p):
    p.add_argument("instance", help="edge list or matrix/table CSV")
    p.add_argument("--fixed", help="fixed-pair file (src dst present|absent|weight)")
    p.add_argument("--table", action="store_true", help="read a square CSV as a table")
    p.add_argument("--undirected", action="store_true", help="CSV adjacency matrix is undirected")


def _add_chain(p):
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--samples", type=int, help="retained samples per chain")
    p.add_argument("--thin", type=int)
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--target", choices=sorted(TARGETS), help="wgs target distribution")
    p.add_argument("--tail", choices=TAILS)
    p.add_argument("--trace", help="write the statistic trace here")
    p.add_argument("--report", help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condgraph",
        description="Uniform sampling of graphs and tables with fixed degrees or margins.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, help="master seed (default: random)")
    parser.add_argument("--threads", type=int, default=1, help="independent chains")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("closure", help="list pairs whose status is implied by the fixed set")
    _add_instance(p)
    p.add_argument("--out", help="write the closed fixed set here")

    p = sub.add_parser("sample", help="run chains and report diagnostics")
    _add_instance(p)
    _add_chain(p)
    p.add_argument("--statistic", choices=sorted(STATISTICS))
    p.add_argument("--out-graph", help="write the final state of chain 0 here")

    p = sub.add_parser("test", help="conditional Monte Carlo test of a statistic")
    _add_instance(p)
    _add_chain(p)
    p.add_argument("--statistic", choices=sorted(STATISTICS), required=True)
    p.add_argument("--plus-one", action="store_true", help="use the (k+1)/(N+1) p-value")

    p = sub.add_parser("enumerate", help="count (and list) the reference set of a small instance")
    _add_instance(p)
    p.add_argument("--show", action="store_true", help="print every state")

    p = sub.add_parser("bench", help="weighted sampler vs subtable chain on sparse tables")
    p.add_argument("--L", type=int, nargs="*", default=[10, 20, 40], dest="levels")
    p.add_argument("--draws", type=int, default=200)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--thin", type=int, help="default: L")
    p.add_argument("--out", help="CSV output (default stdout)")
    return parser


def _load(args):
    return parse_instance(args.instance, args.fixed, table=args.table or None,
                          directed=not args.undirected)


def _chain_config(args, g, statistic=None) -> ChainConfig:
    data = {}
    if args.config:
        data = _read_json(args.config)
    for key in ("method", "samples", "thin", "burn_in", "target", "tail"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
            if key == "samples":
                data.pop("steps", None)
    if statistic is not None:
        data["statistic"] = statistic
    if args.seed is not None:
        data["seed"] = args.seed
    if data.get("seed") is None:
        data["seed"] = int(np.random.SeedSequence().entropy % 2**63)
    data.setdefault("method", _default_method(g))
    cfg = config_from_dict(data)
    if cfg.method == "ugs" and g.weighted:
        raise ConfigError("ugs needs an unweighted graph; use wgs")
    if cfg.method == "wgs" and not g.weighted:
        raise ConfigError("wgs samples weighted graphs; mark the input '# weighted: true'")
    return cfg


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None


def _default_method(g):
    return "wgs" if g.weighted else "ugs"


def _run(args, statistic):
    g, f = _load(args)
    cfg = _chain_config(args, g, statistic)
    if cfg.method in ("ugs", "wgs"):
        probe = make_sampler(cfg.method, g, f, 0)
        if probe.frozen:
            raise FrozenStateError("no vertex can start a walk: the reference set is a single graph")
    stat = make_statistic(cfg.statistic, g, f) if cfg.statistic else None
    runs = run_chains(cfg.method, g, f, cfg, max(1, args.threads), statistic=stat)
    observed = stat(g.weights) if stat is not None else None
    return g, f, cfg, runs, observed


def _write_trace(runs, path):
    with open(path, "w") as fh:
        fh.write("# chain step statistic changed\n")
        for r in runs:
            for line in r.export_lines():
                fh.write(f"{r.chain_id} {line}\n")


def _emit(report: dict, path):
    text = write_json(report, path)
    if path is None:
        print(text)


def cmd_closure(args):
    g, f = _load(args)
    if g.weighted:
        raise DomainError("the closure is defined for unweighted graphs")
    ft = compute_closure(g, f)
    implied = sorted(ft.pairs - f.pairs)
    print(f"# {len(f.pairs)} fixed pairs in, {len(ft.pairs)} after closure, {len(implied)} implied")
    for u, v in implied:
        print(f"{g.label(u)} {g.label(v)} {'present' if g.weights[u, v] else 'absent'}")
    if args.out:
        write_fixed(g, ft, args.out)
    return 0


def cmd_sample(args):
    g, f, cfg, runs, observed = _run(args, args.statistic)
    rep = pooled_report(runs, observed, cfg.tail)
    if args.trace and cfg.statistic:
        _write_trace(runs, args.trace)
    if args.out_graph:
        out = g.with_weights(runs[0].final)
        (write_matrix_csv if args.out_graph.endswith(".csv") else write_edge_list)(out,
                                                                                  args.out_graph)
    _emit({"config": config_to_dict(cfg), "chains": max(1, args.threads), "report": rep.to_dict()},
          args.report)
    return 0


def cmd_test(args):
    g, f, cfg, runs, observed = _run(args, args.statistic)
    rep = pooled_report(runs, observed, cfg.tail, args.plus_one)
    if args.trace:
        _write_trace(runs, args.trace)
    _emit({"config": config_to_dict(cfg), "chains": max(1, args.threads),
           "observed": observed, "p_value": rep.p_value, "p_se": rep.p_se,
           "report": rep.to_dict()}, args.report)
    return 0


def cmd_enumerate(args):
    g, f = _load(args)
    space = state_space(g, f)
    print(space.count)
    if args.show:
        for k in range(space.count):
            m = space.matrix(k)
            print(" ".join(str(int(x)) for x in (g.with_weights(m).table().ravel()
                                                 if g.table_shape else m.ravel())))
    return 0


def cmd_bench(args):
    rows = bench_sweep(sorted(args.levels), args.draws, args.samples, args.seed, thin=args.thin)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_bench_csv(rows, fh)
    else:
        write_bench_csv(rows, sys.stdout)
    return 0


COMMANDS = {"closure": cmd_closure, "sample": cmd_sample, "test": cmd_test,
            "enumerate": cmd_enumerate, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CondGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
