"""Command line entry point: ``hopsetlab {gen,cover,build,query,verify,bench}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .builder import HopsetConfig, build_hopset, measure_hopbound, size_report
from .cover import LddConfig, limited_pairwise_cover
from .graph import GRAPH_KINDS, WeightedGraph, generate_graph, read_edge_list, write_edge_list
from .harness import CHECKS, ExperimentSpec, run_experiment
from .query import mssp_query, source_limit
from .sim import SimConfig, Simulator


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=64, help="node count")
    p.add_argument("--kind", choices=GRAPH_KINDS, default="erdos-renyi")
    p.add_argument("--w-max", type=int, default=10, help="weights drawn uniformly from 1..w-max")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", type=Path, help="read the graph from an edge-list file instead of generating it")
    p.add_argument("--out", type=Path, help="output directory (default: stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")


def _hopset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=Fraction, default=Fraction(1, 2))
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mode", choices=("clique", "tz"), default="tz", help="local hopset for small clusters")
    p.add_argument("--c-w", type=float, default=0.25, help="cover width constant")
    p.add_argument("--hop-cap", type=int, help="override the exploration hop budget 2*beta+1")


def _config(args) -> HopsetConfig:
    return HopsetConfig(eps=args.eps, k=args.k, local_mode=args.mode, c_W=args.c_w, hop_cap=args.hop_cap)


def _graph(args, seed: int | None = None) -> WeightedGraph:
    if args.input is not None:
        return read_edge_list(args.input)
    return generate_graph(args.kind, args.n, {"w_range": (1, args.w_max)}, args.seed if seed is None else seed)


def _emit(args, name: str, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / name).write_text(text)


def _rows(rows: list[dict], fmt: str) -> str:
    if fmt == "jsonl":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_gen(args) -> int:
    g = _graph(args)
    if args.out is None:
        sys.stdout.write(f"{g.n} {g.m}\n" + "".join(f"{u} {v} {w}\n" for u, v, w in g.edges))
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        write_edge_list(g, args.out / "graph.txt")
    return 0


def cmd_cover(args) -> int:
    g = _graph(args)
    cfg = _config(args)
    ell = args.ell if args.ell is not None else cfg.exploration(g.n)
    sim = Simulator(g.n, SimConfig(seed=args.seed))
    cover = limited_pairwise_cover(g, Fraction(args.W), ell, cfg.eps0, LddConfig(c1=cfg.c1), sim)
    _emit(args, "cover.txt", cover.dump())
    return 0


def cmd_build(args) -> int:
    g = _graph(args)
    cfg = _config(args)
    hopset, ledger, stats = build_hopset(g, cfg, args.seed)
    _emit(args, "hopset.txt", hopset.dump())
    if args.format == "jsonl":
        _emit(args, "stats.jsonl", stats.jsonl())
    else:
        _emit(args, "stats.csv", _rows([dict(vars(s)) for s in stats.scales], "csv"))
    _emit(args, "ledger.csv", ledger.summary_csv())
    rep = size_report(hopset, g.n, cfg.k)
    print(
        f"n={g.n} m={g.m} |H|={hopset.size} size_ratio={rep['ratio']:.4f} rounds={ledger.total_rounds} "
        f"beta_cap={stats.beta_cap} ell={stats.ell}",
        file=sys.stderr,
    )
    return 0


def cmd_query(args) -> int:
    g = _graph(args)
    cfg = _config(args)
    hopset, _, _ = build_hopset(g, cfg, args.seed)
    beta = args.beta if args.beta is not None else measure_hopbound(g, hopset, cfg.eps)
    if args.sources:
        sources = [int(x) for x in args.sources.split(",")]
    else:
        sources = list(range(min(g.n, source_limit(g.n))))
    res = mssp_query(g, hopset, sources, beta)
    _emit(args, "query.csv", res.to_csv(g))
    print(f"beta={beta} sources={len(res.sources)} rounds={res.rounds_charged}", file=sys.stderr)
    return 0


def _seeds(args) -> list[int]:
    if args.seeds:
        return [int(x) for x in args.seeds.split(",")]
    return [args.seed]


def cmd_verify(args) -> int:
    checks = tuple(args.checks.split(",")) if args.checks else CHECKS
    spec = ExperimentSpec(
        kind=args.kind,
        n=args.n,
        cfg=_config(args),
        seeds=tuple(_seeds(args)),
        checks=checks,
        params={"w_range": (1, args.w_max)},
        beta_check=args.beta_check,
    )
    report = run_experiment(spec)
    _emit(args, "report.json", report.to_json())
    print(report.summary(), end="", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_bench(args) -> int:
    cfg = _config(args)
    rows = []
    for n in [int(x) for x in args.ns.split(",")]:
        for seed in _seeds(args):
            g = generate_graph(args.kind, n, {"w_range": (1, args.w_max)}, seed)
            hopset, ledger, stats = build_hopset(g, cfg, seed)
            beta = measure_hopbound(g, hopset, cfg.eps)
            rep = size_report(hopset, g.n, cfg.k)
            rows.append(
                {
                    "kind": args.kind,
                    "n": g.n,
                    "seed": seed,
                    "mode": cfg.local_mode,
                    "size": hopset.size,
                    "size_ratio": round(rep["ratio"], 6),
                    "beta_emp": beta,
                    "beta_cap": stats.beta_cap,
                    "rounds": ledger.total_rounds,
                    "rounds_ratio": round(ledger.total_rounds / (beta * math.log2(g.n) ** 2), 6),
                }
            )
    _emit(args, f"bench.{args.format}", _rows(rows, args.format))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hopsetlab", description="Hopset construction and verification on a simulated Congested Clique.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a graph as an edge list")
    _common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("cover", help="build one limited pairwise cover and dump its clusters")
    _common(p)
    _hopset_args(p)
    p.add_argument("--W", type=Fraction, default=Fraction(4), help="cover width")
    p.add_argument("--ell", type=int, help="hop limit (default 2*beta_cap+1)")
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("build", help="build a hopset; writes hopset.txt, stats and ledger")
    _common(p)
    _hopset_args(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="multi-source queries over G + H, CSV output")
    _common(p)
    _hopset_args(p)
    p.add_argument("--sources", help="comma separated source ids (default: the first ceil(sqrt n) nodes)")
    p.add_argument("--beta", type=int, help="hop budget (default: measured hopbound)")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="run checks and write report.json; exit code 1 on failure")
    _common(p)
    _hopset_args(p)
    p.add_argument("--seeds", help="comma separated seeds (default: --seed)")
    p.add_argument("--checks", help=f"comma separated subset of {','.join(CHECKS)} (default: all)")
    p.add_argument("--beta-check", type=int, help="hop budget for the stretch check (default: beta_cap)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="size / hopbound / rounds sweep over n")
    _common(p)
    _hopset_args(p)
    p.add_argument("--ns", default="64,128,256", help="comma separated node counts")
    p.add_argument("--seeds", help="comma separated seeds (default: --seed)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
