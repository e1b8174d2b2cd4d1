"""Multi-source distance queries over ``G + H`` with a ``beta`` hop budget."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bf import run_limited_bf
from .builder import Hopset
from .graph import INF, WeightedGraph, dijkstra
from .oracle import hop_limited_all_pairs
from .sim import Model, SimConfig, Simulator


class TooManySources(ValueError):
    pass


def source_limit(n: int, c: float = 1.0) -> int:
    return max(1, math.ceil(c * math.sqrt(n)))


@dataclass
class QueryResult:
    sources: list[int]
    dist: np.ndarray  # row i: d^beta from sources[i]
    beta: int
    rounds_charged: int | None = None

    def estimate(self, s: int, v: int) -> int:
        return int(self.dist[self.sources.index(s), v])

    def to_csv(self, g: WeightedGraph | None = None) -> str:
        """Rows ``source,node,estimate,oracle,ratio``; oracle columns need ``g``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "node", "estimate", "oracle", "ratio"])
        for i, s in enumerate(self.sources):
            exact = dijkstra(g, s).dist if g is not None else None
            for v in range(self.dist.shape[1]):
                est = int(self.dist[i, v])
                est_s = "inf" if est >= INF else str(est)
                if exact is None:
                    w.writerow([s, v, est_s, "", ""])
                    continue
                d = exact[v]
                if d >= INF:
                    w.writerow([s, v, est_s, "inf", ""])
                elif d == 0:
                    w.writerow([s, v, est_s, 0, "1.000000"])
                else:
                    ratio = "inf" if est >= INF else f"{est / d:.6f}"
                    w.writerow([s, v, est_s, d, ratio])
        return buf.getvalue()


def _check(g: WeightedGraph, sources: Sequence[int], beta: int, c: float) -> list[int]:
    srcs = list(dict.fromkeys(int(s) for s in sources))
    if len(srcs) > source_limit(g.n, c):
        raise TooManySources(f"{len(srcs)} sources exceed ceil({c} * sqrt({g.n})) = {source_limit(g.n, c)}")
    for s in srcs:
        if not 0 <= s < g.n:
            raise ValueError(f"source {s} not in graph of {g.n} nodes")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    return srcs


def mssp_query_fast(
    g: WeightedGraph, H: Hopset | Sequence[tuple[int, int, int]], sources: Sequence[int], beta: int, c: float = 1.0
) -> QueryResult:
    """In-process ``d^beta_{G+H}`` from every source (no round accounting)."""
    srcs = _check(g, sources, beta, c)
    edges = H.edges if isinstance(H, Hopset) else list(H)
    dist = hop_limited_all_pairs(g.n, [*g.edges, *edges], beta, rows=srcs)
    return QueryResult(srcs, dist, beta)


def mssp_query(
    g: WeightedGraph,
    H: Hopset | Sequence[tuple[int, int, int]],
    sources: Sequence[int],
    beta: int,
    sim: Simulator | None = None,
    c: float = 1.0,
    label: str = "query",
) -> QueryResult:
    """Pipelined ``beta``-limited Bellman-Ford on the simulator, one stream per source."""
    srcs = _check(g, sources, beta, c)
    edges = H.edges if isinstance(H, Hopset) else list(H)
    union = WeightedGraph.union(g.n, g.edges, edges)
    sim = sim or Simulator(g.n, SimConfig(model=Model.CLIQUE))
    rows, res = run_limited_bf(sim, union, srcs, beta, label)
    dist = np.array(rows, dtype=np.int64).reshape(len(srcs), g.n)
    return QueryResult(srcs, dist, beta, res.rounds if res is not None else 0)
