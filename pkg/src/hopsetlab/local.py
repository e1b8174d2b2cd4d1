"""Centralised hopsets built at a small cluster's centre.

``clique`` adds an exact edge for every pair (hopbound 1).  ``tz`` builds the
Thorup-Zwick sampling hierarchy ``A_0 = V > A_1 > ... > A_{k-1}`` and adds
every bunch edge and pivot edge with its exact in-cluster distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import INF, WeightedGraph, all_pairs_dijkstra
from .oracle import smallest_hopbound

MODES = ("clique", "tz")


class DisconnectedCluster(ValueError):
    pass


@dataclass
class LocalHopsetResult:
    edges: list[tuple[int, int, int]]
    beta_prime: int | None
    mode: str

    @property
    def size(self) -> int:
        return len(self.edges)


def _tz_edges(D: np.ndarray, k: int, rng: np.random.Generator) -> dict[tuple[int, int], int]:
    s = D.shape[0]
    prob = s ** (-1.0 / k)
    levels = [np.arange(s)]
    for _ in range(1, k):
        prev = levels[-1]
        levels.append(prev[rng.random(prev.size) < prob])
    levels.append(np.zeros(0, dtype=np.int64))

    out: dict[tuple[int, int], int] = {}

    def add(u: int, v: int) -> None:
        if u != v:
            out[(min(u, v), max(u, v))] = int(D[u, v])

    for v in range(s):
        for i in range(k):
            nxt = levels[i + 1]
            if nxt.size:
                # pivot: nearest node of the next level, ties to the smaller id
                dn = D[v, nxt]
                p = int(nxt[np.argmin(dn)])
                bound = int(dn.min())
                add(v, p)
            else:
                bound = INF
            here = np.setdiff1d(levels[i], nxt, assume_unique=True)
            for w in here[D[v, here] < bound].tolist():
                add(v, w)
    return out


def build_local_hopset(
    cluster_graph: WeightedGraph,
    k: int = 2,
    eps_prime: Fraction | float = Fraction(1, 10),
    mode: str = "tz",
    rng: np.random.Generator | None = None,
    ambient_n: int | None = None,
    measure: bool = True,
) -> LocalHopsetResult:
    """Hopset edges (local ids) with exact in-cluster distances as weights."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    s = cluster_graph.n
    if ambient_n is not None and s > math.isqrt(ambient_n - 1) + 1:
        raise ValueError(f"cluster of {s} nodes exceeds ceil(sqrt({ambient_n}))")
    if s <= 1:
        return LocalHopsetResult([], 0, mode)
    D = all_pairs_dijkstra(cluster_graph)
    if (D >= INF).any():
        raise DisconnectedCluster(f"cluster graph on {s} nodes is disconnected")

    if mode == "clique":
        iu, ju = np.triu_indices(s, k=1)
        edges = list(zip(iu.tolist(), ju.tolist(), D[iu, ju].tolist()))
        return LocalHopsetResult(edges, 1, mode)

    rng = rng if rng is not None else np.random.default_rng(0)
    found = _tz_edges(D, k, rng)
    edges = [(u, v, w) for (u, v), w in sorted(found.items())]
    beta = None
    if measure:
        beta, _ = smallest_hopbound(s, [*cluster_graph.edges, *edges], D, Fraction(eps_prime))
    return LocalHopsetResult(edges, beta, mode)
