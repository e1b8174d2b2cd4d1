"""Weighted undirected graphs, shortest-path oracles and seeded generators."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Larger than n * max_weight for every graph we accept; INF + w stays below 2**63.
INF = 1 << 62

DEFAULT_WEIGHT_EXPONENT = 4

Edge = tuple[int, int, int]


class GraphError(ValueError):
    """Raised for malformed graphs, edge lists or generator parameters."""


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class WeightedGraph:
    """Undirected graph on nodes ``0..n-1`` with positive integer weights.

    Edges are stored once in canonical ``u < v`` order; ``adj[u]`` lists
    ``(v, w)`` pairs in both directions.  Instances are treated as read-only.
    """

    __slots__ = ("n", "edges", "adj", "_weights")

    def __init__(
        self,
        n: int,
        edges: Iterable[Sequence[int]],
        *,
        max_weight_exponent: float | None = DEFAULT_WEIGHT_EXPONENT,
    ) -> None:
        if n < 0:
            raise GraphError(f"node count must be non-negative, got {n}")
        self.n = int(n)
        weights: dict[tuple[int, int], int] = {}
        for e in edges:
            u, v, w = (int(x) for x in e)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) has an out-of-range endpoint for n={n}")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if w < 1:
                raise GraphError(f"edge ({u}, {v}) has weight {w} < 1")
            key = _edge_key(u, v)
            if key in weights:
                raise GraphError(f"duplicate edge {key}")
            weights[key] = w
        if max_weight_exponent is not None and weights:
            limit = max(n, 2) ** max_weight_exponent
            wmax = max(weights.values())
            if wmax > limit:
                raise GraphError(
                    f"max weight {wmax} exceeds n^{max_weight_exponent} = {limit}; "
                    "only polynomial weights are supported"
                )
        self._weights = weights
        self.edges: list[Edge] = [(u, v, w) for (u, v), w in sorted(weights.items())]
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for u, v, w in self.edges:
            self.adj[u].append((v, w))
            self.adj[v].append((u, w))

    @classmethod
    def union(
        cls, n: int, *edge_sets: Iterable[Sequence[int]], max_weight_exponent: float | None = None
    ) -> "WeightedGraph":
        """Merge edge sets, keeping the lightest copy of parallel edges."""
        best: dict[tuple[int, int], int] = {}
        for es in edge_sets:
            for u, v, w, *_ in es:
                key = _edge_key(int(u), int(v))
                if key not in best or w < best[key]:
                    best[key] = int(w)
        return cls(n, [(u, v, w) for (u, v), w in best.items()], max_weight_exponent=max_weight_exponent)

    @property
    def m(self) -> int:
        return len(self.edges)

    def weight(self, u: int, v: int) -> int | None:
        return self._weights.get(_edge_key(u, v))

    def has_edge(self, u: int, v: int) -> bool:
        return _edge_key(u, v) in self._weights

    def max_weight(self) -> int:
        return max((w for _, _, w in self.edges), default=0)

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    def induced(self, nodes: Iterable[int]) -> tuple["WeightedGraph", list[int]]:
        """Induced subgraph relabelled to ``0..s-1``; also returns the local->global id map."""
        members = sorted(set(nodes))
        index = {v: i for i, v in enumerate(members)}
        sub = []
        for v in members:
            for x, w in self.adj[v]:
                if v < x and x in index:
                    sub.append((index[v], index[x], w))
        return WeightedGraph(len(members), sub, max_weight_exponent=None), members

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, WeightedGraph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, tuple(self.edges)))


@dataclass
class DistanceMap:
    """Distances from a source set; ``INF`` marks unreachable nodes."""

    sources: frozenset[int]
    dist: list[int]
    hops_used: list[int] = field(default_factory=list)

    def __getitem__(self, v: int) -> int:
        return self.dist[v]


def dijkstra(g: WeightedGraph, s: int) -> DistanceMap:
    """Exact single-source distances.

    Among equally short paths the one with fewest hops is recorded in
    ``hops_used``.
    """
    if not 0 <= s < g.n:
        raise GraphError(f"source {s} not in graph of {g.n} nodes")
    dist = [INF] * g.n
    hops = [INF] * g.n
    dist[s], hops[s] = 0, 0
    heap = [(0, 0, s)]
    while heap:
        d, h, u = heapq.heappop(heap)
        if d > dist[u] or (d == dist[u] and h > hops[u]):
            continue
        for v, w in g.adj[u]:
            nd, nh = d + w, h + 1
            if nd < dist[v] or (nd == dist[v] and nh < hops[v]):
                dist[v], hops[v] = nd, nh
                heapq.heappush(heap, (nd, nh, v))
    return DistanceMap(frozenset([s]), dist, hops)


def shortest_path(g: WeightedGraph, s: int, t: int) -> list[int] | None:
    """Node sequence of a fewest-hop shortest ``s``-``t`` path, ``None`` if unreachable."""
    if not (0 <= s < g.n and 0 <= t < g.n):
        raise GraphError(f"endpoints {s}, {t} not in graph of {g.n} nodes")
    best = [(INF, INF)] * g.n
    parent = [-1] * g.n
    best[s] = (0, 0)
    heap = [(0, 0, s)]
    while heap:
        d, h, u = heapq.heappop(heap)
        if (d, h) != best[u]:
            continue
        if u == t:
            break
        for v, w in g.adj[u]:
            cand = (d + w, h + 1)
            if cand < best[v]:
                best[v] = cand
                parent[v] = u
                heapq.heappush(heap, (cand[0], cand[1], v))
    if best[t][0] >= INF:
        return None
    path = [t]
    while path[-1] != s:
        path.append(parent[path[-1]])
    return path[::-1]


def all_pairs_dijkstra(g: WeightedGraph) -> np.ndarray:
    """``n x n`` int64 matrix of exact distances (``INF`` when unreachable)."""
    out = np.full((g.n, g.n), INF, dtype=np.int64)
    for s in range(g.n):
        out[s] = dijkstra(g, s).dist
    return out


def bellman_ford_limited(g: WeightedGraph, sources: Iterable[int], hop_budget: int) -> DistanceMap:
    """``min_s d^l(s, v)`` over paths with at most ``hop_budget`` edges.

    Relaxation is level-synchronous, so round ``h`` only extends paths found
    in round ``h - 1``; ``hops_used[v]`` is the first level at which the final
    value was reached.
    """
    if hop_budget < 0:
        raise GraphError(f"hop budget must be >= 0, got {hop_budget}")
    srcs = frozenset(int(s) for s in sources)
    dist = [INF] * g.n
    hops = [INF] * g.n
    for s in srcs:
        if not 0 <= s < g.n:
            raise GraphError(f"source {s} not in graph of {g.n} nodes")
        dist[s], hops[s] = 0, 0
    frontier = set(srcs)
    for h in range(1, hop_budget + 1):
        if not frontier:
            break
        updates: dict[int, int] = {}
        for u in frontier:
            du = dist[u]
            for v, w in g.adj[u]:
                nd = du + w
                if nd < dist[v] and nd < updates.get(v, INF):
                    updates[v] = nd
        for v, nd in updates.items():
            dist[v], hops[v] = nd, h
        frontier = set(updates)
    return DistanceMap(srcs, dist, hops)


# --------------------------------------------------------------------------
# generators

GRAPH_KINDS = ("erdos-renyi", "grid", "path", "random-geometric", "blob-chain")


def _weights(rng: np.random.Generator, count: int, w_range: Sequence[int]) -> np.ndarray:
    lo, hi = int(w_range[0]), int(w_range[1])
    if lo < 1 or hi < lo:
        raise GraphError(f"invalid weight range {w_range!r}")
    return rng.integers(lo, hi + 1, size=count)


def _grid_shape(n: int, params: dict) -> tuple[int, int]:
    rows, cols = params.get("rows"), params.get("cols")
    if rows is None and cols is None:
        rows = max(d for d in range(1, math.isqrt(n) + 1) if n % d == 0)
        cols = n // rows
    elif rows is None:
        rows = n // int(cols)
    elif cols is None:
        cols = n // int(rows)
    rows, cols = int(rows), int(cols)
    if rows * cols != n:
        raise GraphError(f"grid {rows}x{cols} does not have {n} nodes")
    return rows, cols


def _erdos_renyi_pairs(rng: np.random.Generator, n: int, p: float) -> list[tuple[int, int]]:
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def _largest_component(n: int, edges: list[Edge]) -> tuple[int, list[Edge]]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, _ in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    roots = [find(v) for v in range(n)]
    sizes: dict[int, int] = {}
    for r in roots:
        sizes[r] = sizes.get(r, 0) + 1
    best = min(sizes, key=lambda r: (-sizes[r], r))
    keep = [v for v in range(n) if roots[v] == best]
    index = {v: i for i, v in enumerate(keep)}
    return len(keep), [(index[u], index[v], w) for u, v, w in edges if u in index]


def generate_graph(kind: str, n: int, params: dict | None = None, seed: int = 0) -> WeightedGraph:
    """Deterministic graph for ``(kind, n, params, seed)``.

    Common params: ``w_range`` (inclusive integer weight range, default
    ``(1, 1)``) and ``largest_component`` (relabel to the largest connected
    component).  Kind-specific params:

    * ``erdos-renyi``: ``p`` (default ``4 ln n / n``)
    * ``grid``: ``rows``/``cols`` (default: most square factorisation of n)
    * ``random-geometric``: ``radius`` (default ``sqrt(3 ln n / (pi n))``);
      weights scale with Euclidean length up to ``w_range[1]``
    * ``blob-chain``: ``blobs`` (default 4), ``bridge`` path length between
      consecutive blobs (default 4), ``p_blob`` (default 0.5)
    """
    params = dict(params or {})
    if kind not in GRAPH_KINDS:
        raise GraphError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    if n < 1:
        raise GraphError(f"n must be >= 1, got {n}")
    w_range = tuple(params.pop("w_range", (1, 1)))
    want_lcc = bool(params.pop("largest_component", False))
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & ((1 << 64) - 1)))
    pairs: list[tuple[int, int]]
    weights: np.ndarray | None = None

    if kind == "path":
        pairs = [(i, i + 1) for i in range(n - 1)]
    elif kind == "grid":
        rows, cols = _grid_shape(n, params)
        pairs = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    pairs.append((v, v + 1))
                if r + 1 < rows:
                    pairs.append((v, v + cols))
    elif kind == "erdos-renyi":
        p = float(params.get("p", min(1.0, 4 * math.log(max(n, 2)) / n)))
        if not 0 <= p <= 1:
            raise GraphError(f"p must be in [0, 1], got {p}")
        pairs = _erdos_renyi_pairs(rng, n, p)
    elif kind == "random-geometric":
        radius = float(params.get("radius", math.sqrt(3 * math.log(max(n, 2)) / (math.pi * n))))
        if radius <= 0:
            raise GraphError(f"radius must be positive, got {radius}")
        pts = rng.random((n, 2))
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        iu, ju = np.triu_indices(n, k=1)
        keep = dist[iu, ju] <= radius
        pairs = list(zip(iu[keep].tolist(), ju[keep].tolist()))
        lo, hi = int(w_range[0]), int(w_range[1])
        if lo < 1 or hi < lo:
            raise GraphError(f"invalid weight range {w_range!r}")
        frac = dist[iu[keep], ju[keep]] / radius
        weights = np.maximum(lo, np.ceil(frac * hi)).astype(np.int64)
    else:  # blob-chain
        blobs = int(params.get("blobs", 4))
        bridge = int(params.get("bridge", 4))
        p_blob = float(params.get("p_blob", 0.5))
        if blobs < 1 or bridge < 0 or not 0 < p_blob <= 1:
            raise GraphError("blob-chain needs blobs >= 1, bridge >= 0, 0 < p_blob <= 1")
        blob_nodes = n - (blobs - 1) * bridge
        if blob_nodes < blobs:
            raise GraphError(f"n={n} too small for {blobs} blobs with bridges of {bridge}")
        sizes = [blob_nodes // blobs + (1 if i < blob_nodes % blobs else 0) for i in range(blobs)]
        pairs = []
        nxt = 0
        prev_tail = None
        for b, size in enumerate(sizes):
            if b > 0:
                chain = list(range(nxt, nxt + bridge))
                nxt += bridge
                hop_seq = [prev_tail, *chain]
            members = list(range(nxt, nxt + size))
            nxt += size
            # spanning path keeps each blob connected; extra edges are random
            pairs.extend((members[i], members[i + 1]) for i in range(size - 1))
            for i, j in _erdos_renyi_pairs(rng, size, p_blob):
                if j != i + 1:
                    pairs.append((members[i], members[j]))
            if b > 0:
                hop_seq.append(members[0])
                pairs.extend((hop_seq[i], hop_seq[i + 1]) for i in range(len(hop_seq) - 1))
            prev_tail = members[-1]

    if weights is None:
        weights = _weights(rng, len(pairs), w_range)
    edges = [(u, v, int(w)) for (u, v), w in zip(pairs, weights.tolist())]
    if want_lcc and n > 0:
        n, edges = _largest_component(n, edges)
    return WeightedGraph(n, edges)


# --------------------------------------------------------------------------
# edge-list text format: "n m" then m lines "u v w"


def write_edge_list(g: WeightedGraph, path: str | Path) -> None:
    lines = [f"{g.n} {g.m}"] + [f"{u} {v} {w}" for u, v, w in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_edge_list(text: str) -> WeightedGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise GraphError("edge list must start with a line 'n m'")
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
        body = [tuple(int(x) for x in r) for r in rows[1:]]
    except ValueError as exc:
        raise GraphError(f"non-integer token in edge list: {exc}") from None
    if len(body) != m:
        raise GraphError(f"header announces {m} edges, found {len(body)}")
    for r in body:
        if len(r) != 3:
            raise GraphError(f"edge line must have 3 fields, got {r}")
    return WeightedGraph(n, body)


def read_edge_list(path: str | Path) -> WeightedGraph:
    return parse_edge_list(Path(path).read_text())
