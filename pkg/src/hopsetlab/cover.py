"""Exponential-shift low-diameter decompositions and hop-limited pairwise covers.

Every node ``x`` draws a shift ``r_x ~ Exp(alpha)`` and every node ``v`` joins
the cluster of ``argmin_x d(v, x) - r_x`` (ties to the smaller id).  Shifts are
quantised to ``SHIFT_SCALE`` fixed-point units per weight unit, so all
comparisons are exact integer comparisons.

Hop-limited covers for paths with length in ``[W, 2W]`` and at most ``l`` hops
are obtained by rounding weights up to multiples of ``eta = eps0 * W / l`` and
repeating the decomposition with ``alpha = eps0 / (2 l)`` on the rounded graph.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .graph import INF, WeightedGraph, all_pairs_dijkstra
from .sim import Multiplexed, Simulator

SHIFT_SCALE = 1 << 20


@dataclass(frozen=True)
class LddConfig:
    alpha: float | None = None
    reps: int | None = None
    c1: float = 3.0

    def __post_init__(self) -> None:
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.reps is not None and self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")

    def repetitions(self, n: int) -> int:
        if self.reps is not None:
            return self.reps
        return max(1, math.ceil(self.c1 * math.log(max(n, 2))))


@dataclass(frozen=True)
class ShiftAssignment:
    r: tuple[float, ...]

    @property
    def fixed(self) -> list[int]:
        return [int(math.floor(x * SHIFT_SCALE)) for x in self.r]

    @property
    def max_r(self) -> float:
        return max(self.r, default=0.0)


@dataclass(frozen=True)
class Cluster:
    id: int
    center: int
    members: frozenset[int]
    member_dist: dict[int, int] = field(hash=False, compare=False)
    rep: int = 0

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class RoundedGraph:
    base: WeightedGraph
    eta: Fraction
    eps0: Fraction
    graph: WeightedGraph

    def rounded_weight(self, u: int, v: int) -> int | None:
        return self.graph.weight(u, v)


@dataclass
class Cover:
    clusters: list[Cluster]
    n: int
    reps: int
    W: Fraction | None = None
    ell: int | None = None
    rounded: RoundedGraph | None = None
    shifts: list[ShiftAssignment] = field(default_factory=list)
    per_node_membership: list[list[int]] = field(default_factory=list)
    rounds: int = 0

    def __post_init__(self) -> None:
        if not self.per_node_membership:
            self.per_node_membership = [[] for _ in range(self.n)]
            for c in self.clusters:
                for v in c.members:
                    self.per_node_membership[v].append(c.id)
            for ids in self.per_node_membership:
                ids.sort()

    def partition(self, rep: int) -> list[Cluster]:
        return [c for c in self.clusters if c.rep == rep]

    def dump(self) -> str:
        w = "" if self.W is None else str(self.W)
        lines = []
        for c in self.clusters:
            members = " ".join(str(v) for v in sorted(c.members))
            lines.append(f"cluster {c.id} center {c.center} scaleW {w} members {members}")
        return "\n".join(lines) + ("\n" if lines else "")


def _frac(x: float | int | Fraction) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(1 << 20)


def round_weights(g: WeightedGraph, R, ell: int, eps0) -> RoundedGraph:
    """Round every weight up to a multiple of ``eta = eps0 * R / ell``."""
    R, eps0 = _frac(R), _frac(eps0)
    if R < 1 or ell < 1 or not 0 < eps0 <= 1:
        raise ValueError(f"need R >= 1, ell >= 1, 0 < eps0 <= 1 (got {R}, {ell}, {eps0})")
    eta = eps0 * R / ell
    edges = [(u, v, math.ceil(Fraction(w) / eta)) for u, v, w in g.edges]
    return RoundedGraph(g, eta, eps0, WeightedGraph(g.n, edges, max_weight_exponent=None))


def draw_shifts(sim: Simulator, alpha: float, label: str) -> ShiftAssignment:
    return ShiftAssignment(tuple(float(sim.per_node_rng(v, label).exponential(1.0 / alpha)) for v in range(sim.n)))


class _ShiftedBroadcast:
    """Shifted-distance flooding, one logical stream per partition.

    Per stream a node keeps its best ``(key, center, dist)`` with
    ``key = dist * SHIFT_SCALE - r_center`` and forwards it after each
    improvement.  Offers whose key cannot beat a neighbour's own ``-r <= 0``
    even across a unit edge are not forwarded.
    """

    def __init__(self, graph: WeightedGraph, fixed_shifts: Sequence[Sequence[int]]):
        self.adj = graph.adj
        self.fixed = fixed_shifts

    def init(self, v: int):
        return [[-fx[v], v, 0, True] for fx in self.fixed]

    def send(self, v: int, state, t: int):
        offers = {}
        for s, st in enumerate(state):
            if st[3]:
                st[3] = False
                if st[0] + SHIFT_SCALE <= 0:
                    offers[s] = (st[1], st[2])
        if not offers:
            return None
        return [(u, Multiplexed(offers)) for u, _ in self.adj[v]]

    def receive(self, v: int, state, t: int, inbox):
        weights = dict(self.adj[v])
        for src, payload in inbox:
            w = weights[src]
            for s, (c, d) in payload.items():
                nd = d + w
                key = nd * SHIFT_SCALE - self.fixed[s][c]
                st = state[s]
                if key < st[0] or (key == st[0] and c < st[1]):
                    st[0], st[1], st[2], st[3] = key, c, nd, True
        return state


def _clusters_from_assignment(center: Sequence[int], dist: Sequence[int], rep: int, first_id: int) -> list[Cluster]:
    groups: dict[int, dict[int, int]] = {}
    for v, c in enumerate(center):
        groups.setdefault(c, {})[v] = dist[v]
    return [
        Cluster(first_id + i, c, frozenset(md), md, rep)
        for i, (c, md) in enumerate(sorted(groups.items()))
    ]


def _run_broadcast(
    g: WeightedGraph, shifts: list[ShiftAssignment], sim: Simulator, label: str
) -> list[list[Cluster]]:
    fixed = [s.fixed for s in shifts]
    budget = math.ceil(max(s.max_r for s in shifts)) + 1
    res = sim.run_phase(label, _ShiftedBroadcast(g, fixed), budget)
    partitions, next_id = [], 0
    for rep in range(len(shifts)):
        center = [res.states[v][rep][1] for v in range(g.n)]
        dist = [res.states[v][rep][2] for v in range(g.n)]
        part = _clusters_from_assignment(center, dist, rep, next_id)
        next_id += len(part)
        partitions.append(part)
    return partitions


def ldd_partition(
    g: WeightedGraph,
    cfg: LddConfig,
    sim: Simulator,
    label: str = "ldd",
    shifts: ShiftAssignment | None = None,
) -> list[Cluster]:
    """One exponential-shift partition, executed on the simulator."""
    if shifts is None:
        if cfg.alpha is None:
            raise ValueError("ldd_partition needs cfg.alpha or explicit shifts")
        shifts = draw_shifts(sim, cfg.alpha, label)
    return _run_broadcast(g, [shifts], sim, label)[0]


def ldd_assignment_centralized(g: WeightedGraph, fixed: Sequence[int]) -> tuple[list[int], list[int]]:
    """Centre and distance per node via one lexicographic multi-source Dijkstra."""
    best = [(INF, INF)] * g.n
    dist = [INF] * g.n
    heap = []
    for x in range(g.n):
        best[x] = (-fixed[x], x)
        dist[x] = 0
        heap.append((-fixed[x], x, 0, x))
    heapq.heapify(heap)
    done = [False] * g.n
    while heap:
        key, c, d, v = heapq.heappop(heap)
        if done[v] or (key, c) != best[v]:
            continue
        done[v] = True
        for u, w in g.adj[v]:
            cand = (key + w * SHIFT_SCALE, c)
            if cand < best[u]:
                best[u] = cand
                dist[u] = d + w
                heapq.heappush(heap, (cand[0], c, d + w, u))
    return [b[1] for b in best], dist


def ldd_partition_centralized(g: WeightedGraph, shifts: ShiftAssignment, rep: int = 0) -> list[Cluster]:
    center, dist = ldd_assignment_centralized(g, shifts.fixed)
    return _clusters_from_assignment(center, dist, rep, 0)


def limited_pairwise_cover(
    g: WeightedGraph,
    W,
    ell: int,
    eps0,
    cfg: LddConfig,
    sim: Simulator,
    label: str = "cover",
) -> Cover:
    """``ell``-limited pairwise cover for paths with length in ``[W, 2W]``.

    The repetitions run as multiplexed streams of one simulator phase.
    """
    W = _frac(W)
    if W < 1 or ell < 0:
        raise ValueError(f"need W >= 1 and ell >= 0 (got {W}, {ell})")
    reps = cfg.repetitions(g.n)
    if ell == 0:
        # zero-hop paths are single nodes: singleton partitions cover them
        clusters = [
            Cluster(rep * g.n + v, v, frozenset([v]), {v: 0}, rep) for rep in range(reps) for v in range(g.n)
        ]
        return Cover(clusters, g.n, reps, W, ell)
    rounded = round_weights(g, W, ell, eps0)
    alpha = float(rounded.eps0) / (2 * ell)
    shifts = [draw_shifts(sim, alpha, f"{label}/rep{rep}") for rep in range(reps)]
    before = sim.ledger.total_rounds
    partitions = _run_broadcast(rounded.graph, shifts, sim, label)
    clusters, next_id = [], 0
    for part in partitions:
        for c in part:
            clusters.append(Cluster(next_id, c.center, c.members, c.member_dist, c.rep))
            next_id += 1
    return Cover(clusters, g.n, reps, W, ell, rounded, shifts, rounds=sim.ledger.total_rounds - before)


def padding_probability_check(
    g: WeightedGraph, alpha: float, r: float, trials: int, seed: int = 0
) -> list[float]:
    """Per-node frequency with which the ball ``B(u, r)`` lies inside u's cluster.

    Partitions are computed centrally from fresh shifts each trial.
    """
    if r < 0 or trials < 1:
        raise ValueError("need r >= 0 and trials >= 1")
    n = g.n
    D = all_pairs_dijkstra(g)
    in_ball = D <= r
    reach = D < INF
    big = np.int64(1) << np.int64(62)
    base = np.where(reach, D, 0).astype(np.int64) * SHIFT_SCALE
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    hits = np.zeros(n, dtype=np.int64)
    for _ in range(trials):
        fixed = np.floor(rng.exponential(1.0 / alpha, size=n) * SHIFT_SCALE).astype(np.int64)
        keys = np.where(reach, base - fixed[None, :], big)
        labels = np.argmin(keys, axis=1)
        same = labels[None, :] == labels[:, None]
        hits += ~(in_ball & ~same).any(axis=1)
    return (hits / trials).tolist()


def cover_path_contained(cover: Cover, path: Iterable[int]) -> int | None:
    """Id of some cluster containing every node of ``path``, else ``None``."""
    nodes = list(path)
    if not nodes:
        return None
    candidates = set(cover.per_node_membership[nodes[0]])
    for v in nodes[1:]:
        candidates &= set(cover.per_node_membership[v])
        if not candidates:
            return None
    return min(candidates)
