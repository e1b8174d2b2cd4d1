"""Hop-limited Bellman-Ford as a simulator node program, one stream per source."""

from __future__ import annotations

from typing import Sequence

from .graph import INF, WeightedGraph
from .sim import Multiplexed, PhaseResult, Simulator


class LimitedBellmanFord:
    """Each stream floods distances from one source for at most ``ell`` rounds.

    A node forwards a stream's distance only in the round after it improved;
    ``allowed[s]`` (optional) restricts stream ``s`` to a node subset.
    """

    def __init__(
        self,
        graph: WeightedGraph,
        sources: Sequence[int],
        ell: int,
        allowed: Sequence[frozenset[int] | None] | None = None,
    ):
        self.adj = graph.adj
        self.sources = list(sources)
        self.ell = ell
        self.allowed = list(allowed) if allowed is not None else [None] * len(self.sources)
        self.unrestricted = all(a is None for a in self.allowed)
        self.origin: dict[int, list[int]] = {}
        for s, src in enumerate(self.sources):
            self.origin.setdefault(src, []).append(s)

    def init(self, v: int):
        return {s: [0, True] for s in self.origin.get(v, ())}

    def send(self, v: int, state, t: int):
        if t > self.ell or not state:
            return None
        offers = {}
        for s, st in state.items():
            if st[1]:
                st[1] = False
                offers[s] = st[0]
        if not offers:
            return None
        if self.unrestricted:
            payload = Multiplexed(offers)
            return [(u, payload) for u, _ in self.adj[v]]
        out = []
        for u, _ in self.adj[v]:
            load = {s: d for s, d in offers.items() if self.allowed[s] is None or u in self.allowed[s]}
            if load:
                out.append((u, Multiplexed(load)))
        return out

    def receive(self, v: int, state, t: int, inbox):
        weights = dict(self.adj[v])
        for src, payload in inbox:
            w = weights[src]
            for s, d in payload.items():
                nd = d + w
                st = state.get(s)
                if st is None:
                    state[s] = [nd, True]
                elif nd < st[0]:
                    st[0], st[1] = nd, True
        return state


def run_limited_bf(
    sim: Simulator,
    graph: WeightedGraph,
    sources: Sequence[int],
    ell: int,
    label: str,
    allowed: Sequence[frozenset[int] | None] | None = None,
) -> tuple[list[list[int]], PhaseResult]:
    """Per-source ``d^ell`` arrays (``INF`` where unreached) and the phase result."""
    if not sources:
        return [], None
    res = sim.run_phase(label, LimitedBellmanFord(graph, sources, ell, allowed), max(ell, 0))
    dist = [[INF] * graph.n for _ in sources]
    for v, st in enumerate(res.states):
        for s, (d, _) in (st or {}).items():
            dist[s][v] = d
    return dist, res
