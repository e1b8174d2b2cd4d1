"""Brute-force referees: all-pairs hop-limited distance tables.

``table[h][s, v] = min(table[h-1][s, v], min_u table[h-1][s, u] + w(u, v))``,
evaluated with numpy over an edge list grouped by head node.
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .graph import INF, WeightedGraph, all_pairs_dijkstra

DEFAULT_ORACLE_CAP = 512
_CHUNK_CELLS = 1 << 22


class OracleCapExceeded(ValueError):
    pass


def oracle_cap() -> int:
    return int(os.environ.get("HOPSET_ORACLE_CAP", DEFAULT_ORACLE_CAP))


class _Relaxer:
    def __init__(self, n: int, edges: Iterable[Sequence[int]]):
        best: dict[tuple[int, int], int] = {}
        for u, v, w, *_ in edges:
            if u == v:
                continue
            for a, b in ((u, v), (v, u)):
                if (a, b) not in best or w < best[(a, b)]:
                    best[(a, b)] = int(w)
        self.n = n
        if best:
            arr = np.array(sorted((b, a, w) for (a, b), w in best.items()), dtype=np.int64)
            self.dst, self.src, self.w = arr[:, 0], arr[:, 1], arr[:, 2]
            self.heads, self.starts = np.unique(self.dst, return_index=True)
        else:
            self.src = self.dst = self.w = self.heads = self.starts = np.zeros(0, dtype=np.int64)

    def step(self, D: np.ndarray) -> np.ndarray:
        new = D.copy()
        if self.src.size == 0:
            return new
        rows = max(1, _CHUNK_CELLS // self.src.size)
        for lo in range(0, D.shape[0], rows):
            block = D[lo : lo + rows]
            vals = block[:, self.src] + self.w[None, :]
            mins = np.minimum.reduceat(vals, self.starts, axis=1)
            sub = new[lo : lo + rows]
            sub[:, self.heads] = np.minimum(sub[:, self.heads], mins)
        np.minimum(new, INF, out=new)
        return new


def zero_hop_table(n: int, rows: Sequence[int] | None = None) -> np.ndarray:
    rows = list(range(n)) if rows is None else list(rows)
    D = np.full((len(rows), n), INF, dtype=np.int64)
    D[np.arange(len(rows)), rows] = 0
    return D


def hop_tables(n: int, edges: Iterable[Sequence[int]], rows: Sequence[int] | None = None) -> Iterator[np.ndarray]:
    """Yield ``table[0], table[1], ...`` until the table stops changing."""
    relax = _Relaxer(n, edges)
    D = zero_hop_table(n, rows)
    yield D
    for _ in range(max(n - 1, 0)):
        nxt = relax.step(D)
        if np.array_equal(nxt, D):
            return
        D = nxt
        yield D


def hop_limited_all_pairs(n: int, edges: Iterable[Sequence[int]], ell: int, rows: Sequence[int] | None = None) -> np.ndarray:
    relax = _Relaxer(n, edges)
    D = zero_hop_table(n, rows)
    for _ in range(min(ell, max(n - 1, 0))):
        nxt = relax.step(D)
        if np.array_equal(nxt, D):
            break
        D = nxt
    return D


def hop_limited_oracle(g: WeightedGraph, ell: int, cap: int | None = None) -> np.ndarray:
    """All-pairs ``d^ell`` table for ``g`` (refuses graphs above the oracle cap)."""
    cap = oracle_cap() if cap is None else cap
    if g.n > cap:
        raise OracleCapExceeded(f"n={g.n} exceeds oracle cap {cap}")
    if ell < 0:
        raise ValueError("ell must be >= 0")
    return hop_limited_all_pairs(g.n, g.edges, ell)


def stretch_threshold(D: np.ndarray, eps: Fraction) -> np.ndarray:
    """``floor((1 + eps) * D)`` with ``INF`` kept for unreachable pairs."""
    eps = Fraction(eps)
    num, den = eps.numerator + eps.denominator, eps.denominator
    reach = D < INF
    thr = np.full_like(D, INF)
    thr[reach] = (D[reach] * num) // den
    return thr


def smallest_hopbound(
    n: int, edges: Iterable[Sequence[int]], exact: np.ndarray, eps: Fraction
) -> tuple[int, np.ndarray]:
    """Smallest ``beta`` with ``d^beta <= (1 + eps) d`` on every pair, and that table."""
    thr = stretch_threshold(exact, eps)
    for h, D in enumerate(hop_tables(n, edges)):
        if np.all(D <= thr):
            return h, D
    raise AssertionError("hop DP converged without meeting the stretch target; hopset is unsound")


def exact_all_pairs(g: WeightedGraph) -> np.ndarray:
    return all_pairs_dijkstra(g)
