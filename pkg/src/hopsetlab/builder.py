"""Scale-by-scale sparse hopset construction on the Congested Clique simulator.

For each distance scale ``(R, 2R]`` (``R = 2^kappa``, ascending from
``floor(log2 beta)``) on ``G`` plus the edges of all earlier scales:

1. build an ``l``-limited ``W``-pairwise cover, ``l = 2 beta + 1``;
2. clusters below ``n^mu`` nodes ship their topology to the centre (Lenzen
   routing), which computes a local hopset and routes the edges back;
3. every big cluster gets a star from its centre, with ``l``-limited
   in-cluster Bellman-Ford distances as weights;
4. big-cluster centres are joined by ``d^l`` edges from a multi-source
   Bellman-Ford over the whole construction graph.

Every weight written into the hopset is the length of an actual walk, so
``G + H`` never underestimates a distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .bf import run_limited_bf
from .cover import Cover, LddConfig, limited_pairwise_cover
from .graph import INF, WeightedGraph
from .local import build_local_hopset
from .oracle import exact_all_pairs, smallest_hopbound
from .sim import Model, RoundLedger, SimConfig, Simulator


class ConfigInfeasible(ValueError):
    pass


def _log2(n: int) -> float:
    return math.log2(max(n, 2))


@dataclass(frozen=True)
class HopsetConfig:
    eps: Fraction = Fraction(1, 2)
    k: int = 2
    c2: float = 2.0
    mu: float = 0.5
    c_W: float = 0.25
    eps0: Fraction = Fraction(1, 2)
    c_beta: float = 1.0 / 16
    beta_cap: int | None = None
    hop_cap: int | None = None
    local_mode: str = "tz"
    c1: float = 3.0
    reps: int | None = None
    measure_local_beta: bool = False

    def __post_init__(self) -> None:
        eps = Fraction(self.eps).limit_denominator(1 << 16)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "eps0", Fraction(self.eps0).limit_denominator(1 << 16))
        if not 0 < eps <= 1:
            raise ConfigInfeasible(f"eps must be in (0, 1], got {eps}")
        if self.k < 2:
            raise ConfigInfeasible(f"k must be >= 2, got {self.k}")
        if not 0 < self.mu < 1:
            raise ConfigInfeasible(f"mu must be in (0, 1), got {self.mu}")
        if self.c2 <= 0 or self.c_W <= 0 or self.c_beta <= 0:
            raise ConfigInfeasible("c2, c_W and c_beta must be positive")
        if not 0 < self.eps0 <= 1:
            raise ConfigInfeasible(f"eps0 must be in (0, 1], got {self.eps0}")
        if self.beta_cap is not None and self.beta_cap < 1:
            raise ConfigInfeasible("beta_cap must be >= 1")
        if self.hop_cap is not None and self.hop_cap < 1:
            raise ConfigInfeasible("hop_cap must be >= 1")
        if self.local_mode not in ("tz", "clique"):
            raise ConfigInfeasible(f"unknown local mode {self.local_mode!r}")

    def hopbound_cap(self, n: int) -> int:
        """Target hopbound: the asymptotic bound with constant ``c_beta``."""
        if self.beta_cap is not None:
            return self.beta_cap
        lg = _log2(n)
        eps = float(self.eps)
        exponent = math.log2(self.k + 1) - 1
        value = self.c_beta * (lg * lg / eps) * (lg * math.log2(self.k) / eps) ** exponent
        return max(1, math.ceil(value))

    def exploration(self, n: int) -> int:
        return self.hop_cap if self.hop_cap is not None else 2 * self.hopbound_cap(n) + 1

    def eps_prime(self, n: int, scales: int) -> Fraction:
        """Per-scale slack, shrunk further if ``scales`` compounding would exceed ``1 + eps``."""
        ep = Fraction(self.eps / Fraction(self.c2 * _log2(n)).limit_denominator(1 << 16)).limit_denominator(1 << 20)
        if scales > 0 and (1 + float(ep)) ** scales > 1 + float(self.eps):
            ep = Fraction((1 + float(self.eps)) ** (1.0 / scales) - 1).limit_denominator(1 << 20)
        return ep

    def cover_width(self, R: int, n: int, eps_prime: Fraction) -> Fraction:
        w = self.c_W * float(eps_prime) * R / math.log(max(n, 2))
        return max(Fraction(1), Fraction(w).limit_denominator(1 << 16))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["eps"] = str(self.eps)
        d["eps0"] = str(self.eps0)
        return d


@dataclass(frozen=True)
class DistanceScale:
    kappa: int
    R: int
    W: Fraction
    ell: int


@dataclass
class Hopset:
    n: int
    per_scale: dict[int, list[tuple[int, int, int]]] = field(default_factory=dict)

    @property
    def edges(self) -> list[tuple[int, int, int]]:
        best: dict[tuple[int, int], int] = {}
        for es in self.per_scale.values():
            for u, v, w in es:
                if (u, v) not in best or w < best[(u, v)]:
                    best[(u, v)] = w
        return [(u, v, w) for (u, v), w in sorted(best.items())]

    @property
    def size(self) -> int:
        return len(self.edges)

    def dump(self) -> str:
        lines = [f"{u} {v} {w} {kappa}" for kappa in sorted(self.per_scale) for u, v, w in self.per_scale[kappa]]
        return "\n".join(lines) + ("\n" if lines else "")

    def union_graph(self, g: WeightedGraph) -> WeightedGraph:
        return WeightedGraph.union(g.n, g.edges, self.edges)


@dataclass
class ScaleStats:
    kappa: int
    R: int
    W: str
    ell: int
    small: int
    big: int
    edges_added: int
    local_edges: int
    star_edges: int
    clique_edges: int
    max_star_edges_per_rep: int
    big_centers: int
    rounds: int
    local_beta_max: int | None = None


@dataclass
class BuildStats:
    n: int
    m: int
    beta_cap: int
    ell: int
    eps_prime: str
    reps: int
    scales: list[ScaleStats] = field(default_factory=list)
    covers: dict[int, Cover] = field(default_factory=dict, repr=False, compare=False)

    def jsonl(self) -> str:
        return "".join(json.dumps(asdict(s), sort_keys=True) + "\n" for s in self.scales)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "m": self.m,
            "beta_cap": self.beta_cap,
            "ell": self.ell,
            "eps_prime": self.eps_prime,
            "reps": self.reps,
            "scales": [asdict(s) for s in self.scales],
        }


def scale_range(g: WeightedGraph, beta: int) -> list[int]:
    """Scale indices ``kappa`` whose ``(2^kappa, 2^(kappa+1)]`` can hold a distance."""
    dmax = max(g.n - 1, 0) * g.max_weight()
    kappa0 = int(math.floor(math.log2(beta))) if beta >= 1 else 0
    out = []
    kappa = kappa0
    while (1 << kappa) < dmax:
        out.append(kappa)
        kappa += 1
    return out


def _pack_batches(per_rep: list[list[tuple]], n: int) -> list[list[tuple]]:
    """Greedily merge per-repetition message sets while every load stays <= n."""
    batches: list[list[tuple]] = []
    cur: list[tuple] = []
    out_load: dict[int, int] = {}
    in_load: dict[int, int] = {}
    for msgs in per_rep:
        o: dict[int, int] = {}
        i: dict[int, int] = {}
        for m in msgs:
            o[m[0]] = o.get(m[0], 0) + 1
            i[m[1]] = i.get(m[1], 0) + 1
        fits = all(out_load.get(x, 0) + c <= n for x, c in o.items()) and all(
            in_load.get(x, 0) + c <= n for x, c in i.items()
        )
        if not fits and cur:
            batches.append(cur)
            cur, out_load, in_load = [], {}, {}
        cur.extend(msgs)
        for x, c in o.items():
            out_load[x] = out_load.get(x, 0) + c
        for x, c in i.items():
            in_load[x] = in_load.get(x, 0) + c
    if cur:
        batches.append(cur)
    return batches


class _ScaleBuilder:
    def __init__(self, g: WeightedGraph, cfg: HopsetConfig, sim: Simulator, seed: int):
        self.g = g
        self.cfg = cfg
        self.sim = sim
        self.seed = seed
        self.n = g.n
        self.threshold = self.n**cfg.mu

    def local_phase(self, gc: WeightedGraph, cover: Cover, small: list, eps_prime, label: str):
        """Upload small clusters, build local hopsets at the centres, route edges back."""
        reps = cover.reps
        uploads: list[list[tuple]] = [[] for _ in range(reps)]
        for c in small:
            for v in sorted(c.members):
                if v == c.center:
                    continue  # the centre already holds its own incident edges
                for x, w in gc.adj[v]:
                    if x in c.members and (v < x or x == c.center):
                        uploads[c.rep].append((v, c.center, (v, x, w)))
        for batch in _pack_batches(uploads, self.n):
            self.sim.lenzen_route(f"{label}/upload", batch)

        downloads: list[list[tuple]] = [[] for _ in range(reps)]
        found: list[tuple[int, int, int]] = []
        beta_max = None
        for c in small:
            sub, ids = gc.induced(c.members)
            rng = np.random.default_rng(np.random.SeedSequence([self.seed & ((1 << 64) - 1), c.center, c.rep, c.id]))
            res = build_local_hopset(
                sub, self.cfg.k, eps_prime, self.cfg.local_mode, rng, measure=self.cfg.measure_local_beta
            )
            if res.beta_prime is not None:
                beta_max = res.beta_prime if beta_max is None else max(beta_max, res.beta_prime)
            for a, b, w in res.edges:
                u, v = ids[a], ids[b]
                found.append((u, v, w))
                for end in (u, v):
                    if end != c.center:
                        downloads[c.rep].append((c.center, end, (u, v, w)))
        for batch in _pack_batches(downloads, self.n):
            self.sim.lenzen_route(f"{label}/download", batch)
        return found, beta_max

    def star_phase(self, gc: WeightedGraph, big: list, ell: int, label: str):
        centers = [c.center for c in big]
        dist, _ = run_limited_bf(self.sim, gc, centers, ell, label, allowed=[c.members for c in big])
        stars = []
        per_rep: dict[int, int] = {}
        for c, row in zip(big, dist):
            for v in sorted(c.members):
                if v != c.center and row[v] < INF:
                    stars.append((min(c.center, v), max(c.center, v), row[v]))
                    per_rep[c.rep] = per_rep.get(c.rep, 0) + 1
        return stars, max(per_rep.values(), default=0)

    def clique_phase(self, gc: WeightedGraph, centers: list[int], ell: int, label: str):
        dist, _ = run_limited_bf(self.sim, gc, centers, ell, label)
        out = []
        for i, a in enumerate(centers):
            for j in range(i + 1, len(centers)):
                b = centers[j]
                if dist[i][b] < INF:
                    out.append((min(a, b), max(a, b), dist[i][b]))
        return out

    def run_scale(
        self, kappa: int, gc: WeightedGraph, beta: int, ell: int, eps_prime: Fraction
    ) -> tuple[list, ScaleStats, Cover]:
        R = 1 << kappa
        W = self.cfg.cover_width(R, self.n, eps_prime)
        label = f"k{kappa}"
        before = self.sim.ledger.total_rounds
        cover = limited_pairwise_cover(
            gc, W, ell, self.cfg.eps0, LddConfig(reps=self.cfg.reps, c1=self.cfg.c1), self.sim, f"{label}/cover"
        )
        small = [c for c in cover.clusters if len(c) < self.threshold]
        big = [c for c in cover.clusters if len(c) >= self.threshold]

        local, beta_max = self.local_phase(gc, cover, small, eps_prime, f"{label}/local")
        stars, star_rep_max = self.star_phase(gc, big, ell, f"{label}/stars")
        centers = sorted({c.center for c in big})
        clique = self.clique_phase(gc, centers, ell, f"{label}/mssp") if len(centers) > 1 else []

        added: dict[tuple[int, int], int] = {}
        for u, v, w in (*local, *stars, *clique):
            have = gc.weight(u, v)
            if have is not None and have <= w:
                continue
            if w < added.get((u, v), INF):
                added[(u, v)] = w
        edges = [(u, v, w) for (u, v), w in sorted(added.items())]
        stats = ScaleStats(
            kappa=kappa,
            R=R,
            W=str(W),
            ell=ell,
            small=len(small),
            big=len(big),
            edges_added=len(edges),
            local_edges=len(local),
            star_edges=len(stars),
            clique_edges=len(clique),
            max_star_edges_per_rep=star_rep_max,
            big_centers=len(centers),
            rounds=self.sim.ledger.total_rounds - before,
            local_beta_max=beta_max,
        )
        return edges, stats, cover


def build_hopset(
    g: WeightedGraph,
    cfg: HopsetConfig | None = None,
    seed: int = 0,
    sim: Simulator | None = None,
    keep_covers: bool = False,
) -> tuple[Hopset, RoundLedger, BuildStats]:
    """Run the construction; returns the hopset, the round ledger and per-scale stats.

    With ``keep_covers`` the per-scale covers are kept in ``stats.covers``.
    """
    cfg = cfg or HopsetConfig()
    n = g.n
    sim = sim or Simulator(n, SimConfig(model=Model.CLIQUE, seed=seed))
    if sim.model is not Model.CLIQUE:
        raise ConfigInfeasible("the hopset construction runs in the Congested Clique model")
    beta = cfg.hopbound_cap(n)
    ell = cfg.exploration(n)
    kappas = scale_range(g, beta)
    eps_prime = cfg.eps_prime(n, len(kappas))
    hopset = Hopset(n)
    stats = BuildStats(n, g.m, beta, ell, str(eps_prime), LddConfig(reps=cfg.reps, c1=cfg.c1).repetitions(n))
    builder = _ScaleBuilder(g, cfg, sim, seed)
    gc = g
    for kappa in kappas:
        edges, st, cover = builder.run_scale(kappa, gc, beta, ell, eps_prime)
        hopset.per_scale[kappa] = edges
        stats.scales.append(st)
        if keep_covers:
            stats.covers[kappa] = cover
        if edges:
            gc = WeightedGraph.union(n, gc.edges, edges)
    return hopset, sim.ledger, stats


def measure_hopbound(g: WeightedGraph, H: Hopset | list, eps, exact: np.ndarray | None = None) -> int:
    """Smallest ``beta`` with ``d^beta_{G+H} <= (1 + eps) d_G`` on all pairs."""
    edges = H.edges if isinstance(H, Hopset) else list(H)
    exact = exact_all_pairs(g) if exact is None else exact
    beta, _ = smallest_hopbound(g.n, [*g.edges, *edges], exact, Fraction(eps))
    return beta


def size_normalizer(n: int, k: int) -> float:
    lg = _log2(n)
    return n ** (1 + 1 / (2 * k)) * lg + n * lg * lg


def size_report(H: Hopset, n: int, k: int) -> dict[str, Any]:
    per_scale = {kappa: len(es) for kappa, es in sorted(H.per_scale.items())}
    total = H.size
    return {
        "per_scale": per_scale,
        "total": total,
        "normalizer": size_normalizer(n, k),
        "ratio": total / size_normalizer(n, k) if total else 0.0,
    }
