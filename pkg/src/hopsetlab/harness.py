"""Experiment driver: build hopsets per seed and run the requested checks.

Reports contain only deterministic quantities (no timings), so two runs of the
same spec serialise to identical JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from .builder import BuildStats, ConfigInfeasible, Hopset, HopsetConfig, build_hopset, size_report
from .cover import Cover, LddConfig, limited_pairwise_cover, padding_probability_check
from .graph import INF, GraphError, WeightedGraph, bellman_ford_limited, generate_graph, shortest_path
from .oracle import OracleCapExceeded, exact_all_pairs, hop_limited_all_pairs, oracle_cap, smallest_hopbound, stretch_threshold
from .sim import RoundLedger, SimConfig, SimulationError, Simulator

CHECKS = ("stretch", "size", "hopbound", "cover", "padding", "rounds", "determinism")
_EXPECTED_ERRORS = (SimulationError, ConfigInfeasible, GraphError, OracleCapExceeded, ValueError, AssertionError)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    n: int
    cfg: HopsetConfig = field(default_factory=HopsetConfig)
    seeds: tuple[int, ...] = (0,)
    checks: tuple[str, ...] = ()
    params: dict[str, Any] = field(default_factory=lambda: {"w_range": (1, 10)}, hash=False)
    beta_check: int | None = None
    cover_pairs: int = 500
    cover_W: float | None = None
    padding: tuple[tuple[float, float], ...] = ((0.2, 2.0), (0.1, 4.0))
    padding_trials: int = 2000
    size_constant: float | None = None
    rounds_constant: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "checks", tuple(self.checks))
        if not self.seeds:
            raise ValueError("an experiment needs at least one seed")
        unknown = [c for c in self.checks if c not in CHECKS]
        if unknown:
            raise ValueError(f"unknown checks {unknown}; expected a subset of {CHECKS}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.n,
            "cfg": self.cfg.to_dict(),
            "seeds": list(self.seeds),
            "checks": list(self.checks),
            "params": {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.params.items())},
            "beta_check": self.beta_check,
            "cover_pairs": self.cover_pairs,
            "cover_W": self.cover_W,
            "padding": [list(p) for p in self.padding],
            "padding_trials": self.padding_trials,
            "size_constant": self.size_constant,
            "rounds_constant": self.rounds_constant,
        }


@dataclass
class Report:
    spec: dict[str, Any]
    seeds: dict[str, dict[str, Any]] = field(default_factory=dict)

    def check_passed(self, name: str) -> bool:
        return all(entry["checks"][name]["pass"] for entry in self.seeds.values())

    @property
    def passed(self) -> bool:
        return all(self.check_passed(c) for c in self.spec["checks"]) and not any(
            "error" in e for e in self.seeds.values()
        )

    def to_dict(self) -> dict[str, Any]:
        summary = {c: self.check_passed(c) for c in self.spec["checks"]}
        return {"spec": self.spec, "seeds": self.seeds, "summary": summary, "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=1) + "\n"

    def summary(self) -> str:
        lines = [f"experiment {self.spec['kind']} n={self.spec['n']} seeds={self.spec['seeds']}"]
        for seed, entry in self.seeds.items():
            if "error" in entry:
                lines.append(f"  seed {seed}: ERROR {entry['error']}")
            b = entry.get("build", {})
            if b:
                lines.append(
                    f"  seed {seed}: |H|={b['size']} rounds={b['rounds']} beta_cap={b['beta_cap']} ell={b['ell']}"
                )
            for name, res in entry.get("checks", {}).items():
                status = "PASS" if res["pass"] else "FAIL"
                extra = f" counterexample={res['counterexample']}" if "counterexample" in res else ""
                lines.append(f"    {name}: {status}{extra}")
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, float):
        return round(x, 9)
    return x


class _Context:
    """Per-seed state shared by the checks; expensive oracles are computed once."""

    def __init__(self, spec: ExperimentSpec, seed: int, g: WeightedGraph, hopset: Hopset, ledger: RoundLedger, stats: BuildStats):
        self.spec = spec
        self.seed = seed
        self.g = g
        self.hopset = hopset
        self.ledger = ledger
        self.stats = stats
        self.eps = spec.cfg.eps
        self._exact: np.ndarray | None = None
        self._beta_emp: int | None = None
        self.union_edges = [*g.edges, *hopset.edges]

    @property
    def exact(self) -> np.ndarray:
        if self._exact is None:
            if self.g.n > oracle_cap():
                raise OracleCapExceeded(f"n={self.g.n} exceeds oracle cap {oracle_cap()}")
            self._exact = exact_all_pairs(self.g)
        return self._exact

    @property
    def beta_emp(self) -> int:
        if self._beta_emp is None:
            self._beta_emp, _ = smallest_hopbound(self.g.n, self.union_edges, self.exact, self.eps)
        return self._beta_emp

    @property
    def beta_check(self) -> int:
        return self.spec.beta_check if self.spec.beta_check is not None else self.stats.beta_cap


def _scale_of(d: int) -> int:
    """``kappa`` with ``d`` in ``(2^kappa, 2^(kappa+1)]``."""
    return max(0, math.ceil(math.log2(d)) - 1) if d > 1 else 0


def _segments(cover: Cover, path: list[int], threshold: float) -> list[dict[str, Any]]:
    """Greedy split of ``path`` into maximal runs that share a cluster."""
    by_id = {c.id: c for c in cover.clusters}
    out, i = [], 0
    while i < len(path):
        best_id, best_j = None, i
        for cid in cover.per_node_membership[path[i]]:
            members = by_id[cid].members
            j = i
            while j + 1 < len(path) and path[j + 1] in members:
                j += 1
            if j > best_j or best_id is None:
                best_id, best_j = cid, j
        c = by_id[best_id]
        out.append(
            {
                "cluster": c.id,
                "center": c.center,
                "rep": c.rep,
                "size": len(c),
                "big": len(c) >= threshold,
                "from": i,
                "to": best_j,
            }
        )
        i = best_j + 1
    return out


def check_stretch(ctx: _Context) -> dict[str, Any]:
    g, D = ctx.g, ctx.exact
    under = [(u, v, w) for u, v, w in ctx.hopset.edges if w < D[u, v]]
    beta = ctx.beta_check
    T = hop_limited_all_pairs(g.n, ctx.union_edges, beta)
    reach = D < INF
    below = np.argwhere(reach & (T < D))
    thr = stretch_threshold(D, ctx.eps)
    over = reach & (T > thr)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(reach & (D > 0), T / np.where(D > 0, D, 1), 1.0)
    res: dict[str, Any] = {
        "beta_check": beta,
        "pairs": int(reach.sum() - g.n) // 2,
        "underestimating_edges": len(under),
        "pairs_below_distance": int(len(below)) // 2,
        "pairs_over_stretch": int(over.sum()) // 2,
        "max_ratio": "inf" if (reach & (T >= INF)).any() else float(ratio.max()),
    }
    res["pass"] = not under and not len(below) and not over.any()
    if under:
        u, v, w = under[0]
        res["counterexample"] = {"edge": [u, v], "weight": w, "distance": int(D[u, v])}
    elif len(below):
        u, v = (int(x) for x in below[0])
        res["counterexample"] = {"pair": [min(u, v), max(u, v)], "d": int(D[u, v]), "estimate": int(T[u, v])}
    elif over.any():
        flat = np.where(over, ratio, -1.0)
        u, v = (int(x) for x in np.unravel_index(int(np.argmax(flat)), flat.shape))
        u, v = min(u, v), max(u, v)
        d = int(D[u, v])
        kappa = _scale_of(d)
        cx: dict[str, Any] = {
            "pair": [u, v],
            "d": d,
            "estimate": int(T[u, v]) if T[u, v] < INF else "inf",
            "ratio": "inf" if T[u, v] >= INF else float(ratio[u, v]),
            "scale": kappa,
        }
        path = shortest_path(g, u, v)
        cx["path"] = path
        cover = ctx.stats.covers.get(kappa)
        if cover is not None and path is not None:
            cx["segments"] = _segments(cover, path, g.n**ctx.spec.cfg.mu)
        res["counterexample"] = cx
    return res


def check_hopbound(ctx: _Context) -> dict[str, Any]:
    beta0, _ = smallest_hopbound(ctx.g.n, ctx.g.edges, ctx.exact, ctx.eps)
    cap = ctx.stats.beta_cap
    res = {"beta_emp": ctx.beta_emp, "beta_without_hopset": beta0, "beta_cap": cap, "pass": ctx.beta_emp <= cap}
    if not res["pass"]:
        T = hop_limited_all_pairs(ctx.g.n, ctx.union_edges, cap)
        over = (ctx.exact < INF) & (T > stretch_threshold(ctx.exact, ctx.eps))
        u, v = (int(x) for x in np.argwhere(over)[0])
        res["counterexample"] = {"pair": [min(u, v), max(u, v)], "d": int(ctx.exact[u, v])}
    return res


def check_size(ctx: _Context) -> dict[str, Any]:
    rep = size_report(ctx.hopset, ctx.g.n, ctx.spec.cfg.k)
    forest_bad = [s.kappa for s in ctx.stats.scales if s.max_star_edges_per_rep > ctx.g.n - 1]
    res = {
        "total": rep["total"],
        "per_scale": {str(k): v for k, v in rep["per_scale"].items()},
        "normalizer": rep["normalizer"],
        "ratio": rep["ratio"],
        "size_constant": ctx.spec.size_constant,
    }
    ok = not forest_bad
    if ctx.spec.size_constant is not None and rep["ratio"] > ctx.spec.size_constant:
        ok = False
    res["pass"] = ok
    if forest_bad:
        res["counterexample"] = {"scale": forest_bad[0], "reason": "star edges in one repetition exceed n-1"}
    elif not ok:
        worst = max(rep["per_scale"].items(), key=lambda kv: kv[1])
        res["counterexample"] = {"scale": worst[0], "edges": worst[1]}
    return res


def check_rounds(ctx: _Context) -> dict[str, Any]:
    lg2 = math.log2(max(ctx.g.n, 2)) ** 2
    total = ctx.ledger.total_rounds
    normalized = total / (max(ctx.beta_emp, 1) * lg2)
    phases = ctx.ledger.phase_rounds
    res: dict[str, Any] = {
        "total_rounds": total,
        "beta_emp": ctx.beta_emp,
        "normalized": normalized,
        "violations": len(ctx.ledger.violations),
        "by_kind": {
            kind: sum(r for label, r in phases.items() if label.split("/")[-1].startswith(kind))
            for kind in ("cover", "upload", "download", "stars", "mssp")
        },
        "rounds_constant": ctx.spec.rounds_constant,
    }
    ok = res["violations"] == 0
    if ctx.spec.rounds_constant is not None and normalized > ctx.spec.rounds_constant:
        ok = False
    res["pass"] = ok
    if ctx.ledger.violations:
        v = ctx.ledger.violations[0]
        res["counterexample"] = {"phase": v.phase, "round": v.round, "src": v.src, "dst": v.dst, "kind": v.kind}
    elif not ok:
        worst = max(phases.items(), key=lambda kv: kv[1])
        res["counterexample"] = {"phase": worst[0], "rounds": worst[1]}
    return res


def _auto_width(Dl: np.ndarray) -> Fraction:
    vals = Dl[(Dl > 0) & (Dl < INF)]
    if vals.size == 0:
        return Fraction(1)
    med = int(np.median(vals))
    return Fraction(1 << max(0, int(math.floor(math.log2(max(med, 1))))))


def cover_containment(
    g: WeightedGraph, cover: Cover, ell: int, W: Fraction, pairs: int, seed: int, Dl: np.ndarray | None = None
) -> dict[str, Any]:
    """Fraction of sampled pairs with ``d^ell in [W, 2W]`` whose limited shortest path lies in one cluster.

    A cluster ``C`` contains some shortest ``ell``-limited path iff the
    ``ell``-limited distance inside ``G[C]`` equals the one in ``G``.
    """
    Dl = hop_limited_all_pairs(g.n, g.edges, ell) if Dl is None else Dl
    iu, ju = np.triu_indices(g.n, k=1)
    d = Dl[iu, ju]
    lo, hi = W, 2 * W
    mask = (d >= math.ceil(lo)) & (d <= math.floor(hi)) & (d < INF)
    cand = np.flatnonzero(mask)
    rng = np.random.default_rng(np.random.SeedSequence([seed & ((1 << 64) - 1), 4]))
    if cand.size > pairs:
        cand = np.sort(rng.choice(cand, size=pairs, replace=False))
    by_id = {c.id: c for c in cover.clusters}
    cache: dict[tuple[int, int], list[int]] = {}
    failures: list[list[int]] = []
    contained = 0
    for idx in cand.tolist():
        u, v = int(iu[idx]), int(ju[idx])
        target = int(Dl[u, v])
        hit = False
        common = sorted(set(cover.per_node_membership[u]) & set(cover.per_node_membership[v]))
        for cid in common:
            key = (cid, u)
            if key not in cache:
                sub, ids = g.induced(by_id[cid].members)
                local = ids.index(u)
                dist = bellman_ford_limited(sub, [local], ell).dist
                cache[key] = {ids[i]: dd for i, dd in enumerate(dist)}
            if cache[key].get(v, INF) == target:
                hit = True
                break
        if hit:
            contained += 1
        else:
            failures.append([u, v])
    sampled = int(cand.size)
    return {
        "W": str(W),
        "ell": ell,
        "sampled": sampled,
        "contained": contained,
        "fraction": contained / sampled if sampled else 1.0,
        "failures": failures,
    }


def cover_structure(cover: Cover) -> list[str]:
    """Structural violations: partition per repetition and the overlap bound."""
    problems = []
    for rep in range(cover.reps):
        seen: dict[int, int] = {}
        for c in cover.partition(rep):
            if c.center not in c.members:
                problems.append(f"cluster {c.id} misses its centre")
            for v in c.members:
                if v in seen:
                    problems.append(f"node {v} in clusters {seen[v]} and {c.id} of repetition {rep}")
                seen[v] = c.id
        if len(seen) != cover.n:
            problems.append(f"repetition {rep} covers {len(seen)} of {cover.n} nodes")
    for v, ids in enumerate(cover.per_node_membership):
        if len(ids) > cover.reps:
            problems.append(f"node {v} in {len(ids)} clusters > reps {cover.reps}")
    return problems


def check_cover(ctx: _Context) -> dict[str, Any]:
    g, cfg = ctx.g, ctx.spec.cfg
    ell = cfg.exploration(g.n)
    Dl = hop_limited_all_pairs(g.n, g.edges, ell)
    W = Fraction(ctx.spec.cover_W).limit_denominator(1 << 16) if ctx.spec.cover_W else _auto_width(Dl)
    sim = Simulator(g.n, SimConfig(seed=ctx.seed))
    cover = limited_pairwise_cover(g, W, ell, cfg.eps0, LddConfig(reps=cfg.reps, c1=cfg.c1), sim, "check/cover")
    problems = cover_structure(cover)
    cont = cover_containment(g, cover, ell, W, ctx.spec.cover_pairs, ctx.seed, Dl)
    target = 1 - 1 / g.n
    res = {
        "W": cont["W"],
        "ell": ell,
        "reps": cover.reps,
        "sampled": cont["sampled"],
        "contained": cont["contained"],
        "fraction": cont["fraction"],
        "target": target,
        "structure_violations": len(problems),
        "rounds": cover.rounds,
    }
    res["pass"] = not problems and cont["fraction"] >= target
    if problems:
        res["counterexample"] = {"structure": problems[0]}
    elif cont["failures"]:
        res["counterexample"] = {"pair": cont["failures"][0]}
    return res


def padding_bound(alpha: float, r: float, trials: int) -> tuple[float, float]:
    p = math.exp(-2 * r * alpha)
    return p, math.sqrt(p * (1 - p) / trials)


def check_padding(ctx: _Context) -> dict[str, Any]:
    runs, ok, cx = [], True, None
    for alpha, r in ctx.spec.padding:
        freq = padding_probability_check(ctx.g, alpha, r, ctx.spec.padding_trials, ctx.seed)
        p, sigma = padding_bound(alpha, r, ctx.spec.padding_trials)
        worst = int(np.argmin(freq))
        good = freq[worst] >= p - 3 * sigma
        runs.append({"alpha": alpha, "r": r, "bound": p, "sigma": sigma, "min_frequency": freq[worst], "pass": good})
        if not good and cx is None:
            cx = {"node": worst, "alpha": alpha, "r": r, "frequency": freq[worst]}
        ok &= good
    res: dict[str, Any] = {"runs": runs, "pass": ok}
    if cx is not None:
        res["counterexample"] = cx
    return res


def check_determinism(ctx: _Context) -> dict[str, Any]:
    H2, L2, S2 = build_hopset(ctx.g, ctx.spec.cfg, ctx.seed)
    same = {
        "hopset": H2.dump() == ctx.hopset.dump(),
        "ledger": L2.summary_csv() == ctx.ledger.summary_csv(),
        "stats": S2.jsonl() == ctx.stats.jsonl(),
    }
    res: dict[str, Any] = {**same, "pass": all(same.values())}
    if not res["pass"]:
        res["counterexample"] = {"differs": sorted(k for k, v in same.items() if not v)}
    return res


CHECK_FUNCS: dict[str, Callable[[_Context], dict[str, Any]]] = {
    "stretch": check_stretch,
    "size": check_size,
    "hopbound": check_hopbound,
    "cover": check_cover,
    "padding": check_padding,
    "rounds": check_rounds,
    "determinism": check_determinism,
}


def _build_summary(g: WeightedGraph, hopset: Hopset, ledger: RoundLedger, stats: BuildStats) -> dict[str, Any]:
    return {
        "n": g.n,
        "m": g.m,
        "size": hopset.size,
        "rounds": ledger.total_rounds,
        "beta_cap": stats.beta_cap,
        "ell": stats.ell,
        "eps_prime": stats.eps_prime,
        "reps": stats.reps,
        "scales": [s.kappa for s in stats.scales],
    }


def run_seed(spec: ExperimentSpec, seed: int) -> tuple[dict[str, Any], _Context | None]:
    entry: dict[str, Any] = {"checks": {}}
    ctx = None
    try:
        g = generate_graph(spec.kind, spec.n, spec.params, seed)
        hopset, ledger, stats = build_hopset(g, spec.cfg, seed, keep_covers="stretch" in spec.checks)
        entry["build"] = _build_summary(g, hopset, ledger, stats)
        ctx = _Context(spec, seed, g, hopset, ledger, stats)
    except _EXPECTED_ERRORS as exc:
        entry["error"] = f"{type(exc).__name__}: {exc}"
        for name in spec.checks:
            entry["checks"][name] = {"pass": False, "error": entry["error"]}
        return entry, None
    for name in spec.checks:
        try:
            entry["checks"][name] = CHECK_FUNCS[name](ctx)
        except _EXPECTED_ERRORS as exc:
            entry["checks"][name] = {"pass": False, "error": f"{type(exc).__name__}: {exc}"}
    return entry, ctx


def run_experiment(spec: ExperimentSpec) -> Report:
    report = Report(spec.to_dict())
    for seed in spec.seeds:
        entry, _ = run_seed(spec, seed)
        report.seeds[str(seed)] = entry
    return report
