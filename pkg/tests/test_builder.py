import math
from fractions import Fraction

import numpy as np
import pytest

from hopsetlab.builder import (
    ConfigInfeasible,
    Hopset,
    HopsetConfig,
    build_hopset,
    measure_hopbound,
    scale_range,
    size_normalizer,
    size_report,
)
from hopsetlab.graph import WeightedGraph, all_pairs_dijkstra, generate_graph
from hopsetlab.oracle import hop_limited_all_pairs, stretch_threshold
from hopsetlab.sim import Model, SimConfig, Simulator


def assert_hopset_ok(g, H, eps, beta):
    D = all_pairs_dijkstra(g)
    for u, v, w in H.edges:
        assert w >= D[u, v]
    T = hop_limited_all_pairs(g.n, [*g.edges, *H.edges], beta)
    assert np.all(T >= D)
    assert np.all(T <= stretch_threshold(D, eps))


def test_single_edge():
    g = WeightedGraph(2, [(0, 1, 7)])
    H, ledger, stats = build_hopset(g, HopsetConfig(), seed=0)
    assert H.size == 0
    assert measure_hopbound(g, H, Fraction(1, 2)) == 1


def test_unit_star():
    g = WeightedGraph(9, [(0, v, 1) for v in range(1, 9)])
    H, _, _ = build_hopset(g, HopsetConfig(), seed=1)
    assert measure_hopbound(g, H, Fraction(1, 2)) <= 2
    assert_hopset_ok(g, H, Fraction(1, 2), 2)


@pytest.mark.parametrize("mode", ["tz", "clique"])
@pytest.mark.parametrize("seed", range(2))
def test_er_stretch_at_measured_beta(mode, seed):
    g = generate_graph("erdos-renyi", 64, {"w_range": (1, 10)}, seed=seed)
    cfg = HopsetConfig(eps=Fraction(1, 2), k=2, local_mode=mode)
    H, ledger, stats = build_hopset(g, cfg, seed=seed)
    beta = measure_hopbound(g, H, cfg.eps)
    assert_hopset_ok(g, H, cfg.eps, beta)
    assert not ledger.violations


def test_measure_hopbound_trivial():
    g = generate_graph("path", 12, {}, seed=0)
    D = all_pairs_dijkstra(g)
    clique = [(u, v, int(D[u, v])) for u in range(12) for v in range(u + 1, 12)]
    assert measure_hopbound(g, clique, Fraction(1, 2)) == 1
    assert measure_hopbound(g, [], Fraction(1, 2)) == 11


def test_size_report():
    assert size_report(Hopset(64), 64, 2)["ratio"] == 0
    g = generate_graph("blob-chain", 64, {"w_range": (1, 5)}, seed=0)
    H, _, stats = build_hopset(g, HopsetConfig(), seed=0)
    rep = size_report(H, 64, 2)
    assert rep["total"] == H.size <= sum(rep["per_scale"].values())
    assert rep["normalizer"] == pytest.approx(64**1.25 * 6 + 64 * 36)
    assert all(s.max_star_edges_per_rep <= g.n - 1 for s in stats.scales)


def test_stats_and_dump_format():
    g = generate_graph("grid", 36, {"w_range": (1, 9)}, seed=2)
    H, ledger, stats = build_hopset(g, HopsetConfig(), seed=2)
    for line in H.dump().splitlines():
        u, v, w, kappa = map(int, line.split())
        assert u < v and w >= 1 and kappa in H.per_scale
    records = stats.jsonl().splitlines()
    assert len(records) == len(stats.scales)
    assert all('"kappa"' in r and '"rounds"' in r and '"edges_added"' in r for r in records)
    assert ledger.total_rounds == sum(s.rounds for s in stats.scales)


def test_scales_start_at_log_beta():
    g = generate_graph("path", 20, {"w_range": (1, 10)}, seed=0)
    ks = scale_range(g, 8)
    assert ks[0] == 3 and (1 << ks[-1]) < 19 * g.max_weight() <= (1 << (ks[-1] + 1))


def test_eps_prime_compounds_within_eps():
    cfg = HopsetConfig(eps=Fraction(1, 4))
    for n, scales in [(64, 6), (512, 40), (512, 400)]:
        ep = cfg.eps_prime(n, scales)
        assert (1 + float(ep)) ** scales <= 1 + float(cfg.eps) + 1e-9
        assert ep <= cfg.eps


def test_config_validation():
    for kw in [dict(eps=0), dict(eps=2), dict(k=1), dict(mu=1), dict(local_mode="x"), dict(eps0=0)]:
        with pytest.raises(ConfigInfeasible):
            HopsetConfig(**kw)
    g = WeightedGraph(2, [(0, 1, 1)])
    with pytest.raises(ConfigInfeasible):
        build_hopset(g, HopsetConfig(), sim=Simulator(2, SimConfig(model=Model.CONGEST), g))


def test_hopbound_cap_formula():
    cfg = HopsetConfig(eps=Fraction(1, 2), k=2, c_beta=1.0)
    lg = math.log2(256)
    expected = (lg * lg / 0.5) * (lg * 1 / 0.5) ** (math.log2(3) - 1)
    assert cfg.hopbound_cap(256) == math.ceil(expected)
    assert HopsetConfig(beta_cap=7).exploration(256) == 15
    assert HopsetConfig(hop_cap=9).exploration(256) == 9


def test_normalizer():
    assert size_normalizer(256, 2) == pytest.approx(256**1.25 * 8 + 256 * 64)


def test_build_deterministic():
    g = generate_graph("erdos-renyi", 48, {"w_range": (1, 9)}, seed=6)
    a = build_hopset(g, HopsetConfig(), seed=3)
    b = build_hopset(g, HopsetConfig(), seed=3)
    assert a[0].dump() == b[0].dump() and a[1].summary_csv() == b[1].summary_csv()
    assert a[2].jsonl() == b[2].jsonl()


def test_ledger_labels():
    g = generate_graph("blob-chain", 64, {"w_range": (1, 5)}, seed=1)
    _, ledger, _ = build_hopset(g, HopsetConfig(), seed=1)
    kinds = {label.split("/")[-1] for label in ledger.phase_rounds}
    assert {"cover", "stars", "mssp"} <= kinds
    assert ledger.rounds_matching("k") == ledger.total_rounds
