import math
from fractions import Fraction

import numpy as np
import pytest

from hopsetlab.cover import (
    SHIFT_SCALE,
    LddConfig,
    ShiftAssignment,
    cover_path_contained,
    draw_shifts,
    ldd_partition,
    ldd_partition_centralized,
    limited_pairwise_cover,
    padding_probability_check,
    round_weights,
)
from hopsetlab.graph import INF, WeightedGraph, dijkstra, generate_graph
from hopsetlab.harness import cover_structure
from hopsetlab.sim import SimConfig, Simulator


def brute_force_partition(g, fixed):
    """argmin_x d(v, x) * SHIFT_SCALE - r_x per node by scanning all x."""
    D = [dijkstra(g, v).dist for v in range(g.n)]
    out = []
    for v in range(g.n):
        best = min((D[v][x] * SHIFT_SCALE - fixed[x], x) for x in range(g.n) if D[v][x] < INF)
        out.append(best[1])
    return out


def test_rounding_example():
    rg = round_weights(WeightedGraph(2, [(0, 1, 7)]), 8, 4, 1)
    assert rg.eta == 2
    assert rg.graph.weight(0, 1) == 4


def test_rounding_exact_multiple():
    rg = round_weights(WeightedGraph(2, [(0, 1, 12)]), 8, 4, Fraction(1, 2))
    assert rg.eta == 1 and rg.graph.weight(0, 1) == 12


@pytest.mark.parametrize("seed", range(3))
def test_rounding_per_edge_bounds(seed):
    g = generate_graph("erdos-renyi", 50, {"w_range": (1, 100)}, seed=seed)
    rg = round_weights(g, 37, 9, Fraction(1, 3))
    for u, v, w in g.edges:
        hat = rg.graph.weight(u, v)
        assert hat >= 1 and rg.eta * hat >= w and rg.eta * hat < w + rg.eta


def test_rounding_rejects_bad_args():
    g = WeightedGraph(2, [(0, 1, 1)])
    for args in [(0, 1, 1), (4, 0, 1), (4, 1, 0), (4, 1, 2)]:
        with pytest.raises(ValueError):
            round_weights(g, *args)


def test_single_node_partition():
    sim = Simulator(1)
    part = ldd_partition(WeightedGraph(1, []), LddConfig(alpha=0.5), sim)
    assert len(part) == 1 and part[0].center == 0 and part[0].members == {0}


def test_edgeless_partition_singletons():
    g = WeightedGraph(6, [])
    part = ldd_partition(g, LddConfig(alpha=0.1), Simulator(6, SimConfig(seed=3)))
    assert sorted(c.center for c in part) == list(range(6))
    assert all(len(c) == 1 for c in part)


@pytest.mark.parametrize("seed", range(8))
def test_distributed_matches_centralized(seed):
    n = [16, 32, 48, 64][seed % 4]
    g = generate_graph("erdos-renyi", n, {"w_range": (1, 6)}, seed=seed)
    sim = Simulator(n, SimConfig(seed=seed))
    shifts = draw_shifts(sim, 0.3, "s")
    dist = ldd_partition(g, LddConfig(), sim, "ldd", shifts)
    cent = ldd_partition_centralized(g, shifts)
    assert [(c.center, c.members) for c in dist] == [(c.center, c.members) for c in cent]
    truth = brute_force_partition(g, shifts.fixed)
    for c in dist:
        assert all(truth[v] == c.center for v in c.members)


def test_ties_go_to_smaller_id():
    g = WeightedGraph(3, [(0, 1, 1), (1, 2, 1)])
    shifts = ShiftAssignment((0.0, 0.0, 0.0))
    part = ldd_partition(g, LddConfig(), Simulator(3), shifts=shifts)
    assert {c.center for c in part} == {0, 1, 2}
    shifts = ShiftAssignment((1.0, 0.0, 1.0))
    part = ldd_partition(g, LddConfig(), Simulator(3), shifts=shifts)
    # node 1 is at shifted distance 0 from both 0 and 2, and from itself
    assert next(c for c in part if 1 in c.members).center == 0


@pytest.mark.parametrize("seed", range(4))
def test_clusters_connected_and_within_shift(seed):
    g = generate_graph("grid", 64, {"w_range": (1, 5)}, seed=seed)
    sim = Simulator(64, SimConfig(seed=seed))
    shifts = draw_shifts(sim, 0.4, "s")
    for c in ldd_partition(g, LddConfig(), sim, shifts=shifts):
        sub, ids = g.induced(c.members)
        d = dijkstra(sub, ids.index(c.center)).dist
        assert max(d) < INF
        # in-cluster distance is what the member was reached with, and is bounded by the winning shift
        assert all(d[i] <= c.member_dist[v] for i, v in enumerate(ids))
        assert all(c.member_dist[v] * SHIFT_SCALE <= shifts.fixed[c.center] for v in c.members)


def test_max_shift_bound():
    n, alpha, c = 128, 0.05, 3.0
    fails = 0
    for seed in range(200):
        r = draw_shifts(Simulator(n, SimConfig(seed=seed)), alpha, "s").max_r
        fails += r > (c / alpha) * math.log(n)
    assert fails <= 2


def test_cover_structure_and_overlap():
    g = generate_graph("erdos-renyi", 96, {"w_range": (1, 9)}, seed=4)
    cover = limited_pairwise_cover(g, 4, 15, Fraction(1, 2), LddConfig(), Simulator(96, SimConfig(seed=4)))
    assert cover.reps == math.ceil(3 * math.log(96))
    assert cover_structure(cover) == []
    assert sum(len(c) for c in cover.clusters) == cover.reps * g.n
    edges_inside = sum(sum(1 for u, v, _ in g.edges if u in c.members and v in c.members) for c in cover.clusters)
    assert edges_inside <= cover.reps * g.m


def test_cover_zero_hops():
    g = generate_graph("path", 5, {}, seed=0)
    cover = limited_pairwise_cover(g, 1, 0, 1, LddConfig(reps=2), Simulator(5))
    assert all(cover_path_contained(cover, [v]) is not None for v in range(5))
    assert cover_structure(cover) == []


def test_path_contained_whp():
    n = 24
    g = generate_graph("path", n, {}, seed=0)
    reps = math.ceil(3 * math.log(n))
    hits = 0
    for seed in range(20):
        cover = limited_pairwise_cover(g, n, n - 1, 1, LddConfig(), Simulator(n, SimConfig(seed=seed)))
        assert cover.reps == reps
        hits += cover_path_contained(cover, range(n)) is not None
    assert hits == 20


def test_diameter_transfer():
    n, W, ell = 100, Fraction(3), 11
    g = generate_graph("grid", n, {"w_range": (1, 4)}, seed=2)
    cover = limited_pairwise_cover(g, W, ell, Fraction(1, 2), LddConfig(), Simulator(n, SimConfig(seed=2)))
    for c in cover.clusters:
        sub, ids = g.induced(c.members)
        far = max(dijkstra(sub, ids.index(c.center)).dist)
        assert far <= 6 * W * math.log(n)


def test_padding_trivial_cases():
    g = generate_graph("erdos-renyi", 30, {"w_range": (1, 3)}, seed=1)
    assert padding_probability_check(g, 0.5, 0, 50) == [1.0] * 30
    assert min(padding_probability_check(g, 1e-7, 3, 50)) == 1.0


@pytest.mark.parametrize("alpha,r", [(0.2, 2.0), (0.1, 4.0)])
def test_padding_bound(alpha, r):
    g = generate_graph("erdos-renyi", 64, {}, seed=3)
    trials = 2000
    freq = padding_probability_check(g, alpha, r, trials, seed=1)
    p = math.exp(-2 * r * alpha)
    assert min(freq) >= p - 3 * math.sqrt(p * (1 - p) / trials)


def test_padding_matches_simulated_partition():
    g = generate_graph("grid", 36, {"w_range": (1, 3)}, seed=0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        r = tuple(rng.exponential(2.0, size=36).tolist())
        shifts = ShiftAssignment(r)
        sim_part = ldd_partition(g, LddConfig(), Simulator(36), shifts=shifts)
        assert {c.center: c.members for c in sim_part} == {
            c.center: c.members for c in ldd_partition_centralized(g, shifts)
        }
