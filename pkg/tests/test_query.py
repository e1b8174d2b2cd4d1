import math
from fractions import Fraction

import numpy as np
import pytest

from hopsetlab.builder import Hopset, HopsetConfig, build_hopset, measure_hopbound
from hopsetlab.graph import INF, dijkstra, generate_graph
from hopsetlab.query import TooManySources, mssp_query, mssp_query_fast, source_limit


@pytest.fixture(scope="module")
def built():
    g = generate_graph("erdos-renyi", 128, {"w_range": (1, 10)}, seed=3)
    cfg = HopsetConfig(eps=Fraction(1, 2))
    H, _, _ = build_hopset(g, cfg, seed=3)
    return g, H, cfg, measure_hopbound(g, H, cfg.eps)


def test_single_source_no_hopset_is_sssp():
    g = generate_graph("grid", 25, {"w_range": (1, 9)}, seed=1)
    res = mssp_query(g, Hopset(25), [7], g.n - 1)
    assert res.dist[0].tolist() == dijkstra(g, 7).dist


def test_zero_budget():
    g = generate_graph("grid", 16, {}, seed=0)
    res = mssp_query(g, Hopset(16), [0, 5], 0)
    assert res.dist[0, 0] == 0 and res.dist[1, 5] == 0
    assert (res.dist >= INF).sum() == 2 * 16 - 2


def test_estimates_within_stretch(built):
    g, H, cfg, beta = built
    sources = list(range(0, 128, 11))[: math.ceil(math.sqrt(128))]
    assert len(sources) == 12
    res = mssp_query(g, H, sources, beta)
    for i, s in enumerate(sources):
        exact = np.array(dijkstra(g, s).dist)
        assert np.all(res.dist[i] >= exact)
        assert np.all(res.dist[i] * 2 <= 3 * exact)


def test_fast_path_bit_exact(built):
    g, H, _, beta = built
    sources = [1, 4, 9, 16, 25, 36, 49, 64, 81, 100, 121]
    for b in (0, 1, beta, beta + 3):
        slow = mssp_query(g, H, sources, b)
        fast = mssp_query_fast(g, H, sources, b)
        assert slow.dist.dtype == fast.dist.dtype and np.array_equal(slow.dist, fast.dist)


def test_round_charge(built):
    g, H, _, beta = built
    sources = list(range(11))
    res = mssp_query(g, H, sources, beta)
    assert res.rounds_charged <= beta + len(sources)


def test_too_many_sources():
    g = generate_graph("grid", 16, {}, seed=0)
    assert source_limit(16) == 4
    with pytest.raises(TooManySources):
        mssp_query(g, Hopset(16), list(range(5)), 3)
    mssp_query(g, Hopset(16), list(range(8)), 3, c=2.0)


def test_csv(built):
    g, H, _, beta = built
    text = mssp_query(g, H, [0, 1], beta).to_csv(g)
    lines = text.splitlines()
    assert lines[0] == "source,node,estimate,oracle,ratio"
    assert len(lines) == 1 + 2 * g.n
    assert lines[1] == "0,0,0,0,1.000000"
    assert all(float(row.split(",")[4]) <= 1.5 for row in lines[1:])
