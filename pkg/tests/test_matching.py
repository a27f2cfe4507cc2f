import random
from itertools import product

import pytest

from oracles import star_packing_exists
from treespan.errors import DemandMismatch, InvalidParameter, InvariantViolation
from treespan.graphs import Graph, VertexSet, is_m_joined_exact
from treespan.matching import (
    GreedyStarResult,
    HallViolator,
    StarDemand,
    StarMatching,
    f_matching,
    maximal_star_matching_greedy,
    verify_lemma_star1_hypotheses,
    verify_lemma_star_hypotheses,
    verify_star_matching,
)


def bipartite(a_count, b_count, cross_edges):
    """Host graph on a_count + b_count vertices; A first, then B."""
    edges = [(u, a_count + b) for u, b in cross_edges]
    return Graph(a_count + b_count, edges)


def demand_of(g, a_count, b_count, f_list):
    a = VertexSet.from_iter(g.n, range(a_count))
    b = VertexSet.from_iter(g.n, range(a_count, a_count + b_count))
    return StarDemand(a, b, {u: f_list[u] for u in range(a_count)})


def test_star_demand_validation():
    g = bipartite(2, 2, [(0, 0)])
    with pytest.raises(InvalidParameter):
        StarDemand(VertexSet.from_iter(4, [0, 1]), VertexSet.from_iter(4, [1, 2]), {0: 1, 1: 1})
    with pytest.raises(InvalidParameter):
        demand_of(g, 2, 2, [1, 0])


def test_f_matching_examples():
    g = bipartite(1, 2, [(0, 0), (0, 1)])
    m = f_matching(g, demand_of(g, 1, 2, [2]))
    assert isinstance(m, StarMatching)
    assert m.stars == {0: (1, 2)}

    g2 = bipartite(2, 2, [(0, 0), (1, 1)])
    m2 = f_matching(g2, demand_of(g2, 2, 2, [1, 1]))
    assert m2.stars == {0: (2,), 1: (3,)}

    g3 = bipartite(2, 2, [(0, 0), (1, 0)])
    viol = f_matching(g3, demand_of(g3, 2, 2, [1, 1]))
    assert isinstance(viol, HallViolator) and not viol
    assert viol.x == (0, 1)
    assert viol.demand == 2 and len(viol.neighborhood) == 1


def test_f_matching_demand_mismatch():
    g = bipartite(1, 2, [(0, 0)])
    with pytest.raises(DemandMismatch):
        f_matching(g, demand_of(g, 1, 2, [1]))


def test_f_matching_output_verifies():
    rng = random.Random(17)
    for _ in range(200):
        na, nb = rng.randrange(1, 5), rng.randrange(1, 7)
        cross = [(u, b) for u in range(na) for b in range(nb) if rng.random() < 0.6]
        g = bipartite(na, nb, cross)
        f_list = _random_demand(rng, na, nb)
        if f_list is None:
            continue
        dem = demand_of(g, na, nb, f_list)
        out = f_matching(g, dem)
        if isinstance(out, StarMatching):
            assert verify_star_matching(g, dem, out)
        else:
            nbh = 0
            for u in out.x:
                nbh |= g.masks[u]
            nbh &= dem.b_side.mask
            assert nbh.bit_count() < sum(dem.f[u] for u in out.x)


def _random_demand(rng, na, nb):
    # positive demands summing to nb, each at most 3; None if impossible
    if not na <= nb <= 3 * na:
        return None
    f = [1] * na
    left = nb - na
    while left > 0:
        i = rng.randrange(na)
        if f[i] < 3:
            f[i] += 1
            left -= 1
    return f


def test_f_matching_agrees_with_bruteforce_oracle():
    rng = random.Random(41)
    for _ in range(300):
        na, nb = rng.randrange(1, 4), rng.randrange(1, 6)
        cross = [(u, b) for u in range(na) for b in range(nb) if rng.random() < 0.55]
        g = bipartite(na, nb, cross)
        f_list = _random_demand(rng, na, nb)
        if f_list is None:
            continue
        dem = demand_of(g, na, nb, f_list)
        adj = [g.masks[u] >> na for u in range(na)]
        expect = star_packing_exists(tuple(adj), tuple(f_list))
        got = f_matching(g, dem)
        assert isinstance(got, StarMatching) == expect


def test_greedy_examples():
    k33 = Graph.complete_bipartite(3, 3)
    a = VertexSet.from_iter(6, range(3))
    b = VertexSet.from_iter(6, range(3, 6))
    res = maximal_star_matching_greedy(k33, a, b, {u: 1 for u in range(3)}, seed=5)
    assert isinstance(res, GreedyStarResult)
    assert res.uncovered_a == () and res.uncovered_b == ()
    assert len(res.matching.stars) == 3

    g = bipartite(2, 2, [(0, 0), (1, 0)])
    res2 = maximal_star_matching_greedy(
        g, VertexSet.from_iter(4, [0, 1]), VertexSet.from_iter(4, [2, 3]),
        {0: 1, 1: 1}, seed=0)
    assert len(res2.matching.stars) == 1
    assert len(res2.uncovered_a) == 1 and res2.uncovered_b == (3,)


def test_greedy_is_maximal():
    rng = random.Random(6)
    for trial in range(200):
        na, nb = rng.randrange(1, 7), rng.randrange(1, 9)
        cross = [(u, b) for u in range(na) for b in range(nb) if rng.random() < 0.5]
        g = bipartite(na, nb, cross)
        a = VertexSet.from_iter(g.n, range(na))
        b = VertexSet.from_iter(g.n, range(na, na + nb))
        f = {u: rng.randrange(1, 3) for u in range(na)}
        res = maximal_star_matching_greedy(g, a, b, f, seed=trial)
        free = 0
        for v in res.uncovered_b:
            free |= 1 << v
        for u in res.uncovered_a:
            assert (g.masks[u] & free).bit_count() < f[u]
        for u, leaves in res.matching.stars.items():
            assert len(leaves) == f[u]
            assert all(g.adjacent(u, w) for w in leaves)


def test_greedy_joinedness_assertion():
    # m-joined host: complete graph minus a perfect matching
    n = 16
    drop = {(2 * i, 2 * i + 1) for i in range(8)}
    g = Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)
                  if (u, v) not in drop])
    m = 2
    assert is_m_joined_exact(g, m).ok
    a = VertexSet.from_iter(n, range(6))
    b = VertexSet.from_iter(n, range(6, 16))
    f = {u: 1 for u in range(6)}
    res = maximal_star_matching_greedy(g, a, b, f, seed=3, joined_m=m)
    assert len(res.uncovered_a) < m

    # a lying certificate on a sparse host must be detected
    sparse = bipartite(4, 4, [(u, 0) for u in range(4)])
    with pytest.raises(InvariantViolation):
        maximal_star_matching_greedy(
            sparse, VertexSet.from_iter(8, range(4)),
            VertexSet.from_iter(8, range(4, 8)),
            {u: 1 for u in range(4)}, seed=1, joined_m=1)


def test_lemma_star_hypotheses_examples():
    g = Graph.complete_bipartite(4, 6)
    a = VertexSet.from_iter(10, range(4))
    b = VertexSet.from_iter(10, range(4, 10))
    assert verify_lemma_star_hypotheses(g, a, b, d=2, m=1)

    # a B-vertex with too few A-neighbors breaks condition (3)
    g2 = bipartite(3, 3, [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1), (0, 2)])
    a2 = VertexSet.from_iter(6, range(3))
    b2 = VertexSet.from_iter(6, range(3, 6))
    assert not verify_lemma_star_hypotheses(g2, a2, b2, d=1, m=2)


def test_star1_hypotheses_imply_matchings_for_all_demands():
    rng = random.Random(8)
    checked = 0
    for _ in range(400):
        na, nb = rng.randrange(2, 5), rng.randrange(2, 6)
        cross = [(u, b) for u in range(na) for b in range(nb) if rng.random() < 0.7]
        g = bipartite(na, nb, cross)
        a = VertexSet.from_iter(g.n, range(na))
        b = VertexSet.from_iter(g.n, range(na, na + nb))
        for d, m in ((1, 1), (2, 1), (1, 2)):
            if not verify_lemma_star1_hypotheses(g, a, b, d, m):
                continue
            for f_tuple in product(range(1, d + 1), repeat=na):
                if sum(f_tuple) != nb:
                    continue
                dem = demand_of(g, na, nb, list(f_tuple))
                assert isinstance(f_matching(g, dem), StarMatching)
                checked += 1
    assert checked > 20
