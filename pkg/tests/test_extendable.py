"""Tests for extendable-subgraph growth and exact-length connection."""

import random
import warnings

import numpy as np
import pytest

from treespan.errors import (
    BoundWarning,
    CapacityExceeded,
    EmbeddingFailed,
    InvalidParameter,
    PreconditionViolated,
    SearchExhausted,
    SizeLimitExceeded,
)
from treespan.extendable import (
    Embedding,
    ExtendableState,
    connect_exact_length,
    embed_almost_spanning,
    extend_path,
    extend_tree,
    is_extendable,
    verify_embedding,
)
from treespan.graphs import Graph, VertexSet
from treespan.trees import Tree, path_tree, random_bounded_tree


def gnp_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    tri = np.triu(rng.random((n, n)) < p, 1)
    return Graph(n, [(int(u), int(v)) for u, v in np.argwhere(tri)])


def whole_cycle_state(n, d, m):
    g = Graph.cycle(n)
    return ExtendableState(g, g.vertex_set(), d, m, edges=tuple(g.edges()))


# -- state construction ----------------------------------------------------


def test_state_validation():
    g = Graph.complete(6)
    with pytest.raises(InvalidParameter):
        ExtendableState(g, (0, 1), 2, 1)
    with pytest.raises(InvalidParameter):
        ExtendableState(g, (0, 1), 3, 0)
    with pytest.raises(InvalidParameter):
        ExtendableState(Graph.path(6), (0, 3), 3, 1, edges=((0, 3),))
    with pytest.raises(InvalidParameter):
        ExtendableState(g, (0, 1), 3, 1, edges=((0, 2),))
    star = [(0, v) for v in range(1, 5)]
    with pytest.raises(InvalidParameter):
        ExtendableState(g, range(5), 3, 1, edges=star)


def test_state_bookkeeping():
    g = Graph.complete(8)
    st = ExtendableState(g, (2, 5), 4, 2, edges=((2, 5),))
    assert st.size() == 2
    assert st.degree_in_sub(2) == 1
    assert st.degree_in_sub(7) == 0
    twin = st.copy()
    twin.absorb_path((2, 3, 4, 5))
    assert twin.size() == 4 and st.size() == 2
    assert twin.sub_degrees[2] == 2 and twin.sub_degrees[3] == 2


# -- extendability predicate ------------------------------------------------


def test_is_extendable_examples():
    # empty subgraph in a complete host: every X sees everything outside X
    st = ExtendableState(Graph.complete(20), (), 3, 2)
    assert is_extendable(st, "exact")

    # S = the whole host leaves no outside neighbors at all
    res = is_extendable(whole_cycle_state(12, 3, 1), "exact")
    assert not res and res.witness == (0,)

    # single cycle edge: an endpoint has one fresh neighbor but needs two
    g = Graph.cycle(12)
    st = ExtendableState(g, (0, 1), 3, 1, edges=((0, 1),))
    res = is_extendable(st, "exact")
    assert not res and res.witness == (0,)


def test_is_extendable_exact_budget():
    st = ExtendableState(Graph.complete(300), (), 3, 4)
    with pytest.raises(SizeLimitExceeded):
        is_extendable(st, "exact")


def test_is_extendable_sampled():
    bad = whole_cycle_state(12, 3, 1)
    res = bad.host, is_extendable(bad, "sampled", trials=200, seed=5)
    g, res = res
    assert not res and res.mode == "sampled"
    # witness is genuine: recompute the inequality by hand
    x = res.witness
    gamma = set()
    for v in x:
        gamma.update(g.neighbors(v))
    outside = gamma - set(range(12))
    need = 2 * len(x) - sum(bad.sub_degrees[v] - 1 for v in x)
    assert len(outside) < need

    again = is_extendable(whole_cycle_state(12, 3, 1), "sampled", trials=200, seed=5)
    assert again.witness == res.witness

    good = ExtendableState(Graph.complete(20), (), 3, 2)
    assert is_extendable(good, "sampled", trials=300, seed=1)


# -- path extension ----------------------------------------------------------


def test_extend_path_length_bound():
    st = ExtendableState(Graph.complete(80), (0, 1), 4, 3)
    with pytest.raises(PreconditionViolated) as err:
        extend_path(st, 0, 1, 4)
    assert err.value.lhs == 4 and err.value.rhs == 5


def test_extend_path_endpoint_checks():
    g = Graph.complete(10)
    st = ExtendableState(g, (0, 1, 2), 3, 1, edges=((0, 1), (0, 2)))
    with pytest.raises(PreconditionViolated):
        extend_path(st, 0, 1, 3)  # deg_S(0) = 2 > d/2
    st = ExtendableState(g, (0, 1), 3, 1)
    with pytest.raises(PreconditionViolated):
        extend_path(st, 0, 5, 3)  # 5 not in S


def test_extend_path_complete_host():
    st = ExtendableState(Graph.complete(50), (0, 1), 3, 2)
    with pytest.warns(BoundWarning):
        path = extend_path(st, 0, 1, 5)
    assert path == (0, 2, 3, 4, 5, 1)
    assert st.size() == 6
    assert st.sub_degrees == {0: 1, 1: 1, 2: 2, 3: 2, 4: 2, 5: 2}
    assert is_extendable(st, "exact")


def test_extend_path_strict_room():
    st = ExtendableState(Graph.complete(50), (0, 1), 3, 2)
    with pytest.raises(PreconditionViolated) as err:
        extend_path(st, 0, 1, 5, strict=True)
    assert err.value.name == "|S| within the guaranteed room"


def test_extend_path_bridge_host():
    # two complete halves joined by one edge; the path must use the bridge
    edges = [(u, v) for u in range(25) for v in range(u + 1, 25)]
    edges += [(u, v) for u in range(25, 50) for v in range(u + 1, 50)]
    edges.append((0, 25))
    g = Graph(50, edges)
    st = ExtendableState(g, (3, 30), 3, 2)
    with pytest.warns(BoundWarning):
        try:
            path = extend_path(st, 3, 30, 5)
        except SearchExhausted:
            return
    assert len(path) == 6 and path[0] == 3 and path[-1] == 30
    assert (0, 25) == tuple(sorted((path[2], path[3]))) or 0 in path and 25 in path
    for u, v in zip(path, path[1:]):
        assert g.adjacent(u, v)
    assert is_extendable(st, "exact")


# -- tree extension ----------------------------------------------------------


def test_extend_tree_identity():
    st = ExtendableState(Graph.complete(20), (7,), 4, 2)
    before = dict(st.sub_degrees)
    copy = extend_tree(st, 7, Tree.from_edges(1, ()))
    assert copy == {0: 7}
    assert st.sub_degrees == before and st.size() == 1


def test_extend_tree_star():
    st = ExtendableState(Graph.complete(40), (5,), 4, 2)
    star = Tree.from_edges(4, ((0, 1), (0, 2), (0, 3)))
    assignment = extend_tree(st, 5, star)
    assert assignment == {0: 5, 1: 0, 2: 1, 3: 2}
    assert st.sub_degrees[5] == 3 and st.size() == 4
    assert is_extendable(st, "exact")


def test_extend_tree_room_bound():
    st = ExtendableState(Graph.complete(30), range(20), 3, 2)
    with pytest.raises(PreconditionViolated) as err:
        extend_tree(st, 0, path_tree(5))
    assert err.value.lhs == 25 and err.value.rhs == 12


def test_extend_tree_degree_bound():
    st = ExtendableState(Graph.complete(30), (0,), 3, 1)
    with pytest.raises(PreconditionViolated):
        extend_tree(st, 0, Tree.from_edges(4, ((0, 1), (0, 2), (0, 3))))


# -- almost-spanning embedding ----------------------------------------------


def test_embed_capacity_arithmetic():
    g = Graph.complete(100)
    w = g.vertex_set()
    big = random_bounded_tree(41, 3, seed=1)
    assert big.max_degree() == 3
    with pytest.raises(CapacityExceeded):
        embed_almost_spanning(g, w, big, 10.0)
    fits = random_bounded_tree(40, 3, seed=1)
    emb = embed_almost_spanning(g, w, fits, 10.0)
    assert verify_embedding(emb)


def test_embed_path_into_complete():
    g = Graph.complete(30)
    emb = embed_almost_spanning(g, g.vertex_set(), path_tree(10), 10.0)
    assert verify_embedding(emb)
    spanning = verify_embedding(emb, spanning=True)
    assert not spanning and spanning.witness[0] == "not spanning"


def test_verify_embedding_detects_defects():
    g = Graph.path(5)
    t = path_tree(3)
    assert not verify_embedding(Embedding(t, g, {0: 0, 1: 1}))
    assert not verify_embedding(Embedding(t, g, {0: 0, 1: 1, 2: 1}))
    assert not verify_embedding(Embedding(t, g, {0: 0, 1: 1, 2: 7}))
    assert not verify_embedding(Embedding(t, g, {0: 0, 1: 1, 2: 3}))
    assert verify_embedding(Embedding(t, g, {0: 0, 1: 1, 2: 2}))


def test_embed_random_trials():
    rng = random.Random(99)
    successes = 0
    trials = 0
    for host_seed in range(100):
        g = gnp_graph(300, 0.2, host_seed)
        w = g.vertex_set()
        for _ in range(10):
            trials += 1
            order = rng.randint(2, 180)
            t = random_bounded_tree(order, 3, seed=rng.randrange(1 << 30))
            try:
                emb = embed_almost_spanning(g, w, t, 15.0, seed=trials)
            except EmbeddingFailed:
                continue
            assert verify_embedding(emb)
            successes += 1
    assert trials == 1000
    assert successes >= 990


# -- exact-length connection --------------------------------------------------


def test_connect_length_lower_bound():
    g = Graph.complete(60)
    pairs = [(2 * i, 2 * i + 1) for i in range(16)]
    u = VertexSet.from_iter(60, range(32, 52))
    with pytest.raises(PreconditionViolated) as err:
        connect_exact_length(g, pairs, u, [3] * 16, d1=4, m=8)
    assert err.value.lhs == 3 and err.value.rhs == pytest.approx(4.0)


def test_connect_length_upper_bound():
    g = Graph.complete(30)
    pairs = [(0, 1), (2, 3)]
    u = VertexSet.from_iter(30, range(10, 20))
    with pytest.raises(PreconditionViolated) as err:
        connect_exact_length(g, pairs, u, [6, 6], d1=2, m=1)
    assert err.value.name == "length at most half the window"


def test_connect_shape_checks():
    g = Graph.complete(30)
    u = VertexSet.from_iter(30, range(10, 20))
    with pytest.raises(PreconditionViolated):
        connect_exact_length(g, [(0, 1)], u, [3], d1=2, m=1)
    with pytest.raises(PreconditionViolated):
        connect_exact_length(g, [(0, 1), (0, 3)], u, [3, 3], d1=2, m=1)
    with pytest.raises(PreconditionViolated):
        connect_exact_length(g, [(0, 1), (2, 10)], u, [3, 3], d1=2, m=1)
    with pytest.raises(InvalidParameter):
        connect_exact_length(g, [(0, 1), (2, 3)], u, [3], d1=2, m=1)


def test_connect_complete_host():
    g = Graph.complete(60)
    pairs = [(0, 1), (2, 3), (4, 5), (6, 7)]
    u = VertexSet.from_iter(60, range(20, 60))
    with pytest.warns(BoundWarning):
        index, path = connect_exact_length(g, pairs, u, [6, 6, 6, 6], d1=2, m=2)
    assert index == 0
    assert len(path) == 7 and path[0] == 0 and path[-1] == 1
    assert len(set(path)) == 7
    for v in path[1:-1]:
        assert v in u
    for a, b in zip(path, path[1:]):
        assert g.adjacent(a, b)
    with pytest.warns(BoundWarning):
        again = connect_exact_length(g, pairs, u, [6, 6, 6, 6], d1=2, m=2)
    assert again == (index, path)


def test_connect_short_lengths():
    g = Graph.complete(16)
    u = VertexSet.from_iter(16, range(4, 16))
    pairs = [(0, 1), (2, 3)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundWarning)
        assert connect_exact_length(g, pairs, u, [1, 3], d1=2, m=1) == (0, (0, 1))
        edges = [e for e in Graph.complete(16).edges() if e != (0, 1)]
        g2 = Graph(16, edges)
        assert connect_exact_length(g2, pairs, u, [2, 3], d1=2, m=1) == (0, (0, 4, 1))


def test_connect_peels_weak_vertices():
    # vertex 20 keeps only one edge; the prune stage must drop it from the core
    edges = [(u, v) for u, v in Graph.complete(40).edges() if 20 not in (u, v)]
    edges.append((20, 21))
    g = Graph(40, edges)
    u = VertexSet.from_iter(40, range(10, 30))
    with pytest.warns(BoundWarning):
        index, path = connect_exact_length(g, [(0, 1), (2, 3)], u, [4, 4], d1=2, m=1)
    assert index == 0 and len(path) == 5
    assert 20 not in path
    for v in path[1:-1]:
        assert v in u


def test_connect_random_property():
    rng = random.Random(4242)
    wins = 0
    for trial in range(30):
        g = gnp_graph(60, 0.6, 1000 + trial)
        m = rng.choice((1, 2))
        chosen = rng.sample(range(60), 4 * m + 40)
        pairs = [(chosen[2 * i], chosen[2 * i + 1]) for i in range(2 * m)]
        u = VertexSet.from_iter(60, chosen[4 * m:])
        lengths = [rng.randint(3, 6) for _ in pairs]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BoundWarning)
                index, path = connect_exact_length(g, pairs, u, lengths, d1=2, m=m, seed=trial)
        except SearchExhausted:
            continue
        x, y = pairs[index]
        assert path[0] == x and path[-1] == y
        assert len(path) == lengths[index] + 1
        assert len(set(path)) == len(path)
        for v in path[1:-1]:
            assert v in u
        for a, b in zip(path, path[1:]):
            assert g.adjacent(a, b)
        wins += 1
    assert wins >= 25
