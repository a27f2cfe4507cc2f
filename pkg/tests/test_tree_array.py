"""Tree-array builder, verifier, and parameter arithmetic."""

import random
import warnings

import pytest

from treespan.errors import BoundWarning, InvariantViolation, PreconditionViolated
from treespan.graphs import Graph, VertexSet
from treespan.tree_array import (
    TreeArray,
    build_tree_array,
    prune_rooted_tree,
    rec_parameters,
    verify_tree_array,
)

from oracles import pairwise_disjoint


def gnp_graph(n, p, seed):
    rng = random.Random(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(n, edges)


def window(g, ids):
    return VertexSet.from_iter(g.n, ids)


def test_s_lower_bound_enforced():
    g = Graph.complete(30)
    w = window(g, range(2, 30))
    # d1=5, m=4: ceil(log 8 / log 4) = 2, so s must be at least 5
    with pytest.raises(PreconditionViolated) as err:
        build_tree_array(g, w, [(0, 1)], s=4, delta=3, d1=5, m=4)
    assert err.value.lhs == 4
    assert err.value.rhs == 5


def test_d1_lower_bound_enforced():
    g = Graph.complete(30)
    w = window(g, range(2, 30))
    with pytest.raises(PreconditionViolated):
        build_tree_array(g, w, [(0, 1)], s=5, delta=3, d1=4, m=1)


def test_window_bound_strict_raise():
    g = Graph.complete(30)
    w = window(g, range(2, 22))
    # 10*5*4 + 1*6*3^6 = 200 + 4374 = 4574, far above 20
    with pytest.raises(PreconditionViolated) as err:
        build_tree_array(g, w, [(0, 1)], s=5, delta=3, d1=5, m=4, strict=True)
    assert err.value.lhs == 20
    assert err.value.rhs == 4574


def test_overlapping_pairs_rejected():
    g = Graph.complete(30)
    w = window(g, range(4, 30))
    with pytest.raises(PreconditionViolated):
        build_tree_array(g, w, [(0, 1), (1, 2)], s=3, delta=2, d1=4, m=1)


def test_empty_pair_family():
    g = Graph.complete(60)
    w = window(g, range(10, 60))
    arr = build_tree_array(g, w, [], s=3, delta=2, d1=4, m=1)
    assert arr.paths == {}
    assert arr.rooted_trees == {}
    assert verify_tree_array(arr, w, [], 3, 2, g)


def test_complete_host_single_pair():
    g = Graph.complete(200)
    w = window(g, range(2, 152))
    arr = build_tree_array(g, w, [(0, 1)], s=3, delta=2, d1=4, m=1)
    path = arr.paths[(0, 1)]
    assert len(path) == 4
    assert path[0] == 0 and path[-1] == 1
    assert set(arr.rooted_trees) == set(path[1:-1])
    for root, edges in arr.rooted_trees.items():
        assert len(edges) == 14
        verts = {root}
        for u, v in edges:
            verts.add(u)
            verts.add(v)
        assert len(verts) == 15
    assert arr.total_vertices() == 4 + 2 * 14
    assert verify_tree_array(arr, w, [(0, 1)], 3, 2, g)


def test_builder_is_deterministic():
    g = Graph.complete(200)
    w = window(g, range(2, 152))
    one = build_tree_array(g, w, [(0, 1)], s=3, delta=2, d1=4, m=1, seed=5)
    two = build_tree_array(g, w, [(0, 1)], s=3, delta=2, d1=4, m=1, seed=5)
    assert one.paths == two.paths
    assert one.rooted_trees == two.rooted_trees


def test_endpoints_never_reused_inside_window():
    g = Graph.complete(200)
    w = g.vertex_set()
    # endpoints sit inside w here; the builder must carve them out
    arr = build_tree_array(g, w, [(0, 1), (2, 3)], s=3, delta=2, d1=4, m=1)
    for pair, path in arr.paths.items():
        assert set(path[1:-1]).isdisjoint({0, 1, 2, 3})
    for root in arr.rooted_trees:
        assert root not in {0, 1, 2, 3}
    assert verify_tree_array(arr, w, [(0, 1), (2, 3)], 3, 2, g)


def test_verifier_rejects_tampering():
    g = Graph.complete(200)
    w = window(g, range(2, 152))
    pairs = [(0, 1)]
    arr = build_tree_array(g, w, pairs, s=3, delta=2, d1=4, m=1)
    v1, v2 = sorted(arr.rooted_trees)

    bad = TreeArray(dict(arr.paths), dict(arr.rooted_trees))
    bad.paths[(0, 1)] = (0, v1, 199, 1)
    res = verify_tree_array(bad, w, pairs, 3, 2, g)
    assert not res.ok
    assert res.witness[0] == "path internal leaves the window"

    bad = TreeArray(dict(arr.paths), dict(arr.rooted_trees))
    bad.rooted_trees[v1] = arr.rooted_trees[v1][:-1]
    res = verify_tree_array(bad, w, pairs, 3, 2, g)
    assert not res.ok

    bad = TreeArray(dict(arr.paths), dict(arr.rooted_trees))
    del bad.rooted_trees[v2]
    res = verify_tree_array(bad, w, pairs, 3, 2, g)
    assert res.witness == ("tree roots do not match the path internals",)

    bad = TreeArray(dict(arr.paths), dict(arr.rooted_trees))
    # graft v2's tree so it collides with v1's
    bad.rooted_trees[v2] = tuple(
        (v2 if a == v1 else a, v2 if b == v1 else b) for a, b in arr.rooted_trees[v1]
    )
    res = verify_tree_array(bad, w, pairs, 3, 2, g)
    assert not res.ok

    bad = TreeArray(dict(arr.paths), dict(arr.rooted_trees))
    bad.paths[(0, 2)] = bad.paths.pop((0, 1))
    res = verify_tree_array(bad, w, pairs, 3, 2, g)
    assert res.witness == ("paths do not match the pair family",)


def test_verifier_rejects_shared_path_vertex():
    g = Graph.complete(200)
    w = window(g, range(4, 180))
    pairs = [(0, 1), (2, 3)]
    arr = build_tree_array(g, w, pairs, s=3, delta=2, d1=4, m=1)
    p = arr.paths[(0, 1)]
    q = arr.paths[(2, 3)]
    bad = TreeArray(dict(arr.paths), dict(arr.rooted_trees))
    shared = (2, q[1], p[2], 3)
    old_internal = q[2]
    bad.paths[(2, 3)] = shared
    bad.rooted_trees = {
        r: e for r, e in bad.rooted_trees.items() if r != old_internal
    }
    res = verify_tree_array(bad, w, pairs, 3, 2, g)
    assert not res.ok
    assert res.witness[0] in ("paths not disjoint", "tree roots do not match the path internals")


def test_closed_loop_random_hosts():
    wins = 0
    for trial in range(40):
        rng = random.Random(900 + trial)
        if trial % 2 == 0:
            g = Graph.complete(200)
        else:
            g = gnp_graph(200, 0.5, 900 + trial)
        ids = rng.sample(range(200), 180)
        w = window(g, ids)
        outside = sorted(set(range(200)) - set(ids))
        x, y, z, t = outside[:4]
        pairs = [(x, y), (z, t)]
        arr = build_tree_array(g, w, pairs, s=3, delta=2, d1=4, m=1, seed=trial)
        assert verify_tree_array(arr, w, pairs, 3, 2, g)
        assert arr.total_vertices() <= 2 * 4 * 15
        groups = [set(p) for p in arr.paths.values()]
        for root in arr.rooted_trees:
            verts = arr.tree_vertices(root) - {root}
            groups.append(verts)
        assert pairwise_disjoint(groups)
        wins += 1
    assert wins == 40


def test_subtree_taking_preserves_validity():
    g = Graph.complete(200)
    w = window(g, range(2, 152))
    arr = build_tree_array(g, w, [(0, 1)], s=3, delta=2, d1=4, m=1)
    pruned = TreeArray(
        dict(arr.paths),
        {
            root: prune_rooted_tree(edges, root, 2)
            for root, edges in arr.rooted_trees.items()
        },
    )
    assert verify_tree_array(pruned, w, [(0, 1)], 3, 2, g, pruned=True)
    assert not verify_tree_array(pruned, w, [(0, 1)], 3, 2, g)
    for root, edges in pruned.rooted_trees.items():
        assert len(edges) == 6
    # stripping one tree down to its bare root is still a legal sub-array
    v1 = min(arr.rooted_trees)
    bare = dict(pruned.rooted_trees)
    bare[v1] = ()
    assert verify_tree_array(TreeArray(dict(arr.paths), bare), w, [(0, 1)], 3, 2, g, pruned=True)


def test_prune_rooted_tree_shapes():
    edges = ((0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6))
    assert prune_rooted_tree(edges, 0, 2) == edges
    assert prune_rooted_tree(edges, 0, 1) == ((0, 1), (0, 2))
    assert prune_rooted_tree(edges, 0, 0) == ()


def test_window_bound_warns_but_tries():
    g = Graph.complete(80)
    w = window(g, range(2, 80))
    # need 10*4*1 + 1*4*16 = 104 > 78, so the run warns yet succeeds
    with pytest.warns(BoundWarning):
        arr = build_tree_array(g, w, [(0, 1)], s=3, delta=2, d1=4, m=1)
    assert verify_tree_array(arr, w, [(0, 1)], 3, 2, g)


def test_rec_parameters_medium_scale():
    p = rec_parameters(2 ** 16, 2 ** 10, 2)
    assert p.h == 4
    assert p.s_min == 3
    assert p.s_max == 7
    assert p.d1 == 256
    assert p.m_bound == 32
    assert p.log_base == 2
    assert not p.regime_ok
    names = [row[0] for row in p.inequalities]
    assert len(names) == 3
    for _, lhs, rhs, holds in p.inequalities:
        assert isinstance(holds, bool)


def test_rec_parameters_degenerate_degree():
    p = rec_parameters(2 ** 16, 2 ** 20, 2)
    assert p.m_bound == 0
    assert p.regime_ok


def test_rec_parameters_large_scale():
    p = rec_parameters(2 ** 25, 2 ** 13, 2)
    assert p.h == 5
    assert p.s_min == 4
    assert p.s_max == 9
    assert p.d1 == 1024


def test_rec_parameters_chain_holds_in_regime():
    # the last link needs delta^(h/2) >= 2h+11, true for delta=2 once
    # h reaches 10, so the full chain asks for an enormous n
    p = rec_parameters(2 ** 100, 2 ** 51, 2)
    assert p.h == 10
    assert p.regime_ok
    assert all(holds for _, _, _, holds in p.inequalities)


def test_to_record_round_shape():
    g = Graph.complete(200)
    w = window(g, range(2, 152))
    arr = build_tree_array(g, w, [(0, 1)], s=3, delta=2, d1=4, m=1)
    rec = arr.to_record()
    assert {r["pair"][0] for r in rec["paths"]} == {0}
    assert len(rec["trees"]) == 2
    for entry in rec["trees"]:
        assert len(entry["edges"]) == 14
