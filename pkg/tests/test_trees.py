import random

import pytest

from oracles import is_bare_path, pairwise_disjoint
from treespan.errors import InvalidParameter, TreeFormatError
from treespan.graphs import Graph
from treespan.trees import (
    BARE_PATHS,
    CATERPILLARS,
    LEAVES,
    PENDANT_STARS,
    Tree,
    bare_path_packing,
    bfs_parents,
    binary_tree,
    caterpillar_tree,
    comb_tree,
    decompose_levels,
    leaf_or_barepath,
    maximal_bare_chains,
    path_between,
    path_tree,
    pendant_star_tree,
    pendant_stars,
    random_bounded_tree,
    random_labeled_tree,
    read_parent_array,
    star_or_caterpillar,
    star_tree,
    strip_leaves,
    strip_leaves_with_map,
    subtree_height,
    subtree_vertices,
    tree_from_pruefer,
    write_parent_array,
)


def spider_tree():
    # center 0, three legs of length 2
    return Tree.from_edges(7, [(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)])


def double_star():
    # centers 0, 1; four leaves each
    edges = [(0, 1)]
    edges += [(0, v) for v in range(2, 6)]
    edges += [(1, v) for v in range(6, 10)]
    return Tree.from_edges(10, edges)


def test_tree_validation():
    with pytest.raises(TreeFormatError):
        Tree(Graph(4, [(0, 1), (2, 3)]))
    with pytest.raises(TreeFormatError):
        Tree(Graph(3, [(0, 1), (1, 2), (0, 2)]))
    with pytest.raises(TreeFormatError):
        Tree.from_parent_array([0, -1, -1])


def test_basic_structure_helpers():
    t = spider_tree()
    assert sorted(t.leaves()) == [2, 4, 6]
    assert t.max_degree() == 3
    assert path_between(t, 2, 6) == (2, 1, 0, 5, 6)
    assert sorted(subtree_vertices(t, 1, 0)) == [1, 2]
    assert subtree_height(t, 1, 0) == 1
    parent, depth, order = bfs_parents(t, 0)
    assert parent[0] == -1 and depth[2] == 2 and order[0] == 0


def test_strip_leaves_examples():
    p5 = path_tree(5)
    sub = strip_leaves(p5)
    assert sub.n == 3 and sorted(sub.graph.degrees()) == [1, 1, 2]

    star = star_tree(5)
    sub2, old = strip_leaves_with_map(star)
    assert sub2.n == 1 and old == [0]

    sub3, old3 = strip_leaves_with_map(spider_tree())
    assert sub3.n == 4
    assert sorted(old3) == [0, 1, 3, 5]
    assert sorted(sub3.graph.degrees()) == [1, 1, 1, 3]

    # 2-vertex tree keeps the lower id
    p2 = path_tree(2)
    sub4, old4 = strip_leaves_with_map(p2)
    assert sub4.n == 1 and old4 == [0]


def test_decompose_levels_examples():
    assert decompose_levels(path_tree(9), 2).sizes == (9, 7, 5)
    assert decompose_levels(star_tree(9), 2).sizes == (9, 1)
    assert decompose_levels(binary_tree(15), 2).sizes == (15, 7, 3)


def test_decompose_levels_removed_sets():
    t = comb_tree(3)
    assert t.n == 18
    dec = decompose_levels(t, 4)
    assert dec.sizes == (18, 12, 9, 6, 3)
    # one stripped vertex per tooth at level 3: the tooth roots
    assert dec.removed[3] == (3, 8, 13)
    for level, removed in zip(dec.levels, dec.removed):
        assert set(removed) <= set(level)


def test_leaf_or_barepath_examples():
    d = leaf_or_barepath(star_tree(10), 3)
    assert d.branch == LEAVES and len(d.payload) == 9

    d2 = leaf_or_barepath(path_tree(12), 3)
    assert d2.branch == LEAVES and len(d2.payload) == 2

    d3 = leaf_or_barepath(path_tree(200), 3)
    assert d3.branch == BARE_PATHS
    assert len(d3.payload) == 49
    assert len(d3.payload) >= d3.threshold


def test_bare_path_packing_structure():
    t = path_tree(200)
    paths = bare_path_packing(t, 3)
    assert pairwise_disjoint(paths)
    for p in paths:
        assert is_bare_path(t, p, 3)


def test_maximal_chains_cover_all_edges():
    rng = random.Random(31)
    for _ in range(100):
        n = rng.randrange(2, 40)
        t = random_labeled_tree(n, rng)
        chains = maximal_bare_chains(t)
        seen = set()
        for c in chains:
            for a, b in zip(c, c[1:]):
                e = (min(a, b), max(a, b))
                assert e not in seen
                seen.add(e)
        assert len(seen) == n - 1


def test_dichotomy_property_loop():
    rng = random.Random(77)
    for trial in range(300):
        n = rng.randrange(8, 120)
        t = random_bounded_tree(n, 5, seed=trial)
        k = rng.randrange(3, 11)
        d = leaf_or_barepath(t, k)
        assert d.count() >= d.threshold
        if d.branch == LEAVES:
            assert all(t.degree(v) == 1 for v in d.payload)
        else:
            assert pairwise_disjoint(d.payload)
            for p in d.payload:
                assert is_bare_path(t, p, k)


def test_star_or_caterpillar_examples():
    d = star_or_caterpillar(double_star(), 3)
    assert d.branch == PENDANT_STARS
    assert len(d.payload) == 2
    for s in d.payload:
        assert len(s.leaves) == 4

    spine = 100
    edges = [(i, i + 1) for i in range(spine - 1)]
    edges += [(i, spine + i) for i in range(spine)]
    leggy = Tree.from_edges(2 * spine, edges)
    d2 = star_or_caterpillar(leggy, 3)
    assert d2.branch == CATERPILLARS
    assert all(cat.legs for cat in d2.payload)

    d3 = star_or_caterpillar(path_tree(200), 3)
    assert d3.branch == CATERPILLARS
    assert all(not cat.legs for cat in d3.payload)

    # star-shaped tree: degenerate, no roots exist
    d4 = star_or_caterpillar(star_tree(8), 3)
    assert d4.branch == PENDANT_STARS and d4.payload == ()


def test_pendant_stars_examples():
    assert pendant_stars(star_tree(5)) == []

    stars = pendant_stars(spider_tree())
    assert len(stars) == 3
    assert all(s.root == 0 for s in stars)
    assert sorted(s.center for s in stars) == [1, 3, 5]
    assert all(len(s.leaves) == 1 for s in stars)

    ds = pendant_stars(double_star())
    assert len(ds) == 2 and all(len(s.leaves) == 4 for s in ds)


def test_star_or_caterpillar_property_loop():
    rng = random.Random(13)
    for trial in range(300):
        n = rng.randrange(8, 120)
        t = random_bounded_tree(n, 5, seed=1000 + trial)
        k = rng.randrange(3, 11)
        d = star_or_caterpillar(t, k)
        assert d.count() >= d.threshold
        if d.branch == PENDANT_STARS:
            used = [v for s in d.payload for v in (s.center, *s.leaves)]
            assert len(used) == len(set(used))
            for s in d.payload:
                assert t.adjacent(s.root, s.center)
                assert all(t.degree(w) == 1 and t.adjacent(s.center, w) for w in s.leaves)
        else:
            sub, old = strip_leaves_with_map(t)
            back = {o: i for i, o in enumerate(old)}
            used = [v for cat in d.payload for v in cat.path]
            assert len(used) == len(set(used))
            for cat in d.payload:
                sub_path = tuple(back[v] for v in cat.path)
                assert is_bare_path(sub, sub_path, k)
                for v, legs in cat.legs.items():
                    assert v in cat.path[1:-1]
                    assert all(t.degree(w) == 1 and t.adjacent(v, w) for w in legs)


def test_random_bounded_tree():
    t1 = random_bounded_tree(1, 3, seed=0)
    assert t1.n == 1

    p = random_bounded_tree(5, 2, seed=3)
    assert sorted(p.graph.degrees()) == [1, 1, 2, 2, 2]

    t = random_bounded_tree(50, 3, seed=7)
    assert t.n == 50 and t.max_degree() <= 3

    with pytest.raises(InvalidParameter):
        random_bounded_tree(5, 1, seed=0)

    assert [e for e in random_bounded_tree(20, 4, seed=9).edges()] == [
        e for e in random_bounded_tree(20, 4, seed=9).edges()
    ]


def test_pruefer_decode():
    t = tree_from_pruefer(4, [0, 0])
    assert sorted(t.graph.degrees()) == [1, 1, 1, 3]
    assert t.degree(0) == 3

    rng = random.Random(2)
    for _ in range(100):
        n = rng.randrange(3, 30)
        t = random_labeled_tree(n, rng)
        assert t.n == n


def test_fixture_trees():
    assert comb_tree(4).n == 24
    assert comb_tree(4).max_degree() == 3
    assert pendant_star_tree(5).n == 20
    assert pendant_star_tree(5).max_degree() == 3
    cat = caterpillar_tree(6)
    assert cat.n == 10 and cat.max_degree() == 3
    assert binary_tree(15).max_degree() == 3


def test_parent_array_roundtrip(tmp_path):
    t = comb_tree(3)
    f = tmp_path / "t.txt"
    write_parent_array(t, f)
    back = read_parent_array(f)
    assert back.n == t.n and sorted(back.edges()) == sorted(t.edges())

    bad = tmp_path / "bad.txt"
    bad.write_text("3\n-1 0\n")
    with pytest.raises(TreeFormatError):
        read_parent_array(bad)
