"""Tree structures, leaf-stripping decompositions, and the structural
dichotomies that decide which embedding pipeline a tree gets.

A bare path is a path all of whose internal vertices have degree exactly
2 in the whole tree.  The core dichotomy: for any k >= 1, a tree on n >= 2
vertices has at least n/4k leaves or at least n/4k vertex-disjoint bare
paths with k edges each.  The packing here is constructive: root the tree,
list the maximal degree-2 chains top-to-bottom, and cut blocks of k+1
vertices from the bottom of each chain, never using a chain's top vertex.
A vertex shared by several chains is the top of all but the one chain
heading toward the root, so blocks from different chains cannot collide.

Counting: with ell leaves, and the root forced to be a chain endpoint,
there are at most 2*ell - 2 maximal chains and their edge counts sum to
n - 1.  If ell < n/4k the blocks number at least
(n - 1 - (2*ell - 2)*k) / (k+1) >= (n/2) / (k+1) >= n/4k.

The derived dichotomy strips the leaves off first and classifies the
smaller tree: its leaves are centers of pendant stars, its bare paths are
spines of caterpillars.  Since a non-leaf keeps a non-leaf neighbor, the
stripped tree has at least n/Delta vertices and the threshold becomes
n/(4k*Delta) in terms of the original order.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .errors import InvalidParameter, TreeFormatError
from .graphs import Graph

LEAVES = "LEAVES"
BARE_PATHS = "BARE_PATHS"
PENDANT_STARS = "PENDANT_STARS"
CATERPILLARS = "CATERPILLARS"


class Tree:
    """An unrooted tree on vertices 0..n-1, validated at construction."""

    __slots__ = ("graph", "n")

    def __init__(self, graph: Graph):
        if graph.edge_total != graph.n - 1:
            raise TreeFormatError(f"{graph.edge_total} edges on {graph.n} vertices")
        if graph.n > 1:
            seen = _reachable(graph, 0)
            if len(seen) != graph.n:
                raise TreeFormatError("not connected")
        self.graph = graph
        self.n = graph.n

    @classmethod
    def from_edges(cls, n, edges):
        return cls(Graph(n, edges))

    @classmethod
    def from_parent_array(cls, parents):
        """parents[v] is the parent id, -1 exactly at the root."""
        n = len(parents)
        edges = []
        roots = 0
        for v, p in enumerate(parents):
            if p == -1:
                roots += 1
            else:
                edges.append((v, p))
        if roots != 1:
            raise TreeFormatError(f"expected one root, found {roots}")
        return cls(Graph(n, edges))

    def degree(self, v):
        return self.graph.degree(v)

    def neighbors(self, v):
        return self.graph.neighbors(v)

    def adjacent(self, u, v):
        return self.graph.adjacent(u, v)

    def edges(self):
        return self.graph.edges()

    def leaves(self):
        return tuple(v for v in range(self.n) if self.graph.degree(v) == 1)

    def max_degree(self):
        return max(self.graph.degrees()) if self.n else 0

    def __repr__(self):
        return f"Tree(n={self.n})"


def _reachable(graph, start):
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in graph.adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def bfs_parents(t: Tree, root):
    """(parent, depth, order) arrays; parent[root] = -1, order is BFS."""
    parent = [-2] * t.n
    depth = [0] * t.n
    parent[root] = -1
    order = [root]
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in t.neighbors(u):
            if parent[v] == -2:
                parent[v] = u
                depth[v] = depth[u] + 1
                order.append(v)
                queue.append(v)
    return parent, depth, order


def path_between(t: Tree, a, b):
    """The unique a..b path as a vertex tuple."""
    parent, _, _ = bfs_parents(t, a)
    out = [b]
    while out[-1] != a:
        out.append(parent[out[-1]])
    out.reverse()
    return tuple(out)


def subtree_vertices(t: Tree, child, parent):
    """Vertices on the child side of the edge parent-child."""
    out = [child]
    queue = deque([(child, parent)])
    while queue:
        u, ban = queue.popleft()
        for v in t.neighbors(u):
            if v != ban:
                out.append(v)
                queue.append((v, u))
    return tuple(out)


def subtree_height(t: Tree, child, parent):
    """Height of the subtree hanging below parent at child (one vertex = 0)."""
    best = 0
    queue = deque([(child, parent, 0)])
    while queue:
        u, ban, d = queue.popleft()
        best = max(best, d)
        for v in t.neighbors(u):
            if v != ban:
                queue.append((v, u, d + 1))
    return best


# -- leaf stripping --------------------------------------------------------


def strip_leaves_with_map(t: Tree):
    """Remove all leaves; returns (smaller tree, old-id list).

    old_ids[new] is the original label.  A 2-vertex tree keeps its
    lower-id vertex; a 1-vertex tree is returned unchanged.
    """
    if t.n == 1:
        return t, [0]
    keep = [v for v in range(t.n) if t.degree(v) > 1]
    if not keep:
        keep = [0]
    back = {old: new for new, old in enumerate(keep)}
    edges = [
        (back[u], back[v]) for u, v in t.edges() if u in back and v in back
    ]
    return Tree.from_edges(len(keep), edges), keep


def strip_leaves(t: Tree) -> Tree:
    sub, _ = strip_leaves_with_map(t)
    return sub


@dataclass
class TreeDecomposition:
    """Levels of repeated leaf removal, all in the original labels.

    levels[i] holds the vertices alive at level i; removed[i] the vertices
    stripped going to level i+1 (the leaves of level i, except that a
    2-vertex level retains its lower-id vertex).  sizes[i] = |levels[i]|.
    """

    levels: list = field(default_factory=list)
    removed: list = field(default_factory=list)
    sizes: tuple = ()
    delta: int = 0

    def depth(self):
        return len(self.levels) - 1


def decompose_levels(t: Tree, h) -> TreeDecomposition:
    """Strip leaves h times (or until a single vertex remains).

    Asserts the growth bound n_i * (1 + D + ... + D^i) >= n at every level
    (each stripped vertex hangs off a survivor within distance i).
    """
    if h < 0:
        raise InvalidParameter("level count must be nonnegative")
    delta = t.max_degree()
    alive = set(range(t.n))
    out = TreeDecomposition(delta=delta)
    for i in range(h + 1):
        out.levels.append(tuple(sorted(alive)))
        if len(alive) <= 1 or i == h:
            out.removed.append(())
            break
        leaves = {
            v for v in alive
            if sum(1 for w in t.neighbors(v) if w in alive) == 1
        }
        if leaves == alive:
            # a single remaining edge: keep the lower-id endpoint
            leaves = {max(alive)}
        out.removed.append(tuple(sorted(leaves)))
        alive -= leaves
    out.sizes = tuple(len(level) for level in out.levels)
    geom = 1
    power = 1
    for i, n_i in enumerate(out.sizes):
        if n_i * geom < t.n:
            raise AssertionError(
                f"level {i}: {n_i} * {geom} < {t.n}; stripping invariant broken"
            )
        power *= max(delta, 1)
        geom += power
    return out


# -- dichotomies -----------------------------------------------------------


@dataclass
class Dichotomy:
    branch: str
    payload: tuple
    threshold: float

    def count(self):
        return len(self.payload)


@dataclass
class PendantStar:
    """A maximal star centered at a leaf of the stripped tree.

    root is the center's unique surviving neighbor; leaves are the
    original tree's leaves hanging at the center.
    """

    root: int
    center: int
    leaves: tuple


@dataclass
class Caterpillar:
    """A path bare in the stripped tree plus the stripped-off legs.

    legs maps internal path vertices to the tree leaves attached there;
    branch_vertices lists the internals that actually carry legs.
    """

    path: tuple
    legs: dict
    branch_vertices: tuple


def maximal_bare_chains(t: Tree, root=0):
    """Maximal degree-2 chains, each listed from its root-side end down.

    The root always counts as a chain endpoint, so chains descend
    monotonically.  Every edge lies in exactly one chain.
    """
    if t.n < 2:
        return []
    parent, _, order = bfs_parents(t, root)

    def is_stop(v):
        return v == root or t.degree(v) != 2

    chains = []
    for top in order:
        if not is_stop(top):
            continue
        for first in t.neighbors(top):
            if first == parent[top]:
                continue
            chain = [top, first]
            while not is_stop(chain[-1]):
                nxt = [w for w in t.neighbors(chain[-1]) if w != chain[-2]]
                chain.append(nxt[0])
            chains.append(tuple(chain))
    return chains


def bare_path_packing(t: Tree, k, root=0):
    """Vertex-disjoint bare paths with k edges each, packed greedily.

    Cuts blocks of k+1 vertices from the bottom of every maximal chain,
    skipping each chain's top vertex.
    """
    out = []
    for chain in maximal_bare_chains(t, root):
        body = chain[1:]
        pos = len(body)
        while pos >= k + 1:
            out.append(tuple(body[pos - k - 1:pos]))
            pos -= k + 1
    return out


def leaf_or_barepath(t: Tree, k) -> Dichotomy:
    """Either >= n/4k leaves, or >= n/4k disjoint bare paths of k edges.

    Prefers the LEAVES branch when both hold.
    """
    if k < 1:
        raise InvalidParameter(f"path length must be at least 1, got {k}")
    if t.n < 2:
        raise InvalidParameter("dichotomy needs at least 2 vertices")
    threshold = t.n / (4 * k)
    leaves = t.leaves()
    if len(leaves) >= threshold:
        return Dichotomy(LEAVES, leaves, threshold)
    paths = tuple(bare_path_packing(t, k))
    if len(paths) < threshold:
        raise AssertionError("bare-path packing bound violated")
    return Dichotomy(BARE_PATHS, paths, threshold)


def pendant_stars(t: Tree):
    """All pendant stars: one per leaf of the stripped tree.

    Degenerate when the stripped tree is a single vertex (no surviving
    neighbor to act as root): returns the empty list.
    """
    if t.n < 3:
        raise InvalidParameter("pendant stars need at least 3 vertices")
    sub, old = strip_leaves_with_map(t)
    if sub.n == 1:
        return []
    stars = []
    for v in range(sub.n):
        if sub.degree(v) != 1:
            continue
        center = old[v]
        root = old[sub.neighbors(v)[0]]
        hanging = tuple(w for w in t.neighbors(center) if t.degree(w) == 1)
        stars.append(PendantStar(root, center, hanging))
    return stars


def star_or_caterpillar(t: Tree, k) -> Dichotomy:
    """Either >= n/4kD pendant stars or >= n/4kD disjoint caterpillars.

    Classifies the stripped tree: its leaves are star centers, its packed
    bare paths are caterpillar spines (legs = stripped-off tree leaves on
    internal spine vertices, possibly none).  Payload vertices are in the
    original tree's labels.
    """
    if k < 1 or t.n < 3:
        raise InvalidParameter("need k >= 1 and at least 3 vertices")
    delta = t.max_degree()
    threshold = t.n / (4 * k * delta)
    sub, old = strip_leaves_with_map(t)
    if sub.n == 1:
        # star-shaped tree; no pendant-star root exists
        return Dichotomy(PENDANT_STARS, (), threshold)
    inner = leaf_or_barepath(sub, k)
    if inner.branch == LEAVES:
        stars = tuple(pendant_stars(t))
        if len(stars) < threshold:
            raise AssertionError("pendant-star bound violated")
        return Dichotomy(PENDANT_STARS, stars, threshold)
    cats = []
    for sub_path in inner.payload:
        path = tuple(old[v] for v in sub_path)
        legs = {}
        for v in path[1:-1]:
            hanging = tuple(w for w in t.neighbors(v) if t.degree(w) == 1)
            if hanging:
                legs[v] = hanging
        cats.append(Caterpillar(path, legs, tuple(sorted(legs))))
    if len(cats) < threshold:
        raise AssertionError("caterpillar bound violated")
    return Dichotomy(CATERPILLARS, tuple(cats), threshold)


# -- generators ------------------------------------------------------------


def random_bounded_tree(n, delta, seed) -> Tree:
    """Random attachment tree with max degree capped at delta.

    Vertex j >= 1 attaches to a uniform choice among earlier vertices
    that still have spare degree.  Deterministic per seed.
    """
    if n < 1:
        raise InvalidParameter("need n >= 1")
    if delta < 2 and n > 2:
        raise InvalidParameter(f"max degree {delta} cannot carry {n} vertices")
    rng = random.Random(seed)
    edges = []
    spare = []
    degree = [0] * n
    for j in range(1, n):
        target = spare[rng.randrange(len(spare))] if spare else 0
        edges.append((target, j))
        for v in (target, j):
            degree[v] += 1
        spare = [v for v in spare if degree[v] < delta]
        if degree[j] < delta:
            spare.append(j)
        if j == 1 and degree[0] < delta:
            spare.append(0)
    return Tree(Graph(n, edges))


def random_labeled_tree(n, rng: random.Random) -> Tree:
    """Uniform labeled tree (no degree cap) by decoding a random sequence."""
    if n < 1:
        raise InvalidParameter("need n >= 1")
    if n == 1:
        return Tree(Graph(1, []))
    if n == 2:
        return Tree(Graph(2, [(0, 1)]))
    seq = [rng.randrange(n) for _ in range(n - 2)]
    return tree_from_pruefer(n, seq)


def tree_from_pruefer(n, seq) -> Tree:
    """Decode a sequence over 0..n-1 of length n-2 into its labeled tree."""
    if len(seq) != n - 2:
        raise InvalidParameter("sequence length must be n - 2")
    degree = [1] * n
    for s in seq:
        degree[s] += 1
    # pointer scan keeps the decode linear without a heap
    ptr = 0
    leaf = -1
    edges = []
    for s in seq:
        if leaf == -1:
            while degree[ptr] != 1:
                ptr += 1
            leaf = ptr
            ptr += 1
        edges.append((leaf, s))
        degree[leaf] -= 1
        degree[s] -= 1
        if degree[s] == 1 and s < ptr:
            leaf = s
        else:
            leaf = -1
    rem = [v for v in range(n) if degree[v] == 1]
    edges.append((rem[0], rem[1]))
    return Tree(Graph(n, edges))


# -- fixture trees used by tests and the experiment drivers ----------------


def path_tree(n) -> Tree:
    return Tree(Graph.path(n))


def star_tree(n) -> Tree:
    return Tree(Graph(n, [(0, v) for v in range(1, n)]))


def binary_tree(n) -> Tree:
    """First n vertices of the complete binary tree in heap order."""
    return Tree(Graph(n, [((v - 1) // 2, v) for v in range(1, n)]))


def comb_tree(teeth) -> Tree:
    """Spine of given length; every spine vertex carries a hanging 3-chain
    whose far end holds two extra leaves.  6 vertices per tooth, max
    degree 3, and three rounds of leaf stripping still leave one leaf
    per tooth.
    """
    if teeth < 1:
        raise InvalidParameter("need at least one tooth")
    edges = []
    n = 0

    def fresh():
        nonlocal n
        n += 1
        return n - 1

    spine = [fresh() for _ in range(teeth)]
    for a, b in zip(spine, spine[1:]):
        edges.append((a, b))
    for s in spine:
        c3, c2, b = fresh(), fresh(), fresh()
        edges.extend([(s, c3), (c3, c2), (c2, b)])
        edges.extend([(b, fresh()), (b, fresh())])
    return Tree(Graph(n, edges))


def caterpillar_tree(spine_len, legs_per_vertex=1) -> Tree:
    """Path of spine_len vertices with legs on every internal spine vertex."""
    if spine_len < 3:
        raise InvalidParameter("need an internal spine vertex")
    edges = [(i, i + 1) for i in range(spine_len - 1)]
    n = spine_len
    for v in range(1, spine_len - 1):
        for _ in range(legs_per_vertex):
            edges.append((v, n))
            n += 1
    return Tree(Graph(n, edges))


def pendant_star_tree(arms) -> Tree:
    """Spine of given length; each spine vertex holds a pendant 2-leaf star.

    4 vertices per arm, max degree 3, one pendant star center per arm.
    """
    if arms < 1:
        raise InvalidParameter("need at least one arm")
    edges = []
    n = 0

    def fresh():
        nonlocal n
        n += 1
        return n - 1

    spine = [fresh() for _ in range(arms)]
    for a, b in zip(spine, spine[1:]):
        edges.append((a, b))
    for s in spine:
        c = fresh()
        edges.append((s, c))
        edges.extend([(c, fresh()), (c, fresh())])
    return Tree(Graph(n, edges))


# -- file format -----------------------------------------------------------


def read_parent_array(path) -> Tree:
    """Tree file format: line 1 is n, line 2 is n parent ids (root = -1)."""
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise TreeFormatError("empty tree file")
    try:
        n = int(tokens[0])
        parents = [int(x) for x in tokens[1:]]
    except ValueError as exc:
        raise TreeFormatError(f"bad token: {exc}") from exc
    if len(parents) != n:
        raise TreeFormatError(f"expected {n} parent ids, got {len(parents)}")
    return Tree.from_parent_array(parents)


def write_parent_array(t: Tree, path, root=0):
    parent, _, _ = bfs_parents(t, root)
    with open(path, "w") as fh:
        fh.write(f"{t.n}\n")
        fh.write(" ".join(str(p) for p in parent) + "\n")
