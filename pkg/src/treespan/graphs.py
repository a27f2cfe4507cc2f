"""Immutable graphs and bitmask vertex sets.

Vertices are dense ids 0..n-1.  Every vertex set is mirrored as a Python
integer bitmask so that unions, intersections and neighborhood expansions
are single big-int operations; sorted tuples are kept alongside for
deterministic iteration.

Edge counts between vertex sets use ordered-pair semantics: e(X, Y) counts
pairs (u, v) with u in X, v in Y and uv an edge, so an edge inside X & Y
contributes twice.  Joinedness and expansion checks reduce their set
quantifiers by monotonicity to one critical size and enumerate subsets
lexicographically, which makes reported witnesses reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .errors import GraphFormatError, SizeLimitExceeded

# Subsets an exhaustive check may enumerate before refusing.
EXHAUSTIVE_BUDGET = 1 << 26


def mask_of(ids) -> int:
    m = 0
    for v in ids:
        m |= 1 << v
    return m


def bits(mask: int):
    """Yield set bit positions in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def lowest_bits(mask: int, k: int) -> int:
    """Mask of the k lowest set bits of mask."""
    out = 0
    for v in bits(mask):
        if k == 0:
            break
        out |= 1 << v
        k -= 1
    return out


class VertexSet:
    """A subset of 0..universe-1 backed by a bitmask."""

    __slots__ = ("universe", "mask")

    def __init__(self, universe: int, mask: int = 0):
        self.universe = universe
        self.mask = mask

    @classmethod
    def from_iter(cls, universe, ids):
        return cls(universe, mask_of(ids))

    @classmethod
    def full(cls, universe):
        return cls(universe, (1 << universe) - 1)

    def __len__(self):
        return self.mask.bit_count()

    def __contains__(self, v):
        return (self.mask >> v) & 1 == 1

    def __iter__(self):
        return bits(self.mask)

    def members(self):
        return tuple(bits(self.mask))

    def __or__(self, other):
        return VertexSet(self.universe, self.mask | other.mask)

    def __and__(self, other):
        return VertexSet(self.universe, self.mask & other.mask)

    def __sub__(self, other):
        return VertexSet(self.universe, self.mask & ~other.mask)

    def complement(self):
        return VertexSet(self.universe, ~self.mask & ((1 << self.universe) - 1))

    def __eq__(self, other):
        return (
            isinstance(other, VertexSet)
            and self.universe == other.universe
            and self.mask == other.mask
        )

    def __hash__(self):
        return hash((self.universe, self.mask))

    def __repr__(self):
        return f"VertexSet({self.universe}, {{{', '.join(map(str, self))}}})"


class Graph:
    """Immutable simple undirected graph with bitmask adjacency."""

    __slots__ = ("n", "adj", "masks", "edge_total")

    def __init__(self, n: int, edges):
        if n < 0:
            raise GraphFormatError("negative vertex count")
        nbrs = [set() for _ in range(n)]
        count = 0
        for u, v in edges:
            if u == v:
                raise GraphFormatError(f"loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u},{v}) out of range")
            if v in nbrs[u]:
                raise GraphFormatError(f"duplicate edge ({u},{v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
            count += 1
        self.n = n
        self.adj = tuple(tuple(sorted(s)) for s in nbrs)
        self.masks = tuple(mask_of(s) for s in nbrs)
        self.edge_total = count

    def degree(self, v):
        return len(self.adj[v])

    def neighbors(self, v):
        return self.adj[v]

    def adjacent(self, u, v):
        return (self.masks[u] >> v) & 1 == 1

    def degrees(self):
        return tuple(len(a) for a in self.adj)

    def min_degree(self):
        return min(self.degrees()) if self.n else 0

    def vertex_set(self):
        return VertexSet.full(self.n)

    def full_mask(self):
        return (1 << self.n) - 1

    def edges(self):
        for u in range(self.n):
            for v in self.adj[u]:
                if u < v:
                    yield (u, v)

    def union_neighborhood(self, mask: int) -> int:
        acc = 0
        for v in bits(mask):
            acc |= self.masks[v]
        return acc

    def deg_into(self, v: int, mask: int) -> int:
        return (self.masks[v] & mask).bit_count()

    # -- named fixtures ---------------------------------------------------

    @classmethod
    def complete(cls, n):
        return cls(n, [(u, v) for u in range(n) for v in range(u + 1, n)])

    @classmethod
    def cycle(cls, n):
        return cls(n, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def path(cls, n):
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def complete_bipartite(cls, a, b):
        return cls(a + b, [(u, a + v) for u in range(a) for v in range(b)])

    @classmethod
    def circulant(cls, n, offsets):
        edges = set()
        for i in range(n):
            for off in offsets:
                j = (i + off) % n
                if i != j:
                    edges.add((min(i, j), max(i, j)))
        return cls(n, sorted(edges))

    @classmethod
    def petersen(cls):
        outer = [(i, (i + 1) % 5) for i in range(5)]
        spokes = [(i, i + 5) for i in range(5)]
        inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        return cls(10, outer + spokes + inner)


# -- set operations -------------------------------------------------------


def neighborhood_into(g: Graph, x: VertexSet, w: VertexSet) -> VertexSet:
    """External neighborhood of x restricted to the window w."""
    acc = g.union_neighborhood(x.mask)
    return VertexSet(g.n, (acc & ~x.mask) & w.mask)


def induced_subgraph(g: Graph, vertices):
    """Induced subgraph plus the ascending old-id table (new id -> old id)."""
    if isinstance(vertices, VertexSet):
        old = list(vertices.members())
    else:
        old = sorted(set(vertices))
    index = {v: i for i, v in enumerate(old)}
    edges = [
        (index[u], index[v])
        for u, v in g.edges()
        if u in index and v in index
    ]
    return Graph(len(old), edges), tuple(old)


def edge_count_between(g: Graph, x: VertexSet, y: VertexSet) -> int:
    """Ordered-pair edge count e(x, y); edges inside x & y count twice."""
    return sum((g.masks[v] & y.mask).bit_count() for v in bits(x.mask))


@dataclass
class CheckResult:
    ok: bool
    witness: object = None
    mode: str = "exact"

    def __bool__(self):
        return self.ok


def _joined_budget(n, m):
    return math.comb(n, m) if 0 <= m <= n else 0


def is_m_joined_exact(g: Graph, m: int, budget: int = None) -> CheckResult:
    """Exhaustively decide whether every two disjoint m-sets span an edge.

    Only sets of size exactly m are checked; larger sizes follow by
    monotonicity.  A violating pair exists iff some m-set X leaves at least
    m vertices outside X and its neighborhood, so the check enumerates
    C(n, m) subsets rather than pairs.  The witness is the lexicographically
    least violating X together with the least valid Y.
    """
    if budget is None:
        budget = EXHAUSTIVE_BUDGET
    if m < 1:
        raise SizeLimitExceeded(f"m must be positive, got {m}")
    if m > g.n:
        return CheckResult(True, None)
    work = _joined_budget(g.n, m)
    if work > budget:
        raise SizeLimitExceeded(f"C({g.n},{m}) = {work} exceeds budget {budget}")
    full = g.full_mask()
    for xs in combinations(range(g.n), m):
        xmask = mask_of(xs)
        closed = xmask | g.union_neighborhood(xmask)
        rest = full & ~closed
        if rest.bit_count() >= m:
            ys = tuple(bits(lowest_bits(rest, m)))
            return CheckResult(False, (xs, ys))
    return CheckResult(True, None)


# -- file format ----------------------------------------------------------


def read_edge_list(path) -> Graph:
    """Read the edge-list format: first line ``n m``, then m lines ``u v``."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise GraphFormatError("missing header")
    try:
        n, m = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise GraphFormatError(f"bad header: {exc}") from exc
    body = tokens[2:]
    if len(body) != 2 * m:
        raise GraphFormatError(f"expected {2 * m} edge tokens, got {len(body)}")
    try:
        edges = [(int(body[2 * i]), int(body[2 * i + 1])) for i in range(m)]
    except ValueError as exc:
        raise GraphFormatError(f"bad edge token: {exc}") from exc
    return Graph(n, edges)


def write_edge_list(g: Graph, path):
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.edge_total}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")
