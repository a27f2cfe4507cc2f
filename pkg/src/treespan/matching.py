"""Star matchings: exact covers by vertex-disjoint stars.

An f-matching from A into B (both vertex sets of one host graph) picks,
for every u in A, exactly f(u) neighbors of u inside B, all distinct
across different u, with sum(f) = |B| so that B is covered exactly.  The
flow reduction makes this decidable: source -> u with capacity f(u),
u -> b with capacity 1 for host edges, b -> sink with capacity 1; a full
flow is exactly an f-matching, and a deficient flow exposes a set X of
roots whose joint neighborhood in B is smaller than its total demand
(the generalized Hall condition fails at X).

The greedy variant serves the pipeline phases that only need an
inclusion-maximal star packing: roots are visited in a seeded order and
either fully served from the lowest-id free neighbors or skipped, so a
skipped root sees fewer than f(u) free vertices afterwards.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from itertools import combinations

from .errors import DemandMismatch, InvalidParameter, InvariantViolation, SizeLimitExceeded
from .graphs import EXHAUSTIVE_BUDGET, Graph, VertexSet, bits, mask_of


@dataclass
class StarDemand:
    a_side: VertexSet
    b_side: VertexSet
    f: dict

    def __post_init__(self):
        if self.a_side.mask & self.b_side.mask:
            raise InvalidParameter("a_side and b_side must be disjoint")
        if set(self.f) != set(self.a_side.members()):
            raise InvalidParameter("demand keys must be exactly a_side")
        for u, fu in self.f.items():
            if fu < 1:
                raise InvalidParameter(f"demand f({u})={fu} must be positive")

    def total(self):
        return sum(self.f.values())


@dataclass
class StarMatching:
    """stars[u] is the sorted tuple of B-vertices serving root u."""

    stars: dict

    def used(self):
        mask = 0
        for leaves in self.stars.values():
            mask |= mask_of(leaves)
        return mask

    def __len__(self):
        return len(self.stars)


@dataclass
class HallViolator:
    x: tuple
    neighborhood: tuple
    demand: int

    def __bool__(self):
        return False


def verify_star_matching(g: Graph, demand: StarDemand, m: StarMatching):
    """Structural check: right roots, right sizes, disjoint, host edges."""
    if set(m.stars) != set(demand.f):
        return False
    seen = 0
    for u, leaves in m.stars.items():
        if len(leaves) != demand.f[u]:
            return False
        for b in leaves:
            if b not in demand.b_side or not g.adjacent(u, b):
                return False
        lm = mask_of(leaves)
        if lm & seen or len(leaves) != lm.bit_count():
            return False
        seen |= lm
    return True


class _FlowNet:
    """Shortest-augmenting-path max flow with id-ordered determinism."""

    def __init__(self, nv):
        self.nv = nv
        self.adj = [[] for _ in range(nv)]
        self.to = []
        self.cap = []

    def add(self, u, v, c):
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)

    def augment(self, s, t):
        # BFS for one shortest augmenting path; returns pushed amount
        prev_edge = [-1] * self.nv
        prev_edge[s] = -2
        queue = deque([s])
        while queue:
            u = queue.popleft()
            if u == t:
                break
            for eid in self.adj[u]:
                v = self.to[eid]
                if self.cap[eid] > 0 and prev_edge[v] == -1:
                    prev_edge[v] = eid
                    queue.append(v)
        if prev_edge[t] == -1:
            return 0
        bottleneck = None
        v = t
        while v != s:
            eid = prev_edge[v]
            bottleneck = self.cap[eid] if bottleneck is None else min(bottleneck, self.cap[eid])
            v = self.to[eid ^ 1]
        v = t
        while v != s:
            eid = prev_edge[v]
            self.cap[eid] -= bottleneck
            self.cap[eid ^ 1] += bottleneck
            v = self.to[eid ^ 1]
        return bottleneck

    def max_flow(self, s, t):
        total = 0
        while True:
            pushed = self.augment(s, t)
            if pushed == 0:
                return total
            total += pushed

    def residual_reachable(self, s):
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for eid in self.adj[u]:
                v = self.to[eid]
                if self.cap[eid] > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


def f_matching(g: Graph, demand: StarDemand):
    """Complete f-matching from A into B, or a Hall violator.

    Requires sum(f) = |B|.  The violator is taken from the min cut and
    then greedily shrunk; its deficiency is re-checked directly before
    being returned.
    """
    if demand.total() != len(demand.b_side):
        raise DemandMismatch(
            f"sum of demands {demand.total()} != |B| = {len(demand.b_side)}"
        )
    a_list = sorted(demand.a_side.members())
    b_list = sorted(demand.b_side.members())
    a_node = {u: 2 + i for i, u in enumerate(a_list)}
    b_node = {b: 2 + len(a_list) + i for i, b in enumerate(b_list)}
    net = _FlowNet(2 + len(a_list) + len(b_list))
    for u in a_list:
        net.add(0, a_node[u], demand.f[u])
    edge_ids = {}
    for u in a_list:
        for b in sorted(bits(g.masks[u] & demand.b_side.mask)):
            edge_ids[(u, b)] = len(net.to)
            net.add(a_node[u], b_node[b], 1)
    for b in b_list:
        net.add(b_node[b], 1, 1)
    value = net.max_flow(0, 1)
    if value == demand.total():
        stars = {u: [] for u in a_list}
        for (u, b), eid in edge_ids.items():
            if net.cap[eid] == 0:
                stars[u].append(b)
        return StarMatching({u: tuple(sorted(v)) for u, v in stars.items()})
    reach = net.residual_reachable(0)
    x = [u for u in a_list if a_node[u] in reach]
    x = _shrink_violator(g, demand, x)
    nbh = g.union_neighborhood(mask_of(x)) & demand.b_side.mask
    dem = sum(demand.f[u] for u in x)
    if nbh.bit_count() >= dem:
        raise InvariantViolation("min-cut produced a non-violating set")
    return HallViolator(tuple(x), tuple(bits(nbh)), dem)


def _shrink_violator(g, demand, x):
    def violates(sub):
        if not sub:
            return False
        nbh = g.union_neighborhood(mask_of(sub)) & demand.b_side.mask
        return nbh.bit_count() < sum(demand.f[u] for u in sub)

    cur = list(x)
    changed = True
    while changed:
        changed = False
        for u in sorted(cur):
            trial = [v for v in cur if v != u]
            if violates(trial):
                cur = trial
                changed = True
                break
    return cur


@dataclass
class GreedyStarResult:
    matching: StarMatching
    uncovered_a: tuple
    uncovered_b: tuple


def maximal_star_matching_greedy(g: Graph, a: VertexSet, b: VertexSet, f: dict,
                                 seed: int, joined_m=None) -> GreedyStarResult:
    """One seeded pass over A; each root takes its f(u) lowest-id free
    neighbors in B or is skipped whole.  After the pass no skipped root
    has f(u) free neighbors left, which is inclusion-maximality.

    joined_m, when given, is a promise from an m-joinedness certificate
    that fewer than m roots end up uncovered; a breach raises
    InvariantViolation (the certificate lied or was misapplied).
    """
    rng = random.Random(seed)
    order = sorted(a.members())
    rng.shuffle(order)
    free = b.mask
    stars = {}
    uncovered = []
    for u in order:
        avail = g.masks[u] & free
        fu = f[u]
        if avail.bit_count() >= fu:
            take = []
            rest = avail
            for _ in range(fu):
                low = rest & (-rest)
                take.append(low.bit_length() - 1)
                rest &= rest - 1
            stars[u] = tuple(take)
            free &= ~mask_of(take)
        else:
            uncovered.append(u)
    out = GreedyStarResult(StarMatching(stars), tuple(sorted(uncovered)), tuple(bits(free)))
    if joined_m is not None and len(out.uncovered_a) >= joined_m:
        raise InvariantViolation(
            f"{len(out.uncovered_a)} uncovered roots but joinedness promised < {joined_m}"
        )
    return out


def _subset_budget(size, max_size, budget):
    from math import comb

    total = sum(comb(size, j) for j in range(1, max_size + 1))
    if total > budget:
        raise SizeLimitExceeded(f"{total} subsets exceed budget {budget}")


def verify_lemma_star_hypotheses(g: Graph, a: VertexSet, b: VertexSet, d, m,
                                 budget=EXHAUSTIVE_BUDGET):
    """One-sided sufficient conditions for f-matchings.

    (1) |N(X) & B| >= d|X| for X <= A with |X| <= m; (2) every X <= A,
    Y <= B with |X| = |Y| = m span an edge; (3) every b in B has at least
    m neighbors in A.
    """
    a_list = sorted(a.members())
    _subset_budget(len(a_list), min(m, len(a_list)), budget)
    for w in b.members():
        if (g.masks[w] & a.mask).bit_count() < m:
            return False
    if not _expansion_over_subsets(g, a_list, b.mask, d, m):
        return False
    return _joined_across(g, a, b, m, budget)


def verify_lemma_star1_hypotheses(g: Graph, a: VertexSet, b: VertexSet, d, m,
                                  budget=EXHAUSTIVE_BUDGET):
    """Two-sided variant: condition (1) in both directions plus (2)."""
    a_list = sorted(a.members())
    b_list = sorted(b.members())
    _subset_budget(len(a_list), min(m, len(a_list)), budget)
    _subset_budget(len(b_list), min(m, len(b_list)), budget)
    if not _expansion_over_subsets(g, a_list, b.mask, d, m):
        return False
    if not _expansion_over_subsets(g, b_list, a.mask, d, m):
        return False
    return _joined_across(g, a, b, m, budget)


def _expansion_over_subsets(g, side_list, other_mask, d, m):
    for j in range(1, min(m, len(side_list)) + 1):
        for xs in combinations(side_list, j):
            nbh = g.union_neighborhood(mask_of(xs)) & other_mask
            if nbh.bit_count() < d * j:
                return False
    return True


def _joined_across(g, a, b, m, budget):
    from math import comb

    a_list = sorted(a.members())
    b_list = sorted(b.members())
    if len(a_list) < m or len(b_list) < m:
        return True
    if comb(len(a_list), m) * comb(len(b_list), m) > budget:
        raise SizeLimitExceeded("cross-pair enumeration exceeds budget")
    # a pair with no edge exists iff some m-set of A has m non-neighbors in B
    for xs in combinations(a_list, m):
        nbh = g.union_neighborhood(mask_of(xs))
        rest = b.mask & ~nbh & ~mask_of(xs)
        if rest.bit_count() >= m:
            return False
    return True
