"""Independent brute-force oracles the tests check library output against.

Everything here is deliberately naive: direct quantifier enumeration and
exponential search, trusted because it mirrors the definitions with no
cleverness.  The library must agree with these on every instance small
enough to enumerate.
"""

import math
from functools import lru_cache
from itertools import combinations

from treespan.graphs import Graph, mask_of


def joined_pairs_naive(g: Graph, m: int):
    """Direct check over all disjoint m-set pairs; None or a violating pair."""
    verts = range(g.n)
    for xs in combinations(verts, m):
        xmask = mask_of(xs)
        rest = [v for v in verts if not (xmask >> v) & 1]
        for ys in combinations(rest, m):
            if not any(g.masks[u] & mask_of(ys) for u in xs):
                return (xs, ys)
    return None


def expansion_violation_naive(g: Graph, wmask: int, d, max_size: int):
    """First X (ascending size, lex) with |N(X) & W| < d|X|, checking
    every size from 1 to max_size inclusive."""
    for j in range(1, max_size + 1):
        for xs in combinations(range(g.n), j):
            xmask = mask_of(xs)
            nbh = 0
            for v in xs:
                nbh |= g.masks[v]
            if ((nbh & ~xmask) & wmask).bit_count() < d * j:
                return xs
    return None


def star_packing_exists(adj_masks, demands, used=0, idx=0, _memo=None):
    """Exponential search: can roots idx.. take demands[i] distinct
    neighbors (bitmask adj_masks[i]) avoiding already-used vertices?"""
    if _memo is None:
        _memo = {}
    if idx == len(adj_masks):
        return True
    key = (idx, used)
    if key in _memo:
        return _memo[key]
    avail = adj_masks[idx] & ~used
    need = demands[idx]
    found = False
    if avail.bit_count() >= need:
        for combo in combinations(_bits_list(avail), need):
            if star_packing_exists(adj_masks, demands, used | mask_of(combo), idx + 1, _memo):
                found = True
                break
    _memo[key] = found
    return found


def _bits_list(mask):
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def is_bare_path(t, path, k=None):
    """Valid bare path in tree t: simple, consecutive edges, internal
    degrees exactly 2; optionally exactly k edges."""
    if len(set(path)) != len(path):
        return False
    if k is not None and len(path) != k + 1:
        return False
    for a, b in zip(path, path[1:]):
        if not t.adjacent(a, b):
            return False
    return all(t.degree(v) == 2 for v in path[1:-1])


def pairwise_disjoint(seqs):
    seen = set()
    for s in seqs:
        for v in s:
            if v in seen:
                return False
            seen.add(v)
    return True


# closed-form spectra for fixture families


def lambda_complete(n):
    return 1.0


def lambda_cycle(n):
    return max(abs(2 * math.cos(2 * math.pi * k / n)) for k in range(1, n))


def lambda_complete_bipartite(a, b):
    return math.sqrt(a * b)


def cycle_spectrum(n):
    return sorted((2 * math.cos(2 * math.pi * k / n) for k in range(n)), reverse=True)


@lru_cache(maxsize=None)
def binomial(n, k):
    return math.comb(n, k)
