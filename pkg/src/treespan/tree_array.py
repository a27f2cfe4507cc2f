"""Tree arrays: connector paths through a window with trees at every joint.

A (W, I, s, delta)-tree array consists of mutually vertex-disjoint paths
of length s, one per pair in I, whose internal vertices lie in the
window W, together with a full delta-ary tree of height s rooted at
every path internal, the trees mutually disjoint, inside W, and
touching the paths only at their own roots.  The builder grows the
whole structure through an extendable subgraph on the induced host
G[W + V(I)]; the verifier re-checks every clause structurally.
"""

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BoundWarning, InvalidParameter, InvariantViolation, PreconditionViolated
from .extendable import ExtendableState, extend_path, extend_tree
from .graphs import CheckResult, Graph, VertexSet, bits, induced_subgraph, mask_of
from .trees import Tree


@dataclass
class TreeArray:
    """Connector paths plus the rooted trees hanging off their internals.

    paths maps each pair (x, y) to its host-vertex path; rooted_trees
    maps each path-internal vertex to the (parent, child) edge list of
    its embedded tree.
    """

    paths: dict
    rooted_trees: dict

    def internal_vertices(self):
        out = []
        for path in self.paths.values():
            out.extend(path[1:-1])
        return tuple(out)

    def path_vertices(self):
        out = set()
        for path in self.paths.values():
            out.update(path)
        return out

    def tree_vertices(self, root):
        verts = {root}
        for u, v in self.rooted_trees[root]:
            verts.add(u)
            verts.add(v)
        return verts

    def total_vertices(self):
        verts = self.path_vertices()
        for root in self.rooted_trees:
            verts |= self.tree_vertices(root)
        return len(verts)

    def to_record(self):
        return {
            "paths": [
                {"pair": list(pair), "path": list(path)}
                for pair, path in sorted(self.paths.items())
            ],
            "trees": [
                {"root": root, "edges": [list(e) for e in edges]}
                for root, edges in sorted(self.rooted_trees.items())
            ],
        }


def _full_tree(delta, height):
    """Complete delta-ary tree of the given height, edges parent -> child."""
    edges = []
    level = [0]
    nxt = 1
    for _ in range(height):
        fresh = []
        for p in level:
            for _ in range(delta):
                edges.append((p, nxt))
                fresh.append(nxt)
                nxt += 1
        level = fresh
    return Tree.from_edges(nxt, edges), tuple(edges)


def prune_rooted_tree(edges, root, height):
    """Truncate an embedded rooted tree to the given height.

    Edges are taken as undirected; the result keeps exactly those whose
    far endpoint lies within `height` steps of the root.
    """
    adj = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    depth = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in depth:
                depth[v] = depth[u] + 1
                queue.append(v)
    return tuple(
        (u, v) for u, v in edges if max(depth.get(u, 0), depth.get(v, 0)) <= height
    )


def build_tree_array(
    g: Graph, w: VertexSet, pairs, s, delta, d1, m, seed=0, strict=False, budget=None
) -> TreeArray:
    """Build a (W, I, s, delta)-tree array through the window w.

    Requires d1 >= delta+2 and s >= 2*ceil(log(2m)/log(d1-1))+1; the
    window bound |W| > 10*d1*m + |I|*(s+1)*delta^(s+1) guarantees
    success on honest hosts and is relaxed to a warning unless
    strict=True.  The host is assumed m-joined and d1-expanding into w.
    Pair endpoints are excluded from the window by construction.  The
    result is re-verified before being returned.
    """
    if delta < 1:
        raise InvalidParameter("need delta >= 1")
    if d1 < delta + 2:
        raise PreconditionViolated("d1 at least delta+2", d1, delta + 2)
    s_min = 2 * math.ceil(math.log(2 * m) / math.log(d1 - 1)) + 1
    if s < s_min:
        raise PreconditionViolated("s at least 2*ceil(log(2m)/log(d1-1))+1", s, s_min)
    endpoints = []
    seen = set()
    for x, y in pairs:
        for v in (x, y):
            if v in seen:
                raise PreconditionViolated("pairs are disjoint")
            seen.add(v)
        endpoints.extend((x, y))
    wmask = w.mask & ~mask_of(endpoints)
    wsize = wmask.bit_count()
    need = 10 * d1 * m + len(pairs) * (s + 1) * delta ** (s + 1)
    if wsize <= need:
        if strict:
            raise PreconditionViolated("window larger than 10*d1*m + t*(s+1)*delta^(s+1)", wsize, need)
        warnings.warn(
            f"window of {wsize} is at or below the guaranteed {need}; attempting anyway",
            BoundWarning,
            stacklevel=2,
        )
    pairs = [tuple(p) for p in pairs]
    if not pairs:
        return TreeArray({}, {})

    sub, old_ids = induced_subgraph(g, sorted(bits(wmask)) + sorted(endpoints))
    new_id = {v: i for i, v in enumerate(old_ids)}
    state = ExtendableState(sub, tuple(new_id[v] for v in endpoints), d1, m)

    paths = {}
    with warnings.catch_warnings():
        # the window bound above is the authoritative scale check; the
        # per-call room bounds inside the growth routines re-fire on the
        # same shortfall
        warnings.simplefilter("ignore", BoundWarning)
        for x, y in pairs:
            got = extend_path(state, new_id[x], new_id[y], s, seed=seed, budget=budget)
            paths[(x, y)] = tuple(old_ids[v] for v in got)
        shape, shape_edges = _full_tree(delta, s)
        rooted = {}
        for pair in pairs:
            for v in paths[pair][1:-1]:
                assignment = extend_tree(state, new_id[v], shape, seed=seed, budget=budget)
                rooted[v] = tuple(
                    (old_ids[assignment[a]], old_ids[assignment[b]]) for a, b in shape_edges
                )

    arr = TreeArray(paths, rooted)
    cap = len(pairs) * (s + 1) * sum(delta ** i for i in range(s + 1))
    if arr.total_vertices() > cap:
        raise InvariantViolation(f"array uses {arr.total_vertices()} vertices, above {cap}")
    check = verify_tree_array(arr, w, pairs, s, delta, g)
    if not check:
        raise InvariantViolation(f"built array failed verification: {check.witness}")
    return arr


def _tree_shape_ok(edges, root, s, delta, g, wmask, pruned):
    """Check one embedded tree: full delta-ary of height s, in-window,
    real edges.  In pruned mode any subtree rooted at the same vertex
    passes, so long as no node exceeds delta children or depth s."""
    adj = {}
    for u, v in edges:
        if not g.adjacent(u, v):
            return f"tree edge ({u},{v}) not in host"
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    verts = set(adj) | {root}
    if len(edges) != len(verts) - 1:
        return "tree edges do not form a tree"
    for v in verts:
        if not (wmask >> v) & 1:
            return f"tree vertex {v} leaves the window"
    depth = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in depth:
                depth[v] = depth[u] + 1
                queue.append(v)
    if len(depth) != len(verts):
        return "tree is not connected"
    if not pruned:
        expected = sum(delta ** i for i in range(s + 1))
        if len(verts) != expected:
            return f"tree has {len(verts)} vertices, a full tree has {expected}"
    for v, dep in depth.items():
        if dep > s:
            return f"vertex {v} sits below depth {s}"
        children = sum(1 for u in adj.get(v, ()) if depth[u] == dep + 1)
        if pruned:
            if children > delta:
                return f"vertex {v} has {children} children, cap is {delta}"
        else:
            want = delta if dep < s else 0
            if children != want:
                return f"vertex {v} at depth {dep} has {children} children, wants {want}"
    return None


def verify_tree_array(
    arr: TreeArray, w: VertexSet, pairs, s, delta, g: Graph, pruned=False
) -> CheckResult:
    """Re-check every clause of the tree-array definition structurally.

    Returns ok plus the first violation found: path shape, simplicity,
    disjointness, window membership, one full tree per internal, tree
    shape, and tree/path disjointness.  With pruned=True the trees may
    be arbitrary subtrees rooted at the internals (the form left behind
    after regrowing pendants inside them), everything else unchanged.
    """
    want_pairs = {tuple(p) for p in pairs}
    if set(arr.paths) != want_pairs:
        return CheckResult(False, ("paths do not match the pair family",))
    wmask = w.mask
    seen = set()
    internals = set()
    for (x, y), path in arr.paths.items():
        if len(path) != s + 1:
            return CheckResult(False, ("path has wrong length", (x, y)))
        if path[0] != x or path[-1] != y:
            return CheckResult(False, ("path endpoints disagree with the pair", (x, y)))
        if len(set(path)) != len(path):
            return CheckResult(False, ("path not simple", (x, y)))
        for u, v in zip(path, path[1:]):
            if not g.adjacent(u, v):
                return CheckResult(False, ("path edge missing from host", (u, v)))
        for v in path[1:-1]:
            if not (wmask >> v) & 1:
                return CheckResult(False, ("path internal leaves the window", v))
            internals.add(v)
        overlap = seen.intersection(path)
        if overlap:
            return CheckResult(False, ("paths not disjoint", min(overlap)))
        seen.update(path)
    if set(arr.rooted_trees) != internals:
        return CheckResult(False, ("tree roots do not match the path internals",))
    claimed = {}
    for root, edges in arr.rooted_trees.items():
        reason = _tree_shape_ok(edges, root, s, delta, g, wmask, pruned)
        if reason:
            return CheckResult(False, (reason, root))
        verts = {root}
        for u, v in edges:
            verts.add(u)
            verts.add(v)
        for v in verts:
            if v != root and v in seen:
                return CheckResult(False, ("tree touches a path beyond its root", v))
            if v in claimed and claimed[v] != root:
                return CheckResult(False, ("trees not disjoint", v))
            claimed.setdefault(v, root)
    return CheckResult(True)


@dataclass
class RecParameters:
    """Window/parameter arithmetic for tree-array reconstruction at scale n.

    Logs are base 2 throughout; `inequalities` carries the three chained
    capacity comparisons as (name, lhs, rhs, holds) with exact
    fractions, and regime_ok records whether d clears delta^(5h).
    """

    n: int
    d: int
    delta: int
    h: int
    s_min: int
    s_max: int
    m_bound: int
    d1: int
    regime_ok: bool
    log_base: int = 2
    inequalities: tuple = field(default_factory=tuple)


def rec_parameters(n, d, delta) -> RecParameters:
    """Evaluate the reconstruction formulas for an n-vertex host.

    h = ceil(sqrt(log2 n)), s ranges over [sqrt(log2 n)-1,
    2*sqrt(log2 n)-1], m = floor(n/2d), d1 = delta^(2h).
    """
    if n < 2 or d < 1 or delta < 2:
        raise InvalidParameter("need n >= 2, d >= 1, delta >= 2")
    root = math.sqrt(math.log2(n))
    h = math.ceil(root)
    s_min = math.ceil(root - 1)
    s_max = math.floor(2 * root - 1)
    m_bound = n // (2 * d)
    d1 = delta ** (2 * h)
    regime_ok = d >= delta ** (5 * h)
    m_eff = max(1, m_bound)
    s = s_max
    q0 = Fraction(10 * d1 * m_eff + m_eff * (s + 1) * delta ** (s + 1))
    q1 = Fraction(n, delta ** (5 * h)) * (10 * delta ** (2 * h) + 10 + 2 * h * delta ** (2 * h))
    q2 = Fraction(n, delta ** (3 * h)) * (2 * h + 11)
    # delta^(5h/2) need not be integral, so the last comparison squares
    # both sides to stay exact; the reported bound is a float
    q3 = n / delta ** (2.5 * h)
    q3_sq = Fraction(n) ** 2 / Fraction(delta ** (5 * h))
    inequalities = (
        ("10*d1*m + m*(s+1)*delta^(s+1) <= (n/delta^(5h))*(10*delta^(2h)+10+2h*delta^(2h))", q0, q1, q0 <= q1),
        ("(n/delta^(5h))*(10*delta^(2h)+10+2h*delta^(2h)) <= (n/delta^(3h))*(2h+11)", q1, q2, q1 <= q2),
        ("(n/delta^(3h))*(2h+11) <= n/delta^(5h/2)", q2, q3, q2 * q2 <= q3_sq),
    )
    return RecParameters(n, d, delta, h, s_min, s_max, m_bound, d1, regime_ok, 2, inequalities)
