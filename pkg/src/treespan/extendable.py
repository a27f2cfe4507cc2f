"""Bookkeeping and growth of extendable subgraphs.

A subgraph S of a host G is (d, m)-extendable when S has maximum degree
at most d and every vertex set X with |X| <= 2m satisfies

    |Gamma(X) \\ V(S)|  >=  (d-1)|X| - sum_{x in X and S} (deg_S(x) - 1).

Subgraphs with this property can absorb new paths and trees without
losing it, which is the engine behind the embedding routines here: path
extension between prescribed endpoints, rooted tree extension,
almost-spanning tree embedding into a window, and exact-length
connection of endpoint pairs through a window.
"""

import itertools
import math
import random
import warnings
from collections import deque
from dataclasses import dataclass

from .errors import (
    BoundWarning,
    CapacityExceeded,
    EmbeddingFailed,
    InvalidParameter,
    InvariantViolation,
    PreconditionViolated,
    SearchExhausted,
    SizeLimitExceeded,
)
from .graphs import EXHAUSTIVE_BUDGET, CheckResult, Graph, VertexSet, bits, mask_of
from .trees import Tree, bfs_parents, path_between

DEFAULT_BUDGET = 10 ** 6


class _Budget:
    """Countdown of search-node expansions shared across one operation."""

    __slots__ = ("left",)

    def __init__(self, total):
        self.left = total

    def spend(self, stage, amount=1):
        self.left -= amount
        if self.left < 0:
            raise SearchExhausted(stage, "backtracking budget exhausted")


class ExtendableState:
    """Mutable record of a growing subgraph S inside a fixed host.

    Tracks the vertex set of S and each member's degree within S; the
    host itself is immutable.  Single-owner: the growth routines mutate
    the state they are given, and only after the grown subgraph passes
    an extendability recheck.
    """

    __slots__ = ("host", "sub_mask", "sub_degrees", "d", "m")

    def __init__(self, host: Graph, vertices, d: int, m: int, edges=()):
        if d < 3 or m < 1:
            raise InvalidParameter("extendability needs d >= 3 and m >= 1")
        self.host = host
        self.sub_mask = vertices.mask if isinstance(vertices, VertexSet) else mask_of(vertices)
        self.d = d
        self.m = m
        degrees = {v: 0 for v in bits(self.sub_mask)}
        for u, v in edges:
            if u not in degrees or v not in degrees:
                raise InvalidParameter(f"subgraph edge ({u},{v}) leaves the vertex set")
            if not host.adjacent(u, v):
                raise InvalidParameter(f"subgraph edge ({u},{v}) is missing from the host")
            degrees[u] += 1
            degrees[v] += 1
        if degrees and max(degrees.values()) > d:
            raise InvalidParameter(f"subgraph degree exceeds d={d}")
        self.sub_degrees = degrees

    @classmethod
    def empty(cls, host, vertices, d, m):
        """State whose subgraph has the given vertices and no edges."""
        return cls(host, vertices, d, m)

    def sub_vertices(self):
        return VertexSet(self.host.n, self.sub_mask)

    def size(self):
        return self.sub_mask.bit_count()

    def degree_in_sub(self, v):
        return self.sub_degrees.get(v, 0)

    def copy(self):
        twin = ExtendableState.__new__(ExtendableState)
        twin.host = self.host
        twin.sub_mask = self.sub_mask
        twin.sub_degrees = dict(self.sub_degrees)
        twin.d = self.d
        twin.m = self.m
        return twin

    def absorb_path(self, path):
        """Record a committed path; endpoints already in S, internals fresh."""
        for v in path[1:-1]:
            self.sub_mask |= 1 << v
            self.sub_degrees[v] = 2
        self.sub_degrees[path[0]] += 1
        self.sub_degrees[path[-1]] += 1

    def absorb_tree(self, t, assignment, t_root):
        """Record a committed tree copy rooted at an existing S vertex."""
        for v in range(t.n):
            img = assignment[v]
            if v == t_root:
                self.sub_degrees[img] = self.sub_degrees.get(img, 0) + t.degree(v)
                self.sub_mask |= 1 << img
            else:
                self.sub_mask |= 1 << img
                self.sub_degrees[img] = t.degree(v)

    def __repr__(self):
        return f"ExtendableState(|S|={self.size()}, d={self.d}, m={self.m})"


def _violates(state, xmask, size):
    g = state.host
    gamma = g.union_neighborhood(xmask)
    lhs = (gamma & ~state.sub_mask).bit_count()
    rhs = (state.d - 1) * size
    inside = xmask & state.sub_mask
    if inside:
        rhs -= sum(state.sub_degrees[x] - 1 for x in bits(inside))
    return lhs < rhs


def is_extendable(state: ExtendableState, mode="exact", trials=400, seed=0, budget=None):
    """Decide the extendability inequality over all X with |X| <= 2m.

    Exact mode enumerates every candidate set (ascending size, then
    lexicographic) and reports the first witness on failure.  Sampled
    mode is a randomized refutation search: a False result carries a
    genuine witness, a True result only means none was found.
    """
    limit = min(2 * state.m, state.host.n)
    n = state.host.n
    if mode == "exact":
        cap = budget if budget is not None else EXHAUSTIVE_BUDGET
        total = sum(math.comb(n, j) for j in range(1, limit + 1))
        if total > cap:
            raise SizeLimitExceeded(f"{total} candidate sets exceed budget {cap}")
        for size in range(1, limit + 1):
            for combo in itertools.combinations(range(n), size):
                if _violates(state, mask_of(combo), size):
                    return CheckResult(False, combo)
        return CheckResult(True)
    if mode != "sampled":
        raise InvalidParameter(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    near = list(bits(state.sub_mask | state.host.union_neighborhood(state.sub_mask)))
    for trial in range(trials):
        size = rng.randint(1, limit)
        chosen = set()
        # bias half the trials toward S and its boundary, where violations live
        if near and trial % 2 == 0:
            chosen.add(rng.choice(near))
        while len(chosen) < size:
            chosen.add(rng.randrange(n))
        combo = tuple(sorted(chosen))
        if _violates(state, mask_of(combo), len(combo)):
            return CheckResult(False, combo, mode="sampled")
    return CheckResult(True, None, mode="sampled")


def _recheck(state, seed):
    """Post-growth verification: exact while affordable, sampled beyond."""
    if 2 * state.m <= 6:
        try:
            return is_extendable(state, "exact")
        except SizeLimitExceeded:
            pass
    return is_extendable(state, "sampled", trials=300, seed=seed)


def _bfs_dist(g, allowed, src):
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in bits(g.masks[u] & allowed):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _path_candidates(g, free, a, b, length, meter, stage):
    """Yield simple (a,b)-paths with exactly `length` edges, internals in free.

    Depth-first with two prunings: internals must keep b reachable within
    the remaining step count (static distances), and candidates are
    ranked ascending by degree into the still-free region, ties by id.
    """
    dist = _bfs_dist(g, free | (1 << a) | (1 << b), b)
    if dist.get(a, length + 1) > length:
        return
    used = 1 << a

    def step(cur, depth, trail):
        nonlocal used
        remaining = length - depth
        if remaining == 1:
            meter.spend(stage)
            if (g.masks[cur] >> b) & 1:
                yield trail + [b]
            return
        avail = g.masks[cur] & free & ~used
        ranked = sorted(
            (v for v in bits(avail) if dist.get(v, length + 1) <= remaining - 1),
            key=lambda v: ((g.masks[v] & free & ~used).bit_count(), v),
        )
        for v in ranked:
            meter.spend(stage)
            used |= 1 << v
            yield from step(v, depth + 1, trail + [v])
            used &= ~(1 << v)

    yield from step(a, 0, [a])


def _tree_candidates(g, free, t, t_root, image_root, meter, stage, rotate=0):
    """Yield injective BFS-order embeddings of t; non-root images in free.

    Candidate images for each slot are ranked ascending by degree into
    the still-free region, ties by id; `rotate` shifts every ranking
    cyclically so retries explore different corners.  Iterative so deep
    trees cannot hit the recursion limit.
    """
    if t.n == 1:
        yield {t_root: image_root}
        return
    parent, _, order = bfs_parents(t, t_root)
    n = len(order)
    assignment = {t_root: image_root}
    used = 1 << image_root

    def ranked(pos):
        pimg = assignment[parent[order[pos]]]
        avail = g.masks[pimg] & free & ~used
        cands = sorted(bits(avail), key=lambda w: ((g.masks[w] & free & ~used).bit_count(), w))
        if rotate and cands:
            r = rotate % len(cands)
            cands = cands[r:] + cands[:r]
        return iter(cands)

    iters = [None] * n
    placed = [None] * n
    pos = 1
    iters[1] = ranked(1)
    while pos >= 1:
        if placed[pos] is not None:
            used &= ~(1 << placed[pos])
            del assignment[order[pos]]
            placed[pos] = None
        nxt = next(iters[pos], None)
        if nxt is None:
            iters[pos] = None
            pos -= 1
            continue
        meter.spend(stage)
        assignment[order[pos]] = nxt
        used |= 1 << nxt
        placed[pos] = nxt
        if pos + 1 == n:
            yield dict(assignment)
            continue
        pos += 1
        iters[pos] = ranked(pos)


def exact_length_path(g: Graph, a, b, length, window: VertexSet, budget=None):
    """First (a,b)-path with exactly `length` edges, internals in window.

    Returns the vertex tuple, or None once the search space is exhausted.
    SearchExhausted means the budget ran out before that.
    """
    if a == b:
        raise InvalidParameter("endpoints must differ")
    if length < 1:
        raise InvalidParameter("length must be positive")
    meter = budget if isinstance(budget, _Budget) else _Budget(budget or DEFAULT_BUDGET)
    free = window.mask & ~(1 << a) & ~(1 << b)
    for path in _path_candidates(g, free, a, b, length, meter, "exact-path"):
        return tuple(path)
    return None


def extend_path(state: ExtendableState, a, b, length, seed=0, budget=None, strict=False):
    """Grow S by an (a,b)-path of exactly `length` edges with fresh internals.

    Both endpoints must already lie in S with degree at most d/2 there,
    and `length` must be at least 2k+1 for k = ceil(log(2m)/log(d-1)).
    The room bound |S| <= |G| - 10dm - (length-2k-1) guarantees success
    on honest hosts; below it the call warns and proceeds (raises under
    strict=True).  The path is committed only after the grown subgraph
    passes an extendability recheck, exact when 2m <= 6.
    """
    g, d, m = state.host, state.d, state.m
    if a == b or not ((state.sub_mask >> a) & 1 and (state.sub_mask >> b) & 1):
        raise PreconditionViolated("endpoints are distinct vertices of S")
    worst = max(state.sub_degrees[a], state.sub_degrees[b])
    if worst > d / 2:
        raise PreconditionViolated("endpoint degree within S at most d/2", worst, d / 2)
    k = math.ceil(math.log(2 * m) / math.log(d - 1))
    if length < 2 * k + 1:
        raise PreconditionViolated("length at least 2k+1", length, 2 * k + 1)
    room = g.n - 10 * d * m - (length - 2 * k - 1)
    if state.size() > room:
        if strict:
            raise PreconditionViolated("|S| within the guaranteed room", state.size(), room)
        warnings.warn(
            f"|S|={state.size()} exceeds the guaranteed room {room}; attempting anyway",
            BoundWarning,
            stacklevel=2,
        )
    meter = _Budget(budget if budget is not None else DEFAULT_BUDGET)
    free = g.full_mask() & ~state.sub_mask
    for cand in _path_candidates(g, free, a, b, length, meter, "path-search"):
        trial = state.copy()
        trial.absorb_path(cand)
        if _recheck(trial, seed):
            state.sub_mask = trial.sub_mask
            state.sub_degrees = trial.sub_degrees
            return tuple(cand)
    raise SearchExhausted("path-search", f"no ({a},{b})-path of {length} edges kept S extendable")


def extend_tree(state: ExtendableState, root_in_s, t: Tree, t_root=0, seed=0, budget=None):
    """Embed t on fresh vertices with its root landing on root_in_s.

    Requires max degree of t at most d-1 and |S| + |t| within the room
    bound |G| - 2dm - 3m.  Returns the assignment (tree vertex -> host
    vertex); the state is updated only after an extendability recheck.
    A single-vertex tree is the identity case: state untouched.
    """
    g, d, m = state.host, state.d, state.m
    if not (state.sub_mask >> root_in_s) & 1:
        raise PreconditionViolated("root lies in S")
    if t.n == 1:
        return {t_root: root_in_s}
    if t.max_degree() > d - 1:
        raise PreconditionViolated("tree maximum degree at most d-1", t.max_degree(), d - 1)
    room = g.n - 2 * d * m - 3 * m
    if state.size() + t.n > room:
        raise PreconditionViolated("|S| + |T| within the guaranteed room", state.size() + t.n, room)
    if state.sub_degrees[root_in_s] + t.degree(t_root) > d:
        raise PreconditionViolated(
            "degree cap at the root", state.sub_degrees[root_in_s] + t.degree(t_root), d
        )
    meter = _Budget(budget if budget is not None else DEFAULT_BUDGET)
    free = g.full_mask() & ~state.sub_mask
    for assignment in _tree_candidates(g, free, t, t_root, root_in_s, meter, "tree-search"):
        trial = state.copy()
        trial.absorb_tree(t, assignment, t_root)
        if _recheck(trial, seed):
            state.sub_mask = trial.sub_mask
            state.sub_degrees = trial.sub_degrees
            return assignment
    raise SearchExhausted("tree-search", f"no copy of a {t.n}-vertex tree at {root_in_s}")


@dataclass
class Embedding:
    """An injective, edge-preserving placement of a tree inside a host."""

    tree: Tree
    host: Graph
    assignment: dict
    seed: int = 0


def verify_embedding(emb: Embedding, spanning=False) -> CheckResult:
    """Check totality, injectivity, and edge preservation of an embedding.

    With spanning=True additionally requires the image to cover every
    host vertex.  The witness names the first failure.
    """
    t, g, amap = emb.tree, emb.host, emb.assignment
    images = set()
    for v in range(t.n):
        if v not in amap:
            return CheckResult(False, ("unmapped", v))
        img = amap[v]
        if not 0 <= img < g.n:
            return CheckResult(False, ("image out of range", v, img))
        if img in images:
            return CheckResult(False, ("image collision", img))
        images.add(img)
    for u, v in t.edges():
        if not g.adjacent(amap[u], amap[v]):
            return CheckResult(False, ("edge not preserved", (u, v)))
    if spanning and len(images) != g.n:
        return CheckResult(False, ("not spanning", len(images), g.n))
    return CheckResult(True)


def embed_almost_spanning(g: Graph, w: VertexSet, t: Tree, d_exp, seed=0, budget=None) -> Embedding:
    """Embed t into the window w of a host promised to d_exp-expand into w.

    Capacity precondition: |t| <= |w| - 4*Delta*ceil(|w| / (2*d_exp)).
    Greedy BFS placement rooted at a highest-degree tree vertex, with
    full backtracking; candidates with few free neighbors are used
    first so the untouched region keeps its expansion.  The result is
    verified injective and edge-preserving before being returned.
    """
    wmask = w.mask
    wsize = wmask.bit_count()
    delta = t.max_degree()
    m = math.ceil(wsize / (2 * d_exp))
    cap = wsize - 4 * delta * m
    if t.n > cap:
        raise CapacityExceeded(f"tree order {t.n} exceeds window capacity {cap}")
    starts = sorted(bits(wmask), key=lambda v: (-g.deg_into(v, wmask), v))
    if not starts:
        raise EmbeddingFailed("empty window")
    if seed:
        r = seed % len(starts)
        starts = starts[r:] + starts[:r]
    t_root = max(range(t.n), key=lambda v: (t.degree(v), -v))
    meter = _Budget(budget if budget is not None else DEFAULT_BUDGET)
    try:
        for s0 in starts[:8]:
            free = wmask & ~(1 << s0)
            for assignment in _tree_candidates(g, free, t, t_root, s0, meter, "almost-spanning"):
                emb = Embedding(t, g, assignment, seed)
                check = verify_embedding(emb)
                if not check:
                    raise InvariantViolation(f"embedding failed verification: {check.witness}")
                return emb
    except SearchExhausted as exc:
        raise EmbeddingFailed(str(exc)) from exc
    raise EmbeddingFailed(f"no embedding of {t.n} vertices into a window of {wsize}")


def _stub_tree(stub, d1, height):
    """A path of `stub` edges from vertex 0, then a full d1-ary tree below.

    Returns the tree and its last level (the d1-ary leaves; the path end
    itself when height is 0).  Vertex 0 is the attachment end.
    """
    edges = [(i, i + 1) for i in range(stub)]
    level = [stub]
    nxt = stub + 1
    for _ in range(height):
        fresh = []
        for p in level:
            for _ in range(d1):
                edges.append((p, nxt))
                fresh.append(nxt)
                nxt += 1
        level = fresh
    return Tree.from_edges(nxt, edges), tuple(level)


def _first_assignment(g, allowed, t, image_root, meter, stage, rotate):
    for assignment in _tree_candidates(g, allowed, t, 0, image_root, meter, stage, rotate):
        return assignment
    return None


def _expansion_violator(g, core, factor, m, seed, meter):
    """Find A inside core with |N(A) in core\\A| < factor*|A|, or None.

    Exhaustive over all sizes when m <= 3, otherwise exhaustive for
    sizes 1-2 and sampled above.
    """
    verts = sorted(bits(core))
    top = min(m, len(verts))
    exhaustive_top = top if m <= 3 else 2
    for size in range(1, exhaustive_top + 1):
        for combo in itertools.combinations(verts, size):
            meter.spend("prune")
            amask = mask_of(combo)
            nb = g.union_neighborhood(amask) & core & ~amask
            if nb.bit_count() < factor * size:
                return amask
    if top > exhaustive_top:
        rng = random.Random(seed)
        for _ in range(1500):
            meter.spend("prune")
            size = rng.randint(exhaustive_top + 1, top)
            amask = mask_of(rng.sample(verts, size))
            nb = g.union_neighborhood(amask) & core & ~amask
            if nb.bit_count() < factor * size:
                return amask
    return None


def _peel_to_expanding(g, start_mask, d1, m, seed, meter):
    """Remove violating sets until every A of size <= m has 2*d1 expansion.

    Peeling past m vertices total means the window does not behave like
    part of a joined graph; that is a prune-stage failure, not silence.
    """
    core = start_mask
    removed = 0
    while True:
        viol = _expansion_violator(g, core, 2 * d1, m, seed, meter)
        if viol is None:
            return core
        removed += viol.bit_count()
        if removed > m:
            raise SearchExhausted("prune", f"peeled {removed} vertices, above m={m}")
        core &= ~viol


def _assert_exact_path(g, path, x, y, k, umask):
    if len(path) != k + 1 or path[0] != x or path[-1] != y:
        raise InvariantViolation("spliced path has the wrong shape")
    if len(set(path)) != len(path):
        raise InvariantViolation("spliced path repeats a vertex")
    for u, v in zip(path, path[1:]):
        if not g.adjacent(u, v):
            raise InvariantViolation("spliced path skips a non-edge")
    for v in path[1:-1]:
        if not (umask >> v) & 1:
            raise InvariantViolation("spliced path leaves the window")


def _connect_attempt(g, x, y, k, v1, v2, d1, tree_h, meter, seed):
    """Try to realize one exact-length path from x to y through v1/v2."""
    l_eff = min(tree_h, k // 2 - 1)
    t1, last1 = _stub_tree(k // 2 - 1 - l_eff, d1, l_eff)
    t2, last2 = _stub_tree((k + 1) // 2 - l_eff, d1, l_eff)
    for attempt in range(6):
        rotate = attempt + seed % 7
        a1 = _first_assignment(g, v1, t1, x, meter, "grow", rotate)
        if a1 is None:
            return None
        a2 = _first_assignment(g, v2, t2, y, meter, "grow", rotate)
        if a2 is None:
            return None
        back2 = {a2[v]: v for v in last2}
        w2mask = mask_of(back2)
        for leaf1 in last1:
            hit = g.masks[a1[leaf1]] & w2mask
            if not hit:
                continue
            leaf2 = back2[next(bits(hit))]
            left = [a1[v] for v in path_between(t1, 0, leaf1)]
            right = [a2[v] for v in path_between(t2, leaf2, 0)]
            return tuple(left + right)
    return None


def connect_exact_length(g: Graph, pairs, u: VertexSet, lengths, d1, m, seed=0, budget=None):
    """Realize one pair (x_i, y_i) by a path of exactly lengths[i] edges in u.

    Splits u into two halves, peels each down to a core in which every
    set of at most m vertices has 2*d1-fold expansion, picks a pair with
    at least 2*d1 neighbors in both cores, grows a d1-ary tree plus path
    stub from each endpoint, and joins the trees' last levels by an
    edge.  Returns (index, path).  Length-1 requests are satisfied by a
    direct edge and length-2 by a common neighbor in the window.
    """
    if d1 < 2:
        raise InvalidParameter("need d1 >= 2")
    if m < 1:
        raise InvalidParameter("need m >= 1")
    if len(lengths) != len(pairs):
        raise InvalidParameter("one length per pair")
    if len(pairs) != 2 * m:
        raise PreconditionViolated("pair count equals 2m", len(pairs), 2 * m)
    umask = u.mask
    usize = umask.bit_count()
    seen = set()
    for x, y in pairs:
        for v in (x, y):
            if v in seen:
                raise PreconditionViolated("pair endpoints are distinct")
            seen.add(v)
            if (umask >> v) & 1:
                raise PreconditionViolated("pair endpoints stay outside the window")
    low = 2 * math.log(m) / math.log(d1) + 1 if m > 1 else 1
    for k in lengths:
        if k < low:
            raise PreconditionViolated("length at least 2 log m / log d1 + 1", k, low)
        if k > usize / 2:
            raise PreconditionViolated("length at most half the window", k, usize / 2)
    if usize < 20 * d1 * m:
        warnings.warn(
            f"window of {usize} is below the guaranteed 20*d1*m = {20 * d1 * m}",
            BoundWarning,
            stacklevel=2,
        )
    meter = _Budget(budget if budget is not None else DEFAULT_BUDGET)
    members = sorted(bits(umask))
    half = (len(members) + 1) // 2
    v1 = _peel_to_expanding(g, mask_of(members[:half]), d1, m, seed, meter)
    v2 = _peel_to_expanding(g, mask_of(members[half:]), d1, m, seed + 1, meter)
    need = 2 * d1
    candidates = [
        j
        for j, (x, y) in enumerate(pairs)
        if g.deg_into(x, v1) >= need and g.deg_into(y, v2) >= need
    ]
    if not candidates:
        raise SearchExhausted("select", "no pair sees both cores with 2*d1 neighbors")
    tree_h = math.ceil(math.log(m) / math.log(d1)) if m > 1 else 0
    for j in candidates:
        x, y = pairs[j]
        k = lengths[j]
        if k == 1:
            if g.adjacent(x, y):
                return j, (x, y)
            continue
        if k == 2:
            common = g.masks[x] & g.masks[y] & umask
            if common:
                return j, (x, next(bits(common)), y)
            continue
        path = _connect_attempt(g, x, y, k, v1, v2, d1, tree_h, meter, seed)
        if path is not None:
            _assert_exact_path(g, path, x, y, k, umask)
            return j, path
    raise SearchExhausted("join", "no candidate pair produced an exact-length path")
