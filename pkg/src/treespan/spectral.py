"""Expander certification: spectral route, jumbledness route, exact checks.

Two certification routes produce the same kind of claim.  The eigenvalue
route takes a d-regular graph with second eigenvalue magnitude lam and,
when lam < d/8, certifies an (n, d/(2*lam))-expander together with
m-joinedness at m = ceil(lam*n/d).  The jumbledness route is pure
arithmetic on (n, p, beta, min_degree) and certifies an (n, p*n/(4*beta))-
expander.  Exact checks decide the expander and windowed-expansion
definitions by subset enumeration, and sampled falsifiers hunt for
counterexamples when enumeration is out of budget.

All derivations here reduce quantifiers by monotonicity: expansion is
checked for sizes 1 .. ceil(threshold)-1, and the edge-between condition
only at the single critical size.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ConvergenceFailure, InvalidParameter, NotRegular, SizeLimitExceeded
from .graphs import EXHAUSTIVE_BUDGET, CheckResult, Graph, VertexSet, bits, is_m_joined_exact, lowest_bits, mask_of

# Largest order for which the dense symmetric eigensolver is used.
DENSE_EIGEN_LIMIT = 4000


@dataclass
class SpectralProfile:
    n: int
    top: float
    lam: float
    regular: bool
    degree: int | None


@dataclass
class ExpanderCertificate:
    """A positive certification outcome.

    kind is 'eigenvalue-route', 'bijumbled-route', 'exact' or 'sampled-only';
    claim is a (name, value) pair such as ('expander', d) or ('m-joined', m);
    params carries the arithmetic behind the claim and witness_window says
    which set sizes the evidence actually covers.
    """

    kind: str
    claim: tuple
    params: dict
    witness_window: dict
    seed: int | None = None

    def to_record(self) -> str:
        payload = {
            "kind": self.kind,
            "claim": list(self.claim),
            "params": self.params,
            "witness_window": self.witness_window,
            "seed": self.seed,
        }
        return json.dumps(payload, sort_keys=True)


@dataclass
class Rejection:
    reason: str
    inequalities: list = field(default_factory=list)

    def __bool__(self):
        return False


def second_eigenvalue(g: Graph) -> SpectralProfile:
    """Top eigenvalue and second-largest magnitude of the adjacency matrix.

    Dense symmetric solve up to DENSE_EIGEN_LIMIT vertices, iterative
    (ARPACK) beyond that.
    """
    if g.n < 2:
        raise InvalidParameter("need at least 2 vertices")
    degs = g.degrees()
    regular = len(set(degs)) == 1
    degree = degs[0] if regular else None
    if g.n <= DENSE_EIGEN_LIMIT:
        a = np.zeros((g.n, g.n))
        for u in range(g.n):
            for v in g.adj[u]:
                a[u, v] = 1.0
        vals = np.linalg.eigvalsh(a)
        order = np.argsort(vals)[::-1]
        top = float(vals[order[0]])
        lam = float(max(abs(vals[order[i]]) for i in range(1, g.n)))
    else:
        top, lam = _iterative_extremes(g)
    return SpectralProfile(g.n, top, lam, regular, degree)


def _iterative_extremes(g: Graph):
    from scipy.sparse import csr_matrix
    from scipy.sparse.linalg import ArpackNoConvergence, eigsh

    rows, cols = [], []
    for u in range(g.n):
        for v in g.adj[u]:
            rows.append(u)
            cols.append(v)
    a = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.n, g.n))
    try:
        top_vals = eigsh(a, k=2, which="LA", return_eigenvectors=False)
        bottom = eigsh(a, k=1, which="SA", return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise ConvergenceFailure(str(exc)) from exc
    top = float(max(top_vals))
    second = float(min(top_vals))
    lam = max(abs(second), abs(float(bottom[0])))
    return top, lam


def eigen_expander_certificate(g: Graph):
    """Certify expansion for regular graphs with a spectral gap.

    lam < d/8 yields an (n, d/(2*lam))-expander claim; the joinedness value
    m = ceil(lam*n/d) rides along in params.
    """
    profile = second_eigenvalue(g)
    if not profile.regular:
        raise NotRegular("eigenvalue route needs a regular graph")
    d = profile.degree
    lam = profile.lam
    if d == 0 or lam >= d / 8:
        return Rejection(
            "second eigenvalue too large",
            [("lam < d/8", lam, d / 8)],
        )
    d1 = d / (2 * lam)
    m = math.ceil(lam * g.n / d)
    return ExpanderCertificate(
        kind="eigenvalue-route",
        claim=("expander", d1),
        params={"n": g.n, "d": d, "lambda": lam, "d1": d1, "m": m},
        witness_window={"basis": "spectral", "sizes": "all"},
    )


def bijumbled_expander_certificate(n, p, beta, min_degree):
    """Arithmetic certification from jumbledness parameters.

    Hypotheses: 0 < beta <= p*n/400 and min_degree >= 4*sqrt(p*beta*n).
    The conclusion claims an (n, p*n/(4*beta))-expander; joinedness at
    m = ceil(2*beta/p) rides along.  Jumbledness itself is a premise, not
    verified here.
    """
    if n <= 0 or not (0 < p <= 1) or beta <= 0:
        raise InvalidParameter(f"bad parameters n={n} p={p} beta={beta}")
    checks = [
        ("beta <= p*n/400", beta, p * n / 400),
        ("min_degree >= 4*sqrt(p*beta*n)", min_degree, 4 * math.sqrt(p * beta * n)),
    ]
    if beta > p * n / 400:
        return Rejection("beta too large", [checks[0]])
    if min_degree < 4 * math.sqrt(p * beta * n):
        return Rejection("minimum degree too small", [checks[1]])
    d1 = p * n / (4 * beta)
    return ExpanderCertificate(
        kind="bijumbled-route",
        claim=("expander", d1),
        params={
            "n": n,
            "p": p,
            "beta": beta,
            "min_degree": min_degree,
            "d1": d1,
            "m": math.ceil(2 * beta / p),
        },
        witness_window={"basis": "arithmetic", "premise": "bijumbledness assumed"},
    )


def _critical_size(total, d):
    """ceil(total / (2d)) with protection against float fuzz."""
    if d <= 0:
        raise InvalidParameter(f"expansion degree must be positive, got {d}")
    return max(1, math.ceil(total / (2 * d) - 1e-12))


def _expansion_violation(g, sizes, wmask, d, budget):
    """First X (lex order, ascending size) with |N(X) & W| < d|X|, or None."""
    spent = 0
    for j in sizes:
        work = math.comb(g.n, j)
        spent += work
        if spent > budget:
            raise SizeLimitExceeded(f"size-{j} enumeration exceeds budget {budget}")
        for xs in combinations(range(g.n), j):
            xmask = mask_of(xs)
            nbr = (g.union_neighborhood(xmask) & ~xmask) & wmask
            if nbr.bit_count() + 1e-9 < d * j:
                return xs
    return None


def check_expands_into_exact(g: Graph, w: VertexSet, d, budget=None) -> CheckResult:
    """Exhaustively decide whether g d-expands into the window w.

    (i) |N(X) & W| >= d|X| for every X with 1 <= |X| < ceil(|W|/2d), and
    (ii) every two disjoint sets of size exactly ceil(|W|/2d) span an edge.
    Sets X range over the whole vertex set, not just the window.
    """
    if budget is None:
        budget = EXHAUSTIVE_BUDGET
    if len(w) == 0:
        return CheckResult(True, None)
    m = _critical_size(len(w), d)
    xs = _expansion_violation(g, range(1, m), w.mask, d, budget)
    if xs is not None:
        return CheckResult(False, ("expansion", xs))
    joined = is_m_joined_exact(g, m, budget)
    if not joined.ok:
        return CheckResult(False, ("joined", joined.witness))
    return CheckResult(True, None)


def check_expander_exact(g: Graph, d, budget=None) -> CheckResult:
    """Exhaustively decide the (n, d)-expander definition.

    (i) |N(X)| >= d|X| for 1 <= |X| < n/(2d); (ii) disjoint equal-size sets
    at or above n/(2d) span an edge, reduced to size exactly ceil(n/(2d)).
    """
    if budget is None:
        budget = EXHAUSTIVE_BUDGET
    m = _critical_size(g.n, d)
    full = g.vertex_set()
    xs = _expansion_violation(g, range(1, m), full.mask, d, budget)
    if xs is not None:
        return CheckResult(False, ("expansion", xs))
    joined = is_m_joined_exact(g, m, budget)
    if not joined.ok:
        return CheckResult(False, ("joined", joined.witness))
    return CheckResult(True, None)


def m_joined_spectral(g: Graph):
    """Smallest m the mixing lemma certifies: m = floor(lam*n/d) + 1.

    When 2m > n the claim is vacuous (no two disjoint m-sets), but it is
    still a true claim and is returned; only m > n, where no m-set exists
    at all, is rejected.
    """
    profile = second_eigenvalue(g)
    if not profile.regular:
        raise NotRegular("mixing lemma route needs a regular graph")
    d = profile.degree
    if d == 0:
        return Rejection("empty graph", [("d > 0", 0, 1)])
    m = math.floor(profile.lam * g.n / d) + 1
    if m > g.n:
        return Rejection("vacuous joinedness", [("m <= n", m, g.n)])
    return ExpanderCertificate(
        kind="eigenvalue-route",
        claim=("m-joined", m),
        params={"n": g.n, "d": d, "lambda": profile.lam, "m": m},
        witness_window={"basis": "mixing-lemma", "sizes": "all"},
    )


def _sample_biased_set(g, rng, size, wmask=0):
    """Connected-biased random vertex set: grow along edges when possible."""
    start_pool = list(bits(wmask)) if wmask else range(g.n)
    cur = {rng.choice(list(start_pool))}
    while len(cur) < size:
        frontier = 0
        for v in cur:
            frontier |= g.masks[v]
        frontier &= ~mask_of(cur)
        choices = list(bits(frontier))
        if choices and rng.random() < 0.8:
            cur.add(rng.choice(choices))
        else:
            v = rng.randrange(g.n)
            if v not in cur:
                cur.add(v)
    return tuple(sorted(cur))


def falsify_expansion_sampled(g: Graph, w: VertexSet, d, trials: int, seed: int):
    """Sampled counterexample hunt for d-expansion into w.

    Cycles through set sizes 1 .. ceil(|W|/2d)-1 with connected-biased
    samples for condition (i), and probes the critical size for the
    edge-between condition.  Deterministic for a fixed seed.
    """
    rng = random.Random(seed)
    m = _critical_size(len(w), d)
    full = g.full_mask()
    for t in range(trials):
        if m > 1 and (t % 3 != 2):
            size = 1 + (t % (m - 1))
            xs = _sample_biased_set(g, rng, size)
            xmask = mask_of(xs)
            nbr = (g.union_neighborhood(xmask) & ~xmask) & w.mask
            if nbr.bit_count() + 1e-9 < d * size:
                return CheckResult(False, ("expansion", xs), mode="sampled")
        else:
            if m > g.n:
                continue
            xs = _sample_biased_set(g, rng, m)
            xmask = mask_of(xs)
            closed = xmask | g.union_neighborhood(xmask)
            rest = full & ~closed
            if rest.bit_count() >= m:
                ys = tuple(bits(lowest_bits(rest, m)))
                return CheckResult(False, ("joined", (xs, ys)), mode="sampled")
    return CheckResult(True, None, mode="sampled")


def edge_deviation(g: Graph, p, x: VertexSet, y: VertexSet) -> float:
    """|e(X,Y) - p|X||Y|| / sqrt(|X||Y|) for one pair of sets."""
    from .graphs import edge_count_between

    if len(x) == 0 or len(y) == 0:
        return 0.0
    e = edge_count_between(g, x, y)
    return abs(e - p * len(x) * len(y)) / math.sqrt(len(x) * len(y))


def bijumbled_deviation_sampled(g: Graph, p, trials: int, seed: int) -> float:
    """Largest sampled jumbledness deviation; a lower bound for beta."""
    rng = random.Random(seed)
    best = 0.0
    for _ in range(trials):
        sx = rng.randrange(1, g.n + 1)
        sy = rng.randrange(1, g.n + 1)
        x = VertexSet.from_iter(g.n, rng.sample(range(g.n), sx))
        y = VertexSet.from_iter(g.n, rng.sample(range(g.n), sy))
        best = max(best, edge_deviation(g, p, x, y))
    return best
