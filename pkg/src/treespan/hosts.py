"""Host graph generation for experiments.

Three kinds of host: random regular graphs drawn from the configuration
model, binomial random graphs, and edge lists loaded from disk.  Every
draw is driven by a seeded generator so the same spec and seed always
give the same graph.
"""

from __future__ import annotations

import random

from .errors import InvalidSpec, RejectionBudgetExceeded
from .graphs import Graph, read_edge_list

# full restarts allowed before the pairing gives up; loops and repeat
# edges are dodged stub by stub, so a restart only happens on a dead
# end near the tail of a draw
REJECTION_BUDGET = 200


def _random_regular(n, d, rng):
    # stub pairing with local retries: rejecting whole rounds keeps
    # only exp(-(d*d-1)/4) of them, useless beyond d around 4
    for _ in range(REJECTION_BUDGET):
        stubs = [v for v in range(n) for _ in range(d)]
        rng.shuffle(stubs)
        seen = set()
        while stubs:
            u = stubs.pop()
            pick = None
            for _ in range(2 * len(stubs)):
                j = rng.randrange(len(stubs))
                v = stubs[j]
                if v != u and (u, v) not in seen and (v, u) not in seen:
                    pick = j
                    break
            if pick is None:
                break
            v = stubs[pick]
            stubs[pick] = stubs[-1]
            stubs.pop()
            seen.add((u, v) if u < v else (v, u))
        else:
            return Graph(n, sorted(seen))
    raise RejectionBudgetExceeded(
        f"no simple {d}-regular pairing on {n} vertices in {REJECTION_BUDGET} draws"
    )


def _gnp(n, p, rng):
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v))
    return Graph(n, edges)


def generate_host(spec, seed=0) -> Graph:
    """Build the host a spec mapping describes.

    spec["kind"] selects the model: "regular" reads n and d, "gnp"
    reads n and p, "file" reads path.  Everything else is InvalidSpec.
    """
    kind = spec.get("kind")
    if kind == "regular":
        n, d = int(spec.get("n", 0)), int(spec.get("d", 0))
        if n < 1:
            raise InvalidSpec(f"regular host needs n >= 1, got {n}")
        if not 0 <= d < n:
            raise InvalidSpec(f"degree {d} out of range for {n} vertices")
        if (n * d) % 2:
            raise InvalidSpec(f"n*d = {n * d} is odd; no {d}-regular graph on {n} vertices")
        return _random_regular(n, d, random.Random(seed))
    if kind == "gnp":
        n, p = int(spec.get("n", 0)), float(spec.get("p", -1.0))
        if n < 1:
            raise InvalidSpec(f"gnp host needs n >= 1, got {n}")
        if not 0.0 <= p <= 1.0:
            raise InvalidSpec(f"edge probability {p} outside [0, 1]")
        return _gnp(n, p, random.Random(seed))
    if kind == "file":
        path = spec.get("path", "")
        if not path:
            raise InvalidSpec("file host needs a path")
        return read_edge_list(path)
    raise InvalidSpec(f"unknown host kind {kind!r}")
