import math
import random

import pytest

from oracles import (
    expansion_violation_naive,
    lambda_complete,
    lambda_complete_bipartite,
    lambda_cycle,
)
from treespan.errors import InvalidParameter, NotRegular
from treespan.graphs import Graph, VertexSet
from treespan.spectral import (
    ExpanderCertificate,
    Rejection,
    bijumbled_deviation_sampled,
    bijumbled_expander_certificate,
    check_expander_exact,
    check_expands_into_exact,
    edge_deviation,
    eigen_expander_certificate,
    falsify_expansion_sampled,
    m_joined_spectral,
    second_eigenvalue,
)


def test_second_eigenvalue_closed_forms():
    assert abs(second_eigenvalue(Graph.complete(5)).lam - lambda_complete(5)) < 1e-8
    assert abs(second_eigenvalue(Graph.cycle(5)).lam - lambda_cycle(5)) < 1e-8
    # golden ratio for the 5-cycle
    assert abs(second_eigenvalue(Graph.cycle(5)).lam - (1 + math.sqrt(5)) / 2) < 1e-8
    assert abs(second_eigenvalue(Graph.petersen()).lam - 2.0) < 1e-8
    assert abs(second_eigenvalue(Graph.complete_bipartite(3, 4)).lam
               - lambda_complete_bipartite(3, 4)) < 1e-8


def test_second_eigenvalue_profile_fields():
    prof = second_eigenvalue(Graph.complete(6))
    assert prof.regular and prof.degree == 5
    assert abs(prof.top - 5.0) < 1e-8
    path_prof = second_eigenvalue(Graph.path(4))
    assert not path_prof.regular and path_prof.degree is None
    with pytest.raises(InvalidParameter):
        second_eigenvalue(Graph(1, []))


def test_eigen_expander_certificate_examples():
    cert = eigen_expander_certificate(Graph.complete(17))
    assert isinstance(cert, ExpanderCertificate)
    assert cert.claim[0] == "expander"
    assert abs(cert.claim[1] - 8.0) < 1e-8
    assert cert.params["m"] == 2

    rej = eigen_expander_certificate(Graph.petersen())
    assert isinstance(rej, Rejection) and not rej
    assert isinstance(eigen_expander_certificate(Graph.cycle(8)), Rejection)

    with pytest.raises(NotRegular):
        eigen_expander_certificate(Graph.path(5))


def test_certificate_serialization_is_canonical():
    cert = eigen_expander_certificate(Graph.complete(17))
    a = cert.to_record()
    b = eigen_expander_certificate(Graph.complete(17)).to_record()
    assert a == b
    assert '"kind"' in a and '"eigenvalue-route"' in a


def test_bijumbled_certificate_arithmetic():
    cert = bijumbled_expander_certificate(1000, 0.5, 1.0, 90)
    assert isinstance(cert, ExpanderCertificate)
    assert abs(cert.claim[1] - 125.0) < 1e-8

    rej = bijumbled_expander_certificate(1000, 0.5, 2.0, 90)
    assert isinstance(rej, Rejection)
    assert rej.inequalities[0][0].startswith("beta")

    cert2 = bijumbled_expander_certificate(400, 1.0, 1.0, 400)
    assert abs(cert2.claim[1] - 100.0) < 1e-8

    small_deg = bijumbled_expander_certificate(1000, 0.5, 1.0, 80)
    assert isinstance(small_deg, Rejection)

    with pytest.raises(InvalidParameter):
        bijumbled_expander_certificate(100, 1.5, 1.0, 10)
    with pytest.raises(InvalidParameter):
        bijumbled_expander_certificate(100, 0.5, -1.0, 10)


def test_check_expands_into_examples():
    k8 = Graph.complete(8)
    assert check_expands_into_exact(k8, k8.vertex_set(), 3).ok

    c8 = Graph.cycle(8)
    r = check_expands_into_exact(c8, c8.vertex_set(), 3)
    assert not r.ok and r.witness == ("expansion", (0,))

    kb = Graph.complete_bipartite(4, 4)
    side = VertexSet.from_iter(8, range(4))
    r2 = check_expands_into_exact(kb, side, 2)
    assert not r2.ok and r2.witness[0] == "joined"
    xs, ys = r2.witness[1]
    assert not any(kb.masks[u] >> v & 1 for u in xs for v in ys)


def test_check_expander_exact_examples():
    assert check_expander_exact(Graph.complete(6), 2).ok

    r = check_expander_exact(Graph.cycle(10), 2)
    # adjacent pairs already fail the neighborhood condition
    assert not r.ok and r.witness == ("expansion", (0, 1))

    star = Graph(10, [(0, v) for v in range(1, 10)])
    r2 = check_expander_exact(star, 2)
    assert not r2.ok and r2.witness[0] == "expansion"


def test_check_expander_matches_naive_oracle():
    rng = random.Random(3)
    for _ in range(40):
        n = rng.randrange(5, 11)
        g = Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.6])
        for d in (1.5, 2, 3):
            got = check_expander_exact(g, d)
            m = max(1, math.ceil(n / (2 * d) - 1e-12))
            naive_x = expansion_violation_naive(g, g.full_mask(), d, m - 1)
            if naive_x is not None:
                assert not got.ok
            if got.ok:
                assert naive_x is None


def test_expander_monotone_in_d():
    rng = random.Random(9)
    for _ in range(25):
        n = rng.randrange(5, 10)
        g = Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.7])
        oks = [check_expander_exact(g, d).ok for d in (3, 2.5, 2, 1.5, 1)]
        for stronger, weaker in zip(oks, oks[1:]):
            assert (not stronger) or weaker


def test_m_joined_spectral_examples():
    assert m_joined_spectral(Graph.complete(17)).claim == ("m-joined", 2)
    assert m_joined_spectral(Graph.petersen()).claim == ("m-joined", 7)
    rej = m_joined_spectral(Graph.cycle(4))
    assert isinstance(rej, Rejection)


def test_m_joined_spectral_implies_exact():
    from treespan.graphs import is_m_joined_exact

    for g in (Graph.complete(10), Graph.complete(13), Graph.petersen(),
              Graph.circulant(12, (1, 2, 3))):
        out = m_joined_spectral(g)
        if isinstance(out, ExpanderCertificate):
            m = out.claim[1]
            assert is_m_joined_exact(g, m).ok


def test_falsify_expansion_sampled():
    c100 = Graph.cycle(100)
    r = falsify_expansion_sampled(c100, c100.vertex_set(), 3, 1000, seed=4)
    assert not r.ok and r.mode == "sampled"

    k50 = Graph.complete(50)
    ok = falsify_expansion_sampled(k50, k50.vertex_set(), 5, 500, seed=4)
    assert ok.ok

    # deterministic per seed
    again = falsify_expansion_sampled(c100, c100.vertex_set(), 3, 1000, seed=4)
    assert again.witness == r.witness


def test_edge_deviation_examples():
    c6 = Graph.cycle(6)
    x = VertexSet.from_iter(6, (0, 1))
    y = VertexSet.from_iter(6, (3, 4))
    assert abs(edge_deviation(c6, 1 / 3, x, y) - 2 / 3) < 1e-12

    k10 = Graph.complete(10)
    a = VertexSet.from_iter(10, range(5))
    b = VertexSet.from_iter(10, range(5, 10))
    assert edge_deviation(k10, 1.0, a, b) == 0.0


def test_bijumbled_deviation_sampled():
    empty = Graph(12, [])
    assert bijumbled_deviation_sampled(empty, 0.0, 200, seed=1) == 0.0
    c6 = Graph.cycle(6)
    beta_hat = bijumbled_deviation_sampled(c6, 1 / 3, 400, seed=2)
    assert beta_hat >= 2 / 3 - 1e-12
    assert beta_hat == bijumbled_deviation_sampled(c6, 1 / 3, 400, seed=2)
