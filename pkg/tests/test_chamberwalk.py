from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
import sympy
from hypothesis import assume, given, strategies as st

from detflops.chamberwalk import (InconsistentFan, NotClosed, NotPointed, StabilizerObstruction, bir_generators,
                                  chamber_bfs, check_group_invariance, classify_generator, cone_from_generators,
                                  cone_from_inequalities, cone_intersect, cones_equal, fundamental_domain,
                                  group_ball, interiors_meet, is_face, manual_certificate, simplicial_cone,
                                  toy_shear_certificate, verify_fan, walk, word_pushforward)
from detflops.flopengine import compose_word, ExceptionalPoint
from detflops.exactnum import GF
from detflops.tensorcore import model
from detflops.varprobe import sample_point


def brute_force_facets(gens, d):
    """Primitive inward normals of hyperplanes through d-1 independent generators."""
    out = set()
    for sub in itertools.combinations(gens, d - 1):
        ns = sympy.Matrix(sub).nullspace()
        if len(ns) != 1:
            continue
        v = ns[0]
        v = v * sympy.ilcm(*[x.q for x in v])
        v = [int(x) for x in v]
        g = int(np.gcd.reduce(np.abs(v)))
        v = [x // g for x in v]
        for s in (1, -1):
            w = tuple(s * x for x in v)
            if all(sum(a * b for a, b in zip(w, x)) >= 0 for x in gens):
                out.add(w)
    return out


vec = st.lists(st.integers(-3, 3), min_size=3, max_size=3)


@given(st.lists(vec, min_size=3, max_size=7))
def test_dd_matches_brute_force_3d(vs) -> None:
    # force pointedness by a positive first coordinate
    gens = [tuple([abs(v[0]) + 1] + v[1:]) for v in vs]
    assume(sympy.Matrix(gens).rank() == 3)
    C = cone_from_generators(gens)
    C.verify()
    assert set(C.facets) == brute_force_facets(gens, 3)
    assert cones_equal(cone_from_inequalities(C.facets), C)


@given(st.lists(st.lists(st.integers(-2, 2), min_size=4, max_size=4), min_size=4, max_size=7))
def test_dd_matches_brute_force_4d(vs) -> None:
    gens = [tuple([abs(v[0]) + 1] + v[1:]) for v in vs]
    assume(sympy.Matrix(gens).rank() == 4)
    C = cone_from_generators(gens)
    assert set(C.facets) == brute_force_facets(gens, 4)
    prim = {tuple(x // math.gcd(*v) for x in v) for v in gens}
    assert set(C.generators) <= prim


def test_dual_basis() -> None:
    C = simplicial_cone([(1, 0, 0), (1, 1, 0), (1, 1, 1)])
    assert set(C.facets) == {(0, 0, 1), (0, 1, -1), (1, -1, 0)}


def test_redundant_generator_dropped() -> None:
    C = cone_from_generators([(1, 0), (0, 1), (1, 1), (2, 2)])
    assert C.generators == ((0, 1), (1, 0))


def test_not_pointed() -> None:
    with pytest.raises(NotPointed):
        cone_from_generators([(1, 0), (-1, 0), (0, 1)])
    with pytest.raises(NotPointed):
        cone_from_inequalities([(0, 1)], (), 2)


def test_intersection_and_faces() -> None:
    A = cone_from_generators([(1, 0), (1, 1)])
    B = cone_from_generators([(1, 1), (0, 1)])
    meet = cone_intersect(A, B)
    assert meet.generators == ((1, 1),) and meet.rank == 1
    assert is_face(meet, A) and is_face(meet, B)
    assert not interiors_meet(A, B)
    assert interiors_meet(A, cone_from_generators([(2, 1), (0, 1)]))


def test_identity_fixture_single_chamber() -> None:
    I3 = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    mats = {(j, i): I3 for j, i in itertools.permutations(range(4), 2)}
    cert = chamber_bfs(3, mats)
    assert cert.status == "closed" and len(cert.chambers) == 1 and cert.generators == []
    assert bir_generators(cert) == []


def test_depth_zero_frontier(flagship_fixtures) -> None:
    N, mats, _ = flagship_fixtures
    cert = chamber_bfs(N, mats, depth_limit=0)
    assert cert.status == "frontier-open"
    with pytest.raises(NotClosed):
        bir_generators(cert)
    with pytest.raises(NotClosed):
        fundamental_domain(cert)


@pytest.fixture(scope="module")
def flagship_cert(flagship_fixtures):
    N, mats, _ = flagship_fixtures
    return chamber_bfs(N, mats)


def test_flagship_walk(flagship_cert) -> None:
    cert = flagship_cert
    assert cert.status == "closed"
    assert len(cert.orbit_reps) == 6 and [r.model for r in cert.orbit_reps] == list(range(6))
    assert len(cert.chambers) == 26
    assert verify_fan(cert)
    assert check_group_invariance(cert)


def test_flagship_generators(flagship_cert) -> None:
    gens = bir_generators(flagship_cert)
    assert len(gens) == 10
    for g in gens:
        info = classify_generator(g)
        assert abs(info["det"]) == 1 and info["order"] == 2
        assert word_pushforward(flagship_cert.pushforwards, g.word, 5) == g.matrix
        assert walk(5, flagship_cert.pushforwards, tuple(reversed(g.word))) == g.matrix


def test_generator_words_are_loops(flagship_cert, flagship) -> None:
    # every generator word is a loop of flops on X_0 that evaluates pointwise
    rng = np.random.default_rng(0)
    pt = sample_point(model(flagship, 0), GF(7), rng)
    for g in bir_generators(flagship_cert):
        w = compose_word(flagship, g.word)
        assert w.is_loop and w.word[0] == 0
        try:
            img = w(pt)
        except ExceptionalPoint:
            continue
        assert img.field == pt.field


def test_corrupted_matrix(flagship_fixtures) -> None:
    N, mats, _ = flagship_fixtures
    bad = {k: [list(r) for r in v.matrix] for k, v in mats.items()}
    bad[(1, 0)][2][0] += 1
    with pytest.raises(InconsistentFan):
        chamber_bfs(N, bad)
    missing = {k: v for k, v in mats.items() if k != (3, 0)}
    with pytest.raises(InconsistentFan):
        chamber_bfs(N, missing)


def test_group_ball_shear() -> None:
    elems, invs = group_ball([[[1, 1], [0, 1]]], 2, 3)
    assert len(elems) == 7
    for g, h in zip(elems, invs):
        assert (g.dot(h) == np.eye(2, dtype=object)).all()


def test_toy_shear_domain() -> None:
    cand = fundamental_domain(toy_shear_certificate(), R=6)
    assert cand.certified and cand.ball_size == 13
    assert cand.cone.generators == ((0, 1), (1, 1))
    assert "pairwise interior-disjoint within the whole ball" in cand.checks


def test_trivial_group_domain() -> None:
    cert = manual_certificate(3, [[(1, 0, 0), (0, 1, 0), (0, 0, 1)]], [])
    cand = fundamental_domain(cert, R=2)
    assert cand.certified and cand.ball_size == 1
    assert cand.cone.generators == ((0, 0, 1), (0, 1, 0), (1, 0, 0))


def test_stabilizer_obstruction() -> None:
    # the swap fixes the positive quadrant
    cert = manual_certificate(2, [[(1, 0), (0, 1)]], [[[0, 1], [1, 0]]])
    with pytest.raises(StabilizerObstruction):
        fundamental_domain(cert, R=2)


def test_flagship_domain(flagship_cert) -> None:
    cand = fundamental_domain(flagship_cert, R=2)
    assert cand.certified
    assert len(cand.cone.generators) == 10
    js = cand.to_json()
    assert js["beyond_ball_certified"] is False and js["stabilizer_assumption"] is True
