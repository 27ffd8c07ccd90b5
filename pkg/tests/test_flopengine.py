from __future__ import annotations

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from detflops.exactnum import GF
from detflops.flopengine import (ExceptionalPoint, apply_flop, check_diagram, compose_word, flop, flop_matrix,
                                 project_to_base)
from detflops.tensorcore import diagonal_instance, model, random_instance, slice_matrix
from detflops.varprobe import MultiProjPoint, rank_locus_scan, NotOnVariety, enumerate_points, equations_vanish, sample_point

P1 = ((1, (1, 0)), (2, (0, 1)))
P2 = ((1, (0, 1)), (2, (1, 0)))


def test_diagonal_flop() -> None:
    inst = diagonal_instance(1, 2)
    img = apply_flop(flop(inst, 0, 1), MultiProjPoint(GF(3), P1))
    assert img.coords == ((0, (1, 0)), (2, (0, 1)))
    assert equations_vanish(model(inst, 1), img)


def test_diagonal_round_trip() -> None:
    inst = diagonal_instance(1, 2)
    for coords in (P1, P2):
        pt = MultiProjPoint(GF(3), coords)
        back = apply_flop(flop(inst, 1, 0), apply_flop(flop(inst, 0, 1), pt))
        assert back == pt


def test_off_model_rejected() -> None:
    inst = diagonal_instance(1, 2)
    with pytest.raises(NotOnVariety):
        apply_flop(flop(inst, 0, 1), MultiProjPoint(GF(3), ((1, (1, 0)), (2, (1, 0)))))


def test_same_model_rejected() -> None:
    with pytest.raises(ValueError):
        flop(diagonal_instance(1, 2), 1, 1)


def test_exceptional_point(flagship) -> None:
    # over a rank-locus witness the whole fibre line lies on the model
    rep = rank_locus_scan(flagship, (0, 1))
    w = rep.witnesses[0]
    coords = dict(w.as_dict())
    coords[1] = (1, 0)
    pt = MultiProjPoint.from_vectors(w.field, coords)
    assert equations_vanish(model(flagship, 0), pt)
    with pytest.raises(ExceptionalPoint) as err:
        apply_flop(flop(flagship, 0, 1), pt)
    assert err.value.rank == 0
    with pytest.raises(ExceptionalPoint) as err:
        compose_word(flagship, [0, 1, 2])(pt)
    assert err.value.step == 0


def test_base_projection(flagship) -> None:
    fm = flop(flagship, 0, 3)
    pt = sample_point(model(flagship, 0), GF(7), np.random.default_rng(1))
    base = project_to_base(fm, pt)
    assert tuple(s for s, _ in base.coords) == fm.shared


def test_via_transpose_identical(flagship) -> None:
    rng = np.random.default_rng(3)
    for j, i in [(0, 1), (2, 5), (4, 3)]:
        fm = flop(flagship, j, i)
        for _ in range(10):
            pt = sample_point(model(flagship, j), GF(7), rng)
            try:
                a = apply_flop(fm, pt, via="direct")
            except ExceptionalPoint:
                continue
            assert a == apply_flop(fm, pt, via="transpose")


def test_kernel_against_sympy(flagship) -> None:
    rng = np.random.default_rng(11)
    fm = flop(flagship, 1, 4)
    pt = sample_point(model(flagship, 1), GF(7), rng)
    while pt.field.k != 1:
        pt = sample_point(model(flagship, 1), GF(7), rng)
    img = apply_flop(fm, pt)
    S = slice_matrix(flagship, 4, 1, pt.restrict(fm.shared).as_dict(), GF(7))
    rows = [[int(S[r, c]) for c in range(2)] for r in range(2)]
    ns = sympy.Matrix(rows).nullspace(iszerofunc=lambda x: x % 7 == 0)
    v = [int(x) for x in img[1]]
    assert all((rows[r][0] * v[0] + rows[r][1] * v[1]) % 7 == 0 for r in range(2))
    assert ns


def test_flagship_diagrams_commute(flagship) -> None:
    for j in flagship.slots:
        for i in flagship.slots:
            if i != j:
                rep = check_diagram(flop(flagship, j, i), budget=20)
                assert rep.ok and rep.tested == 20


def test_diagram_report_json(flagship) -> None:
    rep = check_diagram(flop(flagship, 0, 1), budget=5).to_json()
    assert rep["verdict"] == "commutes" and rep["tested"] == 5
    assert rep["fields"][0] == "7"


def test_mutation_breaks_diagram(flagship) -> None:
    pts = [sample_point(model(flagship, 0), GF(7), np.random.default_rng(s)) for s in range(30)]
    b = flagship.b.copy()
    b[(0,) * 6] += 1
    bad = flagship.with_tensor(b)
    rep = check_diagram(flop(bad, 0, 1), points=pts)
    assert not rep.ok
    assert {r for _, r in rep.failures} <= {"source-off-model", "base-not-on-determinantal-locus",
                                            "target-equation-violation", "base-mismatch"}


def test_words() -> None:
    inst = random_instance(1, 3, 4, 9)
    with pytest.raises(ValueError):
        compose_word(inst, [])
    with pytest.raises(ValueError):
        compose_word(inst, [0, 0])
    rng = np.random.default_rng(2)
    pt = sample_point(model(inst, 0), GF(7), rng)
    assert compose_word(inst, [0])(pt) == pt
    for i in (1, 2, 3):
        assert compose_word(inst, [0, i, 0])(pt) == pt


def test_triangle_moves_points(flagship) -> None:
    rng = np.random.default_rng(5)
    moved = 0
    w = compose_word(flagship, [0, 1, 2, 0])
    assert w.is_loop
    for _ in range(10):
        pt = sample_point(model(flagship, 0), GF(7), rng)
        try:
            img = w(pt)
        except ExceptionalPoint:
            continue
        assert equations_vanish(model(flagship, 0), img)
        moved += img != pt
    assert moved > 0


@given(st.integers(0, 10**6))
def test_round_trip_property(seed) -> None:
    inst = random_instance(1, 3, seed % 97, 9)
    rng = np.random.default_rng(seed)
    try:
        pt = sample_point(model(inst, 2), GF(5), rng)
        img = apply_flop(flop(inst, 2, 0), pt)
    except Exception:
        return
    assert apply_flop(flop(inst, 0, 2), img) == pt
