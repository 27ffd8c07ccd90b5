from __future__ import annotations

import itertools

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from detflops.exactnum import GF
from detflops.tensorcore import Instance, diagonal_instance, model, random_instance, zero_instance
from detflops.varprobe import (BudgetExceeded, DegenerateModelWarning, MultiProjPoint, NotOnVariety, SampleFailure,
                               ambient_point_count, enumerate_points, equations_vanish, jacobian_rank,
                               projective_points, rank_locus_scan, sample_point, smoothness_scan)


def sympy_equations(inst: Instance, ell: int):
    """Model equations rebuilt from the raw tensor with sympy."""
    amb = inst.ambient(ell)
    xs = {s: sympy.symbols(f"x{s}_0:{inst.n + 1}") for s in amb}
    eqs = []
    for m in range(inst.n + 1):
        f = 0
        for idx in itertools.product(range(inst.n + 1), repeat=len(amb)):
            full = [0] * (inst.N + 1)
            full[ell] = m
            mono = 1
            for s, k in zip(amb, idx):
                full[s] = k
                mono *= xs[s][k]
            f += int(inst.b[tuple(full)]) * mono
        eqs.append(f)
    return eqs, [v for s in amb for v in xs[s]]


def brute_force_points(inst: Instance, ell: int, p: int) -> set:
    amb = inst.ambient(ell)
    pts = [tuple(int(x) for x in v) for v in projective_points(inst.n, GF(p))]
    out = set()
    b = inst.b.astype(object)
    for combo in itertools.product(pts, repeat=len(amb)):
        ok = True
        for m in range(inst.n + 1):
            t = np.take(b, m, axis=ell)
            for v in combo:
                t = np.tensordot(np.array(v, dtype=object), t, axes=([0], [0]))
            if int(t) % p:
                ok = False
                break
        if ok:
            out.add(tuple(zip(amb, combo)))
    return out


def test_ambient_count() -> None:
    assert ambient_point_count(1, 2, 3) == 16
    spec = model(diagonal_instance(1, 2), 0)
    assert enumerate_points(spec, GF(3)).scanned == 16


def test_diagonal_points() -> None:
    spec = model(diagonal_instance(1, 2), 0)
    pts = sorted(p.coords for p in enumerate_points(spec, GF(3)))
    assert pts == [((1, (0, 1)), (2, (1, 0))), ((1, (1, 0)), (2, (0, 1)))]


def test_zero_model_returns_everything() -> None:
    spec = model(zero_instance(1, 2), 0)
    with pytest.warns(DegenerateModelWarning):
        stream = enumerate_points(spec, GF(3))
    assert stream.degenerate
    assert len(list(stream)) == 16


def test_budget() -> None:
    spec = model(random_instance(1, 5, 42, 9), 0)
    with pytest.raises(BudgetExceeded) as err:
        enumerate_points(spec, GF(3), budget=100)
    assert err.value.required == 4**5


@pytest.mark.parametrize("seed,N,ell,p", [(1, 3, 0, 3), (2, 3, 2, 5), (7, 4, 1, 3), (3, 2, 1, 7)])
def test_enumeration_matches_brute_force(seed, N, ell, p) -> None:
    inst = random_instance(1, N, seed, 9)
    got = {p_.coords for p_ in enumerate_points(model(inst, ell), GF(p))}
    assert got == brute_force_points(inst, ell, p)


def test_enumeration_is_deterministic() -> None:
    spec = model(random_instance(1, 3, 4, 9), 1)
    a = [p.coords for p in enumerate_points(spec, GF(5))]
    b = [p.coords for p in enumerate_points(spec, GF(5))]
    assert a == b and len(a) > 0


def test_sample_on_diagonal() -> None:
    spec = model(diagonal_instance(1, 2), 0)
    for seed in range(10):
        pt = sample_point(spec, GF(3), np.random.default_rng(seed))
        assert pt.coords in {((1, (1, 0)), (2, (0, 1))), ((1, (0, 1)), (2, (1, 0)))}


def test_sample_flagship(flagship) -> None:
    rng = np.random.default_rng(0)
    for ell in flagship.slots:
        pt = sample_point(model(flagship, ell), GF(7), rng)
        assert equations_vanish(model(flagship, ell), pt)
        eqs, gens = sympy_equations(flagship, ell)
        sub = {v: c for v, c in zip(gens, [x for s in flagship.ambient(ell) for x in pt[s]])}
        if pt.field.k == 1:
            assert all(int(e.subs(sub)) % 7 == 0 for e in eqs)


def test_sample_zero_tensor() -> None:
    with pytest.raises(SampleFailure):
        sample_point(model(zero_instance(1, 3), 0), GF(5), np.random.default_rng(0))


def test_jacobian_diagonal() -> None:
    spec = model(diagonal_instance(1, 2), 0)
    pt = MultiProjPoint(GF(3), ((1, (1, 0)), (2, (0, 1))))
    assert jacobian_rank(spec, pt) == 2
    with pytest.raises(NotOnVariety):
        jacobian_rank(spec, MultiProjPoint(GF(3), ((1, (1, 0)), (2, (1, 0)))))


@given(st.integers(0, 200), st.integers(0, 3))
def test_jacobian_chart_independent(seed, ell) -> None:
    inst = random_instance(1, 3, seed, 9)
    spec = model(inst, ell)
    try:
        pt = sample_point(spec, GF(5), np.random.default_rng(seed))
    except SampleFailure:
        return
    ranks = set()
    for chart in itertools.product(range(2), repeat=3):
        ch = dict(zip(spec.ambient_factors, chart))
        if any(pt[s][c] == 0 for s, c in ch.items()):
            continue
        ranks.add(jacobian_rank(spec, pt, ch))
    assert len(ranks) == 1


def test_duplicated_slice_is_singular() -> None:
    inst = random_instance(1, 3, 2, 9)
    b = inst.b.copy()
    b[1] = b[0]
    bad = inst.with_tensor(b)
    rep = smoothness_scan(bad, 0, [GF(3)])
    assert rep.verdict == "singular-witness"
    # independent check of the witness: full homogeneous Jacobian from sympy, mod p
    eqs, gens = sympy_equations(bad, 0)
    J = sympy.Matrix(eqs).jacobian(gens)
    w = rep.witnesses[0]
    sub = dict(zip(gens, [x for s in bad.ambient(0) for x in w[s]]))
    assert all(int(e.subs(sub)) % 3 == 0 for e in eqs)
    Jw = J.subs(sub).applyfunc(lambda x: int(x) % 3)
    assert all(Jw.extract([0, 1], list(c)).det() % 3 == 0 for c in itertools.combinations(range(len(gens)), 2))


def test_flagship_singular_witnesses_are_genuine(flagship) -> None:
    # the flagship models have singular points over F_3; confirm each witness independently
    rep = smoothness_scan(flagship, 0, [GF(3)])
    assert rep.verdict == "singular-witness"
    eqs, gens = sympy_equations(flagship, 0)
    J = sympy.Matrix(eqs).jacobian(gens)
    for w in rep.witnesses:
        sub = dict(zip(gens, [x for s in flagship.ambient(0) for x in w[s]]))
        assert all(int(e.subs(sub)) % 3 == 0 for e in eqs)
        Jw = J.subs(sub).applyfunc(lambda x: int(x) % 3)
        assert all(Jw.extract([0, 1], list(c)).det() % 3 == 0 for c in itertools.combinations(range(len(gens)), 2))


def test_flagship_smooth_over_f5(flagship) -> None:
    for ell in flagship.slots:
        assert smoothness_scan(flagship, ell, [GF(5)]).verdict == "no-singular-point-found"


def test_zero_tensor_scan() -> None:
    assert smoothness_scan(zero_instance(1, 3), 0, [GF(3)]).verdict == "degenerate"


def test_rank_locus_diagonal_empty() -> None:
    inst = diagonal_instance(1, 2)
    rep = rank_locus_scan(inst, (0, 1), exhaustive=True)
    assert rep.verdict == "none-found" and rep.tested > 0


def test_rank_locus_flagship(flagship) -> None:
    for j, i in itertools.combinations(flagship.slots, 2):
        rep = rank_locus_scan(flagship, (j, i))
        assert rep.verdict == "exceptional-locus-nonempty"
        w = rep.witnesses[0]
        from detflops.tensorcore import slice_matrix
        S = slice_matrix(flagship, j, i, w.as_dict(), w.field)
        assert S.is_zero()


def test_report_json(flagship) -> None:
    rep = smoothness_scan(flagship, 2, [GF(3)]).to_json()
    assert set(rep) >= {"model", "fields", "tested", "witnesses", "verdict"}
    assert rep["fields"] == ["3"]
