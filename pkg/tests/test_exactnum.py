from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from detflops.exactnum import (GF, QQ, DenseMatrix, FieldError, MultiPoly, NotHomogeneous, SizeBudgetExceeded,
                               WrongRank, adjugate, batch_det, batch_minors_vanish, conway_free_modulus,
                               corank1_kernel, is_irreducible, is_prime, matrix_det, matrix_rank, nullspace,
                               parse_field, poly_det)

FIELDS = [QQ, GF(2), GF(3), GF(5), GF(7), GF(2, 2), GF(3, 2), GF(5, 2), GF(3, 3), GF(2, 4)]


def _mat(F, rows):
    return DenseMatrix.from_rows(F, rows)


def _sym_mod(rows, p):
    return sympy.Matrix(rows).applyfunc(lambda x: x % p)


# -- fields ----------------------------------------------------------------------

def test_is_prime_matches_sympy() -> None:
    for m in range(-3, 2000):
        assert is_prime(m) == (m > 1 and sympy.isprime(m))
    for m in (2**31 - 1, 4294967291, 4294967293, 3215031751):
        assert is_prime(m) == sympy.isprime(m)


def test_gf_rejects_composite() -> None:
    with pytest.raises(FieldError):
        GF(9)
    with pytest.raises(FieldError):
        GF(4, 1)


@pytest.mark.parametrize("p,k", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (5, 2), (7, 2), (3, 4)])
def test_modulus_is_first_irreducible(p: int, k: int) -> None:
    x = sympy.symbols("x")
    mod = conway_free_modulus(p, k)
    assert sympy.Poly(list(reversed(mod)), x, modulus=p).is_irreducible
    # nothing with a smaller code is irreducible
    code = sum(c * p**e for e, c in enumerate(mod[:-1]))
    for smaller in range(code):
        digits = [(smaller // p**e) % p for e in range(k)] + [1]
        assert not sympy.Poly(list(reversed(digits)), x, modulus=p).is_irreducible
        assert not is_irreducible(digits, p)


@pytest.mark.parametrize("F", [f for f in FIELDS if f.is_finite])
def test_multiplicative_group_order(F) -> None:
    q = F.order
    for a in F.elements():
        if a == F.zero:
            continue
        assert F.pow(a, q - 1) == F.one
        assert F.mul(a, F.inv(a)) == F.one
    assert len(set(F.elements())) == q


def test_extension_multiplication_matches_polynomial_arithmetic() -> None:
    x = sympy.symbols("x")
    F = GF(3, 2)
    mod = sympy.Poly(list(reversed(F.modulus)), x, modulus=3)
    for a, b in itertools.product(F.elements(), repeat=2):
        pa = sympy.Poly(list(reversed(F.coeffs(a))) or [0], x, modulus=3)
        pb = sympy.Poly(list(reversed(F.coeffs(b))) or [0], x, modulus=3)
        prod = (pa * pb).rem(mod)
        coeffs = [int(c) % 3 for c in reversed(prod.all_coeffs())]
        coeffs += [0] * (2 - len(coeffs))
        assert tuple(coeffs) == tuple(F.coeffs(F.mul(a, b)))


@st.composite
def field_triples(draw):
    F = draw(st.sampled_from(FIELDS))
    if F.is_finite:
        vals = [draw(st.integers(0, F.order - 1)) for _ in range(3)]
    else:
        vals = [Fraction(draw(st.integers(-50, 50)), draw(st.integers(1, 9))) for _ in range(3)]
    return F, vals


@given(field_triples())
def test_field_axioms(data) -> None:
    F, (a, b, c) = data
    add, mul = F.add, F.mul
    assert add(a, add(b, c)) == add(add(a, b), c)
    assert mul(a, mul(b, c)) == mul(mul(a, b), c)
    assert mul(a, add(b, c)) == add(mul(a, b), mul(a, c))
    assert add(a, b) == add(b, a) and mul(a, b) == mul(b, a)
    assert add(a, F.neg(a)) == F.zero
    assert mul(a, F.one) == a
    if a != F.zero:
        assert mul(a, F.inv(a)) == F.one


def test_parse_field() -> None:
    assert parse_field("QQ") == QQ
    assert parse_field("7") == GF(7)
    assert parse_field("9") == GF(3, 2)
    assert parse_field("3^2") == GF(3, 2)
    assert parse_field("GF5") == GF(5)


# -- matrices ------------------------------------------------------------------------

def test_rank_examples() -> None:
    assert matrix_rank(_mat(GF(3), [[0, 0], [0, 0]])) == 0
    assert matrix_rank(DenseMatrix.identity(QQ, 3)) == 3
    assert matrix_rank(_mat(QQ, [[1, 2], [2, 4]])) == 1


def test_det_examples() -> None:
    assert matrix_det(_mat(QQ, [[0, 0], [0, 1]])).value == 0
    for n in range(1, 5):
        assert matrix_det(DenseMatrix.identity(GF(5), n)).value == 1
    assert matrix_det(_mat(QQ, [[1, 2], [3, 4]])).value == -2


def test_kernel_examples() -> None:
    assert corank1_kernel(_mat(QQ, [[0, 0], [0, 1]])) == (1, 0)
    assert corank1_kernel(_mat(QQ, [[1, 2], [2, 4]])) == (1, Fraction(-1, 2))
    with pytest.raises(WrongRank) as err:
        corank1_kernel(_mat(QQ, [[0, 0], [0, 0]]))
    assert err.value.rank == 0


def test_adjugate_examples() -> None:
    assert adjugate(DenseMatrix.identity(QQ, 3)) == DenseMatrix.identity(QQ, 3)
    assert adjugate(_mat(QQ, [[1, 2], [3, 4]])).to_rows() == [[4, -2], [-3, 1]]


small_int_matrices = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=n, max_size=n))


@given(small_int_matrices, st.sampled_from([0, 3, 5, 7]))
def test_rank_det_adjugate_against_sympy(rows, p) -> None:
    n = len(rows)
    F = QQ if p == 0 else GF(p)
    M = _mat(F, rows)
    S = sympy.Matrix(rows)
    if p == 0:
        assert matrix_rank(M) == S.rank()
        assert matrix_det(M).value == S.det()
        assert adjugate(M).to_rows() == S.adjugate().tolist()
    else:
        assert matrix_det(M).value == S.det() % p
        assert adjugate(M).to_rows() == [[x % p for x in r] for r in S.adjugate().tolist()]
        # rank mod p: largest nonvanishing minor
        r = max((k for k in range(n + 1) for rs in itertools.combinations(range(n), k)
                 for cs in itertools.combinations(range(n), k) if S.extract(list(rs), list(cs)).det() % p),
                default=0)
        assert matrix_rank(M) == r
    # adj identity
    prod = M @ adjugate(M)
    d = matrix_det(M).value
    assert prod.to_rows() == [[d if i == j else F.zero for j in range(n)] for i in range(n)]


@given(st.integers(2, 4), st.integers(0, 10**6), st.sampled_from(FIELDS))
def test_corank1_kernel_and_adjugate_rank(n, seed, F) -> None:
    rng = np.random.default_rng(seed)
    # product of an (n x n-1) and (n-1 x n) matrix: rank at most n-1
    A = [[F.random(rng) if F.is_finite else int(rng.integers(-5, 6)) for _ in range(n - 1)] for _ in range(n)]
    B = [[F.random(rng) if F.is_finite else int(rng.integers(-5, 6)) for _ in range(n)] for _ in range(n - 1)]
    conv = not F.is_finite
    M = DenseMatrix.from_rows(F, A, convert=conv) @ DenseMatrix.from_rows(F, B, convert=conv)
    if matrix_rank(M) != n - 1:
        with pytest.raises(WrongRank):
            corank1_kernel(M)
        return
    v = corank1_kernel(M)
    assert all(x == F.zero for x in M.apply(v))
    first = next(x for x in v if x != F.zero)
    assert first == F.one
    adj = adjugate(M)
    assert matrix_rank(adj) == 1
    # every nonzero column of adj is proportional to the kernel
    for c in range(n):
        col = [adj[r, c] for r in range(n)]
        if any(x != F.zero for x in col):
            assert matrix_rank(DenseMatrix.from_rows(F, [col, list(v)], convert=False)) == 1


def test_nullspace_dimension() -> None:
    M = _mat(QQ, [[1, 2, 3], [2, 4, 6]])
    assert len(nullspace(M)) == 2


@pytest.mark.parametrize("F", [GF(3), GF(7), GF(3, 2)])
def test_batch_kernels_agree_with_scalar(F) -> None:
    rng = np.random.default_rng(5)
    a = F.random(rng, (200, 3, 3))
    a[:50, 2] = a[:50, 0]            # force some singular matrices
    dets = batch_det(F, a)
    low = batch_minors_vanish(F, a, 2)
    for k in range(len(a)):
        M = DenseMatrix.from_array(F, a[k])
        assert dets[k] == matrix_det(M).value
        assert low[k] == (matrix_rank(M) < 2)


# -- polynomials ----------------------------------------------------------------------

def test_poly_det_examples() -> None:
    facs = ((1, 1), (2, 1))
    x = MultiPoly.variable(facs, 1, 0)
    y = MultiPoly.variable(facs, 2, 0)
    zero = MultiPoly.zero(facs, (1, 0))
    d = poly_det([[x, MultiPoly.zero(facs, (1, 0))], [MultiPoly.zero(facs, (0, 1)), y]])
    assert d == x * y
    c = [[MultiPoly.constant(facs, v) for v in row] for row in [[1, 2], [3, 4]]]
    assert poly_det(c) == MultiPoly.constant(facs, -2)
    assert zero.is_zero()


def test_homogeneity_enforced() -> None:
    facs = ((0, 2),)
    with pytest.raises(NotHomogeneous):
        MultiPoly(facs, {(1, 0): 1, (2, 0): 1})


def test_term_cap() -> None:
    facs = ((0, 3),)
    v = [MultiPoly.variable(facs, 0, k) for k in range(3)]
    entries = [[v[(r + c) % 3] + v[(r * c) % 3] for c in range(6)] for r in range(6)]
    with pytest.raises(SizeBudgetExceeded):
        poly_det(entries, term_cap=10)


@given(st.integers(0, 10**6), st.sampled_from([GF(3), GF(5)]))
def test_poly_det_matches_matrix_det_on_full_grid(seed, F) -> None:
    # 2x2 matrix of linear forms in one P^1 factor: degree 2 per variable < field size,
    # so agreement on the full grid is a polynomial identity
    rng = np.random.default_rng(seed)
    facs = ((0, 2),)
    ents = [[MultiPoly(facs, {(1, 0): int(rng.integers(-4, 5)), (0, 1): int(rng.integers(-4, 5))})
             for _ in range(2)] for _ in range(2)]
    D = poly_det(ents)
    for pt in itertools.product(range(F.order), repeat=2):
        M = DenseMatrix.from_rows(F, [[e.evaluate(F, {0: pt}) for e in row] for row in ents], convert=False)
        assert D.evaluate(F, {0: pt}) == matrix_det(M).value


def test_poly_det_against_sympy_three_by_three() -> None:
    rng = np.random.default_rng(11)
    facs = ((0, 2), (1, 2))
    syms = sympy.symbols("a0 a1 b0 b1")
    ents, sym_ents = [], []
    for _ in range(3):
        row, srow = [], []
        for _ in range(3):
            c = [int(x) for x in rng.integers(-3, 4, size=4)]
            terms = {(1, 0, 1, 0): c[0], (1, 0, 0, 1): c[1], (0, 1, 1, 0): c[2], (0, 1, 0, 1): c[3]}
            row.append(MultiPoly(facs, {e: v for e, v in terms.items() if v}, (1, 1)))
            srow.append(c[0] * syms[0] * syms[2] + c[1] * syms[0] * syms[3] + c[2] * syms[1] * syms[2]
                        + c[3] * syms[1] * syms[3])
        ents.append(row)
        sym_ents.append(srow)
    D = poly_det(ents)
    ref = sympy.Poly(sympy.Matrix(sym_ents).det(), *syms)
    got = {e: c for e, c in D.terms.items() if c}
    want = {tuple(m): int(c) for m, c in zip(ref.monoms(), ref.coeffs())}
    assert got == want
