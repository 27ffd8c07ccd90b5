"""Dense matrices over an exact field and the linear algebra the flops need."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import FieldSpec, FieldElem


class NonSquare(ValueError):
    pass


class WrongRank(ValueError):
    def __init__(self, rank: int, expected: int | None = None):
        self.rank = rank
        self.expected = expected
        msg = f"matrix has rank {rank}"
        if expected is not None:
            msg += f", expected {expected}"
        super().__init__(msg)


@dataclass(frozen=True)
class DenseMatrix:
    field: FieldSpec
    rows: int
    cols: int
    entries: tuple  # row-major canonical values

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entries length must equal rows * cols")

    @classmethod
    def from_rows(cls, field: FieldSpec, rows: Sequence[Sequence], convert: bool = True):
        """Build from nested rows.  With ``convert`` the entries are integers or
        Fractions mapped into the field; otherwise they already are canonical
        values (codes for finite fields)."""
        rows = [list(r) for r in rows]
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged rows")
        flat = [x for r in rows for x in r]
        if convert:
            flat = [field.convert(x) for x in flat]
        else:
            flat = [x if field is not None and not field.is_finite else int(x) for x in flat]
        return cls(field, nrows, ncols, tuple(flat))

    @classmethod
    def from_array(cls, field: FieldSpec, arr: np.ndarray):
        arr = np.asarray(arr)
        vals = arr.ravel().tolist()
        if field.is_finite:
            vals = [int(v) for v in vals]
        return cls(field, arr.shape[0], arr.shape[1], tuple(vals))

    @classmethod
    def identity(cls, field: FieldSpec, n: int):
        return cls(field, n, n, tuple(field.one if i == j else field.zero
                                      for i in range(n) for j in range(n)))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def to_rows(self) -> list[list]:
        return [self.row(i) for i in range(self.rows)]

    def to_array(self) -> np.ndarray:
        return self.field.asarray(self.to_rows()) if self.rows else np.zeros((0, self.cols))

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def transpose(self) -> "DenseMatrix":
        return DenseMatrix(self.field, self.cols, self.rows,
                           tuple(self[i, j] for j in range(self.cols) for i in range(self.rows)))

    T = property(transpose)

    def __matmul__(self, other: "DenseMatrix") -> "DenseMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        F = self.field
        out = []
        for i in range(self.rows):
            for j in range(other.cols):
                acc = F.zero
                for k in range(self.cols):
                    acc = F.add(acc, F.mul(self[i, k], other[k, j]))
                out.append(acc)
        return DenseMatrix(F, self.rows, other.cols, tuple(out))

    def apply(self, vec: Sequence) -> list:
        F = self.field
        out = []
        for i in range(self.rows):
            acc = F.zero
            for k in range(self.cols):
                acc = F.add(acc, F.mul(self[i, k], vec[k]))
            out.append(acc)
        return out

    def scale(self, c) -> "DenseMatrix":
        return DenseMatrix(self.field, self.rows, self.cols,
                           tuple(self.field.mul(c, x) for x in self.entries))

    def is_zero(self) -> bool:
        return all(x == self.field.zero for x in self.entries)


def _row_echelon(m: DenseMatrix) -> tuple[list[list], list[int], int]:
    """Gaussian elimination.  Returns the reduced rows, pivot columns and the
    sign of the row permutation."""
    F = m.field
    a = m.to_rows()
    pivots: list[int] = []
    sign = 1
    r = 0
    for c in range(m.cols):
        piv = next((i for i in range(r, m.rows) if a[i][c] != F.zero), None)
        if piv is None:
            continue
        if piv != r:
            a[r], a[piv] = a[piv], a[r]
            sign = -sign
        inv = F.inv(a[r][c])
        a[r] = [F.mul(inv, x) for x in a[r]]
        for i in range(m.rows):
            if i != r and a[i][c] != F.zero:
                f = a[i][c]
                a[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == m.rows:
            break
    return a, pivots, sign


def matrix_rank(m: DenseMatrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(_row_echelon(m)[1])


def matrix_det(m: DenseMatrix) -> FieldElem:
    if not m.is_square:
        raise NonSquare(f"{m.rows}x{m.cols} matrix has no determinant")
    F = m.field
    n = m.rows
    if n == 0:
        return FieldElem(F, F.one)
    a = m.to_rows()
    det = F.one
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != F.zero), None)
        if piv is None:
            return FieldElem(F, F.zero)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = F.neg(det)
        det = F.mul(det, a[c][c])
        inv = F.inv(a[c][c])
        for i in range(c + 1, n):
            if a[i][c] != F.zero:
                f = F.mul(a[i][c], inv)
                a[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(a[i], a[c])]
    return FieldElem(F, det)


def nullspace(m: DenseMatrix) -> list[list]:
    """Basis of the right kernel, one vector per free column."""
    F = m.field
    a, pivots, _ = _row_echelon(m)
    free = [c for c in range(m.cols) if c not in pivots]
    basis = []
    for f in free:
        v = [F.zero] * m.cols
        v[f] = F.one
        for r, pc in enumerate(pivots):
            v[pc] = F.neg(a[r][f])
        basis.append(v)
    return basis


def normalize_projective(vec: Sequence, field: FieldSpec) -> tuple:
    """Scale so that the first nonzero coordinate is 1."""
    for x in vec:
        if x != field.zero:
            inv = field.inv(x)
            return tuple(field.mul(inv, y) for y in vec)
    raise ValueError("the zero vector is not a projective point")


def corank1_kernel(m: DenseMatrix) -> tuple:
    """The unique projective kernel point of a square matrix of corank one."""
    if not m.is_square:
        raise NonSquare("corank-1 kernel needs a square matrix")
    basis = nullspace(m)
    if len(basis) != 1:
        raise WrongRank(m.rows - len(basis), m.rows - 1)
    return normalize_projective(basis[0], m.field)


def _minor(rows: list[list], i: int, j: int) -> list[list]:
    return [r[:j] + r[j + 1:] for k, r in enumerate(rows) if k != i]


def adjugate(m: DenseMatrix) -> DenseMatrix:
    if not m.is_square:
        raise NonSquare("adjugate needs a square matrix")
    F = m.field
    n = m.rows
    if n == 1:
        return DenseMatrix(F, 1, 1, (F.one,))
    rows = m.to_rows()
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = DenseMatrix.from_rows(F, _minor(rows, i, j), convert=False)
            c = matrix_det(sub).value
            out[j][i] = c if (i + j) % 2 == 0 else F.neg(c)
    return DenseMatrix.from_rows(F, out, convert=False)


# -- batched kernels on numpy arrays --------------------------------------------

def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def batch_det(field: FieldSpec, a: np.ndarray) -> np.ndarray:
    """Determinants of a stack ``a[..., k, k]`` by Leibniz expansion (k <= 5)."""
    k = a.shape[-1]
    if k == 0:
        return np.full(a.shape[:-2], field.one, dtype=object if not field.is_finite else np.int64)
    total = None
    for perm in itertools.permutations(range(k)):
        term = a[..., 0, perm[0]]
        for r in range(1, k):
            term = field.mul(term, a[..., r, perm[r]])
        if _perm_sign(perm) < 0:
            term = field.neg(term)
        total = term if total is None else field.add(total, term)
    return total


def batch_minors_vanish(field: FieldSpec, a: np.ndarray, size: int) -> np.ndarray:
    """Boolean mask: all ``size x size`` minors of ``a[..., r, c]`` vanish,
    i.e. the rank is below ``size``."""
    r, c = a.shape[-2:]
    if size == 0:
        return np.zeros(a.shape[:-2], dtype=bool)
    mask = np.ones(a.shape[:-2], dtype=bool)
    for rows in itertools.combinations(range(r), size):
        for cols in itertools.combinations(range(c), size):
            sub = a[..., list(rows), :][..., list(cols)]
            d = batch_det(field, sub)
            mask &= (d == field.zero)
    return mask
