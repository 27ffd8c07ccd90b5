"""The coefficient tensor and everything read directly off it.

An instance is an integer array ``b[m_0, ..., m_N]`` with every index in
``0..n``.  Deleting slot ``l`` gives the model ``X_l``: a complete intersection
of ``n+1`` multilinear forms in the remaining ``N`` factors of ``(P^n)^(N+1)``.
Contracting all slots except ``j`` and ``i`` gives the square slice matrix whose
determinant cuts out the common base of the flop between ``X_j`` and ``X_i``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .exactnum import QQ, DenseMatrix, FieldSpec, MultiPoly, poly_det
from .exactnum.poly import DEFAULT_TERM_CAP


class SlotMismatch(ValueError):
    pass


class Degenerate(ValueError):
    """An instance with an identically vanishing model equation."""


class InstanceFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CoefficientTensor:
    n: int
    N: int
    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.int64)
        shape = (self.n + 1,) * (self.N + 1)
        if arr.shape != shape:
            if arr.size != (self.n + 1) ** (self.N + 1):
                raise InstanceFormatError(f"tensor needs {(self.n + 1) ** (self.N + 1)} entries, got {arr.size}")
            arr = arr.reshape(shape)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    def __eq__(self, other):
        return (isinstance(other, CoefficientTensor) and self.n == other.n and self.N == other.N
                and np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash((self.n, self.N, self.entries.tobytes()))

    def flat(self) -> list[int]:
        return [int(v) for v in self.entries.ravel()]

    def with_entry(self, index: Sequence[int], value: int) -> "CoefficientTensor":
        arr = self.entries.copy()
        arr[tuple(index)] = value
        return CoefficientTensor(self.n, self.N, arr)


@dataclass(frozen=True, eq=False)
class Instance:
    n: int
    N: int
    tensor: CoefficientTensor
    seed: int = 0
    bound: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if (self.tensor.n, self.tensor.N) != (self.n, self.N):
            raise ValueError("tensor shape disagrees with (n, N)")
        if self.bound and np.abs(self.tensor.entries).max(initial=0) > self.bound:
            raise ValueError("tensor entry outside the coefficient bound")

    def __eq__(self, other):
        return (isinstance(other, Instance) and (self.n, self.N, self.seed, self.bound)
                == (other.n, other.N, other.seed, other.bound) and self.tensor == other.tensor)

    def __hash__(self):
        return hash((self.n, self.N, self.seed, self.bound, self.tensor))

    @property
    def dim(self) -> int:
        """Dimension of every model: ``n(N-1) - 1``."""
        return self.n * (self.N - 1) - 1

    @property
    def slots(self) -> tuple[int, ...]:
        return tuple(range(self.N + 1))

    @property
    def model_count(self) -> int:
        return self.N + 1

    @property
    def b(self) -> np.ndarray:
        return self.tensor.entries

    def ambient(self, ell: int) -> tuple[int, ...]:
        self._check_slot(ell)
        return tuple(s for s in self.slots if s != ell)

    def shared(self, j: int, i: int) -> tuple[int, ...]:
        return tuple(s for s in self.slots if s not in (j, i))

    def _check_slot(self, s: int):
        if not 0 <= s <= self.N:
            raise SlotMismatch(f"slot {s} outside 0..{self.N}")

    def with_tensor(self, entries) -> "Instance":
        return Instance(self.n, self.N, CoefficientTensor(self.n, self.N, entries), self.seed, 0)

    # file format ----------------------------------------------------------------
    def to_json(self) -> dict:
        return {"n": self.n, "N": self.N, "seed": self.seed, "bound": self.bound,
                "tensor": self.tensor.flat()}

    @classmethod
    def from_json(cls, data: Mapping) -> "Instance":
        keys = {"n", "N", "seed", "bound", "tensor"}
        if set(data) != keys:
            raise InstanceFormatError(f"instance keys must be exactly {sorted(keys)}")
        n, N = data["n"], data["N"]
        for name in ("n", "N", "seed", "bound"):
            if not isinstance(data[name], int) or isinstance(data[name], bool):
                raise InstanceFormatError(f"{name} must be an integer")
        flat = data["tensor"]
        if not isinstance(flat, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in flat):
            raise InstanceFormatError("tensor must be a flat list of integers")
        if n < 1 or N < 2:
            raise InstanceFormatError("need n >= 1 and N >= 2")
        if len(flat) != (n + 1) ** (N + 1):
            raise InstanceFormatError(f"tensor length {len(flat)} != {(n + 1) ** (N + 1)}")
        try:
            return cls(n, N, CoefficientTensor(n, N, flat), data["seed"], data["bound"])
        except ValueError as exc:
            raise InstanceFormatError(str(exc)) from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Instance":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"not JSON: {exc}") from exc
        return cls.from_json(data)


# -- constructors -------------------------------------------------------------------

def random_instance(n: int, N: int, seed: int, bound: int = 9) -> Instance:
    """Seeded instance with entries uniform in ``[-bound, bound]``.

    The draw is ``Generator(PCG64(seed)).integers(-bound, bound + 1, size=(n+1)**(N+1))``
    (int64), read row-major as ``b[m_0, ..., m_N]``.
    """
    if n < 1 or N < 2:
        raise ValueError("need n >= 1 and N >= 2")
    if bound < 1:
        raise ValueError("bound must be positive")
    if seed < 0:
        raise ValueError("seed must be a non-negative 64-bit integer")
    rng = np.random.Generator(np.random.PCG64(seed))
    flat = rng.integers(-bound, bound + 1, size=(n + 1) ** (N + 1), dtype=np.int64)
    return Instance(n, N, CoefficientTensor(n, N, flat), seed, bound)


def diagonal_instance(n: int, N: int) -> Instance:
    """``b = 1`` when all indices agree, else 0."""
    arr = np.zeros((n + 1,) * (N + 1), dtype=np.int64)
    for m in range(n + 1):
        arr[(m,) * (N + 1)] = 1
    return Instance(n, N, CoefficientTensor(n, N, arr), 0, 1)


def zero_instance(n: int, N: int) -> Instance:
    return Instance(n, N, CoefficientTensor(n, N, np.zeros((n + 1) ** (N + 1), dtype=np.int64)), 0, 0)


# -- contraction --------------------------------------------------------------------

def contract(instance: Instance, coords: Mapping[int, object], field: FieldSpec = QQ) -> np.ndarray:
    """Contract the tensor with the vectors in ``coords`` (slot -> vector).

    Vectors may carry leading batch axes ``(..., n+1)``; all batches must
    broadcast together.  The result has the batch axes followed by one axis per
    uncontracted slot, in slot order.  Values are field values.
    """
    for s in coords:
        instance._check_slot(s)
    res = field.from_ints(instance.b)
    free = list(instance.slots)
    nrest = len(free)
    for s in sorted(coords, reverse=True):
        x = field.asarray(coords[s]) if field.is_finite else QQ.asarray(coords[s])
        if x.shape[-1] != instance.n + 1:
            raise SlotMismatch(f"slot {s} vector must have length {instance.n + 1}")
        ax = free.index(s)
        nrest_after = nrest - 1
        lead = res.ndim - nrest
        acc = None
        for m in range(instance.n + 1):
            part = np.take(res, m, axis=lead + ax)
            xm = x[..., m]
            # align batch axes of the vector with the leading axes of the result
            xm = xm.reshape(xm.shape + (1,) * nrest_after)
            term = field.mul(part, xm)
            acc = term if acc is None else field.add(acc, term)
        res = acc
        free.pop(ax)
        nrest = nrest_after
    return res


def _as_vector(v, field: FieldSpec):
    return field.asarray(v) if field.is_finite else QQ.asarray(v)


def slice_matrix(instance: Instance, j: int, i: int, coords: Mapping[int, Sequence],
                 field: FieldSpec = QQ) -> DenseMatrix:
    """Rows indexed by slot ``j``, columns by slot ``i``; every other slot is
    contracted with ``coords[s]``."""
    if j == i:
        raise SlotMismatch("row and column slots must differ")
    instance._check_slot(j)
    instance._check_slot(i)
    need = set(instance.shared(j, i))
    if set(coords) != need:
        raise SlotMismatch(f"coordinates must cover exactly slots {sorted(need)}, got {sorted(coords)}")
    for s, v in coords.items():
        if len(v) != instance.n + 1:
            raise SlotMismatch(f"slot {s} vector must have length {instance.n + 1}")
    arr = contract(instance, coords, field)
    if j > i:
        arr = arr.T
    return DenseMatrix.from_array(field, arr)


def slice_matrices_batch(instance: Instance, j: int, i: int, coords: Mapping[int, np.ndarray],
                         field: FieldSpec) -> np.ndarray:
    """Stack of slice matrices ``(..., n+1, n+1)`` for batched coordinates."""
    need = set(instance.shared(j, i))
    if set(coords) != need:
        raise SlotMismatch(f"coordinates must cover exactly slots {sorted(need)}")
    arr = contract(instance, coords, field)
    if j > i:
        arr = np.swapaxes(arr, -1, -2)
    return arr


# -- symbolic forms -----------------------------------------------------------------

def _factors(slots: Sequence[int], n: int) -> tuple[tuple[int, int], ...]:
    return tuple((s, n + 1) for s in slots)


def _multilinear(instance: Instance, fixed: Mapping[int, int], slots: Sequence[int]) -> MultiPoly:
    """Sum of ``b[...] * prod x^s_{m_s}`` over the free slots, with the
    indices in ``fixed`` held."""
    n = instance.n
    factors = _factors(slots, n)
    terms = {}
    for idx in itertools.product(range(n + 1), repeat=len(slots)):
        full = [0] * (instance.N + 1)
        for s, m in fixed.items():
            full[s] = m
        for s, m in zip(slots, idx):
            full[s] = m
        c = int(instance.b[tuple(full)])
        if c:
            e = []
            for m in idx:
                e.extend(1 if r == m else 0 for r in range(n + 1))
            terms[tuple(e)] = c
    return MultiPoly(factors, terms, (1,) * len(slots))


def model_equations(instance: Instance, ell: int) -> list[MultiPoly]:
    """The ``n+1`` multilinear forms cutting out ``X_ell``."""
    ambient = instance.ambient(ell)
    return [_multilinear(instance, {ell: m}, ambient) for m in range(instance.n + 1)]


def symbolic_slice_matrix(instance: Instance, j: int, i: int) -> list[list[MultiPoly]]:
    if j == i:
        raise SlotMismatch("row and column slots must differ")
    shared = instance.shared(j, i)
    return [[_multilinear(instance, {j: a, i: c}, shared) for c in range(instance.n + 1)]
            for a in range(instance.n + 1)]


@dataclass(frozen=True)
class ModelSpec:
    instance: Instance
    ell: int

    @property
    def ambient_factors(self) -> tuple[int, ...]:
        return self.instance.ambient(self.ell)

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def equations(self) -> list[MultiPoly]:
        return model_equations(self.instance, self.ell)

    def zero_equations(self) -> list[int]:
        """Indices ``m`` whose equation vanishes identically."""
        b = np.moveaxis(self.instance.b, self.ell, 0)
        return [m for m in range(self.n + 1) if not b[m].any()]

    @property
    def is_degenerate(self) -> bool:
        return bool(self.zero_equations())


def model(instance: Instance, ell: int) -> ModelSpec:
    instance._check_slot(ell)
    return ModelSpec(instance, ell)


@dataclass(frozen=True)
class BaseLocusSpec:
    instance: Instance
    pair: tuple[int, int]
    defining_form: MultiPoly | None
    degenerate: bool = False

    @property
    def ambient_factors(self) -> tuple[int, ...]:
        return self.instance.shared(*self.pair)

    @property
    def multidegree(self) -> tuple[int, ...]:
        return (self.instance.n + 1,) * len(self.ambient_factors)

    def evaluate(self, field: FieldSpec, coords: Mapping[int, Sequence]):
        """Determinant at a point; works even when no symbolic form was built."""
        from .exactnum import matrix_det
        j, i = self.pair
        return matrix_det(slice_matrix(self.instance, j, i, coords, field)).value


def determinant_form(instance: Instance, pair: Sequence[int], term_cap: int = DEFAULT_TERM_CAP) -> BaseLocusSpec:
    """Expanded determinant of the symbolic slice matrix for the unordered
    pair.  The smaller slot indexes rows; the other order gives the transpose
    and hence the same polynomial.

    Raises ``SizeBudgetExceeded`` past ``term_cap``; use ``BaseLocusSpec``
    with ``defining_form=None`` and pointwise evaluation in that case.
    """
    j, i = pair
    if j == i:
        raise SlotMismatch("pair needs two distinct slots")
    instance._check_slot(j)
    instance._check_slot(i)
    lo, hi = sorted((j, i))
    form = poly_det(symbolic_slice_matrix(instance, lo, hi), term_cap)
    return BaseLocusSpec(instance, (lo, hi), form, degenerate=form.is_zero())


def degenerate_models(instance: Instance) -> dict[int, list[int]]:
    """Models with identically vanishing equations, mapped to those indices."""
    out = {}
    for ell in instance.slots:
        z = model(instance, ell).zero_equations()
        if z:
            out[ell] = z
    return out


def check_nondegenerate(instance: Instance) -> None:
    bad = degenerate_models(instance)
    if bad:
        desc = ", ".join(f"X_{ell} equations {eqs}" for ell, eqs in sorted(bad.items()))
        raise Degenerate(f"identically zero equations: {desc}")
