"""Divisor lattices of the models and the lattice maps induced by the flops.

``N^1(X_l)`` has the basis ``H_k`` for ``k`` in the ambient factors of
``X_l``, always listed in increasing label order.  A flop ``X_j -> X_i`` keeps
every shared class and exchanges ``H_i`` (on the source) for ``H_j`` (on the
target).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from ..chamberwalk.cones import ConeRP, cone_from_generators, cone_intersect


class DimensionMismatch(ValueError):
    pass


class CalibrationUnavailable(RuntimeError):
    pass


class LatticeError(AssertionError):
    pass


def basis(N: int, ell: int) -> tuple[int, ...]:
    return tuple(k for k in range(N + 1) if k != ell)


@dataclass(frozen=True)
class DivisorClass:
    model: int
    labels: tuple[int, ...]
    coefficients: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.coefficients):
            raise ValueError("one coefficient per basis label")
        if self.model in self.labels:
            raise ValueError(f"H_{self.model} is not a class on X_{self.model}")

    @classmethod
    def hyperplane(cls, N: int, ell: int, k: int) -> "DivisorClass":
        labels = basis(N, ell)
        if k not in labels:
            raise ValueError(f"H_{k} is not a basis class of X_{ell}")
        return cls(ell, labels, tuple(1 if lab == k else 0 for lab in labels))

    def __getitem__(self, label: int) -> int:
        return self.coefficients[self.labels.index(label)]

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.labels, self.coefficients))

    def __repr__(self):
        terms = [f"{c}*H{lab}" for lab, c in zip(self.labels, self.coefficients) if c]
        return f"[{' + '.join(terms) or '0'}] on X_{self.model}"


# -- intersection numbers ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _monomial_coefficient(n: int, powers: tuple[int, ...]) -> int:
    """Coefficient of ``prod H_k^{powers_k}`` in ``(sum H_k)^(n+1)``."""
    if sum(powers) != n + 1 or min(powers, default=0) < 0:
        return 0
    out = math.factorial(n + 1)
    for f in powers:
        out //= math.factorial(f)
    return out


def intersection_number(n: int, N: int, exponents: Sequence[int]) -> int:
    """Degree of ``prod H_k^{e_k}`` on any model (``e`` over its ``N`` basis
    classes, summing to the model dimension ``n(N-1)-1``).

    On ``(P^n)^N`` the class of the model is ``(sum H_k)^(n+1)``; a monomial
    ``prod H_k^{e_k}`` pairs with ``prod H_k^{n-e_k}`` only.
    """
    if len(exponents) != N:
        raise DimensionMismatch(f"need {N} exponents, got {len(exponents)}")
    dim = n * (N - 1) - 1
    if sum(exponents) != dim:
        raise DimensionMismatch(f"exponents sum to {sum(exponents)}, model dimension is {dim}")
    if any(e < 0 for e in exponents):
        raise DimensionMismatch("negative exponent")
    if any(e > n for e in exponents):
        return 0
    return _monomial_coefficient(n, tuple(n - e for e in exponents))


@dataclass
class IntersectionForm:
    n: int
    N: int
    table: dict = dc_field(default_factory=dict)

    def __call__(self, exponents: Sequence[int]) -> int:
        key = tuple(exponents)
        if key not in self.table:
            self.table[key] = intersection_number(self.n, self.N, key)
        return self.table[key]

    def degree(self, divisors: Sequence[DivisorClass]) -> int:
        """Intersection of ``dim`` divisor classes on one model (multilinear)."""
        if not divisors:
            raise ValueError("need at least one divisor")
        labels = divisors[0].labels
        dim = self.n * (self.N - 1) - 1
        if len(divisors) != dim:
            raise DimensionMismatch(f"need {dim} divisors")
        total = 0
        # expand the product; fine for the small dimensions used here
        def rec(k, exps, coeff):
            nonlocal total
            if k == len(divisors):
                total += coeff * self(tuple(exps))
                return
            for pos, c in enumerate(divisors[k].coefficients):
                if c:
                    exps[pos] += 1
                    rec(k + 1, exps, coeff * c)
                    exps[pos] -= 1
        rec(0, [0] * len(labels), 1)
        return total


# -- cones ---------------------------------------------------------------------------

def nef_cone(N: int, ell: int = 0) -> ConeRP:
    """Simplicial cone on the basis classes of ``X_ell`` in its own
    coordinates, i.e. the positive orthant of ``Z^N``."""
    basis(N, ell)
    return cone_from_generators([tuple(1 if r == c else 0 for c in range(N)) for r in range(N)])


# -- pushforward matrices ------------------------------------------------------------

def _det(M: Sequence[Sequence[int]]) -> int:
    from fractions import Fraction
    a = [[Fraction(x) for x in row] for row in M]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return int(det)


def matmul(A, B):
    return tuple(tuple(sum(A[r][k] * B[k][c] for k in range(len(B))) for c in range(len(B[0])))
                 for r in range(len(A)))


def identity(N: int):
    return tuple(tuple(1 if r == c else 0 for c in range(N)) for r in range(N))


@dataclass(frozen=True)
class PushforwardMatrix:
    """``matrix[r][c]``: coefficient of target basis class ``r`` in the image
    of source basis class ``c``."""

    N: int
    source: int
    target: int
    matrix: tuple[tuple[int, ...], ...]
    provenance: str = "structural"
    provisional: bool = False
    primes: tuple[int, ...] = ()
    intervals: tuple | None = None

    @property
    def source_basis(self) -> tuple[int, ...]:
        return basis(self.N, self.source)

    @property
    def target_basis(self) -> tuple[int, ...]:
        return basis(self.N, self.target)

    @property
    def det(self) -> int:
        return _det(self.matrix)

    def apply(self, d: DivisorClass) -> DivisorClass:
        if d.model != self.source:
            raise ValueError(f"class lives on X_{d.model}, map starts at X_{self.source}")
        coeffs = tuple(sum(self.matrix[r][c] * d.coefficients[c] for c in range(self.N)) for r in range(self.N))
        return DivisorClass(self.target, self.target_basis, coeffs)

    def column(self, label: int) -> DivisorClass:
        c = self.source_basis.index(label)
        return DivisorClass(self.target, self.target_basis, tuple(row[c] for row in self.matrix))

    def relabeled(self):
        """The matrix read in the source basis after swapping labels
        ``source`` and ``target``."""
        src, tgt = self.source_basis, self.target_basis
        swap = {self.source: self.target, self.target: self.source}
        # target basis label -> position in source basis after swapping
        perm = [src.index(swap.get(lab, lab)) for lab in tgt]
        out = [[0] * self.N for _ in range(self.N)]
        for r in range(self.N):
            for c in range(self.N):
                out[perm[r]][c] = self.matrix[r][c]
        return tuple(tuple(row) for row in out)

    def to_json(self) -> dict:
        out = {"flop": [self.source, self.target], "matrix": [list(r) for r in self.matrix],
               "provenance": self.provenance, "primes": list(self.primes)}
        if self.provisional:
            out["provisional"] = True
        if self.intervals is not None:
            out["intervals"] = [list(iv) for iv in self.intervals]
        return out

    @classmethod
    def from_json(cls, N: int, data: Mapping) -> "PushforwardMatrix":
        j, i = data["flop"]
        return cls(N, int(j), int(i), tuple(tuple(int(x) for x in r) for r in data["matrix"]),
                   data.get("provenance", "structural"), bool(data.get("provisional", False)),
                   tuple(data.get("primes", ())),
                   tuple(tuple(iv) for iv in data["intervals"]) if "intervals" in data else None)


def from_pullback_column(N: int, j: int, i: int, column: Mapping[int, int], provenance: str,
                         primes: Sequence[int] = (), provisional: bool = False, intervals=None) -> PushforwardMatrix:
    """Build the pushforward of the flop ``X_j -> X_i`` from the image of the
    exchanged source class ``H_i`` (a class on ``X_i``, given by label)."""
    src, tgt = basis(N, j), basis(N, i)
    rows = [[0] * N for _ in range(N)]
    for c, lab in enumerate(src):
        if lab == i:
            for r, tl in enumerate(tgt):
                rows[r][c] = int(column.get(tl, 0))
        else:
            rows[tgt.index(lab)][c] = 1
    return PushforwardMatrix(N, j, i, tuple(tuple(r) for r in rows), provenance, provisional,
                             tuple(primes), intervals)


def structural_pushforward(n: int, N: int, j: int, i: int) -> PushforwardMatrix:
    """Structural candidate: the exchanged class goes to ``n`` times the sum
    of the shared classes minus ``H_j``.

    The shared entries are the adjugate multidegree ``n`` minus the fixed
    component, which the structure alone bounds to ``[0, n]``; the matrix is
    therefore flagged provisional and carries those intervals.
    """
    col = {k: n for k in range(N + 1) if k not in (i, j)}
    col[j] = -1
    tgt = basis(N, i)
    intervals = tuple((0, n) if lab != j else (-1, -1) for lab in tgt)
    return from_pullback_column(N, j, i, col, "structural", provisional=True, intervals=intervals)


def check_pushforward(pf: PushforwardMatrix, reverse: PushforwardMatrix | None = None) -> list[str]:
    """Postconditions: unimodular, identity on shared classes, involution,
    and wall adjacency.  Returns the list of violations."""
    bad = []
    N, j, i = pf.N, pf.source, pf.target
    if abs(pf.det) != 1:
        bad.append(f"det = {pf.det}")
    for lab in basis(N, j):
        if lab == i:
            continue
        col = pf.column(lab)
        if col.as_dict() != {k: (1 if k == lab else 0) for k in basis(N, i)}:
            bad.append(f"shared class H_{lab} not fixed")
    if matmul(pf.relabeled(), pf.relabeled()) != identity(N):
        bad.append("not an involution under the label swap")
    if reverse is not None:
        if matmul(reverse.matrix, pf.matrix) != identity(N):
            bad.append("reverse flop is not the inverse")
    # wall adjacency: image of Nef(X_j) meets Nef(X_i) exactly in the shared facet
    image = cone_from_generators([tuple(row[c] for row in pf.matrix) for c in range(N)])
    nef_i = nef_cone(N, i)
    meet = cone_intersect(image, nef_i)
    shared_facet = cone_from_generators([tuple(1 if lab == k else 0 for lab in basis(N, i))
                                         for k in basis(N, i) if k != j], dim=N)
    if meet.generators != shared_facet.generators or meet.rank != N - 1:
        bad.append("wall adjacency fails")
    return bad


# -- fixture files -------------------------------------------------------------------

def save_fixtures(path, N: int, matrices: Sequence[PushforwardMatrix], instance: Mapping | None = None) -> None:
    data = {"N": N, "fixtures": [m.to_json() for m in sorted(matrices, key=lambda m: (m.source, m.target))]}
    if instance is not None:
        data["instance"] = dict(instance)
    Path(path).write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")


def load_fixtures(path) -> tuple[int, dict[tuple[int, int], PushforwardMatrix], dict]:
    data = json.loads(Path(path).read_text())
    N = int(data["N"])
    mats = {}
    for fx in data["fixtures"]:
        m = PushforwardMatrix.from_json(N, fx)
        mats[(m.source, m.target)] = m
    return N, mats, data.get("instance", {})


def shipped_fixture_path(name: str = "flagship_pushforwards.json") -> Path:
    return Path(str(resources.files("detflops.picardlattice") / "data" / name))
