"""Multihomogeneous polynomials with exact integer or rational coefficients.

Variables come in blocks, one block of ``n+1`` homogeneous coordinates per
projective factor.  Exponents are stored as one flat tuple over all blocks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping, Sequence

from .fields import FieldSpec


class SizeBudgetExceeded(RuntimeError):
    pass


class NotHomogeneous(ValueError):
    pass


DEFAULT_TERM_CAP = 10**7


@dataclass(frozen=True, eq=False)
class MultiPoly:
    """``factors`` is a tuple of ``(label, nvars)``; variable ``m`` of factor
    ``s`` prints as ``x{s}_{m}``."""

    factors: tuple[tuple[int, int], ...]
    terms: Mapping[tuple[int, ...], int | Fraction] = dc_field(default_factory=dict)
    multidegree: tuple[int, ...] | None = None

    def __post_init__(self):
        terms = {e: c for e, c in dict(self.terms).items() if c != 0}
        object.__setattr__(self, "terms", terms)
        nv = self.nvars
        degs = None
        for e in terms:
            if len(e) != nv:
                raise ValueError("exponent length does not match the variable blocks")
            d = self._block_degrees(e)
            if degs is None:
                degs = d
            elif d != degs:
                raise NotHomogeneous(f"terms of multidegree {degs} and {d}")
        if self.multidegree is None:
            object.__setattr__(self, "multidegree", degs if degs is not None else (0,) * len(self.factors))
        elif degs is not None and tuple(self.multidegree) != degs:
            raise NotHomogeneous(f"declared {self.multidegree}, terms have {degs}")
        else:
            object.__setattr__(self, "multidegree", tuple(self.multidegree))

    @property
    def nvars(self) -> int:
        return sum(k for _, k in self.factors)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(lab for lab, _ in self.factors)

    def _block_degrees(self, e) -> tuple[int, ...]:
        out, pos = [], 0
        for _, k in self.factors:
            out.append(sum(e[pos:pos + k]))
            pos += k
        return tuple(out)

    # constructors -------------------------------------------------------------
    @classmethod
    def zero(cls, factors, multidegree=None):
        return cls(tuple(factors), {}, multidegree)

    @classmethod
    def constant(cls, factors, c):
        factors = tuple(factors)
        nv = sum(k for _, k in factors)
        return cls(factors, {(0,) * nv: c})

    @classmethod
    def variable(cls, factors, label: int, index: int):
        factors = tuple(factors)
        e = []
        for lab, k in factors:
            e.extend(1 if (lab == label and m == index) else 0 for m in range(k))
        if sum(e) != 1:
            raise KeyError(f"no variable x{label}_{index}")
        return cls(factors, {tuple(e): 1})

    # arithmetic ---------------------------------------------------------------
    def _check(self, other: "MultiPoly"):
        if self.factors != other.factors:
            raise ValueError("polynomials live in different variable sets")

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.factors == other.factors and self.terms == other.terms

    def __hash__(self):
        return hash((self.factors, frozenset(self.terms.items())))

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        self._check(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(self.factors, out)

    def __neg__(self):
        return MultiPoly(self.factors, {e: -c for e, c in self.terms.items()}, self.multidegree)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MultiPoly":
        return MultiPoly(self.factors, {e: c * v for e, v in self.terms.items()},
                         self.multidegree if c != 0 else None)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        md = tuple(a + b for a, b in zip(self.multidegree, other.multidegree))
        res = MultiPoly(self.factors, out)
        if res.is_zero():
            res = MultiPoly(self.factors, {}, md)
        return res

    __rmul__ = __mul__

    def derivative(self, label: int, index: int) -> "MultiPoly":
        pos = 0
        for lab, k in self.factors:
            if lab == label:
                pos += index
                break
            pos += k
        else:
            raise KeyError(label)
        out: dict = {}
        for e, c in self.terms.items():
            if e[pos]:
                e2 = list(e)
                e2[pos] -= 1
                out[tuple(e2)] = out.get(tuple(e2), 0) + c * e[pos]
        return MultiPoly(self.factors, out)

    # evaluation ---------------------------------------------------------------
    def evaluate(self, field: FieldSpec, point: Mapping[int, Sequence]):
        """Evaluate at ``point[label] = coordinate vector`` over ``field``."""
        flat = []
        for lab, k in self.factors:
            v = point[lab]
            if len(v) != k:
                raise ValueError(f"factor {lab} needs {k} coordinates")
            flat.extend(v)
        powers: dict = {}
        acc = field.zero
        for e, c in self.terms.items():
            t = field.convert(c)
            for k, d in enumerate(e):
                if d:
                    if (k, d) not in powers:
                        powers[(k, d)] = field.pow(flat[k], d)
                    t = field.mul(t, powers[(k, d)])
            acc = field.add(acc, t)
        return acc

    def substitute(self, point: Mapping[int, Sequence[int | Fraction]]) -> "MultiPoly":
        """Plug integer/rational coordinates into some factors; the remaining
        factors keep their variables."""
        keep = tuple((lab, k) for lab, k in self.factors if lab not in point)
        out: dict = {}
        for e, c in self.terms.items():
            pos, val, e2 = 0, c, []
            for lab, k in self.factors:
                block = e[pos:pos + k]
                if lab in point:
                    for x, d in zip(point[lab], block):
                        val *= Fraction(x) ** d if d else 1
                else:
                    e2.extend(block)
                pos += k
            out[tuple(e2)] = out.get(tuple(e2), 0) + val
        out = {e: (int(v) if isinstance(v, Fraction) and v.denominator == 1 else v) for e, v in out.items()}
        return MultiPoly(keep, out)

    def __repr__(self):
        if not self.terms:
            return "0"
        names = [f"x{lab}_{m}" for lab, k in self.factors for m in range(k)]
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(f"{names[i]}^{d}" if d > 1 else names[i] for i, d in enumerate(e) if d)
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        return " + ".join(parts)


def _leibniz_estimate(entries: list[list[MultiPoly]]) -> int:
    k = len(entries)
    worst = 0
    for perm in itertools.permutations(range(k)):
        prod = 1
        for r in range(k):
            prod *= max(len(entries[r][perm[r]].terms), 1)
        worst += prod
    return worst


def poly_det(entries: Sequence[Sequence[MultiPoly]], term_cap: int = DEFAULT_TERM_CAP) -> MultiPoly:
    """Exact expanded determinant of a square matrix of polynomials.

    Raises :class:`SizeBudgetExceeded` when the Leibniz expansion would touch
    more than ``term_cap`` term products.
    """
    rows = [list(r) for r in entries]
    k = len(rows)
    if any(len(r) != k for r in rows):
        raise ValueError("poly_det needs a square matrix")
    if k == 0:
        raise ValueError("empty matrix")
    factors = rows[0][0].factors
    nonzero = [e for r in rows for e in r if not e.is_zero()]
    entry_md = nonzero[0].multidegree if nonzero else rows[0][0].multidegree
    work = _leibniz_estimate(rows)
    if work > term_cap:
        raise SizeBudgetExceeded(f"expansion needs ~{work} term products (cap {term_cap})")
    md = tuple(k * d for d in entry_md)
    # cofactor expansion along the first row, memoized on column subsets
    memo: dict = {}

    def minor_det(r: int, cols: tuple[int, ...]) -> MultiPoly:
        if r == k:
            return MultiPoly.constant(factors, 1)
        key = (r, cols)
        if key in memo:
            return memo[key]
        acc = MultiPoly.zero(factors)
        for idx, c in enumerate(cols):
            entry = rows[r][c]
            if entry.is_zero():
                continue
            sub = minor_det(r + 1, cols[:idx] + cols[idx + 1:])
            if sub.is_zero():
                continue
            term = entry * sub
            acc = acc + (term if idx % 2 == 0 else -term)
        memo[key] = acc
        return acc

    out = minor_det(0, tuple(range(k)))
    if out.is_zero():
        return MultiPoly(factors, {}, md)
    return out


def monomial_count(nvars: int, degree: int) -> int:
    return math.comb(nvars + degree - 1, degree)
