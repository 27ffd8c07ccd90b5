"""Exact rational polyhedral cones with both descriptions kept in sync.

Cones live in ``Z^d``.  A cone of rank ``r < d`` carries ``d - r`` equations
cutting out its linear span; its facet normals are then inequalities relative
to that span.  Only pointed cones are represented.  Facet enumeration is the
double description method on integer data, so every number stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from ..exactnum import QQ, DenseMatrix, nullspace


class NotPointed(ValueError):
    pass


Vec = tuple[int, ...]


# -- integer vector helpers ------------------------------------------------------------

def primitive(v: Sequence) -> Vec:
    """Scale a rational vector to the primitive integer vector on its ray."""
    fr = [Fraction(x) for x in v]
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in fr), 1)
    ints = [int(x * den) for x in fr]
    g = reduce(math.gcd, ints, 0)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)


def dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def int_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank by fraction-free elimination."""
    a = [list(r) for r in rows if any(r)]
    if not a:
        return 0
    ncols = len(a[0])
    rank = 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank]
        for i in range(rank + 1, len(a)):
            if a[i][c]:
                f = a[i][c]
                a[i] = [p[c] * x - f * y for x, y in zip(a[i], p)]
                g = reduce(math.gcd, a[i], 0)
                if g > 1:
                    a[i] = [x // g for x in a[i]]
        rank += 1
        if rank == len(a):
            break
    return rank


def int_nullspace(rows: Sequence[Sequence[int]], d: int) -> list[Vec]:
    """Primitive integer basis of ``{x : rows x = 0}``."""
    if not rows:
        return [tuple(1 if k == m else 0 for k in range(d)) for m in range(d)]
    M = DenseMatrix.from_rows(QQ, [list(r) for r in rows])
    return [primitive(v) for v in nullspace(M)]


def _pivot_columns(rows: Sequence[Sequence[int]]) -> list[int]:
    a = [[Fraction(x) for x in r] for r in rows]
    piv_cols = []
    r = 0
    ncols = len(a[0]) if a else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c] / a[r][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        piv_cols.append(c)
        r += 1
    return piv_cols


# -- double description ---------------------------------------------------------------

def _dd_extreme_rays(A: list[Vec], r: int) -> list[Vec]:
    """Extreme rays of ``{y in R^r : A y >= 0}`` where ``A`` has rank ``r``."""
    # initial simplicial cone from r independent rows
    basis_idx: list[int] = []
    for k, row in enumerate(A):
        if int_rank([A[b] for b in basis_idx] + [row]) > len(basis_idx):
            basis_idx.append(k)
            if len(basis_idx) == r:
                break
    B = DenseMatrix.from_rows(QQ, [list(A[k]) for k in basis_idx])
    # rays: columns of B^{-1}
    rays = []
    for c in range(r):
        # solve B y = e_c
        aug = DenseMatrix.from_rows(QQ, [list(A[k]) + [1 if t == c else 0] for t, k in enumerate(basis_idx)])
        ker = nullspace(aug)
        v = next(v for v in ker if v[-1] != 0)
        y = [-x / v[-1] for x in v[:-1]]
        rays.append(primitive(y))
    done = list(basis_idx)
    for k, row in enumerate(A):
        if k in basis_idx:
            continue
        vals = [dot(row, y) for y in rays]
        pos = [y for y, v in zip(rays, vals) if v > 0]
        neg = [y for y, v in zip(rays, vals) if v < 0]
        zer = [y for y, v in zip(rays, vals) if v == 0]
        if not neg:
            done.append(k)
            continue
        tight = {y: frozenset(c for c in done if dot(A[c], y) == 0) for y in rays}
        new = []
        for p in pos:
            vp = dot(row, p)
            for q in neg:
                common = tight[p] & tight[q]
                if len(common) < r - 2:
                    continue
                # combinatorial adjacency: no third ray is tight on all of common
                if any(z is not p and z is not q and common <= tight[z] for z in rays):
                    continue
                if int_rank([A[c] for c in common]) != r - 2:
                    continue
                vq = dot(row, q)
                new.append(primitive([vp * b - vq * a for a, b in zip(p, q)]))
        rays = pos + zer + new
        rays = list(dict.fromkeys(rays))
        done.append(k)
    return rays


# -- the cone type --------------------------------------------------------------------

@dataclass(frozen=True)
class ConeRP:
    """Pointed rational polyhedral cone in ``Z^dim``.

    ``generators`` are the primitive extreme rays, ``facets`` primitive
    inward normals (relative to the span), ``equations`` a primitive basis of
    the annihilator of the span.  All three lists are sorted.
    """

    dim: int
    generators: tuple[Vec, ...]
    facets: tuple[Vec, ...]
    equations: tuple[Vec, ...] = ()

    @property
    def rank(self) -> int:
        return self.dim - len(self.equations)

    @property
    def is_full_dim(self) -> bool:
        return not self.equations

    def contains(self, x: Sequence) -> bool:
        return (all(dot(f, x) >= 0 for f in self.facets)
                and all(dot(e, x) == 0 for e in self.equations))

    def contains_interior(self, x: Sequence) -> bool:
        """Strictly inside the relative interior."""
        return (all(dot(f, x) > 0 for f in self.facets)
                and all(dot(e, x) == 0 for e in self.equations))

    def interior_point(self) -> Vec:
        if not self.generators:
            return (0,) * self.dim
        return tuple(sum(g[k] for g in self.generators) for k in range(self.dim))

    def contains_cone(self, other: "ConeRP") -> bool:
        return all(self.contains(g) for g in other.generators)

    def tight_facets(self, x: Sequence) -> tuple[Vec, ...]:
        return tuple(f for f in self.facets if dot(f, x) == 0)

    def verify(self) -> None:
        """Check the pairing conditions between the two descriptions."""
        r = self.rank
        for g in self.generators:
            if not self.contains(g):
                raise AssertionError(f"generator {g} violates the inequalities")
        for f in self.facets:
            tight = [g for g in self.generators if dot(f, g) == 0]
            if int_rank(tight) != r - 1:
                raise AssertionError(f"facet {f} is not supported on a spanning set")
        if int_rank(self.generators) != r:
            raise AssertionError("generators do not span the declared linear span")

    def transform(self, M: Sequence[Sequence[int]], Minv: Sequence[Sequence[int]] | None = None) -> "ConeRP":
        """Image under an integer matrix; unimodular with ``Minv`` is a fast path."""
        gens = [tuple(dot(row, g) for row in M) for g in self.generators]
        if Minv is None:
            return cone_from_generators(gens, dim=self.dim)
        cols = list(zip(*Minv))
        facets = [tuple(dot(f, c) for c in cols) for f in self.facets]
        eqs = [tuple(dot(e, c) for c in cols) for e in self.equations]
        return ConeRP(self.dim, tuple(sorted(primitive(g) for g in gens)),
                      tuple(sorted(primitive(f) for f in facets)), _canonical_equations(eqs, self.dim))

    def to_json(self) -> dict:
        return {"dim": self.dim, "rank": self.rank, "generators": [list(g) for g in self.generators],
                "facets": [list(f) for f in self.facets], "equations": [list(e) for e in self.equations]}


def _canonical_equations(eqs: Iterable[Sequence[int]], d: int) -> tuple[Vec, ...]:
    """Canonical primitive basis of a subspace of covectors (reduced echelon form)."""
    eqs = [list(e) for e in eqs if any(e)]
    if not eqs:
        return ()
    M = DenseMatrix.from_rows(QQ, eqs)
    # row space = orthogonal complement of the kernel; reduce to echelon form
    from ..exactnum.matrix import _row_echelon
    rows, pivots, _ = _row_echelon(M)
    return tuple(primitive(rows[k]) for k in range(len(pivots)))


def zero_cone(dim: int) -> ConeRP:
    eqs = tuple(tuple(1 if k == m else 0 for k in range(dim)) for m in range(dim))
    return ConeRP(dim, (), (), eqs)


def cone_from_generators(vectors: Iterable[Sequence[int]], dim: int | None = None) -> ConeRP:
    """Both descriptions of the cone spanned by ``vectors``."""
    vecs = [primitive(v) for v in vectors]
    if dim is None:
        if not vecs:
            raise ValueError("dimension needed for an empty generator list")
        dim = len(vecs[0])
    vecs = [v for v in vecs if any(v)]
    if any(len(v) != dim for v in vecs):
        raise ValueError("all generators need the same length")
    vecs = list(dict.fromkeys(vecs))
    if not vecs:
        return zero_cone(dim)
    r = int_rank(vecs)
    eqs = _canonical_equations(int_nullspace(vecs, dim), dim) if r < dim else ()
    piv = _pivot_columns(vecs) if r < dim else list(range(dim))
    proj = [tuple(v[c] for c in piv) for v in vecs]
    if r == 1:
        # a ray, or a line when opposite vectors occur
        if len(set(vecs)) > 1:
            raise NotPointed("cone contains a line")
        normals_r = [(1,) if proj[0][0] > 0 else (-1,)]
    else:
        normals_r = _dd_extreme_rays(proj, r)
        if int_rank(normals_r) < r:
            raise NotPointed("cone contains a line")
    facets = []
    for y in normals_r:
        f = [0] * dim
        for c, val in zip(piv, y):
            f[c] = val
        facets.append(primitive(f))
    # extreme rays: generators whose tight facets have rank r - 1
    gens = []
    for v in vecs:
        tight = [y for y in normals_r if dot(y, tuple(v[c] for c in piv)) == 0]
        if int_rank(tight) == r - 1:
            gens.append(v)
    cone = ConeRP(dim, tuple(sorted(set(gens))), tuple(sorted(set(facets))), eqs)
    return cone


def cone_from_inequalities(facets: Iterable[Sequence[int]], equations: Iterable[Sequence[int]] = (),
                           dim: int | None = None) -> ConeRP:
    """Cone ``{x : f.x >= 0, e.x = 0}``; must be pointed."""
    facets = [tuple(int(x) for x in f) for f in facets]
    equations = [tuple(int(x) for x in e) for e in equations]
    if dim is None:
        dim = len((facets or equations)[0])
    K = int_nullspace(equations, dim) if equations else int_nullspace([], dim)
    K = [k for k in K if any(k)]
    d = len(K)
    if d == 0:
        return zero_cone(dim)
    A = [tuple(dot(f, k) for k in K) for f in facets]
    A = [a for a in A if any(a)]
    if int_rank(A) < d:
        raise NotPointed("inequality system has a lineality space")
    if d == 1:
        signs = {1 if a[0] > 0 else -1 for a in A}
        if len(signs) == 2:
            return zero_cone(dim)
        s = signs.pop()
        rays_z = [(s,)]
    else:
        rays_z = _dd_extreme_rays(A, d)
    rays = [tuple(sum(z[t] * K[t][c] for t in range(d)) for c in range(dim)) for z in rays_z]
    if not rays:
        return zero_cone(dim)
    return cone_from_generators(rays, dim)


def cone_intersect(a: ConeRP, b: ConeRP) -> ConeRP:
    if a.dim != b.dim:
        raise ValueError("cones live in different dimensions")
    return cone_from_inequalities(a.facets + b.facets, a.equations + b.equations, a.dim)


def cones_equal(a: ConeRP, b: ConeRP) -> bool:
    return a.dim == b.dim and a.generators == b.generators


def is_face(face: ConeRP, c: ConeRP) -> bool:
    """``face`` is a face of ``c``: it equals ``c`` cut by the facets of ``c``
    that vanish on all of it."""
    if not c.contains_cone(face):
        return False
    pt = face.interior_point()
    tight = [f for f in c.facets if dot(f, pt) == 0]
    cut = cone_from_inequalities(c.facets, c.equations + tuple(tight), c.dim)
    return cones_equal(cut, face)


def interiors_meet(a: ConeRP, b: ConeRP) -> bool:
    """Full-dimensional cones with overlapping interiors."""
    if not (a.is_full_dim and b.is_full_dim):
        return False
    return cone_intersect(a, b).is_full_dim


def separated(a: ConeRP, b: ConeRP) -> bool:
    """A facet of one cone weakly separates the other (cheap sufficient test
    for disjoint interiors)."""
    for f in a.facets:
        if all(dot(f, g) <= 0 for g in b.generators):
            return True
    for f in b.facets:
        if all(dot(f, g) <= 0 for g in a.generators):
            return True
    return False


def simplicial_cone(basis: Sequence[Sequence[int]]) -> ConeRP:
    return cone_from_generators(basis)
