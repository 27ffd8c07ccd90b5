"""Finite-field probing of the models and of the determinantal base loci.

Nothing here proves anything about the complex varieties.  A scan that finds
no singular point, or no low-rank point, is evidence and is labelled as such.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .exactnum import (GF, DenseMatrix, FieldSpec, WrongRank, batch_det, batch_minors_vanish,
                       corank1_kernel, matrix_rank, normalize_projective)
from .exactnum.fields import PrimeField
from .tensorcore import Instance, ModelSpec, model, slice_matrices_batch, slice_matrix


class BudgetExceeded(RuntimeError):
    def __init__(self, required: int, budget: int):
        self.required = required
        self.budget = budget
        super().__init__(f"enumeration needs {required} ambient points, budget is {budget}")


class SampleFailure(RuntimeError):
    pass


class NotOnVariety(ValueError):
    pass


class DegenerateModelWarning(UserWarning):
    pass


DEFAULT_RETRIES = 64


def field_label(field: FieldSpec) -> str:
    if not field.is_finite:
        return "QQ"
    return f"{field.p}" if field.k == 1 else f"{field.p}^{field.k}"


# -- points -------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiProjPoint:
    """One normalized coordinate vector per factor label."""

    field: FieldSpec
    coords: tuple[tuple[int, tuple], ...]

    def __post_init__(self):
        fixed = []
        for lab, v in self.coords:
            v = tuple(int(x) for x in v) if self.field.is_finite else tuple(v)
            if normalize_projective(v, self.field) != v:
                raise ValueError(f"factor {lab} coordinates {v} are not normalized")
            fixed.append((int(lab), v))
        object.__setattr__(self, "coords", tuple(sorted(fixed)))

    @classmethod
    def from_vectors(cls, field: FieldSpec, vectors: Mapping[int, Sequence]) -> "MultiProjPoint":
        return cls(field, tuple((lab, normalize_projective(list(v), field)) for lab, v in vectors.items()))

    def __getitem__(self, label: int) -> tuple:
        for lab, v in self.coords:
            if lab == label:
                return v
        raise KeyError(label)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(lab for lab, _ in self.coords)

    def as_dict(self) -> dict[int, tuple]:
        return dict(self.coords)

    def restrict(self, labels: Sequence[int]) -> "MultiProjPoint":
        return MultiProjPoint(self.field, tuple((lab, self[lab]) for lab in labels))

    def to_json(self) -> list:
        return [[int(x) if self.field.is_finite else str(x) for x in v] for _, v in self.coords]

    def __repr__(self):
        body = ", ".join(f"{lab}:[{':'.join(str(x) for x in v)}]" for lab, v in self.coords)
        return f"({body}) over {self.field!r}"


def projective_points(n: int, field: FieldSpec) -> np.ndarray:
    """All normalized points of ``P^n`` over a finite field, lexicographic."""
    q = field.order
    rows = []
    for lead in range(n, -1, -1):
        tail = n - lead
        for rest in itertools.product(range(q), repeat=tail):
            rows.append((0,) * lead + (1,) + rest)
    return np.array(rows, dtype=np.int64).reshape(len(rows), n + 1)


def projective_count(n: int, q: int) -> int:
    return sum(q**k for k in range(n + 1))


def ambient_point_count(n: int, N: int, q: int) -> int:
    return projective_count(n, q) ** N


def _matvec(field: FieldSpec, S: np.ndarray, x: np.ndarray) -> np.ndarray:
    acc = None
    for b in range(S.shape[-1]):
        term = field.mul(S[..., b], x[..., b:b + 1])
        acc = term if acc is None else field.add(acc, term)
    return acc


def _grid(pts: np.ndarray, count: int) -> list[np.ndarray]:
    """Cartesian power of a point list: ``count`` arrays of shape (P^count, n+1)
    in product order (last factor fastest)."""
    P = len(pts)
    idx = np.indices((P,) * count).reshape(count, -1) if count else np.zeros((0, 1), dtype=np.int64)
    return [pts[idx[k]] for k in range(count)]


# -- enumeration ----------------------------------------------------------------------

class PointStream:
    """Iterable over the rational points of a model in lexicographic order.

    ``scanned`` is the number of ambient points covered, ``degenerate`` is set
    when the model has an identically zero equation.
    """

    def __init__(self, spec: ModelSpec, field: FieldSpec, chunk: int = 1 << 14):
        self.spec = spec
        self.field = field
        self.degenerate = spec.is_degenerate
        n = spec.n
        self.scanned = ambient_point_count(n, len(spec.ambient_factors), field.order)
        self._chunk = chunk

    def arrays(self) -> Iterator[dict[int, np.ndarray]]:
        """Batches of points as ``{label: (K, n+1) array}``."""
        spec, F = self.spec, self.field
        inst = spec.instance
        amb = spec.ambient_factors
        *rest, t = amb
        pts = projective_points(spec.n, F)
        P = len(pts)
        total = P ** len(rest)
        for start in range(0, total, self._chunk):
            stop = min(total, start + self._chunk)
            flat = np.arange(start, stop)
            idx = np.array(np.unravel_index(flat, (P,) * len(rest))) if rest else np.zeros((0, stop - start), int)
            coords = {s: pts[idx[k]] for k, s in enumerate(rest)}
            S = slice_matrices_batch(inst, spec.ell, t, coords, F)        # (K, n+1, n+1)
            vals = _matvec(F, S[:, None, :, :], pts[None, :, :])            # (K, P, n+1)
            hit = np.all(vals == F.zero, axis=-1)
            ki, pi = np.nonzero(hit)
            if len(ki) == 0:
                continue
            out = {s: coords[s][ki] for s in rest}
            out[t] = pts[pi]
            yield out

    def __iter__(self) -> Iterator[MultiProjPoint]:
        for batch in self.arrays():
            labels = sorted(batch)
            K = len(batch[labels[0]])
            for r in range(K):
                yield MultiProjPoint(self.field, tuple((lab, tuple(batch[lab][r])) for lab in labels))


def enumerate_points(spec: ModelSpec, field: FieldSpec, budget: int = 10**6) -> PointStream:
    """Every rational point of ``X_ell`` over a finite field, each once."""
    if not field.is_finite:
        raise ValueError("enumeration needs a finite field")
    required = ambient_point_count(spec.n, len(spec.ambient_factors), field.order)
    if required > budget:
        raise BudgetExceeded(required, budget)
    stream = PointStream(spec, field)
    if stream.degenerate:
        warnings.warn(f"model {spec.ell} has identically zero equations", DegenerateModelWarning, stacklevel=2)
    return stream


# -- pointwise checks ---------------------------------------------------------------

def equations_vanish(spec: ModelSpec, point: MultiProjPoint) -> bool:
    inst, F = spec.instance, point.field
    amb = spec.ambient_factors
    if set(point.labels) != set(amb):
        return False
    t = amb[-1]
    S = slice_matrix(inst, spec.ell, t, {s: point[s] for s in amb if s != t}, F)
    return all(v == F.zero for v in S.apply(point[t]))


def jacobian_matrix(spec: ModelSpec, point: MultiProjPoint) -> DenseMatrix:
    """``(n+1) x N(n+1)`` homogeneous Jacobian, factor blocks in label order."""
    inst, F = spec.instance, point.field
    amb = spec.ambient_factors
    blocks = [slice_matrix(inst, spec.ell, s, {r: point[r] for r in amb if r != s}, F).to_rows()
              for s in amb]
    rows = [sum((blk[m] for blk in blocks), []) for m in range(spec.n + 1)]
    return DenseMatrix.from_rows(F, rows, convert=False)


def jacobian_rank(spec: ModelSpec, point: MultiProjPoint, chart: Mapping[int, int] | None = None) -> int:
    """Rank of the Jacobian in the affine chart ``x^s_{chart[s]} = 1``.

    The default chart uses the first nonzero coordinate of each factor.
    """
    if not equations_vanish(spec, point):
        raise NotOnVariety(f"{point} is not on X_{spec.ell}")
    F = point.field
    n = spec.n
    J = jacobian_matrix(spec, point).to_rows()
    keep = []
    for k, s in enumerate(spec.ambient_factors):
        v = point[s]
        piv = chart[s] if chart and s in chart else next(r for r, x in enumerate(v) if x != F.zero)
        if v[piv] == F.zero:
            raise ValueError(f"chart index {piv} is zero on factor {s}")
        keep.extend(k * (n + 1) + r for r in range(n + 1) if r != piv)
    affine = [[row[c] for c in keep] for row in J]
    return matrix_rank(DenseMatrix.from_rows(F, affine, convert=False))


def _batch_jacobian_deficient(spec: ModelSpec, field: FieldSpec, batch: Mapping[int, np.ndarray]) -> np.ndarray:
    """Vectorized Jacobian test in the first-nonzero charts."""
    inst = spec.instance
    n = spec.n
    amb = spec.ambient_factors
    cols = []
    for s in amb:
        S = slice_matrices_batch(inst, spec.ell, s, {r: batch[r] for r in amb if r != s}, field)
        v = batch[s]
        piv = np.argmax(v != 0, axis=-1)
        for r in range(n + 1):
            cols.append((S[..., :, r], piv != r))
    K = len(batch[amb[0]])
    # the chart column is dropped per point: zero it instead (rank unchanged)
    J = np.stack([np.where(mask[:, None], c, field.zero) for c, mask in cols], axis=-1)
    assert J.shape == (K, n + 1, len(amb) * (n + 1))
    return batch_minors_vanish(field, J, n + 1)


# -- sampling -------------------------------------------------------------------------

def _poly_in_s(field: FieldSpec, A0: np.ndarray, A1: np.ndarray, degree: int) -> list:
    """Values of det(A0 + s A1) for all field elements s (brute force)."""
    svals = np.arange(field.order, dtype=np.int64)
    M = field.add(A0[None], field.mul(svals[:, None, None], A1[None]))
    return batch_det(field, M)


def sample_point(spec: ModelSpec, field: FieldSpec, rng: np.random.Generator,
                 retries: int = DEFAULT_RETRIES, escalate: bool = True) -> MultiProjPoint:
    """Random point of ``X_ell``.

    Choose a pivot factor ``t`` and helper ``t'``; draw the other factors at
    random, put ``x^{t'}`` on a random line ``u + s v`` and take a root ``s``
    of ``det S(ell, t)``, then fill ``x^t`` with the corank-one kernel.  A
    prime field is escalated to its quadratic extension when the line has no
    rational root; the returned point then lives over ``GF(p^2)``.
    """
    if spec.is_degenerate:
        raise SampleFailure(f"model {spec.ell} is degenerate")
    if not field.is_finite:
        raise ValueError("sampling needs a finite field")
    inst = spec.instance
    n = spec.n
    amb = spec.ambient_factors
    Nf = len(amb)
    start = int(rng.integers(Nf))
    for attempt in range(retries):
        t = amb[(start + attempt) % Nf]
        tp = amb[(start + attempt + 1) % Nf]
        fields = [field]
        if escalate and isinstance(field, PrimeField):
            fields.append(GF(field.p, 2))
        base = {s: field.random(rng, n + 1) for s in amb if s not in (t, tp)}
        u = field.random(rng, n + 1)
        v = field.random(rng, n + 1)
        if not np.any(v):
            continue
        for F in fields:
            # integer codes of the prime field embed unchanged into GF(p^2)
            coords = {s: np.asarray(x) for s, x in base.items()}
            if any(not np.any(x) for x in coords.values()):
                break
            A0 = slice_matrices_batch(inst, spec.ell, t, {**coords, tp: u}, F)
            A1 = slice_matrices_batch(inst, spec.ell, t, {**coords, tp: v}, F)
            dets = _poly_in_s(F, A0, A1, n + 1)
            roots = [int(s) for s in np.nonzero(dets == F.zero)[0]]
            cand = []
            for s in roots:
                cand.append(F.add(u, F.mul(s, v)))
            # the point at infinity of the line
            if batch_det(F, A1) == F.zero:
                cand.append(v)
            if not cand:
                continue
            xtp = cand[int(rng.integers(len(cand)))]
            if not np.any(xtp):
                continue
            full = {s: [int(c) for c in x] for s, x in coords.items()}
            full[tp] = [int(c) for c in xtp]
            S = slice_matrix(inst, spec.ell, t, full, F)
            try:
                kern = corank1_kernel(S)
            except WrongRank:
                break
            full[t] = list(kern)
            pt = MultiProjPoint.from_vectors(F, full)
            assert equations_vanish(spec, pt)
            return pt
    raise SampleFailure(f"no point found on X_{spec.ell} over {field!r} after {retries} attempts")


# -- reports -------------------------------------------------------------------------

@dataclass
class SmoothnessReport:
    model: int
    fields: list[str]
    tested: int
    witnesses: list[MultiProjPoint] = dc_field(default_factory=list)
    verdict: str = "no-singular-point-found"
    modes: list[str] = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {"model": self.model, "fields": self.fields, "tested": self.tested,
                "witnesses": [w.to_json() for w in self.witnesses], "verdict": self.verdict,
                "modes": self.modes}


@dataclass
class RankLocusReport:
    pair: tuple[int, int]
    fields: list[str]
    tested: int
    budget: int
    witnesses: list[MultiProjPoint] = dc_field(default_factory=list)
    verdict: str = "none-found"

    def to_json(self) -> dict:
        return {"pair": list(self.pair), "fields": self.fields, "tested": self.tested,
                "budget": self.budget, "witnesses": [w.to_json() for w in self.witnesses],
                "verdict": self.verdict}


def smoothness_scan(instance: Instance, ell: int, fields: Sequence[FieldSpec], budget: int = 10**6,
                    samples: int = 200, seed: int = 0) -> SmoothnessReport:
    """Jacobian test on every point (or on ``samples`` random points when the
    ambient space exceeds ``budget``) over each field.  ``no-singular-point-found``
    is evidence, not a proof."""
    spec = model(instance, ell)
    report = SmoothnessReport(ell, [field_label(F) for F in fields], 0)
    if spec.is_degenerate:
        report.verdict = "degenerate"
        return report
    for F in fields:
        required = ambient_point_count(spec.n, len(spec.ambient_factors), F.order)
        if required <= budget:
            report.modes.append("enumerated")
            for batch in enumerate_points(spec, F, budget).arrays():
                bad = _batch_jacobian_deficient(spec, F, batch)
                report.tested += len(bad)
                for r in np.nonzero(bad)[0]:
                    report.witnesses.append(MultiProjPoint(
                        F, tuple((s, tuple(batch[s][r])) for s in spec.ambient_factors)))
        else:
            report.modes.append("sampled")
            rng = np.random.Generator(np.random.PCG64([seed, ell, F.order]))
            for _ in range(samples):
                pt = sample_point(spec, F, rng)
                report.tested += 1
                if jacobian_rank(spec, pt) < spec.n + 1:
                    report.witnesses.append(pt)
    if report.witnesses:
        report.verdict = "singular-witness"
    return report


DEFAULT_RANK_FIELDS = ((3, 1), (5, 1), (7, 1), (11, 1), (13, 1), (3, 2), (5, 2))


def default_rank_fields() -> list[FieldSpec]:
    return [GF(p, k) for p, k in DEFAULT_RANK_FIELDS]


def rank_locus_scan(instance: Instance, pair: Sequence[int], fields: Sequence[FieldSpec] | None = None,
                    budget: int = 10**6, exhaustive: bool = False, seed: int = 0) -> RankLocusReport:
    """Search the base of the flop between ``X_j`` and ``X_i`` for points
    where the slice matrix has rank at most ``n-1``.

    Fields whose shared space fits in ``budget`` are scanned completely; larger
    ones get ``budget`` random points.  Unless ``exhaustive``, the scan stops
    after the first field that yields a witness.
    """
    j, i = pair
    fields = list(fields) if fields is not None else default_rank_fields()
    n = instance.n
    shared = instance.shared(j, i)
    report = RankLocusReport((j, i), [], 0, budget)
    for F in fields:
        report.fields.append(field_label(F))
        pts = projective_points(n, F)
        P = len(pts)
        total = P ** len(shared)
        chunk = 1 << 14
        if total <= budget:
            for start in range(0, total, chunk):
                flat = np.arange(start, min(total, start + chunk))
                idx = np.unravel_index(flat, (P,) * len(shared))
                coords = {s: pts[idx[k]] for k, s in enumerate(shared)}
                _collect_low_rank(instance, j, i, F, coords, report)
        else:
            rng = np.random.Generator(np.random.PCG64([seed, j, i, F.order]))
            for start in range(0, budget, chunk):
                K = min(chunk, budget - start)
                coords = {s: pts[rng.integers(P, size=K)] for s in shared}
                _collect_low_rank(instance, j, i, F, coords, report)
        if report.witnesses and not exhaustive:
            break
    if report.witnesses:
        report.verdict = "exceptional-locus-nonempty"
    return report


def _collect_low_rank(instance, j, i, F, coords, report):
    S = slice_matrices_batch(instance, j, i, coords, F)
    low = batch_minors_vanish(F, S, instance.n)
    report.tested += len(low)
    seen = {w for w in report.witnesses}
    for r in np.nonzero(low)[0]:
        pt = MultiProjPoint(F, tuple((s, tuple(coords[s][r])) for s in sorted(coords)))
        if pt not in seen:
            seen.add(pt)
            report.witnesses.append(pt)
