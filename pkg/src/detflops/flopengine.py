"""Pointwise evaluation of the flops between the models.

For ``j != i`` the models ``X_j`` and ``X_i`` share the factors outside
``{j, i}``.  A point of ``X_j`` keeps its shared coordinates and trades its
factor-``i`` vector for the kernel of the slice matrix with rows in slot ``i``
and columns in slot ``j``.  That kernel is a single projective point unless
the matrix drops rank twice, which is exactly the exceptional locus.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .exactnum import GF, FieldSpec, WrongRank, corank1_kernel, matrix_det, matrix_rank
from .tensorcore import Instance, model, slice_matrix
from .varprobe import (MultiProjPoint, NotOnVariety, SampleFailure, equations_vanish, field_label,
                       sample_point)


class ExceptionalPoint(ValueError):
    def __init__(self, msg: str, step: int | None = None, rank: int | None = None):
        self.step = step
        self.rank = rank
        super().__init__(msg)


@dataclass(frozen=True)
class FlopMap:
    instance: Instance
    source: int
    target: int

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("a flop needs two distinct models")
        self.instance._check_slot(self.source)
        self.instance._check_slot(self.target)

    @property
    def shared(self) -> tuple[int, ...]:
        return self.instance.shared(self.source, self.target)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.source, self.target)

    def reverse(self) -> "FlopMap":
        return FlopMap(self.instance, self.target, self.source)


def flop(instance: Instance, j: int, i: int) -> FlopMap:
    return FlopMap(instance, j, i)


def _require_on(instance: Instance, ell: int, point: MultiProjPoint):
    spec = model(instance, ell)
    if not equations_vanish(spec, point):
        raise NotOnVariety(f"{point} is not a point of X_{ell}")


def project_to_base(fm: FlopMap, point: MultiProjPoint) -> MultiProjPoint:
    """Forget the factor-``target`` coordinates of a point of ``X_source``."""
    _require_on(fm.instance, fm.source, point)
    base = point.restrict(fm.shared)
    S = slice_matrix(fm.instance, fm.source, fm.target, base.as_dict(), point.field)
    assert matrix_det(S).is_zero(), "image of a model point must lie on the determinantal base"
    return base


def flop_matrix(fm: FlopMap, base: MultiProjPoint, via: str = "direct"):
    """Matrix whose kernel gives the new factor-``source`` vector.

    ``direct`` contracts with rows in slot ``target``; ``transpose`` builds the
    reverse slice and transposes it.  Both give identical matrices.
    """
    inst, j, i = fm.instance, fm.source, fm.target
    coords = base.as_dict()
    if via == "direct":
        return slice_matrix(inst, i, j, coords, base.field)
    if via == "transpose":
        return slice_matrix(inst, j, i, coords, base.field).T
    raise ValueError(f"unknown evaluation route {via!r}")


def apply_flop(fm: FlopMap, point: MultiProjPoint, via: str = "direct", check: bool = True) -> MultiProjPoint:
    """Image of a point of ``X_source`` on ``X_target``."""
    if check:
        _require_on(fm.instance, fm.source, point)
    base = point.restrict(fm.shared)
    M = flop_matrix(fm, base, via)
    try:
        kern = corank1_kernel(M)
    except WrongRank as exc:
        raise ExceptionalPoint(f"{point} lies on the exceptional locus of the flop {fm.pair}"
                               f" (slice rank {exc.rank})", rank=exc.rank) from exc
    out = dict(base.coords)
    out[fm.source] = kern
    return MultiProjPoint.from_vectors(point.field, out)


# -- diagram check --------------------------------------------------------------------

@dataclass
class DiagramReport:
    flop: tuple[int, int]
    fields: list[str] = dc_field(default_factory=list)
    tested: int = 0
    failures: list[tuple[MultiProjPoint, str]] = dc_field(default_factory=list)
    exceptional_skipped: int = 0
    word: list[int] | None = None

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def verdict(self) -> str:
        return "commutes" if self.ok else "diagram-failure"

    def to_json(self) -> dict:
        out = {"flop": list(self.flop), "fields": self.fields, "tested": self.tested,
               "witnesses": [p.to_json() for p, _ in self.failures],
               "failures": [reason for _, reason in self.failures],
               "exceptional_skipped": self.exceptional_skipped, "verdict": self.verdict}
        if self.word is not None:
            out["word"] = list(self.word)
        return out


def _diagram_at(fm: FlopMap, point: MultiProjPoint) -> str | None:
    """Reason string when the square fails at ``point``, ``None`` when it
    commutes.  Raises ExceptionalPoint for points of the exceptional locus."""
    inst, j, i = fm.instance, fm.source, fm.target
    if not equations_vanish(model(inst, j), point):
        return "source-off-model"
    base = point.restrict(fm.shared)
    M = slice_matrix(inst, j, i, base.as_dict(), point.field)
    r = matrix_rank(M)
    if r == inst.n + 1:
        return "base-not-on-determinantal-locus"
    image = apply_flop(fm, point, check=False)
    if not equations_vanish(model(inst, i), image):
        return "target-equation-violation"
    if image.restrict(fm.shared) != base:
        return "base-mismatch"
    return None


def check_diagram(fm: FlopMap, points: Iterable[MultiProjPoint] | None = None, budget: int = 100,
                  field: FieldSpec | None = None, seed: int = 0, max_attempts: int | None = None) -> DiagramReport:
    """Check that the flop commutes with the two projections to the base.

    With explicit ``points`` every one is tested.  Otherwise points of
    ``X_source`` are sampled over ``field`` (default GF(7)) until ``budget``
    non-exceptional points have been tested.
    """
    report = DiagramReport(fm.pair)
    if points is None:
        field = field or GF(7)
        rng = np.random.Generator(np.random.PCG64([seed, fm.source, fm.target]))
        spec = model(fm.instance, fm.source)
        max_attempts = max_attempts or 10 * budget

        def gen():
            for _ in range(max_attempts):
                try:
                    yield sample_point(spec, field, rng)
                except SampleFailure:
                    return
        points = gen()
    labels = set()
    for pt in points:
        if report.tested >= budget and field is not None:
            break
        labels.add(field_label(pt.field))
        try:
            reason = _diagram_at(fm, pt)
        except ExceptionalPoint:
            report.exceptional_skipped += 1
            continue
        report.tested += 1
        if reason:
            report.failures.append((pt, reason))
    report.fields = sorted(labels)
    return report


# -- words --------------------------------------------------------------------------

@dataclass(frozen=True)
class WordEvaluator:
    """Composite of flops along a path of model indices."""

    instance: Instance
    word: tuple[int, ...]

    def __post_init__(self):
        if not self.word:
            raise ValueError("a word needs at least one model index")
        for a, b in zip(self.word, self.word[1:]):
            if a == b:
                raise ValueError(f"consecutive indices must differ: {self.word}")
            self.instance._check_slot(a)
        self.instance._check_slot(self.word[-1])

    @property
    def is_loop(self) -> bool:
        return self.word[0] == self.word[-1]

    def __call__(self, point: MultiProjPoint) -> MultiProjPoint:
        _require_on(self.instance, self.word[0], point)
        x = point
        for step, (a, b) in enumerate(zip(self.word, self.word[1:])):
            try:
                x = apply_flop(FlopMap(self.instance, a, b), x, check=False)
            except ExceptionalPoint as exc:
                raise ExceptionalPoint(f"step {step} ({a}->{b}): {exc}", step=step, rank=exc.rank) from exc
        return x


def compose_word(instance: Instance, word: Sequence[int]) -> WordEvaluator:
    return WordEvaluator(instance, tuple(int(w) for w in word))
