"""Independent degree-counting oracle for the pullback of the exchanged class.

For the flop ``X_j -> X_i`` the new factor-``j`` coordinates are a row of the
adjugate of the slice matrix ``S(j, i)``.  That row is a vector of forms of
some multidegree ``e`` with a fixed component ``Z``, and the pulled-back class
is ``e - [Z]``.  Everything is measured on points over finite fields:

* ``e`` from how the row scales when one factor is scaled;
* ``[Z]`` by matching the zero set of the row, on curve slices and at every
  level of a field tower, against the coordinate hyperplanes;
* a count of the zeros of a general section ``lambda . row`` away from ``Z``,
  summed over closed points of the tower, which must equal the intersection
  number of ``e - [Z]`` with the slice.

The same answer is required from every prime.  Only ``n = 1`` is supported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from ..exactnum import GF, FieldSpec, batch_minors_vanish
from ..flopengine import FlopMap
from ..tensorcore import Instance, contract, slice_matrices_batch
from ..varprobe import projective_points
from .lattice import CalibrationUnavailable, basis, intersection_number


class OracleInconclusive(RuntimeError):
    pass


def mobius(m: int) -> int:
    out, k = 1, 2
    while k * k <= m:
        if m % k == 0:
            m //= k
            if m % k == 0:
                return 0
            out = -out
        k += 1
    return -out if m > 1 else out


def geometric_count(level_counts: Sequence[int]) -> int:
    """Number of geometric points of degree at most ``len(level_counts)``
    from the rational counts over ``F_{p^t}``, ``t = 1, 2, ...``."""
    total = 0
    for d in range(1, len(level_counts) + 1):
        closed = sum(mobius(d // e) * level_counts[e - 1] for e in range(1, d + 1) if d % e == 0)
        if closed % d:
            raise OracleInconclusive(f"level counts {list(level_counts)} are not point counts")
        total += closed  # d * (closed / d)
    return total


@dataclass
class SliceRecord:
    fixed: dict
    level_counts: list[int]
    predicted: int
    lam: tuple
    base_levels: list[int]
    row: int = 0

    def to_json(self) -> dict:
        return {"fixed": {str(k): list(v) for k, v in sorted(self.fixed.items())},
                "zero_counts": self.level_counts, "predicted": self.predicted,
                "section": list(self.lam), "adjugate_row": self.row, "base_counts": self.base_levels}


@dataclass
class OracleResult:
    flop: tuple[int, int]
    target_class: int
    labels: tuple[int, ...]
    vector: tuple[int, ...]
    primes: tuple[int, ...]
    multidegree: tuple[int, ...] = ()
    base_class: int | None = None
    slices: dict = dc_field(default_factory=dict)

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.labels, self.vector))

    def to_json(self) -> dict:
        return {"flop": list(self.flop), "target_class": self.target_class, "labels": list(self.labels),
                "vector": list(self.vector), "primes": list(self.primes),
                "multidegree": list(self.multidegree), "base_class": self.base_class,
                "slices": {str(p): [s.to_json() for s in recs] for p, recs in sorted(self.slices.items())}}


# -- evaluation of the adjugate row --------------------------------------------------------

def _unit(n: int, k: int) -> np.ndarray:
    v = np.zeros(n + 1, dtype=np.int64)
    v[k] = 1
    return v


def _row_forms(j: int, i: int, a: int) -> list[tuple[int, int, int]]:
    """Row ``a`` of adj S for a 2x2 matrix S (rows slot j, columns slot i) as
    (sign, row index, column index) per entry."""
    # adj [[s00, s01], [s10, s11]] = [[s11, -s01], [-s10, s00]]
    return [(1, 1, 1), (-1, 0, 1)] if a == 0 else [(-1, 1, 0), (1, 0, 0)]


def _kappa(inst: Instance, j: int, i: int, a: int, coords: dict, F: FieldSpec) -> np.ndarray:
    """Row ``a`` of adj S(j, i) at batched shared coordinates: shape (K, 2)."""
    S = slice_matrices_batch(inst, j, i, coords, F)
    vals = []
    for sign, r, c in _row_forms(j, i, a):
        v = S[..., r, c]
        vals.append(F.neg(v) if sign < 0 else v)
    return np.stack(vals, axis=-1)


def _kappa_gradient(inst: Instance, j: int, i: int, a: int, s: int, coords: dict, F: FieldSpec) -> np.ndarray:
    """d kappa_b / d x^s_r at batched coordinates: shape (K, 2, 2) [b, r]."""
    others = {t: v for t, v in coords.items() if t != s}
    out = []
    for sign, r, c in _row_forms(j, i, a):
        g = contract(inst, {**others, j: _unit(1, r), i: _unit(1, c)}, F)
        out.append(F.neg(g) if sign < 0 else g)
    return np.stack(out, axis=-2)


def _curve_points(inst: Instance, j: int, fixed: dict, F: FieldSpec) -> dict[int, np.ndarray]:
    """All points of ``X_j`` with the ``fixed`` factors held, over ``F``."""
    amb = basis(inst.N, j)
    free = [s for s in amb if s not in fixed]
    *rest, t = free
    pts = projective_points(inst.n, F)
    P = len(pts)
    idx = np.indices((P,) * len(rest)).reshape(len(rest), -1)
    coords = {s: pts[idx[k]] for k, s in enumerate(rest)}
    K = idx.shape[1]
    coords.update({s: np.broadcast_to(np.asarray(v), (K, inst.n + 1)) for s, v in fixed.items()})
    S = slice_matrices_batch(inst, j, t, coords, F)                    # (K, 2, 2)
    vals = F.add(F.mul(S[:, None, :, 0], pts[None, :, 0:1]), F.mul(S[:, None, :, 1], pts[None, :, 1:2]))
    ki, pi = np.nonzero(np.all(vals == 0, axis=-1))
    out = {s: np.ascontiguousarray(coords[s][ki]) for s in coords}
    out[t] = pts[pi]
    return out


def _transversal(inst: Instance, j: int, i: int, a: int, lam, fixed: dict, pts: dict, F: FieldSpec) -> np.ndarray:
    """Simple zeros of ``lam . kappa`` on the slice curve: the affine Jacobian
    of (model equations, section) in the free factors is invertible."""
    amb = basis(inst.N, j)
    free = [s for s in amb if s not in fixed]
    K = len(pts[amb[0]])
    if K == 0:
        return np.zeros(0, dtype=bool)
    cols = []
    lam = np.asarray(lam, dtype=np.int64)
    for s in free:
        G = slice_matrices_batch(inst, j, s, {r: pts[r] for r in amb if r != s}, F)   # (K, 2[m], 2[r])
        if s == i:
            sec = np.zeros((K, 2), dtype=np.int64)
        else:
            D = _kappa_gradient(inst, j, i, a, s, {r: pts[r] for r in amb if r not in (s, i)}, F)  # (K, 2[b], 2[r])
            sec = F.add(F.mul(lam[0], D[:, 0, :]), F.mul(lam[1], D[:, 1, :]))
        block = np.concatenate([G, sec[:, None, :]], axis=1)                       # (K, 3, 2)
        piv = np.argmax(pts[s] != 0, axis=-1)
        for r in range(2):
            cols.append(np.where((piv != r)[:, None], block[:, :, r], 0))
    J = np.stack(cols, axis=-1)                                                    # (K, 3, free)
    return ~batch_minors_vanish(F, J, 3)


def degree_count_pullback(fm: FlopMap | None, target_class: int, primes: Sequence[int] = (3, 5),
                          tower: int = 3, seed: int = 0, slices: int = 2, model: int = 0,
                          instance: Instance | None = None, max_sections: int = 6,
                          max_redraws: int = 8) -> OracleResult:
    """Class on the source of the pullback of ``H_{target_class}``.

    ``fm=None`` stands for the identity of ``X_model`` (needs ``instance``).
    """
    if fm is None:
        if instance is None:
            raise ValueError("identity pullback needs the instance")
        labels = basis(instance.N, model)
        if target_class not in labels:
            raise ValueError(f"H_{target_class} is not a class on X_{model}")
        return OracleResult((model, model), target_class, labels,
                            tuple(1 if lab == target_class else 0 for lab in labels), tuple(primes))
    inst, j, i = fm.instance, fm.source, fm.target
    if inst.n != 1:
        raise CalibrationUnavailable("the counting oracle handles n = 1 only")
    if inst.N < 3:
        raise CalibrationUnavailable("models must have positive dimension (N >= 3)")
    labels = basis(inst.N, j)
    target_labels = basis(inst.N, i)
    if target_class not in target_labels:
        raise ValueError(f"H_{target_class} is not a class on X_{i}")
    if target_class != j:
        # shared classes: the coordinates are kept, so the pullback is the class itself
        return OracleResult(fm.pair, target_class, labels,
                            tuple(1 if lab == target_class else 0 for lab in labels), tuple(primes))
    results = {}
    details = {}
    for p in primes:
        vec, md, zlab, recs = _oracle_one_prime(inst, j, i, p, tower, seed, slices, max_sections, max_redraws)
        results[p] = (vec, md, zlab)
        details[p] = recs
    answers = {v for v in results.values()}
    if len(answers) != 1:
        raise OracleInconclusive(f"primes disagree: {results}")
    vec, md, zlab = answers.pop()
    return OracleResult(fm.pair, target_class, labels, vec, tuple(primes), md, zlab, details)


def _oracle_one_prime(inst, j, i, p, tower, seed, nslices, max_sections, max_redraws):
    n, N = inst.n, inst.N
    labels = basis(N, j)
    shared = inst.shared(j, i)
    fields = [GF(p, t) for t in range(1, tower + 1)]
    top = fields[-1]
    rng = np.random.Generator(np.random.PCG64([seed, j, i, p]))
    rows = tuple(range(n + 1))

    # 1. multidegree of each adjugate row, by scaling one factor at a time
    g = top.generator if top.k > 1 else _prime_generator(p)
    base = {s: top.random(rng, (16, n + 1)) for s in shared}
    degrees = {}
    for a in rows:
        k0 = _kappa(inst, j, i, a, base, top)
        md = []
        for s in labels:
            if s == i:
                md.append(0)
                continue
            scaled = dict(base)
            scaled[s] = top.mul(base[s], g)
            k1 = _kappa(inst, j, i, a, scaled, top)
            found = next((e for e in range(2 * n + 2)
                          if np.array_equal(k1, top.mul(k0, top.pow(g, e)))), None)
            if found is None:
                raise OracleInconclusive(f"adjugate row {a} is not homogeneous in factor {s}")
            md.append(found)
        degrees[a] = tuple(md)

    # 2. curve slices: fix N - 3 shared factors at rational points, preferring
    # distinct factor choices; candidates are tried without replacement
    combos = list(itertools.combinations(shared, N - 3))
    pts1 = projective_points(n, GF(p))
    cands = [(c, t) for c in combos for t in itertools.product(range(len(pts1)), repeat=len(c))]
    cands = [cands[k] for k in rng.permutation(len(cands))]
    want = max(1, min(nslices, len(combos)))
    # spares replace slices whose section counts are hidden by the base
    stock = want + 3
    slice_data, used, attempts = [], set(), 0
    for pass_ in range(2):
        for fixset, choice in cands:
            if len(slice_data) >= stock or attempts >= max_redraws * stock:
                break
            if pass_ == 0 and fixset in used:
                continue
            fixed = {s: pts1[c] for s, c in zip(fixset, choice)}
            if any(all(np.array_equal(fixed[s], f[s]) for s in fixset) for f, _ in slice_data if set(f) == set(fixset)):
                continue
            attempts += 1
            levels = [_curve_points(inst, j, fixed, F) for F in fields]
            if _slice_is_clean(inst, j, fixed, levels, p):
                slice_data.append((fixed, levels))
                used.add(fixset)
    if not slice_data:
        raise OracleInconclusive(f"no clean curve slice in {attempts} attempts over GF({p})")

    # 3. identify the fixed component of each row among the coordinate hyperplanes
    vectors = {}
    zlabs = {}
    for a in rows:
        candidates = None
        seen_nonempty = False
        for fixed, levels in slice_data:
            for F, pts in zip(fields, levels):
                kap = _kappa(inst, j, i, a, {s: pts[s] for s in shared}, F)
                zmask = np.all(kap == 0, axis=-1)
                seen_nonempty |= bool(zmask.any())
                here = {r for r in labels if r not in fixed
                        for b in range(n + 1) if np.array_equal(zmask, pts[r][:, b] == 0)}
                candidates = here if candidates is None else candidates & here
        if not seen_nonempty or not candidates or len(candidates) != 1:
            raise OracleInconclusive(f"fixed component of row {a} not identified (candidates {candidates})")
        zlabs[a] = candidates.pop()
        vectors[a] = tuple(m - (1 if lab == zlabs[a] else 0) for lab, m in zip(labels, degrees[a]))
    if len(set(vectors.values())) != 1:
        raise OracleInconclusive(f"adjugate rows disagree: {vectors}")
    vec = vectors[0]

    # 4. count zeros of a general section off the fixed component
    records = []
    lam_pool = [tuple(int(x) for x in v) for v in projective_points(n, GF(p))]
    rng.shuffle(lam_pool)
    trials = [(a, lam) for lam in lam_pool[:max_sections] for a in rows]
    for fixed, levels in slice_data:
        exps_fixed = [1 if lab in fixed else 0 for lab in labels]
        predicted = 0
        for pos, lab in enumerate(labels):
            if vec[pos]:
                e = list(exps_fixed)
                e[pos] += 1
                predicted += vec[pos] * intersection_number(n, N, e)
        ok = None
        for a, lam in trials:
            counts, base_counts, good = [], [], True
            for F, pts in zip(fields, levels):
                kap = _kappa(inst, j, i, a, {s: pts[s] for s in shared}, F)
                sec = F.add(F.mul(lam[0], kap[:, 0]), F.mul(lam[1], kap[:, 1]))
                is_base = np.all(kap == 0, axis=-1)
                zero = (sec == 0) & ~is_base
                idx = np.nonzero(zero)[0]
                sub = {s: v[idx] for s, v in pts.items()}
                if not _transversal(inst, j, i, a, lam, fixed, sub, F).all():
                    good = False
                    break
                counts.append(int(zero.sum()))
                base_counts.append(int(is_base.sum()))
            if not good:
                continue
            got, hidden = geometric_count(counts), geometric_count(base_counts)
            if got == predicted:
                ok = SliceRecord({s: tuple(int(x) for x in v) for s, v in fixed.items()},
                                 counts, predicted, lam, base_counts, a)
                break
            # zeros on the base are invisible (with any multiplicity); only an
            # excess, or a deficit with no base points at all, is a contradiction
            if got > predicted or hidden == 0:
                raise OracleInconclusive(f"section count {got} contradicts the predicted degree {predicted}"
                                         f" over GF({p})")
        if ok is not None:
            records.append(ok)
        if len(records) == want:
            break
    if not records:
        raise OracleInconclusive(f"no general section matched the predicted degree over GF({p})")
    return vec, degrees[0], zlabs[0], records


def _prime_generator(p: int) -> int:
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in _factor(p - 1)):
            return g
    return 1


def _factor(m: int) -> list[int]:
    out, k = [], 2
    while k * k <= m:
        if m % k == 0:
            out.append(k)
            while m % k == 0:
                m //= k
        k += 1
    if m > 1:
        out.append(m)
    return out


def _slice_is_clean(inst: Instance, j: int, fixed: dict, levels: list[dict], p: int) -> bool:
    """Degenerate slices are redrawn.  For every free factor the fibres over
    rational points of that factor must have at most the predicted number of
    geometric points, with equality for at least one fibre (fewer means
    ramification, more means a component inside a fibre)."""
    n, N = inst.n, inst.N
    labels = basis(N, j)
    exps_fixed = [1 if lab in fixed else 0 for lab in labels]
    for pos, r in enumerate(labels):
        if r in fixed:
            continue
        e = list(exps_fixed)
        e[pos] += 1
        predicted = intersection_number(n, N, e)
        F1 = GF(p)
        best = 0
        for pt in projective_points(n, F1):
            counts = [int(np.all(pts[r] == pt, axis=-1).sum()) for pts in levels]
            try:
                got = geometric_count(counts)
            except OracleInconclusive:
                return False
            if got > predicted:
                return False
            best = max(best, got)
        if best != predicted:
            return False
    return True
