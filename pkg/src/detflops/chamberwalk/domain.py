"""Candidate fundamental domains for the group acting on the movable cone.

The starting candidate is the convex hull of the orbit representatives.  It is
tested against every translate by a group element of word length at most
``R``: interiors must be disjoint and the translates must cover every chamber
that the walk explored.  Overlaps are removed with Dirichlet cuts
``<y, x> <= <y, g x>`` for a covector ``y`` positive on the candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .cones import ConeRP, cone_from_generators, cone_from_inequalities, cone_intersect, dot
from .tiling import NotClosed, TilingCertificate, manual_certificate, mat_det

_SAFE = 2 ** 20


class StabilizerObstruction(RuntimeError):
    pass


@dataclass
class FundamentalDomainCandidate:
    cone: ConeRP
    radius: int
    ball_size: int
    status: str
    checks: list[str] = dc_field(default_factory=list)
    cuts: list[list[int]] = dc_field(default_factory=list)
    overlaps: list[list[list[int]]] = dc_field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    stabilizer_assumption: bool = True

    def to_json(self) -> dict:
        return {"generators": [list(g) for g in self.cone.generators],
                "facets": [list(f) for f in self.cone.facets], "ball_radius": self.radius,
                "ball_size": self.ball_size, "status": self.status, "certified": self.checks,
                "cuts": self.cuts, "overlaps": self.overlaps,
                "stabilizer_assumption": self.stabilizer_assumption,
                "beyond_ball_certified": False}


# -- the ball of group elements ------------------------------------------------------------

def _dtype_for(arrs) -> type:
    big = max((int(np.abs(a).max()) for a in arrs if a.size), default=0)
    return np.int64 if big < _SAFE else object


def group_ball(generators, N: int, R: int) -> tuple[np.ndarray, np.ndarray]:
    """All products of at most ``R`` generators or inverses, deduplicated,
    with their inverses.  Index 0 is the identity."""
    gens = [np.array(g, dtype=object) for g in generators]
    step = []
    for g in gens:
        ginv = np.array(_int_inverse(g), dtype=object)
        step.append((g, ginv))
        step.append((ginv, g))
    ident = np.eye(N, dtype=np.int64).astype(object)
    elems = [ident]
    invs = [ident]
    seen = {_key(ident)}
    frontier = [(ident, ident)]
    for _ in range(R):
        if not frontier:
            break
        F = np.stack([f for f, _ in frontier])
        Finv = np.stack([f for _, f in frontier])
        dt = _dtype_for([F.astype(object)] + [s for s, _ in step])
        F, Finv = F.astype(dt), Finv.astype(dt)
        nxt = []
        for s, sinv in step:
            prod = F @ s.astype(dt)
            prod_inv = sinv.astype(dt) @ Finv
            for m, minv in zip(prod, prod_inv):
                k = _key(m)
                if k in seen:
                    continue
                seen.add(k)
                elems.append(m.astype(object))
                invs.append(minv.astype(object))
                nxt.append((m, minv))
        frontier = nxt
    return np.stack(elems), np.stack(invs)


def _key(m) -> tuple:
    return tuple(int(x) for x in np.asarray(m).ravel())


def _int_inverse(g) -> list[list[int]]:
    from .tiling import mat_inverse, as_matrix
    return [list(r) for r in mat_inverse(as_matrix(g))]


# -- checks --------------------------------------------------------------------------------

def _arr(rows, dtype=object) -> np.ndarray:
    return np.array([list(r) for r in rows], dtype=object).astype(dtype)


def _maps_into(elems: np.ndarray, facets: np.ndarray, gens: np.ndarray) -> np.ndarray:
    """Mask of group elements ``g`` with ``g(cone B) in cone A`` given the
    facets of ``A`` and generator columns of ``B``."""
    dt = _dtype_for([elems.astype(object), facets.astype(object), gens.astype(object)])
    vals = np.einsum("fi,kij,jm->kfm", facets.astype(dt), elems.astype(dt), gens.astype(dt))
    return (vals >= 0).all(axis=(1, 2))


def _stabilizers(elems, invs, chambers: list[ConeRP]) -> list[int]:
    bad = []
    for C in chambers:
        F = _arr(C.facets)
        G = _arr(C.generators).T
        mask = _maps_into(elems, F, G) & _maps_into(invs, F, G)
        mask[0] = False
        bad.extend(int(k) for k in np.nonzero(mask)[0])
    return sorted(set(bad))


def _overlapping(cone: ConeRP, elems, invs, indices=None) -> list[int]:
    """Indices ``k`` with ``cone`` and ``elems[k] cone`` sharing interior points."""
    ks = np.arange(1, len(elems)) if indices is None else np.asarray(indices, dtype=np.int64)
    if len(ks) == 0:
        return []
    hits = _overlap_mask(cone, elems[ks], invs[ks])
    return [int(k) for k in ks[hits]]


def _overlap_mask(cone: ConeRP, E: np.ndarray, Einv: np.ndarray) -> np.ndarray:
    dt = _dtype_for([E.astype(object), Einv.astype(object)])
    F = _arr(cone.facets, dt)
    G = _arr(cone.generators, dt).T
    E, Einv = E.astype(dt), Einv.astype(dt)
    # a facet of the cone weakly separates the translate, or vice versa
    sep1 = (np.einsum("fi,kij,jm->kfm", F, E, G) <= 0).all(axis=2).any(axis=1)
    sep2 = (np.einsum("fi,kij,jm->kfm", F, Einv, G) <= 0).all(axis=2).any(axis=1)
    out = np.zeros(len(E), dtype=bool)
    for k in np.nonzero(~(sep1 | sep2))[0]:
        g = E[k].astype(object)
        tr = cone_from_generators([tuple(int(x) for x in g.dot(np.array(v, dtype=object))) for v in cone.generators])
        out[k] = cone_intersect(cone, tr).is_full_dim
    return out


def _covered(C: ConeRP, cone: ConeRP, elems, invs, depth: int = 3) -> bool:
    """``C`` lies in the union of the translates ``elems[k] cone``."""
    F = _arr(cone.facets)
    G = _arr(C.generators).T
    if _maps_into(invs, F, G).any():
        return True
    if depth == 0:
        return False
    # split C along the facets of one translate meeting it and recurse
    for k in range(len(elems)):
        g, ginv = elems[k], invs[k]
        facets = [tuple(int(x) for x in np.array(f, dtype=object).dot(ginv)) for f in cone.facets]
        tr = cone_from_inequalities(facets, (), C.dim)
        if not cone_intersect(C, tr).is_full_dim:
            continue
        pieces = []
        for t, f in enumerate(facets):
            piece = cone_from_inequalities(C.facets + tuple(facets[:t]) + (tuple(-x for x in f),), C.equations, C.dim)
            if piece.is_full_dim:
                pieces.append(piece)
        return all(_covered(p, cone, elems, invs, depth - 1) for p in pieces)
    return False


def fundamental_domain(cert: TilingCertificate, R: int = 4, max_cuts: int = 64) -> FundamentalDomainCandidate:
    """Certify a fundamental domain candidate on the ball of radius ``R``."""
    if cert.status != "closed":
        raise NotClosed("a fundamental domain needs a closed tiling certificate")
    N = cert.N
    gens = []
    for g in cert.generators:
        if abs(mat_det(g.matrix)) != 1:
            raise StabilizerObstruction(f"generator {g.word} is not unimodular")
        gens.append(g.matrix)
    elems, invs = group_ball(gens, N, R)
    checks = [f"ball of radius {R}: {len(elems)} elements"]

    rep_cones = [r.chamber for r in cert.orbit_reps]
    stab = _stabilizers(elems, invs, rep_cones)
    if stab:
        raise StabilizerObstruction(f"{len(stab)} nontrivial ball elements fix a representative chamber")
    checks.append("no ball element fixes a representative chamber")

    start = cone_from_generators([v for c in rep_cones for v in c.generators])
    if not start.is_full_dim:
        raise StabilizerObstruction("representative chambers do not span a full-dimensional cone")
    cone = start
    y = np.array([sum(f[k] for f in start.facets) for k in range(N)], dtype=object)
    cuts: list[list[int]] = []
    overlaps_seen: list[list[list[int]]] = []
    over = _overlapping(cone, elems, invs)
    rounds = 0
    while over:
        rounds += 1
        if len(cuts) >= max_cuts:
            break
        new = []
        for k in over:
            c = [int(x) for x in y.dot(elems[k]) - y]
            if not any(c):
                raise StabilizerObstruction("Dirichlet covector is fixed by an overlapping element")
            overlaps_seen.append([[int(x) for x in row] for row in elems[k]])
            if c not in cuts:
                cuts.append(c)
                new.append(c)
        if not new:
            break
        cone = cone_from_inequalities(cone.facets + tuple(tuple(c) for c in new), cone.equations, N)
        over = _overlapping(cone, elems, invs)
    if cuts:
        checks.append(f"{len(cuts)} Dirichlet cuts in {rounds} rounds")
    if over:
        return FundamentalDomainCandidate(cone, R, len(elems), "overlapping", checks, cuts, overlaps_seen)
    if not cone.is_full_dim or not any(cone.contains_interior(c.interior_point()) for c in rep_cones[:1]):
        return FundamentalDomainCandidate(cone, R, len(elems), "degenerate", checks, cuts, overlaps_seen)
    checks.append(f"interior disjoint from all {len(elems) - 1} nontrivial translates in the ball")
    if len(elems) <= 1000:
        _pairwise(cone, elems, invs)
        checks.append("pairwise interior-disjoint within the whole ball")
    else:
        half, half_inv = group_ball(gens, N, R // 2)
        _pairwise(cone, half, half_inv)
        checks.append(f"pairwise interior-disjoint within the ball of radius {R // 2} ({len(half)} elements)")

    for ch in cert.chambers:
        if not _covered(ch.chamber, cone, elems, invs):
            return FundamentalDomainCandidate(cone, R, len(elems), "not-covering", checks, cuts, overlaps_seen)
    checks.append(f"translates cover all {len(cert.chambers)} explored chambers")
    return FundamentalDomainCandidate(cone, R, len(elems), "certified", checks, cuts, overlaps_seen)


def _pairwise(cone: ConeRP, elems, invs) -> None:
    """Translates by any two distinct ball elements have disjoint interiors."""
    K = len(elems)
    a, b = np.triu_indices(K, 1)
    dt = _dtype_for([elems.astype(object)])
    H = np.einsum("kij,kjl->kil", invs[a].astype(dt), elems[b].astype(dt))
    Hinv = np.einsum("kij,kjl->kil", invs[b].astype(dt), elems[a].astype(dt))
    hits = _overlap_mask(cone, H, Hinv)
    if hits.any():
        k = int(np.nonzero(hits)[0][0])
        raise StabilizerObstruction(f"translates {int(a[k])} and {int(b[k])} overlap")


def toy_shear_certificate() -> TilingCertificate:
    """The plane action of the shear ``[[1, 1], [0, 1]]`` on the chambers
    ``Cone((k, 1), (k + 1, 1))`` of the upper half plane."""
    return manual_certificate(2, [[(0, 1), (1, 1)]], [[[1, 1], [0, 1]], [[1, -1], [0, 1]]])
