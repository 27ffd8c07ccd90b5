"""Walking the chambers of the movable cone across flop walls.

Every chamber is the nef cone of some model carried into ``N^1(X_0)`` by a
transport matrix.  Crossing the wall ``H_i = 0`` of a chamber of model ``l``
multiplies the transport on the right by the lattice map of the flop
``X_i -> X_l``.  A new chamber of a model that already has a representative is
identified with it by a lattice automorphism of ``N^1(X_0)``; those
automorphisms generate the group action.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field as dc_field
from typing import Mapping, Sequence

import numpy as np

from .cones import ConeRP, cone_from_generators, cone_intersect, is_face, separated

Matrix = tuple[tuple[int, ...], ...]


class InconsistentFan(RuntimeError):
    pass


class NotClosed(RuntimeError):
    pass


# -- integer matrix helpers -----------------------------------------------------------------

def as_matrix(m) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in m)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return as_matrix(np.asarray(a, dtype=object) @ np.asarray(b, dtype=object))


def mat_identity(N: int) -> Matrix:
    return tuple(tuple(1 if r == c else 0 for c in range(N)) for r in range(N))


def mat_inverse(m: Matrix) -> Matrix:
    """Exact inverse of a unimodular integer matrix."""
    from fractions import Fraction
    N = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(1 if r == c else 0) for c in range(N)] for r, row in enumerate(m)]
    for c in range(N):
        piv = next((r for r in range(c, N) if a[r][c] != 0), None)
        if piv is None:
            raise InconsistentFan("transport matrix is singular")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [x / p for x in a[c]]
        for r in range(N):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    inv = [[a[r][N + c] for c in range(N)] for r in range(N)]
    if any(x.denominator != 1 for row in inv for x in row):
        raise InconsistentFan("transport matrix is not unimodular")
    return as_matrix([[int(x) for x in row] for row in inv])


def mat_det(m: Matrix) -> int:
    from ..picardlattice.lattice import _det
    return _det(m)


def columns(m: Matrix) -> list[tuple[int, ...]]:
    return [tuple(row[c] for row in m) for c in range(len(m[0]))]


def _basis(N: int, ell: int) -> tuple[int, ...]:
    return tuple(k for k in range(N + 1) if k != ell)


def word_pushforward(mats: Mapping[tuple[int, int], Matrix], word: Sequence[int], N: int) -> Matrix:
    """Lattice map of the composite of the flops along ``word``."""
    out = mat_identity(N)
    for a, b in zip(word, word[1:]):
        out = mat_mul(mats[(a, b)], out)
    return out


# -- records -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ChamberNode:
    node_id: int
    model: int
    transport: Matrix
    chamber: ConeRP
    word: tuple[int, ...]
    parent: int | None = None

    @property
    def depth(self) -> int:
        return len(self.word) - 1

    def key(self):
        return self.chamber.generators

    def to_json(self) -> dict:
        return {"id": self.node_id, "model": self.model, "word": list(self.word),
                "transport": [list(r) for r in self.transport],
                "generators": [list(g) for g in self.chamber.generators]}


@dataclass(frozen=True)
class GroupElement:
    matrix: Matrix
    word: tuple[int, ...]

    def to_json(self) -> dict:
        return {"matrix": [list(r) for r in self.matrix], "word": list(self.word)}


@dataclass
class TilingCertificate:
    N: int
    orbit_reps: list[ChamberNode]
    generators: list[GroupElement]
    explored_depth: int
    walls: list[dict]
    status: str
    chambers: list[ChamberNode] = dc_field(default_factory=list)
    identifications: list[dict] = dc_field(default_factory=list)
    checks: list[str] = dc_field(default_factory=list)
    pushforwards: dict = dc_field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {"orbits": [r.to_json() for r in self.orbit_reps],
                "generators": [g.to_json() for g in self.generators],
                "status": self.status, "explored_depth": self.explored_depth,
                "walls": self.walls, "chambers": [c.to_json() for c in self.chambers],
                "checks": self.checks}


# -- the walk ------------------------------------------------------------------------------

def _normalize_pushforwards(pushforwards) -> dict[tuple[int, int], Matrix]:
    out = {}
    for key, m in pushforwards.items():
        mat = getattr(m, "matrix", m)
        out[(int(key[0]), int(key[1]))] = as_matrix(mat)
    return out


def chamber_bfs(N: int | object, pushforwards: Mapping, depth_limit: int = 3,
                check_fan: bool = True) -> TilingCertificate:
    """Breadth-first walk over chambers starting at ``Nef(X_0)``.

    ``N`` may be an instance (its ``N`` is used).  ``pushforwards`` maps the
    ordered pair ``(j, i)`` to the lattice map of ``X_j -> X_i``.
    """
    N = int(getattr(N, "N", N))
    mats = _normalize_pushforwards(pushforwards)
    slots = range(N + 1)

    def pf(j, i) -> Matrix:
        try:
            return mats[(j, i)]
        except KeyError:
            raise InconsistentFan(f"no lattice map for the flop {j} -> {i}") from None

    ident = mat_identity(N)
    root_cone = cone_from_generators(columns(ident))
    root = ChamberNode(0, 0, ident, root_cone, (0,))
    chambers: list[ChamberNode] = [root]
    by_key: dict = {root.key(): root}
    reps: dict[int, ChamberNode] = {0: root}
    walls: list[dict] = []
    idents: list[dict] = []
    gens: dict[Matrix, GroupElement] = {}
    queue = deque([root])
    open_frontier = False
    checks: list[str] = []

    while queue:
        node = queue.popleft()
        if node.depth >= depth_limit:
            open_frontier = True
            continue
        ell = node.model
        for i in slots:
            if i == ell:
                continue
            M = pf(i, ell)
            back = pf(ell, i)
            if mat_mul(back, M) != ident:
                raise InconsistentFan(f"flops {ell}->{i} and {i}->{ell} are not mutually inverse on N^1")
            T = mat_mul(node.transport, M)
            facet_pos = _basis(N, ell).index(i)
            cone = cone_from_generators(columns(T))
            if cone.generators in by_key:
                other = by_key[cone.generators]
                walls.append({"from": node.node_id, "to": other.node_id, "flop": [ell, i],
                              "facet": [list(g) for g in _facet_gens(node, facet_pos)]})
                _record_identification(i, T, node, node.word + (i,), reps, gens, idents)
                continue
            # the new chamber must sit on the far side of the crossed facet
            img_col = _basis(N, i).index(ell)
            if M[facet_pos][img_col] >= 0:
                raise InconsistentFan(f"flop {ell}->{i} does not cross the wall H_{i} = 0")
            for c, lab in enumerate(_basis(N, i)):
                if lab != ell and any(M[r][c] != (1 if _basis(N, ell)[r] == lab else 0) for r in range(N)):
                    raise InconsistentFan(f"flop {ell}->{i} moves the shared class H_{lab}")
            if check_fan:
                for other in chambers:
                    if not separated(cone, other.chamber) and cone_intersect(cone, other.chamber).is_full_dim:
                        raise InconsistentFan(f"chamber via {node.word + (i,)} overlaps chamber {other.word}")
            child = ChamberNode(len(chambers), i, T, cone, node.word + (i,), node.node_id)
            chambers.append(child)
            by_key[cone.generators] = child
            walls.append({"from": node.node_id, "to": child.node_id, "flop": [ell, i],
                          "facet": [list(g) for g in _facet_gens(node, facet_pos)]})
            if i in reps:
                _record_identification(i, T, child, child.word, reps, gens, idents)
            else:
                reps[i] = child
                queue.append(child)
    status = "frontier-open" if open_frontier else "closed"
    if status == "closed":
        checks.append("every wall of every orbit representative matched")
    cert = TilingCertificate(N, [reps[k] for k in sorted(reps)], list(gens.values()), depth_limit, walls,
                             status, chambers, idents, checks, mats)
    return cert


def _facet_gens(node: ChamberNode, pos: int) -> list[tuple[int, ...]]:
    cols = columns(node.transport)
    return sorted(c for k, c in enumerate(cols) if k != pos)


def _record_identification(model: int, T: Matrix, node: ChamberNode, path: tuple[int, ...], reps, gens, idents):
    """``T`` transports ``Nef(X_model)``; the representative of that model
    is carried onto it by ``g = T T_rep^{-1}``."""
    if model not in reps:
        # the chamber coincides with one of another model (degenerate data)
        return
    rep = reps[model]
    g = mat_mul(T, mat_inverse(rep.transport))
    if g == mat_identity(len(g)):
        return
    # loop: out along the representative's path, back along the new path
    word = rep.word + tuple(reversed(path))[1:]
    idents.append({"node": node.node_id, "rep": rep.node_id, "matrix": [list(r) for r in g], "word": list(word)})
    if g not in gens:
        gens[g] = GroupElement(g, word)


# -- generators ---------------------------------------------------------------------------

def _power_order(g: Matrix, bound: int = 120) -> int | None:
    N = len(g)
    ident = mat_identity(N)
    x = g
    for k in range(1, bound + 1):
        if x == ident:
            return k
        x = mat_mul(x, g)
    return None


def classify_generator(g: GroupElement) -> dict:
    ev = np.linalg.eigvals(np.asarray(g.matrix, dtype=float))
    radius = float(np.max(np.abs(ev)))
    order = _power_order(g.matrix)
    return {"det": mat_det(g.matrix), "spectral_radius": radius,
            "order": order if order is not None else "infinite"}


def bir_generators(cert: TilingCertificate, closure: bool = True) -> list[GroupElement]:
    """Deduplicated identifying automorphisms, each checked unimodular.

    With ``closure`` every product of two generators is replayed as a walk
    across walls and must land on the chamber ``g1 g2 Nef(X_0)``.
    """
    if cert.status != "closed":
        raise NotClosed("the tiling certificate is not closed")
    out = []
    seen = set()
    for g in cert.generators:
        if g.matrix in seen:
            continue
        if abs(mat_det(g.matrix)) != 1:
            raise InconsistentFan(f"generator {g.word} is not unimodular")
        if word_pushforward(cert.pushforwards, g.word, cert.N) != g.matrix:
            raise InconsistentFan(f"generator {g.word} disagrees with its word")
        seen.add(g.matrix)
        out.append(g)
    if closure:
        for g1 in out:
            for g2 in out:
                target = mat_mul(g1.matrix, g2.matrix)
                word = g2.word + g1.word[1:]
                T = walk(cert.N, cert.pushforwards, tuple(reversed(word)))
                if T != target:
                    raise NotClosed(f"product of {g1.word} and {g2.word} does not close")
    return out


def walk(N: int, mats: Mapping[tuple[int, int], Matrix], path: Sequence[int]) -> Matrix:
    """Transport after crossing walls along ``path`` from ``Nef(X_path[0])``,
    checking that each step crosses a wall of the current chamber."""
    T = mat_identity(N)
    for ell, i in zip(path, path[1:]):
        M = mats[(i, ell)]
        pos = _basis(N, ell).index(i)
        col = _basis(N, i).index(ell)
        if M[pos][col] >= 0:
            raise InconsistentFan(f"step {ell}->{i} does not cross a wall")
        T = mat_mul(T, M)
    return T


# -- fan checks ------------------------------------------------------------------------------

def verify_fan(cert: TilingCertificate) -> list[str]:
    """Every two distinct explored chambers meet in a common face."""
    facts = []
    ch = cert.chambers
    for a in range(len(ch)):
        for b in range(a + 1, len(ch)):
            A, B = ch[a].chamber, ch[b].chamber
            meet = cone_intersect(A, B)
            if meet.is_full_dim:
                raise InconsistentFan(f"chambers {ch[a].word} and {ch[b].word} overlap")
            if not (is_face(meet, A) and is_face(meet, B)):
                raise InconsistentFan(f"chambers {ch[a].word} and {ch[b].word} meet outside a common face")
    facts.append(f"fan property on {len(ch)} chambers ({len(ch) * (len(ch) - 1) // 2} pairs)")
    return facts


def check_group_invariance(cert: TilingCertificate) -> list[str]:
    """Each generator carries an explored chamber either onto an explored
    chamber or off the explored region (no partial overlaps)."""
    keys = {c.key() for c in cert.chambers}
    for g in cert.generators:
        ginv = mat_inverse(g.matrix)
        for c in cert.chambers:
            img = c.chamber.transform(g.matrix, ginv)
            if img.generators in keys:
                continue
            for other in cert.chambers:
                if not separated(img, other.chamber) and cone_intersect(img, other.chamber).is_full_dim:
                    raise InconsistentFan(f"generator {g.word} moves chamber {c.word} onto a partial overlap")
    return [f"{len(cert.generators)} generators preserve the explored chamber set"]


def manual_certificate(N: int, rep_generators: Sequence[Sequence[Sequence[int]]],
                       group: Sequence[Sequence[Sequence[int]]]) -> TilingCertificate:
    """Certificate from explicit data: one representative chamber per orbit
    (columns given as lists of vectors) and group generators.  Used for toy
    actions that do not come from an instance."""
    reps = []
    for k, gens in enumerate(rep_generators):
        T = as_matrix(np.array(gens, dtype=object).T)
        reps.append(ChamberNode(k, k, T, cone_from_generators(gens), (k,)))
    group_elems = [GroupElement(as_matrix(g), ()) for g in group]
    chambers = list(reps)
    nid = len(chambers)
    for g in group_elems:
        for r in reps:
            T = mat_mul(g.matrix, r.transport)
            chambers.append(ChamberNode(nid, r.model, T, cone_from_generators(columns(T)), ()))
            nid += 1
    return TilingCertificate(N, reps, group_elems, 1, [], "closed", chambers, [], ["manual"], {})
