"""Outer boundary walk and bulge detection on a GNG graph.

Bulge candidates come from boolean powers of ``A - B``, where ``A`` is the
adjacency of the GNG graph and ``B`` that of its boundary subgraph. In the
boolean algebra used here ``M > 0`` maps nonzero entries to 1, ``+`` is OR
and ``X - Y`` is ``X and not Y``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .geometry import points_in_polygon
from .gng import GngGraph


class NoBoundaryCycle(ValueError):
    pass


class BulgeKind(str, Enum):
    FINGER = "finger"
    STICKING = "sticking-fingers"
    WRIST = "wrist"


# (walk lengths in A - B, walk lengths in B) per kind
FORMULAS = {
    BulgeKind.FINGER: ((2,), (3, 4)),
    BulgeKind.STICKING: ((4, 5), (6, 7, 8)),
    BulgeKind.WRIST: ((6, 7), (8, 9, 10, 11)),
}


@dataclass(frozen=True)
class BoundaryCycle:
    order: tuple[int, ...]  # clockwise on screen, starting at the leftmost vertex
    B: np.ndarray  # (n, n) bool, boundary edges only
    n_vertices: int

    def __len__(self) -> int:
        return len(self.order)

    @cached_property
    def _index(self) -> dict[int, int]:
        pos: dict[int, int] = {}
        for k, v in enumerate(self.order):
            pos.setdefault(v, k)
        return pos

    def index(self) -> dict[int, int]:
        """First position of each boundary vertex in ``order``."""
        return self._index

    def arc(self, i: int, j: int) -> list[int]:
        """Clockwise run of positions ``i..j`` inclusive."""
        n = len(self.order)
        return [(i + k) % n for k in range(((j - i) % n) + 1)]

    def vertices_at(self, positions) -> list[int]:
        return [self.order[k] for k in positions]


@dataclass(frozen=True)
class Bulge:
    kind: BulgeKind
    basic: tuple[int, int]  # span runs clockwise from basic[0] to basic[1]
    span: tuple[int, ...]  # boundary positions (indices into cycle.order)
    span_vertices: tuple[int, ...]
    interior: frozenset
    h_distance: int

    @property
    def start(self) -> int:
        return self.span[0]

    @property
    def end(self) -> int:
        return self.span[-1]


def _largest_component(g: GngGraph) -> np.ndarray:
    a = g.adjacency()
    n_comp, labels = connected_components(a, directed=False)
    if n_comp == 1:
        return np.ones(g.n_vertices, dtype=bool)
    sizes = np.bincount(labels)
    warnings.warn(f"graph has {n_comp} components; using the largest "
                  f"({sizes.max()} of {g.n_vertices} vertices)", stacklevel=3)
    return labels == int(np.argmax(sizes))


def _cancel_backtracks(seq: list[int]) -> list[int]:
    # Tree-like appendages are walked out and back; drop u,v,u excursions.
    seq = list(seq)
    changed = True
    while changed and len(seq) >= 3:
        changed = False
        n = len(seq)
        for k in range(n):
            if seq[(k - 1) % n] == seq[(k + 1) % n]:
                drop = {k, (k + 1) % n}
                seq = [v for idx, v in enumerate(seq) if idx not in drop]
                changed = True
                break
    if len(seq) == 2 and seq[0] != seq[1]:
        return []
    return seq


def extract_boundary(g: GngGraph) -> BoundaryCycle:
    """Gift-wrapping walk around the outer face.

    Starting at the leftmost vertex (topmost on ties) with a virtual
    predecessor straight above it, each step moves to the neighbour reached
    first when sweeping clockwise (on screen) from the direction back to the
    previous vertex. The walk ends when the first directed edge repeats.
    """
    if g.n_vertices < 3:
        raise NoBoundaryCycle("no boundary cycle: fewer than 3 vertices")
    keep = _largest_component(g)
    nbrs = [[j for j in row if keep[j]] if keep[i] else [] for i, row in enumerate(g.neighbors())]
    pos = g.positions

    cand = np.flatnonzero(keep)
    start = int(min(cand, key=lambda i: (pos[i, 0], pos[i, 1], i)))
    if not nbrs[start]:
        raise NoBoundaryCycle("no boundary cycle: isolated start vertex")

    def next_vertex(cur: int, back_angle: float) -> int:
        best, best_phi = -1, math.inf
        for w in sorted(nbrs[cur]):
            ang = math.atan2(pos[w, 1] - pos[cur, 1], pos[w, 0] - pos[cur, 0])
            phi = (ang - back_angle) % (2 * math.pi)
            if phi <= 1e-15:
                phi = 2 * math.pi
            if phi < best_phi:
                best, best_phi = w, phi
        return best

    first = next_vertex(start, -math.pi / 2)
    walk = [start]
    prev, cur = start, first
    limit = 2 * int(sum(len(x) for x in nbrs)) + 4
    while True:
        back = math.atan2(pos[prev, 1] - pos[cur, 1], pos[prev, 0] - pos[cur, 0])
        nxt = next_vertex(cur, back)
        if cur == start and nxt == first:
            break
        walk.append(cur)
        prev, cur = cur, nxt
        if len(walk) > limit:
            raise NoBoundaryCycle("no boundary cycle: walk did not close")

    seq = _cancel_backtracks(walk)
    if len(seq) < 3:
        raise NoBoundaryCycle("no boundary cycle")
    s = min(set(seq), key=lambda i: (pos[i, 0], pos[i, 1], i))
    k = seq.index(s)
    seq = seq[k:] + seq[:k]

    B = np.zeros((g.n_vertices, g.n_vertices), dtype=bool)
    for a, b in zip(seq, seq[1:] + seq[:1]):
        B[a, b] = B[b, a] = True
    return BoundaryCycle(tuple(seq), B, g.n_vertices)


def canonical_cycle(g: GngGraph, cycle: BoundaryCycle) -> BoundaryCycle:
    """Return ``cycle`` walked clockwise on screen from its first vertex.

    A counterclockwise walk (negative shoelace sum in image coordinates) is
    reversed in place, keeping the start vertex.
    """
    p = g.positions[list(cycle.order)]
    q = np.roll(p, -1, axis=0)
    if float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])) >= 0:
        return cycle
    order = (cycle.order[0],) + tuple(reversed(cycle.order[1:]))
    return BoundaryCycle(order, cycle.B, cycle.n_vertices)


def _bool_powers(M: np.ndarray, max_power: int) -> list[np.ndarray]:
    """``[M^1 > 0, ..., M^max_power > 0]`` in the boolean semiring."""
    Mf = M.astype(np.float32)
    out = [M.astype(bool)]
    cur = Mf
    for _ in range(max_power - 1):
        cur = ((cur @ Mf) > 0).astype(np.float32)
        out.append(cur > 0)
    return out


def candidate_pairs(A: np.ndarray, B: np.ndarray, kind: BulgeKind | str) -> set[tuple[int, int]]:
    A = np.asarray(A, dtype=bool)
    B = np.asarray(B, dtype=bool)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise ValueError(f"dimension mismatch: A{A.shape} vs B{B.shape}")
    kind = BulgeKind(kind)
    walk_lengths, boundary_lengths = FORMULAS[kind]
    inner = A & ~B
    ip = _bool_powers(inner, max(walk_lengths))
    bp = _bool_powers(B, max(boundary_lengths))
    reach = np.zeros_like(A)
    for k in walk_lengths:
        reach |= ip[k - 1]
    blocked = np.zeros_like(A)
    for k in boundary_lengths:
        blocked |= bp[k - 1]
    C = reach & ~blocked
    ii, jj = np.nonzero(np.triu(C, k=1))
    return {(int(i), int(j)) for i, j in zip(ii, jj)}


def _hop_distances(adj: np.ndarray, sources=None) -> np.ndarray:
    d = shortest_path(csr_matrix(adj), method="D", unweighted=True, indices=sources)
    d[np.isinf(d)] = -1
    return d.astype(np.int64)


def boundary_distances(cycle: BoundaryCycle) -> np.ndarray:
    """All-pairs hop distances in H (``-1`` where unreachable)."""
    return _hop_distances(cycle.B)


def graph_distances(g: GngGraph, sources) -> dict[int, np.ndarray]:
    sources = list(sources)
    if not sources:
        return {}
    d = _hop_distances(g.adjacency(), sources)
    return {s: d[k] for k, s in enumerate(sources)}


class _ArcAreas:
    """O(1) enclosed area for any boundary arc closed by its base segment."""

    def __init__(self, g: GngGraph, cycle: BoundaryCycle):
        p = g.positions[list(cycle.order)]
        q = np.roll(p, -1, axis=0)
        self.p = p
        self.prefix = np.concatenate([[0.0], np.cumsum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])])
        self.n = len(p)

    def __call__(self, i: int, j: int) -> float:
        """Area of the clockwise arc from position ``i`` to ``j``."""
        if i <= j:
            s = self.prefix[j] - self.prefix[i]
        else:
            s = self.prefix[self.n] - self.prefix[i] + self.prefix[j]
        pj, pi = self.p[j], self.p[i]
        s += pj[0] * pi[1] - pi[0] * pj[1]
        return 0.5 * abs(float(s))


def bulge_side(g: GngGraph, cycle: BoundaryCycle, u: int, v: int, areas: _ArcAreas | None = None) -> list[int]:
    """Positions of the boundary arc between ``u`` and ``v`` that bulges out.

    Of the two arcs, each closed by the straight base segment, the one
    enclosing the smaller area is the bulge; exact ties go to the shorter
    arc, then to the arc running clockwise from the earlier position.
    """
    areas = areas or _ArcAreas(g, cycle)
    idx = cycle.index()
    i, j = sorted((idx[u], idx[v]))
    n = len(cycle)
    len_a, len_b = j - i + 1, n - (j - i) + 1
    if (areas(i, j), len_a) <= (areas(j, i), len_b):
        return cycle.arc(i, j)
    return cycle.arc(j, i)


def interior_vertices(g: GngGraph, cycle: BoundaryCycle, span: list[int]) -> frozenset:
    """Vertices strictly inside the span closed by its base segment."""
    span_v = cycle.vertices_at(span)
    if len(span_v) < 3:
        return frozenset()
    ring = g.positions[span_v]
    others = np.setdiff1d(np.arange(g.n_vertices), np.asarray(span_v))
    if not len(others):
        return frozenset()
    inside = points_in_polygon(g.positions[others], ring)
    return frozenset(int(v) for v in others[inside])


def _make_bulge(g, cycle, kind, u, v, span) -> Bulge:
    span_v = tuple(cycle.vertices_at(span))
    return Bulge(kind=kind, basic=(span_v[0], span_v[-1]), span=tuple(span),
                 span_vertices=span_v, interior=interior_vertices(g, cycle, span),
                 h_distance=len(span) - 1)


WRIST_G_DISTANCES = (6, 7)


def detect_bulges(g: GngGraph, cycle: BoundaryCycle) -> list[Bulge]:
    """Fingers, fused fingers and the wrist, ordered clockwise along the walk.

    Candidates are taken greedily by decreasing H-distance, skipping any pair
    whose bulge side shares a boundary position with an accepted bulge.
    Single fingers go first, then one wrist (whose basic vertices must also
    sit at G-distance 6 or 7), then fused fingers.
    """
    A = g.adjacency()
    on_cycle = set(cycle.order)
    hd = boundary_distances(cycle)

    def ranked(kind):
        pairs = [(u, v) for u, v in candidate_pairs(A, cycle.B, kind)
                 if u in on_cycle and v in on_cycle]
        return sorted(pairs, key=lambda p: (-hd[p[0], p[1]], p))

    bulges: list[Bulge] = []
    taken: set[int] = set()
    areas = _ArcAreas(g, cycle)

    def accept(kind, pairs, limit=None):
        for u, v in pairs:
            if limit is not None and limit <= 0:
                return
            span = bulge_side(g, cycle, u, v, areas)
            if any(k in taken for k in span):
                continue
            bulges.append(_make_bulge(g, cycle, kind, u, v, span))
            taken.update(span)
            if limit is not None:
                limit -= 1

    accept(BulgeKind.FINGER, ranked(BulgeKind.FINGER))

    wrist = ranked(BulgeKind.WRIST)
    if wrist:
        gd = graph_distances(g, sorted({u for u, _ in wrist}))
        wrist = [(u, v) for u, v in wrist if gd[u][v] in WRIST_G_DISTANCES]
    accept(BulgeKind.WRIST, wrist, limit=1)

    accept(BulgeKind.STICKING, ranked(BulgeKind.STICKING))

    bulges.sort(key=lambda b: b.start)
    return bulges


def dumps_bulges(bulges: list[Bulge]) -> str:
    return "".join(f"bulge {b.kind.value} {b.basic[0]} {b.basic[1]} {b.h_distance} {len(b.interior)}\n"
                   for b in bulges)
