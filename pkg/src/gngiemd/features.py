"""Per-bulge features and the padded six-cluster signature.

Path and count features are normalized so all seven weight components are
commensurate: D, Rb and Wb by the boundary walk length, Nb and Nd by the GNG
vertex budget. Aspect ratios floor the box width at the graph's median edge
length, which keeps every feature invariant under uniform scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import BoundaryCycle, Bulge, BulgeKind, graph_distances
from .geometry import aspect_ratio, convex_hull, ombb, points_in_polygon
from .gng import GngGraph

N_CLUSTERS = 6
N_WEIGHTS = 7


@dataclass(frozen=True)
class BulgeDescriptor:
    kind: BulgeKind
    s1: float
    s2: float
    d: float
    rb: float
    wb: float
    nb: float
    nd: float
    ob: float
    od: float
    d_raw: int
    rb_raw: int
    wb_raw: int
    nb_raw: int
    nd_raw: int

    @property
    def is_wrist(self) -> bool:
        return self.kind is BulgeKind.WRIST


@dataclass(frozen=True)
class Signature:
    clusters: np.ndarray  # (6, 7); rows past real_count are zero
    real_count: int
    label: int | None = None
    subject: int | None = None
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        c = np.asarray(self.clusters, dtype=float)
        if c.shape != (N_CLUSTERS, N_WEIGHTS):
            raise ValueError(f"signature must be {N_CLUSTERS}x{N_WEIGHTS}, got {c.shape}")
        if not 0 <= self.real_count <= N_CLUSTERS:
            raise ValueError("real_count must be in 0..6")
        if not np.all(np.isfinite(c)):
            raise ValueError("signature weights must be finite")
        if np.any(c[self.real_count:] != 0):
            raise ValueError("virtual clusters must be zero")
        object.__setattr__(self, "clusters", c)

    def with_tags(self, label=None, subject=None) -> "Signature":
        return Signature(self.clusters, self.real_count, label, subject, self.flags)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Signature):
            return NotImplemented
        return (self.real_count == other.real_count and self.label == other.label
                and self.subject == other.subject
                and np.array_equal(self.clusters, other.clusters))

    __hash__ = None


def empty_signature(label=None, subject=None, flags=()) -> Signature:
    return Signature(np.zeros((N_CLUSTERS, N_WEIGHTS)), 0, label, subject, tuple(flags))


# -- ordering ------------------------------------------------------------------

def order_bulges(cycle: BoundaryCycle, bulges: list[Bulge]) -> tuple[list[Bulge], Bulge | None]:
    """Non-wrist bulges clockwise starting after the wrist, and the wrist.

    Without a wrist the walk's own start (the leftmost vertex) anchors the order.
    """
    n = len(cycle)
    wrists = [b for b in bulges if b.kind is BulgeKind.WRIST]
    if len(wrists) > 1:
        raise ValueError("more than one wrist bulge")
    wrist = wrists[0] if wrists else None
    anchor = wrist.end if wrist else 0
    fingers = sorted((b for b in bulges if b.kind is not BulgeKind.WRIST),
                     key=lambda b: ((b.start - anchor) % n, b.end))
    return fingers, wrist


def _truncate(fingers: list[Bulge], wrist: Bulge | None) -> tuple[list[Bulge], bool]:
    room = N_CLUSTERS - (wrist is not None)
    if len(fingers) <= room:
        return fingers, False
    keep = sorted(range(len(fingers)), key=lambda k: (-fingers[k].h_distance, k))[:room]
    return [fingers[k] for k in sorted(keep)], True


# -- features ------------------------------------------------------------------

def _gap(n: int, a: int, b: int) -> int:
    """Clockwise edge count from position ``a`` to ``b``."""
    return (b - a) % n


def _basic_g_distances(g: GngGraph, bulges: list[Bulge]) -> dict[int, int]:
    gd = graph_distances(g, sorted({b.basic[0] for b in bulges}))
    return {id(b): int(gd[b.basic[0]][b.basic[1]]) for b in bulges}


def _reduced_length(n: int, a: int, b: int, others: list[Bulge], wb: dict[int, int]) -> int:
    """Clockwise length ``a..b`` with each enclosed bulge replaced by its base."""
    span = _gap(n, a, b)
    total = span
    for o in others:
        if _gap(n, a, o.start) + o.h_distance <= span:
            total -= o.h_distance - wb[id(o)]
    return total


def _s1_s2(n: int, fingers: list[Bulge], wrist: Bulge | None, wb: dict[int, int]) -> tuple[float, float]:
    if wrist is None or not fingers:
        return 0.0, 0.0

    def lengths(k):
        f = fingers[k]
        rest = fingers[:k] + fingers[k + 1:]
        l1 = _reduced_length(n, wrist.end, f.start, rest, wb)
        l2 = _reduced_length(n, f.end, wrist.start, rest, wb)
        return l1, l2

    l1, l2 = lengths(0)
    s1 = l1 / (l1 + l2) if l1 + l2 else 0.0
    l1, l2 = lengths(len(fingers) - 1)
    s2 = l2 / (l1 + l2) if l1 + l2 else 0.0
    return s1, s2


def compute_s1_s2(g: GngGraph, cycle: BoundaryCycle, bulges: list[Bulge]) -> tuple[float, float]:
    """Relative wrist positions of the first and last finger (0, 0 without a wrist)."""
    fingers, wrist = order_bulges(cycle, bulges)
    fingers, _ = _truncate(fingers, wrist)
    kept = fingers + ([wrist] if wrist else [])
    return _s1_s2(len(cycle), fingers, wrist, _basic_g_distances(g, kept))


def _hull_count(g: GngGraph, path_v: list[int]) -> int:
    pts = g.positions[path_v]
    hull = convex_hull(pts)
    if hull.degenerate:
        return 0
    others = np.setdiff1d(np.arange(g.n_vertices), np.asarray(path_v))
    if not len(others):
        return 0
    return int(points_in_polygon(g.positions[others], hull.vertices).sum())


def _aspect(g: GngGraph, vertices, min_width: float) -> float:
    if len(vertices) == 0:
        return 1.0
    return aspect_ratio(ombb(g.positions[sorted(vertices)]), min_width=min_width)


def _descriptor(g, cycle, b, prev, wb, spacing, n_norm, s1=0.0, s2=0.0) -> BulgeDescriptor:
    n = len(cycle)
    if prev is None:
        d_raw = 0
        gap = cycle.arc(b.end, b.start)  # the only region beside the bulge
    else:
        d_raw = _gap(n, prev.end, b.start)
        gap = cycle.arc(prev.end, b.start)
    gap_v = list(dict.fromkeys(cycle.vertices_at(gap)))
    nd_raw = _hull_count(g, gap_v)
    rb_raw = b.h_distance
    nb_raw = len(b.interior) + len(set(b.span_vertices)) - 2
    return BulgeDescriptor(
        kind=b.kind, s1=s1, s2=s2,
        d=d_raw / n, rb=rb_raw / n, wb=wb[id(b)] / n,
        nb=nb_raw / n_norm, nd=nd_raw / n_norm,
        ob=_aspect(g, set(b.span_vertices) | set(b.interior), spacing),
        od=_aspect(g, set(gap_v), spacing),
        d_raw=d_raw, rb_raw=rb_raw, wb_raw=wb[id(b)], nb_raw=nb_raw, nd_raw=nd_raw)


def bulge_descriptors(g: GngGraph, cycle: BoundaryCycle, bulges: list[Bulge]) -> list[BulgeDescriptor]:
    """Descriptors in signature order: fingers clockwise after the wrist, wrist last.

    At most six bulges are kept (the wrist plus the longest fingers).
    """
    fingers, wrist = order_bulges(cycle, bulges)
    fingers, _ = _truncate(fingers, wrist)
    kept = fingers + ([wrist] if wrist else [])
    if not kept:
        return []
    n = len(cycle)
    wb = _basic_g_distances(g, kept)
    s1, s2 = _s1_s2(n, fingers, wrist, wb)
    spacing = g.median_edge_length()
    n_norm = int(g.meta.get("n_max", g.n_vertices))

    out = []
    for k, b in enumerate(kept):
        prev = kept[k - 1] if len(kept) > 1 else None
        first = k == 0 and b is not wrist
        last = k == len(fingers) - 1
        out.append(_descriptor(g, cycle, b, prev, wb, spacing, n_norm,
                               s1=s1 if first else 0.0, s2=s2 if (last or b is wrist) else 0.0))
    return out


def build_signature(descriptors: list[BulgeDescriptor], label=None, subject=None,
                    flags=()) -> Signature:
    """Weight vectors: first finger [S1, ...], later fingers [D, ...], wrist [S2, 0...]."""
    if len(descriptors) > N_CLUSTERS:
        raise ValueError("more than six bulge descriptors")
    w = np.zeros((N_CLUSTERS, N_WEIGHTS))
    for k, dsc in enumerate(descriptors):
        if dsc.is_wrist:
            w[k, 0] = dsc.s2
        else:
            lead = dsc.s1 if k == 0 else dsc.d
            w[k] = [lead, dsc.rb, dsc.wb, dsc.nb, dsc.nd, dsc.ob, dsc.od]
    return Signature(w, len(descriptors), label, subject, tuple(flags))


def signature_from_bulges(g: GngGraph, cycle: BoundaryCycle, bulges: list[Bulge],
                          label=None, subject=None) -> Signature:
    fingers, wrist = order_bulges(cycle, bulges)
    flags = []
    if wrist is None:
        flags.append("no-wrist")
    if _truncate(fingers, wrist)[1]:
        flags.append("truncated")
    return build_signature(bulge_descriptors(g, cycle, bulges), label, subject, flags)


# -- text format ---------------------------------------------------------------

def _tag(v) -> str:
    return "-" if v is None else str(v)


def _untag(s: str):
    return None if s == "-" else int(s)


def dumps_signature(sig: Signature) -> str:
    ws = " ".join(repr(float(x)) for x in sig.clusters.ravel())
    return f"{_tag(sig.label)} {_tag(sig.subject)} {sig.real_count} {ws}"


def loads_signature(line: str) -> Signature:
    parts = line.split()
    if len(parts) != 3 + N_CLUSTERS * N_WEIGHTS:
        raise ValueError(f"expected {3 + N_CLUSTERS * N_WEIGHTS} fields, got {len(parts)}")
    w = np.array([float(x) for x in parts[3:]]).reshape(N_CLUSTERS, N_WEIGHTS)
    return Signature(w, int(parts[2]), _untag(parts[0]), _untag(parts[1]))


def save_signatures(sigs, path: str | Path) -> None:
    Path(path).write_text("".join(dumps_signature(s) + "\n" for s in sigs))


def load_signatures(path: str | Path) -> list[Signature]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            out.append(loads_signature(line))
        except ValueError as e:
            raise ValueError(f"{path}:{lineno}: {e}") from None
    return out
