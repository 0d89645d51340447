"""Growing Neural Gas over the foreground of a binary mask.

Training follows Fritzke's loop. Randomness comes from numpy's PCG64
(``numpy.random.default_rng(seed)``), which is portable across platforms, so
a given mask, parameter set and seed always produce the same graph.

The inner loop runs in a numba kernel over a dense age matrix (``-1`` marks
a missing edge). Slots freed by isolated-vertex deletion are reused by the
next insertion, and the final graph is compacted to ids ``0..n-1`` in slot
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np


@dataclass(frozen=True)
class GngParams:
    """Training parameters; defaults are the published settings.

    ``settle_epochs`` adds that many lambda-epochs at full size before
    stopping, so the last inserted vertices get time to spread out. Set it to
    0 to stop as soon as the vertex count reaches ``n_max``.
    """

    n_max: int = 300
    eps_b: float = 0.05
    eps_n: float = 0.005
    lam: int = 50
    age_max: int = 50
    alpha: float = 0.5
    d: float = 0.995
    seed: int = 0
    settle_epochs: int = 1000

    def validate(self) -> None:
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if not 0 < self.eps_n <= self.eps_b < 1:
            raise ValueError("need 0 < eps_n <= eps_b < 1")
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        if self.age_max < 1:
            raise ValueError("age_max must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if not 0 < self.d <= 1:
            raise ValueError("d must be in (0, 1]")
        if self.settle_epochs < 0:
            raise ValueError("settle_epochs must be >= 0")


@dataclass(frozen=True)
class BinaryMask:
    """Row-major boolean grid; ``bits[row, col]`` is True on the foreground."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError("mask must be 2-D")
        object.__setattr__(self, "bits", bits)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def n_foreground(self) -> int:
        return int(self.bits.sum())

    def pixel_centers(self) -> np.ndarray:
        rows, cols = np.nonzero(self.bits)
        return np.column_stack([cols + 0.5, rows + 0.5]).astype(float)


@dataclass(frozen=True)
class GngGraph:
    positions: np.ndarray  # (n, 2)
    errors: np.ndarray  # (n,)
    edges: np.ndarray  # (m, 2) with i < j, sorted
    ages: np.ndarray  # (m,)
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        n = self.n_vertices
        a = np.zeros((n, n), dtype=bool)
        if len(self.edges):
            a[self.edges[:, 0], self.edges[:, 1]] = True
            a[self.edges[:, 1], self.edges[:, 0]] = True
        return a

    def neighbors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for i, j in self.edges.tolist():
            out[i].append(j)
            out[j].append(i)
        return out

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}

    def median_edge_length(self) -> float:
        if not len(self.edges):
            return 0.0
        d = self.positions[self.edges[:, 0]] - self.positions[self.edges[:, 1]]
        return float(np.median(np.hypot(d[:, 0], d[:, 1])))


def sample_input(mask: BinaryMask, rng: np.random.Generator) -> tuple[float, float]:
    """Centre of a foreground pixel chosen uniformly at random."""
    centers = mask.pixel_centers()
    if len(centers) == 0:
        raise ValueError("empty mask")
    x, y = centers[rng.integers(len(centers))]
    return float(x), float(y)


# Kernel state layout in ``counters``: [step, n_active, done, settle epochs left]
@numba.njit(cache=True)
def _feed(pos, err, active, age, samples, counters,
          n_max, eps_b, eps_n, lam, age_max, alpha, d):
    cap = pos.shape[0]
    used = 0
    for t in range(samples.shape[0]):
        if counters[2]:
            break
        x0 = samples[t, 0]
        x1 = samples[t, 1]
        used += 1

        s1 = -1
        s2 = -1
        d1 = np.inf
        d2 = np.inf
        for i in range(cap):
            if not active[i]:
                continue
            dx = x0 - pos[i, 0]
            dy = x1 - pos[i, 1]
            dd = dx * dx + dy * dy
            if dd < d1:
                s2 = s1
                d2 = d1
                s1 = i
                d1 = dd
            elif dd < d2:
                s2 = i
                d2 = dd

        for j in range(cap):
            if age[s1, j] >= 0:
                age[s1, j] += 1
                age[j, s1] += 1

        err[s1] += d1

        pos[s1, 0] += eps_b * (x0 - pos[s1, 0])
        pos[s1, 1] += eps_b * (x1 - pos[s1, 1])
        for j in range(cap):
            if age[s1, j] >= 0:
                pos[j, 0] += eps_n * (x0 - pos[j, 0])
                pos[j, 1] += eps_n * (x1 - pos[j, 1])

        age[s1, s2] = 0
        age[s2, s1] = 0

        for j in range(cap):
            if age[s1, j] > age_max:
                age[s1, j] = -1
                age[j, s1] = -1
                isolated = True
                for k in range(cap):
                    if age[j, k] >= 0:
                        isolated = False
                        break
                if isolated:
                    active[j] = False
                    err[j] = 0.0
                    counters[1] -= 1

        counters[0] += 1
        if counters[0] % lam == 0:
            if counters[1] < n_max:
                q = -1
                for i in range(cap):
                    if active[i] and (q < 0 or err[i] > err[q]):
                        q = i
                f = -1
                for j in range(cap):
                    if age[q, j] >= 0 and (f < 0 or err[j] > err[f]):
                        f = j
                r = -1
                for i in range(cap):
                    if not active[i]:
                        r = i
                        break
                pos[r, 0] = 0.5 * (pos[q, 0] + pos[f, 0])
                pos[r, 1] = 0.5 * (pos[q, 1] + pos[f, 1])
                active[r] = True
                counters[1] += 1
                age[q, f] = -1
                age[f, q] = -1
                age[q, r] = 0
                age[r, q] = 0
                age[r, f] = 0
                age[f, r] = 0
                err[q] *= alpha
                err[f] *= alpha
                err[r] = err[q]
            if counters[1] >= n_max:
                if counters[3] > 0:
                    counters[3] -= 1
                else:
                    counters[2] = 1

        for i in range(cap):
            if active[i]:
                err[i] *= d
    return used


class GngTrainer:
    """Incremental trainer; ``feed`` advances the loop over explicit inputs.

    ``train_gng`` is the normal entry point. The trainer is exposed so tests
    can step the algorithm one input at a time and inspect the state.
    """

    def __init__(self, params: GngParams, initial: np.ndarray):
        params.validate()
        self.params = params
        cap = params.n_max
        self.pos = np.zeros((cap, 2))
        self.err = np.zeros(cap)
        self.active = np.zeros(cap, dtype=np.bool_)
        self.age = np.full((cap, cap), -1, dtype=np.int64)
        self.counters = np.zeros(4, dtype=np.int64)
        self.counters[3] = params.settle_epochs
        init = np.asarray(initial, dtype=float).reshape(2, 2)
        self.pos[:2] = init
        self.active[:2] = True
        self.counters[1] = 2

    @property
    def done(self) -> bool:
        return bool(self.counters[2])

    @property
    def steps(self) -> int:
        return int(self.counters[0])

    def feed(self, samples: np.ndarray) -> int:
        p = self.params
        samples = np.ascontiguousarray(samples, dtype=float).reshape(-1, 2)
        return int(_feed(self.pos, self.err, self.active, self.age, samples, self.counters,
                         p.n_max, p.eps_b, p.eps_n, p.lam, p.age_max, p.alpha, p.d))

    def graph(self) -> GngGraph:
        slots = np.flatnonzero(self.active)
        remap = -np.ones(len(self.active), dtype=np.int64)
        remap[slots] = np.arange(len(slots))
        sub = self.age[np.ix_(slots, slots)]
        ii, jj = np.nonzero(np.triu(sub >= 0, k=1))
        edges = np.column_stack([ii, jj]).astype(np.int64).reshape(-1, 2)
        return GngGraph(self.pos[slots].copy(), self.err[slots].copy(), edges,
                        sub[ii, jj].astype(np.int64), meta={"steps": self.steps, "n_max": self.params.n_max})


def train_gng(mask: BinaryMask, params: GngParams = GngParams(), *,
              scale: float = 1.0, offset=(0.0, 0.0), linear=None) -> GngGraph:
    """Train a GNG on foreground pixel centres of ``mask``.

    Input points are ``offset + scale * (linear @ centre)``. With the same
    seed the pixel draw sequence does not depend on these, which is what the
    equivariance tests rely on.
    """
    params.validate()
    centers = mask.pixel_centers()
    if len(centers) < 2:
        raise ValueError("empty mask: need at least 2 foreground pixels")
    if linear is not None:
        centers = centers @ np.asarray(linear, dtype=float).T
    pts = np.asarray(offset, dtype=float) + scale * centers

    rng = np.random.default_rng(params.seed)
    first = rng.choice(len(pts), size=2, replace=False)
    trainer = GngTrainer(params, pts[first])
    chunk = params.lam * 64
    while not trainer.done:
        trainer.feed(pts[rng.integers(0, len(pts), size=chunk)])
    return trainer.graph()


def dumps_graph(g: GngGraph) -> str:
    lines = [f"gng {g.n_vertices} {g.n_edges}"]
    lines += [f"v {i} {x!r} {y!r}" for i, (x, y) in enumerate(g.positions.tolist())]
    lines += [f"e {i} {j} {a}" for (i, j), a in zip(g.edges.tolist(), g.ages.tolist())]
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> GngGraph:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "gng":
        raise ValueError("missing 'gng' header")
    n, m = int(lines[0][1]), int(lines[0][2])
    pos = np.zeros((n, 2))
    edges, ages = [], []
    for parts in lines[1:]:
        if parts[0] == "v":
            pos[int(parts[1])] = float(parts[2]), float(parts[3])
        elif parts[0] == "e":
            i, j = sorted((int(parts[1]), int(parts[2])))
            edges.append((i, j))
            ages.append(int(parts[3]))
        else:
            raise ValueError(f"unknown record {parts[0]!r}")
    if len(edges) != m:
        raise ValueError(f"expected {m} edges, found {len(edges)}")
    return GngGraph(pos, np.zeros(n), np.array(edges, dtype=np.int64).reshape(-1, 2),
                    np.array(ages, dtype=np.int64))


def save_graph(g: GngGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_graph(g))


def load_graph(path: str | Path) -> GngGraph:
    return loads_graph(Path(path).read_text())
