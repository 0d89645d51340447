"""k-NN over IEMD and the evaluation protocols (h-h, l-o-o, l-p-o, i2i)."""

from __future__ import annotations

import itertools
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import Signature
from .iemd import iemd, iemd_matrix

PROTOCOLS = ("h-h", "l-o-o", "l-p-o", "i2i")


def vote(labels, k: int) -> int:
    """Majority among ``labels`` (nearest first); ties go to the tied label seen first."""
    top = list(labels[:k])
    counts = Counter(top)
    best = max(counts.values())
    return next(lab for lab in top if counts[lab] == best)


def knn_from_distances(dist, train_labels, k: int = 3) -> int:
    dist = np.asarray(dist, dtype=float)
    if len(dist) == 0:
        raise ValueError("empty training set")
    if k < 1 or k > len(dist):
        raise ValueError(f"need 1 <= k <= {len(dist)}")
    order = np.argsort(dist, kind="stable")
    return vote([train_labels[i] for i in order], k)


def knn_classify(test: Signature, train: list[Signature], k: int = 3) -> int:
    if not train:
        raise ValueError("empty training set")
    dist = [iemd(test, s) for s in train]
    return knn_from_distances(dist, [s.label for s in train], k)


@dataclass
class ConfusionMatrix:
    labels: list[int]
    counts: np.ndarray  # counts[true, predicted]
    fold_accuracies: list[float] = field(default_factory=list)

    @classmethod
    def empty(cls, labels) -> "ConfusionMatrix":
        labels = sorted(labels)
        return cls(labels, np.zeros((len(labels), len(labels)), dtype=np.int64))

    def add(self, true, pred) -> None:
        pos = {lab: i for i, lab in enumerate(self.labels)}
        for t, p in zip(true, pred):
            self.counts[pos[t], pos[p]] += 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        """Pooled accuracy: trace over total."""
        return float(np.trace(self.counts)) / self.total if self.total else 0.0

    @property
    def mean_accuracy(self) -> float:
        """Average fold accuracy (pooled accuracy when no folds were recorded)."""
        if self.fold_accuracies:
            return float(np.mean(self.fold_accuracies))
        return self.accuracy

    @property
    def n_folds(self) -> int:
        return len(self.fold_accuracies)

    def per_class_accuracy(self) -> dict[int, float]:
        rows = self.counts.sum(axis=1)
        return {lab: (float(self.counts[i, i]) / rows[i] if rows[i] else 0.0)
                for i, lab in enumerate(self.labels)}

    def to_csv(self) -> str:
        lines = ["true\\pred," + ",".join(str(x) for x in self.labels)]
        for lab, row in zip(self.labels, self.counts):
            lines.append(f"{lab}," + ",".join(str(int(x)) for x in row))
        lines.append(f"mean_accuracy {self.mean_accuracy!r}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        lines = [f"folds {self.n_folds}", f"mean_accuracy {self.mean_accuracy:.6f}",
                 f"pooled_accuracy {self.accuracy:.6f}"]
        lines += [f"class {lab} {acc:.6f}" for lab, acc in self.per_class_accuracy().items()]
        return "\n".join(lines) + "\n"


# -- protocols -----------------------------------------------------------------

def parse_protocol(name: str, p: int | None = None) -> tuple[str, int]:
    """Return (kind, p). ``l-4-o`` is shorthand for ``l-p-o`` with p=4."""
    m = re.fullmatch(r"l-(\d+)-o", name)
    if m:
        return "l-p-o", int(m.group(1))
    if name == "l-o-o":
        return "l-p-o", 1
    if name == "l-p-o":
        if p is None:
            raise ValueError("l-p-o needs p")
        return "l-p-o", p
    if name in ("h-h", "i2i"):
        return name, 0
    raise ValueError(f"unknown protocol {name!r}; expected one of h-h, l-o-o, l-p-o, l-<p>-o, i2i")


def _require_tags(data) -> None:
    for k, s in enumerate(data):
        if s.label is None or s.subject is None:
            raise ValueError(f"signature {k} lacks a label or subject")


def protocol_folds(data: list[Signature], protocol: str, seed: int = 0, p: int | None = None):
    """Yield (train indices, test indices) per fold."""
    kind, p = parse_protocol(protocol, p)
    _require_tags(data)
    rng = np.random.default_rng(seed)
    subjects = sorted({s.subject for s in data})

    if kind == "l-p-o":
        if not 1 <= p < len(subjects):
            raise ValueError(f"l-{p}-o needs more than {p} subjects, have {len(subjects)}")
        for held in itertools.combinations(subjects, p):
            held = set(held)
            test = [i for i, s in enumerate(data) if s.subject in held]
            train = [i for i, s in enumerate(data) if s.subject not in held]
            yield train, test
        return

    groups: dict[tuple, list[int]] = defaultdict(list)
    for i, s in enumerate(data):
        groups[(s.subject, s.label)].append(i)

    if kind == "h-h":
        train, test = [], []
        for key in sorted(groups):
            idx = list(rng.permutation(groups[key]))
            half = len(idx) // 2  # odd groups give the extra sample to testing
            train += idx[:half]
            test += idx[half:]
        if not train or not test:
            raise ValueError("h-h needs at least two samples in some subject/label group")
        yield sorted(train), sorted(test)
        return

    # i2i: one random image per (subject, label) for training, the rest tested
    train = sorted(int(rng.choice(groups[key])) for key in sorted(groups))
    chosen = set(train)
    test = [i for i in range(len(data)) if i not in chosen]
    if not test:
        raise ValueError("i2i leaves nothing to test")
    yield train, test


def run_protocol(data: list[Signature], protocol: str, seed: int = 0, k: int = 3,
                 p: int | None = None, distances: np.ndarray | None = None,
                 queries: list[Signature] | None = None) -> ConfusionMatrix:
    """Evaluate k-NN under ``protocol``; counts are pooled, folds averaged.

    ``queries[i]``, when given, replaces ``data[i]`` whenever it is tested
    (e.g. a rotated copy of the same mask); training always uses ``data``.
    ``distances[i, j]`` must then hold the query-to-data distances.
    """
    if queries is not None and len(queries) != len(data):
        raise ValueError("queries must align with data")
    if distances is None:
        distances = iemd_matrix(data) if queries is None else iemd_matrix(queries, data)
    labels = [s.label for s in data]
    cm = ConfusionMatrix.empty({lab for lab in labels})
    for train, test in protocol_folds(data, protocol, seed, p):
        if len(train) < k:
            raise ValueError(f"fold has {len(train)} training samples, fewer than k={k}")
        tl = [labels[i] for i in train]
        sub = distances[np.ix_(test, train)]
        pred = [knn_from_distances(row, tl, k) for row in sub]
        true = [labels[i] for i in test]
        cm.add(true, pred)
        cm.fold_accuracies.append(float(np.mean(np.equal(true, pred))))
    return cm


def save_confusion(cm: ConfusionMatrix, path: str | Path) -> None:
    Path(path).write_text(cm.to_csv())
