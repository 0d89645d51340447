"""Depth segmentation, dataset loading and synthetic hand masks."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .gng import BinaryMask

log = logging.getLogger(__name__)

DEFAULT_DEPTH_BAND = 150
LAYOUTS = ("ntu", "hku", "hku-multiangle", "uestc", "generic-mask")


class DataError(Exception):
    """Unreadable or malformed input data."""


@dataclass(frozen=True)
class DepthMap:
    depth: np.ndarray  # (h, w) non-negative ints, 0 = no reading

    def __post_init__(self):
        d = np.asarray(self.depth)
        if d.ndim != 2 or d.size == 0:
            raise ValueError("depth map must be a non-empty 2-D array")
        if np.any(d < 0):
            raise ValueError("depth values must be non-negative")
        object.__setattr__(self, "depth", d)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True)
class DatasetRecord:
    mask: BinaryMask
    label: int
    subject: int
    source: str


def largest_component(bits: np.ndarray) -> np.ndarray:
    """Largest 8-connected component; ties go to the first in raster order."""
    labels, n = ndimage.label(bits, structure=np.ones((3, 3), dtype=int))
    if n <= 1:
        return labels > 0
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def depth_band_mask(d: DepthMap, band: int = DEFAULT_DEPTH_BAND) -> np.ndarray:
    """Valid pixels within ``band`` of the nearest valid depth (no component filter)."""
    z = d.depth
    valid = z > 0
    if not valid.any():
        raise DataError("depth map has no valid pixels")
    z0 = z[valid].min()
    return valid & (z <= z0 + band)


def segment_depth(d: DepthMap, band: int = DEFAULT_DEPTH_BAND) -> BinaryMask:
    """Nearest-object segmentation: depth band above the minimum, largest blob kept."""
    return BinaryMask(largest_component(depth_band_mask(d, band)))


# -- dataset loading -------------------------------------------------------

def layout_manifest() -> dict:
    """Naming rule, file kind and expected record count per layout."""
    text = resources.files("gngiemd").joinpath("data/layouts.json").read_text()
    return json.loads(text)


def read_array(path: Path) -> np.ndarray:
    """2-D array from an image (8/16-bit), ``.npy`` or whitespace text file."""
    try:
        if path.suffix == ".npy":
            a = np.load(path)
        elif path.suffix == ".txt":
            a = np.loadtxt(path, ndmin=2)
        else:
            with Image.open(path) as im:
                a = np.array(im)
    except Exception as e:
        raise DataError(f"unreadable file {path}: {e}") from None
    if a.ndim == 3:
        a = a[..., 0]
    if a.ndim != 2:
        raise DataError(f"{path}: expected a 2-D image, got shape {a.shape}")
    return a


def load_record(path: Path, kind: str, label: int, subject: int,
                band: int = DEFAULT_DEPTH_BAND) -> DatasetRecord:
    a = read_array(path)
    if kind == "mask":
        mask = BinaryMask(a > 0)
    else:
        try:
            mask = segment_depth(DepthMap(np.asarray(a, dtype=np.int64)), band)
        except (ValueError, DataError) as e:
            raise DataError(f"{path}: {e}") from None
    return DatasetRecord(mask, label, subject, str(path))


def _index_entries(root: Path):
    with open(root / "index.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for lineno, row in enumerate(rows, 2):
        try:
            yield root / row["path"], int(row["label"]), int(row["subject"])
        except (KeyError, TypeError, ValueError):
            raise DataError(f"{root / 'index.csv'}:{lineno}: need path,label,subject") from None


def _walk_entries(root: Path, spec: dict):
    rx = re.compile(spec["pattern"])
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        m = rx.search(path.relative_to(root).as_posix())
        if m:
            yield path, int(m["label"]) + spec.get("label_offset", 0), int(m["subject"])


def dataset_entries(root: str | Path, layout: str) -> list[tuple[Path, int, int]]:
    """(path, label, subject) per record, from ``index.csv`` or the layout's naming rule."""
    manifest = layout_manifest()
    if layout not in manifest:
        raise ValueError(f"unknown layout {layout!r}; expected one of {', '.join(manifest)}")
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    if (root / "index.csv").exists():
        return list(_index_entries(root))
    return list(_walk_entries(root, manifest[layout]))


def check_counts(entries, layout: str) -> bool:
    expected = layout_manifest()[layout].get("expected")
    if not entries:
        log.warning("no records found for layout %s", layout)
        return False
    if expected is not None and len(entries) != expected:
        tally = sorted(Counter(e[1] for e in entries).items())
        log.warning("layout %s: expected %d records, found %d; per class %s",
                    layout, expected, len(entries), tally)
        return False
    return True


def load_dataset(root: str | Path, layout: str, band: int = DEFAULT_DEPTH_BAND) -> list[DatasetRecord]:
    entries = dataset_entries(root, layout)
    check_counts(entries, layout)
    kind = layout_manifest()[layout]["kind"]
    return [load_record(p, kind, lab, subj, band) for p, lab, subj in entries]


# -- synthetic hands -------------------------------------------------------

# Finger slots as angles from straight up, clockwise on screen, in the order
# fingers are added: index, middle, ring, little, thumb.
FINGER_SLOTS = (-28.0, -6.0, 16.0, 38.0, -80.0)
PALM_RADIUS = 22.0
FINGER_WIDTH = 0.42  # palm radii
FINGER_LENGTH = 5.6  # finger widths, measured from the palm rim
WRIST_WIDTH = 1.1  # palm radii
WRIST_LENGTH = 1.0  # palm radii below the rim
WRIST_CORNER = 0.3  # corner rounding, fraction of the wrist width


@dataclass(frozen=True)
class _Hand:
    R: float
    wrist: float
    stub: float  # wrist length below the rim
    fingers: tuple  # (angle, width, length beyond the rim) per finger

    def with_palm(self, R: float) -> "_Hand":
        return _Hand(R, self.wrist, self.stub, self.fingers)

    def rim(self) -> float:
        return math.sqrt(max(self.R ** 2 - (self.wrist / 2) ** 2, 0.0))

    def extent(self) -> float:
        reach = [self.R + ln for _, _, ln in self.fingers]
        return max([self.R, self.rim() + self.stub] + reach)


def _hand_shape(fingers: int, scale: float, seed: int):
    rng = np.random.default_rng(seed)
    R = PALM_RADIUS * scale * (1 + 0.05 * rng.uniform(-1, 1))
    wrist = WRIST_WIDTH * R * (1 + 0.05 * rng.uniform(-1, 1))
    parts = []
    for slot in FINGER_SLOTS:
        ang = math.radians(slot + 4.0 * rng.uniform(-1, 1))
        w = FINGER_WIDTH * R * (1 + 0.08 * rng.uniform(-1, 1))
        length = FINGER_LENGTH * w * (1 + 0.08 * rng.uniform(0, 1))
        parts.append((ang, w, length))
    full = _Hand(R, wrist, WRIST_LENGTH * R, tuple(parts))
    return _Hand(R, wrist, WRIST_LENGTH * R, tuple(parts[:fingers])), full


def _render(hand: _Hand, theta: float, size: int | None = None) -> np.ndarray:
    if size is None:
        size = 2 * int(math.ceil(hand.extent())) + 6
    c = size / 2.0
    yy, xx = np.mgrid[:size, :size]
    px = xx + 0.5 - c
    py = yy + 0.5 - c
    # inverse-rotate pixel centres into the upright hand frame
    ct, st = math.cos(theta), math.sin(theta)
    ux = ct * px - st * py
    uy = st * px + ct * py
    R = hand.R
    rim = hand.rim()
    bits = ux * ux + uy * uy <= R * R
    half = hand.wrist / 2
    end = rim + hand.stub
    rc = WRIST_CORNER * hand.wrist
    ax = np.abs(ux)
    stub = (uy >= 0) & (uy <= end) & (ax <= half)
    corner = (ax > half - rc) & (uy > end - rc)
    stub &= ~corner | ((ax - (half - rc)) ** 2 + (uy - (end - rc)) ** 2 <= rc * rc)
    bits |= stub
    for ang, w, length in hand.fingers:
        dx, dy = math.sin(ang), -math.cos(ang)
        along = ux * dx + uy * dy
        across = -ux * dy + uy * dx
        bits |= (along >= 0) & (along <= R + length) & (np.abs(across) <= w / 2)
    return bits


def synth_hand(fingers: int, scale: float = 1.0, rotation: float = 0.0, seed: int = 0) -> BinaryMask:
    """Palm disc, ``fingers`` straight fingers and a short wrist stub.

    The seed jitters proportions. The palm radius is then grown until the
    area matches the five-finger hand of the same seed, so a fixed-size GNG
    gets the same vertex spacing, and the fingers and wrist span the same
    number of hops, whatever the finger count.
    Right-angle rotations are exact raster rotations (``np.rot90``,
    counterclockwise on screen); other angles re-render the shape.
    """
    if not 0 <= fingers <= 5:
        raise ValueError("fingers must be in 0..5")
    hand, full = _hand_shape(fingers, scale, seed)
    target = float(_render(full, 0.0).sum())
    lo, hi = hand.R, 3.0 * hand.R
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _render(hand.with_palm(mid), 0.0).sum() < target:
            lo = mid
        else:
            hi = mid
    hand = hand.with_palm(hi)
    quarter = rotation / (math.pi / 2)
    k = round(quarter)
    if abs(quarter - k) < 1e-9:
        return BinaryMask(np.rot90(_render(hand, 0.0), k % 4).copy())
    return BinaryMask(_render(hand, -rotation))


SAMPLE_JITTER = 0.2  # radians of in-plane rotation between samples of a subject


def synthetic_sample(fingers: int, subject: int, sample: int) -> tuple[BinaryMask, int]:
    """Mask and GNG seed for one sample of the synthetic finger-count corpus.

    The subject fixes the hand proportions; each sample adds a small random
    rotation and its own GNG seed.
    """
    rng = np.random.default_rng([fingers, subject, sample])
    theta = float(rng.uniform(-SAMPLE_JITTER, SAMPLE_JITTER))
    gng_seed = int(rng.integers(2**31))
    return synth_hand(fingers, rotation=theta, seed=subject), gng_seed


def upscale(mask: BinaryMask, factor: int) -> BinaryMask:
    """Exact nearest-neighbour enlargement by an integer factor."""
    return BinaryMask(np.kron(mask.bits, np.ones((factor, factor), dtype=bool)))


def rotate90(mask: BinaryMask, k: int = 1) -> BinaryMask:
    """Exact raster rotation by ``k`` quarter turns (counterclockwise on screen)."""
    return BinaryMask(np.rot90(mask.bits, k).copy())
