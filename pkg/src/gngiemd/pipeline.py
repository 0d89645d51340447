"""Mask to signature: GNG training, boundary walk, bulge detection, features."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .analysis import (BoundaryCycle, Bulge, NoBoundaryCycle, canonical_cycle,
                       detect_bulges, extract_boundary)
from .features import Signature, empty_signature, signature_from_bulges
from .gng import BinaryMask, GngGraph, GngParams, train_gng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineResult:
    graph: GngGraph
    cycle: BoundaryCycle | None
    bulges: tuple[Bulge, ...]
    signature: Signature


def analyze_graph(g: GngGraph, label=None, subject=None) -> PipelineResult:
    try:
        cycle = canonical_cycle(g, extract_boundary(g))
    except NoBoundaryCycle as e:
        log.warning("no boundary cycle (%s); emitting an empty signature", e)
        return PipelineResult(g, None, (), empty_signature(label, subject, ("no-boundary",)))
    bulges = detect_bulges(g, cycle)
    sig = signature_from_bulges(g, cycle, bulges, label, subject)
    return PipelineResult(g, cycle, tuple(bulges), sig)


def process_mask(mask: BinaryMask, params: GngParams = GngParams(), *, label=None, subject=None,
                 scale: float = 1.0) -> PipelineResult:
    return analyze_graph(train_gng(mask, params, scale=scale), label, subject)


def mask_signature(mask: BinaryMask, params: GngParams = GngParams(), **kw) -> Signature:
    return process_mask(mask, params, **kw).signature
