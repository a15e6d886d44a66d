"""Pairing of ground-truth and predicted row angles and the mean angle error.

Both angle sets are pooled and clustered again with circular DBSCAN. Every
cluster with at least two members contributes its angular span
(max - min); the error of an image is the mean span over those clusters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .rowcluster import NOISE, PipelineConfig, dbscan_circular, detect_rows
from .segmetrics import SegScores, seg_scores
from .imagecore import as_mask


class Origin(str, Enum):
    GROUND_TRUTH = "gt"
    PREDICTION = "pred"


@dataclass(frozen=True)
class TaggedAngle:
    angle: float
    origin: Origin


@dataclass(frozen=True)
class AngleErrorResult:
    k: int
    cluster_spans: list = field(default_factory=list)
    mean_error: float | None = None
    unmatched_gt: int = 0
    unmatched_pred: int = 0
    mixed_origin_k: int = 0


@dataclass(frozen=True)
class PairEvaluation:
    angle: AngleErrorResult
    scores: SegScores
    gt_row_count: int
    pred_row_count: int


def _wrap180(d: float) -> float:
    """Map a difference into (-90, 90]."""
    d = math.fmod(d, 180.0)
    if d > 90.0:
        d -= 180.0
    elif d <= -90.0:
        d += 180.0
    return d


def circular_span(angles) -> float:
    """max - min of angles unwrapped around their 180-periodic circular mean."""
    angles = list(angles)
    if len(angles) < 2:
        return 0.0
    # mean direction of the doubled angles
    sx = math.fsum(math.cos(math.radians(2 * a)) for a in angles)
    sy = math.fsum(math.sin(math.radians(2 * a)) for a in angles)
    centre = math.degrees(math.atan2(sy, sx)) / 2.0 if (sx or sy) else angles[0]
    unwrapped = [centre + _wrap180(a - centre) for a in angles]
    return max(unwrapped) - min(unwrapped)


def pair_and_score(gt, pred, eps2: float = 5.0, min_pts: int = 1) -> AngleErrorResult:
    """Mean angle error between two sets of row angles (degrees from vertical).

    Angles are pooled and sorted by value before clustering, which makes the
    result independent of input order and symmetric in ``gt``/``pred``.
    Clusters of two or more angles score, whatever their origin; singletons
    and noise are counted as unmatched. With no scoring cluster the mean
    error is None.
    """
    tagged = [TaggedAngle(float(a), Origin.GROUND_TRUTH) for a in gt]
    tagged += [TaggedAngle(float(a), Origin.PREDICTION) for a in pred]
    tagged.sort(key=lambda t: t.angle)
    labeling = dbscan_circular([t.angle for t in tagged], eps2, min_pts)

    spans = []
    mixed = 0
    unmatched = {Origin.GROUND_TRUTH: 0, Origin.PREDICTION: 0}
    for members in labeling.clusters():
        if len(members) < 2:
            for i in members:
                unmatched[tagged[i].origin] += 1
            continue
        spans.append(circular_span(tagged[i].angle for i in members))
        if len({tagged[i].origin for i in members}) == 2:
            mixed += 1
    for t, lab in zip(tagged, labeling.labels):
        if lab == NOISE:
            unmatched[t.origin] += 1

    k = len(spans)
    return AngleErrorResult(
        k=k,
        cluster_spans=spans,
        mean_error=math.fsum(spans) / k if k else None,
        unmatched_gt=unmatched[Origin.GROUND_TRUTH],
        unmatched_pred=unmatched[Origin.PREDICTION],
        mixed_origin_k=mixed,
    )


def evaluate_pair(gt_mask, pred_mask, config: PipelineConfig | None = None) -> PairEvaluation:
    """Run row detection on both masks and score the pair."""
    config = config or PipelineConfig()
    gt_mask, pred_mask = as_mask(gt_mask), as_mask(pred_mask)
    if gt_mask.shape != pred_mask.shape:
        raise ValueError(f"mask dimensions differ: {gt_mask.shape} vs {pred_mask.shape}")
    gt_rows = detect_rows(gt_mask, config)
    pred_rows = detect_rows(pred_mask, config)
    angle = pair_and_score(
        [r.angle for r in gt_rows], [r.angle for r in pred_rows], config.eps2, config.min_pts
    )
    return PairEvaluation(angle, seg_scores(gt_mask, pred_mask), len(gt_rows), len(pred_rows))
