"""Pixel accuracy and white-pixel IoU (white = crop row = positive class)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagecore import as_mask


@dataclass(frozen=True)
class SegScores:
    accuracy: float
    iou: float
    tp: int
    fp: int
    fn: int
    tn: int
    both_empty: bool = False


def _pair(gt, pred):
    gt, pred = as_mask(gt), as_mask(pred)
    if gt.shape != pred.shape:
        raise ValueError(f"mask dimensions differ: {gt.shape} vs {pred.shape}")
    return gt, pred


def confusion_counts(gt, pred):
    gt, pred = _pair(gt, pred)
    tp = int(np.count_nonzero(gt & pred))
    fp = int(np.count_nonzero(~gt & pred))
    fn = int(np.count_nonzero(gt & ~pred))
    tn = gt.size - tp - fp - fn
    return tp, fp, fn, tn


def _iou(tp, fp, fn):
    union = tp + fp + fn
    return (tp / union, False) if union else (1.0, True)


def iou_white(gt, pred) -> float:
    """|gt AND pred| / |gt OR pred|; 1.0 when both masks are empty."""
    tp, fp, fn, _ = confusion_counts(gt, pred)
    return _iou(tp, fp, fn)[0]


def pixel_accuracy(gt, pred) -> float:
    tp, fp, fn, tn = confusion_counts(gt, pred)
    return (tp + tn) / (tp + fp + fn + tn)


def seg_scores(gt, pred) -> SegScores:
    tp, fp, fn, tn = confusion_counts(gt, pred)
    iou, empty = _iou(tp, fp, fn)
    return SegScores((tp + tn) / (tp + fp + fn + tn), iou, tp, fp, fn, tn, empty)
