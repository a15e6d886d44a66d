"""Skeletonization and vegetation-index utilities."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .imagecore import as_mask


@dataclass(frozen=True)
class ThinningReport:
    iterations: int
    removed_pixels: int
    converged: bool


# P2..P9 offsets (dy, dx): N, NE, E, SE, S, SW, W, NW
_OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def _build_tables():
    first = np.zeros(256, dtype=bool)
    second = np.zeros(256, dtype=bool)
    for code in range(256):
        p2, p3, p4, p5, p6, p7, p8, p9 = ((code >> k) & 1 for k in range(8))
        ring = [p2, p3, p4, p5, p6, p7, p8, p9, p2]
        count = sum(ring[:8])
        transitions = sum(1 for a, b in zip(ring, ring[1:]) if (a, b) == (0, 1))
        base = 2 <= count <= 6 and transitions == 1
        first[code] = base and p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
        second[code] = base and p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
    return first, second


_TABLES = _build_tables()


def _deletable(padded: np.ndarray, ys: np.ndarray, xs: np.ndarray, first: bool) -> np.ndarray:
    """Flags for the white pixels at (ys, xs) of a 1-px black-padded image."""
    code = np.zeros(len(ys), dtype=np.intp)
    for k, (dy, dx) in enumerate(_OFFSETS):
        code |= padded[ys + dy, xs + dx].astype(np.intp) << k
    return _TABLES[0 if first else 1][code]


def skeletonize(mask, max_iterations: int = 100):
    """Zhang-Suen thinning of a binary mask.

    Each iteration runs both sub-iterations; within a sub-iteration all
    deletions are decided on the same snapshot. Pixels outside the image count
    as black. Returns ``(skeleton, ThinningReport)``.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    img = as_mask(mask)
    padded = np.pad(img, 1, mode="constant", constant_values=False)
    ys, xs = np.nonzero(padded)
    start = len(ys)
    iterations = 0
    converged = False
    while iterations < max_iterations:
        changed = False
        for first in (True, False):
            kill = _deletable(padded, ys, xs, first)
            if kill.any():
                padded[ys[kill], xs[kill]] = False
                ys, xs = ys[~kill], xs[~kill]
                changed = True
        if not changed:
            converged = True
            break
        iterations += 1
    else:
        # cap reached: converged only if one more pass would change nothing
        converged = not (
            _deletable(padded, ys, xs, True).any() or _deletable(padded, ys, xs, False).any()
        )
    skeleton = padded[1:-1, 1:-1].copy()
    return skeleton, ThinningReport(iterations, start - len(ys), converged)


def excess_green(img: np.ndarray) -> np.ndarray:
    """Excess green index mapped to 8 bits.

    ExG = 2g - r - b on chromatic coordinates lies in [-1, 2]; the 8-bit value
    is floor((ExG + 1) / 3 * 255). Since (ExG + 1) / 3 reduces to G / (R+G+B),
    this is evaluated exactly in integers. Black pixels (sum 0) give ExG = 0.
    """
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an RGB image, got shape {img.shape}")
    rgb = img.astype(np.int64)
    s = rgb.sum(axis=2)
    g = rgb[..., 1]
    out = np.full(s.shape, 85, dtype=np.int64)
    nz = s > 0
    out[nz] = (255 * g[nz]) // s[nz]
    return out.astype(np.uint8)


class OtsuResult(NamedTuple):
    threshold: int
    degenerate: bool


def otsu_threshold(img: np.ndarray) -> OtsuResult:
    """Otsu threshold over the 256-bin histogram.

    The classes are ``<= t`` and ``> t``. Between-class variances are compared
    exactly (rationals), and the smallest maximizing ``t`` wins. A histogram
    with a single occupied bin has no split and yields ``(127, True)``.
    """
    hist = np.bincount(np.asarray(img, dtype=np.uint8).ravel(), minlength=256)
    hist = [int(v) for v in hist]
    n = sum(hist)
    total = sum(i * h for i, h in enumerate(hist))
    best_t, best = None, Fraction(0)
    w0 = s0 = 0
    for t in range(255):
        w0 += hist[t]
        s0 += t * hist[t]
        w1 = n - w0
        if w0 == 0 or w1 == 0:
            continue
        # n^2 * w0*w1*(mu0-mu1)^2 / n^2 reduces to (n*s0 - w0*total)^2 / (w0*w1)
        var = Fraction((n * s0 - w0 * total) ** 2, w0 * w1)
        if best_t is None or var > best:
            best_t, best = t, var
    if best_t is None or best == 0:
        return OtsuResult(127, True)
    return OtsuResult(best_t, False)
