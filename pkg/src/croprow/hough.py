"""Standard (rho, theta) Hough transform and peak extraction.

Frame: origin at the top-left pixel, x to the right, y down. A line is
``x*cos(theta) + y*sin(theta) = rho`` with theta in [0, 180) degrees, so
theta = 0 is a vertical image line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imagecore import as_mask

_DENSE_CANDIDATES = 4000


@dataclass(frozen=True)
class LineRT:
    rho: float
    theta: float
    votes: int


@dataclass(frozen=True)
class HoughAccumulator:
    votes: np.ndarray  # (n_theta, n_rho) int64
    theta_res: float
    rho_res: float
    rho_offset: int  # column index of rho == 0

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.votes.shape[0]) * self.theta_res

    @property
    def theta_bins(self) -> int:
        return self.votes.shape[0]

    @property
    def rho_bins(self) -> int:
        return self.votes.shape[1]

    def rho_of(self, index: int) -> float:
        return (index - self.rho_offset) * self.rho_res


def theta_bin_count(theta_res: float) -> int:
    if theta_res <= 0:
        raise ValueError("theta_res must be positive")
    n = round(180.0 / theta_res)
    if n < 1 or abs(n * theta_res - 180.0) > 1e-9:
        raise ValueError(f"theta_res {theta_res} does not divide 180 evenly")
    return n


def rho_bin(values: np.ndarray, rho_res: float) -> np.ndarray:
    """Round-half-up of rho / rho_res."""
    return np.floor(values / rho_res + 0.5).astype(np.int64)


def hough_transform(mask, theta_res: float = 0.5, rho_res: float = 1.0) -> HoughAccumulator:
    mask = as_mask(mask)
    if rho_res <= 0:
        raise ValueError("rho_res must be positive")
    n_theta = theta_bin_count(theta_res)
    h, w = mask.shape
    diag = math.hypot(w, h)
    offset = int(math.ceil(diag / rho_res)) + 1
    n_rho = 2 * offset + 1

    thetas = np.deg2rad(np.arange(n_theta) * theta_res)
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    ys, xs = np.nonzero(mask)
    votes = np.zeros((n_theta, n_rho), dtype=np.int64)
    # chunk over pixels to bound the temporary (pixels x thetas) array
    chunk = max(1, 2_000_000 // n_theta)
    rows = np.arange(n_theta, dtype=np.int64)[None, :] * n_rho
    for i in range(0, len(xs), chunk):
        x = xs[i : i + chunk, None].astype(np.float64)
        y = ys[i : i + chunk, None].astype(np.float64)
        idx = rho_bin(x * cos_t + y * sin_t, rho_res) + offset
        votes += np.bincount((idx + rows).ravel(), minlength=n_theta * n_rho).reshape(
            n_theta, n_rho
        )
    return HoughAccumulator(votes, theta_res, rho_res, offset)


def _wrapped(votes: np.ndarray, pad: int) -> np.ndarray:
    """Extend the theta axis circularly.

    Crossing theta = 180 maps (theta, rho) to (theta - 180, -rho), which on a
    symmetric rho axis is a flip of the rho columns.
    """
    if pad == 0:
        return votes
    pad = min(pad, votes.shape[0])
    head = votes[:pad, ::-1]
    tail = votes[-pad:, ::-1]
    return np.concatenate([tail, votes, head], axis=0)


def _near(a, b, n_theta: int, offset: int, radius) -> bool:
    rt, rr = radius
    (ta, ia), (tb, ib) = a, b
    dt = abs(ta - tb)
    if dt <= rt and abs(ia - ib) <= rr:
        return True
    # across the 0/180 seam rho changes sign
    return n_theta - dt <= rt and abs(ia - (2 * offset - ib)) <= rr


def find_peaks(acc: HoughAccumulator, vote_threshold: int = 100, nms_radius=(2, 8)) -> list:
    """Local maxima of the accumulator with at least ``vote_threshold`` votes.

    A bin qualifies when no bin within ``nms_radius`` (theta bins, rho bins)
    has more votes; the theta axis wraps. Among equal plateaus the first bin
    in output order is kept and the others inside its window are dropped.
    Output is ordered by votes descending, then theta and rho ascending.
    """
    if vote_threshold < 1:
        raise ValueError("vote_threshold must be >= 1")
    rt, rr = int(nms_radius[0]), int(nms_radius[1])
    votes = acc.votes
    n_theta = votes.shape[0]
    if votes.max(initial=0) < vote_threshold:
        return []
    pad = min(rt, n_theta)
    ext = _wrapped(votes, pad)
    above = np.argwhere(votes >= vote_threshold)
    if len(above) > _DENSE_CANDIDATES:
        local = ndimage.maximum_filter(
            ext, size=(2 * rt + 1, 2 * rr + 1), mode="constant", cval=0
        )[pad : pad + n_theta]
        cand = np.argwhere((votes >= vote_threshold) & (votes >= local))
    else:
        n_rho = votes.shape[1]
        cand = [
            (t, i)
            for t, i in above
            if votes[t, i]
            >= ext[t : t + 2 * pad + 1, max(0, i - rr) : min(n_rho, i + rr + 1)].max()
        ]
    order = sorted(((-int(votes[t, i]), int(t), int(i)) for t, i in cand))
    kept = []
    for _, t, i in order:
        if any(_near((t, i), k, n_theta, acc.rho_offset, (rt, rr)) for k in kept):
            continue
        kept.append((t, i))
    return [
        LineRT(rho=acc.rho_of(i), theta=t * acc.theta_res, votes=int(votes[t, i]))
        for t, i in kept
    ]


def angle_from_vertical(line) -> float:
    """Deviation of a line's direction from the image vertical, in (-90, 90]."""
    theta = line.theta if isinstance(line, LineRT) else float(line)
    return theta if theta <= 90.0 else theta - 180.0
