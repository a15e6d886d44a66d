"""Angle clustering of Hough lines and the mask -> crop rows pipeline."""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .hough import LineRT, angle_from_vertical, find_peaks, hough_transform
from .imagecore import as_mask
from .preprocess import skeletonize

NOISE = -1


@dataclass(frozen=True)
class PipelineConfig:
    theta_res: float = 0.5
    rho_res: float = 1.0
    vote_threshold: int = 100
    nms_radius: tuple = (2, 8)
    eps1: float = 2.0
    eps2: float = 5.0
    min_pts: int = 1
    max_thin_iterations: int = 100

    def __post_init__(self):
        object.__setattr__(self, "nms_radius", tuple(int(v) for v in self.nms_radius))
        if self.theta_res <= 0 or self.rho_res <= 0:
            raise ValueError("resolutions must be positive")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("eps1 and eps2 must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")
        if self.vote_threshold < 1:
            raise ValueError("vote_threshold must be >= 1")
        if self.max_thin_iterations < 1:
            raise ValueError("max_thin_iterations must be >= 1")
        if len(self.nms_radius) != 2 or min(self.nms_radius) < 0:
            raise ValueError("nms_radius must be two non-negative bin counts")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nms_radius"] = list(self.nms_radius)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class ClusterLabeling:
    labels: list = field(default_factory=list)
    cluster_count: int = 0

    def clusters(self) -> list:
        """Member indices per cluster id."""
        out = [[] for _ in range(self.cluster_count)]
        for i, lab in enumerate(self.labels):
            if lab != NOISE:
                out[lab].append(i)
        return out


@dataclass(frozen=True)
class CropRow:
    angle: float
    rho: float
    member_count: int = 1
    votes: int = 0

    @property
    def theta(self) -> float:
        return self.angle % 180.0


def circular_distance(a, b):
    """Distance between angles on a 180-degree circle."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 180.0
    return np.minimum(d, 180.0 - d)


def dbscan_circular(values, eps: float, min_pts: int = 1) -> ClusterLabeling:
    """DBSCAN over angles with the 180-periodic metric.

    A point is core when at least ``min_pts`` points (itself included) lie
    within ``eps``. Points are visited in input order and each cluster is
    expanded breadth-first with neighbours in ascending index order, so a
    border point reachable from several clusters joins the earliest-created.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    vals = np.asarray(list(values), dtype=float)
    n = len(vals)
    if n == 0:
        return ClusterLabeling([], 0)
    adj = circular_distance(vals[:, None], vals[None, :]) <= eps
    core = adj.sum(axis=1) >= min_pts
    labels = [NOISE] * n
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cluster
        queue = deque([i])
        while queue:
            p = queue.popleft()
            if not core[p]:
                continue
            for q in np.flatnonzero(adj[p]):
                if labels[q] == NOISE:
                    labels[q] = cluster
                    queue.append(q)
        cluster += 1
    return ClusterLabeling([int(v) for v in labels], cluster)


def select_candidate(cluster) -> CropRow:
    """Pick the member line closest to vertical.

    ``cluster`` holds ``(angle, LineRT)`` pairs. Ties go to the non-negative
    angle, then to the smaller rho.
    """
    cluster = list(cluster)
    if not cluster:
        raise ValueError("cluster must be non-empty")
    angle, line = min(cluster, key=lambda m: (abs(m[0]), m[0] < 0, m[1].rho))
    return CropRow(angle=angle, rho=line.rho, member_count=len(cluster), votes=line.votes)


def rows_from_lines(lines, config: PipelineConfig) -> list:
    angles = [angle_from_vertical(line) for line in lines]
    labeling = dbscan_circular(angles, config.eps1, config.min_pts)
    rows = [
        select_candidate([(angles[i], lines[i]) for i in members])
        for members in labeling.clusters()
    ]
    return sorted(rows, key=lambda r: (r.rho, r.angle))


def detect_rows(mask, config: PipelineConfig | None = None) -> list:
    """Crop rows in a binary mask.

    skeletonize -> Hough -> peaks -> angles -> DBSCAN(eps1) -> one candidate
    per cluster. Rows come back sorted by rho.
    """
    config = config or PipelineConfig()
    mask = as_mask(mask)
    if not mask.any():
        return []
    skeleton, _ = skeletonize(mask, config.max_thin_iterations)
    acc = hough_transform(skeleton, config.theta_res, config.rho_res)
    lines = find_peaks(acc, config.vote_threshold, config.nms_radius)
    return rows_from_lines(lines, config)
