"""Deterministic synthetic crop-row scenes with known geometry.

Row geometry
------------
A row with ``angle`` a (degrees from vertical, in (-90, 90]) and ``offset`` p
is the line ``x*cos(a) + y*sin(a) = p`` in the image frame (origin top-left,
y down). For a >= 0 this is exactly the Hough normal form; for a < 0 the Hough
line is (theta = a + 180, rho = -p). A pixel belongs to a row of width w when
its signed distance d to the line satisfies ``-w/2 <= d < w/2``.

Gaps are half-open fractions ``[start, end)`` of the row's centreline segment
inside the image, measured from the end with the smaller y.

Random numbers
--------------
All randomness comes from SplitMix64 (Steele, Lea & Flood 2014). The i-th
output (i >= 1) for seed s is ``mix(s + i * 0x9E3779B97F4A7C15 mod 2**64)``
and a uniform float is ``(out >> 11) * 2**-53``. Speckle uses output
``1 + pixel_index`` (row-major) of the stream seeded with the scene seed, so
the same spec renders identically everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .imagecore import clip_line

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1
SPECKLE_CLEARANCE = 3.0

DEFAULT_CROP = (40, 160, 40)
DEFAULT_SOIL = (120, 85, 60)


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential SplitMix64 stream."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return _mix(self.state)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0**-53)

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive."""
        return lo + int(self.uniform() * (hi - lo + 1))


def splitmix_uniform(seed: int, count: int, start: int = 1) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of the stream as uniforms in [0, 1)."""
    with np.errstate(over="ignore"):
        i = np.arange(start, start + count, dtype=np.uint64)
        z = np.uint64(seed & MASK64) + i * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def wrap_angle(a: float) -> float:
    """Map an angle into (-90, 90]."""
    a = math.fmod(a, 180.0)
    if a > 90.0:
        a -= 180.0
    elif a <= -90.0:
        a += 180.0
    return a


@dataclass(frozen=True)
class RowSpec:
    angle: float
    offset: float
    width: int = 1
    gaps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple(tuple(map(float, g)) for g in self.gaps))
        if not -90.0 < self.angle <= 90.0:
            raise ValueError(f"row angle {self.angle} outside (-90, 90]")
        if self.width < 1:
            raise ValueError("row width must be >= 1")
        prev_end = 0.0
        for start, end in sorted(self.gaps):
            if not 0.0 <= start <= end <= 1.0:
                raise ValueError(f"gap {(start, end)} not within [0, 1]")
            if start < prev_end:
                raise ValueError("gaps overlap")
            prev_end = end

    @classmethod
    def through(cls, angle: float, x: float, y: float, width: int = 1, gaps=()) -> "RowSpec":
        """Row at ``angle`` passing through pixel position (x, y)."""
        a = math.radians(angle)
        return cls(angle, x * math.cos(a) + y * math.sin(a), width, gaps)

    @property
    def hough_theta(self) -> float:
        return self.angle % 180.0

    @property
    def hough_rho(self) -> float:
        return self.offset if self.angle >= 0 else -self.offset

    def to_dict(self) -> dict:
        return {
            "angle": self.angle,
            "offset": self.offset,
            "width": self.width,
            "gaps": [list(g) for g in self.gaps],
        }


@dataclass(frozen=True)
class SceneSpec:
    size: tuple = (512, 512)
    rows: tuple = ()
    speckle_density: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "size", tuple(int(v) for v in self.size))
        object.__setattr__(self, "rows", tuple(self.rows))
        w, h = self.size
        if w < 32 or h < 32:
            raise ValueError("scene must be at least 32x32")
        if not 0.0 <= self.speckle_density < 0.5:
            raise ValueError("speckle_density must be in [0, 0.5)")

    @property
    def width(self) -> int:
        return self.size[0]

    @property
    def height(self) -> int:
        return self.size[1]

    def to_dict(self) -> dict:
        return {
            "size": list(self.size),
            "rows": [r.to_dict() for r in self.rows],
            "speckle_density": self.speckle_density,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        rows = tuple(
            RowSpec(
                angle=float(r["angle"]),
                offset=float(r["offset"]),
                width=int(r.get("width", 1)),
                gaps=tuple(tuple(g) for g in r.get("gaps", ())),
            )
            for r in data.get("rows", ())
        )
        return cls(
            size=tuple(data["size"]),
            rows=rows,
            speckle_density=float(data.get("speckle_density", 0.0)),
            seed=int(data.get("seed", 0)),
        )


def _grid(spec: SceneSpec):
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width]
    return xs.astype(np.float64), ys.astype(np.float64)


def _signed_distance(row: RowSpec, xs, ys):
    a = math.radians(row.angle)
    return xs * math.cos(a) + ys * math.sin(a) - row.offset


def row_pixels(row: RowSpec, size, gaps: bool = True) -> np.ndarray:
    """Mask of one row (band minus gaps) on an image of ``size`` = (w, h)."""
    w, h = size
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    d = _signed_distance(row, xs, ys)
    band = (d >= -row.width / 2.0) & (d < row.width / 2.0)
    if not gaps or not row.gaps:
        return band
    ends = clip_line(row.hough_rho, row.hough_theta, w, h)
    if ends is None:
        return band
    a = math.radians(row.angle)
    # coordinate along the row, increasing with y
    along = -xs * math.sin(a) + ys * math.cos(a)
    t_ends = sorted(-x * math.sin(a) + y * math.cos(a) for x, y in ends)
    length = t_ends[1] - t_ends[0]
    if length <= 0:
        return band
    frac = (along - t_ends[0]) / length
    erased = np.zeros_like(band)
    for start, end in row.gaps:
        erased |= (frac >= start) & (frac < end)
    return band & ~erased


def speckle_pixels(spec: SceneSpec) -> np.ndarray:
    """Weed surrogate: seeded single pixels kept clear of every row."""
    w, h = spec.size
    if spec.speckle_density <= 0:
        return np.zeros((h, w), dtype=bool)
    u = splitmix_uniform(spec.seed, w * h).reshape(h, w)
    speck = u < spec.speckle_density
    if spec.rows:
        xs, ys = _grid(spec)
        for row in spec.rows:
            d = np.abs(_signed_distance(row, xs, ys))
            speck &= d >= row.width / 2.0 + SPECKLE_CLEARANCE
    return speck


def render_mask(spec: SceneSpec, speckle: bool = True) -> np.ndarray:
    """Rasterize the rows; with ``speckle`` the weed pixels are added too.

    Pass ``speckle=False`` for a ground-truth mask (weeds are not crop rows).
    """
    w, h = spec.size
    mask = np.zeros((h, w), dtype=bool)
    for row in spec.rows:
        mask |= row_pixels(row, spec.size)
    if speckle:
        mask |= speckle_pixels(spec)
    return mask


def render_rgb(spec: SceneSpec, crop_color=DEFAULT_CROP, soil_color=DEFAULT_SOIL) -> np.ndarray:
    """RGB scene: rows and speckle in ``crop_color`` over ``soil_color``."""
    if tuple(crop_color) == tuple(soil_color):
        raise ValueError("crop and soil colours must differ")
    mask = render_mask(spec, speckle=True)
    w, h = spec.size
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = soil_color
    img[mask] = crop_color
    return img


def perturb_spec(spec: SceneSpec, angle_deltas) -> SceneSpec:
    """Shift each row's angle by its delta, wrapping into (-90, 90]."""
    angle_deltas = list(angle_deltas)
    if len(angle_deltas) != len(spec.rows):
        raise ValueError(
            f"expected {len(spec.rows)} angle deltas, got {len(angle_deltas)}"
        )
    rows = tuple(
        replace(r, angle=wrap_angle(r.angle + d)) for r, d in zip(spec.rows, angle_deltas)
    )
    return replace(spec, rows=rows)


def random_gaps(rng: SplitMix64, total: float, max_count: int = 3) -> tuple:
    """Up to ``max_count`` non-overlapping gaps covering ``total`` of the row."""
    if total <= 0:
        return ()
    n = rng.randint(1, max_count)
    slot = 1.0 / n
    length = total / n
    gaps = []
    for i in range(n):
        start = i * slot + rng.uniform(0.0, slot - length)
        gaps.append((start, start + length))
    return tuple(gaps)


def random_scene(
    seed: int,
    size=(512, 512),
    row_count=(1, 4),
    angle_range=(-45.0, 45.0),
    min_separation: float = 10.0,
    width_range=(1, 9),
    max_gap: float = 0.3,
    speckle_density: float = 0.0,
) -> SceneSpec:
    """Random scene whose rows cross the middle band of the image.

    Row angles are drawn uniformly and rejected until every pair is at least
    ``min_separation`` apart on the 180-degree circle.
    """
    rng = SplitMix64(seed)
    w, h = size
    n = rng.randint(*row_count)
    angles: list = []
    while len(angles) < n:
        a = rng.uniform(*angle_range)
        if all(min(abs(a - b) % 180, 180 - abs(a - b) % 180) >= min_separation for b in angles):
            angles.append(a)
    rows = []
    for a in angles:
        x = rng.uniform(0.3 * w, 0.7 * w)
        width = rng.randint(*width_range)
        gaps = random_gaps(rng, rng.uniform(0.0, max_gap))
        rows.append(RowSpec.through(a, x, h / 2.0, width, gaps))
    return SceneSpec(size=tuple(size), rows=tuple(rows), speckle_density=speckle_density, seed=seed)
