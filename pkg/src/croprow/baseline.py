"""Classical vegetation-index crop row detector.

Excess green, a global threshold (Otsu or fixed), a square morphological
opening, then the same skeleton/Hough/cluster stage used for segmentation
masks. The opening stands in for the contour step of older pipelines, so a
comparison with a learned mask differs only in where the mask comes from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .imagecore import binarize
from .preprocess import excess_green, otsu_threshold
from .rowcluster import PipelineConfig, detect_rows

MASK_SOURCE_NOTE = (
    "baseline masks: excess-green index + global threshold + square opening "
    "(substitutes for contour detection)"
)


@dataclass(frozen=True)
class BaselineConfig:
    use_otsu: bool = True
    fixed_threshold: int = 128
    open_radius: int = 1
    row_pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        if self.open_radius < 0:
            raise ValueError("open_radius must be >= 0")
        if not 0 <= self.fixed_threshold <= 255:
            raise ValueError("fixed_threshold must be in 0..255")


class VegetationMask(NamedTuple):
    mask: np.ndarray
    threshold: int
    degenerate: bool


def opening(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0:
        return mask
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_opening(mask, structure=structure)


def vegetation_mask(img: np.ndarray, config: BaselineConfig | None = None) -> VegetationMask:
    """Plant pixels of an RGB image.

    With Otsu, pixels strictly above the Otsu split are plants; a constant
    index image reports ``degenerate`` and uses the split at 127.
    """
    config = config or BaselineConfig()
    exg = excess_green(img)
    if config.use_otsu:
        t, degenerate = otsu_threshold(exg)
        cut = t + 1
    else:
        t, degenerate = config.fixed_threshold, False
        cut = t
    mask = opening(binarize(exg, cut), config.open_radius)
    return VegetationMask(mask, t, degenerate)


def classic_detect(img: np.ndarray, config: BaselineConfig | None = None) -> list:
    config = config or BaselineConfig()
    return detect_rows(vegetation_mask(img, config).mask, config.row_pipeline)
