"""Crop row extraction from binary masks and angle-error evaluation."""

__version__ = "0.1.0"

from .anglemetric import AngleErrorResult, evaluate_pair, pair_and_score  # noqa: E402
from .rowcluster import CropRow, PipelineConfig, detect_rows  # noqa: E402

__all__ = [
    "AngleErrorResult",
    "CropRow",
    "PipelineConfig",
    "detect_rows",
    "evaluate_pair",
    "pair_and_score",
]
