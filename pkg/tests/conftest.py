from pathlib import Path

import pytest

from croprow.harness import CategoryReport, RunReport
from croprow.rowcluster import PipelineConfig

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def published_report():
    """Report holding published per-category values, passed through unchanged."""
    row = CategoryReport("a", "Horizontal Shadow", 100, 0.8970, 0.1990, 0.0118, 1.0, 3.0, 3.0)
    overall = CategoryReport("overall", "All Categories", 1000, 0.8936, 0.2325, 0.0215, 1.0, 3.0, 3.0)
    return RunReport([row], overall, PipelineConfig().to_dict())


@pytest.fixture
def golden_dir():
    return GOLDEN
