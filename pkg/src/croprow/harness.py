"""Dataset manifests, batch evaluation and report rendering."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .anglemetric import evaluate_pair
from .imagecore import DecodeError, read_image, read_mask
from .rowcluster import PipelineConfig

CATEGORIES = {
    "a": "Horizontal Shadow",
    "b": "Slope/ Curve",
    "c": "Discontinuities",
    "d": "Front Shadow",
    "e": "Dense Weed",
    "f": "Large Crops",
    "g": "Small Crops",
    "h": "Sunlight",
    "i": "Tyre Tracks",
    "j": "Sparse Weed",
}
UNCATEGORIZED = "uncategorized"
OVERALL = "overall"
CATEGORY_NAMES = {**CATEGORIES, UNCATEGORIZED: "Uncategorized", OVERALL: "All Categories"}

MANIFEST_COLUMNS = ("image", "gt_mask", "pred_mask", "category")
CSV_COLUMNS = (
    "category_id",
    "category_name",
    "samples",
    "accuracy",
    "mean_iou",
    "angle_error_deg",
    "detection_rate",
    "mean_gt_rows",
    "mean_pred_rows",
)


class ManifestError(ValueError):
    """Bad manifest content; ``io`` marks an unreadable referenced file."""

    def __init__(self, message: str, io: bool = False):
        super().__init__(message)
        self.io = io


@dataclass(frozen=True)
class Sample:
    gt_mask_path: Path
    pred_mask_path: Path
    category_id: str = UNCATEGORIZED
    image_path: Path | None = None
    row: int = 0


@dataclass(frozen=True)
class SampleResult:
    row: int
    category_id: str
    accuracy: float | None = None
    iou: float | None = None
    angle_error: float | None = None
    k: int = 0
    gt_rows: int = 0
    pred_rows: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class CategoryReport:
    category_id: str
    category_name: str
    sample_count: int
    mean_accuracy: float
    mean_iou: float
    mean_angle_error: float | None
    detection_rate: float
    mean_gt_rows: float
    mean_pred_rows: float


@dataclass
class RunReport:
    per_category: list
    overall: CategoryReport | None
    config: dict
    tool_version: str = __version__
    samples: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [s for s in self.samples if not s.ok]

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "config": self.config,
            "per_category": [asdict(c) for c in self.per_category],
            "overall": asdict(self.overall) if self.overall else None,
            "samples": [asdict(s) for s in self.samples],
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            per_category=[CategoryReport(**c) for c in data["per_category"]],
            overall=CategoryReport(**data["overall"]) if data.get("overall") else None,
            config=dict(data.get("config", {})),
            tool_version=data.get("tool_version", __version__),
            samples=[SampleResult(**s) for s in data.get("samples", [])],
            notes=list(data.get("notes", [])),
        )


# ---------------------------------------------------------------------------
# manifest

def load_manifest(path) -> list:
    """Parse ``image,gt_mask,pred_mask,category`` rows; paths are relative to the file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    base = path.parent
    samples = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(h.strip() for h in (reader.fieldnames or ()))
        if header != MANIFEST_COLUMNS:
            raise ManifestError(
                f"manifest header must be {','.join(MANIFEST_COLUMNS)}, got {','.join(header)}"
            )
        for n, rec in enumerate(reader, start=1):
            rec = {k.strip(): (v or "").strip() for k, v in rec.items() if k is not None}
            cat = rec["category"].lower()
            if cat and cat not in CATEGORIES:
                raise ManifestError(f"row {n}: unknown category {rec['category']!r}")
            paths = {}
            for col in MANIFEST_COLUMNS[:3]:
                if not rec[col]:
                    if col == "image":
                        paths[col] = None
                        continue
                    raise ManifestError(f"row {n}: empty {col} field")
                p = (base / rec[col]).resolve()
                if not p.is_file() or not os.access(p, os.R_OK):
                    raise ManifestError(f"row {n}: cannot read {col} file {p}", io=True)
                paths[col] = p
            samples.append(
                Sample(
                    gt_mask_path=paths["gt_mask"],
                    pred_mask_path=paths["pred_mask"],
                    category_id=cat or UNCATEGORIZED,
                    image_path=paths["image"],
                    row=n,
                )
            )
    return samples


# ---------------------------------------------------------------------------
# evaluation

def _prediction(sample: Sample, mask_threshold: int, baseline):
    if baseline is None:
        return read_mask(sample.pred_mask_path, mask_threshold)
    from .baseline import vegetation_mask

    if sample.image_path is None:
        raise ValueError("baseline evaluation needs the image column")
    img = read_image(sample.image_path)
    if img.ndim != 3:
        raise ValueError("baseline evaluation needs an RGB image")
    return vegetation_mask(img, baseline).mask


def evaluate_sample(
    sample: Sample, config: PipelineConfig, mask_threshold: int = 128, baseline=None
) -> SampleResult:
    """Score one sample; failures are captured in ``SampleResult.error``.

    With a ``baseline`` config the prediction is the vegetation mask of the
    sample's RGB image instead of ``pred_mask``.
    """
    try:
        gt = read_mask(sample.gt_mask_path, mask_threshold)
        pred = _prediction(sample, mask_threshold, baseline)
        ev = evaluate_pair(gt, pred, config)
    except (DecodeError, ValueError, OSError) as exc:
        return SampleResult(sample.row, sample.category_id, error=f"{type(exc).__name__}: {exc}")
    return SampleResult(
        row=sample.row,
        category_id=sample.category_id,
        accuracy=ev.scores.accuracy,
        iou=ev.scores.iou,
        angle_error=ev.angle.mean_error,
        k=ev.angle.k,
        gt_rows=ev.gt_row_count,
        pred_rows=ev.pred_row_count,
    )


def _evaluate_job(args):
    return evaluate_sample(*args)


def _category_order(cat: str):
    return (cat not in CATEGORIES, cat)


def aggregate(results, category_id: str) -> CategoryReport | None:
    """Means over successful results; angle error only over detected samples."""
    ok = [r for r in results if r.ok]
    if not ok:
        return None
    n = len(ok)
    detected = [r.angle_error for r in ok if r.k >= 1]
    return CategoryReport(
        category_id=category_id,
        category_name=CATEGORY_NAMES.get(category_id, category_id),
        sample_count=n,
        mean_accuracy=math.fsum(r.accuracy for r in ok) / n,
        mean_iou=math.fsum(r.iou for r in ok) / n,
        mean_angle_error=math.fsum(detected) / len(detected) if detected else None,
        detection_rate=len(detected) / n,
        mean_gt_rows=math.fsum(r.gt_rows for r in ok) / n,
        mean_pred_rows=math.fsum(r.pred_rows for r in ok) / n,
    )


def build_report(results, config: PipelineConfig, notes=()) -> RunReport:
    results = sorted(results, key=lambda r: r.row)
    cats = sorted({r.category_id for r in results}, key=_category_order)
    per_category = [
        rep
        for cat in cats
        if (rep := aggregate([r for r in results if r.category_id == cat], cat)) is not None
    ]
    return RunReport(
        per_category=per_category,
        overall=aggregate(results, OVERALL),
        config=config.to_dict(),
        samples=results,
        notes=list(notes),
    )


def evaluate_dataset(
    samples,
    config: PipelineConfig | None = None,
    workers: int = 1,
    mask_threshold: int = 128,
    baseline=None,
) -> RunReport:
    """Evaluate every sample and aggregate per category.

    Sums use ``math.fsum`` so the report does not depend on sample order or
    on ``workers``.
    """
    config = config or PipelineConfig()
    samples = list(samples)
    if not samples:
        raise ValueError("no samples to evaluate")
    if baseline is not None:
        # the baseline carries its own row pipeline
        config = baseline.row_pipeline
    jobs = [(s, config, mask_threshold, baseline) for s in samples]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_job, jobs, chunksize=4))
    else:
        results = [_evaluate_job(j) for j in jobs]
    notes = ()
    if baseline is not None:
        from .baseline import MASK_SOURCE_NOTE

        notes = (MASK_SOURCE_NOTE,)
    return build_report(results, config, notes)


# ---------------------------------------------------------------------------
# resizing

def resize_global(img: np.ndarray, target=(512, 512)) -> np.ndarray:
    """Resize to ``target`` = (width, height).

    Masks use nearest neighbour so they stay binary; gray and RGB images use
    bilinear interpolation with pixel-centre alignment.
    """
    img = np.asarray(img)
    tw, th = int(target[0]), int(target[1])
    h, w = img.shape[:2]
    if (w, h) == (tw, th):
        return img.copy()
    if img.dtype == bool:
        sx = np.minimum(((np.arange(tw) + 0.5) * w / tw).astype(np.int64), w - 1)
        sy = np.minimum(((np.arange(th) + 0.5) * h / th).astype(np.int64), h - 1)
        return img[sy[:, None], sx[None, :]]

    def coords(n_out, n_in):
        c = np.clip((np.arange(n_out) + 0.5) * n_in / n_out - 0.5, 0, n_in - 1)
        lo = np.floor(c).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, c - lo

    x0, x1, fx = coords(tw, w)
    y0, y1, fy = coords(th, h)
    src = img.astype(np.float64)
    if src.ndim == 3:
        fx, fy = fx[None, :, None], fy[:, None, None]
    else:
        fx, fy = fx[None, :], fy[:, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bottom * fy
    return np.clip(np.floor(out + 0.5), 0, 255).astype(img.dtype)


# ---------------------------------------------------------------------------
# rendering

def _fmt(value, digits: int, scale: float = 1.0, na: str = "NA") -> str:
    return na if value is None else f"{value * scale:.{digits}f}"


def _csv_row(rep: CategoryReport) -> list:
    return [
        rep.category_id,
        rep.category_name,
        str(rep.sample_count),
        _fmt(rep.mean_accuracy, 2, 100.0),
        _fmt(rep.mean_iou, 4),
        _fmt(rep.mean_angle_error, 4),
        _fmt(rep.detection_rate, 4),
        _fmt(rep.mean_gt_rows, 2),
        _fmt(rep.mean_pred_rows, 2),
    ]


def _rows(report: RunReport) -> list:
    rows = list(report.per_category)
    if report.overall is not None:
        rows.append(report.overall)
    return rows


def render_csv(report: RunReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in _rows(report):
        writer.writerow(_csv_row(rep))
    return buf.getvalue()


def render_markdown(report: RunReport) -> str:
    lines = [
        "| Category Name | Accuracy | Mean IoU | Angle Error | Detection Rate | Samples |",
        "|---|---|---|---|---|---|",
    ]
    for rep in _rows(report):
        lines.append(
            f"| {rep.category_name} | {_fmt(rep.mean_accuracy, 2, 100.0)}% "
            f"| {_fmt(rep.mean_iou, 4)} | {_fmt(rep.mean_angle_error, 4)}"
            f"{'' if rep.mean_angle_error is None else '°'} "
            f"| {_fmt(rep.detection_rate, 4)} | {rep.sample_count} |"
        )
    for note in report.notes:
        lines.append("")
        lines.append(f"Note: {note}")
    failures = report.failures
    if failures:
        lines.append("")
        lines.append(f"{len(failures)} sample(s) failed:")
        lines.extend(f"- row {f.row}: {f.error}" for f in failures)
    return "\n".join(lines) + "\n"


def render_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"


def emit_report(report: RunReport, format: str = "csv") -> bytes:
    renderers = {"csv": render_csv, "json": render_json, "markdown": render_markdown, "md": render_markdown}
    try:
        render = renderers[format]
    except KeyError:
        raise ValueError(f"unknown report format {format!r}") from None
    return render(report).encode("utf-8")


def load_report(data) -> RunReport:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    return RunReport.from_dict(json.loads(data))
