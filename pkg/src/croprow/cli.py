"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 some samples failed, 3 fatal I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .baseline import MASK_SOURCE_NOTE, BaselineConfig, classic_detect, vegetation_mask
from .harness import (
    ManifestError,
    emit_report,
    evaluate_dataset,
    load_manifest,
    load_report,
)
from .imagecore import DecodeError, overlay_rows, read_image, read_mask, write_image
from .rowcluster import PipelineConfig, detect_rows
from .synthgen import DEFAULT_CROP, DEFAULT_SOIL, SceneSpec, perturb_spec, render_mask, render_rgb

log = logging.getLogger("croprow")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _color(text: str):
    try:
        parts = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad colour {text!r}") from None
    if len(parts) != 3 or not all(0 <= v <= 255 for v in parts):
        raise argparse.ArgumentTypeError(f"colour must be R,G,B in 0..255, got {text!r}")
    return parts


def _add_pipeline_flags(p):
    g = p.add_argument_group("row pipeline (override --config)")
    g.add_argument("--config", type=Path, help="JSON file with pipeline settings")
    g.add_argument("--theta-res", type=float, help="Hough theta bin size in degrees (default 0.5)")
    g.add_argument("--rho-res", type=float, help="Hough rho bin size in pixels (default 1)")
    g.add_argument("--vote-threshold", type=int, help="minimum Hough votes per line (default 100)")
    g.add_argument("--nms-radius", type=int, nargs=2, metavar=("THETA", "RHO"),
                   help="peak suppression window in bins (default 2 8)")
    g.add_argument("--eps1", type=float, help="per-image angle clustering radius, degrees (default 2)")
    g.add_argument("--eps2", type=float, help="GT/prediction pairing radius, degrees (default 5)")
    g.add_argument("--min-pts", type=int, help="DBSCAN minimum points (default 1)")
    g.add_argument("--max-thin-iterations", type=int, help="thinning iteration cap (default 100)")
    g.add_argument("--mask-threshold", type=int, default=128,
                   help="gray level at or above which a mask pixel is white (default 128)")


def pipeline_config(args) -> PipelineConfig:
    values = {}
    if args.config is not None:
        try:
            values.update(json.loads(args.config.read_text()))
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
    for key in ("theta_res", "rho_res", "vote_threshold", "nms_radius", "eps1", "eps2",
                "min_pts", "max_thin_iterations"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    try:
        return PipelineConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid pipeline config: {exc}") from None


def _write_output(data: bytes, out: Path | None):
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        out.write_bytes(data)


def _rows_json(rows) -> list:
    return [
        {"angle": r.angle, "theta": r.theta, "rho": r.rho,
         "member_count": r.member_count, "votes": r.votes}
        for r in rows
    ]


def _emit_run(report, args) -> int:
    _write_output(emit_report(report, args.format), args.out)
    if args.figures is not None:
        from .plotting import save_report_figures

        for path in save_report_figures(report, args.figures):
            log.info("wrote %s", path)
    for f in report.failures:
        log.warning("row %d failed: %s", f.row, f.error)
    return EXIT_PARTIAL if report.failures else EXIT_OK


# ---------------------------------------------------------------------------
# subcommands

def cmd_eval(args) -> int:
    config = pipeline_config(args)
    samples = load_manifest(args.manifest)
    report = evaluate_dataset(samples, config, workers=args.workers,
                              mask_threshold=args.mask_threshold)
    return _emit_run(report, args)


def cmd_detect(args) -> int:
    config = pipeline_config(args)
    mask = read_mask(args.mask, args.mask_threshold)
    rows = detect_rows(mask, config)
    h, w = mask.shape
    payload = {"mask": str(args.mask), "width": w, "height": h, "rows": _rows_json(rows)}
    _write_output((json.dumps(payload, indent=2) + "\n").encode(), args.out)
    if args.overlay is not None:
        background = read_image(args.image) if args.image is not None else mask
        write_image(args.overlay, overlay_rows(background, rows, args.color))
    return EXIT_OK


def _baseline_config(args) -> BaselineConfig:
    try:
        return BaselineConfig(
            use_otsu=args.fixed_threshold is None,
            fixed_threshold=128 if args.fixed_threshold is None else args.fixed_threshold,
            open_radius=args.open_radius,
            row_pipeline=pipeline_config(args),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_baseline(args) -> int:
    cfg = _baseline_config(args)
    if args.manifest is not None:
        if args.images:
            raise UsageError("give either images or --manifest, not both")
        samples = load_manifest(args.manifest)
        report = evaluate_dataset(samples, workers=args.workers,
                                  mask_threshold=args.mask_threshold, baseline=cfg)
        return _emit_run(report, args)
    if not args.images:
        raise UsageError("no input images")
    results = []
    for path in args.images:
        img = read_image(path)
        if img.ndim != 3:
            raise UsageError(f"{path} is not an RGB image")
        veg = vegetation_mask(img, cfg)
        rows = classic_detect(img, cfg)
        results.append({
            "image": str(path),
            "threshold": veg.threshold,
            "otsu_degenerate": veg.degenerate,
            "rows": _rows_json(rows),
        })
        if args.overlay_dir is not None:
            args.overlay_dir.mkdir(parents=True, exist_ok=True)
            write_image(args.overlay_dir / (Path(path).stem + "_rows.png"),
                        overlay_rows(img, rows, args.color))
        if args.mask_dir is not None:
            args.mask_dir.mkdir(parents=True, exist_ok=True)
            write_image(args.mask_dir / (Path(path).stem + "_mask.pgm"), veg.mask)
    payload = {"note": MASK_SOURCE_NOTE, "images": results}
    _write_output((json.dumps(payload, indent=2) + "\n").encode(), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = SceneSpec.from_dict(json.loads(args.spec.read_text()))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid scene spec {args.spec}: {exc}") from None
    if args.deltas is not None:
        try:
            spec = perturb_spec(spec, args.deltas)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if not (args.mask or args.gt_mask or args.rgb or args.spec_out):
        raise UsageError("nothing to write: give --mask, --gt-mask, --rgb or --spec-out")
    if args.mask:
        write_image(args.mask, render_mask(spec, speckle=True))
    if args.gt_mask:
        write_image(args.gt_mask, render_mask(spec, speckle=False))
    if args.rgb:
        try:
            write_image(args.rgb, render_rgb(spec, args.crop_color, args.soil_color))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.spec_out:
        args.spec_out.write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = load_report(args.report.read_bytes())
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.report} is not a run report: {exc}") from None
    _write_output(emit_report(report, args.format), args.out)
    if args.figures is not None:
        from .plotting import save_report_figures

        save_report_figures(report, args.figures)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="croprow", description="Crop row extraction and angle-error evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def report_flags(p):
        p.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
        p.add_argument("-o", "--out", type=Path, help="write the report here instead of stdout")
        p.add_argument("--figures", type=Path, metavar="DIR", help="also render PNG figures into DIR")

    p = sub.add_parser("eval", help="score prediction masks against ground truth")
    p.add_argument("manifest", type=Path, help="CSV with columns image,gt_mask,pred_mask,category")
    p.add_argument("--workers", type=int, default=1)
    report_flags(p)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("detect", help="extract crop rows from one mask")
    p.add_argument("mask", type=Path)
    p.add_argument("-o", "--out", type=Path, help="rows JSON destination (default stdout)")
    p.add_argument("--overlay", type=Path, help="write the rows drawn over the mask/image")
    p.add_argument("--image", type=Path, help="background for --overlay instead of the mask")
    p.add_argument("--color", type=_color, default=(255, 0, 0), help="overlay colour R,G,B")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("baseline", help="vegetation-index detector on RGB images")
    p.add_argument("images", type=Path, nargs="*")
    p.add_argument("--manifest", type=Path, help="evaluate baseline masks against gt_mask")
    p.add_argument("--fixed-threshold", type=int, help="use a fixed ExG threshold instead of Otsu")
    p.add_argument("--open-radius", type=int, default=1, help="square opening radius (0 disables)")
    p.add_argument("--overlay-dir", type=Path)
    p.add_argument("--mask-dir", type=Path)
    p.add_argument("--color", type=_color, default=(255, 0, 0))
    p.add_argument("--workers", type=int, default=1)
    report_flags(p)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("synth", help="render a synthetic scene from a JSON spec")
    p.add_argument("spec", type=Path)
    p.add_argument("--mask", type=Path, help="mask including weed speckle")
    p.add_argument("--gt-mask", type=Path, help="mask without speckle")
    p.add_argument("--rgb", type=Path)
    p.add_argument("--spec-out", type=Path, help="write the (perturbed) spec back out")
    p.add_argument("--deltas", type=float, nargs="+", help="per-row angle shifts in degrees")
    p.add_argument("--crop-color", type=_color, default=DEFAULT_CROP)
    p.add_argument("--soil-color", type=_color, default=DEFAULT_SOIL)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="re-render a JSON run report")
    p.add_argument("report", type=Path)
    report_flags(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"croprow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ManifestError as exc:
        print(f"croprow: {exc}", file=sys.stderr)
        return EXIT_IO if exc.io else EXIT_USAGE
    except (OSError, DecodeError) as exc:
        print(f"croprow: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
