"""Command-line front end: augment, maskgen, loss, eval, fuse, synth.

Exit codes: 0 success, 1 validation error (bad flags, missing inputs),
2 processing error (degenerate data, malformed files, codec failures, or any
failed item in batch mode). Batch items are processed independently and
reported per item; parallel workers never change outputs, only wall time.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InsufficientMaskError, TomkitError
from .fusion import CodecSpec, fuse_images
from .imagegrid import (
    read_depth,
    read_mask_png,
    read_pfm,
    write_depth,
    write_mask_png,
    write_pfm,
)
from .loss import LossConfig, ssi_loss, tom_loss, tom_region_count
from .maskgen import MaskGenConfig, reflectance_to_mask
from .metrics import evaluate
from .synth import SceneConfig, make_mirror_scene
from .tonemap import AugmentSpec, TonemapParams, apply_tonemap, compute_scale, random_augment

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PROCESSING = 2

log = logging.getLogger("tomkit")


class CliError(Exception):
    """Argument or input validation failure (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


def _require_inputs(*paths) -> None:
    for p in paths:
        if p is None:
            continue
        if not Path(p).exists():
            raise CliError(f"input path does not exist: {p}")


def _resolve_jobs(args) -> int:
    env = os.environ.get("TOMKIT_JOBS")
    if env is not None:
        try:
            jobs = int(env)
        except ValueError:
            raise CliError(f"TOMKIT_JOBS must be an integer, got {env!r}")
    else:
        jobs = args.jobs
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs < 1:
        raise CliError(f"jobs must be at least 1, got {jobs}")
    return jobs


def _write_json(payload, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_image(arr, path) -> None:
    p = Path(path)
    if p.suffix.lower() == ".pfm":
        write_pfm(arr, p)
    elif p.suffix.lower() == ".png":
        from PIL import Image

        ldr = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0)
        q = np.rint(ldr * 255.0).astype(np.uint8)
        Image.fromarray(q, mode="RGB" if q.ndim == 3 else "L").save(p, format="PNG")
    else:
        raise CliError(f"unsupported output format {p.suffix!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_augment(args) -> int:
    _require_inputs(args.input)
    image = read_pfm(args.input)
    clip = not args.no_clip
    if args.percentile is not None:
        params = TonemapParams(args.gamma, args.target, args.percentile, clip)
        alpha = compute_scale(image, params)
        out = apply_tonemap(image, alpha, gamma=args.gamma, clip=clip)
        sampled = args.percentile
    else:
        lo, hi = args.range
        spec = AugmentSpec(percentile_low=lo, percentile_high=hi, seed=args.seed)
        out, sampled = random_augment(image, spec, TonemapParams(args.gamma, args.target, 90.0, clip))
        alpha = compute_scale(image, TonemapParams(args.gamma, args.target, sampled, clip))
    _write_image(out, args.output)
    print(json.dumps({"percentile": sampled, "alpha": alpha}, sort_keys=True))
    return EXIT_OK


def _cmd_maskgen(args) -> int:
    _require_inputs(args.reflectance)
    cfg = MaskGenConfig(
        threshold=args.threshold, direction=args.direction, erode_radius=args.erode
    )
    mask = reflectance_to_mask(read_pfm(args.reflectance), cfg)
    write_mask_png(mask, args.out)
    return EXIT_OK


def _cmd_loss(args) -> int:
    _require_inputs(args.pred, args.gt, args.tom_mask, args.valid)
    pred = read_depth(args.pred)
    gt = read_depth(args.gt)
    tom_mask = read_mask_png(args.tom_mask)
    valid = read_mask_png(args.valid) if args.valid else None
    cfg = LossConfig(trim_fraction=args.trim)

    ssi = ssi_loss(pred, gt, valid, cfg)
    tmask = tom_mask if valid is None else (tom_mask & valid)
    tom_pixels = tom_region_count(pred, gt, tmask)
    try:
        tom = tom_loss(pred, gt, tmask, cfg)
    except InsufficientMaskError:
        tom = 0.0
    _write_json(
        {"tom": tom, "ssi": ssi, "total": tom + ssi, "tom_pixels": tom_pixels},
        args.out,
    )
    return EXIT_OK


def _eval_one(pred_path, gt_path, mask_path, align):
    pred = read_depth(pred_path)
    gt = read_depth(gt_path)
    tom_mask = read_mask_png(mask_path)
    return evaluate(pred, gt, tom_mask, align_mode=align)


_METRIC_KEYS = ("delta_105", "delta_115", "delta_125", "abs_rel", "rmse", "log_mae")


def _summarize(reports: list) -> dict:
    """Unweighted per-region means over items where the region is present."""
    mean: dict = {}
    for region in ("all", "tom", "other"):
        rows = [r["regions"][region] for r in reports if r["regions"][region] is not None]
        if not rows:
            mean[region] = None
            continue
        entry = {k: sum(row[k] for row in rows) / len(rows) for k in _METRIC_KEYS}
        entry["count"] = sum(row["count"] for row in rows)
        entry["items"] = len(rows)
        mean[region] = entry
    return mean


def _write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pred", "region", *_METRIC_KEYS, "count"])
        for item in rows:
            if item["status"] != "ok":
                continue
            for region in ("all", "tom", "other"):
                rm = item["report"]["regions"][region]
                if rm is None:
                    continue
                writer.writerow(
                    [item["pred"], region, *[repr(rm[k]) for k in _METRIC_KEYS], rm["count"]]
                )


def _cmd_eval(args) -> int:
    if args.list:
        if args.pred or args.gt or args.tom_mask:
            raise CliError("--list cannot be combined with --pred/--gt/--tom-mask")
        _require_inputs(args.list)
        with open(args.list, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
                "pred",
                "gt",
                "mask",
            ]:
                raise CliError(f"{args.list}: header must be 'pred,gt,mask'")
            rows = [(r["pred"].strip(), r["gt"].strip(), r["mask"].strip()) for r in reader]
        if not rows:
            raise CliError(f"{args.list}: no items")
        for row in rows:
            _require_inputs(*row)
        rows.sort(key=lambda r: r[0])

        def work(row):
            try:
                return {"status": "ok", "report": _eval_one(*row, args.align).to_dict()}
            except (TomkitError, ValueError, OSError) as exc:
                return {"status": "error", "error": str(exc)}

        jobs = _resolve_jobs(args)
        if jobs == 1:
            results = [work(row) for row in rows]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(work, rows))

        items = []
        for (pred, gt, mask), res in zip(rows, results):
            items.append({"pred": pred, "gt": gt, "mask": mask, **res})
        ok_reports = [it["report"] for it in items if it["status"] == "ok"]
        failed = len(items) - len(ok_reports)
        summary = {
            "align": args.align,
            "items": items,
            "mean": _summarize(ok_reports) if ok_reports else None,
            "failed": failed,
        }
        _write_json(summary, args.out)
        if args.csv:
            _write_csv(items, args.csv)
        for it in items:
            status = it["status"]
            log.info("%s: %s", it["pred"], status if status == "ok" else it["error"])
        return EXIT_PROCESSING if failed else EXIT_OK

    if not (args.pred and args.gt and args.tom_mask):
        raise CliError("eval requires --pred, --gt and --tom-mask (or --list)")
    _require_inputs(args.pred, args.gt, args.tom_mask)
    report = _eval_one(args.pred, args.gt, args.tom_mask, args.align)
    _write_json(report.to_dict(), args.out)
    return EXIT_OK


def _cmd_fuse(args) -> int:
    _require_inputs(*args.images)
    if args.codec.strip() == "identity":
        codec = CodecSpec.identity()
    else:
        codec = CodecSpec.external(shlex.split(args.codec))
    images = [read_pfm(p) for p in args.images]
    fused = fuse_images(images, codec)
    write_pfm(fused, args.out)
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.preset != "default":
        raise CliError(f"unknown preset {args.preset!r}")
    cfg = SceneConfig(virtual_offset=args.offset, noise_sigma=args.noise)
    scene = make_mirror_scene(cfg, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_depth(scene.gt_depth, out / "gt.pfm")
    write_depth(scene.contaminated_depth, out / "contaminated.pfm")
    write_mask_png(scene.tom_mask, out / "mask.png")
    write_pfm(scene.reflectance, out / "reflectance.pfm")
    _write_json({**cfg.to_dict(), "seed": args.seed}, out / "scene.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--jobs", type=int, default=None, help="parallel workers (TOMKIT_JOBS env overrides)")
    common.add_argument("--log-level", default="warning", choices=["debug", "info", "warning", "error"])

    parser = _Parser(prog="tomkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tomkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("augment", parents=[common], help="percentile-anchored tone mapping")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help=".pfm or .png")
    p.add_argument("--seed", type=int, default=0)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--percentile", type=float, default=None)
    group.add_argument("--range", type=float, nargs=2, default=(70.0, 99.0), metavar=("LO", "HI"))
    p.add_argument("--gamma", type=float, default=1.0 / 2.2)
    p.add_argument("--target", type=float, default=0.8)
    p.add_argument("--no-clip", action="store_true")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("maskgen", parents=[common], help="reflectance map to ToM mask")
    p.add_argument("--reflectance", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--direction", choices=["below", "above"], default="below")
    p.add_argument("--erode", type=int, default=0)
    p.set_defaults(func=_cmd_maskgen)

    p = sub.add_parser("loss", parents=[common], help="ToM + SSI losses for one pair")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--tom-mask", required=True)
    p.add_argument("--valid", default=None)
    p.add_argument("--trim", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("eval", parents=[common], help="per-region metrics, single pair or batch")
    p.add_argument("--pred")
    p.add_argument("--gt")
    p.add_argument("--tom-mask")
    p.add_argument("--align", choices=["none", "lstsq"], default="none")
    p.add_argument("--list", default=None, help="CSV with header pred,gt,mask")
    p.add_argument("--csv", default=None, help="also write a flat per-item CSV (batch mode)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("fuse", parents=[common], help="latent-mean multi-exposure fusion")
    p.add_argument("--images", nargs="+", required=True)
    p.add_argument("--codec", default="identity", help='"identity" or an external codec command line')
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic mirror scene")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--offset", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=_cmd_synth)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliError as exc:
        print(f"tomkit: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # --version / --help
        return exc.code if isinstance(exc.code, int) else 0
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))
    try:
        return args.func(args)
    except CliError as exc:
        print(f"tomkit: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"tomkit: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TomkitError as exc:
        print(f"tomkit: error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING
    except OSError as exc:
        print(f"tomkit: error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
