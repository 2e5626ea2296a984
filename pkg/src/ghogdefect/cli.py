"""Command-line front end: detect, batch, eval and synth subcommands."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from . import artifacts, metrics
from .config import ConfigError, RunConfig, load_config, merge
from .estimators import DefectDetector, grid_for_features
from .image import ImageLoadError, load_image, make_block_grid, save_gray_png, to_uint8
from .synth import Defect, KINDS, MOTIFS, SHAPES, SynthSpec, generate

log = logging.getLogger("ghogdefect")

IMAGE_SUFFIXES = {".png", ".pgm", ".ppm", ".pnm", ".bmp", ".tif", ".tiff"}

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


class InputError(Exception):
    """Bad or missing input data; mapped to the I/O exit code."""


def _common(parser, top=False):
    # subcommands must not reset values given before the subcommand name
    kw = {} if top else {"default": argparse.SUPPRESS}
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration", **kw)
    parser.add_argument("--out", metavar="DIR", help="output directory", **kw)
    parser.add_argument("--print-config", action="store_true",
                        help="print the resolved configuration and exit", **kw)


def _outputs(parser):
    parser.add_argument("--trace", action="store_true", help="write solver trace CSV")
    parser.add_argument("--dump-maps", action="store_true",
                        help="write Gabor maps as float32 grids")
    parser.add_argument("--dump-features", action="store_true",
                        help="write the feature matrix as CSV")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ghogdefect",
                                description="Defect detection in periodic textures.")
    p.add_argument("-v", "--verbose", action="store_true")
    _common(p, top=True)
    sub = p.add_subparsers(dest="command")

    d = sub.add_parser("detect", help="detect defects in one image")
    d.add_argument("image", nargs="?", help="input image (PNG/PGM)")
    d.add_argument("--truth", metavar="PATH", help="ground-truth mask for scoring")
    d.add_argument("--features", metavar="CSV",
                   help="skip extraction and decompose a saved feature matrix")
    d.add_argument("--grid", metavar="ROWSxCOLS", help="block grid for --features")
    _outputs(d)
    _common(d)

    b = sub.add_parser("batch", help="detect defects in every image of a directory")
    b.add_argument("directory")
    b.add_argument("--masks", metavar="DIR",
                   help="ground-truth masks (default: a sibling 'masks' directory)")
    b.add_argument("--workers", type=int, default=1, metavar="N")
    _outputs(b)
    _common(b)

    e = sub.add_parser("eval", help="score a mask against ground truth")
    e.add_argument("mask")
    e.add_argument("truth")
    _common(e)

    s = sub.add_parser("synth", help="generate synthetic textures with masks")
    s.add_argument("--motif", choices=MOTIFS)
    s.add_argument("--period", type=int)
    s.add_argument("--size", type=int, dest="image_size")
    s.add_argument("--noise", type=float, dest="noise_sigma")
    s.add_argument("--seed", type=int)
    s.add_argument("--defect-kind", choices=KINDS)
    s.add_argument("--defect-shape", choices=SHAPES)
    s.add_argument("--defect-size", type=int, metavar="PX", help="square defect side")
    s.add_argument("--no-defect", action="store_true")
    s.add_argument("--count", type=int, default=1, help="images to generate (seeds increase)")
    _common(s)
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return merge(cfg, output=args.out)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(path) -> np.ndarray:
    try:
        return load_image(path)
    except ImageLoadError as exc:
        raise InputError(str(exc)) from exc


def _load_mask(path) -> np.ndarray:
    return _load(path) >= 0.5


def _save_mask(path, mask):
    save_gray_png(path, np.where(mask, 255, 0))


def _write_outputs(res, out: Path, stem: str, args, truth=None):
    save_gray_png(out / f"{stem}_saliency.png", res.grid.broadcast(res.gray))
    _save_mask(out / f"{stem}_mask.png", res.mask)
    dec = res.decomposition
    if getattr(args, "trace", False):
        artifacts.write_trace_csv(out / f"{stem}_trace.csv", dec.residual_trace,
                                  dec.objective_trace)
    if getattr(args, "dump_features", False):
        artifacts.write_feature_csv(out / f"{stem}_features.csv", res.features)
    if getattr(args, "dump_maps", False) and res.maps is not None:
        mdir = out / f"{stem}_maps"
        mdir.mkdir(exist_ok=True)
        for i, m in enumerate(res.maps):
            artifacts.write_float_map(mdir / f"map{i:02d}.f32", m)
    if truth is None:
        return None
    truth = res.grid.crop(truth)
    report = metrics.evaluate(res.mask, truth, res.gray, res.grid)
    metrics.write_roc_csv(out / f"{stem}_roc.csv", report.roc)
    return report


def _parse_grid(text):
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"--grid must look like ROWSxCOLS, got {text!r}") from None
    return rows, cols


def cmd_detect(args, cfg: RunConfig) -> int:
    image = args.image or cfg.input
    if image is None and args.features is None:
        raise ConfigError("detect needs an image path (argument or config 'input')")
    out = _out_dir(cfg)
    det = DefectDetector.from_config(cfg)
    if args.features:
        try:
            F = artifacts.read_feature_csv(args.features)
        except OSError as exc:
            raise InputError(f"cannot read feature file {args.features}: {exc}") from exc
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        if image is not None:
            grid = make_block_grid(_load(image), cfg.block_size)
            if grid.K != F.shape[1]:
                raise InputError(f"{args.features} has K={F.shape[1]}, image grid has {grid.K}")
        else:
            grid = grid_for_features(F, _parse_grid(args.grid) if args.grid else None,
                                     cfg.block_size)
        res = det.detect_features(F, grid)
        stem = Path(args.features).stem
    else:
        img = _load(image)
        res = det.detect(img, keep_maps=args.dump_maps)
        stem = Path(image).stem
    truth = _load_mask(args.truth) if args.truth else None
    report = _write_outputs(res, out, stem, args, truth)
    dec = res.decomposition
    print(f"{stem}: {int(res.defect.block_mask.sum())}/{res.grid.K} defect blocks, "
          f"threshold {res.defect.threshold_used}, {dec.iters_run} iterations, "
          f"residual {dec.final_residual:.2e}")
    if report is not None:
        metrics.write_report_csv(out / f"{stem}_metrics.csv", [(stem, report)], summary=False)
        print(f"precision {report.precision:.4f} recall {report.recall:.4f} "
              f"F {report.f_measure:.4f} AUC {report.auc:.4f}")
    return EXIT_OK


def _find_mask(mask_dir: Path | None, stem: str):
    if mask_dir is None:
        return None
    for name in (stem, f"{stem}_mask"):
        for suf in sorted(IMAGE_SUFFIXES):
            p = mask_dir / f"{name}{suf}"
            if p.is_file():
                return p
    return None


def _batch_job(task):
    det, path, img, mask_dir, out, args = task
    res = det.detect(img, keep_maps=args.dump_maps)
    mpath = _find_mask(mask_dir, path.stem)
    truth = None
    if mpath is not None:
        truth = _load_mask(mpath)
        if truth.shape != img.shape:
            log.warning("ignoring mask %s: size %s differs from image %s",
                        mpath.name, truth.shape, img.shape)
            truth = None
    return path.stem, _write_outputs(res, out, path.stem, args, truth)


def cmd_batch(args, cfg: RunConfig) -> int:
    src = Path(args.directory)
    if not src.is_dir():
        raise InputError(f"not a directory: {src}")
    files = sorted(p for p in src.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise InputError(f"no supported images in {src}")
    if args.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {args.workers}")
    mask_dir = Path(args.masks) if args.masks else src.parent / "masks"
    if not mask_dir.is_dir():
        if args.masks:
            raise InputError(f"not a directory: {mask_dir}")
        mask_dir = None
    out = _out_dir(cfg)

    # load in name order so the reference size, and thus skips, are deterministic
    jobs, ref_shape, skipped = [], None, 0
    for path in files:
        try:
            img = load_image(path)
        except ImageLoadError as exc:
            log.warning("skipping %s: %s", path.name, exc)
            skipped += 1
            continue
        if ref_shape is None:
            ref_shape = img.shape
        elif img.shape != ref_shape:
            log.warning("skipping %s: size %s differs from %s", path.name, img.shape, ref_shape)
            skipped += 1
            continue
        jobs.append((path, img))
    if not jobs:
        raise InputError(f"no readable images in {src}")

    det = DefectDetector.from_config(cfg)
    tasks = [(det, path, img, mask_dir, out, args) for path, img in jobs]
    if args.workers == 1:
        results = [_batch_job(t) for t in tasks]
    else:
        # processes, because the filtering and SVD work mostly holds the GIL
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_batch_job, tasks))
    scored = [(name, rep) for name, rep in results if rep is not None]
    if scored:
        metrics.write_report_csv(out / "metrics.csv", scored)
    print(f"processed {len(jobs)} image(s), skipped {skipped}, scored {len(scored)}")
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    mask, truth = _load_mask(args.mask), _load_mask(args.truth)
    if mask.shape != truth.shape:
        raise InputError(f"mask {args.mask} is {mask.shape}, truth {args.truth} is {truth.shape}")
    rep = metrics.evaluate(mask, truth)
    c = rep.confusion
    print(f"tp {c.tp} tn {c.tn} fp {c.fp} fn {c.fn}")
    print(f"precision {rep.precision:.4f} recall {rep.recall:.4f} F {rep.f_measure:.4f}")
    if cfg.output:
        out = _out_dir(cfg)
        metrics.write_report_csv(out / "eval.csv", [(Path(args.mask).stem, rep)], summary=False)
    return EXIT_OK


def _synth_spec(args, cfg: RunConfig) -> SynthSpec:
    base = cfg.synth.to_dict() if cfg.synth is not None else SynthSpec().to_dict()
    for k in ("motif", "period", "image_size", "noise_sigma", "seed"):
        v = getattr(args, k)
        if v is not None:
            base[k] = v
    size = base["image_size"]
    if args.no_defect:
        base["defect"] = None
    elif base["defect"] is None or any(
            v is not None for v in (args.defect_kind, args.defect_shape, args.defect_size)):
        d = dict(base["defect"] or {})
        side = args.defect_size or (d.get("size") or (size // 4, size // 4))[0]
        if args.defect_size or "position" not in d:
            d["size"] = (side, side)
            d["position"] = ((size - side) // 2, (size - side) // 2)
        if args.defect_kind:
            d["kind"] = args.defect_kind
        if args.defect_shape:
            d["shape"] = args.defect_shape
        base["defect"] = d
    try:
        return SynthSpec(**base)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"synth: {exc}") from exc


def cmd_synth(args, cfg: RunConfig) -> int:
    spec = _synth_spec(args, cfg)
    if args.count < 1:
        raise ConfigError(f"--count must be >= 1, got {args.count}")
    out = _out_dir(cfg)
    (out / "images").mkdir(exist_ok=True)
    (out / "masks").mkdir(exist_ok=True)
    for i in range(args.count):
        s = SynthSpec(**{**spec.to_dict(), "seed": spec.seed + i})
        img, truth = generate(s)
        name = f"{s.motif}_{s.seed:04d}.png"
        Image.fromarray(to_uint8(img), mode="L").save(out / "images" / name)
        _save_mask(out / "masks" / name, truth)
    with open(out / "synth.json", "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
    print(f"wrote {args.count} image/mask pair(s) to {out}")
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "batch": cmd_batch, "eval": cmd_eval, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.print_config:
            print(cfg.to_json())
            return EXIT_OK
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
