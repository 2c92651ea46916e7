"""Command-line interface: generate / extract-gt / tile / sweep / eval / bench.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error,
3 generation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import yaml
from PIL import Image

from . import __version__
from .bench import run_bench
from .config import load_config, make_sweep_configs, serialize_config
from .dataset import (
    FORMAT_VERSION,
    format_annotations,
    parse_annotations,
    rotate_patch,
    tile_image,
    write_patch,
)
from .errors import ConfigError, GenerationError, MeshFormatError, SimplError, ValidationError
from .groundtruth import extract_boxes
from .metrics import aggregate_runs, evaluate, read_detection_dir
from .pipeline import generate_dataset
from .renderer import load_png

log = logging.getLogger("simpl")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the documented contract is exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simpl", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"simpl {__version__} (dataset format {FORMAT_VERSION})",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="run the full generation pipeline")
    p.add_argument("--config", required=True, help="design config YAML")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--workers", type=int, default=1, help="parallel world generation")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("extract-gt", help="extract boxes from *_gt.png renders")
    p.add_argument("--in", dest="in_dir", required=True, help="directory of GT renders")
    p.add_argument(
        "--class-id",
        type=int,
        default=None,
        help="class id for annotations (default: parsed from file names)",
    )
    p.set_defaults(func=_cmd_extract_gt)

    p = sub.add_parser("tile", help="tile images (+ annotations) into training patches")
    p.add_argument("--in", dest="in_dir", required=True, help="directory of PNGs with .txt labels")
    p.add_argument("--patch", type=int, default=608, help="patch side length in pixels")
    p.add_argument("--min-visibility", type=float, default=0.25)
    p.add_argument("--out", default=None, help="output directory (default: IN/patches)")
    p.add_argument(
        "--rotations",
        default=None,
        help="also emit rotated copies, e.g. 90,180,270",
    )
    p.set_defaults(func=_cmd_tile)

    p = sub.add_parser("sweep", help="write perturbed configs for a sensitivity sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, choices=["color_mean", "size_mean", "num_patches"])
    p.add_argument("--offsets", required=True, help="comma-separated offsets (% or K values)")
    p.add_argument("--out", default=None, help="output directory (default: config's directory)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("eval", help="score detection files against ground truth")
    p.add_argument("--gt", required=True, help="directory of GT annotation .txt files")
    p.add_argument(
        "--det",
        required=True,
        action="append",
        help="directory of detection .txt files (repeat for multi-run averaging)",
    )
    p.add_argument("--area-km2", type=float, required=True)
    p.add_argument("--alphas", default="1", help="comma-separated false alarms per km2")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument(
        "--patch-size",
        type=int,
        default=608,
        help="image side used to denormalize labels when no sibling PNG exists",
    )
    p.add_argument("--out", default=None, help="also write the YAML report here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="measure generation throughput")
    p.add_argument("--config", required=True)
    p.add_argument("--km2", type=float, default=1.0)
    p.add_argument("--out", default=None, help="keep the generated imagery here")
    p.set_defaults(func=_cmd_bench)

    return parser


def _cmd_generate(args) -> int:
    config = load_config(args.config)
    manifest = generate_dataset(config, args.out, workers=args.workers)
    print(
        f"wrote {len(manifest.patches)} patches to {args.out} "
        f"(master_seed={config.master_seed})"
    )
    return 0


def _cmd_extract_gt(args) -> int:
    in_dir = Path(args.in_dir)
    gt_files = sorted(in_dir.glob("*_gt.png"))
    if not gt_files:
        raise FileNotFoundError(f"no *_gt.png files in {in_dir}")
    for path in gt_files:
        stem = path.name[: -len("_gt.png")]
        class_id = args.class_id
        if class_id is None:
            head = stem.split("_", 1)[0]
            if not head.isdigit() or int(head) < 1:
                raise ValidationError(
                    f"{path.name}: cannot parse class id from file name; pass --class-id"
                )
            class_id = int(head)
        image = load_png(path, gsd=1.0)
        annotations = extract_boxes(image, class_id, image_id=stem)
        out_path = in_dir / f"{stem}.txt"
        out_path.write_text(
            format_annotations(annotations, image.width, image.height),
            encoding="utf-8",
            newline="\n",
        )
        print(f"{out_path.name}: {len(annotations)} boxes")
    return 0


def _parse_rotations(spec: str | None) -> list[int]:
    if not spec:
        return []
    angles = [int(a) for a in spec.split(",") if a]
    for a in angles:
        if a not in (90, 180, 270):
            raise ValidationError(f"rotation angles must be in {{90, 180, 270}}, got {a}")
    return angles


def _cmd_tile(args) -> int:
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out) if args.out else in_dir / "patches"
    rotations = _parse_rotations(args.rotations)
    pngs = sorted(p for p in in_dir.glob("*.png") if not p.name.endswith("_gt.png"))
    if not pngs:
        raise FileNotFoundError(f"no .png images in {in_dir}")
    total = 0
    for path in pngs:
        image = load_png(path, gsd=1.0)
        label_path = path.with_suffix(".txt")
        annotations = (
            parse_annotations(
                label_path.read_text(encoding="utf-8"), image.width, image.height, path.stem
            )
            if label_path.is_file()
            else []
        )
        patches = tile_image(image, annotations, args.patch, args.min_visibility, path.stem)
        for patch in patches:
            write_patch(patch, out_dir)
            total += 1
            for angle in rotations:
                write_patch(rotate_patch(patch, angle), out_dir)
                total += 1
    print(f"wrote {total} patches to {out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    config_path = Path(args.config)
    config = load_config(config_path)
    offsets = [float(o) for o in args.offsets.split(",") if o]
    if args.param == "num_patches":
        offsets = [int(o) for o in offsets]
    out_dir = Path(args.out) if args.out else config_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    for offset, swept in zip(offsets, make_sweep_configs(config, args.param, offsets)):
        suffix = f"K{offset}" if args.param == "num_patches" else f"{offset:+g}pct"
        out_path = out_dir / f"{config_path.stem}_{args.param}_{suffix}.yaml"
        out_path.write_text(serialize_config(swept), encoding="utf-8", newline="\n")
        print(out_path)
    return 0


def _dir_digest(paths: list[Path]) -> str:
    digest = hashlib.sha256()
    for path in sorted(paths):
        digest.update(path.name.encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()


def _load_gt_boxes(gt_dir: Path, patch_size: int):
    gts = []
    txt_files = sorted(p for p in gt_dir.glob("*.txt"))
    if not txt_files:
        raise FileNotFoundError(f"no ground-truth .txt files in {gt_dir}")
    for path in txt_files:
        png = path.with_suffix(".png")
        if png.is_file():
            with Image.open(png) as img:
                width, height = img.size
        else:
            width = height = patch_size
        gts.extend(
            parse_annotations(path.read_text(encoding="utf-8"), width, height, path.stem)
        )
    return gts, txt_files


def _cmd_eval(args) -> int:
    gt_dir = Path(args.gt)
    alphas = [float(a) for a in args.alphas.split(",") if a]
    if not alphas:
        raise ValidationError("--alphas must list at least one value")
    gts, gt_files = _load_gt_boxes(gt_dir, args.patch_size)
    gt_ids = {p.stem for p in gt_files}

    reports = []
    det_digests = []
    for det_dir in args.det:
        det_dir = Path(det_dir)
        per_image = read_detection_dir(det_dir)
        unknown = sorted(set(per_image) - gt_ids)
        if unknown:
            raise ValidationError(
                f"{det_dir}: detections for images without ground truth: {', '.join(unknown[:5])}"
            )
        dets = [d for image_dets in per_image.values() for d in image_dets]
        reports.append(evaluate(dets, gts, args.area_km2, alphas, iou_min=args.iou))
        det_digests.append(_dir_digest(sorted(det_dir.glob("*.txt"))))

    report = aggregate_runs(reports)
    payload = {
        "inputs": {
            "gt_dir": str(gt_dir),
            "gt_sha256": _dir_digest(gt_files),
            "det_dirs": [str(d) for d in args.det],
            "det_sha256": det_digests,
            "iou_min": args.iou,
        },
        "report": report.to_dict(),
    }
    text = yaml.safe_dump(payload, sort_keys=False)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    return 0


def _cmd_bench(args) -> int:
    config = load_config(args.config)
    result = run_bench(config, args.km2, out_dir=args.out)
    print(result.to_yaml(), end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        return args.func(args)
    except (ConfigError, ValidationError, MeshFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (GenerationError, SimplError) as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
