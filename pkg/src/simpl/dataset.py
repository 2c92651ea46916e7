"""Patch tiling, rotation augmentation, and dataset serialization.

Annotation files are YOLO-style text: one ``class_id cx cy w h`` row per
box, geometry normalized to [0, 1] by the image dimensions, six decimal
places.  The manifest is a YAML document capturing everything needed to
regenerate the dataset: the config snapshot, the master seed, and one
record per emitted patch.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__ as TOOL_VERSION
from .config import DesignConfig
from .errors import ValidationError
from .groundtruth import Annotation, BBox
from .renderer import RasterImage, save_png

FORMAT_VERSION = 1
ROTATION_ANGLES = (90, 180, 270)
MANIFEST_NAME = "manifest"
PATCH_SUBDIR = "patches"


@dataclass(frozen=True)
class Patch:
    """One training patch cut from a world image."""

    image: RasterImage
    annotations: tuple[Annotation, ...]
    origin: tuple[str, int, int]  # (world image id, x offset, y offset)
    rotation: int = 0

    @property
    def patch_id(self) -> str:
        world_id, x, y = self.origin
        stem = f"{world_id}_x{x:05d}_y{y:05d}"
        if self.rotation:
            stem += f"_rot{self.rotation:03d}"
        return stem


@dataclass
class DatasetManifest:
    config: dict
    master_seed: int
    patches: list[dict]
    tool_version: str = TOOL_VERSION
    format_version: int = FORMAT_VERSION
    generated_at: str = ""
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "tool_version": self.tool_version,
            "generated_at": self.generated_at,
            "master_seed": self.master_seed,
            "config": self.config,
            "warnings": list(self.warnings),
            "patches": list(self.patches),
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def tile_offsets(length: int, patch_size: int) -> list[int]:
    """Grid offsets with stride = patch_size; the last tile is anchored to
    the far edge (overlapping its neighbor) when the length is not a
    multiple of the patch size, so every pixel is covered exactly once by
    the union of tiles."""
    if patch_size > length:
        raise ValidationError(f"patch_size {patch_size} exceeds image dimension {length}")
    offsets = list(range(0, length - patch_size + 1, patch_size))
    if offsets[-1] + patch_size < length:
        offsets.append(length - patch_size)
    return offsets


def _clip_box(box: BBox, ox: int, oy: int, size: int, min_visibility: float) -> BBox | None:
    x0 = max(box.x, ox)
    y0 = max(box.y, oy)
    x1 = min(box.x + box.w, ox + size)
    y1 = min(box.y + box.h, oy + size)
    if x1 <= x0 or y1 <= y0:
        return None
    visible = (x1 - x0) * (y1 - y0) / box.area
    if visible < min_visibility:
        return None
    return BBox(x=x0 - ox, y=y0 - oy, w=x1 - x0, h=y1 - y0)


def tile_image(
    image: RasterImage,
    annotations: list[Annotation],
    patch_size: int,
    min_visibility: float,
    image_id: str = "",
) -> list[Patch]:
    """Cut a world image into patch_size squares with clipped annotations.

    A box is kept in a tile iff at least ``min_visibility`` of its
    world-image area falls inside that tile.
    """
    xs = tile_offsets(image.width, patch_size)
    ys = tile_offsets(image.height, patch_size)
    patches = []
    for oy in ys:
        for ox in xs:
            pixels = np.ascontiguousarray(
                image.pixels[oy : oy + patch_size, ox : ox + patch_size]
            )
            patch = Patch(
                image=RasterImage(pixels=pixels, gsd=image.gsd),
                annotations=(),
                origin=(image_id, ox, oy),
            )
            kept = []
            for ann in annotations:
                clipped = _clip_box(ann.bbox, ox, oy, patch_size, min_visibility)
                if clipped is not None:
                    kept.append(
                        Annotation(class_id=ann.class_id, bbox=clipped, image_id=patch.patch_id)
                    )
            patches.append(
                Patch(
                    image=patch.image,
                    annotations=tuple(kept),
                    origin=patch.origin,
                    rotation=0,
                )
            )
    return patches


def _rotate_box(box: BBox, side: int, angle: int) -> BBox:
    x, y, w, h = box.x, box.y, box.w, box.h
    if angle == 90:  # counter-clockwise
        return BBox(x=y, y=side - x - w, w=h, h=w)
    if angle == 180:
        return BBox(x=side - x - w, y=side - y - h, w=w, h=h)
    return BBox(x=side - y - h, y=x, w=h, h=w)  # 270


def rotate_patch(patch: Patch, angle: int) -> Patch:
    """Rotate a square patch counter-clockwise by 90, 180, or 270 degrees,
    remapping every box exactly (integer arithmetic, no resampling)."""
    if angle not in ROTATION_ANGLES:
        raise ValidationError(f"rotation angle must be one of {ROTATION_ANGLES}, got {angle}")
    if patch.image.width != patch.image.height:
        raise ValidationError(
            f"rotate_patch requires a square patch, got "
            f"{patch.image.width}x{patch.image.height}"
        )
    side = patch.image.width
    pixels = np.ascontiguousarray(np.rot90(patch.image.pixels, k=angle // 90))
    rotated = Patch(
        image=RasterImage(pixels=pixels, gsd=patch.image.gsd),
        annotations=(),
        origin=patch.origin,
        rotation=(patch.rotation + angle) % 360,
    )
    anns = tuple(
        Annotation(
            class_id=a.class_id,
            bbox=_rotate_box(a.bbox, side, angle),
            image_id=rotated.patch_id,
        )
        for a in patch.annotations
    )
    return Patch(image=rotated.image, annotations=anns, origin=patch.origin, rotation=rotated.rotation)


def format_annotations(annotations, width: int, height: int) -> str:
    """YOLO-style rows, normalized by image dimensions, 6 decimal places."""
    rows = []
    for ann in annotations:
        b = ann.bbox
        cx = (b.x + b.w / 2.0) / width
        cy = (b.y + b.h / 2.0) / height
        rows.append(
            f"{ann.class_id} {cx:.6f} {cy:.6f} {b.w / width:.6f} {b.h / height:.6f}"
        )
    return "".join(row + "\n" for row in rows)


def parse_annotations(text: str, width: int, height: int, image_id: str = "") -> list[Annotation]:
    """Inverse of format_annotations: denormalize rows back to pixel boxes."""
    anns = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValidationError(f"annotation line {lineno}: expected 5 fields, got {len(parts)}")
        class_id = int(parts[0])
        cx, cy, w, h = (float(p) for p in parts[1:])
        bw = max(1, round(w * width))
        bh = max(1, round(h * height))
        bx = max(0, round(cx * width - w * width / 2.0))
        by = max(0, round(cy * height - h * height / 2.0))
        anns.append(
            Annotation(class_id=class_id, bbox=BBox(x=bx, y=by, w=bw, h=bh), image_id=image_id)
        )
    return anns


def write_patch(patch: Patch, out_dir: Path) -> dict:
    """Write one patch image + annotation file; return its manifest record."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = patch.patch_id
    save_png(patch.image, out_dir / f"{stem}.png")
    text = format_annotations(patch.annotations, patch.image.width, patch.image.height)
    (out_dir / f"{stem}.txt").write_text(text, encoding="utf-8", newline="\n")
    world_id, ox, oy = patch.origin
    return {
        "file": f"{stem}.png",
        "origin": {"world": world_id, "x": ox, "y": oy},
        "rotation": patch.rotation,
        "annotations": len(patch.annotations),
    }


def write_manifest(
    records: list[dict],
    out_dir: Path,
    config: DesignConfig,
    warnings: list[str] | None = None,
    timestamp: str | None = None,
) -> DatasetManifest:
    manifest = DatasetManifest(
        config=config.to_dict(),
        master_seed=config.master_seed,
        patches=records,
        generated_at=timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(),
        warnings=list(warnings or []),
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / MANIFEST_NAME).write_text(manifest.to_yaml(), encoding="utf-8", newline="\n")
    return manifest


def export_dataset(
    patches: list[Patch],
    out_dir: str | Path,
    config: DesignConfig,
    warnings: list[str] | None = None,
) -> DatasetManifest:
    """Write patch images, per-patch annotation files, and the manifest.

    Layout: ``<out_dir>/patches/<id>.png`` + ``<id>.txt`` and a
    ``manifest`` document at the output root.
    """
    out_dir = Path(out_dir)
    patch_dir = out_dir / PATCH_SUBDIR
    records = [write_patch(p, patch_dir) for p in patches]
    return write_manifest(records, out_dir, config, warnings)
