"""Box extraction from ground-truth renders.

Targets are black on a white ground, so the procedure is: threshold,
label 8-connected components, take the smallest enclosing box of each.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .renderer import RasterImage

DEFAULT_THRESHOLD = 128
MIN_COMPONENT_PIXELS = 4  # smaller blobs are rasterization specks, not targets

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box: top-left corner plus size."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1 or self.x < 0 or self.y < 0:
            raise ValidationError(f"degenerate box {self}")

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class Annotation:
    class_id: int
    bbox: BBox
    image_id: str = ""

    def __post_init__(self):
        if self.class_id < 1:
            raise ValidationError(f"class_id must be >= 1, got {self.class_id}")


def binarize(image: RasterImage, threshold: int = DEFAULT_THRESHOLD) -> np.ndarray:
    """True where a pixel is strictly below the threshold (target pixels)."""
    if image.channels != 1:
        raise ValidationError("binarize expects a single-channel ground-truth render")
    return image.pixels < threshold


def _label(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected labeling with labels renumbered in raster-scan order."""
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        return labels, 0
    flat = labels.ravel()
    first_seen = np.full(count + 1, flat.size, dtype=np.int64)
    occupied = np.flatnonzero(flat)
    # reversed so the earliest raster index wins the final assignment
    first_seen[flat[occupied[::-1]]] = occupied[::-1]
    order = np.argsort(first_seen[1:], kind="stable")
    remap = np.zeros(count + 1, dtype=labels.dtype)
    remap[order + 1] = np.arange(1, count + 1)
    return remap[labels], count


def connected_components(mask: np.ndarray) -> list[np.ndarray]:
    """Pixel coordinates of each 8-connected component of True pixels.

    Components are ordered by the raster-scan position of their first
    pixel; each entry is an (n, 2) array of (row, col) pairs.
    """
    labels, count = _label(np.asarray(mask, dtype=bool))
    if count == 0:
        return []
    order = np.argsort(labels.ravel(), kind="stable")
    sorted_labels = labels.ravel()[order]
    starts = np.searchsorted(sorted_labels, np.arange(1, count + 1))
    ends = np.append(starts[1:], sorted_labels.size)
    height, width = labels.shape
    components = []
    for s, e in zip(starts, ends):
        idx = order[s:e]
        components.append(np.stack([idx // width, idx % width], axis=1))
    return components


def extract_boxes(
    image: RasterImage,
    class_id: int,
    image_id: str = "",
    threshold: int = DEFAULT_THRESHOLD,
) -> list[Annotation]:
    """One annotation per target: the minimal box enclosing each component.

    Components below MIN_COMPONENT_PIXELS pixels are discarded; results
    are sorted by (top, left) corner.
    """
    mask = binarize(image, threshold)
    labels, count = _label(mask)
    if count == 0:
        return []
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    boxes = []
    for label_idx, slices in enumerate(ndimage.find_objects(labels), start=1):
        if slices is None or sizes[label_idx] < MIN_COMPONENT_PIXELS:
            continue
        rs, cs = slices
        boxes.append(
            BBox(x=int(cs.start), y=int(rs.start), w=int(cs.stop - cs.start), h=int(rs.stop - rs.start))
        )
    boxes.sort(key=lambda b: (b.y, b.x))
    return [Annotation(class_id=class_id, bbox=b, image_id=image_id) for b in boxes]
