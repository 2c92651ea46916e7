"""Triangle meshes of target objects and the geometry queries built on them.

Model space convention: x is the length axis, y the width axis, z points
up.  Author models so the longer plan dimension runs along +x; the
loader grounds every model by shifting it so min(z) == 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import MeshFormatError, ValidationError

log = logging.getLogger(__name__)

_DEGENERATE_EXTENT = 1e-9


@dataclass(frozen=True)
class Mesh:
    """An immutable triangle mesh in model space (meters)."""

    vertices: np.ndarray  # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int32 vertex indices
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int32)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError("mesh vertices must be an (n, 3) array")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) < 1:
            raise ValidationError("mesh must have at least one triangle")
        if not np.isfinite(v).all():
            raise ValidationError(f"mesh {self.name!r} has non-finite vertex coordinates")
        if t.min(initial=0) < 0 or t.max(initial=-1) >= len(v):
            raise MeshFormatError(f"mesh {self.name!r} has a triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    def footprint_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(min_xy, max_xy) of the model-space ground projection."""
        xy = self.vertices[:, :2]
        return xy.min(axis=0), xy.max(axis=0)


@dataclass(frozen=True)
class Pose:
    """Rigid placement of a mesh on the ground plane.

    ``position`` is the world-frame footprint center in meters; ``heading``
    rotates the model about the vertical axis (degrees, [0, 360));
    ``scale`` multiplies the model axes before rotation.
    """

    position: tuple[float, float]
    heading: float
    scale: tuple[float, float, float]

    def __post_init__(self):
        if not (0.0 <= self.heading < 360.0):
            raise ValidationError(f"heading must be in [0, 360), got {self.heading}")
        if any(s <= 0 for s in self.scale):
            raise ValidationError(f"scale components must be > 0, got {self.scale}")


class FootprintExtent(NamedTuple):
    extent: tuple[float, float]  # world-axis-aligned (x, y) extent, meters
    half_extents: tuple[float, float]  # oriented-rectangle half sizes, meters


def load_mesh(path: str | Path) -> Mesh:
    """Load a Wavefront OBJ subset: ``v x y z`` and ``f i j k ...`` records.

    Faces with more than three vertices are fan-triangulated.  Indices are
    1-based; ``i/t/n`` face tokens keep only the vertex index.  Any other
    record type is skipped with a warning.  After loading, vertices are
    shifted so the lowest point sits on the ground plane (min z == 0).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"mesh file not found: {path}")

    vertices: list[tuple[float, float, float]] = []
    faces: list[list[int]] = []
    skipped: set[str] = set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, *rest = line.split()
        if tag == "v":
            if len(rest) < 3:
                raise MeshFormatError(f"{path.name}:{lineno}: vertex record needs 3 coordinates")
            try:
                x, y, z = (float(c) for c in rest[:3])
            except ValueError:
                raise MeshFormatError(f"{path.name}:{lineno}: unparseable vertex coordinate")
            vertices.append((x, y, z))
        elif tag == "f":
            if len(rest) < 3:
                raise MeshFormatError(f"{path.name}:{lineno}: face record needs >= 3 indices")
            idx = []
            for token in rest:
                head = token.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError:
                    raise MeshFormatError(f"{path.name}:{lineno}: unparseable face index {token!r}")
                if i < 1:
                    raise MeshFormatError(
                        f"{path.name}:{lineno}: face index {i} is not 1-based positive"
                    )
                if i > len(vertices):
                    raise MeshFormatError(
                        f"{path.name}:{lineno}: face references vertex {i} "
                        f"but only {len(vertices)} are defined"
                    )
                idx.append(i - 1)
            faces.append(idx)
        else:
            skipped.add(tag)
    if skipped:
        log.warning("%s: ignored unsupported OBJ record type(s): %s", path.name, sorted(skipped))
    if not faces:
        raise MeshFormatError(f"{path.name}: no faces found")

    tris = []
    for face in faces:
        for k in range(2, len(face)):
            tris.append((face[0], face[k - 1], face[k]))

    verts = np.asarray(vertices, dtype=np.float64)
    verts[:, 2] -= verts[:, 2].min()  # rest the model on the ground plane
    return Mesh(vertices=verts, triangles=np.asarray(tris, dtype=np.int32), name=path.stem)


def footprint_extent(mesh: Mesh, pose: Pose) -> FootprintExtent:
    """Ground-projection extent of a posed mesh.

    ``extent`` is the axis-aligned (x, y) size in world axes; at heading 0
    its first component lies along the model's length axis.
    ``half_extents`` are the oriented footprint rectangle's half sizes,
    which placement uses for collision tests.
    """
    lo, hi = mesh.footprint_bounds()
    hx = (hi[0] - lo[0]) * pose.scale[0] / 2.0
    hy = (hi[1] - lo[1]) * pose.scale[1] / 2.0
    theta = math.radians(pose.heading)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    return FootprintExtent(
        extent=(2.0 * (hx * c + hy * s), 2.0 * (hx * s + hy * c)),
        half_extents=(hx, hy),
    )


def size_to_scale(
    mesh: Mesh, target_size: tuple[float, float], gsd: float
) -> tuple[float, float, float]:
    """Scale factors that make the model footprint match a pixel size at a GSD.

    Height tracks the plan dimensions: the vertical factor is the
    geometric mean of the two plan factors.
    """
    length_px, width_px = target_size
    if length_px <= 0 or width_px <= 0:
        raise ValidationError(f"target size components must be > 0, got {target_size}")
    lo, hi = mesh.footprint_bounds()
    model_length = hi[0] - lo[0]
    model_width = hi[1] - lo[1]
    if model_length < _DEGENERATE_EXTENT or model_width < _DEGENERATE_EXTENT:
        raise ValidationError(
            f"mesh {mesh.name!r} has a degenerate footprint "
            f"({model_length} x {model_width} m); cannot scale to a target size"
        )
    sx = length_px * gsd / model_length
    sy = width_px * gsd / model_width
    return sx, sy, math.sqrt(sx * sy)
