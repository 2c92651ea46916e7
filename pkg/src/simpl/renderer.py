"""Software rasterizer: nadir orthographic capture of a scene.

Produces the photographic RGB image and the paired ground-truth render
(white ground, black targets) from identical geometry, so boxes
recovered from the ground truth are pixel-exact against the RGB image.

Conventions (shared with :mod:`simpl.scene`):
  * pixel (row r, col c) covers world point ((c + 0.5) * gsd, (r + 0.5) * gsd);
  * solar azimuth is a compass bearing (degrees clockwise from north),
    north being "up" in the image (-y);
  * the sun unit vector is
    (sin(az) * cos(el), -cos(az) * cos(el), sin(el)) in (x, y-down, z-up);
  * shadows are cast by displacing each vertex horizontally by
    z / tan(elevation) meters along bearing azimuth + 180 degrees.

Object pixels shade as ``color * min(1, ambient + intensity * max(0, n.l))``
with flat per-triangle normals; unshadowed ground shades as
``texel * min(1, ambient + intensity * sin(elevation))`` (so intensity 1 at
a 90-degree sun reproduces the background exactly); shadowed ground drops
to ``texel * ambient``.  No anti-aliasing in either render mode, so
thresholding the ground truth is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ValidationError
from .mesh import Mesh
from .sampler import SolarParams
from .scene import Scene

MIN_SHADOW_ELEVATION_DEG = 1.0  # tan(elevation) blows up below this
_MIN_TRIANGLE_AREA_PX2 = 1e-12


@dataclass(frozen=True)
class RasterImage:
    """An 8-bit image (grayscale or RGB) with its ground sampling distance."""

    pixels: np.ndarray  # (h, w) or (h, w, 3) uint8
    gsd: float

    def __post_init__(self):
        p = self.pixels
        if p.dtype != np.uint8 or p.ndim not in (2, 3) or (p.ndim == 3 and p.shape[2] != 3):
            raise ValidationError("pixels must be a uint8 array of shape (h, w) or (h, w, 3)")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3


@dataclass(frozen=True)
class ShadingModel:
    """Flat Lambertian shading derived from one image's solar conditions."""

    ambient: float
    sun_direction: np.ndarray  # unit vector, (x, y-down, z-up)
    intensity: float

    @classmethod
    def from_solar(cls, solar: SolarParams, ambient: float) -> "ShadingModel":
        el = math.radians(solar.elevation)
        az = math.radians(solar.azimuth)
        sun = np.array(
            [math.sin(az) * math.cos(el), -math.cos(az) * math.cos(el), math.sin(el)]
        )
        return cls(ambient=ambient, sun_direction=sun, intensity=solar.intensity)

    def ground_multiplier(self, elevation_deg: float) -> float:
        return min(1.0, self.ambient + self.intensity * math.sin(math.radians(elevation_deg)))

    def surface_multiplier(self, normal: np.ndarray) -> float:
        return min(
            1.0, self.ambient + self.intensity * max(0.0, float(normal @ self.sun_direction))
        )


def world_pixels(meters: float, gsd: float) -> int:
    """Image pixels spanned by a physical length, rounded down."""
    return int(math.floor(meters / gsd + 1e-9))


def instance_world_triangles(scene: Scene, index: int, meshes: list[Mesh]) -> np.ndarray:
    """World-space triangle vertices, shape (n_triangles, 3 vertices, xyz)."""
    inst = scene.instances[index]
    mesh = meshes[inst.mesh_ref]
    lo, hi = mesh.footprint_bounds()
    center = (lo + hi) / 2.0
    sx, sy, sz = inst.pose.scale
    theta = math.radians(inst.pose.heading)
    c, s = math.cos(theta), math.sin(theta)

    v = mesh.vertices
    local_x = (v[:, 0] - center[0]) * sx
    local_y = (v[:, 1] - center[1]) * sy
    world = np.empty_like(v)
    world[:, 0] = c * local_x - s * local_y + inst.pose.position[0]
    world[:, 1] = s * local_x + c * local_y + inst.pose.position[1]
    world[:, 2] = v[:, 2] * sz
    return world[mesh.triangles]


def _triangle_pixels(tri_px: np.ndarray, width: int, height: int):
    """Pixel coverage of one triangle (centers on or inside its edges).

    Returns (rows, cols, barycentric weights) or None when no pixel
    center is covered.  The identical test backs the RGB render, the
    ground-truth render, and the shadow mask, which is what makes the
    dual renders congruent.
    """
    (x0, y0), (x1, y1), (x2, y2) = tri_px
    area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    if abs(area) < _MIN_TRIANGLE_AREA_PX2:
        return None
    if area < 0:  # force counter-clockwise so all edge functions share a sign
        (x1, y1), (x2, y2) = (x2, y2), (x1, y1)
        area = -area

    c_lo = max(0, int(math.ceil(min(x0, x1, x2) - 0.5)))
    c_hi = min(width - 1, int(math.floor(max(x0, x1, x2) - 0.5)))
    r_lo = max(0, int(math.ceil(min(y0, y1, y2) - 0.5)))
    r_hi = min(height - 1, int(math.floor(max(y0, y1, y2) - 0.5)))
    if c_lo > c_hi or r_lo > r_hi:
        return None

    xs = np.arange(c_lo, c_hi + 1, dtype=np.float64) + 0.5
    ys = np.arange(r_lo, r_hi + 1, dtype=np.float64) + 0.5
    px, py = np.meshgrid(xs, ys)

    w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
    w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
    inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    if not inside.any():
        return None

    rr, cc = np.nonzero(inside)
    weights = np.stack([w0[rr, cc], w1[rr, cc], w2[rr, cc]], axis=0) / area
    return rr + r_lo, cc + c_lo, weights


def _rasterize_objects(scene: Scene, meshes: list[Mesh], ambient: float):
    height, width = scene.background.pixels.shape[:2]
    gsd = scene.background.gsd
    shading = ShadingModel.from_solar(scene.solar, ambient)

    cov = np.zeros((height, width), dtype=bool)
    zbuf = np.full((height, width), -np.inf, dtype=np.float64)
    inst_buf = np.zeros((height, width), dtype=np.int32)
    shade_buf = np.zeros((height, width), dtype=np.float64)

    for idx in range(len(scene.instances)):
        tris = instance_world_triangles(scene, idx, meshes)
        for tri in tris:
            hit = _triangle_pixels(tri[:, :2] / gsd, width, height)
            if hit is None:
                continue
            rr, cc, w = hit
            depth = w[0] * tri[0, 2] + w[1] * tri[1, 2] + w[2] * tri[2, 2]
            closer = depth > zbuf[rr, cc]
            if not closer.any():
                continue
            rr, cc, depth = rr[closer], cc[closer], depth[closer]
            normal = np.cross(tri[1] - tri[0], tri[2] - tri[0])
            norm = np.linalg.norm(normal)
            if norm == 0.0:
                continue
            normal = normal / norm
            if normal[2] < 0:  # only upward-facing surfaces are visible from nadir
                normal = -normal
            zbuf[rr, cc] = depth
            inst_buf[rr, cc] = idx
            shade_buf[rr, cc] = shading.surface_multiplier(normal)
            cov[rr, cc] = True
    return cov, inst_buf, shade_buf


def _shadow_mask(scene: Scene, meshes: list[Mesh], warnings: list[str] | None):
    height, width = scene.background.pixels.shape[:2]
    gsd = scene.background.gsd

    elevation = scene.solar.elevation
    if elevation < MIN_SHADOW_ELEVATION_DEG:
        if warnings is not None:
            warnings.append(
                f"image {scene.image_index}: solar elevation {elevation:.3f} deg clamped to "
                f"{MIN_SHADOW_ELEVATION_DEG} deg for shadow projection"
            )
        elevation = MIN_SHADOW_ELEVATION_DEG
    az = math.radians(scene.solar.azimuth)
    stretch = 1.0 / math.tan(math.radians(elevation))
    offset_dir = np.array([-math.sin(az), math.cos(az)])  # bearing azimuth + 180

    mask = np.zeros((height, width), dtype=bool)
    for idx in range(len(scene.instances)):
        tris = instance_world_triangles(scene, idx, meshes)
        flat = tris[:, :, :2] + tris[:, :, 2:3] * stretch * offset_dir
        for tri in flat:
            hit = _triangle_pixels(tri / gsd, width, height)
            if hit is None:
                continue
            rr, cc, _ = hit
            mask[rr, cc] = True
    return mask


def render_rgb(
    scene: Scene,
    meshes: list[Mesh],
    ambient: float = 0.3,
    warnings: list[str] | None = None,
) -> RasterImage:
    """Rasterize the photographic synthetic image for one scene."""
    bg = scene.background.pixels.astype(np.float64)
    cov, inst_buf, shade_buf = _rasterize_objects(scene, meshes, ambient)
    shadow = _shadow_mask(scene, meshes, warnings)
    shading = ShadingModel.from_solar(scene.solar, ambient)

    out = bg * shading.ground_multiplier(scene.solar.elevation)
    shadow_only = shadow & ~cov
    out[shadow_only] = bg[shadow_only] * ambient
    if scene.instances:
        colors = np.array([inst.props.color for inst in scene.instances], dtype=np.float64)
        out[cov] = colors[inst_buf[cov]] * shade_buf[cov, None]
    pixels = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return RasterImage(pixels=pixels, gsd=scene.background.gsd)


def render_gt(scene: Scene, meshes: list[Mesh]) -> RasterImage:
    """Rasterize the ground-truth render: white ground, black targets.

    Same projection and coverage test as render_rgb, no shading, no
    shadows, no anti-aliasing.
    """
    cov, _, _ = _rasterize_objects(scene, meshes, ambient=0.0)
    pixels = np.where(cov, 0, 255).astype(np.uint8)
    return RasterImage(pixels=pixels, gsd=scene.background.gsd)


def save_png(image: RasterImage, path) -> None:
    Image.fromarray(image.pixels).save(path, format="PNG")


def load_png(path, gsd: float) -> RasterImage:
    with Image.open(path) as img:
        if img.mode in ("L", "I;16", "I"):
            pixels = np.asarray(img.convert("L"), dtype=np.uint8)
        else:
            pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return RasterImage(pixels=pixels, gsd=gsd)


def world_image_stem(class_id: int, image_index: int) -> str:
    return f"{class_id}_{image_index:05d}"
