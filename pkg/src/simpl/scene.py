"""Virtual-world assembly: one scene per background tile.

World frame: meters, origin at the tile's top-left corner, x increasing
with image columns (east) and y increasing with image rows (south).
Compass bearings therefore map to image vectors as
east = +x, north = -y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .config import DesignConfig
from .errors import PlacementError
from .mesh import Mesh, Pose, size_to_scale
from .sampler import InstanceProps, SolarParams, derive_stream, sample_instance, sample_solar

# Minimum gap kept between accepted footprints, in pixels.  Two pixels
# guarantees rasterized coverages of distinct instances are never
# 8-connected, so ground-truth components map 1:1 onto instances.
PLACEMENT_MARGIN_PX = 2.0

ATTEMPTS_PER_INSTANCE = 1000


@dataclass(frozen=True)
class OrientedRect:
    """A rectangle on the ground plane, rotated by ``heading`` degrees."""

    center: tuple[float, float]
    half_extents: tuple[float, float]
    heading: float

    def axes(self) -> np.ndarray:
        t = math.radians(self.heading)
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, s], [-s, c]])  # rows: local x axis, local y axis

    def corners(self) -> np.ndarray:
        ax = self.axes()
        hx, hy = self.half_extents
        offsets = np.array([[hx, hy], [hx, -hy], [-hx, -hy], [-hx, hy]])
        return np.asarray(self.center) + offsets[:, 0, None] * ax[0] + offsets[:, 1, None] * ax[1]

    def inflated(self, margin: float) -> "OrientedRect":
        hx, hy = self.half_extents
        return OrientedRect(self.center, (hx + margin, hy + margin), self.heading)

    def aabb_half_extents(self) -> tuple[float, float]:
        t = math.radians(self.heading)
        c, s = abs(math.cos(t)), abs(math.sin(t))
        hx, hy = self.half_extents
        return hx * c + hy * s, hx * s + hy * c

    def intersects(self, other: "OrientedRect") -> bool:
        """Separating-axis test; touching rectangles count as intersecting."""
        delta = np.asarray(other.center) - np.asarray(self.center)
        axes = np.vstack([self.axes(), other.axes()])
        ha = np.asarray(self.half_extents)
        hb = np.asarray(other.half_extents)
        for axis in axes:
            ra = ha @ np.abs(self.axes() @ axis)
            rb = hb @ np.abs(other.axes() @ axis)
            if abs(delta @ axis) > ra + rb:
                return False
        return True


@dataclass(frozen=True)
class Background:
    """A loaded background tile plus its ground sampling distance."""

    path: str
    pixels: np.ndarray  # (h, w, 3) uint8
    gsd: float

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def extent_m(self) -> tuple[float, float]:
        return self.width * self.gsd, self.height * self.gsd

    @property
    def area_km2(self) -> float:
        w, h = self.extent_m
        return w * h / 1e6


@dataclass(frozen=True)
class SceneInstance:
    props: InstanceProps
    pose: Pose
    mesh_ref: int
    world_footprint: OrientedRect


@dataclass(frozen=True)
class Scene:
    background: Background
    instances: tuple[SceneInstance, ...]
    solar: SolarParams
    image_index: int


def load_background(path: str | Path, gsd: float) -> Background:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"background tile not found: {path}")
    with Image.open(path) as img:
        pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return Background(path=str(path), pixels=pixels, gsd=gsd)


def instance_count(density: float, area_km2: float) -> int:
    """Fixed per-scene target count: round(density * area), half rounded up."""
    return int(math.floor(density * area_km2 + 0.5))


def build_scene(
    config: DesignConfig, background_index: int, meshes: list[Mesh]
) -> Scene:
    """Place property-sampled instances on one background tile.

    The tile for world ``background_index`` is
    ``background_paths[background_index % len(background_paths)]``, so
    indices beyond the tile list reuse backgrounds under fresh sampling
    streams.  Placement is rejection sampling: draw properties and a
    uniform in-bounds position, reject any candidate whose footprint
    (plus a 2-pixel margin) intersects an accepted one.
    """
    if not meshes:
        raise PlacementError("no meshes supplied", achieved=0, target=0)
    bg_path = config.background_paths[background_index % len(config.background_paths)]
    background = load_background(bg_path, config.gsd)
    world_w, world_h = background.extent_m
    target = instance_count(config.density, background.area_km2)
    solar = sample_solar(
        config, derive_stream(config.master_seed, "solar", background_index)
    )
    margin = PLACEMENT_MARGIN_PX * config.gsd

    accepted: list[SceneInstance] = []
    attempts = 0
    max_attempts = ATTEMPTS_PER_INSTANCE * max(target, 1)
    for i in range(target):
        stream = derive_stream(config.master_seed, "instance", background_index, i)
        placed = False
        while not placed:
            attempts += 1
            if attempts > max_attempts:
                raise PlacementError(
                    f"placed only {len(accepted)} of {target} instances after "
                    f"{max_attempts} attempts; density {config.density}/km2 is "
                    f"infeasible for this tile and object size",
                    achieved=len(accepted),
                    target=target,
                )
            props = sample_instance(config, stream)
            mesh = meshes[props.mesh_choice]
            scale = size_to_scale(mesh, props.size, config.gsd)
            hx = props.size[0] * config.gsd / 2.0
            hy = props.size[1] * config.gsd / 2.0
            probe = OrientedRect((0.0, 0.0), (hx, hy), props.heading)
            ax, ay = probe.aabb_half_extents()
            if 2 * ax > world_w or 2 * ay > world_h:
                continue  # cannot fit at this heading/size; costs an attempt
            cx = float(stream.uniform(ax, world_w - ax))
            cy = float(stream.uniform(ay, world_h - ay))
            rect = OrientedRect((cx, cy), (hx, hy), props.heading)
            candidate = rect.inflated(margin)
            if any(candidate.intersects(inst.world_footprint) for inst in accepted):
                continue
            accepted.append(
                SceneInstance(
                    props=props,
                    pose=Pose(position=(cx, cy), heading=props.heading, scale=scale),
                    mesh_ref=props.mesh_choice,
                    world_footprint=rect,
                )
            )
            placed = True

    return Scene(
        background=background,
        instances=tuple(accepted),
        solar=solar,
        image_index=background_index,
    )
