"""End-to-end generation throughput measurement.

Times the steady-state pipeline (scene build, RGB render, ground-truth
render, box extraction, image + label export) over whole square
kilometers, excluding one-time costs: process startup, mesh loading, and
background preparation.
"""

from __future__ import annotations

import math
import platform
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml
from PIL import Image

from .config import DesignConfig, validate_config
from .dataset import format_annotations
from .errors import ValidationError
from .groundtruth import extract_boxes
from .mesh import load_mesh
from .renderer import render_gt, render_rgb, save_png, world_image_stem, world_pixels
from .scene import build_scene

KM_SIDE_M = 1000.0


@dataclass
class BenchResult:
    km2_generated: float
    wall_seconds: float
    objects_per_km2: int
    seconds_per_km2: float
    hardware: str
    worlds: int
    world_pixels: int

    def to_dict(self) -> dict:
        return {
            "km2_generated": round(self.km2_generated, 6),
            "wall_seconds": round(self.wall_seconds, 3),
            "objects_per_km2": self.objects_per_km2,
            "seconds_per_km2": round(self.seconds_per_km2, 3),
            "worlds": self.worlds,
            "world_pixels": self.world_pixels,
            "hardware": self.hardware,
            "stages": "scene build + RGB render + GT render + box extraction + export",
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _square_km_background(config: DesignConfig, out_path: Path) -> int:
    """Write a 1 km x 1 km background built by tiling the first configured tile."""
    side = world_pixels(KM_SIDE_M, config.gsd)
    with Image.open(config.background_paths[0]) as img:
        src = np.asarray(img.convert("RGB"), dtype=np.uint8)
    reps_y = math.ceil(side / src.shape[0])
    reps_x = math.ceil(side / src.shape[1])
    big = np.tile(src, (reps_y, reps_x, 1))[:side, :side]
    Image.fromarray(big).save(out_path, format="PNG")
    return side


def run_bench(config: DesignConfig, km2: float, out_dir: str | Path | None = None) -> BenchResult:
    """Generate round(km2) one-square-kilometer worlds and time the pipeline."""
    validate_config(config)
    if km2 < 1:
        raise ValidationError(f"km2 must be >= 1, got {km2}")
    n_worlds = int(math.floor(km2 + 0.5))

    with tempfile.TemporaryDirectory(prefix="simpl_bench_") as tmp:
        tmp_dir = Path(tmp)
        out = Path(out_dir) if out_dir is not None else tmp_dir / "out"
        out.mkdir(parents=True, exist_ok=True)

        # one-time setup, excluded from timing
        bg_path = tmp_dir / "bench_km2.png"
        side = _square_km_background(config, bg_path)
        bench_config = DesignConfig(**{**config.to_dict(), "background_paths": [str(bg_path)]})
        meshes = [load_mesh(p) for p in bench_config.mesh_paths]
        tile_km2 = (side * bench_config.gsd) ** 2 / 1e6

        start = time.perf_counter()
        for index in range(n_worlds):
            scene = build_scene(bench_config, index, meshes)
            rgb = render_rgb(scene, meshes, ambient=bench_config.ambient)
            gt = render_gt(scene, meshes)
            annotations = extract_boxes(gt, bench_config.class_id)
            stem = world_image_stem(bench_config.class_id, index)
            save_png(rgb, out / f"{stem}.png")
            save_png(gt, out / f"{stem}_gt.png")
            (out / f"{stem}.txt").write_text(
                format_annotations(annotations, rgb.width, rgb.height),
                encoding="utf-8",
                newline="\n",
            )
        wall = time.perf_counter() - start

    km2_generated = n_worlds * tile_km2
    return BenchResult(
        km2_generated=km2_generated,
        wall_seconds=wall,
        objects_per_km2=int(round(config.density)),
        seconds_per_km2=wall / km2_generated,
        hardware=f"{platform.platform()} / {platform.processor() or 'unknown cpu'}",
        worlds=n_worlds,
        world_pixels=side,
    )
