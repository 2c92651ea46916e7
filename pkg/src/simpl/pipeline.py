"""End-to-end dataset generation: scenes -> renders -> boxes -> patches.

Worlds are generated one per image index, cycling through the configured
background tiles; the run stops once the requested number of patches has
been emitted.  Each world's random streams derive from
(master_seed, image index) alone, so worlds can be generated in any
order or in parallel with identical output.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from PIL import Image

from .config import DesignConfig
from .dataset import (
    PATCH_SUBDIR,
    DatasetManifest,
    tile_image,
    tile_offsets,
    write_manifest,
    write_patch,
)
from .groundtruth import extract_boxes
from .mesh import Mesh, load_mesh
from .renderer import render_gt, render_rgb, save_png, world_image_stem
from .scene import build_scene

log = logging.getLogger(__name__)

WORLD_SUBDIR = "worlds"


@dataclass(frozen=True)
class WorldPlan:
    image_index: int
    background_path: str
    keep_patches: int  # how many leading tiles of this world enter the dataset


def patches_per_world(config: DesignConfig, background_path: str) -> int:
    with Image.open(background_path) as img:
        width, height = img.size
    return len(tile_offsets(width, config.patch_size)) * len(
        tile_offsets(height, config.patch_size)
    )


def plan_worlds(config: DesignConfig) -> list[WorldPlan]:
    """Choose how many worlds to generate to reach num_patches exactly.

    The final world is truncated (leading tiles kept, in row-major order)
    when a whole world would overshoot the target patch count.
    """
    plans = []
    remaining = config.num_patches
    index = 0
    counts = [patches_per_world(config, p) for p in config.background_paths]
    while remaining > 0:
        bg = config.background_paths[index % len(config.background_paths)]
        available = counts[index % len(config.background_paths)]
        keep = min(available, remaining)
        plans.append(WorldPlan(image_index=index, background_path=bg, keep_patches=keep))
        remaining -= keep
        index += 1
    return plans


def generate_world(
    config: DesignConfig,
    image_index: int,
    out_dir: str | Path,
    keep_patches: int | None = None,
    meshes: list[Mesh] | None = None,
) -> tuple[list[dict], list[str]]:
    """Generate one world image end to end.

    Writes the world RGB + ground-truth renders under ``worlds/`` and the
    kept patches (images + annotation files) under ``patches/``; returns
    the patch manifest records and any render warnings.
    """
    out_dir = Path(out_dir)
    if meshes is None:
        meshes = [load_mesh(p) for p in config.mesh_paths]
    log.info(
        "world %d: streams derive from (master_seed=%d, image_index=%d)",
        image_index,
        config.master_seed,
        image_index,
    )
    scene = build_scene(config, image_index, meshes)
    warnings: list[str] = []
    rgb = render_rgb(scene, meshes, ambient=config.ambient, warnings=warnings)
    gt = render_gt(scene, meshes)

    stem = world_image_stem(config.class_id, image_index)
    world_dir = out_dir / WORLD_SUBDIR
    world_dir.mkdir(parents=True, exist_ok=True)
    save_png(rgb, world_dir / f"{stem}.png")
    save_png(gt, world_dir / f"{stem}_gt.png")

    annotations = extract_boxes(gt, config.class_id, image_id=stem)
    patches = tile_image(
        rgb, annotations, config.patch_size, config.min_visibility, image_id=stem
    )
    if keep_patches is not None:
        patches = patches[:keep_patches]
    records = [write_patch(p, out_dir / PATCH_SUBDIR) for p in patches]
    log.info(
        "world %d: %d instances, %d boxes, %d patches",
        image_index,
        len(scene.instances),
        len(annotations),
        len(records),
    )
    return records, warnings


def _world_task(config: DesignConfig, plan: WorldPlan, out_dir: str) -> tuple[int, list[dict], list[str]]:
    records, warnings = generate_world(
        config, plan.image_index, out_dir, keep_patches=plan.keep_patches
    )
    return plan.image_index, records, warnings


def generate_dataset(
    config: DesignConfig, out_dir: str | Path, workers: int = 1
) -> DatasetManifest:
    """Run the full generation pipeline and write the dataset + manifest.

    Output is byte-identical for any worker count: every world is an
    independent, seed-derived unit and the manifest is assembled in
    image-index order.
    """
    out_dir = Path(out_dir)
    plans = plan_worlds(config)
    results: dict[int, tuple[list[dict], list[str]]] = {}

    if workers <= 1:
        meshes = [load_mesh(p) for p in config.mesh_paths]
        for plan in plans:
            records, warnings = generate_world(
                config, plan.image_index, out_dir, plan.keep_patches, meshes=meshes
            )
            results[plan.image_index] = (records, warnings)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_world_task, config, plan, str(out_dir)) for plan in plans]
            for future in futures:
                index, records, warnings = future.result()
                results[index] = (records, warnings)

    all_records: list[dict] = []
    all_warnings: list[str] = []
    for plan in plans:
        records, warnings = results[plan.image_index]
        all_records.extend(records)
        all_warnings.extend(warnings)
    return write_manifest(all_records, out_dir, config, all_warnings)
