"""simpl: synthetic overhead imagery generation and detection scoring.

Composites property-sampled 3D target models onto real background tiles
under a nadir orthographic camera, recovers pixel-exact bounding boxes
from a paired white-ground/black-target render, exports YOLO-style
training patches, and evaluates externally produced detections.
"""

__version__ = "0.1.0"

from .config import (
    DesignConfig,
    estimate_solar_bounds,
    estimate_target_params,
    load_config,
    make_sweep_configs,
    parse_config,
    serialize_config,
)
from .dataset import DatasetManifest, Patch, export_dataset, rotate_patch, tile_image
from .groundtruth import Annotation, BBox, binarize, connected_components, extract_boxes
from .mesh import Mesh, Pose, footprint_extent, load_mesh, size_to_scale
from .metrics import (
    Detection,
    EvalReport,
    aggregate_runs,
    ap50,
    evaluate,
    iou,
    match_detections,
    recall_at_fa,
)
from .pipeline import generate_dataset, generate_world
from .renderer import RasterImage, ShadingModel, render_gt, render_rgb, world_pixels
from .sampler import InstanceProps, RngStream, SolarParams, derive_stream, sample_instance, sample_solar
from .scene import Background, OrientedRect, Scene, SceneInstance, build_scene
from .bench import BenchResult, run_bench

__all__ = [
    "__version__",
    "DesignConfig",
    "parse_config",
    "serialize_config",
    "load_config",
    "estimate_target_params",
    "estimate_solar_bounds",
    "make_sweep_configs",
    "Mesh",
    "Pose",
    "load_mesh",
    "footprint_extent",
    "size_to_scale",
    "RngStream",
    "derive_stream",
    "InstanceProps",
    "SolarParams",
    "sample_instance",
    "sample_solar",
    "OrientedRect",
    "Background",
    "Scene",
    "SceneInstance",
    "build_scene",
    "RasterImage",
    "ShadingModel",
    "render_rgb",
    "render_gt",
    "world_pixels",
    "BBox",
    "Annotation",
    "binarize",
    "connected_components",
    "extract_boxes",
    "Patch",
    "DatasetManifest",
    "tile_image",
    "rotate_patch",
    "export_dataset",
    "Detection",
    "EvalReport",
    "iou",
    "match_detections",
    "ap50",
    "recall_at_fa",
    "evaluate",
    "aggregate_runs",
    "generate_world",
    "generate_dataset",
    "BenchResult",
    "run_bench",
]
