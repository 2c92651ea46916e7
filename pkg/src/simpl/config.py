"""Design parameters for synthetic dataset generation.

A ``DesignConfig`` is the single reproducibility root: it holds the
per-class sampling distributions (solid color, plan size, solar
conditions), the scene settings (target density, ground sample
distance), and the dataset settings (patch size, patch count, master
seed).  Configs are read from and written to YAML documents whose keys
match the dataclass fields one-to-one; see ``configs/`` for commented
examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .errors import ConfigError, ValidationError

COLOR_RANGE = (0.0, 255.0)
ELEVATION_RANGE = (0.0, 90.0)
AZIMUTH_RANGE = (0.0, 360.0)
SEED_MAX = 2**64  # master_seed is a 64-bit unsigned integer

SWEEPABLE_PARAMS = ("color_mean", "size_mean", "num_patches")


@dataclass
class DesignConfig:
    """All user-facing design parameters for one target class."""

    class_id: int
    mesh_paths: list[str]
    background_paths: list[str]
    color_mean: tuple[float, float, float]
    color_std: float
    size_mean: tuple[float, float]
    size_std: float
    solar_elevation_bounds: tuple[float, float]
    solar_azimuth_bounds: tuple[float, float]
    solar_intensity_bounds: tuple[float, float]
    density: float = 120.0
    gsd: float = 0.3
    patch_size: int = 608
    num_patches: int = 450
    master_seed: int = 0
    ambient: float = 0.3
    min_visibility: float = 0.25

    def __post_init__(self):
        self.mesh_paths = [str(p) for p in self.mesh_paths]
        self.background_paths = [str(p) for p in self.background_paths]
        self.color_mean = _as_tuple("color_mean", self.color_mean, 3)
        self.size_mean = _as_tuple("size_mean", self.size_mean, 2)
        self.solar_elevation_bounds = _as_tuple(
            "solar_elevation_bounds", self.solar_elevation_bounds, 2
        )
        self.solar_azimuth_bounds = _as_tuple(
            "solar_azimuth_bounds", self.solar_azimuth_bounds, 2
        )
        self.solar_intensity_bounds = _as_tuple(
            "solar_intensity_bounds", self.solar_intensity_bounds, 2
        )
        validate_config(self)

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "mesh_paths": list(self.mesh_paths),
            "background_paths": list(self.background_paths),
            "color_mean": list(self.color_mean),
            "color_std": self.color_std,
            "size_mean": list(self.size_mean),
            "size_std": self.size_std,
            "solar_elevation_bounds": list(self.solar_elevation_bounds),
            "solar_azimuth_bounds": list(self.solar_azimuth_bounds),
            "solar_intensity_bounds": list(self.solar_intensity_bounds),
            "density": self.density,
            "gsd": self.gsd,
            "patch_size": self.patch_size,
            "num_patches": self.num_patches,
            "master_seed": self.master_seed,
            "ambient": self.ambient,
            "min_visibility": self.min_visibility,
        }


_REQUIRED_FIELDS = (
    "class_id",
    "mesh_paths",
    "background_paths",
    "color_mean",
    "color_std",
    "size_mean",
    "size_std",
    "solar_elevation_bounds",
    "solar_azimuth_bounds",
    "solar_intensity_bounds",
)
_OPTIONAL_FIELDS = (
    "density",
    "gsd",
    "patch_size",
    "num_patches",
    "master_seed",
    "ambient",
    "min_visibility",
)


def _as_tuple(name, value, width):
    try:
        items = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a sequence of {width} numbers")
    if len(items) != width:
        raise ValidationError(f"{name} must have exactly {width} components, got {len(items)}")
    return items


def _check_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise ValidationError(f"{name} must be finite, got {v}")


def _check_bounds(name, pair, lo=None, hi=None):
    _check_finite(name, *pair)
    if pair[0] > pair[1]:
        raise ValidationError(f"{name}: lower bound exceeds upper bound ({pair[0]} > {pair[1]})")
    if lo is not None and pair[0] < lo:
        raise ValidationError(f"{name}: {pair[0]} below valid range minimum {lo}")
    if hi is not None and pair[1] > hi:
        raise ValidationError(f"{name}: {pair[1]} above valid range maximum {hi}")


def validate_config(config: DesignConfig) -> None:
    """Check every documented invariant; raises ValidationError naming the field."""
    if not isinstance(config.class_id, int) or isinstance(config.class_id, bool):
        raise ValidationError("class_id must be an integer")
    if config.class_id < 1:
        raise ValidationError(f"class_id must be >= 1, got {config.class_id}")
    if not config.mesh_paths:
        raise ValidationError("mesh_paths must list at least one model file")
    if not config.background_paths:
        raise ValidationError("background_paths must list at least one background tile")
    for i, c in enumerate(config.color_mean):
        if not (COLOR_RANGE[0] <= c <= COLOR_RANGE[1]):
            raise ValidationError(f"color_mean[{i}] must be in [0, 255], got {c}")
    if config.color_std < 0:
        raise ValidationError(f"color_std must be >= 0, got {config.color_std}")
    for i, s in enumerate(config.size_mean):
        if not s > 0:
            raise ValidationError(f"size_mean[{i}] must be > 0, got {s}")
    if config.size_std < 0:
        raise ValidationError(f"size_std must be >= 0, got {config.size_std}")
    _check_bounds("solar_elevation_bounds", config.solar_elevation_bounds, *ELEVATION_RANGE)
    _check_bounds("solar_azimuth_bounds", config.solar_azimuth_bounds, *AZIMUTH_RANGE)
    _check_bounds("solar_intensity_bounds", config.solar_intensity_bounds, lo=0.0)
    if not config.density > 0:
        raise ValidationError(f"density must be > 0, got {config.density}")
    if not config.gsd > 0:
        raise ValidationError(f"gsd must be > 0, got {config.gsd}")
    if not isinstance(config.patch_size, int) or config.patch_size <= 0:
        raise ValidationError(f"patch_size must be a positive integer, got {config.patch_size}")
    if not isinstance(config.num_patches, int) or config.num_patches <= 0:
        raise ValidationError(f"num_patches must be a positive integer, got {config.num_patches}")
    if not isinstance(config.master_seed, int) or not (0 <= config.master_seed < SEED_MAX):
        raise ValidationError("master_seed must be an integer in [0, 2^64)")
    if not (0 <= config.ambient < 1):
        raise ValidationError(f"ambient must be in [0, 1), got {config.ambient}")
    if not (0 < config.min_visibility <= 1):
        raise ValidationError(f"min_visibility must be in (0, 1], got {config.min_visibility}")


def parse_config(text: str, base_dir: str | Path | None = None) -> DesignConfig:
    """Parse a YAML configuration document into a validated DesignConfig.

    Relative mesh/background paths are resolved against ``base_dir`` when
    given (the CLI passes the config file's directory).  Unknown keys are
    rejected so typos fail loudly instead of silently using a default.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"malformed configuration document{where}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration document must be a mapping of field names to values")

    unknown = sorted(set(data) - set(_REQUIRED_FIELDS) - set(_OPTIONAL_FIELDS))
    if unknown:
        raise ValidationError(f"unknown configuration field(s): {', '.join(unknown)}")
    missing = sorted(set(_REQUIRED_FIELDS) - set(data))
    if missing:
        raise ValidationError(f"missing required configuration field(s): {', '.join(missing)}")

    kwargs = dict(data)
    for key in ("class_id", "patch_size", "num_patches", "master_seed"):
        if key in kwargs:
            kwargs[key] = _as_int(key, kwargs[key])
    for key in ("color_std", "size_std", "density", "gsd", "ambient", "min_visibility"):
        if key in kwargs:
            kwargs[key] = _as_float(key, kwargs[key])
    for key in ("mesh_paths", "background_paths"):
        paths = kwargs[key]
        if not isinstance(paths, list):
            raise ValidationError(f"{key} must be a list of file paths")
        if base_dir is not None:
            base = Path(base_dir)
            paths = [str(p) if Path(p).is_absolute() else str(base / p) for p in paths]
        kwargs[key] = [str(p) for p in paths]

    return DesignConfig(**kwargs)


def _as_int(name, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    return value


def _as_float(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    return float(value)


def serialize_config(config: DesignConfig) -> str:
    """Inverse of parse_config: parse_config(serialize_config(c)) == c."""
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def load_config(path: str | Path) -> DesignConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def estimate_target_params(
    size_samples: list[tuple[float, float]],
    color_samples: list[tuple[float, float, float]],
) -> tuple[tuple[float, float], float, tuple[float, float, float], float]:
    """Aggregate hand-measured target samples into distribution parameters.

    Returns ``(size_mean, size_std, color_mean, color_std)``.  Means are
    per-component arithmetic means; each scalar std is the sample standard
    deviation (n-1 denominator) pooled across the vector's components,
    matching the isotropic covariance the sampler applies.
    """
    sizes = [_as_tuple("size sample", s, 2) for s in size_samples]
    colors = [_as_tuple("color sample", c, 3) for c in color_samples]
    if len(sizes) < 2:
        raise ValidationError("need at least 2 size samples to estimate a standard deviation")
    if len(colors) < 2:
        raise ValidationError("need at least 2 color samples to estimate a standard deviation")
    size_mean = _component_means(sizes)
    color_mean = _component_means(colors)
    return size_mean, _pooled_std(sizes, size_mean), color_mean, _pooled_std(colors, color_mean)


def _component_means(samples):
    n = len(samples)
    return tuple(sum(s[i] for s in samples) / n for i in range(len(samples[0])))


def _pooled_std(samples, means):
    n = len(samples)
    width = len(means)
    ss = sum((s[i] - means[i]) ** 2 for s in samples for i in range(width))
    return math.sqrt(ss / (width * (n - 1)))


def estimate_solar_bounds(
    observations: list[tuple[float, float, float]],
) -> tuple[tuple[float, float], tuple[float, float], tuple[float, float]]:
    """Turn inspected (elevation, azimuth, intensity) readings into uniform bounds.

    Each bound pair is the componentwise (min, max) over the observations.
    """
    if not observations:
        raise ValidationError("need at least 1 solar observation")
    obs = [_as_tuple("solar observation", o, 3) for o in observations]
    ranges = (ELEVATION_RANGE, AZIMUTH_RANGE, (0.0, math.inf))
    names = ("elevation", "azimuth", "intensity")
    for o in obs:
        for value, (lo, hi), name in zip(o, ranges, names):
            if not (lo <= value <= hi):
                raise ValidationError(
                    f"solar {name} observation {value} outside valid range [{lo}, {hi}]"
                )
    return tuple(
        (min(o[i] for o in obs), max(o[i] for o in obs)) for i in range(3)
    )


def make_sweep_configs(
    base: DesignConfig, parameter: str, offsets: list[float]
) -> list[DesignConfig]:
    """Build perturbed copies of ``base`` for a sensitivity sweep.

    For ``color_mean``/``size_mean`` the offsets are signed percentages:
    each output scales the chosen mean vector by (1 + p/100), clamping
    color components back into [0, 255].  For ``num_patches`` the offsets
    are replacement patch counts.  Every other field, including the master
    seed, is copied unchanged.
    """
    if parameter not in SWEEPABLE_PARAMS:
        raise ValidationError(
            f"parameter must be one of {', '.join(SWEEPABLE_PARAMS)}, got {parameter!r}"
        )
    out = []
    for off in offsets:
        if parameter == "num_patches":
            k = _as_int("num_patches offset", off)
            if k <= 0:
                raise ValidationError(f"num_patches sweep values must be > 0, got {k}")
            out.append(replace(base, num_patches=k))
            continue
        if off <= -100:
            raise ValidationError(f"percentage offset must be > -100, got {off}")
        factor = 1.0 + off / 100.0
        if parameter == "color_mean":
            scaled = tuple(
                min(COLOR_RANGE[1], max(COLOR_RANGE[0], c * factor)) for c in base.color_mean
            )
            out.append(replace(base, color_mean=scaled))
        else:
            out.append(replace(base, size_mean=tuple(s * factor for s in base.size_mean)))
    return out
