"""Seeded property sampling for instances and per-image solar conditions.

Every random draw in the pipeline comes from a stream derived from
``(master_seed, purpose tag, image index[, instance index])``, so any
single image or instance can be regenerated in isolation and parallel
generation order cannot change the output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .config import DesignConfig
from .errors import SamplingError

# A stream is just a numpy Generator; the derivation below is the contract.
RngStream = np.random.Generator

MAX_SIZE_REDRAWS = 100


def derive_stream(master_seed: int, tag: str, *indices: int) -> RngStream:
    """Create the deterministic stream for (master_seed, tag, *indices).

    The tag is folded in through a stable hash (not Python's randomized
    ``hash``), so identical inputs give identical streams across runs and
    processes.
    """
    tag_word = int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "little")
    entropy = [master_seed, tag_word, *(int(i) for i in indices)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class InstanceProps:
    """Sampled visual properties for one placed object."""

    color: tuple[float, float, float]  # RGB, clamped to [0, 255]
    size: tuple[float, float]  # (length, width) pixels, > 0
    heading: float  # degrees, [0, 360)
    mesh_choice: int  # index into config.mesh_paths


@dataclass(frozen=True)
class SolarParams:
    """Lighting conditions shared by every object in one image."""

    elevation: float  # degrees, [0, 90]
    azimuth: float  # degrees, [0, 360]
    intensity: float  # >= 0


def sample_instance(config: DesignConfig, stream: RngStream) -> InstanceProps:
    """Draw one instance's color, size, heading, and model choice.

    Color channels are normal draws clamped into [0, 255] (paint can
    saturate); size components must stay physical, so nonpositive draws
    are rejected and redrawn up to MAX_SIZE_REDRAWS times.
    """
    color = np.clip(
        stream.normal(loc=config.color_mean, scale=config.color_std, size=3), 0.0, 255.0
    )
    for _ in range(MAX_SIZE_REDRAWS):
        size = stream.normal(loc=config.size_mean, scale=config.size_std, size=2)
        if (size > 0).all():
            break
    else:
        raise SamplingError(
            f"drew {MAX_SIZE_REDRAWS} consecutive nonpositive sizes; "
            f"size_std={config.size_std} is pathological for size_mean={config.size_mean}"
        )
    heading = float(stream.uniform(0.0, 360.0))
    mesh_choice = int(stream.integers(0, len(config.mesh_paths)))
    return InstanceProps(
        color=tuple(float(c) for c in color),
        size=(float(size[0]), float(size[1])),
        heading=heading,
        mesh_choice=mesh_choice,
    )


def sample_solar(config: DesignConfig, stream: RngStream) -> SolarParams:
    """Draw one image's solar conditions, each uniform over its bound pair."""
    return SolarParams(
        elevation=float(stream.uniform(*config.solar_elevation_bounds)),
        azimuth=float(stream.uniform(*config.solar_azimuth_bounds)),
        intensity=float(stream.uniform(*config.solar_intensity_bounds)),
    )
