# backend/services/sampling.py
"""
Seeded i.i.d. vertex sampling with integer-distance-free enforcement,
covering-radius density diagnostics and sample files.
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, Any, Optional, Union

import numpy as np

from config import settings
from exceptions import RejectionBudgetExceeded, EmptySample, NotUniform, GraphFormatError
from models.files import SampleFile
from models.graph import SampleConfig, SampleSet
from models.spaces import SpaceDescriptor, SpaceKind
from services.geometry import (
    SpatialIndex,
    ball_measure,
    diameter,
    distances_from,
    sample_uniform,
    total_measure,
)

logger = logging.getLogger(__name__)

# Expected excluded mass per accepted point above which sampling is likely infeasible
REJECTION_PRESSURE_WARNING = 3.0


def integer_band_fraction(space: SpaceDescriptor, margin: float) -> float:
    """Probability mass within `margin` of an integer distance from a fixed point."""
    if margin <= 0 or not space.is_uniform:
        return 0.0
    total = total_measure(space)
    mass = 0.0
    for k in range(0, int(math.floor(diameter(space))) + 2):
        outer = ball_measure(space, k + margin)
        inner = ball_measure(space, k - margin) if k - margin > 0 else 0.0
        mass += outer - inner
    return min(mass / total, 1.0)


def rejection_pressure(space: SpaceDescriptor, config: SampleConfig) -> float:
    """Expected number of accepted points excluding a fresh candidate's position."""
    return config.n * integer_band_fraction(space, config.integer_margin)


def _violates_margin(d: np.ndarray, margin: float) -> bool:
    return bool(np.any(np.abs(d - np.rint(d)) <= margin))


def sample_iid(space: SpaceDescriptor, config: SampleConfig) -> SampleSet:
    """
    Draw config.n i.i.d. uniform points; point i uses its own substream
    default_rng([seed, i]) so a sample is a prefix of any larger one with the same seed.
    A candidate within the integer margin of any accepted point is redrawn.
    """
    if space.kind == SpaceKind.FINITE:
        raise NotUniform("finite spaces cannot be sampled i.i.d. uniformly")

    pressure = rejection_pressure(space, config)
    if pressure > REJECTION_PRESSURE_WARNING:
        logger.warning(
            "integer margin makes rejection sampling expensive",
            extra={"space": space.describe(), "n": config.n, "margin": config.integer_margin, "pressure": pressure},
        )

    coords = np.zeros((config.n, space.dim))
    rejections = 0
    for i in range(config.n):
        rng = np.random.default_rng([config.seed, i])
        while True:
            candidate = sample_uniform(space, rng, 1)[0]
            if i == 0 or not _violates_margin(distances_from(space, candidate, coords[:i]), config.integer_margin):
                coords[i] = candidate
                break
            rejections += 1
            if rejections >= config.max_rejections:
                raise RejectionBudgetExceeded(
                    f"rejection budget {config.max_rejections} exhausted after {i} accepted points",
                    accepted=i,
                    rejections=rejections,
                )

    logger.info(f"Sampled {config.n} points on {space.describe()} ({rejections} rejections)")
    return SampleSet(space=space, coords=coords, config=config, rejections=rejections)


def covering_radius(sample: SampleSet, probe_count: Optional[int] = None, probe_seed: int = 0) -> float:
    """Max over uniform probe points of the distance to the nearest sample point."""
    if len(sample) == 0:
        raise EmptySample("covering radius of an empty sample")
    probe_count = probe_count or settings.COVERING_PROBES
    probes = sample_uniform(sample.space, np.random.default_rng(probe_seed), probe_count)
    dist, _ = SpatialIndex(sample.space, sample.coords).nearest(probes)
    return float(dist.max())


def min_integer_gap(sample: SampleSet) -> float:
    """Smallest |d - round(d)| over all pairs; +inf for fewer than two points."""
    best = math.inf
    for i in range(1, len(sample)):
        d = distances_from(sample.space, sample.coords[i], sample.coords[:i])
        best = min(best, float(np.min(np.abs(d - np.rint(d)))))
    return best

# =============================================================================
# SAMPLE FILES
# =============================================================================

def sample_to_dict(sample: SampleSet, config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    data = {"format_version": settings.FORMAT_VERSION}
    data.update(sample.to_dict())
    if config is not None:
        data["effective_config"] = config
    return data


def export_sample(sample: SampleSet, path: Union[str, Path], config: Optional[Dict[str, Any]] = None) -> None:
    Path(path).write_text(json.dumps(sample_to_dict(sample, config), indent=1))
    logger.info(f"Wrote sample of {len(sample)} points to {path}")


def sample_from_dict(data: Dict[str, Any]) -> SampleSet:
    record = SampleFile.parse(data)
    space = SpaceDescriptor.from_dict(record.space)
    cfg = SampleConfig(**record.config)
    return SampleSet(space=space, coords=np.asarray(record.points, dtype=float), config=cfg, rejections=record.rejections)


def load_sample(path: Union[str, Path]) -> SampleSet:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise GraphFormatError(f"cannot read sample file {path}: {e}") from e
    return sample_from_dict(data)
