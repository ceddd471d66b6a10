# backend/models/graph.py
"""
Vertex samples and geometric random graphs.
Adjacency is a read-only boolean row matrix; row v is the N_1 bitset of v.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Any, Optional, Tuple
import logging

import numpy as np

from exceptions import ConfigError, MismatchedSpace, IndexOutOfRange
from models.spaces import SpaceDescriptor, Point

logger = logging.getLogger(__name__)

# =============================================================================
# SAMPLES
# =============================================================================

@dataclass(frozen=True)
class SampleConfig:
    """Parameters of one seeded i.i.d. sample"""
    n: int
    seed: int
    integer_margin: float = 1e-3
    max_rejections: int = 200_000

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError(f"sample size must be >= 0, got {self.n}")
        if not 0.0 <= self.integer_margin < 0.5:
            raise ConfigError(f"integer margin must lie in [0, 1/2), got {self.integer_margin}")
        if self.max_rejections <= 0:
            raise ConfigError("max_rejections must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "seed": self.seed,
            "integer_margin": self.integer_margin,
            "max_rejections": self.max_rejections,
        }


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Ordered sample of points of one space"""
    space: SpaceDescriptor
    coords: np.ndarray
    config: SampleConfig
    rejections: int = 0

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1, self.space.dim)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def points(self) -> List[Point]:
        return [tuple(float(c) for c in row) for row in self.coords]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "space": self.space.to_dict(),
            "config": self.config.to_dict(),
            "rejections": self.rejections,
            "points": [list(p) for p in self.points],
        }

# =============================================================================
# GRAPHS
# =============================================================================

@dataclass(frozen=True, eq=False)
class GeoGraph:
    """Unit-threshold random graph; coordinates and space are optional"""
    adjacency: np.ndarray
    p: float
    seed: int
    space: Optional[SpaceDescriptor] = None
    coords: Optional[np.ndarray] = None
    integer_margin: Optional[float] = None
    sample_seed: Optional[int] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise MismatchedSpace(f"adjacency must be square, got shape {adj.shape}")
        if np.any(np.diag(adj)):
            raise MismatchedSpace("adjacency has self-loops")
        if not np.array_equal(adj, adj.T):
            raise MismatchedSpace("adjacency is not symmetric")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        if self.coords is not None:
            if self.space is None:
                raise MismatchedSpace("coordinates need a space")
            coords = np.asarray(self.coords, dtype=float).reshape(-1, self.space.dim)
            if len(coords) != len(adj):
                raise MismatchedSpace(f"{len(coords)} coordinates for {len(adj)} vertices")
            coords.setflags(write=False)
            object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def has_coords(self) -> bool:
        return self.coords is not None

    def check_vertex(self, v: int) -> int:
        if not 0 <= int(v) < self.n:
            raise IndexOutOfRange(f"vertex {v} outside 0..{self.n - 1}")
        return int(v)

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[self.check_vertex(v)])

    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edge_count(self) -> int:
        return int(self.adjacency.sum() // 2)

    def edges(self) -> List[Tuple[int, int]]:
        u, v = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(a), int(b)) for a, b in zip(u, v)]

    def summary(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "edges": self.edge_count(),
            "p": self.p,
            "seed": self.seed,
            "space": self.space.to_dict() if self.space is not None else None,
            "has_coords": self.has_coords,
        }
