# backend/services/geometry.py
"""
Metric geometry of the supported spaces: distances, circular order, shifts,
uniform ball measures and the theoretical alpha targets.
"""

import logging
import math
from functools import lru_cache
from typing import Tuple, List, Sequence, Union

import numpy as np
from sklearn.neighbors import NearestNeighbors

from exceptions import DegenerateTriple, InvalidInput, MismatchedSpace, NotUniform
from models.metric import RationalMetricSpace
from models.spaces import SpaceDescriptor, SpaceKind, Point

logger = logging.getLogger(__name__)

PointLike = Union[Point, Sequence[float], np.ndarray]

SPHERE_NORM_TOLERANCE = 1e-6


def reduce_residue(L: float, x: float) -> float:
    """Reduce x into [0, L)."""
    y = float(np.mod(x, L))
    if y >= L:  # np.mod(-1e-18, L) rounds to L
        y = 0.0
    return y


def as_point(space: SpaceDescriptor, p: PointLike) -> np.ndarray:
    """Validate a point against the space and return its canonical coordinates."""
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.shape[0] != space.dim:
        raise MismatchedSpace(f"{space.describe()} expects {space.dim} coordinates, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise MismatchedSpace(f"non-finite coordinates {arr.tolist()}")

    if space.kind == SpaceKind.CIRCLE:
        if not 0.0 <= arr[0] < space.L:
            raise MismatchedSpace(f"circle residue {arr[0]} outside [0, {space.L})")
    elif space.kind == SpaceKind.SPHERE:
        norm = float(np.linalg.norm(arr))
        if norm == 0 or abs(norm - space.r) > SPHERE_NORM_TOLERANCE * space.r:
            raise MismatchedSpace(f"sphere point norm {norm} differs from radius {space.r}")
        arr = arr * (space.r / norm)
    elif space.kind in (SpaceKind.TORUS, SpaceKind.BOX):
        upper = np.asarray(space.sides)
        inside = (arr >= 0) & ((arr < upper) if space.kind == SpaceKind.TORUS else (arr <= upper))
        if not np.all(inside):
            raise MismatchedSpace(f"coordinates {arr.tolist()} outside {space.describe()}")
    elif space.kind == SpaceKind.FINITE:
        i = arr[0]
        if i != int(i) or not 0 <= i < len(space.metric):
            raise MismatchedSpace(f"finite-space point index {i} out of range")
    return arr


def as_points(space: SpaceDescriptor, coords: Sequence[PointLike]) -> np.ndarray:
    if len(coords) == 0:
        return np.zeros((0, space.dim))
    return np.vstack([as_point(space, p) for p in coords])


@lru_cache(maxsize=32)
def _finite_matrix(metric: RationalMetricSpace) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in metric.d], dtype=float)


def _dist_rows(space: SpaceDescriptor, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Distances between broadcast-compatible coordinate arrays (last axis = coordinates)."""
    kind = space.kind
    if kind == SpaceKind.CIRCLE:
        diff = np.abs(P[..., 0] - Q[..., 0])
        return np.minimum(diff, space.L - diff)
    if kind == SpaceKind.SPHERE:
        cross = np.linalg.norm(np.cross(P, Q), axis=-1)
        dot = np.sum(P * Q, axis=-1)
        return space.r * np.arctan2(cross, dot)
    if kind == SpaceKind.TORUS:
        delta = np.abs(P - Q)
        sides = np.asarray(space.sides)
        delta = np.minimum(delta, sides - delta)
        return np.sqrt(np.sum(delta * delta, axis=-1))
    if kind == SpaceKind.BOX:
        return np.linalg.norm(P - Q, axis=-1)
    matrix = _finite_matrix(space.metric)
    return matrix[P[..., 0].astype(int), Q[..., 0].astype(int)]


def distance(space: SpaceDescriptor, p: PointLike, q: PointLike) -> float:
    a = as_point(space, p)
    b = as_point(space, q)
    if np.array_equal(a, b):
        return 0.0
    return float(_dist_rows(space, a, b))


def distances_from(space: SpaceDescriptor, p: PointLike, coords: np.ndarray) -> np.ndarray:
    """Distances from one point to every row of an (n, dim) coordinate array."""
    a = np.asarray(p, dtype=float).reshape(1, -1)
    if len(coords) == 0:
        return np.zeros(0)
    return _dist_rows(space, a, np.asarray(coords, dtype=float))


def paired_distances(space: SpaceDescriptor, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return _dist_rows(space, np.asarray(P, dtype=float), np.asarray(Q, dtype=float))


def pairwise_distances(space: SpaceDescriptor, coords: np.ndarray) -> np.ndarray:
    X = np.asarray(coords, dtype=float)
    return _dist_rows(space, X[:, None, :], X[None, :, :])

# =============================================================================
# CIRCLE OPERATIONS
# =============================================================================

def _require_circle(space: SpaceDescriptor) -> None:
    if space.kind != SpaceKind.CIRCLE:
        raise MismatchedSpace(f"circular order needs a circle, got {space.describe()}")


def circular_order_array(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized strict C(x,y,z) on residues; any coincidence gives False."""
    return ((x < y) & (y < z)) | ((y < z) & (z < x)) | ((z < x) & (x < y))


def circular_order(space: SpaceDescriptor, a: PointLike, b: PointLike, c: PointLike) -> bool:
    _require_circle(space)
    x, y, z = (float(as_point(space, t)[0]) for t in (a, b, c))
    if x == y or y == z or x == z:
        raise DegenerateTriple("circular order needs pairwise distinct points", (x, y, z))
    return bool(circular_order_array(np.float64(x), np.float64(y), np.float64(z)))


def shift(space: SpaceDescriptor, a: PointLike, z: float) -> Point:
    _require_circle(space)
    x = float(as_point(space, a)[0])
    return (reduce_residue(space.L, x + z),)


def lemma_offsets(space: SpaceDescriptor, a: PointLike, b: PointLike, c: PointLike) -> Tuple[float, float, Point]:
    """Offsets d1, d2 of b and c from a, and e = a + (d2 - d1)."""
    _require_circle(space)
    x, y, z = (float(as_point(space, t)[0]) for t in (a, b, c))
    if x == y or y == z or x == z:
        raise DegenerateTriple("lemma offsets need pairwise distinct points", (x, y, z))
    d1 = reduce_residue(space.L, y - x)
    d2 = reduce_residue(space.L, z - x)
    e = shift(space, (x,), d2 - d1)
    return d1, d2, e

# =============================================================================
# MEASURES
# =============================================================================

def _torus_quarter(a: float, b: float, rho: float) -> float:
    """Area of {(x,y): 0<=x<=a, 0<=y<=b, x^2+y^2 < rho^2}."""
    A = min(a, rho)
    x0 = math.sqrt(rho * rho - b * b) if rho > b else 0.0
    lo = min(x0, A)

    def F(x: float) -> float:
        inside = max(rho * rho - x * x, 0.0)
        return 0.5 * (x * math.sqrt(inside) + rho * rho * math.asin(min(x / rho, 1.0)))

    return b * lo + F(A) - F(lo)


def ball_measure(space: SpaceDescriptor, radius: float) -> float:
    """Measure of an open ball of the given radius under the canonical uniform measure."""
    if not radius > 0:
        raise InvalidInput(f"radius must be > 0, got {radius}")
    if space.kind == SpaceKind.CIRCLE:
        return min(2.0 * radius, space.L)
    if space.kind == SpaceKind.SPHERE:
        r = space.r
        if radius >= math.pi * r:
            return 4.0 * math.pi * r * r
        return 2.0 * math.pi * r * r * (1.0 - math.cos(radius / r))
    if space.kind == SpaceKind.TORUS:
        L1, L2 = space.sides
        return 4.0 * _torus_quarter(L1 / 2.0, L2 / 2.0, radius)
    raise NotUniform(f"{space.describe()} carries no uniformly distributed measure")


def total_measure(space: SpaceDescriptor) -> float:
    if space.kind == SpaceKind.CIRCLE:
        return space.L
    if space.kind == SpaceKind.SPHERE:
        return 4.0 * math.pi * space.r ** 2
    if space.kind == SpaceKind.TORUS:
        return space.sides[0] * space.sides[1]
    raise NotUniform(f"{space.describe()} carries no uniformly distributed measure")


def ball_volume_ratio(space: SpaceDescriptor) -> float:
    """mu(X) / mu(B_1(x))"""
    return total_measure(space) / ball_measure(space, 1.0)


def alpha_target(space: SpaceDescriptor) -> float:
    return 1.0 / ball_volume_ratio(space)


def diameter(space: SpaceDescriptor) -> float:
    if space.kind == SpaceKind.CIRCLE:
        return space.L / 2.0
    if space.kind == SpaceKind.SPHERE:
        return math.pi * space.r
    if space.kind == SpaceKind.TORUS:
        return math.hypot(space.sides[0] / 2.0, space.sides[1] / 2.0)
    if space.kind == SpaceKind.BOX:
        return float(np.linalg.norm(space.sides))
    return float(space.metric.diameter())

# =============================================================================
# SAMPLING AND EMBEDDING
# =============================================================================

def sample_uniform(space: SpaceDescriptor, rng: np.random.Generator, count: int) -> np.ndarray:
    """count i.i.d. points from the canonical probability measure, shape (count, dim)."""
    if space.kind == SpaceKind.CIRCLE:
        x = rng.random(count) * space.L
        x[x >= space.L] = 0.0
        return x.reshape(count, 1)
    if space.kind == SpaceKind.SPHERE:
        v = rng.standard_normal((count, 3))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return space.r * v / norms
    if space.kind in (SpaceKind.TORUS, SpaceKind.BOX):
        sides = np.asarray(space.sides)
        pts = rng.random((count, len(sides))) * sides
        if space.kind == SpaceKind.TORUS:
            pts = np.where(pts >= sides, 0.0, pts)
        return pts
    raise NotUniform(f"cannot sample uniformly from {space.describe()}")


def embed(space: SpaceDescriptor, coords: np.ndarray) -> np.ndarray:
    """Euclidean embedding whose nearest-neighbour order matches the metric (torus: base copy)."""
    X = np.asarray(coords, dtype=float)
    if space.kind == SpaceKind.CIRCLE:
        R = space.L / (2.0 * math.pi)
        theta = X[:, 0] / R
        return np.column_stack([R * np.cos(theta), R * np.sin(theta)])
    if space.kind in (SpaceKind.SPHERE, SpaceKind.TORUS, SpaceKind.BOX):
        return X
    raise MismatchedSpace(f"{space.describe()} has no Euclidean embedding")


class SpatialIndex:
    """Nearest-neighbour and radius queries in the true metric of a space"""

    def __init__(self, space: SpaceDescriptor, coords: np.ndarray):
        self.space = space
        self.coords = np.asarray(coords, dtype=float)
        n = len(self.coords)
        if space.kind == SpaceKind.TORUS:
            L1, L2 = space.sides
            tiles = [self.coords + np.array([i * L1, j * L2]) for i in (-1, 0, 1) for j in (-1, 0, 1)]
            points = np.vstack(tiles)
            self._owner = np.tile(np.arange(n), 9)
        else:
            points = embed(space, self.coords)
            self._owner = np.arange(n)
        self._nn = NearestNeighbors(algorithm="auto").fit(points)

    def _chord(self, radius: float) -> float:
        if self.space.kind == SpaceKind.CIRCLE:
            R = self.space.L / (2.0 * math.pi)
            if radius >= self.space.L / 2.0:
                return 2.0 * R + 1.0
            return 2.0 * R * math.sin(radius / (2.0 * R))
        if self.space.kind == SpaceKind.SPHERE:
            r = self.space.r
            if radius >= math.pi * r:
                return 2.0 * r + 1.0
            return 2.0 * r * math.sin(radius / (2.0 * r))
        return radius

    def nearest(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Metric distance and index of the nearest indexed point for each query row."""
        P = np.asarray(points, dtype=float)
        _, idx = self._nn.kneighbors(embed(self.space, P), n_neighbors=1)
        owner = self._owner[idx[:, 0]]
        return paired_distances(self.space, P, self.coords[owner]), owner

    def nearest_k(self, points: np.ndarray, k: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Per query: (indices, distances) of the k nearest distinct indexed points, nearest first."""
        P = np.asarray(points, dtype=float)
        total = len(self._owner)
        n = len(self.coords)
        k = min(int(k), n)
        raw_k = min(total, 9 * k) if self.space.kind == SpaceKind.TORUS else k
        _, raw = self._nn.kneighbors(embed(self.space, P), n_neighbors=raw_k)
        results = []
        for q, row in zip(P, raw):
            owners = self._owner[row]
            _, first = np.unique(owners, return_index=True)
            owners = owners[np.sort(first)][:k]
            d = distances_from(self.space, q, self.coords[owners])
            order = np.argsort(d, kind="stable")
            results.append((owners[order], d[order]))
        return results

    def within(self, points: np.ndarray, radius: float) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Per query: (indices, distances) of indexed points at metric distance < radius, nearest first."""
        P = np.asarray(points, dtype=float)
        chord = self._chord(radius) * (1.0 + 1e-9) + 1e-12
        hits = self._nn.radius_neighbors(embed(self.space, P), radius=chord, return_distance=False)
        results = []
        for q, raw in zip(P, hits):
            owners = np.unique(self._owner[raw])
            if len(owners) == 0:
                results.append((owners, np.zeros(0)))
                continue
            d = distances_from(self.space, q, self.coords[owners])
            keep = d < radius
            owners, d = owners[keep], d[keep]
            order = np.argsort(d, kind="stable")
            results.append((owners[order], d[order]))
        return results
