# backend/services/graphgen.py
"""
Unit-threshold random graph generation over samples, k-neighbourhoods,
and coordinate stripping / re-attachment.
"""

import dataclasses
import logging
import threading
from typing import Dict, List, FrozenSet, Tuple

import numpy as np

from exceptions import EmptySample, IndexOutOfRange, InvalidInput, MismatchedSpace
from models.graph import GeoGraph, SampleSet
from services.geometry import distances_from, pairwise_distances

logger = logging.getLogger(__name__)

# Columns of coins drawn per Philox block
_COIN_BLOCK = 256


def edge_coin_stream(seed: int) -> np.random.Generator:
    """Counter-based stream; the coin of pair (u, v), u < v, is element v(v-1)/2 + u."""
    return np.random.Generator(np.random.Philox(seed))


def generate(sample: SampleSet, p: float, seed: int) -> GeoGraph:
    """Join each pair at distance < 1 independently with probability p."""
    if len(sample) == 0:
        raise EmptySample("cannot generate a graph on an empty sample")
    if not 0.0 < p < 1.0:
        raise InvalidInput(f"edge probability must lie in (0, 1), got {p}")

    n = len(sample)
    coords = sample.coords
    adj = np.zeros((n, n), dtype=bool)
    rng = edge_coin_stream(seed)

    for start in range(1, n, _COIN_BLOCK):
        stop = min(start + _COIN_BLOCK, n)
        coins = rng.random(stop * (stop - 1) // 2 - start * (start - 1) // 2)
        offset = 0
        for v in range(start, stop):
            d = distances_from(sample.space, coords[v], coords[:v])
            row = (d < 1.0) & (coins[offset:offset + v] < p)
            adj[v, :v] = row
            offset += v

    adj |= adj.T
    graph = GeoGraph(
        adjacency=adj,
        p=p,
        seed=seed,
        space=sample.space,
        coords=coords,
        integer_margin=sample.config.integer_margin,
        sample_seed=sample.config.seed,
    )
    logger.info(f"Generated graph on {sample.space.describe()}: n={n}, edges={graph.edge_count()}, p={p}")
    return graph


def unit_threshold_violations(graph: GeoGraph) -> List[Tuple[int, int]]:
    """Edges joining points at distance >= 1 (empty for every generated graph)."""
    if not graph.has_coords:
        return []
    bad = []
    for u, v in graph.edges():
        if distances_from(graph.space, graph.coords[u], graph.coords[v:v + 1])[0] >= 1.0:
            bad.append((u, v))
    return bad


def strip_coordinates(graph: GeoGraph) -> GeoGraph:
    return dataclasses.replace(graph, space=None, coords=None)


def attach_coordinates(graph: GeoGraph, sample: SampleSet) -> GeoGraph:
    """Re-attach a sample's coordinates to a pure-adjacency graph."""
    if len(sample) != graph.n:
        raise MismatchedSpace(f"sample of {len(sample)} points for a graph on {graph.n} vertices")
    attached = dataclasses.replace(graph, space=sample.space, coords=sample.coords)
    bad = unit_threshold_violations(attached)
    if bad:
        raise MismatchedSpace(f"{len(bad)} edges violate the unit threshold, first {bad[0]}")
    return attached


def distance_matrix(graph: GeoGraph) -> np.ndarray:
    if not graph.has_coords:
        raise MismatchedSpace("graph has no coordinates")
    return pairwise_distances(graph.space, graph.coords)

# =============================================================================
# NEIGHBOURHOODS
# =============================================================================

class NeighborhoodCache:
    """
    N_k layers: vertices reachable by an edge walk of length 1..k (repeats allowed).
    Layers are built whole under a lock, so readers never see a partial layer.
    """

    def __init__(self, graph: GeoGraph, eager: Tuple[int, ...] = ()):
        self.graph = graph
        self._A = graph.adjacency.astype(np.float32)
        self._walks: Dict[int, np.ndarray] = {1: graph.adjacency}
        self._layers: Dict[int, np.ndarray] = {1: graph.adjacency}
        self._lock = threading.Lock()
        for k in eager:
            self.layer(k)

    def _walk(self, k: int) -> np.ndarray:
        # vertices reachable by a walk of exactly k edges
        if k not in self._walks:
            prev = self._walk(k - 1).astype(np.float32)
            w = (prev @ self._A) > 0
            w.setflags(write=False)
            self._walks[k] = w
        return self._walks[k]

    def layer(self, k: int) -> np.ndarray:
        if k < 1:
            raise IndexOutOfRange(f"neighbourhood radius must be >= 1, got {k}")
        layer = self._layers.get(k)
        if layer is not None:
            return layer
        with self._lock:
            return self._build(k)

    def _build(self, k: int) -> np.ndarray:
        if k not in self._layers:
            acc = self._build(k - 1) | self._walk(k)
            acc.setflags(write=False)
            self._layers[k] = acc
        return self._layers[k]

    def row(self, v: int, k: int) -> np.ndarray:
        self.graph.check_vertex(v)
        if k in self._layers:
            return self._layers[k][v]
        return neighbor_row(self.graph, v, k)


def neighbor_row(graph: GeoGraph, v: int, k: int) -> np.ndarray:
    """Boolean row of N_k(v) without materializing whole layers."""
    v = graph.check_vertex(v)
    if k < 1:
        raise IndexOutOfRange(f"neighbourhood radius must be >= 1, got {k}")
    A = graph.adjacency
    frontier = A[v].copy()
    reach = frontier.copy()
    for _ in range(k - 1):
        if not frontier.any():
            break
        frontier = A[frontier].any(axis=0)
        reach |= frontier
    return reach


def neighbors_k(graph: GeoGraph, v: int, k: int) -> FrozenSet[int]:
    return frozenset(int(x) for x in np.flatnonzero(neighbor_row(graph, v, k)))
