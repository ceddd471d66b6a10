# backend/conftest.py - Shared fixtures for the geograph tests

import numpy as np
import pytest

from models.graph import GeoGraph, SampleConfig
from models.spaces import SpaceDescriptor
from services.graphgen import generate
from services.sampling import sample_iid


def hand_graph(n, edges, **kwargs) -> GeoGraph:
    """Pure-adjacency graph from an edge list"""
    adj = np.zeros((n, n), dtype=bool)
    for u, v in edges:
        adj[u, v] = adj[v, u] = True
    return GeoGraph(adjacency=adj, p=0.5, seed=0, **kwargs)


def circle_graph(L: float, n: int, seed: int, p: float = 0.5, margin: float = 1e-6, edge_seed=None) -> GeoGraph:
    space = SpaceDescriptor.circle(L)
    sample = sample_iid(space, SampleConfig(n=n, seed=seed, integer_margin=margin))
    return generate(sample, p, seed if edge_seed is None else edge_seed)


@pytest.fixture
def circle5():
    return SpaceDescriptor.circle(5.0)


@pytest.fixture
def triangle():
    return hand_graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return hand_graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def empty_graph():
    return hand_graph(5, [])


@pytest.fixture(scope="session")
def circle6_graph():
    """Circle L=6 with enough density for the recovery formulas"""
    return circle_graph(6.0, 1200, seed=11)
