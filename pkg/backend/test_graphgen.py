# backend/test_graphgen.py - Test graph generation, neighbourhoods and the graph file codec

import json

import networkx as nx
import numpy as np
import pytest

from conftest import hand_graph
from exceptions import EmptySample, GraphFormatError, IndexOutOfRange, InvalidInput, MismatchedSpace
from models.graph import SampleConfig, SampleSet
from services.geometry import pairwise_distances
from services.graphgen import (
    NeighborhoodCache,
    attach_coordinates,
    generate,
    neighbors_k,
    strip_coordinates,
    unit_threshold_violations,
)
from services.sampling import sample_iid
from utils.graph_io import graph_from_dict, graph_to_dict, load_graph, save_graph


def _fixed(space, coords):
    return SampleSet(space=space, coords=np.asarray(coords, dtype=float), config=SampleConfig(n=len(coords), seed=0))

# =============================================================================
# GENERATION
# =============================================================================

def test_far_pair_never_adjacent(circle5):
    sample = _fixed(circle5, [[0.0], [1.7]])
    assert not any(generate(sample, 0.9, seed).adjacency[0, 1] for seed in range(300))


def test_edge_frequency_matches_p(circle5):
    sample = _fixed(circle5, [[0.0], [0.3]])
    hits = sum(bool(generate(sample, 0.5, seed).adjacency[0, 1]) for seed in range(10_000))
    assert abs(hits / 10_000 - 0.5) < 0.02


def test_edge_independence(circle5):
    sample = _fixed(circle5, [[0.0], [0.3], [0.6]])
    a, b = [], []
    for seed in range(4000):
        adj = generate(sample, 0.5, seed).adjacency
        a.append(adj[0, 1])
        b.append(adj[1, 2])
    assert abs(np.corrcoef(np.array(a, float), np.array(b, float))[0, 1]) < 0.05


def test_single_vertex(circle5):
    g = generate(_fixed(circle5, [[1.0]]), 0.5, 3)
    assert g.n == 1 and g.edge_count() == 0


def test_empty_sample_rejected(circle5):
    with pytest.raises(EmptySample):
        generate(_fixed(circle5, np.zeros((0, 1))), 0.5, 0)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.5])
def test_edge_probability_out_of_range(circle5, p):
    with pytest.raises(InvalidInput):
        generate(_fixed(circle5, np.array([[0.5], [1.2]])), p, 0)


def test_unit_threshold_exhaustive(circle5):
    sample = sample_iid(circle5, SampleConfig(n=400, seed=2))
    g = generate(sample, 0.7, 5)
    D = pairwise_distances(circle5, g.coords)
    assert not np.any(g.adjacency & (D >= 1.0))
    assert unit_threshold_violations(g) == []
    assert np.array_equal(g.adjacency, g.adjacency.T)
    assert not np.any(np.diag(g.adjacency))


def test_generation_deterministic_and_prefix_stable(circle5):
    big = generate(sample_iid(circle5, SampleConfig(n=300, seed=8)), 0.5, 21)
    again = generate(sample_iid(circle5, SampleConfig(n=300, seed=8)), 0.5, 21)
    small = generate(sample_iid(circle5, SampleConfig(n=120, seed=8)), 0.5, 21)
    assert np.array_equal(big.adjacency, again.adjacency)
    # coins are keyed by the pair, so induced subgraphs agree
    assert np.array_equal(big.adjacency[:120, :120], small.adjacency)

# =============================================================================
# NEIGHBOURHOODS
# =============================================================================

def _walk_oracle(G: nx.Graph, v: int, k: int) -> set:
    reach, frontier = set(), {v}
    for _ in range(k):
        frontier = {y for x in frontier for y in G.neighbors(x)}
        reach |= frontier
    return reach


def test_neighbors_examples(path3, triangle):
    assert neighbors_k(path3, 0, 1) == {1}
    assert neighbors_k(path3, 0, 2) == {0, 1, 2}
    assert neighbors_k(triangle, 0, 2) == {0, 1, 2}
    isolated = hand_graph(3, [(1, 2)])
    assert all(neighbors_k(isolated, 0, k) == set() for k in (1, 2, 5))


def test_neighbors_match_walk_oracle():
    rng = np.random.default_rng(12)
    for trial in range(150):
        n = int(rng.integers(1, 13))
        G = nx.gnp_random_graph(n, float(rng.uniform(0.1, 0.6)), seed=trial)
        g = hand_graph(n, list(G.edges()))
        cache = NeighborhoodCache(g)
        for v in range(n):
            for k in (1, 2, 3, 4):
                expected = _walk_oracle(G, v, k)
                assert neighbors_k(g, v, k) == expected
                assert set(np.flatnonzero(cache.layer(k)[v])) == expected


def test_layers_monotone(circle6_graph):
    cache = NeighborhoodCache(circle6_graph, eager=(2,))
    n1, n2, n3 = cache.layer(1), cache.layer(2), cache.layer(3)
    assert np.all(n2 >= n1) and np.all(n3 >= n2)
    assert not n2.flags.writeable
    assert np.array_equal(cache.row(7, 2), n2[7])
    assert np.array_equal(cache.row(7, 5), cache.layer(5)[7])


def test_neighbors_bad_input(triangle):
    with pytest.raises(IndexOutOfRange):
        neighbors_k(triangle, 3, 1)
    with pytest.raises(IndexOutOfRange):
        neighbors_k(triangle, 0, 0)

# =============================================================================
# STRIPPING AND FILES
# =============================================================================

def test_strip_and_reattach(circle5):
    sample = sample_iid(circle5, SampleConfig(n=200, seed=4))
    g = generate(sample, 0.5, 1)
    bare = strip_coordinates(g)
    assert bare.coords is None and bare.space is None
    assert np.array_equal(bare.adjacency, g.adjacency)
    back = attach_coordinates(bare, sample)
    assert np.array_equal(back.adjacency, g.adjacency)
    assert len(json.dumps(graph_to_dict(bare))) < len(json.dumps(graph_to_dict(g)))


def test_attach_rejects_wrong_sample(circle5):
    g = generate(sample_iid(circle5, SampleConfig(n=50, seed=4)), 0.5, 1)
    with pytest.raises(MismatchedSpace):
        attach_coordinates(strip_coordinates(g), sample_iid(circle5, SampleConfig(n=40, seed=4)))
    # a different sample of the same size breaks the unit threshold somewhere
    other = sample_iid(circle5, SampleConfig(n=50, seed=99))
    dense = generate(sample_iid(circle5, SampleConfig(n=50, seed=4)), 0.99, 1)
    with pytest.raises(MismatchedSpace):
        attach_coordinates(strip_coordinates(dense), other)


def test_graph_file_round_trip(tmp_path, circle5):
    g = generate(sample_iid(circle5, SampleConfig(n=150, seed=6)), 0.5, 2)
    path = tmp_path / "g.json"
    save_graph(g, path, config={"n": 150})
    loaded = load_graph(path)
    assert np.array_equal(loaded.adjacency, g.adjacency)
    assert np.array_equal(loaded.coords, g.coords)
    assert loaded.space == g.space and loaded.p == g.p and loaded.seed == g.seed
    data = json.loads(path.read_text())
    assert data["edges"] == sorted(data["edges"])
    assert graph_to_dict(loaded, {"n": 150}) == data


def test_graph_file_validation():
    base = {"format_version": 1, "p": 0.5, "seed": 0, "n": 3, "edges": [[0, 1]]}
    assert graph_from_dict(base).edge_count() == 1
    with pytest.raises(GraphFormatError):
        graph_from_dict({**base, "edges": [[1, 0]]})
    with pytest.raises(GraphFormatError):
        graph_from_dict({**base, "format_version": 99})
    with pytest.raises(GraphFormatError):
        graph_from_dict({**base, "coords": [[0.1], [0.2], [0.3]]})
    with pytest.raises(GraphFormatError):
        graph_from_dict({**base, "p": 1.5})
