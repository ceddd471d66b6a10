# backend/test_gec.py - Test g.e.c. witness search and probe scoring

import numpy as np
import pytest

from conftest import circle_graph, hand_graph
from exceptions import InvalidProbe, NotApplicable, NotFound
from models.spaces import SpaceDescriptor
from services.gec import GecProbe, check_witness, find_witness, gec_score, gec_trials
from services.recovery import true_B


def _five():
    coords = np.array([[0.0], [0.1], [0.2], [0.3], [0.4]])
    return hand_graph(5, [(3, 1), (3, 2), (4, 1), (0, 2)],
                      space=SpaceDescriptor.circle(10.0), coords=coords)


def _brute_force(graph, probe):
    x = graph.coords[:, 0]
    hits = []
    for v in range(graph.n):
        d = min(abs(x[v] - x[probe.s]), 10.0 - abs(x[v] - x[probe.s]))
        if v in probe.pattern or d >= probe.epsilon:
            continue
        if all(graph.adjacency[v, a] for a in probe.A) and not any(graph.adjacency[v, b] for b in probe.B):
            hits.append(v)
    return hits


def test_empty_pattern_takes_nearest():
    g = _five()
    assert find_witness(g, GecProbe.of(2, epsilon=1.0)) == 2


def test_unique_pattern_match():
    g = _five()
    probe = GecProbe.of(0, A=[1], B=[2], epsilon=1.0)
    assert _brute_force(g, probe) == [4]
    assert find_witness(g, probe) == 4
    assert check_witness(g, probe, 4)


def test_exclusion_exhausts_candidates():
    g = _five()
    with pytest.raises(NotFound):
        find_witness(g, GecProbe.of(0, B=[0, 1, 2], epsilon=0.25))


def test_invalid_probes():
    g = _five()
    with pytest.raises(InvalidProbe):
        find_witness(g, GecProbe.of(0, A=[1], B=[1], epsilon=1.0))
    with pytest.raises(InvalidProbe):
        find_witness(g, GecProbe.of(0, A=[1], epsilon=0.0))
    far = hand_graph(3, [], space=SpaceDescriptor.circle(10.0), coords=np.array([[0.0], [0.5], [5.0]]))
    with pytest.raises(InvalidProbe):
        find_witness(far, GecProbe.of(0, A=[2], epsilon=1.0))


def test_pure_adjacency_mode():
    g = _five()
    bare = hand_graph(5, [(3, 1), (3, 2), (4, 1), (0, 2)])
    probe = GecProbe.of(0, A=[1], B=[2], epsilon=1.0)
    B = true_B(g)
    with pytest.raises(NotApplicable):
        find_witness(bare, probe, b_oracle=B)
    with pytest.raises(NotApplicable):
        find_witness(bare, probe)
    assert find_witness(bare, probe, b_oracle=B, candidates=[4, 3, 0]) == 4


def test_score_complete_ball():
    coords = np.linspace(0.0, 0.5, 30)[:, None]
    edges = [(u, v) for u in range(30) for v in range(u + 1, 30)]
    g = hand_graph(30, edges, space=SpaceDescriptor.circle(10.0), coords=coords)
    assert gec_score(g, trials=50, max_pattern=3, epsilon=1.0, seed=0, with_b=False) == 1.0


def test_score_empty_graph():
    sampled = circle_graph(5.0, 200, seed=1)
    g = hand_graph(200, [], space=sampled.space, coords=sampled.coords)
    assert gec_score(g, trials=50, max_pattern=3, epsilon=0.5, seed=0, min_a=1) == 0.0


def test_trials_monotone_in_epsilon_and_witnesses_valid():
    g = circle_graph(5.0, 1000, seed=2)
    small = gec_trials(g, 100, 4, 0.05, seed=3)
    large = gec_trials(g, 100, 4, 0.2, seed=3)
    for a, b in zip(small, large):
        assert a["probe"]["A"] == b["probe"]["A"] and a["probe"]["B"] == b["probe"]["B"]
        assert not a["found"] or b["found"]
        if b["found"]:
            probe = GecProbe.of(b["probe"]["s"], b["probe"]["A"], b["probe"]["B"], 0.2)
            assert check_witness(g, probe, b["witness"])


def test_trials_independent_of_threads():
    g = circle_graph(5.0, 300, seed=4)
    assert gec_trials(g, 40, 3, 0.1, seed=9, threads=1) == gec_trials(g, 40, 3, 0.1, seed=9, threads=4)


@pytest.mark.slow
def test_score_grows_with_sample_size():
    wins = 0
    for seed in range(10):
        small = gec_score(circle_graph(5.0, 1000, seed=seed), 200, 4, 0.05, seed=seed)
        large = gec_score(circle_graph(5.0, 4000, seed=seed), 200, 4, 0.05, seed=seed)
        wins += large >= small
    assert wins >= 9
