# backend/test_alpha.py - Test witness sets, alpha upper bounds and phi_(m,n) sentences

import itertools
import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pandas as pd
import pytest

from config import settings
from conftest import circle_graph, hand_graph
from exceptions import BudgetExceeded, EmptyWitnessSet, NotUniform, SnapFailure
from models.experiment import AlphaRun
from models.graph import SampleConfig
from models.spaces import SpaceDescriptor
from services.acceptance import QUICK, suite_alpha
from services.alpha import (
    alpha_estimate,
    alpha_from_sentences,
    alpha_upper,
    build_witness_set,
    delta_schedule,
    phi_mn_holds,
)
from services.geometry import alpha_target, diameter
from services.graphgen import generate
from services.recovery import true_B
from services.sampling import sample_iid


@pytest.fixture(scope="module")
def circle5_graph():
    return circle_graph(5.0, 2000, seed=7)


def _exhaustive_alpha(graph):
    best = 1.0
    for r in range(1, graph.n + 1):
        for U in itertools.combinations(range(graph.n), r):
            best = min(best, alpha_upper(graph, U))
    return best

# =============================================================================
# WITNESS SETS
# =============================================================================

def test_witness_set_with_large_delta(circle5_graph):
    ws = build_witness_set(circle5_graph, 300, diameter(circle5_graph.space), seed=1)
    assert len(ws.U) == len(set(ws.U)) == 300
    assert np.all(ws.snap_distances <= diameter(circle5_graph.space))


def test_witness_set_of_every_vertex():
    g = circle_graph(3.0, 60, seed=2)
    ws = build_witness_set(g, 60, diameter(g.space), seed=3)
    assert sorted(ws.U) == list(range(60))


def test_witness_set_snap_failure():
    g = circle_graph(3.0, 60, seed=2)
    with pytest.raises(SnapFailure) as info:
        build_witness_set(g, 60, 1e-9, seed=3)
    assert info.value.source_index == 0


def test_witness_set_snaps_close(circle5_graph):
    ws = build_witness_set(circle5_graph, 200, 0.05, seed=[4, 200, 0])
    assert np.all(ws.snap_distances <= 0.05)


def test_delta_schedule():
    assert delta_schedule(SpaceDescriptor.circle(5.0)) == Fraction(1, 80)
    with pytest.raises(NotUniform):
        delta_schedule(SpaceDescriptor.box(1.0, 1.0))

# =============================================================================
# UPPER BOUNDS
# =============================================================================

def test_alpha_upper_examples(triangle, empty_graph):
    assert alpha_upper(empty_graph, [0, 2, 4]) == 0.0
    assert alpha_upper(triangle, [0, 1, 2]) == pytest.approx(2 / 3)
    assert alpha_upper(triangle, [1]) == 1.0
    with pytest.raises(EmptyWitnessSet):
        alpha_upper(triangle, [])


def test_graph_mode_below_ball_mode(circle5_graph):
    rng = np.random.default_rng(0)
    B = true_B(circle5_graph)
    for _ in range(10):
        U = rng.choice(circle5_graph.n, size=100, replace=False)
        graph_mode = alpha_upper(circle5_graph, U)
        ball_mode = alpha_upper(circle5_graph, U, "gec_closure")
        assert graph_mode <= ball_mode
        assert alpha_upper(circle5_graph, U, "gec_closure", B=B) == pytest.approx(ball_mode)


def test_ball_mode_respects_average_mass(circle5_graph):
    rng = np.random.default_rng(1)
    target = alpha_target(circle5_graph.space)
    violations = 0
    for _ in range(40):
        U = rng.choice(circle5_graph.n, size=200, replace=False)
        violations += alpha_upper(circle5_graph, U, "gec_closure") < target - 0.02
    assert violations / 40 < 0.05

# =============================================================================
# ESTIMATES
# =============================================================================

def test_estimate_on_short_circle():
    g = circle_graph(2.0, 400, seed=5)
    report = alpha_estimate(g, [50], delta=0.05, seed=1, repeats=2, mode="gec_closure", threads=1)
    assert report.theoretical == pytest.approx(1.0)
    assert report.estimate == pytest.approx(1.0)


def test_estimate_close_to_target(circle5_graph):
    report = alpha_estimate(circle5_graph, [500], delta=0.05, seed=2, repeats=8, mode="gec_closure")
    assert report.theoretical == pytest.approx(0.4)
    assert 0.35 <= report.estimate <= 0.47
    assert report.estimate == min(r["upper"] for r in report.uppers)


def test_graph_mode_estimate(circle5_graph):
    report = alpha_estimate(circle5_graph, [200], delta=0.05, seed=2, repeats=4)
    closure = alpha_estimate(circle5_graph, [200], delta=0.05, seed=2, repeats=4, mode="gec_closure")
    assert report.mode == "graph"
    # same witness sets, adjacency is a subset of the unit ball
    assert [r["max_snap"] for r in report.uppers] == [r["max_snap"] for r in closure.uppers]
    assert 0.15 < report.estimate <= closure.estimate
    assert AlphaRun.build({"graph": "g.json", "sizes": "10"}).mode == "graph"


def test_more_witness_sets_never_raise_estimate(circle5_graph):
    few = alpha_estimate(circle5_graph, [100], delta=0.05, seed=3, repeats=2)
    many = alpha_estimate(circle5_graph, [100], delta=0.05, seed=3, repeats=6)
    assert many.estimate <= few.estimate
    assert many.uppers[:2] == few.uppers


def test_estimate_skips_snap_failures(circle5_graph, caplog):
    report = alpha_estimate(circle5_graph, [2000, 100], delta=0.05, seed=0, repeats=1)
    assert report.skipped >= 1
    assert "Skipping witness set" in caplog.text


def test_per_size_csv(circle5_graph, tmp_path):
    report = alpha_estimate(circle5_graph, [100, 200], delta=0.05, seed=4, repeats=2)
    path = tmp_path / "alpha.csv"
    report.write_csv(path)
    table = pd.read_csv(path)
    assert list(table["size"]) == [100, 200]
    assert set(table.columns) >= {"size", "estimate", "sets", "theoretical"}
    assert report.to_dict()["per_size"][0]["sets"] == 2


def test_estimate_needs_uniform_space():
    sample = sample_iid(SpaceDescriptor.box(2.0, 2.0), SampleConfig(n=50, seed=1, integer_margin=0.0))
    with pytest.raises(NotUniform):
        alpha_estimate(generate(sample, 0.5, 1), [10])

# =============================================================================
# SENTENCES
# =============================================================================

def test_phi_examples(triangle, empty_graph):
    assert phi_mn_holds(triangle, 3, 3)
    assert not phi_mn_holds(triangle, 1, 2)
    assert all(phi_mn_holds(empty_graph, 0, n) for n in range(1, 6))
    assert not phi_mn_holds(triangle, 0, 4)


def test_phi_budget():
    g = hand_graph(30, [])
    with pytest.raises(BudgetExceeded) as info:
        phi_mn_holds(g, 1, 15)
    assert info.value.required == math.comb(30, 15)
    assert info.value.budget == settings.PHI_BUDGET


def test_alpha_from_sentences_examples(triangle, empty_graph):
    assert alpha_from_sentences(empty_graph, 5) == 0.0
    assert alpha_from_sentences(triangle, 3) == pytest.approx(2 / 3)
    value, results = alpha_from_sentences(triangle, 3, with_results=True)
    assert (1, 2, False) in results and (2, 3, True) in results


def test_sentences_match_exhaustive_oracle():
    rng = np.random.default_rng(11)
    for trial in range(40):
        n = int(rng.integers(1, 11))
        g = hand_graph(n, list(nx.gnp_random_graph(n, float(rng.random()), seed=trial).edges()))
        assert alpha_from_sentences(g, n) == pytest.approx(_exhaustive_alpha(g))


@pytest.mark.slow
def test_circle_acceptance_band():
    hits = 0
    for seed in range(5):
        g = circle_graph(5.0, 4000, seed=seed)
        report = alpha_estimate(g, [200, 500], delta=0.05, seed=seed, mode="gec_closure")
        hits += abs(report.estimate - 0.4) <= 0.05
    assert hits >= 4


@pytest.mark.slow
def test_alpha_suite_reports_adjacency_estimates():
    result = suite_alpha(QUICK, seed=1, threads=2)
    assert set(result.details["sphere"]) == {"gec_closure", "graph"}
    for runs in result.details["circle"].values():
        assert all(e["graph"] <= e["gec_closure"] for e in runs)
    assert result.details["sphere_graph_gap"] < 0
