# backend/test_recovery.py - Test structure recovery from pure adjacency on circle graphs

import networkx as nx
import numpy as np
import pytest

from conftest import circle_graph, hand_graph
from exceptions import DegenerateTriple, InvalidInput, MismatchedSpace, NotBAdjacent
from models.graph import GeoGraph
from models.spaces import SpaceDescriptor
from services.evaluator import StructureView
from services.recovery import (
    OrientingLoop,
    RecoveredB,
    find_orienting_loop,
    get_frame,
    is_uni_directional,
    loop_orientation,
    partition_violations,
    recover_B,
    recover_C_ztk,
    recover_F_interval,
    recover_interval,
    recover_order,
    recover_translate,
    suspect_integer_pairs,
    t_formula,
    true_B,
)
from services.recovery_formulas import (
    dsl_B,
    dsl_F_interval,
    dsl_interval,
    dsl_translate,
    dsl_uni_directional,
    structure,
)
from services.recovery_report import b_agreement, circle_gap, oriented_coords, recovery_report, shifted_truth

BAND = 0.05


@pytest.fixture(scope="module")
def circle6_truth(circle6_graph):
    """True B and a ground-truth loop on the shared L=6 graph"""
    B = true_B(circle6_graph)
    return B, find_orienting_loop(circle6_graph, "ground_truth")


@pytest.fixture(scope="module")
def small_circle():
    return circle_graph(5.0, 150, seed=21)


def _grid_graph(L: float, count: int) -> GeoGraph:
    coords = np.arange(count, dtype=float)[:, None] * (L / count)
    return GeoGraph(adjacency=np.zeros((count, count), dtype=bool), p=0.5, seed=0,
                    space=SpaceDescriptor.circle(L), coords=coords)

# =============================================================================
# UNIT-BALL RELATION
# =============================================================================

def test_recover_B_complete_ball():
    g = hand_graph(5, [(u, v) for u in range(5) for v in range(u + 1, 5)])
    B = recover_B(g)
    assert np.array_equal(B.matrix, ~np.eye(5, dtype=bool))


def test_recover_B_matches_formula_on_hand_graph():
    g = hand_graph(8, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 2), (4, 6)])
    table = dsl_B(g)
    np.fill_diagonal(table, False)
    assert np.array_equal(recover_B(g).matrix, table)


def test_recover_B_matches_formula_on_corpus(small_circle):
    graphs = [small_circle] + [
        hand_graph(n, list(nx.gnp_random_graph(n, 0.3, seed=n).edges())) for n in (10, 17, 25, 40)
    ]
    for g in graphs:
        table = dsl_B(g)
        np.fill_diagonal(table, False)
        assert np.array_equal(recover_B(g).matrix, table)


def test_recover_B_invariants(circle6_graph):
    B = recover_B(circle6_graph)
    assert np.array_equal(B.matrix, B.matrix.T)
    assert not np.any(np.diag(B.matrix))
    assert not np.any(circle6_graph.adjacency & ~B.matrix)
    assert not B.matrix.flags.writeable


def test_recover_B_agrees_with_coordinates(circle6_graph):
    report = b_agreement(circle6_graph, recover_B(circle6_graph), BAND)
    assert report["agreement"] >= 0.98
    assert report["edges_outside_B"] == 0


def test_recovered_B_validation():
    with pytest.raises(MismatchedSpace):
        RecoveredB(np.eye(3, dtype=bool))
    with pytest.raises(MismatchedSpace):
        RecoveredB(np.array([[False, True], [False, False]]))

# =============================================================================
# INTERVALS
# =============================================================================

def _hand_B() -> RecoveredB:
    m = np.zeros((8, 8), dtype=bool)
    for u, v in [(0, 1), (1, 2), (2, 3), (0, 2), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (1, 3), (5, 7)]:
        m[u, v] = m[v, u] = True
    return RecoveredB(m)


def test_interval_requires_adjacency():
    with pytest.raises(NotBAdjacent):
        recover_interval(_hand_B(), 0, 4)


def test_interval_without_common_neighbour():
    m = np.zeros((4, 4), dtype=bool)
    m[0, 1] = m[1, 0] = True
    B = RecoveredB(m)
    assert recover_interval(B, 0, 1, reflexive=False) == {0, 1, 2, 3}
    assert recover_interval(B, 0, 1) == {0, 1}


def test_interval_matches_formula_on_hand_instance():
    B = _hand_B()
    g = hand_graph(8, [])
    view = structure(g, B)
    for a, b in zip(*np.nonzero(np.triu(B.matrix))):
        a, b = int(a), int(b)
        assert recover_interval(B, a, b) == dsl_interval(view, a, b)
        assert recover_interval(B, a, b, reflexive=False) == dsl_interval(view, a, b, reflexive=False)


def test_uni_directional_matches_formula(small_circle):
    B = recover_B(small_circle)
    view = structure(small_circle, B)
    rng = np.random.default_rng(4)
    checked = 0
    for a in rng.choice(small_circle.n, size=12, replace=False):
        for b in np.flatnonzero(B.matrix[a])[:3]:
            for c in np.flatnonzero(B.matrix[b])[:3]:
                a_, b_, c_ = int(a), int(b), int(c)
                assert is_uni_directional(B, a_, b_, c_) == dsl_uni_directional(view, a_, b_, c_)
                checked += 1
    assert checked > 0


def test_interval_matches_coordinate_arc(circle6_graph, circle6_truth):
    B, _ = circle6_truth
    x = circle6_graph.coords[:, 0]
    L = circle6_graph.space.L
    rng = np.random.default_rng(1)
    agree = total = 0
    for a in rng.choice(circle6_graph.n, size=40, replace=False):
        a = int(a)
        offsets = np.mod(x - x[a], L)
        candidates = np.flatnonzero((offsets > 0.2) & (offsets < 0.95))
        b = int(candidates[0])
        got = np.zeros(circle6_graph.n, dtype=bool)
        got[list(recover_interval(B, a, b))] = True
        truth = offsets <= offsets[b]
        clear = (circle_gap(L, x, x[a]) > BAND) & (circle_gap(L, x, x[b]) > BAND)
        agree += int(np.sum(got[clear] == truth[clear]))
        total += int(clear.sum())
    assert agree / total >= 0.98

# =============================================================================
# ORIENTING LOOPS
# =============================================================================

@pytest.mark.parametrize("L,n_L", [(5.0, 6), (4.2, 5)])
def test_ground_truth_loop_length(L, n_L):
    g = circle_graph(L, 600, seed=3)
    loop = find_orienting_loop(g, "ground_truth")
    assert loop.n_L == n_L
    assert loop.vertices[0] == loop.vertices[-1]
    assert loop_orientation(g, loop) == 1
    x = g.coords[:, 0]
    steps = [np.mod(x[b] - x[a], L) for a, b in zip(loop.vertices, loop.vertices[1:])]
    assert all(0 < s < 1 for s in steps)
    assert sum(steps) == pytest.approx(L)


def test_ground_truth_loop_needs_circle_coordinates(triangle):
    with pytest.raises(MismatchedSpace):
        find_orienting_loop(triangle, "ground_truth")
    with pytest.raises(InvalidInput):
        find_orienting_loop(triangle, "guess")


def test_adjacency_search_passes_partition(circle6_graph, circle6_truth):
    B, _ = circle6_truth
    loop = find_orienting_loop(circle6_graph, "adjacency_search", B=B)
    assert loop.n_L == 7
    assert partition_violations(B, loop) <= 2 * B.slack() * loop.n_L
    for m in range(loop.n_L):
        assert B.adjacent(*loop.step(m))


def test_loop_validation():
    with pytest.raises(InvalidInput):
        OrientingLoop((0, 1, 2, 3))
    with pytest.raises(InvalidInput):
        OrientingLoop((0, 1, 1, 2, 0))
    loop = OrientingLoop((4, 5, 6, 7, 4))
    assert loop.n_L == 4 and loop.cycle == (4, 5, 6, 7)
    assert OrientingLoop.from_dict(loop.to_dict()) == loop

# =============================================================================
# CIRCULAR ORDER
# =============================================================================

def test_order_on_loop_vertices(circle6_truth):
    B, loop = circle6_truth
    a0, a1, a2 = loop.cycle[:3]
    assert recover_order(B, loop, a0, a1, a2)
    assert not recover_order(B, loop, a2, a1, a0)
    with pytest.raises(DegenerateTriple):
        recover_order(B, loop, a0, a0, a1)


def _clear_triples(graph, loop, count, seed):
    u = oriented_coords(graph, loop)
    L = graph.space.L
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        t = rng.choice(graph.n, size=3, replace=False)
        if all(circle_gap(L, u[p], u[q]) > BAND for p, q in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2]))):
            out.append(tuple(int(v) for v in t))
    return u, out


def test_path_order_matches_coordinates(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    u, triples = _clear_triples(circle6_graph, loop, 40, seed=2)
    agree = 0
    for x, y, z in triples:
        got = recover_order(B, loop, x, y, z)
        assert got == recover_order(B, loop, y, z, x)
        assert not (got and recover_order(B, loop, x, z, y))
        truth, _ = shifted_truth(u, circle6_graph.space.L, 0, 0, 0, x, y, z, BAND)
        agree += got == bool(truth)
    assert agree / len(triples) >= 0.95


def test_path_formula_witnesses_are_sound(circle6_graph, circle6_truth):
    # paths only run through loop points and the targets, so True answers must hold
    B, loop = circle6_truth
    u, triples = _clear_triples(circle6_graph, loop, 40, seed=5)
    found = [(x, y, z) for x, y, z in triples if t_formula(B, loop, x, y, z)]
    assert found
    sound = sum(bool(shifted_truth(u, circle6_graph.space.L, 0, 0, 0, x, y, z, BAND)[0]) for x, y, z in found)
    assert sound / len(found) >= 0.95


def test_frame_order_matches_coordinates(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    frame = get_frame(B, loop)
    u = oriented_coords(circle6_graph, loop)
    rng = np.random.default_rng(3)
    idx = rng.integers(0, circle6_graph.n, size=(10_000, 3))
    x, y, z = idx.T
    truth, clear = shifted_truth(u, circle6_graph.space.L, 0, 0, 0, x, y, z, BAND)
    got = frame.order(x, y, z)
    assert np.mean(got[clear] == truth[clear]) >= 0.98
    # cyclic and exclusive everywhere
    assert np.array_equal(frame.order(x, y, z), frame.order(y, z, x))
    assert not np.any(frame.order(x, y, z) & frame.order(x, z, y))

# =============================================================================
# F-INTERVALS AND TRANSLATES
# =============================================================================

def test_F_intervals_basic(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    for a in (0, 17, 400):
        f0 = recover_F_interval(B, loop, a, 0)
        f1 = recover_F_interval(B, loop, a, 1)
        f2 = recover_F_interval(B, loop, a, 2)
        back = recover_F_interval(B, loop, a, -1)
        assert a in f0 and a not in back
        assert not (f0 & f1) and not (f1 & f2) and not (f0 & f2)
        assert not (back & f0)


def test_F_interval_matches_coordinate_arc(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    u = oriented_coords(circle6_graph, loop)
    L = circle6_graph.space.L
    agree = total = 0
    for a in range(0, 1200, 60):
        got = np.zeros(circle6_graph.n, dtype=bool)
        got[list(recover_F_interval(B, loop, a, 1))] = True
        offsets = np.mod(u - u[a], L)
        truth = (offsets >= 1.0) & (offsets < 2.0)
        clear = (np.abs(offsets - 1.0) > BAND) & (np.abs(offsets - 2.0) > BAND)
        agree += int(np.sum(got[clear] == truth[clear]))
        total += int(clear.sum())
    assert agree / total >= 0.98


def test_translate_singleton_interval():
    g = _grid_graph(5.5, 10)  # spacing 0.55: unit balls hold the two grid neighbours
    B = true_B(g)
    loop = OrientingLoop(tuple(range(10)) + (0,))
    assert recover_F_interval(B, loop, 0, 0) == {0, 1}
    assert recover_F_interval(B, loop, 0, 1) == {2}
    t = recover_translate(B, loop, 0, 1)
    assert t.vertex == 2 and not t.approximate and t.interval_size == 1
    with pytest.raises(InvalidInput):
        recover_translate(B, loop, 0, 0)


def test_translate_matches_coordinates(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    u = oriented_coords(circle6_graph, loop)
    L = circle6_graph.space.L
    errors = []
    for x in range(300):
        t = recover_translate(B, loop, x, 1)
        assert t.approximate
        errors.append(circle_gap(L, u[t.vertex], u[x] + 1))
    assert np.mean(np.asarray(errors) < BAND) >= 0.95


def test_translate_wraps_past_L(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    u = oriented_coords(circle6_graph, loop)
    L = circle6_graph.space.L
    for x in range(0, 1200, 60):
        t = recover_translate(B, loop, x, 7)
        assert circle_gap(L, u[t.vertex], u[x] + 7) < 0.1


def test_F_and_translate_match_formulas(small_circle):
    B = true_B(small_circle)
    loop = find_orienting_loop(small_circle, "ground_truth")
    frame = get_frame(B, loop)
    view = structure(small_circle, B, frame)
    for a in (0, 5, 33, 90):
        for n in (0, 1, -1, 2):
            assert recover_F_interval(B, loop, a, n) == dsl_F_interval(view, a, n)
        assert dsl_translate(view, a) == {recover_translate(B, loop, a, 1).vertex}

# =============================================================================
# SHIFTED ORDER
# =============================================================================

def test_shifted_zero_reduces_to_order(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    _, triples = _clear_triples(circle6_graph, loop, 8, seed=6)
    for a, c, b in triples:
        assert recover_C_ztk(B, loop, 0, 0, 0, a, c, b) == recover_order(B, loop, a, c, b)
    with pytest.raises(DegenerateTriple):
        recover_C_ztk(B, loop, 1, 0, 0, 3, 3, 4)


def test_shifted_matches_coordinates(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    u = oriented_coords(circle6_graph, loop)
    L = circle6_graph.space.L
    rng = np.random.default_rng(8)
    agree = total = 0
    while total < 150:
        a, c, b = (int(v) for v in rng.choice(circle6_graph.n, size=3, replace=False))
        z, t, k = (int(v) for v in rng.integers(-2, 3, size=3))
        truth, clear = shifted_truth(u, L, z, t, k, a, c, b, BAND)
        if not clear:
            continue
        agree += recover_C_ztk(B, loop, z, t, k, a, c, b) == bool(truth)
        total += 1
    assert agree / total >= 0.9


def test_shifted_oracle_in_structure(small_circle):
    B = true_B(small_circle)
    loop = find_orienting_loop(small_circle, "ground_truth")
    frame = get_frame(B, loop)
    got = frame.shifted_oracle(1, 0, -1, np.array([3, 4]), np.array([10, 10]), np.array([20, 4]))
    assert got.shape == (2,)
    assert bool(got[0]) == frame.shifted(1, 0, -1, 3, 10, 20)
    assert not got[1]  # repeated vertex
    assert isinstance(structure(small_circle, B, frame), StructureView)

# =============================================================================
# DIAGNOSTICS AND REPORT
# =============================================================================

def test_suspect_pairs_are_translates(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    pairs = suspect_integer_pairs(B, loop, vertices=range(60))
    for x, y in pairs:
        assert recover_translate(B, loop, x, 1).vertex == y
    assert suspect_integer_pairs(true_B(_grid_graph(5.5, 10)), OrientingLoop(tuple(range(10)) + (0,))) == []


def test_recovery_report_with_truth(circle6_graph, circle6_truth):
    B, loop = circle6_truth
    report = recovery_report(circle6_graph, B=B, loop=loop, triples=2000, seed=1, translate_limit=100)
    assert report["B"]["agreement"] == 1.0
    assert report["loop"]["n_L"] == 7 and report["loop"]["orientation"] == 1
    assert report["order"]["agreement"] >= 0.98
    assert report["translate"]["within_band"] >= 0.95


@pytest.mark.slow
def test_pipeline_from_adjacency():
    g = circle_graph(6.0, 3000, seed=5)
    report = recovery_report(g, triples=10_000, seed=2, path_checks=100, translate_limit=600)
    assert report["B"]["agreement"] >= 0.99
    assert report["loop"] is not None
    assert report["order"]["agreement"] >= 0.98
    assert report["order"]["path_vs_frame"] >= 0.95
    assert report["translate"]["within_band"] >= 0.9
