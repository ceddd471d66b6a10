# backend/test_urysohn.py - Test exact-rational Katetov extensions and the C_n back-and-forth

import math
import random
from fractions import Fraction

import pytest

from exceptions import IntegerDistanceInY, InvalidInput, NonPositiveEpsilon, NotKatetov, SnapFailure
from models.metric import CnMap, RationalGraph, RationalMetricSpace, band
from services.urysohn import (
    assign_distances,
    back_and_forth,
    choose_epsilon,
    cn_violations,
    d_sets,
    edge_violations,
    epsilon_prime,
    extend_map,
    extension_distances,
    katetov_complete,
    katetov_extend,
    katetov_violation,
    rado_back_and_forth,
    rado_extend,
    random_instance,
    random_rational_graph,
    random_space,
    validate_metric,
    verify_extension_triangles,
)

F = Fraction


def _pair(d, free=True):
    return RationalMetricSpace.from_pairs(["a", "b"], {("a", "b"): d}, integer_distance_free=free)


def _check_instance(seed):
    rng = random.Random(seed)
    X, Y, cn_map, x0 = random_instance(rng)
    assignment = extension_distances(X, Y, cn_map, x0)
    for x, y in cn_map.pairs:
        n = band(X.dist(x0, x))
        assert n - 1 < assignment[y] < n
    assert verify_extension_triangles(Y, assignment) == []
    step = extend_map(X, Y, cn_map, x0)
    assert validate_metric(step.Y) == []
    assert cn_violations(X, step.Y, step.cn_map) == []

# =============================================================================
# METRICS AND KATETOV FUNCTIONS
# =============================================================================

def test_validate_metric_examples():
    assert validate_metric(RationalMetricSpace.from_matrix(["a"], [["0"]])) == []
    bad = RationalMetricSpace.from_pairs(
        ["a", "b", "c"], {("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 3}, integer_distance_free=False
    )
    violations = validate_metric(bad)
    assert [v.kind for v in violations] == ["triangle"]
    assert set(violations[0].labels) == {"a", "b", "c"}
    flagged = RationalMetricSpace.from_pairs(["a", "b"], {("a", "b"): 2})
    assert [v.kind for v in validate_metric(flagged)] == ["integer_distance"]


def test_random_spaces_are_valid_and_round_trip():
    rng = random.Random(1)
    for n in (1, 2, 5, 10):
        space = random_space(n, rng)
        assert len(space) == n
        assert validate_metric(space) == []
        assert RationalMetricSpace.from_dict(space.to_dict()) == space


def test_katetov_extend_constant_function():
    space = random_space(4, random.Random(2))
    c = space.diameter() / 2 + F(1, 1009)
    grown = katetov_extend(space, {x: c for x in space.labels}, "new")
    assert len(grown) == 5
    assert validate_metric(grown) == []


def test_katetov_extend_rejects_bad_function():
    space = _pair("1/2")
    with pytest.raises(NotKatetov) as info:
        katetov_extend(space, {"a": F(1, 3), "b": F(5, 3)}, "new")
    assert info.value.pair == ("a", "b")


def test_katetov_complete_keeps_metric():
    rng = random.Random(3)
    space = random_space(6, rng)
    a, b = space.labels[:2]
    partial = {a: space.dist(a, b) + F(1, 10), b: F(1, 10)}
    assert katetov_violation(space.restrict([a, b]), partial) is None
    full = katetov_complete(space, partial, rng)
    assert katetov_violation(space, full) is None
    assert validate_metric(katetov_extend(space, full, "w")) == []

# =============================================================================
# EPSILONS AND DISTANCES
# =============================================================================

def test_epsilon_prime_examples():
    Y = _pair("13/10")
    D = {1: ["a"], 2: ["b"]}
    assert epsilon_prime(D, Y, "b") == F(13, 10)
    assert epsilon_prime(D, Y, "a") == math.inf


def test_epsilon_prime_takes_exact_minimum():
    Y = RationalMetricSpace.from_pairs(
        ["a", "b", "c"], {("a", "b"): "12/5", ("c", "b"): "21/10", ("a", "c"): "1/2"}
    )
    D = {1: ["a", "c"], 3: ["b"]}
    brute = min(Y.dist(y, "b") - 2 + 1 for y in ("a", "c"))
    assert epsilon_prime(D, Y, "b") == brute == F(11, 10)


def test_epsilon_prime_detects_corrupt_map():
    with pytest.raises(NonPositiveEpsilon):
        epsilon_prime({1: ["a"], 3: ["b"]}, _pair("1/2"), "b")
    with pytest.raises(InvalidInput):
        epsilon_prime({1: ["a"]}, _pair("1/2"), "b")


def test_choose_epsilon_examples():
    D = {1: ["a"], 2: ["b"]}
    assert choose_epsilon(_pair("13/10"), D) == F(3, 100)
    assert choose_epsilon(_pair("13/10"), {1: ["a"]}) == F(1, 10)
    with pytest.raises(IntegerDistanceInY):
        choose_epsilon(_pair(2, free=False), D)


def test_assigned_distances_examples():
    D = {1: ["a"], 2: ["b"]}
    far = assign_distances(_pair("13/10"), D)
    assert far["b"] == F(197, 100)
    assert far["a"] == F(97, 100)
    near = assign_distances(_pair("1/2"), D, epsilon=F(3, 100))
    assert near["b"] == F(36, 25)


def test_chosen_epsilon_meets_both_bounds():
    for seed in range(50):
        rng = random.Random(seed)
        X, Y, cn_map, x0 = random_instance(rng)
        D = d_sets(X, cn_map, x0)
        eps = choose_epsilon(Y, D)
        for ys in D.values():
            for y in ys:
                e = epsilon_prime(D, Y, y)
                assert e == math.inf or eps < e / 5
        points = cn_map.range
        for i, a in enumerate(points):
            for b in points[i + 1:]:
                d = Y.dist(a, b)
                assert eps < (band(d) - d) / 5 and eps < (d - band(d) + 1) / 5


def test_triangles_singleton_and_mutation():
    assert verify_extension_triangles(_pair("1/2"), {"a": F(1, 3)}) == []
    Y = _pair("19/10")
    D = {1: ["a", "b"]}
    eps = choose_epsilon(Y, D)
    assert eps == F(1, 100)
    assert verify_extension_triangles(Y, assign_distances(Y, D)) == []
    assert verify_extension_triangles(Y, assign_distances(Y, D, epsilon=10 * eps)) != []


def test_random_extension_suite():
    for seed in range(200):
        _check_instance(seed)


@pytest.mark.slow
def test_full_extension_suite():
    for seed in range(1000):
        _check_instance(seed)

# =============================================================================
# EXTENSIONS AND BACK-AND-FORTH
# =============================================================================

def test_snap_mode_finds_mirror():
    X = random_space(4, random.Random(5))
    a, b, c, d = X.labels
    step = extend_map(X, X, CnMap(((a, a), (b, b), (c, c))), d, mode="snap")
    assert step.y0 == d and not step.created
    assert step.Y is X


def test_snap_mode_failure():
    X = RationalMetricSpace.from_pairs(["a", "x"], {("a", "x"): "1/2"})
    Y = RationalMetricSpace.from_pairs(["a'", "w"], {("a'", "w"): "5/2"})
    with pytest.raises(SnapFailure):
        extend_map(X, Y, CnMap((("a", "a'"),)), "x", mode="snap")
    grown = extend_map(X, Y, CnMap((("a", "a'"),)), "x")
    assert grown.created and len(grown.Y) == 3


def test_snap_mode_needs_half_epsilon_ball():
    X = RationalMetricSpace.from_pairs(["a", "x"], {("a", "x"): "3/2"})
    # w sits in band 2 but 4/5 away from the prescribed 19/10
    far = RationalMetricSpace.from_pairs(["a'", "w"], {("a'", "w"): "11/10"})
    with pytest.raises(SnapFailure):
        extend_map(X, far, CnMap((("a", "a'"),)), "x", mode="snap")
    near = RationalMetricSpace.from_pairs(["a'", "w"], {("a'", "w"): "47/25"})
    step = extend_map(X, near, CnMap((("a", "a'"),)), "x", mode="snap")
    assert step.y0 == "w" and step.sup_error < step.epsilon / 2


def test_back_side_extension():
    rng = random.Random(6)
    X, Y, cn_map, _ = random_instance(rng)
    fresh = [y for y in Y.labels if y not in cn_map.range]
    if not fresh:
        Y = katetov_extend(Y, katetov_complete(Y, {}, rng), "extra")
        fresh = ["extra"]
    step = extend_map(X, Y, cn_map, fresh[0], side="back")
    assert step.side == "back" and step.cn_map.image(step.y0) == fresh[0]
    assert step.Y == Y and len(step.X) == len(X) + 1
    assert cn_violations(step.X, step.Y, step.cn_map) == []


def test_back_and_forth_ten_rounds():
    for seed in range(20):
        rng = random.Random(seed)
        U1, U2 = random_space(6, rng, prefix="u"), random_space(8, rng, prefix="v")
        result = back_and_forth(U1, U2, rounds=10, seed=seed)
        assert result.verified and len(result.cn_map) == 10
        assert validate_metric(result.U1) == [] and validate_metric(result.U2) == []


def test_back_and_forth_on_one_space():
    U = random_space(5, random.Random(7))
    result = back_and_forth(U, U, rounds=10, seed=1)
    assert result.verified
    assert cn_violations(result.U1, result.U2, result.cn_map) == []


def test_back_and_forth_replays():
    U1, U2 = random_space(5, random.Random(8)), random_space(5, random.Random(9))
    assert back_and_forth(U1, U2, 6, seed=3).to_dict() == back_and_forth(U1, U2, 6, seed=3).to_dict()


def test_back_and_forth_needs_metric_inputs():
    with pytest.raises(InvalidInput):
        back_and_forth(_pair(2), _pair("1/2"), 2)

# =============================================================================
# RADO GRAPHS
# =============================================================================

def _edge(a, b):
    return frozenset((a, b))


def test_rado_isolated_and_adjacent_partner():
    X = RationalMetricSpace.from_pairs(["a", "x"], {("a", "x"): "1/2"})
    Y = RationalMetricSpace.from_matrix(["a'"], [["0"]])
    target = RationalGraph(Y)
    lonely = rado_extend(RationalGraph(X), target, CnMap((("a", "a'"),)), "x")
    assert not lonely.G2.adjacent(lonely.result.y0, "a'")
    linked = rado_extend(RationalGraph(X, frozenset({_edge("a", "x")})), target, CnMap((("a", "a'"),)), "x")
    assert linked.G2.adjacent(linked.result.y0, "a'")
    assert edge_violations(linked.G1, linked.G2, linked.result.cn_map) == []


def test_rado_snap_mode():
    # prescribed d(y, a') is 9/10 and eps/2 is 1/20
    X = RationalMetricSpace.from_pairs(["a", "x"], {("a", "x"): "1/3"})
    Y = RationalMetricSpace.from_pairs(["a'", "w"], {("a'", "w"): "22/25"})
    G1 = RationalGraph(X, frozenset({_edge("a", "x")}))
    cn_map = CnMap((("a", "a'"),))
    found = rado_extend(G1, RationalGraph(Y, frozenset({_edge("a'", "w")})), cn_map, "x", mode="snap")
    assert found.result.y0 == "w"
    with pytest.raises(SnapFailure):
        rado_extend(G1, RationalGraph(Y), cn_map, "x", mode="snap")


def test_rado_snap_mode_needs_half_epsilon_ball():
    X = RationalMetricSpace.from_pairs(["a", "x"], {("a", "x"): "3/2"})
    Y = RationalMetricSpace.from_pairs(["a'", "w"], {("a'", "w"): "11/10"})
    with pytest.raises(SnapFailure):
        rado_extend(RationalGraph(X), RationalGraph(Y), CnMap((("a", "a'"),)), "x", mode="snap")


def test_rado_rejects_edge_breaking_map():
    X = RationalMetricSpace.from_pairs(["a", "b", "x"], {("a", "b"): "1/2", ("a", "x"): "1/3", ("b", "x"): "1/4"})
    Y = RationalMetricSpace.from_pairs(["a'", "b'"], {("a'", "b'"): "1/2"})
    with pytest.raises(InvalidInput):
        rado_extend(RationalGraph(X, frozenset({_edge("a", "b")})), RationalGraph(Y),
                    CnMap((("a", "a'"), ("b", "b'"))), "x")


def test_rado_back_and_forth_preserves_edges():
    for seed in range(20):
        rng = random.Random(seed)
        G1 = random_rational_graph(random_space(8, rng, max_distance=2, prefix="u"), 0.5, rng)
        G2 = random_rational_graph(random_space(8, rng, max_distance=2, prefix="v"), 0.5, rng)
        cn_map, H1, H2, steps = rado_back_and_forth(G1, G2, rounds=10, seed=seed)
        assert len(steps) == 10
        assert edge_violations(H1, H2, cn_map) == []
        assert cn_violations(H1.space, H2.space, cn_map) == []


@pytest.mark.slow
def test_rado_snap_success_grows_with_target_size():
    def rate(size):
        wins = 0
        for seed in range(40):
            rng = random.Random(seed)
            G1 = random_rational_graph(random_space(4, rng, max_distance=2, prefix="u"), 0.5, rng)
            G2 = random_rational_graph(random_space(size, rng, max_distance=2, prefix="v"), 0.5, rng)
            try:
                rado_extend(G1, G2, CnMap((("u0", "v0"),)), "u1", mode="snap")
                wins += 1
            except SnapFailure:
                pass
        return wins / 40

    assert rate(30) >= rate(4)
