# backend/test_spaces.py - Test space models, distances and measures

import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from exceptions import DegenerateTriple, InvalidInput, MismatchedSpace, NotUniform
from models.spaces import SpaceDescriptor, SpaceKind
from services.geometry import (
    alpha_target,
    ball_measure,
    ball_volume_ratio,
    circular_order,
    circular_order_array,
    distance,
    lemma_offsets,
    pairwise_distances,
    sample_uniform,
    shift,
    reduce_residue,
)

SPACES = [
    SpaceDescriptor.circle(5.0),
    SpaceDescriptor.circle(2.5),
    SpaceDescriptor.sphere(2.0),
    SpaceDescriptor.torus(3.0, 4.5),
    SpaceDescriptor.box(2.0, 3.0),
]

# =============================================================================
# DISTANCE
# =============================================================================

def test_circle_distance_wraps(circle5):
    assert distance(circle5, [0.5], [4.8]) == pytest.approx(0.7)


@pytest.mark.parametrize("space", SPACES, ids=lambda s: s.describe())
def test_distance_identity(space):
    p = sample_uniform(space, np.random.default_rng(0), 1)[0]
    assert distance(space, p, p) == 0.0


def test_sphere_antipodal_distance():
    space = SpaceDescriptor.sphere(2.0)
    assert distance(space, [0, 0, 2.0], [0, 0, -2.0]) == pytest.approx(2 * math.pi)


def test_distance_rejects_foreign_points(circle5):
    with pytest.raises(MismatchedSpace):
        distance(circle5, [5.5], [1.0])
    with pytest.raises(MismatchedSpace):
        distance(circle5, [1.0, 2.0], [1.0])
    with pytest.raises(MismatchedSpace):
        distance(SpaceDescriptor.sphere(1.0), [0, 0, 3.0], [0, 0, 1.0])


@pytest.mark.parametrize("space", SPACES, ids=lambda s: s.describe())
def test_triangle_inequality(space):
    """10^4 seeded random triples per kind"""
    rng = np.random.default_rng(2024)
    P, Q, R = (sample_uniform(space, rng, 10_000) for _ in range(3))
    from services.geometry import paired_distances
    pq = paired_distances(space, P, Q)
    qr = paired_distances(space, Q, R)
    pr = paired_distances(space, P, R)
    assert np.all(pr <= pq + qr + 1e-12)
    assert np.allclose(pq, paired_distances(space, Q, P))


@hsettings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=0, max_value=4.999),
    st.floats(min_value=0, max_value=4.999),
    st.floats(min_value=0, max_value=4.999),
)
def test_circle_triangle_property(x, y, z):
    space = SpaceDescriptor.circle(5.0)
    assert distance(space, [x], [z]) <= distance(space, [x], [y]) + distance(space, [y], [z]) + 1e-12


def test_pairwise_matrix_symmetric():
    space = SpaceDescriptor.torus(2.0, 3.0)
    coords = sample_uniform(space, np.random.default_rng(3), 40)
    D = pairwise_distances(space, coords)
    assert np.allclose(D, D.T)
    assert np.all(np.diag(D) == 0)

# =============================================================================
# CIRCULAR ORDER, SHIFT, LEMMA
# =============================================================================

@pytest.mark.parametrize(
    "a, b, c, expected",
    [([1], [2], [3], True), ([2], [1], [3], False), ([4], [0.5], [2], True)],
)
def test_circular_order_examples(circle5, a, b, c, expected):
    assert circular_order(circle5, a, b, c) is expected


def test_circular_order_degenerate(circle5):
    with pytest.raises(DegenerateTriple):
        circular_order(circle5, [1], [1], [3])


def test_circular_order_needs_circle():
    with pytest.raises(MismatchedSpace):
        circular_order(SpaceDescriptor.sphere(1.0), [0, 0, 1], [0, 1, 0], [1, 0, 0])


def test_exactly_one_orientation(circle5):
    rng = np.random.default_rng(5)
    x, y, z = (rng.random(5000) * 5 for _ in range(3))
    forward = circular_order_array(x, y, z)
    backward = circular_order_array(x, z, y)
    assert np.all(forward ^ backward)


@pytest.mark.parametrize("a, z, expected", [(4.0, 2.0, 1.0), (1.0, 0.0, 1.0), (1.0, -3.0, 3.0)])
def test_shift_examples(circle5, a, z, expected):
    assert shift(circle5, [a], z)[0] == pytest.approx(expected)


def test_shift_round_trip(circle5):
    rng = np.random.default_rng(9)
    for a, w in zip(rng.random(200) * 5, rng.normal(0, 7, 200)):
        back = shift(circle5, shift(circle5, [a], w), -w)[0]
        assert min(abs(back - a), 5 - abs(back - a)) < 1e-9


def test_residue_never_reaches_length():
    assert reduce_residue(5.0, -1e-18) == 0.0
    assert reduce_residue(5.0, 5.0) == 0.0


def test_lemma_offsets_examples(circle5):
    d1, d2, e = lemma_offsets(circle5, [0], [1], [3])
    assert (d1, d2) == pytest.approx((1, 3)) and e[0] == pytest.approx(2)
    d1, d2, e = lemma_offsets(circle5, [4], [0], [1])
    assert (d1, d2) == pytest.approx((1, 2)) and e[0] == pytest.approx(0)


@pytest.mark.parametrize("L", [3.0, 5.0, 5.3, 7.25])
def test_circular_order_lemma(L):
    """C(a,b,c) iff 0<d1<d2 iff C(a,e,c) over 10^5 seeded triples, vectorized"""
    rng = np.random.default_rng(int(L * 100))
    a, b, c = (rng.random(100_000) * L for _ in range(3))
    keep = (a != b) & (b != c) & (a != c)
    a, b, c = a[keep], b[keep], c[keep]
    d1 = np.mod(b - a, L)
    d2 = np.mod(c - a, L)
    e = np.mod(a + (d2 - d1), L)
    order = circular_order_array(a, b, c)
    offsets = (0 < d1) & (d1 < d2)
    assert np.array_equal(order, offsets)
    # e can collide with a or c only when d1 == d2 or d1 == 0, excluded above
    assert np.array_equal(order, circular_order_array(a, e, c))


def test_circular_order_lemma_scalar_path():
    space = SpaceDescriptor.circle(5.3)
    rng = np.random.default_rng(17)
    for _ in range(2000):
        a, b, c = ([v] for v in rng.random(3) * 5.3)
        d1, d2, e = lemma_offsets(space, a, b, c)
        assert circular_order(space, a, b, c) == (0 < d1 < d2)
        if e[0] not in (a[0], c[0]):
            assert circular_order(space, a, b, c) == circular_order(space, a, e, c)


def test_shift_respects_order(circle5):
    rng = np.random.default_rng(23)
    x, y, z = (rng.random(20_000) * 5 for _ in range(3))
    w = rng.normal(0, 10, 20_000)
    before = circular_order_array(x, y, z)
    after = circular_order_array(np.mod(x + w, 5), np.mod(y + w, 5), np.mod(z + w, 5))
    # float rounding may reorder points closer than 1e-9
    close = (np.abs(x - y) < 1e-9) | (np.abs(y - z) < 1e-9) | (np.abs(x - z) < 1e-9)
    assert np.array_equal(before[~close], after[~close])

# =============================================================================
# MEASURES
# =============================================================================

def test_ball_measure_examples():
    assert ball_measure(SpaceDescriptor.circle(5.0), 1.0) == 2.0
    assert ball_measure(SpaceDescriptor.circle(3.0), 2.0) == 3.0
    assert ball_measure(SpaceDescriptor.sphere(1.0), 1.0) == pytest.approx(2 * math.pi * (1 - math.cos(1)))
    assert ball_measure(SpaceDescriptor.sphere(1.0), 1.0) == pytest.approx(2.8884, abs=1e-4)


def test_ball_measure_refuses_non_uniform():
    with pytest.raises(NotUniform):
        ball_measure(SpaceDescriptor.box(1.0, 1.0), 0.5)
    with pytest.raises(NotUniform):
        ball_volume_ratio(SpaceDescriptor.box(1.0))


def test_torus_ball_measure_regimes():
    space = SpaceDescriptor.torus(3.0, 4.0)
    assert ball_measure(space, 0.5) == pytest.approx(math.pi * 0.25)
    assert ball_measure(space, 10.0) == pytest.approx(12.0)
    # Monte Carlo check beyond the injectivity radius
    rng = np.random.default_rng(1)
    pts = rng.random((200_000, 2)) * [3.0, 4.0]
    d = np.hypot(np.minimum(pts[:, 0], 3 - pts[:, 0]), np.minimum(pts[:, 1], 4 - pts[:, 1]))
    assert ball_measure(space, 1.8) == pytest.approx(12.0 * np.mean(d < 1.8), abs=0.05)


@pytest.mark.parametrize(
    "space, expected",
    [
        (SpaceDescriptor.circle(5.0), 2.5),
        (SpaceDescriptor.circle(2.0), 1.0),
        (SpaceDescriptor.sphere(1.0), 2 / (1 - math.cos(1))),
    ],
)
def test_ball_volume_ratio(space, expected):
    assert ball_volume_ratio(space) == pytest.approx(expected)
    assert alpha_target(space) == pytest.approx(1 / expected)


def test_sphere_ratio_value():
    assert ball_volume_ratio(SpaceDescriptor.sphere(1.0)) == pytest.approx(4.3508, abs=1e-4)


@pytest.mark.parametrize("space", SPACES[:4], ids=lambda s: s.describe())
def test_ball_measure_monotone_and_continuous(space):
    radii = np.linspace(0.05, 4.0, 400)
    values = np.array([ball_measure(space, r) for r in radii])
    assert np.all(np.diff(values) >= -1e-12)
    for delta in (1e-3, 1e-5, 1e-7):
        jumps = [abs(ball_measure(space, r + delta) - ball_measure(space, r)) for r in radii]
        assert max(jumps) < 50 * delta


def test_ball_measure_rejects_bad_radius(circle5):
    for radius in (0.0, -1.0, float("nan")):
        with pytest.raises(InvalidInput):
            ball_measure(circle5, radius)

# =============================================================================
# DESCRIPTORS
# =============================================================================

def test_descriptor_round_trip():
    for space in SPACES:
        assert SpaceDescriptor.from_dict(space.to_dict()) == space
    assert SpaceDescriptor.circle(5.3).to_dict() == {"kind": "circle", "L": 5.3}


def test_descriptor_validation():
    with pytest.raises(MismatchedSpace):
        SpaceDescriptor.circle(0.0)
    with pytest.raises(MismatchedSpace):
        SpaceDescriptor.torus(1.0, -2.0)
    assert SpaceDescriptor.sphere(1.0).kind == SpaceKind.SPHERE
