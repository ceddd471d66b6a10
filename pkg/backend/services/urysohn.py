# backend/services/urysohn.py
"""
Back-and-forth between integer-distance-free rational metric spaces.

A CnMap preserves every C_n (n-1 < d < n). A new point x0 is matched by
prescribing its partner's distances to the map's range:

    D_n      = {f(x') : n-1 < d(x0, x') < n}
    eps(y')  = min{d(y'', y') - (n-k) + 1 : y'' in D_k, k < n}   (min of nothing = inf)
    d(y, y') = n-1 + eps(y') - 2*eps   if eps(y') < 1
               n - eps                 otherwise

Exact mode realizes y by a Katetov extension of the target space; snap mode
looks for an existing point realizing the same bands. All arithmetic is
fractions.Fraction.
"""

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

from exceptions import (
    ApproximationFailure,
    IntegerDistanceInY,
    InvalidInput,
    NonPositiveEpsilon,
    NotKatetov,
    RejectionBudgetExceeded,
    SnapFailure,
)
from models.metric import (
    CnMap,
    ExtensionResult,
    KatetovFunction,
    Label,
    MetricViolation,
    RationalGraph,
    RationalMetricSpace,
    band,
    format_fraction,
    is_integer,
)

logger = logging.getLogger(__name__)

INFINITY = math.inf
EPSILON_SCALE = Fraction(1, 10)
FALLBACK_EPSILON = Fraction(1, 10)
MODES = ("exact", "snap")
SIDES = ("forth", "back")

Dsets = Dict[int, List[Label]]
EpsilonPrime = Union[Fraction, float]

# =============================================================================
# METRIC CHECKS
# =============================================================================

def validate_metric(space: RationalMetricSpace) -> List[MetricViolation]:
    """Every failed axiom, exactly; an empty list means a valid metric."""
    out: List[MetricViolation] = []
    labels = space.labels
    d = space.d
    n = len(labels)
    for i in range(n):
        if d[i][i] != 0:
            out.append(MetricViolation("diagonal", (labels[i],), f"d={d[i][i]}"))
        for j in range(i + 1, n):
            if d[i][j] != d[j][i]:
                out.append(MetricViolation("symmetry", (labels[i], labels[j])))
            if d[i][j] <= 0:
                out.append(MetricViolation("positivity", (labels[i], labels[j]), f"d={d[i][j]}"))
            elif space.integer_distance_free and is_integer(d[i][j]):
                out.append(MetricViolation("integer_distance", (labels[i], labels[j]), f"d={d[i][j]}"))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if len({i, j, k}) == 3 and j < k and d[j][k] > d[j][i] + d[i][k]:
                    out.append(MetricViolation(
                        "triangle", (labels[j], labels[i], labels[k]),
                        f"{d[j][k]} > {d[j][i]} + {d[i][k]}",
                    ))
    return out


def katetov_violation(space: RationalMetricSpace, f: KatetovFunction) -> Optional[Tuple[Label, Label]]:
    """First pair breaking |f(x)-f(y)| <= d(x,y) <= f(x)+f(y), or a non-positive value."""
    for x in space.labels:
        if x not in f:
            return (x, x)
        if f[x] <= 0:
            return (x, x)
    for i, x in enumerate(space.labels):
        for y in space.labels[i + 1:]:
            dxy = space.dist(x, y)
            if abs(f[x] - f[y]) > dxy or dxy > f[x] + f[y]:
                return (x, y)
    return None


def katetov_extend(space: RationalMetricSpace, f: KatetovFunction, new_label: Label) -> RationalMetricSpace:
    if new_label in space:
        raise InvalidInput(f"label '{new_label}' already in the space")
    pair = katetov_violation(space, f)
    if pair is not None:
        raise NotKatetov(f"distances to '{new_label}' break the Katetov condition at {pair}", pair)
    grown = space.with_point(new_label, {x: f[x] for x in space.labels})
    if space.integer_distance_free:
        for x in space.labels:
            if is_integer(f[x]):
                raise IntegerDistanceInY(f"d({new_label}, {x}) = {f[x]} is an integer", (new_label, x))
    return grown


def _pick(lo: Fraction, hi: EpsilonPrime, rng: Optional[random.Random]) -> Fraction:
    """A non-integer value in [lo, hi] (hi may be infinite), strictly positive."""
    if hi == INFINITY:
        hi = lo + 2
    hi = Fraction(hi)
    if lo > hi:
        raise NotKatetov(f"empty amalgamation interval [{lo}, {hi}]")
    if rng is not None and lo < hi:
        for _ in range(64):
            value = lo + (hi - lo) * Fraction(rng.randint(1, 99), 100)
            if not is_integer(value):
                return value
    if not is_integer(hi):
        return hi
    step = min((hi - lo) / 2, Fraction(1, 2))
    if step == 0:
        raise IntegerDistanceInY(f"amalgamation forces the integer distance {hi}")
    return hi - step


def katetov_complete(space: RationalMetricSpace, assignment: Dict[Label, Fraction],
                     rng: Optional[random.Random] = None) -> KatetovFunction:
    """
    Extend a Katetov assignment on part of the space to every point, one point at
    a time inside the amalgamation interval [max|a(v)-d(v,w)|, min a(v)+d(v,w)],
    keeping distances non-integer. Without rng the upper end is preferred.
    """
    full = dict(assignment)
    for w in space.labels:
        if w in full:
            continue
        lo = max((abs(a - space.dist(v, w)) for v, a in full.items()), default=Fraction(0))
        hi = min((a + space.dist(v, w) for v, a in full.items()), default=INFINITY)
        full[w] = _pick(lo, hi, rng)
    return full

# =============================================================================
# C_n MAPS
# =============================================================================

def cn_violations(X: RationalMetricSpace, Y: RationalMetricSpace, cn_map: CnMap) -> List[MetricViolation]:
    out = []
    pairs = cn_map.pairs
    for i, (xi, yi) in enumerate(pairs):
        for xj, yj in pairs[i + 1:]:
            dx, dy = X.dist(xi, xj), Y.dist(yi, yj)
            if is_integer(dx) or is_integer(dy) or band(dx) != band(dy):
                out.append(MetricViolation("band", (xi, xj), f"d_X={dx}, d_Y={dy}"))
    return out


def preserves_cn(X: RationalMetricSpace, Y: RationalMetricSpace, cn_map: CnMap) -> bool:
    return not cn_violations(X, Y, cn_map)


def d_sets(X: RationalMetricSpace, cn_map: CnMap, x0: Label) -> Dsets:
    """Range points grouped by the band of their preimage's distance to x0."""
    out: Dsets = {}
    for x, y in cn_map.pairs:
        dx = X.dist(x0, x)
        if is_integer(dx):
            raise IntegerDistanceInY(f"d({x0}, {x}) = {dx} is an integer", (x0, x))
        out.setdefault(band(dx), []).append(y)
    return out


def _band_of(D: Dsets) -> Dict[Label, int]:
    return {y: n for n, ys in D.items() for y in ys}


def epsilon_prime(D: Dsets, Y: RationalMetricSpace, y_prime: Label) -> EpsilonPrime:
    bands = [n for n, ys in D.items() if y_prime in ys]
    if len(bands) != 1:
        raise InvalidInput(f"'{y_prime}' must lie in exactly one D_n, found {len(bands)}")
    n = bands[0]
    value: EpsilonPrime = INFINITY
    for k, ys in D.items():
        if k >= n:
            continue
        for y2 in ys:
            value = min(value, Y.dist(y2, y_prime) - (n - k) + 1)
    if value <= 0:
        raise NonPositiveEpsilon(f"eps({y_prime}) = {value}; the map does not preserve C_n")
    return value


def choose_epsilon(Y: RationalMetricSpace, D: Dsets) -> Fraction:
    """One tenth of the least of the eps' values and the band gaps of range pairs; 1/10 when both are vacuous."""
    points = [y for ys in D.values() for y in ys]
    bounds: List[Fraction] = []
    for y in points:
        e = epsilon_prime(D, Y, y)
        if e != INFINITY:
            bounds.append(e)
    for i, a in enumerate(points):
        for b in points[i + 1:]:
            dab = Y.dist(a, b)
            if is_integer(dab):
                raise IntegerDistanceInY(f"d({a}, {b}) = {dab} is an integer", (a, b))
            m = band(dab)
            bounds.extend((m - dab, dab - (m - 1)))
    if not bounds:
        return FALLBACK_EPSILON
    return EPSILON_SCALE * min(bounds)


def assign_distances(Y: RationalMetricSpace, D: Dsets, epsilon: Optional[Fraction] = None) -> Dict[Label, Fraction]:
    eps = choose_epsilon(Y, D) if epsilon is None else Fraction(epsilon)
    if eps <= 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {eps}")
    assignment = {}
    for n, ys in D.items():
        for y in ys:
            e = epsilon_prime(D, Y, y)
            assignment[y] = n - 1 + e - 2 * eps if e < 1 else n - eps
    return assignment


def extension_distances(X: RationalMetricSpace, Y: RationalMetricSpace, cn_map: CnMap, x0: Label,
                        epsilon: Optional[Fraction] = None) -> Dict[Label, Fraction]:
    if x0 in cn_map.domain:
        raise InvalidInput(f"'{x0}' is already mapped")
    X.index(x0)
    D = d_sets(X, cn_map, x0)
    assignment = assign_distances(Y, D, epsilon)
    bands = _band_of(D)
    for y, value in assignment.items():
        if not bands[y] - 1 < value < bands[y]:
            raise ApproximationFailure(f"d(y, {y}) = {value} left the band ({bands[y] - 1}, {bands[y]})")
    return assignment


def verify_extension_triangles(Y: RationalMetricSpace, assignment: Dict[Label, Fraction]) -> List[MetricViolation]:
    """Triangles y-y1-y2 for the prescribed point y over the assigned part of Y."""
    out = []
    points = list(assignment)
    for i, a in enumerate(points):
        for b in points[i + 1:]:
            da, db, dab = assignment[a], assignment[b], Y.dist(a, b)
            if dab > da + db or da > db + dab or db > da + dab:
                out.append(MetricViolation("triangle", ("y", a, b), f"d(y,{a})={da}, d(y,{b})={db}, d={dab}"))
    return out

# =============================================================================
# EXTENSION STEPS
# =============================================================================

def _sup_error(Y: RationalMetricSpace, w: Label, assignment: Dict[Label, Fraction]) -> Fraction:
    return max((abs(Y.dist(w, y) - a) for y, a in assignment.items()), default=Fraction(0))


def _realizes_bands(Y: RationalMetricSpace, w: Label, bands: Dict[Label, int]) -> bool:
    for y, n in bands.items():
        dw = Y.dist(w, y)
        if is_integer(dw) or band(dw) != n:
            return False
    return True


def _is_mirror(X: RationalMetricSpace, Y: RationalMetricSpace, cn_map: CnMap, x0: Label, w: Label) -> bool:
    return all(Y.dist(w, y) == X.dist(x0, x) for x, y in cn_map.pairs)


def _snap_candidates(X: RationalMetricSpace, Y: RationalMetricSpace, cn_map: CnMap, x0: Label,
                     assignment: Dict[Label, Fraction], eps: Fraction) -> List[Label]:
    """
    Free points of Y realizing the bands of x0 that lie within eps/2 of the
    prescribed distances, or copy the distances of x0 exactly.
    """
    bands = _band_of(d_sets(X, cn_map, x0))
    used = set(cn_map.range)
    return [
        w for w in Y.labels
        if w not in used and _realizes_bands(Y, w, bands)
        and (_sup_error(Y, w, assignment) < eps / 2 or _is_mirror(X, Y, cn_map, x0, w))
    ]


def _check_mode_side(mode: str, side: str) -> None:
    if mode not in MODES:
        raise InvalidInput(f"mode must be one of {MODES}, got {mode!r}")
    if side not in SIDES:
        raise InvalidInput(f"side must be one of {SIDES}, got {side!r}")


def _swap(result: ExtensionResult) -> ExtensionResult:
    result.X, result.Y = result.Y, result.X
    result.cn_map = result.cn_map.inverse()
    result.side = "back"
    return result


def extend_map(X: RationalMetricSpace, Y: RationalMetricSpace, cn_map: CnMap, x0: Label,
               side: str = "forth", mode: str = "exact", rng: Optional[random.Random] = None) -> ExtensionResult:
    """
    Match x0 (a point of X for "forth", of Y for "back") so the map keeps every C_n.
    Exact mode appends the partner to the other space; snap mode picks the
    existing point nearest the prescribed distances, provided it is within eps/2
    of them (or mirrors x0 exactly), and raises SnapFailure otherwise.
    """
    _check_mode_side(mode, side)
    if side == "back":
        return _swap(extend_map(Y, X, cn_map.inverse(), x0, "forth", mode, rng))

    assignment = extension_distances(X, Y, cn_map, x0)
    eps = choose_epsilon(Y, d_sets(X, cn_map, x0))
    broken = verify_extension_triangles(Y, assignment)
    if broken:
        raise NotKatetov(f"prescribed distances break {len(broken)} triangles", broken[0].labels[1:])

    if mode == "exact":
        label = Y.fresh_label(f"{x0}'")
        Y2 = katetov_extend(Y, katetov_complete(Y, assignment, rng), label)
        y0, created, sup = label, True, Fraction(0)
    else:
        admissible = _snap_candidates(X, Y, cn_map, x0, assignment, eps)
        if not admissible:
            raise SnapFailure(f"no point of the target space lies within {eps / 2} of the distances of '{x0}'")
        y0 = min(admissible, key=lambda w: _sup_error(Y, w, assignment))
        Y2, created, sup = Y, False, _sup_error(Y, y0, assignment)

    extended = cn_map.extended(x0, y0)
    bad = cn_violations(X, Y2, extended)
    if bad:
        raise ApproximationFailure(f"extended map breaks C_n at {bad[0].labels}")
    logger.debug(f"Extended map by {x0} -> {y0} ({mode}, eps={eps})")
    return ExtensionResult(extended, X, Y2, x0, y0, side, created, eps, assignment, sup)


@dataclass
class BackAndForth:
    cn_map: CnMap
    U1: RationalMetricSpace
    U2: RationalMetricSpace
    steps: List[Dict[str, Any]] = field(default_factory=list)
    verified: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "map": self.cn_map.to_dict(),
            "U1": self.U1.to_dict(),
            "U2": self.U2.to_dict(),
            "steps": self.steps,
            "verified": self.verified,
        }


def _fresh_point(space: RationalMetricSpace, used: Sequence[Label], rng: random.Random,
                 mode: str, stem: str) -> Tuple[RationalMetricSpace, Label]:
    free = [x for x in space.labels if x not in set(used)]
    if free:
        return space, rng.choice(free)
    if mode != "exact":
        raise SnapFailure(f"every point of the space is already mapped ({len(space)} points)")
    label = space.fresh_label(stem)
    return katetov_extend(space, katetov_complete(space, {}, rng), label), label


def back_and_forth(U1: RationalMetricSpace, U2: RationalMetricSpace, rounds: int, seed: Any = 0,
                   mode: str = "exact", cn_map: Optional[CnMap] = None) -> BackAndForth:
    """Alternate forth/back extensions; fresh points come from random.Random(seed)."""
    if mode not in MODES:
        raise InvalidInput(f"mode must be one of {MODES}, got {mode!r}")
    for name, U in (("U1", U1), ("U2", U2)):
        if validate_metric(U):
            raise InvalidInput(f"{name} is not an integer-distance-free metric space")
    rng = random.Random(seed)
    state = BackAndForth(cn_map or CnMap(), U1, U2)
    for r in range(rounds):
        side = SIDES[r % 2]
        if side == "forth":
            state.U1, x0 = _fresh_point(state.U1, state.cn_map.domain, rng, mode, "u")
        else:
            state.U2, x0 = _fresh_point(state.U2, state.cn_map.range, rng, mode, "v")
        step = extend_map(state.U1, state.U2, state.cn_map, x0, side, mode, rng)
        state.cn_map, state.U1, state.U2 = step.cn_map, step.X, step.Y
        state.steps.append({"round": r + 1, **step.to_dict()})
    state.verified = preserves_cn(state.U1, state.U2, state.cn_map)
    logger.info(f"Back-and-forth: {rounds} rounds, map of size {len(state.cn_map)}, verified={state.verified}")
    return state

# =============================================================================
# GEOMETRIC RADO GRAPHS
# =============================================================================

@dataclass
class RadoExtension:
    result: ExtensionResult
    G1: RationalGraph
    G2: RationalGraph

    def to_dict(self) -> Dict[str, Any]:
        return {**self.result.to_dict(), "edges_added": sorted(
            sorted(e) for e in self.G2.edges if self.result.y0 in e
        ) if self.result.created else None}


def edge_violations(G1: RationalGraph, G2: RationalGraph, cn_map: CnMap) -> List[Tuple[Label, Label]]:
    pairs = cn_map.pairs
    return [(xi, xj) for i, (xi, yi) in enumerate(pairs) for xj, yj in pairs[i + 1:]
            if G1.adjacent(xi, xj) != G2.adjacent(yi, yj)]


def rado_extend(G1: RationalGraph, G2: RationalGraph, cn_map: CnMap, x0: Label, side: str = "forth",
                mode: str = "exact", rng: Optional[random.Random] = None) -> RadoExtension:
    """
    Extend a map preserving E and every C_n. The partner of x0 is adjacent among
    mapped points to exactly Q = f(N(x0)); in exact mode its edges to unmapped
    points within the unit threshold are p-coins.
    """
    _check_mode_side(mode, side)
    if side == "back":
        ext = rado_extend(G2, G1, cn_map.inverse(), x0, "forth", mode, rng)
        return RadoExtension(_swap(ext.result), ext.G2, ext.G1)
    if edge_violations(G1, G2, cn_map) or not preserves_cn(G1.space, G2.space, cn_map):
        raise InvalidInput("map must preserve the edge relation and every C_n")
    rng = rng or random.Random(0)
    X, Y = G1.space, G2.space
    Q = {cn_map.image(x) for x in cn_map.domain if G1.adjacent(x0, x)}

    if mode == "exact":
        step = extend_map(X, Y, cn_map, x0, "forth", "exact", rng)
        y0, grown = step.y0, step.Y
        mapped = set(cn_map.range)
        new_edges = {frozenset((y0, q)) for q in Q}
        for w in Y.labels:
            if w not in mapped and grown.dist(y0, w) < 1 and rng.random() < G2.p:
                new_edges.add(frozenset((y0, w)))
        return RadoExtension(step, G1, RationalGraph(grown, G2.edges | new_edges, G2.p))

    assignment = extension_distances(X, Y, cn_map, x0)
    eps = choose_epsilon(Y, d_sets(X, cn_map, x0))
    admissible = [
        w for w in _snap_candidates(X, Y, cn_map, x0, assignment, eps)
        if all(G2.adjacent(w, y) == (y in Q) for y in cn_map.range)
    ]
    if not admissible:
        raise SnapFailure(f"no vertex within {eps / 2} of the distances of '{x0}' has its adjacency")
    y0 = min(admissible, key=lambda w: _sup_error(Y, w, assignment))
    extended = cn_map.extended(x0, y0)
    if edge_violations(G1, G2, extended) or cn_violations(X, Y, extended):
        raise ApproximationFailure(f"snapped partner '{y0}' breaks the map")
    result = ExtensionResult(extended, X, Y, x0, y0, "forth", False, eps, assignment, _sup_error(Y, y0, assignment))
    return RadoExtension(result, G1, G2)


def rado_back_and_forth(G1: RationalGraph, G2: RationalGraph, rounds: int, seed: Any = 0,
                        mode: str = "exact") -> Tuple[CnMap, RationalGraph, RationalGraph, List[Dict[str, Any]]]:
    rng = random.Random(seed)
    cn_map = CnMap()
    steps = []
    for r in range(rounds):
        side = SIDES[r % 2]
        G = G1 if side == "forth" else G2
        used = cn_map.domain if side == "forth" else cn_map.range
        free = [x for x in G.space.labels if x not in set(used)]
        if not free:
            break
        ext = rado_extend(G1, G2, cn_map, rng.choice(free), side, mode, rng)
        cn_map, G1, G2 = ext.result.cn_map, ext.G1, ext.G2
        steps.append({"round": r + 1, **ext.to_dict()})
    return cn_map, G1, G2, steps

# =============================================================================
# RANDOM INSTANCES
# =============================================================================

DENOMINATORS = (7, 11, 13, 17, 19, 23)


def random_space(n: int, rng: random.Random, max_distance: int = 5, prefix: str = "x",
                 max_tries: int = 200) -> RationalMetricSpace:
    """
    Non-integer rational weights on the complete graph, closed under shortest
    paths; closures that land on an integer are rejected.
    """
    labels = [f"{prefix}{i}" for i in range(n)]
    for attempt in range(max_tries):
        G = nx.Graph()
        G.add_nodes_from(labels)
        for i, a in enumerate(labels):
            for b in labels[i + 1:]:
                den = rng.choice(DENOMINATORS)
                w = Fraction(rng.randint(1, max_distance * den - 1), den)
                while is_integer(w):
                    w = Fraction(rng.randint(1, max_distance * den - 1), den)
                G.add_edge(a, b, weight=w)
        closure = nx.floyd_warshall(G)
        rows = [[Fraction(closure[a][b]) for b in labels] for a in labels]
        space = RationalMetricSpace.from_matrix(labels, rows)
        if not validate_metric(space):
            return space
    raise RejectionBudgetExceeded(f"no integer-distance-free {n}-point space in {max_tries} tries", 0, max_tries)


def _band_preserving_copy(X: RationalMetricSpace, domain: Sequence[Label], rng: random.Random,
                          tries: int = 20) -> Tuple[RationalMetricSpace, CnMap]:
    labels = [f"y{i}" for i in range(len(domain))]
    base = X.restrict(domain)
    for _ in range(tries):
        rows = [list(row) for row in base.d]
        for i in range(len(domain)):
            for j in range(i + 1, len(domain)):
                d = rows[i][j]
                n = band(d)
                jitter = Fraction(rng.randint(-4, 4), 10 * rng.choice(DENOMINATORS))
                moved = min(max(d + jitter, n - 1 + Fraction(1, 100)), n - Fraction(1, 100))
                rows[i][j] = rows[j][i] = moved
        Y = RationalMetricSpace.from_matrix(labels, rows)
        if not validate_metric(Y):
            return Y, CnMap(tuple(zip(domain, labels)))
    return RationalMetricSpace(tuple(labels), base.d), CnMap(tuple(zip(domain, labels)))


def random_instance(rng: random.Random, max_points: int = 10, extra: int = 3
                    ) -> Tuple[RationalMetricSpace, RationalMetricSpace, CnMap, Label]:
    """(X, Y, C_n map, fresh x0 in X): X random, Y a band-preserving copy of part of X plus random points."""
    X = random_space(rng.randint(2, max_points), rng)
    x0 = rng.choice(X.labels)
    rest = [x for x in X.labels if x != x0]
    domain = rng.sample(rest, rng.randint(1, len(rest)))
    Y, cn_map = _band_preserving_copy(X, domain, rng)
    for k in range(rng.randint(0, extra)):
        Y = katetov_extend(Y, katetov_complete(Y, {}, rng), Y.fresh_label(f"z{k}"))
    return X, Y, cn_map, x0


def random_rational_graph(space: RationalMetricSpace, p: float, rng: random.Random) -> RationalGraph:
    edges = set()
    for i, a in enumerate(space.labels):
        for b in space.labels[i + 1:]:
            if space.dist(a, b) < 1 and rng.random() < p:
                edges.add(frozenset((a, b)))
    return RationalGraph(space, frozenset(edges), p)


def describe_assignment(assignment: Dict[Label, Fraction]) -> Dict[Label, str]:
    return {y: format_fraction(v) for y, v in assignment.items()}
