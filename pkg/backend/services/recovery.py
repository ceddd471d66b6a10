# backend/services/recovery.py
"""
Recovery of metric structure from pure adjacency on circle graphs.

Pipeline: adjacency -> unit-ball relation B -> hop intervals A[a,b] -> orienting
loop -> circular order C -> F-intervals F[a+n, a+n+1) -> translates f_z and the
shifted relations C[z,t,k].

Quantifiers range over the sample. Interval comparisons allow a slack of
ceil(band * rho) vertices, rho being the sample density per unit length, so a
band of 0 gives the literal formulas.
"""

import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from exceptions import (
    ApproximationFailure,
    DegenerateTriple,
    IndexOutOfRange,
    InvalidInput,
    LoopNotFound,
    MismatchedSpace,
    NotBAdjacent,
    NotFound,
)
from models.graph import GeoGraph
from models.spaces import SpaceKind
from services.geometry import SpatialIndex, circular_order_array, pairwise_distances, reduce_residue

logger = logging.getLogger(__name__)

LOOP_MODES = ("ground_truth", "adjacency_search")

# =============================================================================
# UNIT-BALL RELATION
# =============================================================================

@dataclass(eq=False)
class RecoveredB:
    """Symmetric irreflexive B relation as read-only bitset rows, plus interval caches"""
    matrix: np.ndarray
    source: str = "adjacency"
    _intervals: "OrderedDict[Tuple[int, int], np.ndarray]" = field(default_factory=OrderedDict, init=False, repr=False)
    _frames: Dict[tuple, "LoopFrame"] = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise MismatchedSpace(f"B must be square, got shape {m.shape}")
        if np.any(np.diag(m)):
            raise MismatchedSpace("B must be irreflexive")
        if not np.array_equal(m, m.T):
            raise MismatchedSpace("B must be symmetric")
        m.setflags(write=False)
        self.matrix = m
        reflexive = m | np.eye(len(m), dtype=bool)
        reflexive.setflags(write=False)
        self._reflexive = reflexive
        self._outside = (~reflexive).astype(np.float32)

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def reflexive(self) -> np.ndarray:
        """B or equality"""
        return self._reflexive

    def adjacent(self, a: int, b: int) -> bool:
        return bool(self.matrix[a, b])

    def check_vertex(self, v: int) -> int:
        if not 0 <= int(v) < self.n:
            raise IndexOutOfRange(f"vertex {v} outside 0..{self.n - 1}")
        return int(v)

    def density(self) -> float:
        """Vertices per unit length, from the mean unit-ball size"""
        if self.n == 0:
            return 0.0
        return float(self.matrix.sum(axis=1).mean()) / 2.0

    def slack(self, band: Optional[float] = None) -> int:
        band = settings.TOLERANCE_BAND if band is None else band
        return int(math.ceil(band * self.density()))

    def summary(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "source": self.source,
            "pairs": int(self.matrix.sum() // 2),
            "density": self.density(),
        }


def recover_B(graph: GeoGraph) -> RecoveredB:
    """
    B(v,x) iff x in N_2(v) and every E-neighbour of x lies in N_2(v), in both
    directions, with the diagonal dropped.
    """
    A = graph.adjacency.astype(np.float32)
    N2 = graph.adjacency | ((A @ A) > 0)
    escapes = (~N2).astype(np.float32) @ A  # neighbours of x outside N_2(v)
    directed = N2 & (escapes == 0)
    B = directed & directed.T
    np.fill_diagonal(B, False)
    recovered = RecoveredB(B, source="adjacency")
    logger.info(f"Recovered B on {graph.n} vertices: {recovered.summary()['pairs']} pairs")
    return recovered


def true_B(graph: GeoGraph) -> RecoveredB:
    """B read off the coordinates (d < 1)."""
    if not graph.has_coords:
        raise MismatchedSpace("ground-truth B needs coordinates")
    B = pairwise_distances(graph.space, graph.coords) < 1.0
    np.fill_diagonal(B, False)
    return RecoveredB(B, source="coordinates")

# =============================================================================
# INTERVALS
# =============================================================================

def _strict_interval(B: RecoveredB, a: int, b: int) -> np.ndarray:
    common = B.matrix[:, a] & B.matrix[:, b]
    return ~((~B.matrix)[:, common].any(axis=1))


def interval_row(B: RecoveredB, a: int, b: int) -> np.ndarray:
    """Bitset of A[a,b] over the reflexive closure of B, LRU-cached per relation."""
    key = (a, b) if a <= b else (b, a)
    with B._lock:
        row = B._intervals.get(key)
        if row is not None:
            B._intervals.move_to_end(key)
            return row
    if not B.matrix[a, b]:
        raise NotBAdjacent(a, b)
    Br = B.reflexive
    common = Br[:, a] & Br[:, b]
    row = ~((~Br)[:, common].any(axis=1))
    row.setflags(write=False)
    with B._lock:
        row = B._intervals.setdefault(key, row)
        while len(B._intervals) > settings.INTERVAL_CACHE_SIZE:
            B._intervals.popitem(last=False)
    return row


def recover_interval(B: RecoveredB, a: int, b: int, reflexive: bool = True) -> FrozenSet[int]:
    """
    {x : forall v (B(v,a) & B(v,b) -> B(x,v))}. With reflexive=True, B is read as
    B-or-equal, which is the closed-ball reading of the unit threshold on samples.
    """
    a, b = B.check_vertex(a), B.check_vertex(b)
    if not B.adjacent(a, b):
        raise NotBAdjacent(a, b)
    row = interval_row(B, a, b) if reflexive else _strict_interval(B, a, b)
    return frozenset(int(x) for x in np.flatnonzero(row))


def interval_sizes(B: RecoveredB, a: int, candidates: np.ndarray) -> np.ndarray:
    """|A[a,b]| for every candidate b at once."""
    candidates = np.asarray(candidates, dtype=int)
    if len(candidates) == 0:
        return np.zeros(0, dtype=int)
    Br = B.reflexive
    common = (Br[a][None, :] & Br[candidates]).astype(np.float32)
    violations = common @ B._outside
    return (violations == 0).sum(axis=1)


def is_uni_directional(B: RecoveredB, p: int, q: int, r: int, slack: int = 0) -> bool:
    """Step p -> q -> r: B-adjacent steps whose intervals meet only in q (up to slack)."""
    if p == q or q == r or not B.adjacent(p, q) or not B.adjacent(q, r):
        return False
    overlap = interval_row(B, p, q) & interval_row(B, q, r)
    return bool(overlap[q]) and int(np.count_nonzero(overlap)) <= 1 + slack

# =============================================================================
# ORIENTING LOOPS
# =============================================================================

@dataclass(frozen=True)
class OrientingLoop:
    """a_0, ..., a_{n_L} with a_{n_L} = a_0"""
    vertices: Tuple[int, ...]

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        if len(verts) < 4 or verts[0] != verts[-1]:
            raise InvalidInput("an orienting loop needs at least three steps and must close on a_0")
        if len(set(verts[:-1])) != len(verts) - 1:
            raise InvalidInput("orienting loop repeats a vertex")
        object.__setattr__(self, "vertices", verts)

    @property
    def n_L(self) -> int:
        return len(self.vertices) - 1

    @property
    def cycle(self) -> Tuple[int, ...]:
        return self.vertices[:-1]

    def step(self, m: int) -> Tuple[int, int]:
        m %= self.n_L
        return self.vertices[m], self.vertices[m + 1]

    def to_dict(self) -> Dict[str, Any]:
        return {"vertices": list(self.vertices), "n_L": self.n_L}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OrientingLoop":
        return cls(tuple(data["vertices"]))


def loop_arcs(B: RecoveredB, loop: OrientingLoop) -> np.ndarray:
    return np.vstack([interval_row(B, *loop.step(m)) for m in range(loop.n_L)])


def partition_violations(B: RecoveredB, loop: OrientingLoop) -> int:
    """Non-loop vertices not covered exactly once by the arc interiors."""
    for m in range(loop.n_L):
        a, b = loop.step(m)
        if not B.adjacent(a, b):
            raise NotBAdjacent(a, b)
    interiors = loop_arcs(B, loop).copy()
    for m in range(loop.n_L):
        a, b = loop.step(m)
        interiors[m, [a, b]] = False
    counts = interiors.sum(axis=0)
    rest = np.ones(B.n, dtype=bool)
    rest[list(loop.cycle)] = False
    return int(np.count_nonzero(rest & (counts != 1)))


def _ground_truth_loop(graph: GeoGraph) -> OrientingLoop:
    if not graph.has_coords or graph.space.kind != SpaceKind.CIRCLE:
        raise MismatchedSpace("ground-truth orienting loops need circle coordinates")
    L = graph.space.L
    n_L = int(math.floor(L)) + 1
    step = L / n_L
    index = SpatialIndex(graph.space, graph.coords)
    x = graph.coords[:, 0]
    for attempt in range(16):
        theta0 = float(x[0]) + attempt * step / 16.0
        targets = np.array([[reduce_residue(L, theta0 + i * step)] for i in range(n_L)])
        _, snapped = index.nearest(targets)
        verts = [int(v) for v in snapped]
        if len(set(verts)) != n_L:
            continue
        offsets = np.array([reduce_residue(L, x[verts[(i + 1) % n_L]] - x[verts[i]]) for i in range(n_L)])
        # one positive revolution in steps shorter than 1
        if np.all((offsets > 0) & (offsets < 1.0)) and abs(offsets.sum() - L) < 1e-9:
            loop = OrientingLoop(tuple(verts + [verts[0]]))
            logger.info(f"Ground-truth orienting loop: n_L={n_L}, max step {offsets.max():.4f}")
            return loop
        logger.debug(f"Snapped loop attempt {attempt} rejected")
    raise LoopNotFound(f"no snapped loop of {n_L} steps on {graph.space.describe()}")


class _LoopSearch:
    """Greedy maximal-advance DFS with backtracking under an expansion budget"""

    def __init__(self, B: RecoveredB, slack: int, budget: int, max_len: int):
        self.B = B
        self.slack = slack
        self.budget = budget
        self.max_len = max_len
        self.expansions = 0

    def run(self, start: int) -> Optional[OrientingLoop]:
        covered = np.zeros(self.B.n, dtype=bool)
        return self._extend([start], covered)

    def _closes(self, path: List[int]) -> Optional[OrientingLoop]:
        start, last = path[0], path[-1]
        if len(path) < 3 or not self.B.adjacent(last, start):
            return None
        if not is_uni_directional(self.B, path[-2], last, start, self.slack):
            return None
        if not is_uni_directional(self.B, last, start, path[1], self.slack):
            return None
        loop = OrientingLoop(tuple(path + [start]))
        bad = partition_violations(self.B, loop)
        if bad > 2 * self.slack * loop.n_L:
            logger.debug(f"Closing loop of {loop.n_L} steps rejected: {bad} partition violations")
            return None
        return loop

    def _extend(self, path: List[int], covered: np.ndarray) -> Optional[OrientingLoop]:
        last = path[-1]
        candidates = np.flatnonzero(self.B.matrix[last] & ~covered)
        if len(candidates) == 0:
            return None
        sizes = interval_sizes(self.B, last, candidates)
        for b in candidates[np.argsort(-sizes, kind="stable")]:
            b = int(b)
            self.expansions += 1
            if self.expansions > self.budget:
                raise LoopNotFound(f"loop search budget of {self.budget} expansions exhausted")
            if len(path) >= 2 and not is_uni_directional(self.B, path[-2], last, b, self.slack):
                continue
            extended = path + [b]
            loop = self._closes(extended)
            if loop is not None:
                return loop
            if len(extended) < self.max_len:
                grown = covered | interval_row(self.B, last, b)
                grown[b] = False
                found = self._extend(extended, grown)
                if found is not None:
                    return found
        return None


def find_orienting_loop(
    graph: GeoGraph,
    mode: str = "adjacency_search",
    B: Optional[RecoveredB] = None,
    starts: Optional[Sequence[int]] = None,
    band: Optional[float] = None,
    budget: Optional[int] = None,
) -> OrientingLoop:
    """
    ground_truth: snap n_L = floor(L)+1 equally spaced targets to the sample.
    adjacency_search: grow a uni-directional loop by maximal hop intervals and
    accept the first closure that passes the partition check.
    """
    if mode not in LOOP_MODES:
        raise InvalidInput(f"unknown loop mode {mode!r}, expected one of {LOOP_MODES}")
    if mode == "ground_truth":
        return _ground_truth_loop(graph)

    B = B if B is not None else recover_B(graph)
    if B.n != graph.n:
        raise MismatchedSpace(f"B on {B.n} vertices for a graph on {graph.n}")
    slack = B.slack(band)
    search = _LoopSearch(B, slack, budget or settings.LOOP_SEARCH_BUDGET, settings.LOOP_MAX_LENGTH)
    for start in (starts if starts is not None else range(min(graph.n, 8))):
        loop = search.run(graph.check_vertex(start))
        if loop is not None:
            logger.info(
                f"Orienting loop found from vertex {start}: n_L={loop.n_L} "
                f"after {search.expansions} expansions (slack {slack})"
            )
            return loop
    raise LoopNotFound(f"no orienting loop passes the partition check ({search.expansions} expansions)")


def loop_orientation(graph: GeoGraph, loop: OrientingLoop) -> int:
    """+1 if the loop runs with increasing coordinates, -1 otherwise."""
    if not graph.has_coords:
        raise MismatchedSpace("orientation needs coordinates")
    x = graph.coords[list(loop.cycle[:3]), 0]
    return 1 if bool(circular_order_array(x[0], x[1], x[2])) else -1

# =============================================================================
# CIRCULAR ORDER FROM PATHS
# =============================================================================

def _arc_union(B: RecoveredB, loop: OrientingLoop, i: int, j: int) -> np.ndarray:
    out = np.zeros(B.n, dtype=bool)
    m = i
    while m != j:
        out |= interval_row(B, *loop.step(m))
        m = (m + 1) % loop.n_L
    return out


def _path_union(B: RecoveredB, path: List[int]) -> np.ndarray:
    out = np.zeros(B.n, dtype=bool)
    for p, q in zip(path, path[1:]):
        out |= interval_row(B, p, q)
    return out


def _uni_path(B: RecoveredB, loop: OrientingLoop, i: int, j: int,
              targets: Tuple[int, int, int], slack: int) -> bool:
    """
    A uni-directional path a_i -> a_j of length < n_L + 3 through the targets, in order.

    Intermediate vertices are restricted to the loop points a_i..a_j and the three
    targets, so the search is linear in n_L rather than exponential in n. This
    under-approximates the existential over all sample vertices: a True answer is
    a genuine witness, a False answer only rules out paths of this shape.
    """
    cyc = loop.cycle
    n_L = loop.n_L
    span = (j - i) % n_L
    goal = _arc_union(B, loop, i, j)
    if not all(goal[t] for t in targets):
        return False
    end = cyc[j]

    def search(path: List[int], li: int, ti: int) -> bool:
        cur = path[-1]
        if li > span:
            if ti == 3 and cur == end:
                return int(np.count_nonzero(_path_union(B, path) ^ goal)) <= slack * (len(path) - 1)
            return False
        if len(path) - 1 >= n_L + 2:
            return False
        options = []
        if ti < 3:
            options.append(targets[ti])
        options.append(cyc[(i + li) % n_L])
        for nxt in dict.fromkeys(options):
            if nxt == cur or not B.adjacent(cur, nxt):
                continue
            if len(path) >= 2 and not is_uni_directional(B, path[-2], cur, nxt, slack):
                continue
            nti = ti + 1 if ti < 3 and nxt == targets[ti] else ti
            nli = li + 1 if nxt == cyc[(i + li) % n_L] else li
            if search(path + [nxt], nli, nti):
                return True
        return False

    return search([cyc[i]], 1, 1 if targets[0] == cyc[i] else 0)


def t_formula(B: RecoveredB, loop: OrientingLoop, x: int, y: int, z: int,
              band: Optional[float] = None) -> bool:
    slack = B.slack(band)
    n_L = loop.n_L
    return any(
        _uni_path(B, loop, i, j, (x, y, z), slack)
        for i in range(n_L) for j in range(n_L) if i != j
    )


def _distinct(B: RecoveredB, *vertices: int) -> Tuple[int, ...]:
    vs = tuple(B.check_vertex(v) for v in vertices)
    if len(set(vs)) != len(vs):
        raise DegenerateTriple("vertices must be pairwise distinct", vs)
    return vs


def recover_order(B: RecoveredB, loop: OrientingLoop, x: int, y: int, z: int,
                  band: Optional[float] = None) -> bool:
    """C(x,y,z) := T(x,y,z) or T(y,z,x) or T(z,x,y)"""
    x, y, z = _distinct(B, x, y, z)
    return (t_formula(B, loop, x, y, z, band)
            or t_formula(B, loop, y, z, x, band)
            or t_formula(B, loop, z, x, y, band))


@dataclass(frozen=True)
class RecoveredOrder:
    """Circular-order oracle backed by the path formula"""
    B: RecoveredB
    loop: OrientingLoop
    band: Optional[float] = None

    def __call__(self, x: int, y: int, z: int) -> bool:
        return recover_order(self.B, self.loop, x, y, z, self.band)

# =============================================================================
# POSITIONAL FRAME
# =============================================================================

class LoopFrame:
    """
    Places every vertex in an arc of the loop and ranks it inside the arc by
    |A[a_m, y] & arc_m|, giving integer positions around the circle. The order
    C(x,y,z) is the strict cyclic order of positions; unplaced vertices are in no
    ordered triple.
    """

    def __init__(self, B: RecoveredB, loop: OrientingLoop, band: Optional[float] = None):
        self.B = B
        self.loop = loop
        self.slack = B.slack(band)
        n = B.n
        arcs = loop_arcs(B, loop)
        arc_of = np.full(n, -1, dtype=int)
        rank = np.zeros(n, dtype=int)
        frac = np.full(n, np.inf)
        for m in range(loop.n_L):
            a = loop.cycle[m]
            members = np.flatnonzero(arcs[m])
            members = members[members != a]
            if len(members) == 0:
                continue
            r = self._ranks(a, members, arcs[m])
            f = r / float(len(members))
            better = f < frac[members]
            arc_of[members[better]] = m
            rank[members[better]] = r[better]
            frac[members[better]] = f[better]

        # vertices in no arc but B-adjacent to both ends of one
        Br = B.reflexive
        loose = np.flatnonzero(arc_of < 0)
        for m in range(loop.n_L):
            a, b = loop.step(m)
            hits = loose[Br[loose, a] & Br[loose, b] & (arc_of[loose] < 0)]
            if len(hits):
                arc_of[hits] = m
                rank[hits] = self._ranks(a, hits, arcs[m])

        for m, a in enumerate(loop.cycle):
            arc_of[a], rank[a] = m, 0

        self.placed = arc_of >= 0
        order = np.lexsort((np.arange(n), rank, arc_of))
        order = order[self.placed[order]]
        self.positions = np.full(n, -1, dtype=int)
        self.positions[order] = np.arange(len(order))
        self.size = len(order)
        self.arc_of = arc_of
        self.unplaced = int(n - self.size)

        self._F: Dict[Tuple[int, int], np.ndarray] = {}
        self._mirrored: Dict[Tuple[int, int], np.ndarray] = {}
        self._base: Dict[Tuple[int, bool], np.ndarray] = {}
        self._lock = threading.Lock()
        logger.info(f"Loop frame: {self.size} placed, {self.unplaced} unplaced, slack {self.slack}")

    def _ranks(self, a: int, members: np.ndarray, arc: np.ndarray) -> np.ndarray:
        Br = self.B.reflexive
        common = (Br[a][None, :] & Br[members]).astype(np.float32)
        inside = (common @ self.B._outside) == 0
        return (inside & arc[None, :]).sum(axis=1)

    # -- order --

    def order(self, x, y, z) -> np.ndarray:
        """Vectorized C over the frame positions."""
        px, py, pz = self.positions[x], self.positions[y], self.positions[z]
        ok = (px >= 0) & (py >= 0) & (pz >= 0)
        return ok & circular_order_array(px, py, pz)

    def offsets(self, a: int) -> np.ndarray:
        """Forward position offset of every vertex from a; -1 where unplaced."""
        if self.positions[a] < 0:
            return np.full(self.B.n, -1, dtype=int)
        off = (self.positions - self.positions[a]) % self.size
        return np.where(self.placed, off, -1)

    # -- F-intervals --

    def _unit(self, a: int, forward: bool) -> np.ndarray:
        """
        forward: [a, a+1) = {a} + {x in B(a): C(a,x,w) for some w not B-or-equal to a};
        backward: (a-1, a] = {a} + {x in B(a): C(w,x,a) for some such w}.
        """
        key = (a, forward)
        row = self._base.get(key)
        if row is not None:
            return row
        off = self.offsets(a)
        far = off[~self.B.reflexive[a] & self.placed]
        row = np.zeros(self.B.n, dtype=bool)
        if self.positions[a] >= 0 and len(far):
            near = self.B.matrix[a] & self.placed
            if forward:
                row = near & (off > 0) & (off < far.max())
            else:
                row = near & (off > far.min())
        row[a] = True
        row.setflags(write=False)
        with self._lock:
            return self._base.setdefault(key, row)

    def _spread(self, prev: np.ndarray, forward: bool) -> np.ndarray:
        out = np.zeros(self.B.n, dtype=bool)
        for z in np.flatnonzero(prev):
            out |= self._unit(int(z), forward)
        return out & ~prev

    def F(self, a: int, n: int) -> np.ndarray:
        """Bitset of F[a+n, a+n+1)."""
        key = (a, n)
        row = self._F.get(key)
        if row is not None:
            return row
        if n == 0:
            row = self._unit(a, True)
        elif n > 0:
            row = self._spread(self.F(a, n - 1), True)
        else:
            # mirrored chain (a-k-1, a-k] for k = -n-1
            row = self._mirror(a, -n - 1)
            if n == -1:
                row = row.copy()
                row[a] = False
        if not row.any() and abs(n) < self.loop.n_L - 1:
            raise ApproximationFailure(f"F[{a}{n:+d}, {a}{n + 1:+d}) is empty on this sample")
        row.setflags(write=False)
        with self._lock:
            return self._F.setdefault(key, row)

    def _mirror(self, a: int, k: int) -> np.ndarray:
        key = (a, k)
        row = self._mirrored.get(key)
        if row is not None:
            return row
        row = self._unit(a, False) if k == 0 else self._spread(self._mirror(a, k - 1), False)
        with self._lock:
            return self._mirrored.setdefault(key, row)

    # -- translates and shifted order --

    def minimum(self, members: np.ndarray) -> Optional[int]:
        """Order-minimal member: the one right after the widest positional gap."""
        idx = np.flatnonzero(members)
        if len(idx) == 0:
            return None
        pos = self.positions[idx]
        idx, pos = idx[pos >= 0], pos[pos >= 0]
        if len(idx) == 0:
            return int(np.flatnonzero(members)[0])
        order = np.argsort(pos)
        idx, pos = idx[order], pos[order]
        gaps = np.diff(np.append(pos, pos[0] + self.size))
        return int(idx[(int(np.argmax(gaps)) + 1) % len(idx)])

    def J(self, a: int, z: int, b: int, k: int) -> bool:
        """a+z != b+k and not C(a+z, b+k+1, a+z+1), through F-interval containment"""
        Fa = self.F(a, z)
        Fb1 = self.F(b, k + 1)
        outside = Fa & ~(self.F(b, k) | Fb1)
        if int(np.count_nonzero(outside)) > self.slack:
            return True
        return int(np.count_nonzero(Fa ^ Fb1)) <= self.slack

    def D(self, a: int, z: int, b: int, k: int) -> np.ndarray:
        """{x : exists v in F[a+z, a+z+1) forall v' in F[b+k, b+k+1) C(v, x, v')}"""
        Fa = np.flatnonzero(self.F(a, z))
        Fb = np.flatnonzero(self.F(b, k))
        out = np.zeros(self.B.n, dtype=bool)
        if len(Fa) == 0:
            return out
        if len(Fb) == 0:
            out[:] = True
            return out
        if np.any(self.positions[Fb] < 0):
            return out
        Fa = Fa[self.positions[Fa] >= 0]
        if len(Fa) == 0:
            return out
        off = (self.positions[None, :] - self.positions[Fa][:, None]) % self.size
        bound = off[:, Fb].min(axis=1)
        inside = (off > 0) & (off < bound[:, None]) & self.placed[None, :]
        return inside.any(axis=0)

    def shifted(self, z: int, t: int, k: int, a: int, c: int, b: int) -> bool:
        """C(a+z, c+t, b+k) by the three-case J/D disjunction"""
        cases = (((a, z), (b, k), (c, t)), ((c, t), (a, z), (b, k)), ((b, k), (c, t), (a, z)))
        for (p, sp), (q, sq), (r, sr) in cases:
            if self.J(p, sp, q, sq) and self.D(p, sp - sr, q, sq - sr)[r]:
                return True
        return False

    def shifted_oracle(self, z: int, t: int, k: int, a, b, c) -> np.ndarray:
        """Callback for StructureView: C[z,t,k](a,b,c) on broadcastable index arrays."""
        if z == t == k == 0:
            return self.order(a, b, c)
        A, Bv, Cv = np.broadcast_arrays(np.asarray(a), np.asarray(b), np.asarray(c))
        out = np.zeros(A.shape, dtype=bool)
        for i in np.ndindex(A.shape):
            p, q, r = int(A[i]), int(Bv[i]), int(Cv[i])
            if len({p, q, r}) == 3:
                out[i] = self.shifted(z, t, k, p, q, r)
        return out


def get_frame(B: RecoveredB, loop: OrientingLoop, band: Optional[float] = None) -> LoopFrame:
    """Frame cached on the relation per (loop, slack)."""
    key = (loop.vertices, B.slack(band))
    frame = B._frames.get(key)
    if frame is not None:
        return frame
    frame = LoopFrame(B, loop, band)
    with B._lock:
        return B._frames.setdefault(key, frame)

# =============================================================================
# F-INTERVALS, TRANSLATES, SHIFTED ORDER
# =============================================================================

def recover_F_interval(B: RecoveredB, loop: OrientingLoop, a: int, n: int,
                       band: Optional[float] = None) -> FrozenSet[int]:
    a = B.check_vertex(a)
    row = get_frame(B, loop, band).F(a, int(n))
    return frozenset(int(x) for x in np.flatnonzero(row))


@dataclass(frozen=True)
class Translate:
    vertex: int
    approximate: bool
    interval_size: int

    def to_dict(self) -> Dict[str, Any]:
        return {"vertex": self.vertex, "approximate": self.approximate, "interval_size": self.interval_size}


def recover_translate(B: RecoveredB, loop: OrientingLoop, x: int, z: int,
                      band: Optional[float] = None) -> Translate:
    """f_z(x): the order-minimal vertex of F[x+z, x+z+1)."""
    x = B.check_vertex(x)
    if int(z) == 0:
        raise InvalidInput("translate shift must be nonzero")
    frame = get_frame(B, loop, band)
    members = frame.F(x, int(z))
    size = int(np.count_nonzero(members))
    if size == 0:
        raise NotFound(f"F[{x}{z:+d}, {x}{z + 1:+d}) is empty")
    return Translate(vertex=frame.minimum(members), approximate=size > 1, interval_size=size)


def recover_C_ztk(B: RecoveredB, loop: OrientingLoop, z: int, t: int, k: int,
                  a: int, c: int, b: int, band: Optional[float] = None) -> bool:
    """C[z,t,k](a,c,b) := C(a+z, c+t, b+k)"""
    a, c, b = _distinct(B, a, c, b)
    if z == t == k == 0:
        return recover_order(B, loop, a, c, b, band)
    return get_frame(B, loop, band).shifted(int(z), int(t), int(k), a, c, b)


def suspect_integer_pairs(B: RecoveredB, loop: OrientingLoop, band: Optional[float] = None,
                          vertices: Optional[Sequence[int]] = None) -> List[Tuple[int, int]]:
    """
    Pairs (x, f_1(x)) whose chain f_1^k(x) lands on f_k(x) for every k < n_L,
    the signature of translates realized exactly by the sample.
    """
    frame = get_frame(B, loop, band)
    found = []
    for x in (vertices if vertices is not None else range(B.n)):
        x = int(x)
        try:
            step = recover_translate(B, loop, x, 1, band).vertex
            cur = step
            consistent = True
            for k in range(2, loop.n_L):
                cur = recover_translate(B, loop, cur, 1, band).vertex
                direct = frame.minimum(frame.F(x, k))
                if direct != cur:
                    consistent = False
                    break
        except (ApproximationFailure, NotFound):
            continue
        if consistent:
            found.append((x, step))
    if found:
        logger.warning(f"{len(found)} vertices have translate chains matching exactly; possible integer distances")
    return found
