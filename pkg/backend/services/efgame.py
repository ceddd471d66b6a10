# backend/services/efgame.py
"""
Ehrenfeucht-Fraisse games between two circle graphs.

A map f: A -> B is n-elementary when it is a graph isomorphism and
C(a+z, b+t, c+k) <-> C(f(a)+z, f(b)+t, f(c)+k) for all a, b, c in A and
z, t, k in [-2^n, 2^n]. Duplicator answers a Spoiler move at level n by the
bracketing-arc construction and the answer is re-verified at level n-1.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from exceptions import (
    BudgetExceeded,
    GeographError,
    InvalidInput,
    MismatchedSpace,
    NotElementary,
    NotFound,
    WitnessNotFound,
)
from models.graph import GeoGraph
from models.spaces import SpaceKind
from services.geometry import circular_order_array
from services.recovery import (
    LoopFrame,
    OrientingLoop,
    RecoveredB,
    find_orienting_loop,
    get_frame,
    recover_B,
    recover_translate,
)

logger = logging.getLogger(__name__)

SIDES = ("left", "right")
COORDINATE_TOLERANCE = 1e-9

# =============================================================================
# SHIFTED-ORDER ORACLES
# =============================================================================

class ShiftOracle:
    """Positions of shifted vertices v + z on a circle of circumference `modulus`"""
    modulus: float
    tol: float

    def positions(self, vertices: Sequence[int], shifts: Sequence[int]) -> np.ndarray:
        raise NotImplementedError


class CoordinateShifts(ShiftOracle):
    """Ground truth: (x_v + z) mod L"""

    def __init__(self, graph: GeoGraph):
        if not graph.has_coords or graph.space.kind != SpaceKind.CIRCLE:
            raise MismatchedSpace("EF games need circle graphs with coordinates")
        self.x = graph.coords[:, 0]
        self.modulus = graph.space.L
        self.tol = COORDINATE_TOLERANCE

    def positions(self, vertices: Sequence[int], shifts: Sequence[int]) -> np.ndarray:
        v = np.asarray(vertices, dtype=int)
        z = np.asarray(shifts, dtype=float)
        return np.mod(self.x[v][:, None] + z[None, :], self.modulus)


class RecoveredShifts(ShiftOracle):
    """Frame position of the translate f_z(v), from adjacency alone; NaN where unplaced"""

    def __init__(self, graph: GeoGraph, B: Optional[RecoveredB] = None, loop: Optional[OrientingLoop] = None,
                 band: Optional[float] = None):
        self.B = B if B is not None else recover_B(graph)
        self.loop = loop if loop is not None else find_orienting_loop(graph, B=self.B, band=band)
        self.band = band
        self.frame: LoopFrame = get_frame(self.B, self.loop, band)
        self.modulus = float(self.frame.size)
        self.tol = 0.5

    def _position(self, v: int, z: int) -> float:
        if z != 0:
            try:
                v = recover_translate(self.B, self.loop, v, z, self.band).vertex
            except NotFound:
                return np.nan
        p = self.frame.positions[v]
        return float(p) if p >= 0 else np.nan

    def positions(self, vertices: Sequence[int], shifts: Sequence[int]) -> np.ndarray:
        out = np.empty((len(vertices), len(shifts)), dtype=float)
        for i, v in enumerate(vertices):
            for j, z in enumerate(shifts):
                out[i, j] = self._position(int(v), int(z))
        return out


def default_oracles(G1: GeoGraph, G2: GeoGraph) -> Tuple[ShiftOracle, ShiftOracle]:
    return CoordinateShifts(G1), CoordinateShifts(G2)

# =============================================================================
# PARTIAL MAPS AND ELEMENTARITY
# =============================================================================

@dataclass(frozen=True)
class PartialMap:
    pairs: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        left = [a for a, _ in self.pairs]
        right = [b for _, b in self.pairs]
        if len(set(left)) != len(left) or len(set(right)) != len(right):
            raise InvalidInput("partial map must be injective in both directions")

    @property
    def domain(self) -> List[int]:
        return [a for a, _ in self.pairs]

    @property
    def range(self) -> List[int]:
        return [b for _, b in self.pairs]

    def image(self, a: int) -> Optional[int]:
        return dict(self.pairs).get(a)

    def extended(self, a: int, b: int) -> "PartialMap":
        return PartialMap(self.pairs + ((int(a), int(b)),))

    def transposed(self) -> "PartialMap":
        return PartialMap(tuple((b, a) for a, b in self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> Dict[str, Any]:
        return {"pairs": [list(p) for p in self.pairs]}


@dataclass
class ElementarityResult:
    ok: bool
    level: int
    violation: Optional[Dict[str, Any]] = None

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "level": self.level, "violation": self.violation}


def shift_range(n: int) -> np.ndarray:
    return np.arange(-(2 ** n), 2 ** n + 1)


def _orders(P: np.ndarray, rows: slice, modulus: float, tol: float) -> np.ndarray:
    """C over all triples with first index in `rows`; near-coincident points are in no triple."""
    x = P[rows][:, None, None]
    y = P[None, :, None]
    z = P[None, None, :]
    gap = lambda u, v: np.minimum(np.abs(u - v), modulus - np.abs(u - v))  # noqa: E731
    distinct = (gap(x, y) > tol) & (gap(y, z) > tol) & (gap(x, z) > tol)
    return distinct & circular_order_array(x, y, z)


def check_n_elementary(G1: GeoGraph, G2: GeoGraph, pmap: PartialMap, n: int,
                       oracles: Optional[Tuple[ShiftOracle, ShiftOracle]] = None) -> ElementarityResult:
    """Graph isomorphism on the map plus shifted-order agreement for shifts in [-2^n, 2^n]."""
    if n < 0:
        raise InvalidInput(f"elementarity level must be >= 0, got {n}")
    if len(pmap) == 0:
        return ElementarityResult(True, n)
    A = np.asarray(pmap.domain, dtype=int)
    B = np.asarray(pmap.range, dtype=int)
    required = (len(A) * (2 ** (n + 1) + 1)) ** 3
    if required > settings.ELEMENTARY_BUDGET:
        raise BudgetExceeded(f"level {n} on {len(A)} points needs {required} triple checks",
                             required, settings.ELEMENTARY_BUDGET)

    E1 = G1.adjacency[np.ix_(A, A)]
    E2 = G2.adjacency[np.ix_(B, B)]
    if not np.array_equal(E1, E2):
        i, j = (int(v) for v in np.argwhere(E1 != E2)[0])
        return ElementarityResult(False, n, {"kind": "adjacency", "pair": [int(A[i]), int(A[j])]})

    O1, O2 = oracles or default_oracles(G1, G2)
    S = shift_range(n)
    P1 = O1.positions(A, S).ravel()
    P2 = O2.positions(B, S).ravel()
    N = len(P1)
    step = max(1, int(4_000_000 // (N * N)))
    for start in range(0, N, step):
        rows = slice(start, min(start + step, N))
        C1 = _orders(P1, rows, O1.modulus, O1.tol)
        C2 = _orders(P2, rows, O2.modulus, O2.tol)
        if not np.array_equal(C1, C2):
            r, s, t = np.argwhere(C1 != C2)[0]
            triple = [divmod(int(v), len(S)) for v in (start + r, s, t)]
            return ElementarityResult(False, n, {
                "kind": "order",
                "triple": [[int(A[i]), int(S[k])] for i, k in triple],
                "left": bool(C1[r, s, t]),
                "right": bool(C2[r, s, t]),
            })
    return ElementarityResult(True, n)

# =============================================================================
# DUPLICATOR
# =============================================================================

def _circ_gap(u: np.ndarray, v: float, modulus: float) -> np.ndarray:
    d = np.abs(u - v)
    return np.minimum(d, modulus - d)


def _candidates(G1: GeoGraph, G2: GeoGraph, pmap: PartialMap, n: int, a: int,
                O1: ShiftOracle, O2: ShiftOracle) -> np.ndarray:
    """G2 vertices inside the image of the bracketing arc around a, with a's adjacency pattern, midpoint first."""
    A = np.asarray(pmap.domain, dtype=int)
    B = np.asarray(pmap.range, dtype=int)
    S = shift_range(n)
    x = O1.positions([a], [0])[0, 0]
    P1 = O1.positions(A, S)
    off = np.mod(P1 - x, O1.modulus)
    if np.isnan(x) or np.all(np.isnan(off)):
        raise WitnessNotFound(f"vertex {a} has no position in the shifted order")
    if np.any((off <= O1.tol) | (off >= O1.modulus - O1.tol)):
        logger.warning(f"Vertex {a} coincides with a shifted map point; integer-distance margin violated")
        raise WitnessNotFound(f"vertex {a} is not bracketed strictly by the shifted map points")
    flat = off.ravel()
    if np.unique(np.round(flat[~np.isnan(flat)] / max(O1.tol, 1e-12))).size < np.count_nonzero(~np.isnan(flat)):
        logger.warning("Shifted map points coincide; integer-distance margin violated")
    i2, k2 = np.unravel_index(int(np.nanargmin(off)), off.shape)
    i1, k1 = np.unravel_index(int(np.nanargmax(off)), off.shape)

    Q = O2.positions(B, S)
    start, end = Q[i1, k1], Q[i2, k2]
    if np.isnan(start) or np.isnan(end):
        raise WitnessNotFound(f"the bracketing arc of {a} has no image")
    length = np.mod(end - start, O2.modulus)
    Y = O2.positions(np.arange(G2.n), [0])[:, 0]
    rel = np.mod(Y - start, O2.modulus)
    inside = (rel > O2.tol) & (rel < length - O2.tol)
    inside[B] = False
    pattern = G1.adjacency[a, A]
    match = inside & np.all(G2.adjacency[:, B] == pattern[None, :], axis=1)
    cand = np.flatnonzero(match)
    return cand[np.argsort(np.abs(rel[cand] - length / 2.0), kind="stable")]


def duplicator_extend(
    G1: GeoGraph,
    G2: GeoGraph,
    pmap: PartialMap,
    n: int,
    a: int,
    side: str = "left",
    oracles: Optional[Tuple[ShiftOracle, ShiftOracle]] = None,
    verify_input: bool = True,
) -> Tuple[int, PartialMap]:
    """
    Answer a Spoiler move a (in G1 for side "left", in G2 for "right") so the
    extended map is (n-1)-elementary, given that pmap is n-elementary.
    """
    if side not in SIDES:
        raise InvalidInput(f"side must be one of {SIDES}, got {side!r}")
    oracles = oracles or default_oracles(G1, G2)
    if side == "right":
        b, ext = duplicator_extend(G2, G1, pmap.transposed(), n, a, "left", (oracles[1], oracles[0]), verify_input)
        return b, ext.transposed()

    if n < 1:
        raise InvalidInput(f"Duplicator needs level >= 1, got {n}")
    a = G1.check_vertex(a)
    known = pmap.image(a)
    if known is not None:
        return known, pmap
    if verify_input:
        pre = check_n_elementary(G1, G2, pmap, n, oracles)
        if not pre:
            raise NotElementary(f"map is not {n}-elementary", pre.violation)

    O1, O2 = oracles
    if len(pmap) == 0:
        Y = O2.positions(np.arange(G2.n), [0])[:, 0]
        target = O1.positions([a], [0])[0, 0] * O2.modulus / O1.modulus
        cand = np.argsort(_circ_gap(Y, target, O2.modulus), kind="stable")
    else:
        cand = _candidates(G1, G2, pmap, n, a, O1, O2)
    if len(cand) == 0:
        raise WitnessNotFound(f"no vertex in the image arc realizes the adjacency pattern of {a}")

    for b in cand[:settings.DUPLICATOR_CANDIDATES]:
        ext = pmap.extended(a, int(b))
        if check_n_elementary(G1, G2, ext, n - 1, oracles):
            logger.debug(f"Duplicator answers {a} -> {int(b)} at level {n - 1}")
            return int(b), ext
    raise WitnessNotFound(f"none of {min(len(cand), settings.DUPLICATOR_CANDIDATES)} candidates for {a} "
                          f"verifies at level {n - 1}")

# =============================================================================
# SPOILERS
# =============================================================================

@dataclass
class GameState:
    G1: GeoGraph
    G2: GeoGraph
    pmap: PartialMap
    level: int
    round: int
    oracles: Tuple[ShiftOracle, ShiftOracle]
    transcript: List[Dict[str, Any]] = field(default_factory=list)

    def graph(self, side: str) -> GeoGraph:
        return self.G1 if side == "left" else self.G2

    def unmapped(self, side: str) -> np.ndarray:
        used = self.pmap.domain if side == "left" else self.pmap.range
        free = np.ones(self.graph(side).n, dtype=bool)
        free[used] = False
        return np.flatnonzero(free)


class GameAborted(Exception):
    """Spoiler quit"""


class Spoiler:
    name = "spoiler"

    def choose(self, state: GameState, rng: np.random.Generator) -> Tuple[str, int]:
        raise NotImplementedError


class RandomSpoiler(Spoiler):
    name = "random"

    def choose(self, state: GameState, rng: np.random.Generator) -> Tuple[str, int]:
        side = SIDES[int(rng.integers(0, 2))]
        free = state.unmapped(side)
        return side, int(free[int(rng.integers(0, len(free)))])


class BoundarySpoiler(Spoiler):
    """Picks the free vertex closest to a shifted map point, leaving Duplicator the thinnest arc"""
    name = "boundary"

    def choose(self, state: GameState, rng: np.random.Generator) -> Tuple[str, int]:
        side = SIDES[int(rng.integers(0, 2))]
        free = state.unmapped(side)
        if len(state.pmap) == 0:
            return side, int(free[int(rng.integers(0, len(free)))])
        oracle = state.oracles[0] if side == "left" else state.oracles[1]
        mapped = state.pmap.domain if side == "left" else state.pmap.range
        P = oracle.positions(mapped, shift_range(state.level)).ravel()
        X = oracle.positions(free, [0])[:, 0]
        gaps = np.array([np.nan_to_num(_circ_gap(P, x, oracle.modulus), nan=np.inf).min() for x in X])
        gaps[(gaps <= oracle.tol) | np.isnan(gaps)] = np.inf
        return side, int(free[int(np.argmin(gaps))])


class ScriptedSpoiler(Spoiler):
    name = "scripted"

    def __init__(self, moves: Sequence[Tuple[str, int]]):
        self.moves = list(moves)

    def choose(self, state: GameState, rng: np.random.Generator) -> Tuple[str, int]:
        if state.round - 1 >= len(self.moves):
            raise GameAborted("script exhausted")
        side, v = self.moves[state.round - 1]
        return side, int(v)


_SIDE_WORDS = {"1": "left", "left": "left", "l": "left", "2": "right", "right": "right", "r": "right"}


def parse_move(line: str, state: GameState) -> Tuple[str, int]:
    parts = line.split()
    if len(parts) != 2 or parts[0].lower() not in _SIDE_WORDS:
        raise InvalidInput(f"expected '<side> <vertex>' with side 1|2|left|right, got {line.strip()!r}")
    side = _SIDE_WORDS[parts[0].lower()]
    try:
        v = int(parts[1])
    except ValueError:
        raise InvalidInput(f"vertex must be an integer, got {parts[1]!r}") from None
    graph = state.graph(side)
    if not 0 <= v < graph.n:
        raise InvalidInput(f"vertex {v} outside 0..{graph.n - 1}")
    if v not in set(state.unmapped(side).tolist()):
        raise InvalidInput(f"vertex {v} is already in the map")
    return side, v


class InteractiveSpoiler(Spoiler):
    """Human Spoiler reading '<side> <vertex>' lines; 'quit' or end of input aborts"""
    name = "interactive"

    def __init__(self, read: Callable[[str], str] = input, write: Callable[[str], None] = print):
        self.read = read
        self.write = write

    def choose(self, state: GameState, rng: np.random.Generator) -> Tuple[str, int]:
        self.write(f"round {state.round}, level {state.level}, map {list(state.pmap.pairs)}")
        while True:
            try:
                line = self.read("spoiler> ")
            except EOFError:
                raise GameAborted("end of input") from None
            if line.strip().lower() in ("quit", "q", "exit"):
                raise GameAborted("quit")
            try:
                return parse_move(line, state)
            except InvalidInput as e:
                self.write(f"invalid move: {e}")


SPOILERS = {"random": RandomSpoiler, "boundary": BoundarySpoiler}


def make_spoiler(name: str) -> Spoiler:
    try:
        return SPOILERS[name]()
    except KeyError:
        raise InvalidInput(f"unknown spoiler {name!r}, expected one of {sorted(SPOILERS)}") from None

# =============================================================================
# GAMES
# =============================================================================

@dataclass
class GameResult:
    won: bool
    rounds: int
    m: int
    rounds_completed: int
    final_level: int
    pairs: List[Tuple[int, int]]
    transcript: List[Dict[str, Any]]
    spoiler: str
    seed: Any = None
    failed_round: Optional[int] = None
    reason: Optional[str] = None
    aborted: bool = False
    verified: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "won": self.won,
            "rounds": self.rounds,
            "m": self.m,
            "rounds_completed": self.rounds_completed,
            "final_level": self.final_level,
            "pairs": [list(p) for p in self.pairs],
            "transcript": self.transcript,
            "spoiler": self.spoiler,
            "seed": self.seed,
            "failed_round": self.failed_round,
            "reason": self.reason,
            "aborted": self.aborted,
            "verified": self.verified,
        }


def play(
    G1: GeoGraph,
    G2: GeoGraph,
    rounds: int,
    m: int,
    spoiler: Any = "random",
    seed: Any = 0,
    oracles: Optional[Tuple[ShiftOracle, ShiftOracle]] = None,
    on_round: Optional[Callable[[Dict[str, Any]], None]] = None,
) -> GameResult:
    """
    Play `rounds` rounds starting at level m+rounds; after round k the map is
    (m+rounds-k)-elementary. Failures are results.
    """
    if rounds < 1 or m < 0:
        raise InvalidInput(f"need rounds >= 1 and m >= 0, got rounds={rounds}, m={m}")
    spoiler = make_spoiler(spoiler) if isinstance(spoiler, str) else spoiler
    oracles = oracles or default_oracles(G1, G2)
    rng = np.random.default_rng(seed)
    state = GameState(G1, G2, PartialMap(), m + rounds, 1, oracles)

    def result(**kw) -> GameResult:
        return GameResult(rounds=rounds, m=m, rounds_completed=state.round - 1, final_level=state.level,
                          pairs=list(state.pmap.pairs), transcript=state.transcript,
                          spoiler=spoiler.name, seed=seed, **kw)

    for k in range(1, rounds + 1):
        state.round = k
        try:
            side, v = spoiler.choose(state, rng)
        except GameAborted as e:
            logger.info(f"Game aborted in round {k}: {e}")
            return result(won=False, aborted=True, reason=str(e))
        try:
            # the map is already verified at state.level by the previous round
            response, pmap = duplicator_extend(G1, G2, state.pmap, state.level, v, side, oracles, verify_input=False)
        except GeographError as e:
            logger.info(f"Duplicator fails in round {k}: {e}")
            return result(won=False, failed_round=k, reason=str(e))
        state.pmap = pmap
        state.level -= 1
        record = {"round": k, "side": side, "chosen": v, "response": response, "level": state.level}
        state.transcript.append(record)
        if on_round is not None:
            on_round(record)
        state.round = k + 1

    final = check_n_elementary(G1, G2, state.pmap, m, oracles)
    res = result(won=bool(final), verified=bool(final),
                 reason=None if final else f"final map fails: {final.violation}")
    logger.info(f"Game over: {'Duplicator' if res.won else 'Spoiler'} wins after {res.rounds_completed} rounds")
    return res


def interactive_play(G1: GeoGraph, G2: GeoGraph, rounds: int, m: int,
                     read: Callable[[str], str] = input, write: Callable[[str], None] = print,
                     oracles: Optional[Tuple[ShiftOracle, ShiftOracle]] = None) -> GameResult:
    def echo(record: Dict[str, Any]) -> None:
        write(f"duplicator answers {record['response']}; map verified {record['level']}-elementary")

    res = play(G1, G2, rounds, m, InteractiveSpoiler(read, write), seed=None, oracles=oracles, on_round=echo)
    write("Duplicator wins" if res.won else f"game ended: {res.reason}")
    return res


def play_batch(G1: GeoGraph, G2: GeoGraph, games: int, rounds: int, m: int, spoiler: str = "random",
               seed: int = 0, threads: Optional[int] = None,
               oracles: Optional[Tuple[ShiftOracle, ShiftOracle]] = None) -> List[GameResult]:
    """Independent games; game g plays with default_rng([seed, g])."""
    oracles = oracles or default_oracles(G1, G2)
    with ThreadPoolExecutor(max_workers=threads or settings.THREADS) as pool:
        results = list(pool.map(lambda g: play(G1, G2, rounds, m, spoiler, [seed, g], oracles), range(games)))
    wins = sum(r.won for r in results)
    logger.info(f"Batch of {games} games: Duplicator won {wins}")
    return results
