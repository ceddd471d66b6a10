# backend/services/gec.py
"""
Finite-scale probing of geometric existential closedness: witness search for
one adjacency pattern inside a unit ball, and seeded random probe families.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Union

import numpy as np

from config import settings
from exceptions import EmptySample, InvalidProbe, MismatchedSpace, NotApplicable, NotFound
from models.graph import GeoGraph
from services.geometry import distances_from
from services.recovery import RecoveredB

logger = logging.getLogger(__name__)

BallOracle = Union[RecoveredB, np.ndarray]


@dataclass(frozen=True)
class GecProbe:
    """Pattern (A adjacent, B non-adjacent) to realize within epsilon of s"""
    s: int
    A: FrozenSet[int]
    B: FrozenSet[int]
    epsilon: float

    @classmethod
    def of(cls, s: int, A: Iterable[int] = (), B: Iterable[int] = (), epsilon: float = 0.05) -> "GecProbe":
        return cls(int(s), frozenset(int(a) for a in A), frozenset(int(b) for b in B), float(epsilon))

    @property
    def pattern(self) -> FrozenSet[int]:
        return self.A | self.B

    def to_dict(self) -> Dict[str, Any]:
        return {"s": self.s, "A": sorted(self.A), "B": sorted(self.B), "epsilon": self.epsilon}


def _ball_rows(graph: GeoGraph, s: int, b_oracle: Optional[BallOracle]) -> np.ndarray:
    """Membership of every vertex in the open unit ball around s."""
    if graph.has_coords:
        return distances_from(graph.space, graph.coords[s], graph.coords) < 1.0
    if b_oracle is None:
        raise NotApplicable("unit-ball membership needs coordinates or a B oracle")
    if isinstance(b_oracle, RecoveredB):
        return b_oracle.reflexive[s]
    row = np.array(b_oracle[s], dtype=bool)
    row[s] = True
    return row


def validate_probe(graph: GeoGraph, probe: GecProbe, b_oracle: Optional[BallOracle] = None) -> None:
    graph.check_vertex(probe.s)
    for v in probe.pattern:
        graph.check_vertex(v)
    if probe.A & probe.B:
        raise InvalidProbe(f"A and B overlap in {sorted(probe.A & probe.B)}")
    if not probe.epsilon > 0:
        raise InvalidProbe(f"epsilon must be positive, got {probe.epsilon}")
    ball = _ball_rows(graph, probe.s, b_oracle)
    outside = [v for v in probe.pattern if not ball[v]]
    if outside:
        raise InvalidProbe(f"pattern vertices {sorted(outside)} lie outside B_1({probe.s})")


def _matches(graph: GeoGraph, probe: GecProbe, candidates: np.ndarray) -> np.ndarray:
    adj = graph.adjacency[candidates]
    ok = np.ones(len(candidates), dtype=bool)
    if probe.A:
        ok &= adj[:, sorted(probe.A)].all(axis=1)
    if probe.B:
        ok &= ~adj[:, sorted(probe.B)].any(axis=1)
    return ok


def find_witness(
    graph: GeoGraph,
    probe: GecProbe,
    b_oracle: Optional[BallOracle] = None,
    candidates: Optional[Iterable[int]] = None,
) -> int:
    """
    Nearest vertex v outside A and B with d(s,v) < epsilon, adjacent to all of A
    and to none of B. Without coordinates the epsilon filter is the caller's
    candidate set, scanned in index order.
    """
    validate_probe(graph, probe, b_oracle)
    pattern = sorted(probe.pattern)
    if graph.has_coords:
        d = distances_from(graph.space, graph.coords[probe.s], graph.coords)
        near = np.flatnonzero(d < probe.epsilon)
        order = near[np.argsort(d[near], kind="stable")]
    elif candidates is not None:
        order = np.unique(np.fromiter((graph.check_vertex(v) for v in candidates), dtype=int))
    else:
        raise NotApplicable("d(s,v) < epsilon needs coordinates or a caller-provided candidate set")
    order = order[~np.isin(order, pattern)]
    hits = order[_matches(graph, probe, order)]
    if len(hits) == 0:
        raise NotFound(f"no witness for probe {probe.to_dict()} among {len(order)} candidates")
    return int(hits[0])


def check_witness(graph: GeoGraph, probe: GecProbe, v: int) -> bool:
    """Independent recheck of the witness contract (coordinates required)."""
    if not graph.has_coords or v in probe.pattern:
        return False
    d = distances_from(graph.space, graph.coords[probe.s], graph.coords[[v]])[0]
    return (
        bool(d < probe.epsilon)
        and all(graph.adjacency[v, a] for a in probe.A)
        and not any(graph.adjacency[v, b] for b in probe.B)
    )

# =============================================================================
# RANDOM PROBE FAMILIES
# =============================================================================

def draw_probe(graph: GeoGraph, rng: np.random.Generator, max_pattern: int, epsilon: float,
               min_a: int = 0, with_b: bool = True) -> Optional[GecProbe]:
    """One valid probe, redrawing patterns that do not fit in the unit ball; None if the redraw budget runs out."""
    for _ in range(settings.GEC_REDRAWS):
        s = int(rng.integers(0, graph.n))
        ball = np.flatnonzero(_ball_rows(graph, s, None))
        size = int(rng.integers(min_a, max_pattern + 1))
        if size > len(ball):
            continue
        members = rng.choice(ball, size=size, replace=False)
        n_a = int(rng.integers(min_a, size + 1)) if with_b else size
        return GecProbe.of(s, members[:n_a], members[n_a:], epsilon)
    return None


def gec_trials(
    graph: GeoGraph,
    trials: int,
    max_pattern: int,
    epsilon: float,
    seed: int,
    min_a: int = 0,
    with_b: bool = True,
    threads: Optional[int] = None,
) -> List[Dict[str, Any]]:
    """
    Per-trial records (probe and outcome). Trial t draws from default_rng([seed, t]),
    so the probe family does not depend on epsilon or on the thread count.
    """
    if graph.n == 0:
        raise EmptySample("g.e.c. probes need a nonempty graph")
    if not graph.has_coords:
        raise MismatchedSpace("g.e.c. probes need coordinates")
    if min_a > max_pattern:
        raise InvalidProbe(f"min_a={min_a} exceeds max_pattern={max_pattern}")

    def trial(t: int) -> Dict[str, Any]:
        rng = np.random.default_rng([seed, t])
        probe = draw_probe(graph, rng, max_pattern, epsilon, min_a, with_b)
        if probe is None:
            return {"trial": t, "probe": None, "found": False, "witness": None}
        try:
            witness = find_witness(graph, probe)
        except NotFound:
            witness = None
        logger.debug(f"Trial {t}: {probe.to_dict()} -> {witness}")
        return {"trial": t, "probe": probe.to_dict(), "found": witness is not None, "witness": witness}

    with ThreadPoolExecutor(max_workers=threads or settings.THREADS) as pool:
        records = list(pool.map(trial, range(trials)))
    unformed = sum(r["probe"] is None for r in records)
    if unformed:
        logger.warning(f"{unformed} of {trials} probes could not be formed within {settings.GEC_REDRAWS} redraws")
    return records


def gec_score(graph: GeoGraph, trials: int, max_pattern: int, epsilon: float, seed: int, **kwargs) -> float:
    """Fraction of random valid probes with a witness."""
    records = gec_trials(graph, trials, max_pattern, epsilon, seed, **kwargs)
    score = float(np.mean([r["found"] for r in records])) if records else 0.0
    logger.info(f"g.e.c. score {score:.3f} over {trials} probes (eps={epsilon}, |A|+|B|<={max_pattern})")
    return score
