# backend/services/alpha.py
"""
The alpha(G) volume invariant: upper bounds from snapped witness sets, exact
phi_{m,n} sentence checks on tiny graphs, and the ball-volume target.

Two neighbourhood modes:
  graph        |N_1(v) & U| / |U|, the literal popcount
  gec_closure  |B_1(v) & U| / |U|, the value a g.e.c. witness next to v realizes
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import settings
from exceptions import (
    BudgetExceeded,
    EmptySample,
    EmptyWitnessSet,
    InvalidInput,
    MismatchedSpace,
    NotUniform,
    SnapFailure,
)
from models.graph import GeoGraph
from models.spaces import SpaceDescriptor
from services.geometry import SpatialIndex, alpha_target, ball_measure, paired_distances, sample_uniform, total_measure
from services.recovery import RecoveredB

logger = logging.getLogger(__name__)

ALPHA_MODES = ("graph", "gec_closure")
_ROW_CHUNK = 256

# =============================================================================
# WITNESS SETS
# =============================================================================

@dataclass
class WitnessSet:
    """i.i.d. uniform source points snapped to distinct vertices within delta"""
    U: Tuple[int, ...]
    target_size: int
    delta: float
    source_points: np.ndarray
    snap_distances: np.ndarray
    seed: Any = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "size": self.target_size,
            "delta": self.delta,
            "seed": self.seed,
            "max_snap": float(self.snap_distances.max()) if len(self.snap_distances) else 0.0,
        }


def _snap(index: SpatialIndex, points: np.ndarray, n: int, delta: float) -> Tuple[List[int], List[float]]:
    used = np.zeros(n, dtype=bool)
    U, dists = [], []
    k = min(n, 16)
    batch = index.nearest_k(points, k)
    for i, p in enumerate(points):
        idx, d = batch[i]
        kk = k
        while True:
            free = ~used[idx] & (d <= delta)
            if free.any():
                j = int(np.argmax(free))
                used[idx[j]] = True
                U.append(int(idx[j]))
                dists.append(float(d[j]))
                break
            if kk >= n or d[-1] > delta:
                raise SnapFailure(f"source point {i} has no unused vertex within {delta}", source_index=i)
            kk = min(n, kk * 4)
            idx, d = index.nearest_k(p[None, :], kk)[0]
    return U, dists


def build_witness_set(graph: GeoGraph, size: int, delta: float, seed: Union[int, Sequence[int]],
                      index: Optional[SpatialIndex] = None) -> WitnessSet:
    if not graph.has_coords:
        raise MismatchedSpace("witness sets need coordinates")
    if not 1 <= size <= graph.n:
        raise InvalidInput(f"witness set size must lie in 1..{graph.n}, got {size}")
    rng = np.random.default_rng(seed)
    points = sample_uniform(graph.space, rng, size)
    index = index or SpatialIndex(graph.space, graph.coords)
    U, dists = _snap(index, points, graph.n, delta)
    logger.debug(f"Witness set of {size} built, max snap {max(dists):.4f}")
    return WitnessSet(tuple(U), size, float(delta), points, np.asarray(dists), seed)

# =============================================================================
# UPPER BOUNDS
# =============================================================================

def _ball_counts(graph: GeoGraph, U: np.ndarray, B: Optional[RecoveredB]) -> np.ndarray:
    """|B_1(v) & U| for every vertex v."""
    if B is not None:
        return B.reflexive[:, U].sum(axis=1)
    if not graph.has_coords:
        raise MismatchedSpace("gec_closure mode needs coordinates or a recovered B")
    Q = graph.coords[U][None, :, :]
    counts = np.empty(graph.n, dtype=int)
    for start in range(0, graph.n, _ROW_CHUNK):
        P = graph.coords[start:start + _ROW_CHUNK][:, None, :]
        counts[start:start + _ROW_CHUNK] = (paired_distances(graph.space, P, Q) < 1.0).sum(axis=1)
    return counts


def alpha_upper(graph: GeoGraph, U: Sequence[int], mode: str = "graph", B: Optional[RecoveredB] = None) -> float:
    """max over v of the fraction of U in the neighbourhood of v"""
    if mode not in ALPHA_MODES:
        raise InvalidInput(f"unknown alpha mode {mode!r}, expected one of {ALPHA_MODES}")
    U = np.unique(np.asarray([graph.check_vertex(u) for u in U], dtype=int))
    if len(U) == 0:
        raise EmptyWitnessSet("alpha upper bound of an empty set")
    if mode == "graph":
        counts = graph.adjacency[:, U].sum(axis=1)
    else:
        counts = _ball_counts(graph, U, B)
    return float(counts.max()) / len(U)


def delta_schedule(space: SpaceDescriptor, target: Optional[float] = None) -> Fraction:
    """Largest delta = 1/(10*2^k) with unit-ball mass moving by less than target * mu(X) at 1 +- delta."""
    if not space.is_uniform:
        raise NotUniform(f"{space.describe()} carries no uniformly distributed measure")
    target = settings.DELTA_TARGET if target is None else target
    total = total_measure(space)
    unit = ball_measure(space, 1.0)
    delta = Fraction(1, 10)
    for _ in range(40):
        d = float(delta)
        drift = max(ball_measure(space, 1.0 + d) - unit, unit - ball_measure(space, 1.0 - d))
        if drift / total < target:
            return delta
        delta /= 2
    return delta

# =============================================================================
# ESTIMATES
# =============================================================================

@dataclass
class AlphaReport:
    estimate: float
    uppers: List[Dict[str, Any]]
    theoretical: Optional[float]
    mode: str
    delta: float
    sizes: List[int]
    skipped: int = 0
    phi_mn_results: Optional[List[Tuple[int, int, bool]]] = None

    def per_size(self) -> pd.DataFrame:
        df = pd.DataFrame(self.uppers, columns=["size", "repeat", "upper", "max_snap"])
        table = df.groupby("size").agg(estimate=("upper", "min"), sets=("upper", "size"),
                                       mean_upper=("upper", "mean")).reset_index()
        table["theoretical"] = self.theoretical
        return table

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimate": self.estimate,
            "theoretical": self.theoretical,
            "mode": self.mode,
            "delta": self.delta,
            "sizes": self.sizes,
            "skipped": self.skipped,
            "uppers": self.uppers,
            "per_size": self.per_size().to_dict(orient="records"),
            "phi_mn_results": [list(r) for r in self.phi_mn_results] if self.phi_mn_results is not None else None,
        }

    def write_csv(self, path: Union[str, Path]) -> None:
        self.per_size().to_csv(path, index=False)
        logger.info(f"Wrote per-size alpha estimates to {path}")


def alpha_estimate(
    graph: GeoGraph,
    sizes: Sequence[int],
    delta: Optional[float] = None,
    seed: int = 0,
    repeats: Optional[int] = None,
    mode: str = "graph",
    B: Optional[RecoveredB] = None,
    threads: Optional[int] = None,
) -> AlphaReport:
    """
    Minimum of alpha_upper over witness sets of each size; set r of size s draws
    from default_rng([seed, s, r]). Snap failures are skipped with a warning.
    """
    if not graph.has_coords:
        raise MismatchedSpace("alpha estimates need coordinates")
    if not graph.space.is_uniform:
        raise NotUniform(f"{graph.space.describe()} carries no uniformly distributed measure")
    delta = float(delta_schedule(graph.space)) if delta is None else float(delta)
    repeats = repeats or settings.WITNESS_REPEATS
    index = SpatialIndex(graph.space, graph.coords)
    jobs = [(int(size), rep) for size in sizes for rep in range(repeats)]

    def one(job: Tuple[int, int]) -> Optional[Dict[str, Any]]:
        size, rep = job
        try:
            ws = build_witness_set(graph, size, delta, [seed, size, rep], index)
        except SnapFailure as e:
            logger.warning(f"Skipping witness set (size {size}, repeat {rep}): {e}")
            return None
        upper = alpha_upper(graph, ws.U, mode, B)
        return {"size": size, "repeat": rep, "upper": upper, "max_snap": ws.to_dict()["max_snap"]}

    with ThreadPoolExecutor(max_workers=threads or settings.THREADS) as pool:
        results = list(pool.map(one, jobs))
    uppers = [r for r in results if r is not None]
    if not uppers:
        raise EmptyWitnessSet(f"no witness set could be snapped at delta={delta}")
    report = AlphaReport(
        estimate=min(r["upper"] for r in uppers),
        uppers=uppers,
        theoretical=alpha_target(graph.space),
        mode=mode,
        delta=delta,
        sizes=[int(s) for s in sizes],
        skipped=len(results) - len(uppers),
    )
    logger.info(f"Alpha estimate {report.estimate:.4f} (target {report.theoretical:.4f}) from {len(uppers)} sets")
    return report

# =============================================================================
# SENTENCES
# =============================================================================

def _check_budget(graph: GeoGraph, n: int) -> None:
    required = math.comb(graph.n, n)
    if required > settings.PHI_BUDGET:
        raise BudgetExceeded(f"C({graph.n}, {n}) subsets exceed the enumeration budget", required, settings.PHI_BUDGET)


def _chunk_min_max(adj: np.ndarray, combos: np.ndarray) -> int:
    """min over the subsets in the chunk of max_v |N_1(v) & U|"""
    counts = adj[:, combos].sum(axis=2)
    return int(counts.max(axis=0).min())


def min_max_count(graph: GeoGraph, n: int, threads: Optional[int] = None) -> int:
    """min over n-subsets U of max_v |N_1(v) & U|"""
    _check_budget(graph, n)
    adj = graph.adjacency.astype(np.int32)
    chunks = []
    it = itertools.combinations(range(graph.n), n)
    while True:
        block = list(itertools.islice(it, 4096))
        if not block:
            break
        chunks.append(np.asarray(block, dtype=int))
    if len(chunks) == 1:
        return _chunk_min_max(adj, chunks[0])
    with ThreadPoolExecutor(max_workers=threads or settings.THREADS) as pool:
        return min(pool.map(lambda c: _chunk_min_max(adj, c), chunks))


def phi_mn_holds(graph: GeoGraph, m: int, n: int) -> bool:
    """There is an n-set U with |N_1(v) & U| <= m for every v."""
    if m < 0 or n < 1:
        raise InvalidInput(f"phi_(m,n) needs m >= 0 and n >= 1, got m={m}, n={n}")
    if n > graph.n:
        return False
    if m >= n:
        return True
    return min_max_count(graph, n) <= m


def alpha_from_sentences(graph: GeoGraph, max_n: int, with_results: bool = False):
    """inf{m/n : phi_(m,n) holds, m <= n <= max_n}"""
    if graph.n == 0:
        raise EmptySample("alpha of an empty graph")
    best = Fraction(1)
    results: List[Tuple[int, int, bool]] = []
    for n in range(1, min(max_n, graph.n) + 1):
        m_star = min_max_count(graph, n)
        best = min(best, Fraction(m_star, n))
        if with_results:
            results.extend((m, n, m >= m_star) for m in range(n + 1))
    logger.info(f"Alpha from sentences up to n={max_n}: {best}")
    if with_results:
        return float(best), results
    return float(best)
