# backend/services/acceptance.py
"""
Acceptance harness behind `verify`: named suites of seeded desk-scale
experiments, each reduced to threshold checks. `quick` shrinks every suite to
a smoke-test scale with proportionally looser thresholds.
"""

import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from exceptions import GeographError
from models.graph import GeoGraph, SampleConfig
from models.metric import band
from models.spaces import SpaceDescriptor
from services.alpha import alpha_estimate, alpha_from_sentences
from services.efgame import PartialMap, check_n_elementary, play_batch
from services.evaluator import evaluate
from services.gec import gec_score
from services.geometry import alpha_target, circular_order_array, diameter
from services.graphgen import generate
from services.logic_check import VARIABLES, naive_evaluate, random_formula, random_structure
from services.recovery import recover_B, recover_interval
from services.recovery_formulas import dsl_B, dsl_interval, structure
from services.recovery_report import recovery_report
from services.sampling import sample_iid
from services.urysohn import (
    back_and_forth,
    cn_violations,
    edge_violations,
    extend_map,
    extension_distances,
    preserves_cn,
    rado_back_and_forth,
    random_instance,
    random_rational_graph,
    validate_metric,
    verify_extension_triangles,
)

logger = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "passed": self.passed}


def at_least(name: str, value: float, threshold: float) -> Check:
    return Check(name, float(value), float(threshold), bool(value >= threshold))


def at_most(name: str, value: float, threshold: float) -> Check:
    return Check(name, float(value), float(threshold), bool(value <= threshold))


@dataclass
class SuiteResult:
    suite: str
    checks: List[Check] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "details": self.details,
        }


@dataclass(frozen=True)
class Scale:
    """Sizes and thresholds for one run of the suites"""
    lemma_triples: int = 100_000
    alpha_n: int = 4000
    alpha_sizes: Sequence[int] = (200, 500)
    alpha_seeds: int = 5
    alpha_hits: int = 4
    alpha_tolerance: float = 0.05
    sphere_n: int = 6000
    sphere_sizes: Sequence[int] = (2000, 6000)
    sphere_tolerance: float = 0.03
    separation: float = 0.15
    sentence_graphs: int = 200
    sentence_max_n: int = 12
    recovery_n: int = 3000
    recovery_seed: int = 5
    recovery_B: float = 0.99
    recovery_order: float = 0.98
    recovery_translate: float = 0.95
    ef_n: int = 5000
    ef_seeds: Tuple[int, int] = (21, 22)
    ef_games: int = 100
    ef_wins: int = 90
    gec_pairs: int = 10
    gec_small: int = 1000
    gec_large: int = 4000
    gec_probes: int = 200
    gec_wins: int = 9
    urysohn_instances: int = 1000
    logic_graphs: int = 50
    logic_max_n: int = 200
    logic_formulas: int = 1000


FULL = Scale()
QUICK = Scale(
    lemma_triples=10_000,
    alpha_n=1500, alpha_sizes=(100,), alpha_seeds=2, alpha_hits=1, alpha_tolerance=0.1,
    sphere_n=1500, sphere_sizes=(1500,), sphere_tolerance=0.08, separation=0.1,
    sentence_graphs=30, sentence_max_n=9,
    recovery_n=1200, recovery_seed=11, recovery_B=0.98, recovery_order=0.95, recovery_translate=0.85,
    ef_n=1500, ef_seeds=(1, 2), ef_games=10, ef_wins=8,
    gec_pairs=3, gec_small=500, gec_large=2000, gec_probes=60, gec_wins=2,
    urysohn_instances=60,
    logic_graphs=8, logic_max_n=80, logic_formulas=150,
)


def _circle_graph(L: float, n: int, seed: int, p: float = 0.5) -> GeoGraph:
    sample = sample_iid(SpaceDescriptor.circle(L), SampleConfig(n=n, seed=seed, integer_margin=1e-6))
    return generate(sample, p, seed)

# =============================================================================
# SUITES
# =============================================================================

def suite_lemma(scale: Scale, seed: int, threads: int) -> SuiteResult:
    """C(a,b,c) iff 0 < d1 < d2 iff C(a,e,c) on seeded triples for several circumferences."""
    result = SuiteResult("lemma")
    for i, L in enumerate((3.0, 5.0, 5.3, 7.25)):
        rng = np.random.default_rng([seed, i])
        a, b, c = (rng.random(scale.lemma_triples) * L for _ in range(3))
        keep = (a != b) & (b != c) & (a != c)
        a, b, c = a[keep], b[keep], c[keep]
        d1, d2 = np.mod(b - a, L), np.mod(c - a, L)
        e = np.mod(a + (d2 - d1), L)
        order = circular_order_array(a, b, c)
        same = (order == ((0 < d1) & (d1 < d2))) & (order == circular_order_array(a, e, c))
        result.checks.append(at_least(f"L={L}", float(np.mean(same)), 1.0))
    return result


def _both_modes(graph: GeoGraph, sizes: Sequence[int], delta: float, seed: int, threads: int) -> Dict[str, float]:
    return {
        mode: alpha_estimate(graph, sizes, delta=delta, seed=seed, mode=mode, threads=threads).estimate
        for mode in ("gec_closure", "graph")
    }


def suite_alpha(scale: Scale, seed: int, threads: int) -> SuiteResult:
    """
    Bands are checked on the closure estimate. The adjacency estimate over the
    same witness sets is reported next to it with its gap to 1/Vl; at finite n
    it stays well below 1/Vl.
    """
    result = SuiteResult("alpha")
    estimates: Dict[float, List[Dict[str, float]]] = {}
    for L in (5.0, 3.0):
        target = alpha_target(SpaceDescriptor.circle(L))
        estimates[L] = [
            _both_modes(_circle_graph(L, scale.alpha_n, seed + s), scale.alpha_sizes, 0.05, seed + s, threads)
            for s in range(scale.alpha_seeds)
        ]
        hits = sum(abs(e["gec_closure"] - target) <= scale.alpha_tolerance for e in estimates[L])
        result.checks.append(at_least(f"circle L={L} seeds within band", hits, scale.alpha_hits))
    medians = {L: float(np.median([e["gec_closure"] for e in runs])) for L, runs in estimates.items()}
    result.checks.append(at_least("L=3 vs L=5 separation", abs(medians[3.0] - medians[5.0]), scale.separation))

    sphere = SpaceDescriptor.sphere(1.0)
    sample = sample_iid(sphere, SampleConfig(n=scale.sphere_n, seed=seed, integer_margin=1e-6))
    sphere_est = _both_modes(generate(sample, 0.5, seed), scale.sphere_sizes, diameter(sphere), seed, threads)
    result.checks.append(at_most("sphere r=1 error", abs(sphere_est["gec_closure"] - alpha_target(sphere)),
                                 scale.sphere_tolerance))

    def gaps(space: SpaceDescriptor, runs: List[Dict[str, float]]) -> List[float]:
        return [e["graph"] - alpha_target(space) for e in runs]

    result.details = {
        "circle": {str(L): runs for L, runs in estimates.items()},
        "circle_graph_gap": {str(L): gaps(SpaceDescriptor.circle(L), runs) for L, runs in estimates.items()},
        "sphere": sphere_est,
        "sphere_graph_gap": gaps(sphere, [sphere_est])[0],
    }
    return result


def exhaustive_alpha(graph: GeoGraph) -> float:
    """inf over nonempty U of max_v |N(v) & U| / |U|, by enumerating every subset"""
    n = graph.n
    masks = ((np.arange(1, 2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.int64)
    counts = masks @ graph.adjacency.astype(np.int64).T
    return float(np.min(counts.max(axis=1) / masks.sum(axis=1)))


def suite_sentences(scale: Scale, seed: int, threads: int) -> SuiteResult:
    result = SuiteResult("sentences")
    rng = np.random.default_rng(seed)
    agree = 0
    for trial in range(scale.sentence_graphs):
        n = int(rng.integers(1, scale.sentence_max_n + 1))
        edges = nx.gnp_random_graph(n, float(rng.random()), seed=int(rng.integers(0, 2 ** 31))).edges()
        adj = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            adj[u, v] = adj[v, u] = True
        graph = GeoGraph(adjacency=adj, p=0.5, seed=trial)
        agree += abs(alpha_from_sentences(graph, n) - exhaustive_alpha(graph)) < 1e-12
    result.checks.append(at_least("agreement with exhaustive oracle", agree / scale.sentence_graphs, 1.0))
    return result


def suite_recovery(scale: Scale, seed: int, threads: int) -> SuiteResult:
    result = SuiteResult("recovery")
    graph = _circle_graph(6.0, scale.recovery_n, seed + scale.recovery_seed)
    report = recovery_report(graph, triples=10_000, seed=seed, translate_limit=500)
    result.checks.append(at_least("B agreement", report["B"]["agreement"], scale.recovery_B))
    result.checks.append(at_least("orienting loop found", report["loop"] is not None, 1))
    if report["loop"] is not None:
        result.checks.append(at_least("order agreement", report["order"]["agreement"], scale.recovery_order))
        result.checks.append(at_least("translate within band", report["translate"]["within_band"],
                                      scale.recovery_translate))
    result.details = {"B": report["B"], "loop": report["loop"]}
    return result


def suite_ef(scale: Scale, seed: int, threads: int) -> SuiteResult:
    result = SuiteResult("ef")
    G1, G2 = (_circle_graph(5.3, scale.ef_n, seed + s) for s in scale.ef_seeds)
    games = play_batch(G1, G2, games=scale.ef_games, rounds=3, m=1, seed=seed, threads=threads)
    won = [g for g in games if g.won]
    reverified = sum(bool(check_n_elementary(G1, G2, PartialMap(tuple(map(tuple, g.pairs))), 1)) for g in won)
    result.checks.append(at_least("games won by Duplicator", len(won), scale.ef_wins))
    result.checks.append(at_least("won games re-verified", reverified, len(won)))
    result.details = {"failed_rounds": [g.failed_round for g in games if not g.won]}
    return result


def suite_gec(scale: Scale, seed: int, threads: int) -> SuiteResult:
    result = SuiteResult("gec")
    scores = []
    for s in range(scale.gec_pairs):
        small = gec_score(_circle_graph(5.0, scale.gec_small, seed + s), scale.gec_probes, 4, 0.05,
                          seed=seed + s, threads=threads)
        large = gec_score(_circle_graph(5.0, scale.gec_large, seed + s), scale.gec_probes, 4, 0.05,
                          seed=seed + s, threads=threads)
        scores.append((small, large))
    wins = sum(large >= small for small, large in scores)
    result.checks.append(at_least("larger sample scores at least as high", wins, scale.gec_wins))
    result.details = {"scores": scores}
    return result


def _urysohn_instance(seed: int) -> Optional[str]:
    """None if every extension check holds, else the first failure."""
    rng = random.Random(seed)
    try:
        X, Y, cn_map, x0 = random_instance(rng)
        assignment = extension_distances(X, Y, cn_map, x0)
        for x, y in cn_map.pairs:
            n = band(X.dist(x0, x))
            if not n - 1 < assignment[y] < n:
                return f"distance to {y} leaves band {n}"
        if verify_extension_triangles(Y, assignment):
            return "triangle violated"
        step = extend_map(X, Y, cn_map, x0, rng=rng)
        if validate_metric(step.Y) or cn_violations(X, step.Y, step.cn_map):
            return "extension breaks the metric or C_n"
        rounds = back_and_forth(X, Y, 10, seed, "exact", cn_map)
        if not rounds.verified:
            return "back-and-forth map fails C_n"
        G1, G2 = random_rational_graph(X, 0.5, rng), random_rational_graph(Y, 0.5, rng)
        rado_map, G1, G2, _ = rado_back_and_forth(G1, G2, 10, seed, "exact")
        if edge_violations(G1, G2, rado_map) or not preserves_cn(G1.space, G2.space, rado_map):
            return "rado extension breaks E or C_n"
    except GeographError as e:
        return f"{type(e).__name__}: {e}"
    return None


def suite_urysohn(scale: Scale, seed: int, threads: int) -> SuiteResult:
    result = SuiteResult("urysohn")
    seeds = [seed * 100_000 + i for i in range(scale.urysohn_instances)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        failures = [(s, f) for s, f in zip(seeds, pool.map(_urysohn_instance, seeds)) if f is not None]
    ok = 1 - len(failures) / len(seeds)
    result.checks.append(at_least("instances passing every check", ok, 1.0))
    result.details = {"failures": [{"seed": s, "reason": f} for s, f in failures[:10]]}
    return result


def suite_logic(scale: Scale, seed: int, threads: int) -> SuiteResult:
    result = SuiteResult("logic")
    rng = np.random.default_rng(seed)
    agree = 0
    for g in range(scale.logic_graphs):
        n = int(rng.integers(20, scale.logic_max_n + 1))
        graph = _circle_graph(float(rng.uniform(2.5, 6.0)), n, seed + g, p=float(rng.uniform(0.3, 0.9)))
        B = recover_B(graph)
        table = dsl_B(graph)
        np.fill_diagonal(table, False)
        same = np.array_equal(B.matrix, table)
        view = structure(graph, B)
        pairs = np.argwhere(np.triu(B.matrix))
        picked = rng.choice(len(pairs), size=min(5, len(pairs)), replace=False) if len(pairs) else []
        for a, b in pairs[picked]:
            same &= recover_interval(B, int(a), int(b)) == dsl_interval(view, int(a), int(b))
        agree += bool(same)
    result.checks.append(at_least("formula vs direct recovery", agree / scale.logic_graphs, 1.0))

    matches = 0
    for _ in range(scale.logic_formulas):
        n = int(rng.integers(1, 9))
        s = random_structure(rng, n)
        f = random_formula(rng, 4)
        env = {v: int(rng.integers(0, n)) for v in VARIABLES}
        matches += evaluate(s, f, env) == naive_evaluate(s, f, env)
    result.checks.append(at_least("evaluator vs naive semantics", matches / scale.logic_formulas, 1.0))
    return result


SUITE_RUNNERS: Dict[str, Callable[[Scale, int, int], SuiteResult]] = {
    "lemma": suite_lemma,
    "alpha": suite_alpha,
    "sentences": suite_sentences,
    "recovery": suite_recovery,
    "ef": suite_ef,
    "gec": suite_gec,
    "urysohn": suite_urysohn,
    "logic": suite_logic,
}

# =============================================================================
# DRIVER
# =============================================================================

def run_suites(names: Sequence[str], quick: bool = False, seed: int = 0, threads: int = 1) -> List[SuiteResult]:
    scale = QUICK if quick else FULL
    results = []
    for name in names:
        started = time.perf_counter()
        res = SUITE_RUNNERS[name](scale, seed, threads)
        logger.info(f"Suite {name}: {'passed' if res.passed else 'FAILED'} in {time.perf_counter() - started:.1f}s")
        for check in res.checks:
            if not check.passed:
                logger.warning(f"{name}: {check.name} = {check.value} (threshold {check.threshold})")
        results.append(res)
    return results


def summary_table(results: Sequence[SuiteResult]) -> pd.DataFrame:
    rows = [{"suite": r.suite, **c.to_dict()} for r in results for c in r.checks]
    return pd.DataFrame(rows, columns=["suite", "name", "value", "threshold", "passed"])
