# backend/services/recovery_report.py
"""
Agreement of the recovered structure with coordinate oracles on circle samples.
Coordinates are read in the loop's orientation, so a loop running against the
coordinates is compared against mirrored coordinates.
"""

import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from config import settings
from exceptions import ApproximationFailure, LoopNotFound, MismatchedSpace, NotFound
from models.graph import GeoGraph
from models.spaces import SpaceKind
from services.geometry import circular_order_array, pairwise_distances
from services.recovery import (
    OrientingLoop,
    RecoveredB,
    find_orienting_loop,
    get_frame,
    loop_orientation,
    recover_B,
    recover_order,
    recover_translate,
    suspect_integer_pairs,
)

logger = logging.getLogger(__name__)

QUANTILES = (0.5, 0.9, 0.95, 0.99)


def oriented_coords(graph: GeoGraph, loop: OrientingLoop) -> np.ndarray:
    if not graph.has_coords or graph.space.kind != SpaceKind.CIRCLE:
        raise MismatchedSpace("coordinate oracles need circle coordinates")
    x = graph.coords[:, 0]
    return x if loop_orientation(graph, loop) > 0 else np.mod(-x, graph.space.L)


def circle_gap(L: float, x, y) -> np.ndarray:
    d = np.mod(np.asarray(x) - np.asarray(y), L)
    return np.minimum(d, L - d)


def shifted_truth(u: np.ndarray, L: float, z: int, t: int, k: int, a, c, b,
                  band: float) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinate C(a+z, c+t, b+k) and a mask of triples clear of the band."""
    p, q, r = np.mod(u[a] + z, L), np.mod(u[c] + t, L), np.mod(u[b] + k, L)
    clear = (circle_gap(L, p, q) > band) & (circle_gap(L, q, r) > band) & (circle_gap(L, p, r) > band)
    return circular_order_array(p, q, r), clear


def b_agreement(graph: GeoGraph, B: RecoveredB, band: Optional[float] = None) -> Dict[str, Any]:
    band = settings.TOLERANCE_BAND if band is None else band
    D = pairwise_distances(graph.space, graph.coords)
    truth = D < 1.0
    off_diag = ~np.eye(graph.n, dtype=bool)
    clear = off_diag & (np.abs(D - 1.0) > band)
    agree = (B.matrix == truth) & clear
    return {
        "pairs_outside_band": int(clear.sum() // 2),
        "agreement": float(agree.sum() / max(clear.sum(), 1)),
        "false_positive": int((B.matrix & ~truth & clear).sum() // 2),
        "false_negative": int((~B.matrix & truth & clear).sum() // 2),
        "edges_outside_B": int((graph.adjacency & ~B.matrix).sum() // 2),
    }


def order_agreement(graph: GeoGraph, B: RecoveredB, loop: OrientingLoop, triples: int, seed: int,
                    band: Optional[float] = None, path_checks: int = 0) -> Dict[str, Any]:
    band = settings.TOLERANCE_BAND if band is None else band
    frame = get_frame(B, loop, band)
    u = oriented_coords(graph, loop)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, graph.n, size=(triples, 3))
    distinct = (idx[:, 0] != idx[:, 1]) & (idx[:, 1] != idx[:, 2]) & (idx[:, 0] != idx[:, 2])
    idx = idx[distinct]
    x, y, z = idx.T
    truth, clear = shifted_truth(u, graph.space.L, 0, 0, 0, x, y, z, band)
    got = frame.order(x, y, z)
    report = {
        "triples": int(clear.sum()),
        "agreement": float(np.mean(got[clear] == truth[clear])) if clear.any() else 1.0,
        "unplaced": frame.unplaced,
    }
    if path_checks:
        checked = idx[clear][:path_checks]
        same = sum(
            recover_order(B, loop, *t, band=band)
            == bool(frame.order(*t))
            for t in (tuple(int(v) for v in row) for row in checked)
        )
        report["path_vs_frame"] = float(same / max(len(checked), 1))
    return report


def translate_errors(graph: GeoGraph, B: RecoveredB, loop: OrientingLoop, z: int = 1,
                     limit: Optional[int] = None) -> Dict[str, Any]:
    u = oriented_coords(graph, loop)
    L = graph.space.L
    errors, failures = [], 0
    for x in range(graph.n if limit is None else min(limit, graph.n)):
        try:
            f = recover_translate(B, loop, x, z).vertex
        except (ApproximationFailure, NotFound):
            failures += 1
            continue
        errors.append(float(circle_gap(L, u[f], u[x] + z)))
    errs = np.asarray(errors)
    return {
        "z": z,
        "count": len(errors),
        "failures": failures,
        "quantiles": {str(q): float(np.quantile(errs, q)) for q in QUANTILES} if len(errs) else {},
        "within_band": float(np.mean(errs < settings.TOLERANCE_BAND)) if len(errs) else 0.0,
    }


def recovery_report(
    graph: GeoGraph,
    B: Optional[RecoveredB] = None,
    loop: Optional[OrientingLoop] = None,
    loop_mode: str = "adjacency_search",
    triples: int = 10_000,
    seed: int = 0,
    band: Optional[float] = None,
    path_checks: int = 0,
    translate_limit: Optional[int] = None,
) -> Dict[str, Any]:
    """Run the pipeline from adjacency and score it against coordinates when present."""
    B = B if B is not None else recover_B(graph)
    report: Dict[str, Any] = {"B": B.summary(), "band": settings.TOLERANCE_BAND if band is None else band}
    if graph.has_coords:
        report["B"].update(b_agreement(graph, B, band))
    try:
        loop = loop if loop is not None else find_orienting_loop(graph, loop_mode, B=B, band=band)
    except LoopNotFound as e:
        logger.warning(f"No orienting loop: {e}")
        report["loop"] = None
        return report
    report["loop"] = loop.to_dict()
    scope = range(graph.n if translate_limit is None else min(translate_limit, graph.n))
    report["suspect_integer_pairs"] = [list(p) for p in suspect_integer_pairs(B, loop, band, vertices=scope)[:20]]
    if graph.has_coords and graph.space.kind == SpaceKind.CIRCLE:
        report["loop"]["orientation"] = loop_orientation(graph, loop)
        report["order"] = order_agreement(graph, B, loop, triples, seed, band, path_checks)
        report["translate"] = translate_errors(graph, B, loop, 1, translate_limit)
    logger.info(f"Recovery report: loop n_L={loop.n_L}, order {report.get('order', {}).get('agreement')}")
    return report
