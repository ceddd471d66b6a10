# backend/utils/graph_io.py
"""
Graph file codec: JSON header, optional coordinates, sorted edge list.
Rational metric spaces and graphs over them carry distances as "p/q" strings.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Any, Optional, Union

import numpy as np

from config import settings
from exceptions import GraphFormatError, MismatchedSpace
from models.files import GraphFile, MetricSpaceFile, RationalGraphFile
from models.graph import GeoGraph
from models.metric import CnMap, RationalGraph, RationalMetricSpace
from models.spaces import SpaceDescriptor

logger = logging.getLogger(__name__)


def graph_to_dict(graph: GeoGraph, config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "format_version": settings.FORMAT_VERSION,
        "space": graph.space.to_dict() if graph.space is not None else None,
        "p": graph.p,
        "seed": graph.seed,
        "n": graph.n,
        "integer_margin": graph.integer_margin,
        "sample_seed": graph.sample_seed,
    }
    if graph.has_coords:
        data["coords"] = graph.coords.tolist()
    data["edges"] = [[u, v] for u, v in graph.edges()]
    if config is not None:
        data["effective_config"] = config
    return data


def graph_from_dict(data: Dict[str, Any]) -> GeoGraph:
    record = GraphFile.parse(data)
    adj = np.zeros((record.n, record.n), dtype=bool)
    if record.edges:
        e = np.asarray(record.edges, dtype=int)
        adj[e[:, 0], e[:, 1]] = True
        adj[e[:, 1], e[:, 0]] = True
    space = SpaceDescriptor.from_dict(record.space) if record.space is not None else None
    try:
        return GeoGraph(
            adjacency=adj,
            p=record.p,
            seed=record.seed,
            space=space,
            coords=np.asarray(record.coords, dtype=float) if record.coords is not None else None,
            integer_margin=record.integer_margin,
            sample_seed=record.sample_seed,
            meta={"effective_config": record.effective_config} if record.effective_config else {},
        )
    except MismatchedSpace as e:
        raise GraphFormatError(f"inconsistent graph file: {e}") from e


def save_graph(graph: GeoGraph, path: Union[str, Path], config: Optional[Dict[str, Any]] = None) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph, config)))
    logger.info(f"Wrote graph n={graph.n} edges={graph.edge_count()} to {path}")


def load_graph(path: Union[str, Path]) -> GeoGraph:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise GraphFormatError(f"cannot read graph file {path}: {e}") from e
    graph = graph_from_dict(data)
    logger.debug(f"Loaded graph n={graph.n} from {path}")
    return graph


def _read_json(path: Union[str, Path], what: str) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise GraphFormatError(f"cannot read {what} file {path}: {e}") from e

# =============================================================================
# RATIONAL METRIC SPACES
# =============================================================================

def metric_to_dict(space: RationalMetricSpace, config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    data = {"format_version": settings.FORMAT_VERSION, **space.to_dict()}
    if config is not None:
        data["effective_config"] = config
    return data


def metric_from_dict(data: Dict[str, Any]) -> RationalMetricSpace:
    record = MetricSpaceFile.parse(data)
    return RationalMetricSpace.from_matrix(record.labels, record.d, record.integer_distance_free)


def load_metric(path: Union[str, Path]) -> RationalMetricSpace:
    return metric_from_dict(_read_json(path, "metric space"))


def save_metric(space: RationalMetricSpace, path: Union[str, Path], config: Optional[Dict[str, Any]] = None) -> None:
    Path(path).write_text(json.dumps(metric_to_dict(space, config), indent=1))
    logger.info(f"Wrote metric space of {len(space)} points to {path}")


def rational_graph_from_dict(data: Dict[str, Any]) -> RationalGraph:
    record = RationalGraphFile.parse(data)
    space = RationalMetricSpace.from_matrix(record.space.labels, record.space.d, record.space.integer_distance_free)
    try:
        return RationalGraph(space, frozenset(frozenset(e) for e in record.edges), record.p)
    except MismatchedSpace as e:
        raise GraphFormatError(f"inconsistent rational graph file: {e}") from e


def load_rational_graph(path: Union[str, Path]) -> RationalGraph:
    return rational_graph_from_dict(_read_json(path, "rational graph"))


def load_cn_map(path: Union[str, Path]) -> CnMap:
    data = _read_json(path, "map")
    try:
        return CnMap(tuple((str(a), str(b)) for a, b in data["pairs"]))
    except (KeyError, TypeError, ValueError) as e:
        raise GraphFormatError(f"map file {path} needs a list of label pairs: {e}") from e
