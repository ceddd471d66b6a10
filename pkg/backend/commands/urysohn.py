# backend/commands/urysohn.py
"""urysohn: C_n-preserving extensions over rational metric spaces (extend, bnf, rado)."""

import argparse
import logging
import random
from typing import Any, Dict, Optional

from commands.common import add_output, flag, load
from models.experiment import UrysohnRun
from models.metric import CnMap, RationalGraph
from services.urysohn import (
    back_and_forth,
    edge_violations,
    extend_map,
    preserves_cn,
    rado_back_and_forth,
    random_rational_graph,
    random_space,
    verify_extension_triangles,
)
from utils.artifacts import artifact, write_json
from utils.graph_io import load_cn_map, load_metric, load_rational_graph

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("urysohn", help="extend partial maps between rational metric spaces")
    parser.add_argument("action", nargs="?", default=None, choices=["extend", "bnf", "rado"])
    flag(parser, "--space1", help="rational metric space file (domain side)")
    flag(parser, "--space2", help="rational metric space file (target side)")
    flag(parser, "--graph1", help="rational graph file for rado")
    flag(parser, "--graph2")
    flag(parser, "--map", help="file with the current map's label pairs")
    flag(parser, "--x0", help="point to match")
    flag(parser, "--side", choices=["forth", "back"])
    flag(parser, "--mode", choices=["exact", "snap"])
    flag(parser, "--rounds", type=int)
    flag(parser, "--seed", type=int)
    flag(parser, "--points", type=int, help="size of generated spaces when no file is given")
    flag(parser, "--p", type=float)
    add_output(parser)
    parser.set_defaults(handler=handle)


def _map(path: Optional[str]) -> CnMap:
    return load_cn_map(path) if path else CnMap()


def _extend(cfg: UrysohnRun) -> Dict[str, Any]:
    X, Y = load_metric(cfg.space1), load_metric(cfg.space2)
    result = extend_map(X, Y, _map(cfg.map), cfg.x0, cfg.side, cfg.mode, random.Random(cfg.seed))
    target = result.Y if result.side == "forth" else result.X
    return {
        **result.to_dict(),
        "triangles": [v.to_dict() for v in verify_extension_triangles(
            Y if cfg.side == "forth" else X, result.assignment)],
        "target_space": target.to_dict(),
    }


def _bnf(cfg: UrysohnRun) -> Dict[str, Any]:
    rng = random.Random(cfg.seed)
    U1 = load_metric(cfg.space1) if cfg.space1 else random_space(cfg.points, rng, prefix="x")
    U2 = load_metric(cfg.space2) if cfg.space2 else random_space(cfg.points, rng, prefix="y")
    return back_and_forth(U1, U2, cfg.rounds, cfg.seed, cfg.mode, _map(cfg.map)).to_dict()


def _graph(path: Optional[str], cfg: UrysohnRun, rng: random.Random, prefix: str) -> RationalGraph:
    if path:
        return load_rational_graph(path)
    return random_rational_graph(random_space(cfg.points, rng, prefix=prefix), cfg.p, rng)


def _rado(cfg: UrysohnRun) -> Dict[str, Any]:
    rng = random.Random(cfg.seed)
    G1, G2 = _graph(cfg.graph1, cfg, rng, "x"), _graph(cfg.graph2, cfg, rng, "y")
    cn_map, G1, G2, steps = rado_back_and_forth(G1, G2, cfg.rounds, cfg.seed, cfg.mode)
    return {
        "map": cn_map.to_dict(),
        "steps": steps,
        "edge_violations": [list(e) for e in edge_violations(G1, G2, cn_map)],
        "preserves_cn": preserves_cn(G1.space, G2.space, cn_map),
        "G1": G1.to_dict(),
        "G2": G2.to_dict(),
    }


ACTIONS = {"extend": _extend, "bnf": _bnf, "rado": _rado}


def handle(args: argparse.Namespace) -> int:
    cfg = load(UrysohnRun, args)
    body = ACTIONS[cfg.action](cfg)
    write_json(artifact(f"urysohn_{cfg.action}", cfg, body), cfg.output)
    return 0
