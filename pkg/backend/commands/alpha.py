# backend/commands/alpha.py
"""alpha: estimate alpha(G) from witness sets and optionally from the phi sentences."""

import argparse
import logging

from commands.common import add_output, flag, load
from config import settings
from models.experiment import AlphaRun
from services.alpha import ALPHA_MODES, alpha_estimate, alpha_from_sentences
from utils.artifacts import artifact, write_json
from utils.graph_io import load_graph

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("alpha", help="estimate the neighbourhood fraction alpha(G)")
    flag(parser, "--graph", help="graph file with coordinates")
    flag(parser, "--sizes", help="comma separated witness-set sizes")
    flag(parser, "--delta", type=float, help="snapping tolerance (default from the ball measure)")
    flag(parser, "--seed", type=int)
    flag(parser, "--repeats", type=int, help="witness sets per size")
    flag(parser, "--mode", choices=list(ALPHA_MODES))
    flag(parser, "--sentences", type=int, help="also evaluate the phi_(m,n) sentences up to this n")
    flag(parser, "--csv", help="per-size table")
    add_output(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load(AlphaRun, args)
    graph = load_graph(cfg.graph)
    report = alpha_estimate(graph, cfg.sizes, cfg.delta, cfg.seed, cfg.repeats, cfg.mode,
                            threads=settings.THREADS)
    if cfg.sentences:
        value, results = alpha_from_sentences(graph, cfg.sentences, with_results=True)
        report.phi_mn_results = results
        body = {**report.to_dict(), "from_sentences": value}
    else:
        body = report.to_dict()
    if cfg.csv:
        report.write_csv(cfg.csv)
    write_json(artifact("alpha", cfg, body), cfg.output)
    return 0
