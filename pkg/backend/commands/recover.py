# backend/commands/recover.py
"""recover: rebuild B, the orienting loop and the circular order from adjacency alone."""

import argparse

from commands.common import add_output, flag, load
from models.experiment import RecoverRun
from services.recovery import LOOP_MODES
from services.recovery_report import recovery_report
from utils.artifacts import artifact, write_json
from utils.graph_io import load_graph


def register(subparsers) -> None:
    parser = subparsers.add_parser("recover", help="recover geometry from adjacency and score it")
    flag(parser, "--graph")
    flag(parser, "--loop-mode", dest="loop_mode", choices=list(LOOP_MODES))
    flag(parser, "--triples", type=int, help="random triples scored against coordinates")
    flag(parser, "--seed", type=int)
    flag(parser, "--band", type=float, help="tolerance band excluded from scoring")
    flag(parser, "--translate-limit", dest="translate_limit", type=int)
    flag(parser, "--path-checks", dest="path_checks", type=int,
         help="triples also decided by the path-search formula")
    add_output(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load(RecoverRun, args)
    graph = load_graph(cfg.graph)
    report = recovery_report(graph, loop_mode=cfg.loop_mode, triples=cfg.triples, seed=cfg.seed,
                             band=cfg.band, path_checks=cfg.path_checks, translate_limit=cfg.translate_limit)
    write_json(artifact("recovery", cfg, report), cfg.output)
    return 0
