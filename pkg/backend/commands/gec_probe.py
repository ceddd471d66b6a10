# backend/commands/gec_probe.py
"""gec-probe: random g.e.c. probes as a JSON-lines stream, summary first."""

import argparse

import numpy as np

from commands.common import add_output, flag, load
from config import settings
from models.experiment import GecRun
from services.gec import gec_trials
from utils.artifacts import artifact, write_jsonl
from utils.graph_io import load_graph


def register(subparsers) -> None:
    parser = subparsers.add_parser("gec-probe", help="score the g.e.c. extension property on random probes")
    flag(parser, "--graph")
    flag(parser, "--trials", type=int)
    flag(parser, "--max-pattern", dest="max_pattern", type=int, help="bound on |A|+|B|")
    flag(parser, "--epsilon", type=float)
    flag(parser, "--seed", type=int)
    flag(parser, "--min-a", dest="min_a", type=int)
    add_output(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load(GecRun, args)
    graph = load_graph(cfg.graph)
    records = gec_trials(graph, cfg.trials, cfg.max_pattern, cfg.epsilon, cfg.seed, min_a=cfg.min_a,
                         threads=settings.THREADS)
    score = float(np.mean([r["found"] for r in records]))
    write_jsonl(artifact("gec", cfg, {"score": score, "trials": len(records)}), records, cfg.output)
    return 0
