# backend/commands/ef.py
"""ef: Ehrenfeucht-Fraisse games between two circle graphs (play or batch)."""

import argparse
import logging
import sys

from commands.common import add_output, flag, load, switch
from config import settings
from models.experiment import EfRun
from services.efgame import RecoveredShifts, interactive_play, play, play_batch
from utils.artifacts import artifact, write_json, write_jsonl
from utils.graph_io import load_graph

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("ef", help="play EF games with a Duplicator strategy")
    parser.add_argument("action", nargs="?", default=None, choices=["play", "batch"])
    flag(parser, "--graph1")
    flag(parser, "--graph2")
    flag(parser, "--rounds", type=int)
    flag(parser, "--m", type=int, help="elementarity level left after the last round")
    flag(parser, "--games", type=int, help="games in a batch")
    flag(parser, "--spoiler", choices=["random", "boundary"])
    flag(parser, "--seed", type=int)
    flag(parser, "--oracle", choices=["coordinates", "recovery"], help="source of shifted circular order")
    switch(parser, "--interactive", help="read Spoiler moves from standard input")
    add_output(parser)
    parser.set_defaults(handler=handle)


def _read_line(prompt: str) -> str:
    sys.stderr.write(prompt)
    sys.stderr.flush()
    line = sys.stdin.readline()
    if not line:
        raise EOFError
    return line


def _say(text: str) -> None:
    print(text, file=sys.stderr)


def handle(args: argparse.Namespace) -> int:
    cfg = load(EfRun, args)
    G1, G2 = load_graph(cfg.graph1), load_graph(cfg.graph2)
    oracles = (RecoveredShifts(G1), RecoveredShifts(G2)) if cfg.oracle == "recovery" else None

    if cfg.action == "play":
        if cfg.interactive:
            result = interactive_play(G1, G2, cfg.rounds, cfg.m, read=_read_line, write=_say, oracles=oracles)
        else:
            result = play(G1, G2, cfg.rounds, cfg.m, cfg.spoiler, cfg.seed, oracles)
        write_json(artifact("ef_game", cfg, result.to_dict()), cfg.output)
        return 0

    results = play_batch(G1, G2, cfg.games, cfg.rounds, cfg.m, cfg.spoiler, cfg.seed,
                         threads=settings.THREADS, oracles=oracles)
    summary = {
        "games": len(results),
        "won": sum(r.won for r in results),
        "verified": sum(r.verified for r in results),
        "aborted": sum(r.aborted for r in results),
    }
    write_jsonl(artifact("ef_batch", cfg, summary), (r.to_dict() for r in results), cfg.output)
    return 0
