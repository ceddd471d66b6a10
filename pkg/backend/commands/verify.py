# backend/commands/verify.py
"""verify: run the acceptance suites; exit 1 when any check fails."""

import argparse
import logging

from commands.common import add_output, flag, load, switch
from config import settings
from models.experiment import SUITES, VerifyRun
from services.acceptance import run_suites, summary_table
from utils.artifacts import artifact, write_json

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="run the acceptance suites")
    flag(parser, "--suite", choices=list(SUITES) + ["all"])
    switch(parser, "--quick", help="smoke-test scale")
    flag(parser, "--seed", type=int)
    flag(parser, "--csv", help="one row per check")
    add_output(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load(VerifyRun, args)
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    results = run_suites(names, cfg.quick, cfg.seed, settings.THREADS)
    passed = all(r.passed for r in results)
    if cfg.csv:
        summary_table(results).to_csv(cfg.csv, index=False)
    write_json(artifact("verify", cfg, {"passed": passed, "suites": [r.to_dict() for r in results]}), cfg.output)
    if not passed:
        logger.error(f"Acceptance failed: {[r.suite for r in results if not r.passed]}")
    return 0 if passed else 1
