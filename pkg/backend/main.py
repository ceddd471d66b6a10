# backend/main.py
"""
geograph command-line driver.

    python main.py gen --space circle --L 5 --n 1000 --p 0.5 --seed 1 -o g.json
    python main.py alpha --graph g.json --sizes 200,500
    python main.py verify --suite all --quick

Exit codes: 0 success, 1 operational error, 2 usage error.
"""

import argparse
import logging
import sys
from typing import List, Optional

from commands import alpha, ef, gec_probe, gen, recover, sample, urysohn, verify
from config import settings
from exceptions import GeographError
from utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)

COMMANDS = (gen, sample, alpha, recover, gec_probe, ef, urysohn, verify)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geograph", description="Model theory of geometric random graphs at desk scale")
    parser.add_argument("--config", help="INI file with one [section] per subcommand")
    parser.add_argument("--threads", type=int, help=f"worker cap (default {settings.THREADS})")
    parser.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-format", dest="log_format", choices=["json", "text"])
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.log_level, args.log_format)
    if args.threads is not None:
        if args.threads < 1:
            parser.print_usage(sys.stderr)
            print("geograph: error: --threads must be positive", file=sys.stderr)
            return 2
        settings.THREADS = args.threads
    if args.command == "ef" and getattr(args, "interactive", None):
        settings.THREADS = 1

    try:
        return args.handler(args)
    except GeographError as e:
        logger.error(f"{args.command} failed: {e}", extra={"error": type(e).__name__})
        return 1


if __name__ == "__main__":
    sys.exit(run())
