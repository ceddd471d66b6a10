# backend/commands/common.py
"""Helpers shared by the subcommands: flag groups and config merging."""

import argparse
from typing import Any, Dict, Optional, Type, TypeVar

from models.experiment import ExperimentConfig
from utils.config_file import load_experiment

T = TypeVar("T", bound=ExperimentConfig)

# argparse keys that belong to the driver, not to any experiment record
GLOBAL_KEYS = ("config", "threads", "log_level", "log_format", "command", "handler")


def flag(parser: argparse.ArgumentParser, *names: str, **kwargs) -> None:
    """Every experiment flag defaults to None so config-file values survive the merge."""
    kwargs.setdefault("default", None)
    parser.add_argument(*names, **kwargs)


def switch(parser: argparse.ArgumentParser, *names: str, help: Optional[str] = None) -> None:
    parser.add_argument(*names, action="store_const", const=True, default=None, help=help)


def add_output(parser: argparse.ArgumentParser) -> None:
    flag(parser, "-o", "--output", help="write the artifact here instead of standard output")


def add_space(parser: argparse.ArgumentParser) -> None:
    flag(parser, "--space", choices=["circle", "sphere", "torus", "box"])
    flag(parser, "--L", dest="L", type=float, help="circle circumference")
    flag(parser, "--r", dest="r", type=float, help="sphere radius")
    flag(parser, "--sides", help="comma separated side lengths (torus, box)")


def experiment_flags(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS}


def load(model: Type[T], args: argparse.Namespace) -> T:
    return load_experiment(model, args.config, args.command, experiment_flags(args))
