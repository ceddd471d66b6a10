# backend/commands/sample.py
"""sample: write an i.i.d. sample without drawing edges."""

import argparse

from commands.common import add_output, add_space, flag, load
from config import settings
from models.experiment import SampleRun
from models.graph import SampleConfig
from services.sampling import export_sample, sample_iid, sample_to_dict
from utils.artifacts import effective_config, write_json


def register(subparsers) -> None:
    parser = subparsers.add_parser("sample", help="draw an integer-distance-free sample of a space")
    add_space(parser)
    flag(parser, "--n", type=int)
    flag(parser, "--seed", type=int)
    flag(parser, "--integer-margin", dest="integer_margin", type=float)
    add_output(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load(SampleRun, args)
    margin = settings.INTEGER_MARGIN if cfg.integer_margin is None else cfg.integer_margin
    sample = sample_iid(cfg.descriptor(), SampleConfig(n=cfg.n, seed=cfg.seed, integer_margin=margin,
                                                       max_rejections=settings.MAX_REJECTIONS))
    if cfg.output:
        export_sample(sample, cfg.output, effective_config(cfg))
    else:
        write_json(sample_to_dict(sample, effective_config(cfg)))
    return 0
