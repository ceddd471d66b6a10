# backend/commands/gen.py
"""gen: sample a space and draw the random graph on the sample."""

import argparse
import logging

from commands.common import add_output, add_space, flag, load, switch
from config import settings
from models.experiment import GenRun
from models.graph import SampleConfig
from services.graphgen import generate, strip_coordinates
from services.sampling import sample_iid
from utils.artifacts import effective_config, write_json
from utils.graph_io import graph_to_dict, save_graph

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen", help="generate a geometric random graph")
    add_space(parser)
    flag(parser, "--n", type=int, help="number of vertices")
    flag(parser, "--p", type=float, help="edge probability below the unit threshold")
    flag(parser, "--seed", type=int, help="sample seed")
    flag(parser, "--edge-seed", dest="edge_seed", type=int, help="edge coin seed (defaults to --seed)")
    flag(parser, "--integer-margin", dest="integer_margin", type=float)
    switch(parser, "--strip", help="drop coordinates from the written graph")
    add_output(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load(GenRun, args)
    margin = settings.INTEGER_MARGIN if cfg.integer_margin is None else cfg.integer_margin
    sample = sample_iid(cfg.descriptor(), SampleConfig(n=cfg.n, seed=cfg.seed, integer_margin=margin,
                                                       max_rejections=settings.MAX_REJECTIONS))
    graph = generate(sample, cfg.p, cfg.seed if cfg.edge_seed is None else cfg.edge_seed)
    if cfg.strip:
        graph = strip_coordinates(graph)
    if cfg.output:
        save_graph(graph, cfg.output, effective_config(cfg))
    else:
        write_json(graph_to_dict(graph, effective_config(cfg)))
    return 0
