import argparse
import logging
from typing import Any, Dict

from crfconv.schemas.config import RunConfig
from crfconv.tasks.graph import build_graph_file

logger = logging.getLogger(__name__)

NAME = "build-graph"
HELP = "build a neighbor graph (optionally on a farthest-point sample) and write its edge list"

def add_arguments(parser: argparse.ArgumentParser) -> None:
  parser.add_argument("--dilation", type=int, help="dilation of the dilated kNN graph")
  parser.add_argument("--radius", type=float, help="squared-distance threshold of the radius graph")
  parser.add_argument("--sample-ratio", type=float, help="farthest point sampling ratio applied first")
  parser.add_argument("--output", help="edge list file name")

def overrides(args: argparse.Namespace) -> Dict[str, Any]:
  return {
    "graph": {"dilation": args.dilation, "radius": args.radius, "sampleRatio": args.sample_ratio},
    "output": {"graph": args.output},
  }

def run(cfg: RunConfig) -> int:
  summary = build_graph_file(cfg)
  logger.info("graph: %d nodes, %d edges%s", summary.num_nodes, summary.num_edges, " (sampled)" if summary.sampled else "")
  return 0
