import argparse
import sys
from typing import Any, Dict

from crfconv.models.enums.crf import Activation, GuideSource, Schedule
from crfconv.schemas.config import RunConfig
from crfconv.tasks.smooth import smooth_cloud

NAME = "smooth"
HELP = "smooth the cloud's features with the continuous CRF and write the energy trace"

def add_arguments(parser: argparse.ArgumentParser) -> None:
  parser.add_argument("--steps", type=int, help="mean-field steps T")
  parser.add_argument("--schedule", choices=[s.value for s in Schedule])
  parser.add_argument("--tol", type=float, help="early-stopping tolerance (inf runs no step)")
  parser.add_argument("--epsilon", type=float, help="ridge added to c^T c")
  parser.add_argument("--activation", choices=[a.value for a in Activation], help="readout activation")
  parser.add_argument("--guide", choices=[g.value for g in GuideSource], help="input of the pairwise similarity")
  parser.add_argument("--unary-file", help="pointwise unary transform (JSON)")
  parser.add_argument("--projection-file", help="pointwise projection of the guide features (JSON)")
  parser.add_argument("--compat-file", help="d x d CSV holding c")
  parser.add_argument("--identity-compat", action="store_true", default=None, help="use C = I exactly")
  parser.add_argument("--check-exact", action="store_true", default=None, help="report the deviation from the exact minimizer")
  parser.add_argument("--output", help="smoothed cloud file name")
  parser.add_argument("--trace", help="energy trace file name")

def overrides(args: argparse.Namespace) -> Dict[str, Any]:
  return {
    "crf": {
      "steps": args.steps,
      "schedule": args.schedule,
      "tol": args.tol,
      "epsilon": args.epsilon,
      "activation": args.activation,
      "guide": args.guide,
      "unaryFile": args.unary_file,
      "projectionFile": args.projection_file,
      "compatFile": args.compat_file,
      "identityCompat": args.identity_compat,
      "checkExact": args.check_exact,
    },
    "output": {"cloud": args.output, "trace": args.trace},
  }

def run(cfg: RunConfig) -> int:
  summary = smooth_cloud(cfg)
  if summary.exact_deviation is not None:
    print(f"max deviation from exact solution: {summary.exact_deviation:.6e}", file=sys.stderr)
  return 0
