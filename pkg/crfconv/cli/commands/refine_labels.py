import argparse
from typing import Any, Dict

from crfconv.models.enums.labels import CompatPreset
from crfconv.schemas.config import RunConfig
from crfconv.tasks.refine import refine_labels

NAME = "refine-labels"
HELP = "refine per-point label probabilities with the discrete CRF"

def add_arguments(parser: argparse.ArgumentParser) -> None:
  parser.add_argument("--probabilities", help="N x L unary probabilities CSV")
  parser.add_argument("--steps", type=int, help="message-passing steps")
  parser.add_argument("--compat", choices=[c.value for c in CompatPreset], help="label compatibility preset")
  parser.add_argument("--compat-file", help="L x L label compatibility CSV")
  parser.add_argument("--kernel-file", help="Gaussian kernel mixture (JSON)")
  parser.add_argument("--zero-kernel", action="store_true", default=None, help="set every pairwise weight to zero")
  parser.add_argument("--output", help="refined probabilities file name")
  parser.add_argument("--labels-output", help="hard labels file name")

def overrides(args: argparse.Namespace) -> Dict[str, Any]:
  return {
    "input": {"probabilities": args.probabilities},
    "discrete": {
      "steps": args.steps,
      "compat": args.compat,
      "compatFile": args.compat_file,
      "kernelFile": args.kernel_file,
      "zeroKernel": args.zero_kernel,
    },
    "output": {"probabilities": args.output, "labels": args.labels_output},
  }

def run(cfg: RunConfig) -> int:
  refine_labels(cfg)
  return 0
