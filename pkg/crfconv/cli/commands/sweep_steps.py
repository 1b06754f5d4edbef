import argparse
from typing import Any, Dict

from crfconv.models.enums.crf import Schedule
from crfconv.schemas.config import RunConfig
from crfconv.tasks.sweep import sweep_steps

NAME = "sweep-steps"
HELP = "sweep the number of mean-field steps and report energy and fidelity against diffusion"

def add_arguments(parser: argparse.ArgumentParser) -> None:
  parser.add_argument("--steps", type=int, nargs="+", help="step counts to sweep")
  parser.add_argument("--schedule", choices=[s.value for s in Schedule])
  parser.add_argument("--report-timing", action="store_true", default=None, help="add a wall_time column")
  parser.add_argument("--output", help="sweep file name")

def overrides(args: argparse.Namespace) -> Dict[str, Any]:
  return {
    "sweep": {"steps": args.steps, "reportTiming": args.report_timing},
    "crf": {"schedule": args.schedule},
    "output": {"sweep": args.output},
  }

def run(cfg: RunConfig) -> int:
  sweep_steps(cfg)
  return 0
