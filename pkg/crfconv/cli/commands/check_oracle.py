import argparse
import logging
from typing import Any, Dict

from crfconv.schemas.config import RunConfig
from crfconv.tasks.oracle import run_oracle_checks

logger = logging.getLogger(__name__)

NAME = "check-oracle"
HELP = "check message passing against the exact minimizer and the mean-field updates"

def add_arguments(parser: argparse.ArgumentParser) -> None:
  parser.add_argument("--output", help="check report file name")

def overrides(args: argparse.Namespace) -> Dict[str, Any]:
  return {"output": {"oracle": args.output}}

def run(cfg: RunConfig) -> int:
  checks = run_oracle_checks(cfg)
  failed = [c.check for c in checks if not c.passed]
  if failed:
    logger.error("failed checks: %s", ", ".join(failed))
    return 1
  return 0
