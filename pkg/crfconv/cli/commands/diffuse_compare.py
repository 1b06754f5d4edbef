import argparse
from typing import Any, Dict

from crfconv.schemas.config import RunConfig
from crfconv.tasks.diffusion import compare_diffusion

NAME = "diffuse-compare"
HELP = "run the CRF (C = I) and graph diffusion side by side and report fidelity and Dirichlet energy"

def add_arguments(parser: argparse.ArgumentParser) -> None:
  parser.add_argument("--c", type=float, help="diffusion coefficient in (0, 1]")
  parser.add_argument("--steps", type=int, help="steps of both processes (default 10 N)")
  parser.add_argument("--output", help="report file name")

def overrides(args: argparse.Namespace) -> Dict[str, Any]:
  return {"diffusion": {"c": args.c, "steps": args.steps}, "output": {"report": args.output}}

def run(cfg: RunConfig) -> int:
  compare_diffusion(cfg)
  return 0
