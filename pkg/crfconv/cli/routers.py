import argparse
from types import ModuleType
from typing import Any, Dict, List

from crfconv.cli.commands import build_graph, check_oracle, diffuse_compare, refine_labels, smooth, sweep_steps
from crfconv.constants.output_dir import get_output_dir
from crfconv.models.enums.cloud import CloudFormat, GraphKind

COMMANDS: List[ModuleType] = [build_graph, smooth, refine_labels, diffuse_compare, sweep_steps, check_oracle]

def _common_parser() -> argparse.ArgumentParser:
  common = argparse.ArgumentParser(add_help=False)
  common.add_argument("--config", help="JSON run configuration")
  common.add_argument("--seed", type=int, help="seed of the synthetic input and the sampling start point")
  common.add_argument("--threads", type=int, help="cap on internal parallelism")
  common.add_argument("--verbose", action="store_true", help="log at DEBUG level")
  common.add_argument("--output-dir", help="directory relative output names resolve under")
  common.add_argument("--input", help="point cloud file")
  common.add_argument("--format", choices=[f.value for f in CloudFormat], help="input cloud format")
  common.add_argument("--k", type=int, help="neighbors per node")
  common.add_argument("--graph-kind", choices=[k.value for k in GraphKind], dest="graph_kind", help="graph construction")
  return common

def build_parser() -> argparse.ArgumentParser:
  parser = argparse.ArgumentParser(prog="crfconv", description="continuous CRF graph convolution on point clouds")
  subparsers = parser.add_subparsers(dest="command", metavar="command")
  subparsers.required = True
  common = _common_parser()
  for command in COMMANDS:
    sub = subparsers.add_parser(command.NAME, help=command.HELP, description=command.HELP, parents=[common])
    command.add_arguments(sub)
    sub.set_defaults(command_module=command)
  return parser

def _prune(tree: Dict[str, Any]) -> Dict[str, Any]:
  pruned: Dict[str, Any] = {}
  for key, value in tree.items():
    if isinstance(value, dict):
      value = _prune(value)
      if value:
        pruned[key] = value
    elif value is not None:
      pruned[key] = value
  return pruned

def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
  """Flag values as a camelCase config tree; --output-dir beats CRFCONV_OUTPUT_DIR, which beats the file."""
  output_dir = args.output_dir if args.output_dir is not None else get_output_dir()
  common: Dict[str, Any] = {
    "seed": args.seed,
    "threads": args.threads,
    "input": {"path": args.input, "format": args.format},
    "graph": {"k": args.k, "kind": args.graph_kind},
    "output": {"dir": output_dir},
  }
  specific = args.command_module.overrides(args)
  merged = _prune(common)
  if "path" in merged.get("input", {}):
    # a file on the command line replaces a synthetic block from the config
    merged["input"]["synthetic"] = None
  for section, values in _prune(specific).items():
    merged.setdefault(section, {}).update(values)
  return merged
