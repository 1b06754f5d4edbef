import logging
import sys
from typing import List

from pydantic import ValidationError

from crfconv.cli.routers import build_parser, collect_overrides
from crfconv.core.errors import CrfConvError
from crfconv.core.parallel import set_threads
from crfconv.load_env import load_environment
from crfconv.schemas.config import load_run_config

logger = logging.getLogger(__name__)


def _describe(error: Exception) -> str:
    if isinstance(error, ValidationError):
        problems = "; ".join(f"{'.'.join(str(p) for p in e['loc']) or 'config'}: {e['msg']}" for e in error.errors())
        return f"invalid configuration: {problems}"
    return " ".join(str(error).split()) or type(error).__name__


def main(argv: List[str] | None = None) -> int:
    load_environment()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        cfg = load_run_config(args.config, collect_overrides(args))
        set_threads(cfg.threads)
        logger.debug("running %s with %d thread(s)", args.command, cfg.threads)
        return args.command_module.run(cfg)
    except (CrfConvError, ValidationError, OSError, ValueError) as error:
        logger.debug("%s aborted", args.command, exc_info=True)
        print(f"crfconv {args.command}: {_describe(error)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
