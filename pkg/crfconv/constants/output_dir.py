import os
from crfconv.load_env import load_environment

load_environment()

OUTPUT_DIR_ENV = "CRFCONV_OUTPUT_DIR"

def get_output_dir() -> str | None:
    """Directory relative output paths resolve under; None means the working directory."""
    value = os.getenv(OUTPUT_DIR_ENV)
    return value or None
