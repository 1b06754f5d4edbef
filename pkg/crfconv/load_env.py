import logging
import os
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

_ENV_FILES = {"prod": ".env.prod", "local": ".env.local"}

def load_environment() -> bool:
    """Load the dotenv file picked by ENV_MODE; values already in the process environment win."""
    env_mode = os.getenv("ENV_MODE", "local")
    dotenv_path = _ENV_FILES.get(env_mode, _ENV_FILES["local"])
    loaded = load_dotenv(dotenv_path=dotenv_path, override=False)
    if loaded:
        logger.debug("loaded environment from %s", dotenv_path)
    return loaded
