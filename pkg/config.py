"""Configuration management for the win probability planning toolkit."""
import os
from dotenv import load_dotenv

load_dotenv()


def _env_flag(name: str) -> bool:
    """Return True when an environment variable is set to a truthy value."""
    return os.getenv(name, "").strip().lower() in {"1", "true", "yes", "on"}


# Design defaults
DEFAULT_CI_LEVEL = float(os.getenv("WINPLAN_CI_LEVEL", "0.95"))
DEFAULT_ASSURANCE = float(os.getenv("WINPLAN_ASSURANCE", "0.9"))
DEFAULT_ALLOC_RATIO = 1.0

# Simulation defaults
DEFAULT_REPLICATES = int(os.getenv("WINPLAN_REPLICATES", "10000"))
DEFAULT_SEED = int(os.getenv("WINPLAN_SEED", "20240101"))
DEFAULT_THREADS = int(os.getenv("WINPLAN_THREADS", "1"))

# Logging / terminal output
LOG_LEVEL = os.getenv("WINPLAN_LOG_LEVEL", "WARNING").upper()
SHOW_PROGRESS = not (_env_flag("WINPLAN_NO_PROGRESS") or "CI" in os.environ)
USE_COLOR = SHOW_PROGRESS and "NO_COLOR" not in os.environ

# Report formatting
PROB_DECIMALS = 4
PCT_DECIMALS = 2

# Data ingestion
DEFAULT_ARM_COLUMN = os.getenv("WINPLAN_ARM_COLUMN", "arm")
