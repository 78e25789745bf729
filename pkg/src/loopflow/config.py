import os
import logging

from dotenv import load_dotenv

# Load environment overrides from a local .env file
load_dotenv()

# ---------- Metadata ---------- #
__app_name__ = "loopflow"
__description__ = "Loopflow couples a full-horizon multi-agent pathfinder with per-robot LQ trajectory trackers in a closed replanning loop."
__version__ = "0.1.0"
# ---------- Environment ---------- #
LOG_LEVEL = logging.getLevelName(os.getenv("LOOPFLOW_LOG_LEVEL", "INFO").upper())
if not isinstance(LOG_LEVEL, int):
    LOG_LEVEL = logging.INFO
# ---------- THE END ---------- #
