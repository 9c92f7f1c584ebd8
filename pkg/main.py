import logging
import sys

from src.config import APP_CONFIG
from src.cli import run

logging.basicConfig(
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    level=APP_CONFIG.log_level,
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)

if __name__ == "__main__":
    logger.debug(f"Scheduler: {APP_CONFIG.scheduler}")
    sys.exit(run(sys.argv[1:]))
