import os
import logging
from dotenv import load_dotenv


logger = logging.getLogger(__name__)

SCHEDULERS = ("auto", "queue", "parallel")


def load_config() -> None:
    """Loads configuration from .env file."""
    load_dotenv()
    logger.debug("Configuration loaded from .env file.")


class AppConfig:
    """Application configuration class."""

    def __init__(self):
        load_config()  # Load .env first

        self.log_level: str = self._parse_log_level(
            os.getenv("SANDPILE_LOG_LEVEL", "INFO")
        )
        self.scheduler: str = self._parse_choice(
            "SANDPILE_SCHEDULER", os.getenv("SANDPILE_SCHEDULER", "auto"), SCHEDULERS
        )
        # Domains up to this size topple with the pure-Python queue under "auto"
        self.queue_max_vertices: int = self._get_int("SANDPILE_QUEUE_MAX_VERTICES", 64)
        self.snf_max_vertices: int = self._get_int("SANDPILE_SNF_MAX_VERTICES", 64)
        self.lattice_max_vertices: int = self._get_int(
            "SANDPILE_LATTICE_MAX_VERTICES", 100
        )
        self.det_max_vertices: int = self._get_int("SANDPILE_DET_MAX_VERTICES", 400)
        self.socle_max_combinations: int = self._get_int(
            "SANDPILE_SOCLE_MAX_COMBINATIONS", 4096
        )
        self.default_seed: int = self._get_int("SANDPILE_DEFAULT_SEED", 0)
        self.default_limit: int = self._get_int("SANDPILE_DEFAULT_LIMIT", 100)

    def _get_int(self, var_name: str, default: int) -> int:
        """Gets a non-negative integer environment variable."""
        value = os.getenv(var_name)
        if value is None or not value.strip():
            return default
        try:
            parsed = int(value.strip())
        except ValueError:
            logger.error(f"Environment variable '{var_name}' is not an integer: {value}")
            raise ValueError(f"Invalid integer for {var_name}: {value}")
        if parsed < 0:
            raise ValueError(f"{var_name} must be non-negative, got {parsed}")
        return parsed

    def _parse_choice(self, var_name: str, value: str, choices: tuple[str, ...]) -> str:
        value = value.strip().lower()
        if value not in choices:
            logger.error(f"Environment variable '{var_name}' has invalid value {value}")
            raise ValueError(f"{var_name} must be one of {', '.join(choices)}")
        return value

    def _parse_log_level(self, value: str) -> str:
        level = value.strip().upper()
        if level not in logging.getLevelNamesMapping():
            raise ValueError(f"Unknown log level: {value}")
        return level


# Singleton instance
APP_CONFIG = AppConfig()
