import json
import logging
from pathlib import Path
from typing import Dict, List, Type

from pydantic import BaseModel

from src.models import (
    BasisReport,
    DynamicsReport,
    GroupReport,
    IdentityReport,
    MonomorphismReport,
    TilingSearchReport,
)

logger = logging.getLogger(__name__)

SCHEMA_DIR = Path(__file__).resolve().parents[2] / "schemas"

# Report model behind each command's --format json output.
REPORT_MODELS: Dict[str, Type[BaseModel]] = {
    "group": GroupReport,
    "identity": IdentityReport,
    "basis": BasisReport,
    "tile": TilingSearchReport,
    "mono": MonomorphismReport,
    "dynamics": DynamicsReport,
}


def schema_path(command: str, directory: Path = SCHEMA_DIR) -> Path:
    return Path(directory) / f"{command}.schema.json"


def report_schema(command: str) -> dict:
    """JSON schema of a command's report, generated from its pydantic model."""
    return REPORT_MODELS[command].model_json_schema()


def load_schema(command: str, directory: Path = SCHEMA_DIR) -> dict:
    return json.loads(schema_path(command, directory).read_text())


def write_schemas(directory: Path = SCHEMA_DIR) -> List[Path]:
    """
    Writes one schema file per command.

    Args:
        directory: Target directory, created if missing.

    Returns:
        The written paths in command order.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for command in REPORT_MODELS:
        path = schema_path(command, directory)
        path.write_text(json.dumps(report_schema(command), indent=2) + "\n")
        paths.append(path)
    logger.info(f"Wrote {len(paths)} report schemas to {directory}")
    return paths
