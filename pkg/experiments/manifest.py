# Run manifests: the key=value record written next to every output file

import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional

from dotenv import dotenv_values

from simulator.config import ConfigError, settings

logger = logging.getLogger(__name__)

# Keys a manifest carries besides the resolved options; ignored when a
# manifest is read back as a config file.
META_KEYS = ("subcommand", "tool_version", "started_at", "finished_at", "outputs")

MANIFEST_SUFFIX = ".manifest"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run."""
    subcommand: str
    options: Dict[str, str]
    tool_version: str = settings.app_version
    started_at: str = field(default_factory=_now)
    finished_at: Optional[str] = None
    outputs: List[str] = field(default_factory=list)

    def finish(self) -> None:
        self.finished_at = _now()

    def to_text(self) -> str:
        lines = [f"subcommand={self.subcommand}"]
        lines.extend(f"{key}={value}" for key, value in sorted(self.options.items()))
        lines.append(f"tool_version={self.tool_version}")
        lines.append(f"started_at={self.started_at}")
        lines.append(f"finished_at={self.finished_at or ''}")
        lines.append(f"outputs={','.join(self.outputs)}")
        return "\n".join(lines) + "\n"

    def write(self, output_path: str) -> str:
        """Write the manifest beside ``output_path`` and return its path."""
        path = output_path + MANIFEST_SUFFIX
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_text())
        logger.info(f"Manifest written to {path}")
        return path


def ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def read_key_values(path: str, subcommand: str) -> Dict[str, str]:
    """
    Read a key=value config file (or a manifest) for ``subcommand``.

    Metadata keys are dropped; a manifest written by another subcommand is rejected.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path, interpolate=False)
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise ConfigError(f"config file {path}: keys without a value: {', '.join(missing)}")

    recorded = values.get("subcommand")
    if recorded and recorded != subcommand:
        raise ConfigError(f"config file {path} was written for '{recorded}', not '{subcommand}'")
    return {key.lower(): value for key, value in values.items() if key.lower() not in META_KEYS}
