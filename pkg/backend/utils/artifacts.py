# backend/utils/artifacts.py
"""
Output artifacts: one JSON object or a JSON-lines stream, always stamped with
format_version, the effective command config and the global settings.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from config import settings
from models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)


def effective_config(config: ExperimentConfig) -> Dict[str, Any]:
    return {"command": config.effective(), "settings": settings.get_config()}


def header(kind: str, config: ExperimentConfig) -> Dict[str, Any]:
    return {
        "format_version": settings.FORMAT_VERSION,
        "kind": kind,
        "effective_config": effective_config(config),
    }


def artifact(kind: str, config: ExperimentConfig, body: Dict[str, Any]) -> Dict[str, Any]:
    return {**header(kind, config), **body}


def _default(value: Any) -> Any:
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(data: Dict[str, Any], path: Optional[Union[str, Path]] = None) -> None:
    text = json.dumps(data, indent=1, default=_default)
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")
        logger.info(f"Wrote {data.get('kind', 'artifact')} to {path}")


def write_jsonl(first: Dict[str, Any], records: Iterable[Dict[str, Any]],
                path: Optional[Union[str, Path]] = None) -> int:
    """Header line followed by one line per record; returns the record count."""
    lines = [json.dumps(first, default=_default)]
    lines.extend(json.dumps(r, default=_default) for r in records)
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
        logger.info(f"Wrote {len(lines) - 1} records to {path}")
    return len(lines) - 1
