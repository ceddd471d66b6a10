# backend/utils/config_file.py
"""
INI experiment files: one [section] per subcommand, "key = value" lines.
Flags given on the command line override file values.

    [gen]
    space = circle
    L = 5
    n = 1000
"""

import configparser
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union

from exceptions import ConfigError
from models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=ExperimentConfig)


def read_section(path: Optional[Union[str, Path]], section: str) -> Dict[str, str]:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep "L" distinct from "l"
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    if not parser.has_section(section):
        logger.debug(f"Config file {path} has no [{section}] section")
        return {}
    return dict(parser.items(section))


def merge(file_values: Dict[str, Any], flags: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(file_values)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def load_experiment(model: Type[T], path: Optional[Union[str, Path]], section: str, flags: Dict[str, Any]) -> T:
    config = model.build(merge(read_section(path, section), flags))
    logger.debug(f"Effective [{section}] config: {config.effective()}")
    return config
