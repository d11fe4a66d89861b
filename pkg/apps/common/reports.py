import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from apps.common.exceptions import InvalidSpecFile

logger = logging.getLogger(__name__)


def to_jsonable(value: Any):
    """Plain JSON types for reports: tuples become lists, sets become sorted lists"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted((to_jsonable(v) for v in value), key=repr)
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    return value


def dumps_report(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + '\n'


def write_report(payload: Any, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_report(payload))
    except OSError as e:
        raise InvalidSpecFile(f"Cannot write report to {path}: {e}")
    logger.info(f"Report written to {path}")
    return path


def load_json(path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as e:
        raise InvalidSpecFile(f"Cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise InvalidSpecFile(f"{path} is not valid JSON: {e}")
