import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel

from sphdir.exceptions import DataError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: Union[str, int] = "INFO") -> None:
    """Configure the root logger once; later calls only change the level."""
    root = logging.getLogger()
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    if not root.handlers:
        logging.basicConfig(level=level, format=LOG_FORMAT)
    root.setLevel(level)


def format_float(value: float) -> str:
    """Shortest text that keeps 17 significant digits."""
    return format(float(value), ".17g")


def _plain(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (tuple, list)):
        return list(value)
    return value


def flatten(document: Any, prefix: str = "") -> Dict[str, Any]:
    """Flatten nested mappings/sequences to dotted keys; sequence indices are 1-based.

    ``{"fit": [{"alpha_hat": {"alpha": [2.0, 3.0]}}]}`` becomes
    ``{"fit.1.alpha_hat.alpha.1": 2.0, "fit.1.alpha_hat.alpha.2": 3.0}``.
    Non-finite floats become ``None``.
    """
    value = _plain(document)
    flat: Dict[str, Any] = {}
    if isinstance(value, dict):
        for key, item in value.items():
            flat.update(flatten(item, f"{prefix}.{key}" if prefix else str(key)))
    elif isinstance(value, list):
        for i, item in enumerate(value, start=1):
            flat.update(flatten(item, f"{prefix}.{i}" if prefix else str(i)))
    elif isinstance(value, float) and not math.isfinite(value):
        flat[prefix] = None
    else:
        flat[prefix] = value
    return flat


def write_document(document: Any, path: Optional[Path]) -> str:
    """Serialize ``flatten(document)`` as JSON with sorted keys; written to ``path`` when given."""
    text = json.dumps(flatten(document), indent=2, sort_keys=True) + "\n"
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as e:
            raise DataError(f"cannot write {path}: {e}")
        logging.getLogger(__name__).info("wrote result document to %s", path)
    return text
