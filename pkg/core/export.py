"""Atomic CSV / JSON writers for analysis outputs.

Files are written to ``<name>.tmp`` and renamed into place.  In JSON, non-finite
floats become the strings "inf", "-inf" and "nan".
"""
from __future__ import annotations

import dataclasses
import enum
import json
import logging
import math
import os

import numpy as np
import pandas as pd

from config import OUTPUT_CONFIG

logger = logging.getLogger(__name__)


def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, 'to_dict'):
            return to_jsonable(obj.to_dict())
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return obj


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = path + '.tmp'
    with open(tmp, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    os.replace(tmp, path)
    logger.info("Wrote %s", path)


def write_json(obj, path: str) -> str:
    _atomic_write(path, json.dumps(to_jsonable(obj), indent=2, sort_keys=False) + '\n')
    return path


def write_csv(frame: pd.DataFrame, path: str) -> str:
    text = frame.to_csv(index=False, float_format=OUTPUT_CONFIG['float_format'], lineterminator='\n')
    _atomic_write(path, text)
    return path


def records_frame(items) -> pd.DataFrame:
    """One row per dataclass item."""
    rows = [to_jsonable(item) for item in items]
    return pd.DataFrame(rows)


def write_output(name: str, out_dir: str, fmt: str, frame=None, payload=None) -> str:
    """Write ``<out_dir>/<name>.<fmt>``; CSV uses ``frame``, JSON uses ``payload`` (or the frame's records)."""
    path = os.path.join(out_dir, f"{name}.{fmt}")
    if fmt == 'csv':
        if frame is None:
            frame = pd.json_normalize(to_jsonable(payload))
        return write_csv(frame, path)
    if payload is None:
        payload = frame.to_dict(orient='records')
    return write_json(payload, path)
