from __future__ import annotations

import re

import numpy as np

from core.errors import DomainError, InvalidInputError


def parse_grid(grid_string: str) -> np.ndarray:
    """
    Parse a threshold grid of the form "lo:hi:steps" into an ascending array.
    For example "8:10:5" gives [8.0, 8.5, 9.0, 9.5, 10.0].
    """
    parts = grid_string.split(':')
    if len(parts) != 3:
        raise InvalidInputError(f"parse_grid: expected lo:hi:steps, got '{grid_string}'")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidInputError(f"parse_grid: expected lo:hi:steps, got '{grid_string}'") from None
    if steps < 1 or hi < lo:
        raise InvalidInputError(f"parse_grid: need hi >= lo and steps >= 1, got '{grid_string}'")
    return np.linspace(lo, hi, steps)


def parse_float_list(values) -> list[float]:
    """Accept ["0.95", "0.99"] or ["0.95,0.99"] and return floats"""
    out = []
    for item in values:
        for token in re.split(r'[,\s]+', str(item).strip()):
            if not token:
                continue
            try:
                out.append(float(token))
            except ValueError:
                raise InvalidInputError(f"not a number: '{token}'") from None
    return out


def check_probabilities(qs: list[float], op: str) -> list[float]:
    """Every q must lie in (0, 1)"""
    for q in qs:
        if not 0.0 < q < 1.0:
            raise DomainError(f"{op}: probability {q} is outside (0, 1)")
    return qs


def slug(text) -> str:
    """Lowercase file-name-safe form of a label"""
    return re.sub(r'[^0-9a-zA-Z.-]+', '_', str(text)).strip('_').lower() or 'all'
