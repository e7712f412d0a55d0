from __future__ import annotations

import math
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import PreconditionError


def json_sanitize(obj: Any) -> Any:
    """
    Ensure the structure is JSON-serializable.
    numpy scalars/arrays become Python numbers/lists, complex values become [re, im] pairs.
    """
    if obj is None:
        return None
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, str):
        return obj
    if isinstance(obj, np.ndarray):
        return [json_sanitize(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): json_sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_sanitize(x) for x in obj]
    # Fallback
    return str(obj)


def format_float(v: float, digits: int = 17) -> str:
    """Fixed-significance float text for CSV cells; inf/nan spelled the numpy way."""
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{digits}g}"


def ensure_strictly_increasing(instants: Sequence[float], *, what: str = "firing instants") -> np.ndarray:
    """
    Validates an ordered instant sequence.

    Returns it as a float array.
    Raises PreconditionError("unordered firings") if any step is not strictly positive.
    """
    arr = np.asarray(instants, dtype=float)
    if arr.ndim != 1:
        raise PreconditionError(f"{what} must be a one-dimensional sequence")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{what} must be finite")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        bad = int(np.argmax(np.diff(arr) <= 0))
        raise PreconditionError(
            f"unordered firings: {what}[{bad + 1}]={arr[bad + 1]!r} does not follow {arr[bad]!r}"
        )
    return arr


def wrap_delays(delays: Iterable[float], period: float) -> np.ndarray:
    """Map delays into [0, period); values within 1e-12 of the period wrap to 0."""
    out = np.mod(np.asarray(list(delays), dtype=float), period)
    out[out >= period - 1e-12 * period] = 0.0
    return out


def circular_distance(a: np.ndarray, b: np.ndarray, period: float) -> np.ndarray:
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), period))
    return np.minimum(d, period - d)
