from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq

from ..core.config import settings
from ..core.errors import NumericalError, PreconditionError
from ..core.utils import ensure_strictly_increasing
from .kernel import FilteredSignal, grid_peak

log = logging.getLogger(__name__)

RATE_CONDITION = "(b - c)/(kappa*delta) >= (2K+2)/T"


# -------------------------------------------------------------------
# PARAMETERS AND RECORDS
# -------------------------------------------------------------------

@dataclass(frozen=True)
class TemParams:
    """IF-TEM bias b, integrator scale kappa, threshold delta and input bound c."""

    b: float
    kappa: float
    delta: float
    c: float

    def __post_init__(self) -> None:
        if not (self.kappa > 0 and self.delta > 0):
            raise PreconditionError("kappa and delta must be positive")
        if not np.isfinite(self.b) or self.c < 0:
            raise PreconditionError("bias must be finite and the bound c non-negative")
        if self.b <= self.c:
            raise PreconditionError(
                f"bias below signal bound: b={self.b} <= c={self.c}", condition="c < b"
            )

    @property
    def min_spacing(self) -> float:
        return self.kappa * self.delta / (self.b + self.c)

    @property
    def max_spacing(self) -> float:
        return self.kappa * self.delta / (self.b - self.c)

    def with_bound(self, c: float) -> "TemParams":
        return TemParams(self.b, self.kappa, self.delta, c)

    def to_dict(self) -> Dict[str, float]:
        return {"b": self.b, "kappa": self.kappa, "delta": self.delta, "c": self.c}


@dataclass(frozen=True, eq=False)
class FiringRecord:
    instants: np.ndarray
    params: TemParams
    t_start: float
    T_obs: Optional[float] = None  # None: open-ended window

    def __post_init__(self) -> None:
        arr = ensure_strictly_increasing(self.instants).copy()
        if arr.size and arr[0] < self.t_start:
            raise PreconditionError("firing instants fall outside the observation window")
        if arr.size and self.T_obs is not None and arr[-1] >= self.t_start + self.T_obs:
            raise PreconditionError("firing instants fall outside the observation window")
        arr.flags.writeable = False
        object.__setattr__(self, "instants", arr)

    def __len__(self) -> int:
        return int(self.instants.size)

    @property
    def measurements(self) -> np.ndarray:
        return measurements(self.instants, self.params)

    def spacings(self) -> np.ndarray:
        return np.diff(self.instants)

    def count_in(self, t0: float, t1: float) -> int:
        return int(np.count_nonzero((self.instants >= t0) & (self.instants < t1)))

    def window(self, t0: float, t1: float) -> "FiringRecord":
        keep = self.instants[(self.instants >= t0) & (self.instants < t1)]
        return FiringRecord(keep, self.params, t0, t1 - t0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "t_start": self.t_start,
            "T_obs": self.T_obs,
            "instants": [float(t) for t in self.instants],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FiringRecord":
        doc = FiringDocument.model_validate(data)
        params = TemParams(**doc.params.model_dump())
        t_start = doc.t_start if doc.t_start is not None else (doc.instants[0] if doc.instants else 0.0)
        return cls(np.asarray(doc.instants, dtype=float), params, t_start, doc.T_obs)


class ParamsDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    b: float
    kappa: float = Field(gt=0)
    delta: float = Field(gt=0)
    c: float = Field(ge=0)


class FiringDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    params: ParamsDocument
    t_start: Optional[float] = None
    T_obs: Optional[float] = None
    instants: list[float]


@dataclass(frozen=True)
class RateCheck:
    ok: bool
    min_rate: float
    max_rate: float
    required: float

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "min_rate": self.min_rate, "max_rate": self.max_rate, "required": self.required}


# -------------------------------------------------------------------
# ENCODING
# -------------------------------------------------------------------

def encode(y: FilteredSignal, params: TemParams, t_start: float, T_obs: float) -> FiringRecord:
    """
    Fire whenever (1/kappa) * integral of (y + b) since the last reset reaches delta.

    The integrator starts from zero at t_start. Each crossing is the root of the
    strictly increasing F(t) - F(t_n) + b (t - t_n) - kappa*delta, bracketed by the
    spacing bounds kappa*delta/(b +- c).
    """
    if not T_obs > 0:
        raise PreconditionError("observation length must be positive")
    t_end = t_start + T_obs
    if y.valid_window is not None:
        lo, hi = y.valid_window
        if t_start < lo or t_end > hi + 1e-12 * y.period:
            raise PreconditionError(
                f"observation window [{t_start}, {t_end}) leaves the interval [{lo}, {hi}) where y is defined"
            )

    peak = grid_peak(y)
    if peak >= params.b:
        raise PreconditionError(f"bias below signal bound: max|y| = {peak:.6g} >= b = {params.b}", condition="c < b")
    if peak > params.c * (1.0 + 1e-6) + 1e-15:
        raise PreconditionError(f"declared bound c = {params.c} is below max|y| = {peak:.6g}")

    level = params.kappa * params.delta
    xtol = settings.root_xtol * y.period
    # spacing bracket from the bound actually met by y, widened against round-off
    c_eff = min(params.c, peak * (1.0 + 1e-6) + 1e-15)
    lo_gap = level / (params.b + c_eff) * (1.0 - 1e-9)
    hi_gap = level / (params.b - c_eff) * (1.0 + 1e-9)

    instants = []
    t_prev = float(t_start)
    F_prev = float(y.primitive(t_prev))
    while True:
        lo = t_prev + lo_gap
        if lo >= t_end:
            break
        hi = t_prev + hi_gap

        def excess(t: float) -> float:
            return float(y.primitive(t)) - F_prev + params.b * (t - t_prev) - level

        f_lo, f_hi = excess(lo), excess(hi)
        if f_lo > 0 or f_hi < 0:
            raise NumericalError(
                f"threshold crossing not bracketed after t={t_prev!r} (f(lo)={f_lo:.3e}, f(hi)={f_hi:.3e})"
            )
        t_next = brentq(excess, lo, hi, xtol=xtol, maxiter=200)
        if t_next >= t_end - xtol:
            break
        instants.append(t_next)
        t_prev = t_next
        F_prev = float(y.primitive(t_prev))

    log.debug("encode: %d firings in [%g, %g)", len(instants), t_start, t_end)
    return FiringRecord(np.asarray(instants, dtype=float), params, float(t_start), float(T_obs))


def measurements(instants: Sequence[float], params: TemParams) -> np.ndarray:
    """y_n = -b (t_{n+1} - t_n) + kappa*delta, one value per consecutive pair."""
    arr = ensure_strictly_increasing(instants)
    if arr.size < 2:
        raise PreconditionError("at least two firing instants are needed for a measurement")
    return -params.b * np.diff(arr) + params.kappa * params.delta


def check_spacing(record: FiringRecord, params: Optional[TemParams] = None, rtol: float = 1e-9) -> bool:
    """True when every consecutive spacing respects kappa*delta/(b+c) <= dt <= kappa*delta/(b-c)."""
    p = params or record.params
    gaps = record.spacings()
    if gaps.size == 0:
        return True
    return bool(np.all(gaps >= p.min_spacing * (1 - rtol)) and np.all(gaps <= p.max_spacing * (1 + rtol)))


# -------------------------------------------------------------------
# RATE DESIGN
# -------------------------------------------------------------------

def validate_rate(params: TemParams, K: int, T: float) -> RateCheck:
    level = params.kappa * params.delta
    min_rate = (params.b - params.c) / level
    max_rate = (params.b + params.c) / level
    required = (2 * K + 2) / T
    return RateCheck(ok=bool(min_rate >= required), min_rate=min_rate, max_rate=max_rate, required=required)


def suggest_delta(b: float, kappa: float, c: float, K: int, T: float, safety: float = 0.9) -> float:
    """Largest threshold meeting the minimum firing rate, shrunk by `safety`."""
    if b <= c:
        raise PreconditionError(f"bias below signal bound: b={b} <= c={c}", condition="c < b")
    if not (0 < safety <= 1):
        raise PreconditionError("safety factor must lie in (0, 1]")
    return safety * (b - c) * T / (kappa * (2 * K + 2))
