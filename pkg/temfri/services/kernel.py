from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from ..core.config import settings
from ..core.errors import PreconditionError
from .model import FriSignal, FscVector, fsc_vector, pulse_l1_norm

log = logging.getLogger(__name__)

_BLOCK = 4096


# -------------------------------------------------------------------
# SUM-OF-SINCS KERNEL
# -------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSpec:
    """
    SoS kernel passing exactly the harmonics in {-K..K} (include_dc) or
    {-K..-1, 1..K} (DC removed).
    """

    K: int
    include_dc: bool
    period: float

    def __post_init__(self) -> None:
        if int(self.K) != self.K or self.K < 1:
            raise PreconditionError("kernel order K must be a positive integer")
        if not self.period > 0:
            raise PreconditionError("period must be positive")

    @property
    def omega0(self) -> float:
        return 2.0 * np.pi / self.period

    @property
    def indices(self) -> np.ndarray:
        ks = np.arange(-self.K, self.K + 1)
        return ks if self.include_dc else ks[ks != 0]

    @property
    def size(self) -> int:
        return 2 * self.K + 1 if self.include_dc else 2 * self.K

    @property
    def sup_norm(self) -> float:
        # every exponential equals 1 at t = 0
        return float(self.size)

    def evaluate(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """g(t) on (-T/2, T/2], zero elsewhere."""
        tt = np.asarray(t, dtype=float)
        w0 = self.omega0
        ks = np.arange(1, self.K + 1)
        g = 2.0 * np.cos(w0 * np.multiply.outer(tt, ks)).sum(axis=-1)
        if self.include_dc:
            g = g + 1.0
        half = self.period / 2.0
        g = np.where((tt > -half) & (tt <= half), g, 0.0)
        return float(g) if np.ndim(g) == 0 else g

    def to_dict(self) -> dict:
        return {"K": int(self.K), "include_dc": bool(self.include_dc), "period": float(self.period)}


def design(K: int, include_dc: bool, T: float) -> KernelSpec:
    return KernelSpec(K=int(K), include_dc=bool(include_dc), period=float(T))


def kernel_samples(spec: KernelSpec, points: int = 1024) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform samples of g over one support interval, for CSV dumps."""
    if points < 2:
        raise PreconditionError("need at least two kernel samples")
    half = spec.period / 2.0
    t = np.linspace(-half, half, points + 1)[1:]
    return t, np.asarray(spec.evaluate(t))


# -------------------------------------------------------------------
# FILTERED SIGNAL
# -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FilteredSignal:
    """
    y(t) = sum_{k in K} x_hat[k] e^{j k w0 t}.

    valid_window, when set, is the interval on which this closed form equals the
    physical kernel output (nonperiodic streams); None means every t.
    """

    fscs: FscVector
    period: float
    valid_window: Optional[Tuple[float, float]] = None

    @property
    def omega0(self) -> float:
        return self.fscs.omega0

    def synthesize(self, t: Union[float, np.ndarray]) -> np.ndarray:
        """Complex synthesis; the imaginary part is round-off only."""
        tt = np.asarray(t, dtype=float)
        flat = tt.reshape(-1)
        out = np.empty(flat.shape, dtype=complex)
        ks = self.fscs.indices
        for start in range(0, flat.size, _BLOCK):
            chunk = flat[start:start + _BLOCK]
            out[start:start + chunk.size] = np.exp(1j * self.omega0 * np.outer(chunk, ks)) @ self.fscs.values
        return out.reshape(tt.shape)

    def evaluate(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        y = self.synthesize(t).real
        return float(y) if np.ndim(y) == 0 else y

    def primitive(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """F(t) = sum_{k != 0} x_hat[k] e^{j k w0 t} / (j k w0) + x_hat[0] t."""
        tt = np.asarray(t, dtype=float)
        ks = self.fscs.indices
        vals = self.fscs.values
        nz = ks != 0
        scaled = vals[nz] / (1j * ks[nz] * self.omega0)
        out = (np.exp(1j * self.omega0 * np.multiply.outer(tt, ks[nz])) @ scaled).real
        if self.fscs.has_dc:
            out = out + self.fscs[0].real * tt
        return float(out) if np.ndim(out) == 0 else out

    def integrate(self, t0: float, t1: float) -> float:
        return float(self.primitive(t1) - self.primitive(t0))


def filter_signal(signal: FriSignal, spec: KernelSpec) -> FilteredSignal:
    """Keep x_hat[k] for k in the kernel's index set; every other harmonic is annihilated."""
    if not signal.periodic:
        raise PreconditionError(
            "nonperiodic stream needs the periodized kernel; use recovery.filter_nonperiodic"
        )
    if abs(signal.period - spec.period) > 1e-12 * spec.period:
        raise PreconditionError("kernel period does not match the signal period")
    return FilteredSignal(fscs=fsc_vector(signal, spec.indices), period=spec.period)


# -------------------------------------------------------------------
# AMPLITUDE BOUND
# -------------------------------------------------------------------

def bound_c(
    signal: FriSignal,
    spec: KernelSpec,
    mode: Literal["analytic", "grid"] = "grid",
    grid_points: Optional[int] = None,
    filtered: Optional[FilteredSignal] = None,
) -> float:
    """
    Upper bound c on |y(t)|.

    analytic: L * a_max * ||g||_inf * ||h||_1 (Young's inequality)
    grid:     max |y| on a dense grid, each local peak polished by a bounded
              golden-section/parabolic search
    """
    if mode == "analytic":
        return float(signal.L * signal.a_max * spec.sup_norm * pulse_l1_norm(signal.pulse))
    if mode != "grid":
        raise PreconditionError(f"unknown bound mode {mode!r}")

    y = filtered if filtered is not None else filter_signal(signal, spec)
    return grid_peak(y, grid_points)


def grid_peak(y: FilteredSignal, grid_points: Optional[int] = None) -> float:
    n = int(grid_points or settings.bound_grid_points)
    if not np.any(y.fscs.values):
        return 0.0

    T = y.period
    t0 = y.valid_window[0] if y.valid_window else 0.0
    step = T / n
    t = t0 + step * np.arange(n)
    mag = np.abs(np.asarray(y.evaluate(t)))
    best = float(mag.max())

    # local maxima on the circular grid
    left = np.roll(mag, 1)
    right = np.roll(mag, -1)
    peaks = np.flatnonzero((mag >= left) & (mag >= right) & (mag >= 0.5 * best))
    # |y| has at most 2 * max|k| local maxima per period
    limit = 2 * int(np.max(np.abs(y.fscs.indices))) + 2
    peaks = peaks[np.argsort(mag[peaks], kind="stable")[::-1][:limit]]
    for i in peaks:
        res = minimize_scalar(
            lambda s: -abs(float(y.evaluate(s))),
            bounds=(t[i] - step, t[i] + step),
            method="bounded",
            options={"xatol": step * 1e-6},
        )
        best = max(best, -float(res.fun))

    log.debug("grid bound: %d peaks refined, c=%.6g", peaks.size, best)
    return best
