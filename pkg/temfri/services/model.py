from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Annotated, Any, Dict, Iterable, List, Literal, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.interpolate import BSpline

from ..core.config import settings
from ..core.errors import NumericalError, PreconditionError


_SYNTH_BLOCK = 2048


# -------------------------------------------------------------------
# PULSE SHAPES
# -------------------------------------------------------------------

@dataclass(frozen=True)
class PulseShape:
    """
    Known real pulse h(t) of the FRI model.

    kind:
      - "dirac":     h = delta(t), spectrum identically 1
      - "bspline":   h(t) = beta^(order)(scale * t), centred B-spline
      - "tabulated": spectrum given only at the harmonics k * omega0
    """

    kind: Literal["dirac", "bspline", "tabulated"]
    order: int = 0
    scale: float = 1.0
    table: Tuple[Tuple[int, complex], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("dirac", "bspline", "tabulated"):
            raise PreconditionError(f"unknown pulse kind {self.kind!r}")
        if self.kind == "bspline":
            if int(self.order) != self.order or self.order < 0:
                raise PreconditionError("B-spline order must be a non-negative integer")
            if not self.scale > 0:
                raise PreconditionError("B-spline time-scale must be positive")
        if self.kind == "tabulated":
            spectrum = dict(self.table)
            for k, v in spectrum.items():
                mirror = spectrum.get(-k)
                if mirror is None:
                    continue
                if abs(mirror - np.conj(v)) > 1e-12 * max(1.0, abs(v)):
                    raise PreconditionError(
                        f"tabulated spectrum is not conjugate symmetric at index {k} (pulse must be real)"
                    )

    @classmethod
    def dirac(cls) -> "PulseShape":
        return cls(kind="dirac")

    @classmethod
    def bspline(cls, order: int, scale: float) -> "PulseShape":
        return cls(kind="bspline", order=int(order), scale=float(scale))

    @classmethod
    def tabulated(cls, spectrum: Mapping[int, complex]) -> "PulseShape":
        items = tuple(sorted((int(k), complex(v)) for k, v in spectrum.items()))
        return cls(kind="tabulated", table=items)

    @property
    def spectrum(self) -> Dict[int, complex]:
        return dict(self.table)

    def spectrum_at(self, indices: Iterable[int], omega0: float) -> np.ndarray:
        """h_hat(k * omega0) for every k in `indices`."""
        ks = np.asarray(list(indices), dtype=int)
        if self.kind == "dirac":
            return np.ones(ks.shape, dtype=complex)
        if self.kind == "bspline":
            w = ks * omega0
            return (np.sinc(w / (2.0 * np.pi * self.scale)) ** (self.order + 1) / self.scale).astype(complex)

        spectrum = self.spectrum
        missing = [int(k) for k in ks if int(k) not in spectrum]
        if missing:
            first = min(missing, key=lambda k: (abs(k), -k))
            raise PreconditionError(f"spectrum not covered at index {first}")
        return np.array([spectrum[int(k)] for k in ks], dtype=complex)

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        """Time-domain h(t); only B-splines have one here."""
        if self.kind != "bspline":
            raise PreconditionError(f"{self.kind} pulse is not pointwise evaluable")
        element = _bspline_element(self.order)
        return element(self.scale * np.asarray(t, dtype=float))


@lru_cache(maxsize=16)
def _bspline_element(order: int):
    knots = np.arange(order + 2, dtype=float) - (order + 1) / 2.0
    element = BSpline.basis_element(knots, extrapolate=False)

    def evaluate(u: np.ndarray) -> np.ndarray:
        out = element(u)
        return np.nan_to_num(out, nan=0.0)

    return evaluate


def pulse_support(pulse: PulseShape) -> Optional[float]:
    """Support length R of h (h(t) = 0 for |t| >= R/2); None when unknown."""
    if pulse.kind == "dirac":
        return 0.0
    if pulse.kind == "bspline":
        return (pulse.order + 1) / pulse.scale
    return None


def pulse_l1_norm(pulse: PulseShape) -> float:
    # Dirac counted as a unit mass
    if pulse.kind == "dirac":
        return 1.0
    if pulse.kind == "bspline":
        return 1.0 / pulse.scale
    raise PreconditionError("tabulated pulse has no known L1 norm; use grid mode for the amplitude bound")


# -------------------------------------------------------------------
# SIGNALS AND COEFFICIENTS
# -------------------------------------------------------------------

@dataclass(frozen=True)
class FriSignal:
    """
    T-periodic stream x(t) = sum_p sum_l a_l h(t - tau_l - pT).

    Amplitudes are signed. With periodic=False the same parameters describe the
    single-period stream sum_l a_l h(t - tau_l).
    """

    pulse: PulseShape
    amplitudes: Tuple[float, ...]
    delays: Tuple[float, ...]
    period: float
    a_max: Optional[float] = None
    periodic: bool = True

    def __post_init__(self) -> None:
        amplitudes = tuple(float(a) for a in self.amplitudes)
        delays = tuple(float(d) for d in self.delays)
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "delays", delays)

        if not self.period > 0:
            raise PreconditionError("period must be positive")
        if len(amplitudes) != len(delays):
            raise PreconditionError("amplitudes and delays must have the same length")
        if len(amplitudes) == 0:
            raise PreconditionError("an FRI signal needs at least one pulse")
        if not all(np.isfinite(amplitudes)):
            raise PreconditionError("amplitudes must be finite")
        if any(d < 0 or d >= self.period for d in delays):
            raise PreconditionError("delays must lie in [0, T)")

        peak = max(abs(a) for a in amplitudes)
        if self.a_max is None:
            object.__setattr__(self, "a_max", peak)
        elif peak > self.a_max:
            raise PreconditionError(f"|a_l| = {peak} exceeds a_max = {self.a_max}")

    @property
    def L(self) -> int:
        return len(self.amplitudes)

    @property
    def degrees_of_freedom(self) -> int:
        return 2 * self.L

    @property
    def omega0(self) -> float:
        return 2.0 * np.pi / self.period

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.amplitudes)

    @property
    def tau(self) -> np.ndarray:
        return np.asarray(self.delays)

    def with_amplitudes(self, amplitudes: Iterable[float]) -> "FriSignal":
        return FriSignal(self.pulse, tuple(amplitudes), self.delays, self.period, periodic=self.periodic)

    def shifted(self, delta: float) -> "FriSignal":
        delays = np.mod(self.tau + delta, self.period)
        delays[delays >= self.period] = 0.0
        return FriSignal(self.pulse, self.amplitudes, tuple(delays), self.period, self.a_max, self.periodic)


@dataclass(frozen=True, eq=False)
class FscVector:
    """Fourier-series coefficients x_hat[k] on a sorted integer index set."""

    indices: np.ndarray
    values: np.ndarray
    omega0: float

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=int)
        vals = np.asarray(self.values, dtype=complex)
        if idx.ndim != 1 or idx.shape != vals.shape:
            raise PreconditionError("indices and coefficients must be matching 1-D sequences")
        order = np.argsort(idx, kind="stable")
        idx, vals = idx[order].copy(), vals[order].copy()
        if idx.size > 1 and np.any(np.diff(idx) == 0):
            raise PreconditionError("duplicate Fourier index")
        idx.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

        asym = self.asymmetry()
        scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
        if asym > 1e-9 * scale:
            raise PreconditionError(f"coefficients violate conjugate symmetry (max deviation {asym:.3e})")

    def __len__(self) -> int:
        return int(self.indices.size)

    def __contains__(self, k: int) -> bool:
        return bool(np.any(self.indices == k))

    def __getitem__(self, k: int) -> complex:
        hit = np.flatnonzero(self.indices == k)
        if hit.size == 0:
            raise KeyError(k)
        return complex(self.values[hit[0]])

    @property
    def has_dc(self) -> bool:
        return 0 in self

    def as_dict(self) -> Dict[int, complex]:
        return {int(k): complex(v) for k, v in zip(self.indices, self.values)}

    def asymmetry(self) -> float:
        """Largest |x[-k] - conj(x[k])| over index pairs present on both sides."""
        lookup = self.as_dict()
        worst = 0.0
        for k, v in lookup.items():
            if k > 0 and -k in lookup:
                worst = max(worst, abs(lookup[-k] - np.conj(v)))
            elif k == 0:
                worst = max(worst, abs(v.imag))
        return worst

    def restrict(self, indices: Iterable[int]) -> "FscVector":
        keep = set(int(k) for k in indices)
        mask = np.array([int(k) in keep for k in self.indices], dtype=bool)
        return FscVector(self.indices[mask], self.values[mask], self.omega0)


def fsc(signal: FriSignal, k: int) -> complex:
    """x_hat[k] = (1/T) h_hat(k w0) sum_l a_l exp(-j k w0 tau_l)."""
    return complex(fsc_vector(signal, [k]).values[0])


def fsc_vector(signal: FriSignal, indices: Iterable[int]) -> FscVector:
    ks = np.asarray(list(indices), dtype=int)
    w0 = signal.omega0
    h_hat = signal.pulse.spectrum_at(ks, w0)
    phases = np.exp(-1j * w0 * np.outer(ks, signal.tau))
    values = h_hat * (phases @ signal.a) / signal.period
    # exact symmetry: the pair (k, -k) is computed from the same positive-k sum
    values = _symmetrize(ks, values)
    return FscVector(ks, values, w0)


def _symmetrize(ks: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = values.copy()
    pos = {int(k): i for i, k in enumerate(ks)}
    for i, k in enumerate(ks):
        k = int(k)
        if k > 0 and -k in pos:
            out[pos[-k]] = np.conj(out[i])
        elif k == 0:
            out[i] = out[i].real
    return out


def ratio_sequence(fscs: FscVector, pulse: PulseShape, tolerance: Optional[float] = None) -> FscVector:
    """
    x_hat[k] / h_hat(k w0) for every retained k: a pure sum of L exponentials.

    A harmonic counts as vanishing when |h_hat| falls below `tolerance` times the
    largest |h_hat| on the index set.
    """
    tol = settings.spectrum_tolerance if tolerance is None else tolerance
    h_hat = pulse.spectrum_at(fscs.indices, fscs.omega0)
    magnitude = np.abs(h_hat)
    reference = float(magnitude.max()) if magnitude.size else 0.0

    # report the smallest positive index first so the message names k rather than -k
    for i in sorted(range(len(fscs.indices)), key=lambda i: (abs(int(fscs.indices[i])), -int(fscs.indices[i]))):
        if reference == 0.0 or magnitude[i] <= tol * reference:
            raise PreconditionError(f"vanishing pulse spectrum at index k={int(fscs.indices[i])}")

    return FscVector(fscs.indices, _symmetrize(fscs.indices, fscs.values / h_hat), fscs.omega0)


def evaluate(signal: FriSignal, t: Union[float, np.ndarray], truncation: int) -> Union[float, np.ndarray]:
    """Partial Fourier synthesis sum_{|k| <= truncation} x_hat[k] e^{j k w0 t}."""
    if signal.pulse.kind == "dirac":
        raise PreconditionError("Dirac stream is not pointwise evaluable")
    if truncation < 1:
        raise PreconditionError("truncation must be at least 1")

    coeffs = fsc_vector(signal, range(-truncation, truncation + 1))
    tt = np.asarray(t, dtype=float)
    flat = tt.reshape(-1)
    synth = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, _SYNTH_BLOCK):
        chunk = flat[start:start + _SYNTH_BLOCK]
        synth[start:start + chunk.size] = np.exp(1j * signal.omega0 * np.outer(chunk, coeffs.indices)) @ coeffs.values
    synth = synth.reshape(tt.shape)

    residue = float(np.max(np.abs(synth.imag))) if synth.size else 0.0
    if residue > 1e-9 * max(1.0, float(np.max(np.abs(synth.real))) if synth.size else 1.0):
        raise NumericalError(f"Fourier synthesis left an imaginary residue of {residue:.3e}")
    out = synth.real
    return float(out) if np.ndim(out) == 0 else out


def evaluate_time_domain(signal: FriSignal, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Direct time-domain synthesis for B-spline streams.

    Periodic signals sum every period copy that overlaps t; nonperiodic ones use
    only the p = 0 copy.
    """
    pulse = signal.pulse
    if pulse.kind != "bspline":
        raise PreconditionError(f"{pulse.kind} stream is not pointwise evaluable in the time domain")

    tt = np.asarray(t, dtype=float)
    R = pulse_support(pulse)
    T = signal.period
    if signal.periodic:
        reach = int(np.ceil(R / (2.0 * T))) + 1
        shifts = np.arange(-reach, reach + 1) * T
    else:
        shifts = np.zeros(1)

    out = np.zeros(tt.shape, dtype=float)
    for a, tau in zip(signal.amplitudes, signal.delays):
        for s in shifts:
            out = out + a * pulse.evaluate(tt - tau - s)
    return float(out) if np.ndim(out) == 0 else out


# -------------------------------------------------------------------
# JSON DOCUMENTS
# -------------------------------------------------------------------

class DiracDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["dirac"]


class BSplineDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["bspline"]
    order: int = Field(ge=0)
    scale: float = Field(gt=0)


class TabulatedDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["tabulated"]
    spectrum: Dict[int, Tuple[float, float]]


PulseDocument = Annotated[Union[DiracDocument, BSplineDocument, TabulatedDocument], Field(discriminator="kind")]


class SignalDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    period: float = Field(gt=0)
    pulse: PulseDocument
    amplitudes: List[float]
    delays: List[float]
    a_max: Optional[float] = None
    periodic: bool = True

    @field_validator("amplitudes", "delays")
    @classmethod
    def _non_empty(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("at least one pulse is required")
        return v


def pulse_from_document(doc: Union[DiracDocument, BSplineDocument, TabulatedDocument]) -> PulseShape:
    if isinstance(doc, DiracDocument):
        return PulseShape.dirac()
    if isinstance(doc, BSplineDocument):
        return PulseShape.bspline(doc.order, doc.scale)
    return PulseShape.tabulated({k: complex(re, im) for k, (re, im) in doc.spectrum.items()})


def pulse_to_dict(pulse: PulseShape) -> Dict[str, Any]:
    if pulse.kind == "dirac":
        return {"kind": "dirac"}
    if pulse.kind == "bspline":
        return {"kind": "bspline", "order": pulse.order, "scale": pulse.scale}
    return {"kind": "tabulated", "spectrum": {str(k): [v.real, v.imag] for k, v in pulse.table}}


def signal_from_dict(data: Mapping[str, Any]) -> FriSignal:
    doc = SignalDocument.model_validate(data)
    return FriSignal(
        pulse=pulse_from_document(doc.pulse),
        amplitudes=tuple(doc.amplitudes),
        delays=tuple(doc.delays),
        period=doc.period,
        a_max=doc.a_max,
        periodic=doc.periodic,
    )


def signal_to_dict(signal: FriSignal) -> Dict[str, Any]:
    return {
        "period": signal.period,
        "pulse": pulse_to_dict(signal.pulse),
        "amplitudes": list(signal.amplitudes),
        "delays": list(signal.delays),
        "a_max": signal.a_max,
        "periodic": signal.periodic,
    }
