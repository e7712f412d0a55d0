from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pytest

from temfri.services.encoder import FiringRecord, TemParams, encode, suggest_delta
from temfri.services.kernel import KernelSpec, bound_c, design, filter_signal
from temfri.services.model import FriSignal, PulseShape


@dataclass
class Case:
    signal: FriSignal
    spec: KernelSpec
    params: TemParams
    record: FiringRecord


def draw_delays(rng: np.random.Generator, L: int, T: float, min_separation: float) -> np.ndarray:
    while True:
        delays = np.sort(rng.uniform(0.0, T, size=L))
        gaps = np.diff(np.concatenate([delays, [delays[0] + T]]))
        if L == 1 or gaps.min() >= min_separation:
            return delays


def encoded_case(
    signal: FriSignal,
    K: int,
    include_dc: bool,
    c_target: Optional[float] = 0.3,
    b: float = 1.0,
    kappa: float = 1.0,
) -> Case:
    """Scale the stream so max|y| = c_target, pick the largest safe delta and encode one period."""
    spec = design(K, include_dc, signal.period)
    if c_target is not None:
        signal = signal.with_amplitudes(signal.a * (c_target / bound_c(signal, spec)))
    y = filter_signal(signal, spec)
    c = bound_c(signal, spec, filtered=y)
    delta = suggest_delta(b, kappa, c, K, signal.period, safety=0.9)
    params = TemParams(b, kappa, delta, c)
    return Case(signal, spec, params, encode(y, params, 0.0, signal.period))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def spline_stream() -> FriSignal:
    return FriSignal(PulseShape.bspline(3, 20.0), (0.5, -0.45, 0.4), (0.2, 0.4, 0.8), 1.0)


@pytest.fixture
def dirac_stream() -> FriSignal:
    return FriSignal(PulseShape.dirac(), (1.0, -0.6, 0.8), (0.15, 0.45, 0.7), 1.0)
