from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.linalg import toeplitz
from scipy.optimize import linear_sum_assignment

from ..core.config import settings
from ..core.errors import NumericalError, PreconditionError, TemFriError
from ..core.utils import circular_distance, ensure_strictly_increasing, wrap_delays
from .encoder import FiringRecord, TemParams, measurements
from .kernel import FilteredSignal, KernelSpec
from .model import FriSignal, FscVector, PulseShape, fsc_vector, pulse_support, ratio_sequence

log = logging.getLogger(__name__)

FIRING_CONDITION = "N >= 2K+2 spike times"
ZERO_INPUT_TOLERANCE = 1e-9
Firings = Union[FiringRecord, Sequence[float], np.ndarray]


# -------------------------------------------------------------------
# TYPES
# -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """
    Row n, column k: e^{j k w0 t_{n+1}} - e^{j k w0 t_n} (k != 0) and t_{n+1} - t_n (k = 0).
    Kind "B" has no k = 0 column.
    """

    kind: Literal["A", "B"]
    entries: np.ndarray
    instants: np.ndarray
    K: int
    omega0: float

    @property
    def indices(self) -> np.ndarray:
        ks = np.arange(-self.K, self.K + 1)
        return ks if self.kind == "A" else ks[ks != 0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)

    def condition_number(self) -> float:
        s = self.singular_values()
        return float(s[0] / s[-1]) if s[-1] > 0 else math.inf

    def factor(self) -> Tuple[np.ndarray, np.ndarray]:
        """(D, V) with D the (N-1) x N difference operator and entries == D @ V."""
        n = self.instants.size
        D = np.zeros((n - 1, n))
        D[np.arange(n - 1), np.arange(n - 1)] = -1.0
        D[np.arange(n - 1), np.arange(1, n)] = 1.0
        return D, _vandermonde(self.instants, self.indices, self.omega0)


@dataclass(frozen=True, eq=False)
class FscSolution:
    fscs: FscVector
    condition_number: float
    residual: float
    rank: int
    asymmetry: float  # before symmetrization


@dataclass(frozen=True, eq=False)
class RecoveredParams:
    amplitudes: np.ndarray
    delays: np.ndarray
    residual: float
    condition_number: float
    method: Literal["annihilating", "omp"]
    degenerate: bool = False
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def L(self) -> int:
        return int(self.delays.size)

    def to_signal(self, pulse: PulseShape, period: float, periodic: bool = True) -> FriSignal:
        return FriSignal(pulse, tuple(self.amplitudes), tuple(self.delays), period, periodic=periodic)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "amplitudes": [float(a) for a in self.amplitudes],
            "delays": [float(d) for d in self.delays],
            "residual": float(self.residual),
            "condition_number": float(self.condition_number),
            "degenerate": bool(self.degenerate),
            "warnings": list(self.warnings),
        }


# -------------------------------------------------------------------
# MEASUREMENT MATRICES
# -------------------------------------------------------------------

def _vandermonde(instants: np.ndarray, indices: np.ndarray, omega0: float) -> np.ndarray:
    V = np.exp(1j * omega0 * np.outer(instants, indices))
    dc = indices == 0
    if np.any(dc):
        V[:, dc] = instants[:, None]
    return V


def build_matrix(instants: Sequence[float], K: int, omega0: float, kind: Literal["A", "B"]) -> MeasurementMatrix:
    if kind not in ("A", "B"):
        raise PreconditionError(f"unknown matrix kind {kind!r}")
    if K < 1:
        raise PreconditionError("K must be a positive integer")
    t = ensure_strictly_increasing(instants)
    if t.size < 2:
        raise PreconditionError("at least two firing instants are needed")
    T = 2.0 * np.pi / omega0
    if t[-1] - t[0] > T:
        raise PreconditionError(f"window exceeds one period: span {t[-1] - t[0]:.6g} > T = {T:.6g}")

    ks = np.arange(-K, K + 1)
    if kind == "B":
        ks = ks[ks != 0]
    V = _vandermonde(t, ks, omega0)
    entries = V[1:] - V[:-1]
    return MeasurementMatrix(kind=kind, entries=entries, instants=t, K=int(K), omega0=float(omega0))


def _column_scale(matrix: MeasurementMatrix) -> np.ndarray:
    # unknown vector holds x_hat[k] / (j k w0) for k != 0 and x_hat[0] itself
    ks = matrix.indices
    scale = np.ones(ks.shape, dtype=complex)
    nz = ks != 0
    scale[nz] = 1j * ks[nz] * matrix.omega0
    return scale


def synthesize_measurements(matrix: MeasurementMatrix, fscs: FscVector) -> np.ndarray:
    """Forward model: y = M @ [x_hat[k] / (j k w0) ..., x_hat[0], ...]."""
    coeffs = fscs.as_dict()
    try:
        x = np.array([coeffs[int(k)] for k in matrix.indices], dtype=complex)
    except KeyError as e:
        raise PreconditionError(f"coefficient for index {e.args[0]} missing from the forward model input")
    return (matrix.entries @ (x / _column_scale(matrix))).real


def solve_fsc(matrix: MeasurementMatrix, y: Sequence[float], rcond: Optional[float] = None) -> FscSolution:
    """
    Least-squares x_hat from y = M z via truncated SVD, un-scaled and made exactly conjugate symmetric.
    """
    yv = np.asarray(y, dtype=float)
    rows, cols = matrix.shape
    if yv.ndim != 1 or yv.size != rows:
        raise PreconditionError(f"dimension mismatch: matrix has {rows} rows, measurement vector {yv.size}")
    if rows < cols:
        log.warning(
            "only %d firings for %d unknowns; returning the minimum-norm solution", rows + 1, cols
        )

    try:
        U, s, Vh = np.linalg.svd(matrix.entries, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD did not converge: {e}")

    cutoff = (settings.svd_rcond if rcond is None else rcond) * s[0] if s.size else 0.0
    keep = s > cutoff
    z = Vh[keep].conj().T @ ((U[:, keep].conj().T @ yv) / s[keep])
    residual = float(np.linalg.norm(matrix.entries @ z - yv))
    cond = float(s[0] / s[-1]) if s.size and s[-1] > 0 else math.inf

    xhat = z * _column_scale(matrix)
    ks = matrix.indices
    pos = {int(k): i for i, k in enumerate(ks)}
    asym = 0.0
    sym = xhat.copy()
    for i, k in enumerate(ks):
        k = int(k)
        if k > 0:
            j = pos[-k]
            asym = max(asym, abs(xhat[j] - np.conj(xhat[i])))
            avg = 0.5 * (xhat[i] + np.conj(xhat[j]))
            sym[i], sym[j] = avg, np.conj(avg)
        elif k == 0:
            asym = max(asym, abs(xhat[i].imag))
            sym[i] = xhat[i].real

    log.debug("solve_fsc: kind=%s cond=%.3e rank=%d residual=%.3e", matrix.kind, cond, int(keep.sum()), residual)
    return FscSolution(
        fscs=FscVector(ks, sym, matrix.omega0),
        condition_number=cond,
        residual=residual,
        rank=int(keep.sum()),
        asymmetry=float(asym),
    )


# -------------------------------------------------------------------
# SPECTRAL ESTIMATION
# -------------------------------------------------------------------

def _consecutive_runs(indices: np.ndarray) -> List[np.ndarray]:
    if indices.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(indices) != 1) + 1
    return np.split(indices, breaks)


def _degenerate(L: int, T: float, method: str, cond: float, note: str) -> RecoveredParams:
    log.warning("degenerate recovery: %s", note)
    return RecoveredParams(
        amplitudes=np.zeros(L),
        delays=np.arange(L) * T / L,
        residual=0.0,
        condition_number=cond,
        method=method,  # type: ignore[arg-type]
        degenerate=True,
        warnings=(note,),
    )


def _fit_amplitudes(ratios: FscVector, delays: np.ndarray, T: float) -> Tuple[np.ndarray, float]:
    ks = ratios.indices
    M = np.exp(-1j * ratios.omega0 * np.outer(ks, delays)) / T
    a, *_ = np.linalg.lstsq(M, ratios.values, rcond=None)
    a = a.real
    return a, float(np.linalg.norm(M @ a - ratios.values))


def annihilating_filter(
    ratios: FscVector,
    L: int,
    T: float,
    prefer: Literal["positive", "negative"] = "positive",
    rank_tolerance: float = 1e-10,
    condition_number: float = math.nan,
) -> RecoveredParams:
    """
    Delays and amplitudes from a sum of L exponentials r[k] = (1/T) sum a_l e^{-j k w0 tau_l}.

    The annihilating polynomial is the right singular vector of the smallest
    singular value of the Toeplitz system built on the longest run of
    consecutive indices; its roots, pushed onto the unit circle, give the delays.
    """
    if L < 1:
        raise PreconditionError("model order L must be positive")
    if not np.any(np.abs(ratios.values) > 1e-15):
        return _degenerate(L, T, "annihilating", condition_number, "all coefficients vanish; delays unconstrained")

    runs = _consecutive_runs(ratios.indices)
    longest = max(r.size for r in runs)
    candidates = [r for r in runs if r.size == longest]
    if prefer == "positive":
        block = max(candidates, key=lambda r: r[0])
    else:
        block = min(candidates, key=lambda r: r[0])
    if block.size < 2 * L:
        raise PreconditionError(
            f"insufficient consecutive coefficients: longest run has {block.size}, need {2 * L}",
            condition="2L consecutive Fourier coefficients",
        )

    lookup = ratios.as_dict()
    b = np.array([lookup[int(k)] for k in block])
    system = toeplitz(b[L:], b[L::-1])
    _, s, Vh = np.linalg.svd(system)
    if s[0] == 0 or (s.size >= L and s[L - 1] <= rank_tolerance * s[0]):
        raise PreconditionError(
            f"model order mismatch: annihilation system has rank below L={L}; the stream likely has fewer pulses"
        )
    h = Vh[-1].conj()

    roots = np.roots(h)
    if roots.size != L:
        raise NumericalError(f"annihilating polynomial has {roots.size} roots, expected {L}")
    roots = roots / np.abs(roots)
    delays = wrap_delays(-T * np.angle(roots) / (2.0 * np.pi), T)
    delays = np.sort(delays)

    amplitudes, residual = _fit_amplitudes(ratios, delays, T)
    return RecoveredParams(
        amplitudes=amplitudes,
        delays=delays,
        residual=residual,
        condition_number=condition_number,
        method="annihilating",
    )


def _grid(T: float, resolution: float) -> np.ndarray:
    if not resolution > 0:
        raise PreconditionError("grid resolution must be positive")
    count = int(math.floor(T / resolution + 1e-9))
    return np.arange(count) * resolution


def _toeplitz_supports(fscs: FscVector, pulse: PulseShape, L: int, resolution: float, size: int) -> List[List[int]]:
    """
    Grid supports read off the Hermitian Toeplitz system of ratios on -L..L.

    The k = 0 ratio sits on the diagonal. When it was not measured, every
    eigenvalue of the zero-diagonal system is a candidate for it; the eigenvector
    of the matching diagonal shift is an annihilating polynomial.
    """
    wanted = list(range(-L, L + 1))
    present = set(int(k) for k in fscs.indices)
    if not all(k in present for k in wanted if k != 0):
        return []
    try:
        ratios = ratio_sequence(fscs.restrict(wanted), pulse)
    except PreconditionError:
        return []
    lookup = ratios.as_dict()
    b = np.array([lookup[k] if k != 0 else 0.0 for k in wanted], dtype=complex)
    system = toeplitz(b[L:], b[L::-1])

    shifts = list(-np.linalg.eigvalsh(system))
    if 0 in lookup:
        shifts.append(lookup[0].real)

    supports: List[List[int]] = []
    for shift in shifts:
        w, v = np.linalg.eigh(system + shift * np.eye(L + 1))
        roots = np.roots(v[:, int(np.argmin(np.abs(w)))])
        if roots.size != L:
            continue
        positions = wrap_delays(-np.angle(roots) / ratios.omega0, 2.0 * np.pi / ratios.omega0) / resolution
        if L <= 5:
            base = np.floor(positions)
            options = [base + np.array(bits) for bits in itertools.product((0, 1), repeat=L)]
        else:
            options = [np.round(positions)]
        for option in options:
            idx = sorted({int(i) % size for i in option})
            if len(idx) == L and idx not in supports:
                supports.append(idx)
    return supports


def omp_recover(
    fscs: FscVector,
    pulse: PulseShape,
    L: int,
    grid_resolution: float,
    T: float,
    refine: bool = True,
    condition_number: float = math.nan,
    coherence_limit: float = 0.999,
) -> RecoveredParams:
    """
    On-grid recovery: L greedy orthogonal-matching-pursuit picks, then (with
    refine) supports suggested by the Toeplitz system of ratios and
    subspace-pursuit swaps, each kept only when it lowers the residual.

    Atoms are h_hat(k w0) e^{-j k w0 m Delta} / T over the available indices;
    amplitudes are solved as real numbers.
    """
    grid = _grid(T, grid_resolution)
    if L > grid.size:
        raise PreconditionError(f"L={L} exceeds the {grid.size} grid points")
    if not np.any(np.abs(fscs.values) > 1e-15):
        return _degenerate(L, T, "omp", condition_number, "all coefficients vanish; delays unconstrained")

    ks = fscs.indices
    h_hat = pulse.spectrum_at(ks, fscs.omega0)
    atoms = h_hat[:, None] * np.exp(-1j * fscs.omega0 * np.outer(ks, grid)) / T
    # real-valued formulation keeps amplitudes real
    Phi = np.vstack([atoms.real, atoms.imag])
    target = np.concatenate([fscs.values.real, fscs.values.imag])
    norms = np.linalg.norm(Phi, axis=0)
    norms[norms == 0] = np.inf

    def project(support: List[int]) -> Tuple[np.ndarray, np.ndarray, float]:
        coef, *_ = np.linalg.lstsq(Phi[:, support], target, rcond=None)
        resid = target - Phi[:, support] @ coef
        return coef, resid, float(np.linalg.norm(resid))

    support: List[int] = []
    residual_vec = target.copy()
    for _ in range(L):
        corr = np.abs(Phi.T @ residual_vec) / norms
        corr[support] = -1.0
        support.append(int(np.argmax(corr)))
        coef, residual_vec, residual = project(support)

    floor = 1e-12 * float(np.linalg.norm(target))
    if refine and residual > floor:
        for candidate in _toeplitz_supports(fscs, pulse, L, grid_resolution, grid.size):
            cand_coef, cand_resid, cand_residual = project(candidate)
            if cand_residual < residual:
                support, coef, residual_vec, residual = candidate, cand_coef, cand_resid, cand_residual
        log.debug("omp: residual %.3e after Toeplitz candidates", residual)

    if refine:
        for _ in range(4 * L + 4):
            if residual <= floor:
                break
            corr = np.abs(Phi.T @ residual_vec) / norms
            corr[support] = -1.0
            extra = [int(i) for i in np.argsort(corr, kind="stable")[::-1][:L]]
            pool = sorted(set(support) | set(extra))
            pool_coef, *_ = np.linalg.lstsq(Phi[:, pool], target, rcond=None)
            weight = np.abs(pool_coef) * np.linalg.norm(Phi[:, pool], axis=0)
            trial = sorted(pool[i] for i in np.argsort(weight, kind="stable")[::-1][:L])
            trial_coef, trial_resid, trial_residual = project(trial)
            if trial_residual >= residual * (1.0 - 1e-12):
                break
            support, coef, residual_vec, residual = trial, trial_coef, trial_resid, trial_residual

    warnings: List[str] = []
    cols = atoms[:, support] / np.linalg.norm(atoms[:, support], axis=0)
    gram = np.abs(cols.conj().T @ cols)
    np.fill_diagonal(gram, 0.0)
    if gram.size and gram.max() > coherence_limit:
        note = f"selected atoms are nearly collinear (coherence {gram.max():.4f})"
        log.warning("omp: %s", note)
        warnings.append(note)

    order = np.argsort(grid[support], kind="stable")
    return RecoveredParams(
        amplitudes=np.asarray(coef)[order],
        delays=grid[support][order],
        residual=residual,
        condition_number=condition_number,
        method="omp",
        warnings=tuple(warnings),
    )


# -------------------------------------------------------------------
# END-TO-END RECONSTRUCTION
# -------------------------------------------------------------------

def _instants(firings: Firings) -> np.ndarray:
    if isinstance(firings, FiringRecord):
        return np.asarray(firings.instants)
    return ensure_strictly_increasing(firings)


def _require_firings(t: np.ndarray, K: int) -> None:
    if t.size < 2 * K + 2:
        raise PreconditionError(
            f"insufficient firings: N={t.size} < 2K+2={2 * K + 2}", condition=FIRING_CONDITION
        )


def reconstruct_alg1(
    firings: Firings,
    params: TemParams,
    K: int,
    pulse: PulseShape,
    L: int,
    T: float,
    method: Literal["annihilating", "omp"] = "annihilating",
    grid_resolution: Optional[float] = None,
) -> RecoveredParams:
    """Kernel with DC: y_n -> A -> x_hat -> ratios -> spectral estimation."""
    if K < L:
        raise PreconditionError(f"kernel order K={K} below L={L}", condition="K >= L")
    t = _instants(firings)
    _require_firings(t, K)

    matrix = build_matrix(t, K, 2.0 * np.pi / T, "A")
    y = measurements(t, params)
    return _estimate(solve_fsc(matrix, y), y, params, pulse, L, T, method, grid_resolution)


def reconstruct_alg2(
    firings: Firings,
    params: TemParams,
    K: int,
    pulse: PulseShape,
    L: int,
    T: float,
    delays_on_grid: bool = False,
    grid_resolution: Optional[float] = None,
) -> RecoveredParams:
    """DC-free kernel: y_n -> B -> x_hat -> annihilating filter on {1..K} (off-grid) or OMP (on-grid)."""
    if delays_on_grid:
        if K < L:
            raise PreconditionError(f"kernel order K={K} below L={L}", condition="K >= L when delays are on-grid")
    elif K < 2 * L:
        raise PreconditionError(
            f"kernel order K={K} below 2L={2 * L} for off-grid delays", condition="K >= 2L when delays are off-grid"
        )
    t = _instants(firings)
    _require_firings(t, K)

    matrix = build_matrix(t, K, 2.0 * np.pi / T, "B")
    y = measurements(t, params)
    method = "omp" if delays_on_grid else "annihilating"
    return _estimate(solve_fsc(matrix, y), y, params, pulse, L, T, method, grid_resolution)


def _estimate(
    solution: FscSolution,
    y: np.ndarray,
    params: TemParams,
    pulse: PulseShape,
    L: int,
    T: float,
    method: str,
    grid_resolution: Optional[float],
) -> RecoveredParams:
    # a zero input fires at exactly kappa*delta/b, leaving only root-finder round-off in y
    if np.max(np.abs(y)) <= ZERO_INPUT_TOLERANCE * params.kappa * params.delta:
        return _degenerate(L, T, method, solution.condition_number, "zero input; delays unconstrained")
    if method == "omp":
        if grid_resolution is None:
            raise PreconditionError("on-grid recovery needs a grid resolution")
        return omp_recover(solution.fscs, pulse, L, grid_resolution, T, condition_number=solution.condition_number)
    if method != "annihilating":
        raise PreconditionError(f"unknown spectral method {method!r}")
    ratios = ratio_sequence(solution.fscs, pulse)
    return annihilating_filter(ratios, L, T, condition_number=solution.condition_number)


def reconstruct_many(
    firing_sets: Sequence[Firings],
    params: TemParams,
    K: int,
    pulse: PulseShape,
    L: int,
    T: float,
    algorithm: Literal["alg1", "alg2"] = "alg1",
    workers: Optional[int] = None,
    **options: Any,
) -> List[Union[RecoveredParams, TemFriError]]:
    """Independent reconstructions, optionally on a thread pool; failures are returned in place."""
    solver = reconstruct_alg1 if algorithm == "alg1" else reconstruct_alg2

    def run(firings: Firings) -> Union[RecoveredParams, TemFriError]:
        try:
            return solver(firings, params, K, pulse, L, T, **options)
        except TemFriError as e:
            return e

    n = workers or settings.workers
    if n <= 1:
        return [run(f) for f in firing_sets]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(run, firing_sets))


def parameter_errors(truth: FriSignal, estimate: RecoveredParams) -> Tuple[float, float]:
    """
    (max circular delay error, max relative amplitude error) after pairing pulses
    by minimum total circular distance.
    """
    if truth.L != estimate.L:
        raise PreconditionError(f"model orders differ: {truth.L} vs {estimate.L}")
    T = truth.period
    cost = circular_distance(truth.tau[:, None], estimate.delays[None, :], T)
    rows, cols = linear_sum_assignment(cost)
    delay_err = float(np.max(cost[rows, cols]))
    a_true = truth.a[rows]
    a_est = estimate.amplitudes[cols]
    scale = np.maximum(np.abs(a_true), 1e-300)
    amp_err = float(np.max(np.abs(a_est - a_true) / scale))
    return delay_err, amp_err


# -------------------------------------------------------------------
# NONPERIODIC STREAMS
# -------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodizedKernel:
    """g~(t) = sum_{s=-S}^{S} g(t + sT), for a pulse of support R."""

    spec: KernelSpec
    S: int
    support: float

    @property
    def period(self) -> float:
        return self.spec.period

    def evaluate(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        tt = np.asarray(t, dtype=float)
        out = np.zeros(tt.shape, dtype=float)
        for s in range(-self.S, self.S + 1):
            out = out + np.asarray(self.spec.evaluate(tt + s * self.period))
        return float(out) if np.ndim(out) == 0 else out

    def filtered_samples(self, signal: FriSignal, t: Union[float, np.ndarray]) -> np.ndarray:
        """y~(t) = (x~ * g~)(t) by direct convolution of the single-period stream."""
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        pulse = signal.pulse
        out = np.zeros(tt.shape, dtype=float)
        if pulse.kind == "dirac":
            for a, tau in zip(signal.amplitudes, signal.delays):
                out += a * np.asarray(self.evaluate(tt - tau))
            return out
        if pulse.kind != "bspline":
            raise PreconditionError("direct convolution needs a time-domain pulse")

        half = self.support / 2.0
        knots = (np.arange(pulse.order + 2) - (pulse.order + 1) / 2.0) / pulse.scale
        for i, ti in enumerate(tt):
            total = 0.0
            for a, tau in zip(signal.amplitudes, signal.delays):
                val, _ = quad(
                    lambda v: float(pulse.evaluate(v)) * float(self.evaluate(ti - tau - v)),
                    -half,
                    half,
                    points=knots[1:-1],
                    limit=200,
                    epsabs=1e-13,
                    epsrel=1e-12,
                )
                total += a * val
            out[i] = total
        return out


def periodize_kernel(spec: KernelSpec, R: Optional[float], T: float, margin: int = 0) -> PeriodizedKernel:
    """
    Smallest S for which g~ agrees with the periodic kernel at every lag reachable
    from t in [0, T) and a pulse of support R centred in [0, T): S = ceil((R/T + 1)/2).
    """
    if R is None or not np.isfinite(R):
        raise PreconditionError("infinite support pulse cannot be periodized", condition="h(t) = 0 for |t| >= R/2")
    if R < 0 or margin < 0:
        raise PreconditionError("support and margin must be non-negative")
    if abs(spec.period - T) > 1e-12 * T:
        raise PreconditionError("kernel period does not match T")
    S = int(math.ceil((R / T + 1.0) / 2.0 - 1e-12)) + int(margin)
    return PeriodizedKernel(spec=spec, S=max(S, 1), support=float(R))


def filter_nonperiodic(signal: FriSignal, periodized: PeriodizedKernel) -> FilteredSignal:
    """
    Closed form of y~ on [0, T). There it equals the periodic-model output, so
    the firing/recovery pipeline applies unchanged inside that window.
    """
    R = pulse_support(signal.pulse)
    if R is None:
        raise PreconditionError("infinite support pulse cannot be periodized")
    needed = periodize_kernel(periodized.spec, R, signal.period)
    if periodized.S < needed.S:
        raise PreconditionError(f"periodized kernel uses S={periodized.S}; the pulse support needs S>={needed.S}")
    periodic_twin = FriSignal(signal.pulse, signal.amplitudes, signal.delays, signal.period, signal.a_max)
    fscs = fsc_vector(periodic_twin, periodized.spec.indices)
    return FilteredSignal(fscs=fscs, period=signal.period, valid_window=(0.0, signal.period))
