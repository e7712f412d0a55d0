import numpy as np
import pytest
from scipy.integrate import quad

from temfri.core.errors import PreconditionError
from temfri.services.kernel import KernelSpec, bound_c, design, filter_signal, grid_peak, kernel_samples
from temfri.services.model import FriSignal, PulseShape, fsc_vector


class TestKernelSpec:
    @pytest.mark.parametrize("include_dc", [True, False])
    def test_fourier_coefficients_are_the_index_indicator(self, include_dc):
        spec = design(5, include_dc, 1.0)
        M = 64
        t = -0.5 + (np.arange(M) + 1) / M
        g = np.asarray(spec.evaluate(t))
        for k in range(-10, 11):
            coeff = np.mean(g * np.exp(-1j * 2 * np.pi * k * t))
            expected = 1.0 if (k in spec.indices) else 0.0
            assert abs(coeff - expected) < 1e-8, k

    def test_index_sets(self):
        assert list(design(2, True, 1.0).indices) == [-2, -1, 0, 1, 2]
        assert list(design(2, False, 1.0).indices) == [-2, -1, 1, 2]
        assert design(2, False, 1.0).size == 4

    def test_peak_at_origin(self):
        spec = design(4, True, 2.0)
        assert spec.evaluate(0.0) == pytest.approx(spec.sup_norm)
        assert spec.sup_norm == 9.0

    def test_compact_support(self):
        spec = design(3, True, 1.0)
        assert spec.evaluate(0.75) == 0.0
        assert spec.evaluate(-0.5) == 0.0
        assert spec.evaluate(0.5) != 0.0

    def test_rejects_bad_order(self):
        with pytest.raises(PreconditionError):
            KernelSpec(0, True, 1.0)
        with pytest.raises(PreconditionError):
            KernelSpec(2, True, -1.0)

    def test_samples_for_dump(self):
        t, g = kernel_samples(design(3, False, 1.0), points=128)
        assert t.shape == g.shape == (128,)
        assert t[-1] == pytest.approx(0.5)


class TestFilteredSignal:
    def test_keeps_only_kernel_harmonics(self, dirac_stream):
        spec = design(3, False, 1.0)
        y = filter_signal(dirac_stream, spec)
        assert list(y.fscs.indices) == [-3, -2, -1, 1, 2, 3]
        np.testing.assert_allclose(y.fscs.values, fsc_vector(dirac_stream, spec.indices).values)

    def test_output_is_real(self, spline_stream):
        y = filter_signal(spline_stream, design(3, True, 1.0))
        t = np.linspace(0, 1, 100)
        assert np.max(np.abs(y.synthesize(t).imag)) < 1e-15

    def test_primitive_differentiates_to_output(self, spline_stream):
        y = filter_signal(spline_stream, design(3, True, 1.0))
        h = 1e-6
        for t in (0.05, 0.33, 0.71):
            slope = (y.primitive(t + h) - y.primitive(t - h)) / (2 * h)
            assert slope == pytest.approx(y.evaluate(t), abs=1e-6)

    @pytest.mark.parametrize("K", [1, 3, 6])
    def test_dc_free_output_has_zero_mean(self, spline_stream, K):
        y = filter_signal(spline_stream, design(K, False, 1.0))
        assert y.integrate(0.0, 1.0) == pytest.approx(0.0, abs=1e-14)
        t = np.arange(256) / 256.0
        assert np.mean(y.evaluate(t)) == pytest.approx(0.0, abs=1e-14)

    def test_integrate_matches_quadrature(self, dirac_stream):
        y = filter_signal(dirac_stream, design(4, True, 1.0))
        expected, _ = quad(lambda s: y.evaluate(s), 0.1, 0.37, epsabs=1e-13, limit=200)
        assert y.integrate(0.1, 0.37) == pytest.approx(expected, abs=1e-11)

    def test_nonperiodic_stream_needs_periodized_kernel(self, spline_stream):
        x = FriSignal(spline_stream.pulse, spline_stream.amplitudes, spline_stream.delays, 1.0, periodic=False)
        with pytest.raises(PreconditionError, match="periodized kernel"):
            filter_signal(x, design(3, True, 1.0))

    def test_period_mismatch(self, dirac_stream):
        with pytest.raises(PreconditionError, match="period"):
            filter_signal(dirac_stream, design(3, True, 2.0))


class TestBound:
    def test_single_dirac_peak(self):
        x = FriSignal(PulseShape.dirac(), (0.3,), (0.4321,), 1.0)
        spec = design(3, True, 1.0)
        assert bound_c(x, spec) == pytest.approx(0.3 * 7, rel=1e-9)
        assert bound_c(x, spec, mode="analytic") == pytest.approx(0.3 * 7)

    def test_grid_bound_below_analytic(self, spline_stream):
        spec = design(3, True, 1.0)
        assert bound_c(spline_stream, spec) <= bound_c(spline_stream, spec, mode="analytic")

    def test_grid_bound_covers_samples(self, dirac_stream):
        spec = design(5, False, 1.0)
        y = filter_signal(dirac_stream, spec)
        dense = np.abs(y.evaluate(np.random.default_rng(7).uniform(0, 1, 5000)))
        assert bound_c(dirac_stream, spec, filtered=y) >= dense.max()

    def test_grid_bound_against_brute_force(self):
        rng = np.random.default_rng(8)
        t = np.arange(1_000_000) / 1_000_000
        for trial in range(20):
            L = int(rng.integers(1, 5))
            pulse = PulseShape.dirac() if trial % 2 else PulseShape.bspline(3, 20.0)
            x = FriSignal(pulse, tuple(rng.uniform(-1, 1, L)), tuple(np.sort(rng.uniform(0, 1, L))), 1.0)
            spec = design(int(rng.integers(1, 8)), bool(rng.integers(0, 2)), 1.0)
            y = filter_signal(x, spec)
            brute = max(float(np.max(np.abs(y.evaluate(chunk)))) for chunk in np.array_split(t, 20))
            c = bound_c(x, spec, filtered=y)
            assert c >= brute * (1.0 - 1e-12)
            assert c <= brute * (1.0 + 1e-6)

    def test_zero_signal(self):
        x = FriSignal(PulseShape.dirac(), (0.0,), (0.5,), 1.0)
        assert grid_peak(filter_signal(x, design(2, True, 1.0))) == 0.0

    def test_unknown_mode(self, dirac_stream):
        with pytest.raises(PreconditionError, match="unknown bound mode"):
            bound_c(dirac_stream, design(2, True, 1.0), mode="exact")
