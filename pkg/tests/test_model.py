import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st
from scipy.integrate import quad

from temfri.core.errors import NumericalError, PreconditionError
from temfri.services.model import (
    FriSignal,
    FscVector,
    PulseShape,
    evaluate,
    evaluate_time_domain,
    fsc,
    fsc_vector,
    pulse_l1_norm,
    pulse_support,
    ratio_sequence,
    signal_from_dict,
    signal_to_dict,
)

amplitude = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False).filter(lambda a: abs(a) > 1e-3)
delay = st.floats(min_value=0.0, max_value=0.999)


@st.composite
def dirac_streams(draw, max_pulses=5):
    L = draw(st.integers(min_value=1, max_value=max_pulses))
    a = draw(st.lists(amplitude, min_size=L, max_size=L))
    tau = draw(st.lists(delay, min_size=L, max_size=L))
    return FriSignal(PulseShape.dirac(), tuple(a), tuple(tau), 1.0)


class TestPulseShape:
    def test_bspline_spectrum_at_dc_is_area(self):
        pulse = PulseShape.bspline(3, 20.0)
        assert pulse.spectrum_at([0], 2 * np.pi)[0] == pytest.approx(1 / 20.0)
        assert pulse_l1_norm(pulse) == pytest.approx(1 / 20.0)

    def test_bspline_spectrum_is_powered_sinc(self):
        pulse = PulseShape.bspline(2, 5.0)
        k = np.arange(-4, 5)
        expected = np.sinc(k / 5.0) ** 3 / 5.0
        np.testing.assert_allclose(pulse.spectrum_at(k, 2 * np.pi).real, expected, atol=1e-15)

    def test_support(self):
        assert pulse_support(PulseShape.dirac()) == 0.0
        assert pulse_support(PulseShape.bspline(3, 20.0)) == pytest.approx(0.2)
        assert pulse_support(PulseShape.tabulated({0: 1.0})) is None

    def test_tabulated_missing_index(self):
        pulse = PulseShape.tabulated({-1: 1.0, 0: 1.0, 1: 1.0})
        with pytest.raises(PreconditionError, match="spectrum not covered at index 2"):
            pulse.spectrum_at([-2, -1, 0, 1, 2], 2 * np.pi)

    def test_missing_index_reports_smallest_magnitude(self):
        pulse = PulseShape.tabulated({-1: 1.0, 0: 1.0, 1: 1.0})
        with pytest.raises(PreconditionError, match=r"index 3$"):
            pulse.spectrum_at([-4, -3, 3, 4], 2 * np.pi)
        with pytest.raises(PreconditionError, match=r"index -2$"):
            pulse.spectrum_at([-2, 3], 2 * np.pi)

    def test_tabulated_must_be_conjugate_symmetric(self):
        with pytest.raises(PreconditionError, match="conjugate symmetric"):
            PulseShape.tabulated({-1: 1 + 1j, 1: 1 + 1j})

    def test_bspline_time_domain_integrates_to_area(self):
        pulse = PulseShape.bspline(3, 20.0)
        t = np.linspace(-0.2, 0.2, 40001)
        assert np.trapezoid(pulse.evaluate(t), t) == pytest.approx(1 / 20.0, rel=1e-6)


class TestFriSignal:
    def test_validation(self):
        with pytest.raises(PreconditionError, match="same length"):
            FriSignal(PulseShape.dirac(), (1.0, 2.0), (0.1,), 1.0)
        with pytest.raises(PreconditionError, match=r"\[0, T\)"):
            FriSignal(PulseShape.dirac(), (1.0,), (1.0,), 1.0)
        with pytest.raises(PreconditionError, match="exceeds a_max"):
            FriSignal(PulseShape.dirac(), (2.0,), (0.1,), 1.0, a_max=1.0)

    def test_a_max_defaults_to_largest_amplitude(self, dirac_stream):
        assert dirac_stream.a_max == pytest.approx(1.0)
        assert dirac_stream.degrees_of_freedom == 6

    def test_document_round_trip(self, spline_stream):
        again = signal_from_dict(signal_to_dict(spline_stream))
        assert again == spline_stream

    def test_document_rejects_unknown_keys(self, spline_stream):
        data = signal_to_dict(spline_stream)
        data["colour"] = "red"
        with pytest.raises(Exception, match="colour"):
            signal_from_dict(data)


class TestFsc:
    def test_single_dirac_at_origin_is_flat(self):
        x = FriSignal(PulseShape.dirac(), (1.0,), (0.0,), 1.0)
        coeffs = fsc_vector(x, range(-5, 6))
        np.testing.assert_allclose(coeffs.values, np.ones(11), atol=1e-15)

    def test_closed_form(self, dirac_stream):
        k = 3
        expected = sum(a * np.exp(-1j * k * 2 * np.pi * tau) for a, tau in zip(dirac_stream.a, dirac_stream.tau))
        assert fsc(dirac_stream, k) == pytest.approx(expected, abs=1e-14)

    def test_three_dirac_stream_first_harmonic(self):
        x = FriSignal(PulseShape.dirac(), (0.5, -0.45, 0.4), (0.2, 0.33, 0.8), 1.0)
        # (1/T) integral of x(t) e^{-j w0 t}: each Dirac contributes a e^{-j w0 tau}
        expected = complex(0.0, 0.0)
        for a, tau in ((0.5, 0.2), (-0.45, 0.33), (0.4, 0.8)):
            expected += a * complex(np.cos(2 * np.pi * tau), -np.sin(2 * np.pi * tau))
        assert abs(fsc(x, 1) - expected) < 1e-12

    def test_spline_stream_matches_quadrature(self, spline_stream):
        knots = np.sort(np.mod(np.add.outer(spline_stream.tau, np.arange(-2, 3) / 20.0), 1.0).ravel())
        for k in (1, 2, 3):
            parts = [
                quad(lambda t, f=f: f(evaluate_time_domain(spline_stream, t) * np.exp(-2j * np.pi * k * t)),
                     0.0, 1.0, points=knots, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
                for f in (np.real, np.imag)
            ]
            assert abs(fsc(spline_stream, k) - complex(*parts)) < 1e-10

    @given(dirac_streams())
    @hsettings(max_examples=50, deadline=None)
    def test_conjugate_symmetry(self, x):
        coeffs = fsc_vector(x, range(-6, 7))
        lookup = coeffs.as_dict()
        for k in range(1, 7):
            assert lookup[-k] == np.conj(lookup[k])
        assert lookup[0].imag == 0.0

    @given(dirac_streams(), st.floats(min_value=-3.0, max_value=3.0).filter(lambda s: abs(s) > 1e-3))
    @hsettings(max_examples=50, deadline=None)
    def test_linearity(self, x, scale):
        scaled = x.with_amplitudes(x.a * scale)
        np.testing.assert_allclose(
            fsc_vector(scaled, range(-4, 5)).values, scale * fsc_vector(x, range(-4, 5)).values, atol=1e-12
        )

    @given(dirac_streams(), st.floats(min_value=0.0, max_value=0.999))
    @hsettings(max_examples=50, deadline=None)
    def test_shift(self, x, shift):
        ks = np.arange(-4, 5)
        moved = fsc_vector(x.shifted(shift), ks).values
        expected = fsc_vector(x, ks).values * np.exp(-1j * ks * 2 * np.pi * shift)
        np.testing.assert_allclose(moved, expected, atol=1e-11)


class TestFscVector:
    def test_rejects_asymmetric_coefficients(self):
        with pytest.raises(PreconditionError, match="conjugate symmetry"):
            FscVector(np.array([-1, 0, 1]), np.array([1.0, 0.0, 2.0]), 2 * np.pi)

    def test_restrict_and_lookup(self, dirac_stream):
        coeffs = fsc_vector(dirac_stream, range(-3, 4))
        positive = coeffs.restrict([1, 2, 3])
        assert len(positive) == 3
        assert 0 not in positive
        assert positive[2] == coeffs[2]


class TestRatioSequence:
    def test_removes_pulse_spectrum(self, spline_stream):
        ks = range(-3, 4)
        ratios = ratio_sequence(fsc_vector(spline_stream, ks), spline_stream.pulse)
        dirac_twin = FriSignal(PulseShape.dirac(), spline_stream.amplitudes, spline_stream.delays, 1.0)
        np.testing.assert_allclose(ratios.values, fsc_vector(dirac_twin, ks).values, atol=1e-12)

    def test_vanishing_spectrum(self):
        # beta^0(2t) has spectrum zeros at every even harmonic
        x = FriSignal(PulseShape.bspline(0, 2.0), (1.0,), (0.3,), 1.0)
        with pytest.raises(PreconditionError, match="vanishing pulse spectrum at index k=2"):
            ratio_sequence(fsc_vector(x, range(-3, 4)), x.pulse)


class TestEvaluate:
    def test_dirac_is_not_pointwise_evaluable(self, dirac_stream):
        with pytest.raises(PreconditionError, match="not pointwise evaluable"):
            evaluate(dirac_stream, 0.1, 10)

    def test_fourier_synthesis_matches_time_domain(self, spline_stream):
        t = np.linspace(0.0, 1.0, 257, endpoint=False)
        np.testing.assert_allclose(evaluate(spline_stream, t, 800), evaluate_time_domain(spline_stream, t), atol=1e-6)

    def test_time_domain_is_periodic(self):
        x = FriSignal(PulseShape.bspline(3, 20.0), (1.0,), (0.95,), 1.0)
        assert evaluate_time_domain(x, 0.02) == pytest.approx(float(x.pulse.evaluate(0.07)))
        nonperiodic = FriSignal(x.pulse, x.amplitudes, x.delays, 1.0, periodic=False)
        assert evaluate_time_domain(nonperiodic, 0.02) == 0.0

    def test_synthesis_is_periodic(self, spline_stream):
        t = np.linspace(-0.5, 1.0, 151)
        base = evaluate(spline_stream, t, 40)
        np.testing.assert_allclose(evaluate(spline_stream, t + 1.0, 40), base, atol=1e-12)
        np.testing.assert_allclose(evaluate(spline_stream, t + 3.0, 40), base, atol=1e-12)

    def test_scalar_in_scalar_out(self, spline_stream):
        assert isinstance(evaluate(spline_stream, 0.2, 50), float)

    def test_numerical_error_type(self):
        assert issubclass(NumericalError, ArithmeticError)
