import json

import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st
from scipy.integrate import quad

from temfri.core.errors import PreconditionError
from temfri.services.encoder import (
    FiringRecord,
    TemParams,
    check_spacing,
    encode,
    measurements,
    suggest_delta,
    validate_rate,
)
from temfri.services.kernel import design, filter_signal
from temfri.services.model import FriSignal, PulseShape

from conftest import draw_delays, encoded_case


class TestTemParams:
    def test_bias_must_exceed_bound(self):
        with pytest.raises(PreconditionError, match="bias below signal bound") as info:
            TemParams(b=0.5, kappa=1.0, delta=0.1, c=0.5)
        assert "c < b" in str(info.value)

    def test_positive_scales(self):
        with pytest.raises(PreconditionError):
            TemParams(b=1.0, kappa=0.0, delta=0.1, c=0.1)

    def test_spacing_bounds(self):
        p = TemParams(b=1.0, kappa=2.0, delta=0.1, c=0.5)
        assert p.min_spacing == pytest.approx(0.2 / 1.5)
        assert p.max_spacing == pytest.approx(0.2 / 0.5)


class TestEncode:
    def test_zero_signal_fires_uniformly(self):
        x = FriSignal(PulseShape.dirac(), (0.0,), (0.5,), 1.0)
        y = filter_signal(x, design(3, True, 1.0))
        params = TemParams(b=0.9, kappa=1.0, delta=0.07, c=0.0)
        record = encode(y, params, 0.0, 1.0)
        assert len(record) == int(0.9 / 0.07)
        np.testing.assert_allclose(record.spacings(), 0.07 / 0.9, rtol=1e-10)
        assert record.instants[0] == pytest.approx(0.07 / 0.9, rel=1e-10)

    def test_integral_over_every_interval(self):
        rng = np.random.default_rng(2021)
        for trial in range(50):
            L = int(rng.integers(1, 4))
            include_dc = bool(trial % 2)
            x = FriSignal(PulseShape.dirac(), tuple(rng.uniform(-1, 1, L)), tuple(draw_delays(rng, L, 1.0, 0.05)), 1.0)
            case = encoded_case(x, K=L + 1, include_dc=include_dc)
            y = filter_signal(case.signal, case.spec)
            t = np.concatenate([[0.0], case.record.instants])
            p = case.params
            for t0, t1 in zip(t[:-1], t[1:]):
                area, _ = quad(lambda s: y.evaluate(s), t0, t1, epsabs=1e-14, epsrel=1e-13, limit=200)
                assert area == pytest.approx(p.kappa * p.delta - p.b * (t1 - t0), abs=1e-10)
            assert check_spacing(case.record)

    def test_firings_stay_in_window(self, spline_stream):
        case = encoded_case(spline_stream, K=3, include_dc=True, c_target=None, b=1.2)
        assert np.all(case.record.instants > 0.0)
        assert np.all(case.record.instants < 1.0)
        assert case.record.count_in(0.0, 0.5) + case.record.count_in(0.5, 1.0) == len(case.record)

    def test_bound_checked_against_output(self, dirac_stream):
        y = filter_signal(dirac_stream, design(3, True, 1.0))
        with pytest.raises(PreconditionError, match="bias below signal bound"):
            encode(y, TemParams(b=1.0, kappa=1.0, delta=0.05, c=0.5), 0.0, 1.0)

    def test_declared_bound_too_small(self, spline_stream):
        y = filter_signal(spline_stream, design(3, True, 1.0))
        with pytest.raises(PreconditionError, match="declared bound"):
            encode(y, TemParams(b=1.2, kappa=1.0, delta=0.05, c=1e-4), 0.0, 1.0)

    def test_window_inside_valid_interval(self, spline_stream):
        y = filter_signal(spline_stream, design(3, True, 1.0))
        restricted = type(y)(y.fscs, y.period, valid_window=(0.0, 1.0))
        with pytest.raises(PreconditionError, match="observation window"):
            encode(restricted, TemParams(b=1.2, kappa=1.0, delta=0.05, c=0.5), 0.5, 1.0)

    def test_longer_observation_is_an_extension(self, spline_stream):
        y = filter_signal(spline_stream, design(3, True, 1.0))
        params = TemParams(b=1.2, kappa=1.0, delta=0.05, c=0.5)
        short = encode(y, params, 0.0, 1.0)
        long = encode(y, params, 0.0, 2.0)
        np.testing.assert_array_equal(long.instants[: len(short)], short.instants)


class TestMeasurements:
    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=30, unique=True),
        st.floats(min_value=0.1, max_value=3.0),
    )
    @hsettings(max_examples=50, deadline=None)
    def test_definition(self, points, b):
        t = np.sort(np.asarray(points))
        params = TemParams(b=b, kappa=1.0, delta=0.05, c=0.0)
        y = measurements(t, params)
        assert y.shape == (t.size - 1,)
        np.testing.assert_allclose(y, -b * np.diff(t) + 0.05)

    def test_unordered(self):
        params = TemParams(b=1.0, kappa=1.0, delta=0.05, c=0.0)
        with pytest.raises(PreconditionError, match="unordered firings"):
            measurements([0.1, 0.3, 0.2], params)

    def test_single_instant(self):
        params = TemParams(b=1.0, kappa=1.0, delta=0.05, c=0.0)
        with pytest.raises(PreconditionError, match="two firing instants"):
            measurements([0.1], params)


class TestRate:
    def test_table_row_meets_rate(self):
        check = validate_rate(TemParams(b=0.9, kappa=1.0, delta=0.07, c=0.3), K=3, T=1.0)
        assert check.ok
        assert check.required == pytest.approx(8.0)

    def test_rate_violation(self):
        assert not validate_rate(TemParams(b=0.9, kappa=1.0, delta=0.07, c=0.5), K=3, T=1.0).ok

    def test_suggested_delta_meets_rate(self):
        delta = suggest_delta(b=1.0, kappa=1.0, c=0.3, K=5, T=1.0)
        assert validate_rate(TemParams(1.0, 1.0, delta, 0.3), K=5, T=1.0).ok


class TestFiringRecord:
    def test_document_round_trip(self, spline_stream):
        case = encoded_case(spline_stream, K=3, include_dc=True, c_target=None, b=1.2)
        again = FiringRecord.from_dict(case.record.to_dict())
        np.testing.assert_array_equal(again.instants, case.record.instants)
        assert again.params == case.record.params

    def test_instants_are_read_only(self, spline_stream):
        case = encoded_case(spline_stream, K=3, include_dc=True, c_target=None, b=1.2)
        with pytest.raises(ValueError):
            case.record.instants[0] = 0.0

    def test_window_slice(self, spline_stream):
        case = encoded_case(spline_stream, K=3, include_dc=True, c_target=None, b=1.2)
        first_half = case.record.window(0.0, 0.5)
        assert len(first_half) == case.record.count_in(0.0, 0.5)

    def test_missing_window_length_stays_open(self, spline_stream):
        case = encoded_case(spline_stream, K=3, include_dc=True, c_target=None, b=1.2)
        data = case.record.to_dict()
        del data["T_obs"]
        again = FiringRecord.from_dict(data)
        assert again.T_obs is None
        text = json.dumps(again.to_dict(), allow_nan=False)
        assert json.loads(text)["T_obs"] is None
        np.testing.assert_array_equal(FiringRecord.from_dict(json.loads(text)).instants, case.record.instants)


class TestEncodeInvariants:
    def test_deterministic(self, spline_stream):
        y = filter_signal(spline_stream, design(3, True, 1.0))
        params = TemParams(b=1.2, kappa=1.0, delta=0.05, c=0.5)
        first = encode(y, params, 0.0, 1.0)
        second = encode(y, params, 0.0, 1.0)
        np.testing.assert_array_equal(first.instants, second.instants)

    def test_start_shifted_by_one_period(self, spline_stream):
        y = filter_signal(spline_stream, design(3, True, 1.0))
        params = TemParams(b=1.2, kappa=1.0, delta=0.05, c=0.5)
        base = encode(y, params, 0.3, 1.0).instants
        shifted = encode(y, params, 1.3, 1.0).instants
        n = min(base.size, shifted.size)
        assert abs(base.size - shifted.size) <= 1
        np.testing.assert_allclose(shifted[:n], base[:n] + 1.0, atol=1e-10)

    def test_firing_count_within_rate_bounds(self):
        rng = np.random.default_rng(5)
        for trial in range(40):
            L = int(rng.integers(1, 4))
            x = FriSignal(PulseShape.dirac(), tuple(rng.uniform(-1, 1, L)), tuple(draw_delays(rng, L, 1.0, 0.05)), 1.0)
            K = L + int(rng.integers(0, 3))
            case = encoded_case(x, K=K, include_dc=bool(trial % 2), c_target=float(rng.uniform(0.05, 0.6)))
            rate = validate_rate(case.params, K, 1.0)
            count = len(case.record)
            assert np.floor(rate.min_rate) - 1 <= count <= np.ceil(rate.max_rate) + 1


class TestSuggestDelta:
    def test_random_designs_meet_rate(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            b = float(rng.uniform(0.5, 3.0))
            c = float(rng.uniform(0.0, 0.95)) * b
            kappa = float(rng.uniform(0.5, 2.0))
            K = int(rng.integers(1, 11))
            T = float(rng.uniform(0.5, 2.0))
            delta = suggest_delta(b=b, kappa=kappa, c=c, K=K, T=T)
            check = validate_rate(TemParams(b, kappa, delta, c), K=K, T=T)
            assert check.ok
            assert check.min_rate == pytest.approx(check.required / 0.9)

    def test_bias_below_bound(self):
        with pytest.raises(PreconditionError, match="c < b"):
            suggest_delta(b=0.5, kappa=1.0, c=0.5, K=3, T=1.0)
