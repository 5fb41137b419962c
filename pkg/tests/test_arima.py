from __future__ import annotations

import datetime as dt
import math

import numpy as np
import pytest

from conftest import make_series
from crudecast.arima import (
    ArimaParams,
    ArimaSpec,
    ArimaxSpec,
    ExogTerm,
    acf,
    ar_to_pacf,
    fit,
    forecast,
    loglik_gradient,
    loglikelihood,
    one_step_predictions,
    pacf,
    pacf_to_ar,
    select_order,
    simulate,
)
from crudecast.errors import MissingFutureExog, NonStationaryParams, TooFewObservations
from crudecast.series import SignalSet, TradingCalendar

LN2PI = math.log(2 * math.pi)


def css_ll(ssr: float, n: int) -> float:
    return -0.5 * n * (LN2PI + math.log(ssr / n) + 1)


class TestSpecs:
    def test_labels_and_default_constant(self):
        assert ArimaSpec(2, 1, 4).label == "ARIMA(2,1,4)"
        assert ArimaSpec(1, 0, 0).include_constant is True
        assert ArimaSpec(1, 1, 0).include_constant is False
        spec = ArimaxSpec.of(1, 1, 0, [ExogTerm("x", 2)])
        assert spec.label == "ARIMAX(1,1,0)"
        assert spec.exog[0].label == "x (t-2)"

    def test_validation(self):
        with pytest.raises(ValueError):
            ArimaSpec(7, 0, 0)
        with pytest.raises(ValueError):
            ExogTerm("x", 4)
        with pytest.raises(ValueError):
            ArimaxSpec.of(1, 0, 0, [ExogTerm("x", 1), ExogTerm("x", 1)])
        with pytest.raises(ValueError):
            ArimaSpec(0, 0, 0, include_constant=False) and ArimaxSpec(ArimaSpec(0, 0, 0, False))

    def test_params_must_be_stationary_and_invertible(self):
        with pytest.raises(NonStationaryParams):
            ArimaParams(phi=(1.0,))
        with pytest.raises(NonStationaryParams):
            ArimaParams(theta=(-1.5,))
        with pytest.raises(ValueError):
            ArimaParams(sigma2=0.0)


class TestTransforms:
    def test_pacf_round_trip(self):
        phi = np.array([0.5, -0.2, 0.1])
        np.testing.assert_allclose(pacf_to_ar(ar_to_pacf(phi)), phi, atol=1e-14)

    def test_ar1_pacf_is_identity(self):
        assert pacf_to_ar(np.array([0.3])).tolist() == [0.3]


class TestLoglikelihood:
    def test_ar1_hand_value(self):
        z = np.array([1.0, 2.0, 0.0, 1.0, 3.0])
        # residuals 1.5, -1, 1, 2.5 after conditioning on the first point
        ll = loglikelihood(z, None, ArimaParams(phi=(0.5,), constant=0.0))
        assert ll == pytest.approx(css_ll(10.5, 4), abs=1e-12)

    def test_ma1_hand_value(self):
        z = np.array([1.0, 2.0, 0.0, 1.0])
        # e_t = z_t - 0.5 e_{t-1}: 1, 1.5, -0.75, 1.375
        ll = loglikelihood(z, None, ArimaParams(theta=(0.5,)))
        assert ll == pytest.approx(css_ll(5.703125, 4), abs=1e-12)

    def test_regression_term(self):
        z = np.array([2.0, 3.0, 5.0])
        X = np.array([1.0, 2.0, 3.0])
        ll = loglikelihood(z, X, ArimaParams(beta=(1.0,), constant=1.0))
        # residuals 0, 0, 1
        assert ll == pytest.approx(css_ll(1.0, 3), abs=1e-12)


class TestFit:
    def test_ar1_matches_ols(self):
        y = simulate(ArimaSpec(1, 0, 0), ArimaParams(phi=(0.6,), constant=2.0), 800, seed=1)
        res = fit(y, spec=ArimaSpec(1, 0, 0))
        v = y.values
        X = np.column_stack([np.ones(v.size - 1), v[:-1]])
        b, *_ = np.linalg.lstsq(X, v[1:], rcond=None)
        assert res.params.phi[0] == pytest.approx(b[1], abs=1e-6)
        assert res.params.constant == pytest.approx(b[0] / (1 - b[1]), abs=1e-5)
        assert res.n_effective == 799

    def test_information_criteria(self):
        y = simulate(ArimaSpec(1, 0, 1), ArimaParams(phi=(0.5,), theta=(0.3,), constant=0.0), 600, seed=2)
        res = fit(y, spec=ArimaSpec(1, 0, 1))
        assert res.k == 4  # phi, theta, constant, sigma2
        assert res.aic == pytest.approx(2 * res.k - 2 * res.loglik, abs=1e-12)
        assert res.bic == pytest.approx(res.k * math.log(res.n_effective) - 2 * res.loglik, abs=1e-12)
        assert res.loglik == pytest.approx(css_ll(float(res.residuals.values @ res.residuals.values), res.n_effective), abs=1e-9)

    def test_gradient_vanishes_at_optimum(self):
        y = simulate(ArimaSpec(2, 1, 1), ArimaParams(phi=(0.5, -0.2), theta=(0.4,)), 1500, seed=3)
        res = fit(y, spec=ArimaSpec(2, 1, 1))
        g = loglik_gradient(res)
        se = np.array(list(res.standard_errors.values()))
        # gradient measured in standard-error units
        assert np.max(np.abs(g * se)) < 1e-3

    def test_deterministic_for_seed(self):
        y = simulate(ArimaSpec(1, 0, 1), ArimaParams(phi=(0.5,), theta=(0.3,)), 400, seed=4)
        a = fit(y, spec=ArimaSpec(1, 0, 1), seed=9)
        b = fit(y, spec=ArimaSpec(1, 0, 1), seed=9)
        assert a.params == b.params

    def test_exog_recovery(self):
        rng = np.random.default_rng(5)
        x = make_series(np.cumsum(rng.normal(size=700)), name="x", start=dt.date(2012, 1, 2))
        dx = np.diff(x.values)
        e = rng.normal(scale=0.5, size=698)
        dy = -1.5 * dx[:-1] + e
        y = make_series(np.r_[50.0, 50.0, 50.0 + np.cumsum(dy)], name="y", start=dt.date(2012, 1, 2))
        spec = ArimaxSpec.of(0, 1, 0, [ExogTerm("x", 1)])
        res = fit(y, SignalSet([x]), spec)
        est = res.standard_errors["x (t-1)"]
        assert res.params.beta[0] == pytest.approx(-1.5, abs=4 * est)
        assert est == pytest.approx(0.5 / math.sqrt(float(dx[:-1] @ dx[:-1])), rel=0.1)

    def test_too_few_observations(self):
        y = make_series(np.random.default_rng(6).normal(size=30))
        with pytest.raises(TooFewObservations):
            fit(y, spec=ArimaSpec(2, 0, 2))

    def test_text_and_kv_exports(self):
        y = simulate(ArimaSpec(1, 0, 0), ArimaParams(phi=(0.5,)), 300, seed=7)
        res = fit(y, spec=ArimaSpec(1, 0, 0))
        assert "ar.L1" in res.to_text("demo") and "AIC" in res.to_text()
        kv = dict(line.split("=", 1) for line in res.to_kv().splitlines())
        assert float(kv["aic"]) == res.aic


class TestPrediction:
    def test_in_sample_one_step_equals_y_minus_residual(self):
        y = simulate(ArimaSpec(1, 1, 1), ArimaParams(phi=(0.4,), theta=(0.3,)), 500, seed=8)
        res = fit(y, spec=ArimaSpec(1, 1, 1))
        pred = one_step_predictions(res)
        tail = y.between(pred.start_date)
        np.testing.assert_allclose(tail.values - pred.values, res.residuals.values, atol=1e-9)

    def test_forecast_needs_future_exog(self):
        rng = np.random.default_rng(9)
        x = make_series(rng.normal(size=300), name="x")
        y = make_series(rng.normal(size=300) + 10, name="y")
        res = fit(y, SignalSet([x]), ArimaxSpec.of(0, 0, 0, [ExogTerm("x", 1)]))
        assert len(forecast(res, 1)) == 1  # lag 1 reaches the last observed x
        with pytest.raises(MissingFutureExog):
            forecast(res, 2)

    def test_forecast_dates_follow_calendar(self):
        cal = TradingCalendar(holidays=(dt.date(2015, 1, 19),))
        y = make_series(np.random.default_rng(10).normal(size=200), calendar=cal, start=dt.date(2014, 4, 7))
        res = fit(y, spec=ArimaSpec(1, 0, 0))
        fc = forecast(res, 3)
        assert fc.start_date == cal.shift(y.end_date, 1)
        assert len(fc) == 3


class TestSimulateAndSelect:
    def test_simulate_length_and_integration(self):
        y = simulate(ArimaSpec(0, 2, 0), ArimaParams(), 50, seed=0, initial_level=5.0)
        assert len(y) == 50 and y.values[0] == 5.0

    def test_acf_pacf_ar1(self):
        y = simulate(ArimaSpec(1, 0, 0), ArimaParams(phi=(0.7,)), 20000, seed=11).values
        assert acf(y, 2)[1] == pytest.approx(0.7, abs=0.03)
        assert pacf(y, 3)[2] == pytest.approx(0.0, abs=0.03)

    def test_select_recovers_ar2(self):
        y = simulate(ArimaSpec(2, 0, 0), ArimaParams(phi=(0.6, -0.3), constant=1.0), 500, seed=0)
        sel = select_order(y, 2, 2, 0)
        assert (sel.spec.p, sel.spec.q) == (2, 0)
        assert len(sel.table) + len(sel.skipped) == 9

    def test_select_white_noise(self):
        y = simulate(ArimaSpec(0, 0, 0), ArimaParams(), 500, seed=0)
        sel = select_order(y, 2, 2, 0)
        assert (sel.spec.p, sel.spec.q) == (0, 0)
