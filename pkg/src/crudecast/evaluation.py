"""Forecast accuracy metrics and the train/test model battery."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import report
from .arima import ArimaxSpec, CoefficientRow, FitResult, exog_columns, fit, one_step_predictions
from .errors import CollinearRegressors, CrudecastError, LengthMismatch, ZeroActual
from .series import DailySeries, SignalSet, inner_join, split

logger = logging.getLogger(__name__)

COLLINEARITY_THRESHOLD = 0.95


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(actual, DailySeries) and isinstance(predicted, DailySeries):
        if len(actual) != len(predicted):
            raise LengthMismatch(f"{len(actual)} actuals vs {len(predicted)} predictions")
        if actual.start_date != predicted.start_date or actual.calendar != predicted.calendar:
            raise LengthMismatch("actual and predicted series cover different dates")
        a, p = actual.values, predicted.values
    else:
        a = np.asarray(getattr(actual, "values", actual), dtype=float)
        p = np.asarray(getattr(predicted, "values", predicted), dtype=float)
        if a.shape != p.shape:
            raise LengthMismatch(f"shapes {a.shape} and {p.shape} differ")
    if a.size == 0:
        raise LengthMismatch("no points to compare")
    return a, p


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return math.sqrt(math.fsum((a - p) ** 2) / a.size)


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return math.fsum(np.abs(a - p)) / a.size


def mape(actual, predicted) -> float:
    """Mean absolute percentage error, in percent."""
    a, p = _pair(actual, predicted)
    if np.any(a == 0):
        raise ZeroActual("MAPE is undefined when an actual value is zero")
    return 100.0 * math.fsum(np.abs(a - p) / np.abs(a)) / a.size


@dataclass(frozen=True, eq=False)
class ForecastReport:
    model_name: str
    spec: ArimaxSpec
    predictions: DailySeries | None
    actuals: DailySeries | None
    rmse: float
    mape_percent: float
    aic: float
    bic: float
    n_obs: int
    coefficient_rows: tuple[CoefficientRow, ...] = ()
    converged: bool = True
    error: str = ""
    fit: FitResult | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return not self.error

    def trajectory_rows(self) -> list[tuple[str, float, float]]:
        return [
            (d.isoformat(), a, p)
            for d, a, p in zip(self.actuals.date_list(), self.actuals.values.tolist(), self.predictions.values.tolist())
        ]


def check_collinearity(spec: ArimaxSpec, signals: SignalSet, threshold: float = COLLINEARITY_THRESHOLD) -> None:
    """Refuse a model whose transformed regressor columns correlate above ``threshold``."""
    if len(spec.exog) < 2:
        return
    cols = exog_columns(spec, signals)
    X = cols.matrix()
    for i, j in itertools.combinations(range(X.shape[1]), 2):
        a, b = X[:, i] - X[:, i].mean(), X[:, j] - X[:, j].mean()
        denom = math.sqrt(float(a @ a) * float(b @ b))
        r = float(a @ b) / denom if denom > 0 else 1.0
        if abs(r) > threshold:
            raise CollinearRegressors(
                f"|r|={abs(r):.3f} between {cols.names[i]} and {cols.names[j]} exceeds {threshold}"
            )


def evaluate_model(
    name: str,
    spec: ArimaxSpec,
    target: DailySeries,
    signals: SignalSet | None,
    boundary,
    seed: int = 0,
    collinearity_threshold: float = COLLINEARITY_THRESHOLD,
) -> ForecastReport:
    """Fit on dates up to ``boundary`` and score frozen one-step forecasts after it."""
    train, test = split(target, boundary)
    try:
        if signals is not None and spec.exog:
            check_collinearity(spec, _restrict(signals, train), collinearity_threshold)
        result = fit(train, signals, spec, seed=seed)
        pred = one_step_predictions(result, target, signals)
        joined = inner_join([test, pred])
        actual, predicted = joined[test.name], joined[pred.name]
        return ForecastReport(
            model_name=name,
            spec=spec,
            predictions=predicted,
            actuals=actual,
            rmse=rmse(actual, predicted),
            mape_percent=mape(actual, predicted),
            aic=result.aic,
            bic=result.bic,
            n_obs=result.n_effective,
            coefficient_rows=tuple(result.coefficients()),
            converged=result.converged,
            fit=result,
        )
    except CrudecastError as exc:
        logger.warning("model %s failed: %s", name, exc)
        return ForecastReport(name, spec, None, None, math.nan, math.nan, math.nan, math.nan, 0,
                              converged=False, error=f"{type(exc).__name__}: {exc}")


def _restrict(signals: SignalSet, train: DailySeries) -> SignalSet:
    return SignalSet(s.between(None, train.end_date) for s in signals)


def model_battery(
    target: DailySeries,
    signals: SignalSet | None,
    specs: Sequence[tuple[str, ArimaxSpec]],
    boundary,
    seed: int = 0,
    collinearity_threshold: float = COLLINEARITY_THRESHOLD,
) -> list[ForecastReport]:
    """Evaluate every named spec in order.

    When no spec is free of exogenous terms, an ``ARIMA baseline`` row with
    the first spec's orders is put in front so every battery carries a
    pure-ARIMA reference.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("model battery needs at least one spec")
    if all(s.exog for _, s in specs):
        specs.insert(0, ("ARIMA baseline", ArimaxSpec(specs[0][1].base)))
    return [
        evaluate_model(name, spec, target, signals, boundary, seed, collinearity_threshold)
        for name, spec in specs
    ]


# -- exports -----------------------------------------------------------------------


def battery_text(reports: Sequence[ForecastReport]) -> str:
    """Variables as rows, models as columns, ``*`` marking p<0.05 coefficients."""
    labels: list[tuple[str, int]] = []
    for r in reports:
        for t in r.spec.exog:
            if (t.name, t.lag) not in labels:
                labels.append((t.name, t.lag))
    header = ["Variable", *(r.model_name for r in reports)]
    rows = [["Specification", *(r.spec.label for r in reports)]]
    for name, lag in labels:
        row = [f"{name} (t-{lag})"]
        for r in reports:
            cell = next((c for c in r.coefficient_rows if c.name == name and c.lag == lag), None)
            row.append(report.star(cell.estimate, cell.significant) if cell else "")
        rows.append(row)

    def metric(label, attr, digits):
        return [label] + [report.fmt_num(getattr(r, attr), digits) if r.ok else "failed" for r in reports]

    rows.append(["Number of Observations", *(str(r.n_obs) if r.ok else "failed" for r in reports)])
    rows.append(metric("AIC (in-sample)", "aic", 2))
    rows.append(metric("BIC (in-sample)", "bic", 2))
    rows.append(metric("RMSE (out-of-sample)", "rmse", 3))
    rows.append(metric("MAPE (out-of-sample)", "mape_percent", 3))
    notes = [f"{r.model_name}: {r.error}" for r in reports if r.error]
    notes += [f"{r.model_name}: optimizer did not converge" for r in reports if r.ok and not r.converged]
    footer = "*p<0.05; (t-n) n-day lag"
    if notes:
        footer += "\n" + "\n".join(notes)
    return report.text_table(header, rows, footer)


def write_battery_csv(reports: Sequence[ForecastReport], metrics_path, coefficients_path) -> None:
    report.write_csv(
        metrics_path,
        ["model", "specification", "n_obs", "aic", "bic", "rmse", "mape_percent", "converged", "error"],
        [
            [r.model_name, r.spec.label, r.n_obs, r.aic, r.bic, r.rmse, r.mape_percent, str(r.converged).lower(), r.error]
            for r in reports
        ],
    )
    report.write_csv(
        coefficients_path,
        ["model", "coefficient", "lag", "estimate", "se", "significant"],
        [
            [r.model_name, c.name, "" if c.lag is None else c.lag, c.estimate, c.se, str(c.significant).lower()]
            for r in reports
            for c in r.coefficient_rows
        ],
    )


def write_trajectory_csv(rep: ForecastReport, path) -> None:
    report.write_csv(path, ["date", "actual", "predicted"], rep.trajectory_rows())
