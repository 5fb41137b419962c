"""Screening statistics: lagged Pearson correlations, ADF unit-root tests, Granger causality."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy import stats

from . import report
from .errors import (
    CrudecastError,
    LengthMismatch,
    SeriesTooShort,
    SingularRegression,
    ZeroVariance,
)
from .series import DailySeries, SignalSet, difference, inner_join, lag

RegressionKind = Literal["none", "constant", "constant_trend"]
ALPHA = 0.05

# MacKinnon (2010) response surfaces for the single-unit-root ADF t-statistic:
# critical value = b0 + b1/T + b2/T**2 + b3/T**3, b0 being the asymptotic value.
ADF_RESPONSE_SURFACE: dict[str, dict[str, tuple[float, float, float, float]]] = {
    "none": {
        "1%": (-2.56574, -2.2358, -3.627, 0.0),
        "5%": (-1.94100, -0.2686, -3.365, 31.223),
        "10%": (-1.61682, 0.2656, -2.714, 25.364),
    },
    "constant": {
        "1%": (-3.43035, -6.5393, -16.786, -79.433),
        "5%": (-2.86154, -2.8903, -4.234, -40.040),
        "10%": (-2.56677, -1.5384, -2.809, 0.0),
    },
    "constant_trend": {
        "1%": (-3.95877, -9.0531, -28.428, -134.155),
        "5%": (-3.41049, -4.3904, -9.036, -45.374),
        "10%": (-3.12705, -2.5856, -3.925, -22.380),
    },
}


def adf_critical_values(kind: RegressionKind, nobs: float = math.inf) -> dict[str, float]:
    """Dickey-Fuller critical values for ``kind`` at sample size ``nobs``."""
    table = ADF_RESPONSE_SURFACE[kind]
    if math.isinf(nobs):
        return {lvl: b[0] for lvl, b in table.items()}
    t = 1.0 / nobs
    return {lvl: b[0] + b[1] * t + b[2] * t**2 + b[3] * t**3 for lvl, b in table.items()}


# -- least squares -----------------------------------------------------------


@dataclass
class _Ols:
    beta: np.ndarray
    resid: np.ndarray
    ssr: float
    nobs: int
    rinv: np.ndarray  # inverse of the R factor: (X'X)^-1 = rinv @ rinv.T

    @property
    def df_resid(self) -> int:
        return self.nobs - self.beta.size

    @property
    def s2(self) -> float:
        return self.ssr / self.df_resid

    def cov(self) -> np.ndarray:
        return self.s2 * (self.rinv @ self.rinv.T)


def _ols(y: np.ndarray, X: np.ndarray) -> _Ols:
    n, k = X.shape
    if n <= k:
        raise SingularRegression(f"{n} observations for {k} regressors")
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0) * math.sqrt(n):
        raise SingularRegression("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    ssr = float(resid @ resid)
    rinv = np.linalg.solve(r, np.eye(k))
    return _Ols(beta, resid, ssr, n, rinv)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, DailySeries) else np.asarray(x, dtype=float)


# -- correlation -----------------------------------------------------------


@dataclass(frozen=True)
class CorrelationEntry:
    predictor: str
    lag: int
    r: float
    p_value: float
    n: int
    error: str = ""

    @property
    def significant(self) -> bool:
        return not self.error and self.p_value < ALPHA


def pearson(x, y, predictor: str | None = None, lag_used: int = 0) -> CorrelationEntry:
    """Pearson r with a two-sided t-test p-value.

    Series arguments are inner-joined on dates first; plain arrays must have
    equal length.
    """
    if isinstance(x, DailySeries) and isinstance(y, DailySeries):
        joined = inner_join([x.replace(name="x"), y.replace(name="y")])
        xs, ys = joined.matrix().T
    else:
        xs, ys = _values(x), _values(y)
    if xs.size != ys.size:
        raise LengthMismatch(f"lengths {xs.size} and {ys.size} differ")
    n = xs.size
    if n < 3:
        raise SeriesTooShort("pearson needs at least 3 paired observations")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("a correlation input is constant")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = float(2.0 * stats.t.sf(abs(t), n - 2))
    if predictor is None:
        predictor = x.name if isinstance(x, DailySeries) else ""
    return CorrelationEntry(predictor, lag_used, r, p, n)


def correlation_table(
    signals: SignalSet | Iterable[DailySeries], target: DailySeries, lags: Sequence[int] = (1, 2, 3)
) -> list[CorrelationEntry]:
    """One entry per (predictor, lag) correlating the lagged predictor with the target.

    A predictor that cannot be correlated (constant, too short) yields an
    entry with NaN statistics and the error class name in ``error``.
    """
    out = []
    for s in signals:
        for k in lags:
            try:
                out.append(pearson(lag(s, k), target, predictor=s.name, lag_used=k))
            except CrudecastError as exc:
                out.append(CorrelationEntry(s.name, k, math.nan, math.nan, 0, type(exc).__name__))
    return out


def correlation_text(entries: Sequence[CorrelationEntry], lags: Sequence[int] = (1, 2, 3)) -> str:
    header = ["Predictor", *(f"Lag {k}" for k in lags)]
    rows = []
    for name in dict.fromkeys(e.predictor for e in entries):
        cells = {e.lag: e for e in entries if e.predictor == name}
        row = [name]
        for k in lags:
            e = cells.get(k)
            if e is None:
                row.append("")
            elif e.error:
                row.append(e.error)
            else:
                row.append(report.star(e.r, e.significant))
        rows.append(row)
    n = max((e.n for e in entries), default=0)
    return report.text_table(header, rows, footer=f"N = {n}, *p<0.05")


# -- unit roots ------------------------------------------------------------


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lags_used: int
    regression_kind: RegressionKind
    critical_values: dict[str, float]
    nobs: int

    @property
    def stationary_at_5pct(self) -> bool:
        return self.statistic < self.critical_values["5%"]


def default_adf_lags(n: int) -> int:
    """Schwert's rule ``12 (n/100)^(1/4)`` capped so the length precondition holds."""
    return max(0, min(int(12 * (n / 100.0) ** 0.25), n - 20))


def _adf_design(y: np.ndarray, lags: int, start: int, kind: RegressionKind):
    dy = np.diff(y)
    rows = np.arange(start, dy.size)
    cols = [y[rows]]  # y_{t-1} aligned with dy_t
    cols += [dy[rows - j] for j in range(1, lags + 1)]
    if kind in ("constant", "constant_trend"):
        cols.append(np.ones(rows.size))
    if kind == "constant_trend":
        cols.append(rows.astype(float) + 1.0)
    return dy[rows], np.column_stack(cols)


def adf_test(
    s: DailySeries | np.ndarray,
    max_lags: int | None = None,
    kind: RegressionKind = "constant",
    autolag: bool = True,
) -> AdfResult:
    """Augmented Dickey-Fuller test of a unit root in ``s``.

    With ``autolag`` the number of lagged differences is chosen by AIC over
    ``0..max_lags`` on a common estimation sample; the chosen regression is
    then re-run on every observation it can use.
    """
    if kind not in ADF_RESPONSE_SURFACE:
        raise ValueError(f"unknown regression kind {kind!r}")
    y = _values(s)
    n = y.size
    if max_lags is None:
        max_lags = default_adf_lags(n)
    if n < 20 + max_lags:
        raise SeriesTooShort(f"ADF with {max_lags} lags needs at least {20 + max_lags} points, got {n}")

    if autolag and max_lags > 0:
        best_aic, best = math.inf, 0
        for p in range(max_lags + 1):
            dep, X = _adf_design(y, p, max_lags, kind)
            fit = _ols(dep, X)
            if fit.ssr <= 0.0:
                raise SingularRegression("perfect fit in ADF regression")
            aic = fit.nobs * math.log(fit.ssr / fit.nobs) + 2 * X.shape[1]
            if aic < best_aic - 1e-12:
                best_aic, best = aic, p
        chosen = best
    else:
        chosen = max_lags

    dep, X = _adf_design(y, chosen, chosen, kind)
    fit = _ols(dep, X)
    if fit.ssr <= 0.0:
        raise SingularRegression("perfect fit in ADF regression")
    se = math.sqrt(fit.cov()[0, 0])
    stat = float(fit.beta[0] / se)
    return AdfResult(stat, chosen, kind, adf_critical_values(kind, fit.nobs), fit.nobs)


@dataclass(frozen=True)
class StationarityEntry:
    name: str
    level: AdfResult
    differenced: bool
    after: AdfResult | None = None


def make_stationary(
    s: DailySeries, max_lags: int | None = None, kind: RegressionKind = "constant"
) -> tuple[DailySeries, StationarityEntry]:
    """First-difference ``s`` when the ADF test does not reject a unit root at 5%."""
    level = adf_test(s, max_lags, kind)
    if level.stationary_at_5pct:
        return s, StationarityEntry(s.name, level, False)
    ds = difference(s, 1)
    after = None
    try:
        after = adf_test(ds, max_lags, kind)
    except CrudecastError:
        pass
    return ds, StationarityEntry(s.name, level, True, after)


def stationarity_text(entries: Sequence[StationarityEntry]) -> str:
    header = ["Series", "ADF stat", "Lags", "5% cv", "Verdict", "Differenced", "ADF after"]
    rows = []
    for e in entries:
        rows.append(
            [
                e.name,
                report.fmt_num(e.level.statistic),
                str(e.level.lags_used),
                report.fmt_num(e.level.critical_values["5%"]),
                "stationary" if e.level.stationary_at_5pct else "unit root",
                "yes" if e.differenced else "no",
                report.fmt_num(e.after.statistic) if e.after else "",
            ]
        )
    return report.text_table(header, rows, footer=f"regression: {entries[0].level.regression_kind}" if entries else "")


# -- Granger causality -------------------------------------------------------


@dataclass(frozen=True)
class GrangerResult:
    cause: str
    effect: str
    lag_order: int
    chi2: float
    p_value: float
    nobs: int
    form: Literal["chi2", "f"] = "chi2"

    @property
    def significant_at_5pct(self) -> bool:
        return self.p_value < ALPHA


def granger_test(
    cause: DailySeries | np.ndarray,
    effect: DailySeries | np.ndarray,
    lag_order: int,
    form: Literal["chi2", "f"] = "chi2",
    include_constant: bool = True,
) -> GrangerResult:
    """Does ``cause`` help predict ``effect`` beyond ``effect``'s own lags?

    Regresses ``effect_t`` on ``lag_order`` own lags and ``lag_order`` lags
    of ``cause`` and Wald-tests that the cause coefficients are all zero.
    ``form="chi2"`` reports the Wald statistic against chi-square(L);
    ``form="f"`` reports Wald/L against F(L, n - k).
    """
    if lag_order < 1:
        raise ValueError("lag_order must be positive")
    if isinstance(cause, DailySeries) and isinstance(effect, DailySeries):
        x, y = inner_join([cause.replace(name="cause"), effect.replace(name="effect")]).matrix().T
        names = cause.name, effect.name
    else:
        x, y = _values(cause), _values(effect)
        if x.size != y.size:
            raise LengthMismatch(f"lengths {x.size} and {y.size} differ")
        names = getattr(cause, "name", "cause"), getattr(effect, "name", "effect")
    n = y.size
    L = lag_order
    if n < 10 * L:
        raise SeriesTooShort(f"Granger test at lag {L} needs {10 * L} points, got {n}")

    rows = np.arange(L, n)
    cols = [y[rows - j] for j in range(1, L + 1)] + [x[rows - j] for j in range(1, L + 1)]
    if include_constant:
        cols.append(np.ones(rows.size))
    fit = _ols(y[rows], np.column_stack(cols))
    if fit.ssr <= 0.0:
        raise SingularRegression("perfect fit in Granger regression")
    idx = np.arange(L, 2 * L)
    b = fit.beta[idx]
    cov = fit.cov()[np.ix_(idx, idx)]
    wald = float(b @ np.linalg.solve(cov, b))
    wald = max(wald, 0.0)
    if form == "chi2":
        stat, p = wald, float(stats.chi2.sf(wald, L))
    elif form == "f":
        stat = wald / L
        p = float(stats.f.sf(stat, L, fit.df_resid))
    else:
        raise ValueError(f"unknown form {form!r}")
    return GrangerResult(names[0], names[1], L, stat, p, fit.nobs, form)


def granger_table(
    signals: SignalSet | Iterable[DailySeries],
    target: DailySeries,
    lags: Sequence[int] = (1, 2, 3),
    max_adf_lags: int | None = None,
    kind: RegressionKind = "constant",
    form: Literal["chi2", "f"] = "chi2",
) -> list[GrangerResult]:
    """Granger-test every predictor against ``target`` at each lag.

    Every series is ADF-tested first and differenced once when a unit root
    is not rejected at 5%. A predictor named like the target is skipped.
    """
    target_st, _ = make_stationary(target, max_adf_lags, kind)
    out = []
    for s in signals:
        if s.name == target.name:
            continue
        st, _ = make_stationary(s, max_adf_lags, kind)
        for L in lags:
            out.append(granger_test(st, target_st, L, form=form))
    return out


def stationarity_report(
    series: Iterable[DailySeries], max_adf_lags: int | None = None, kind: RegressionKind = "constant"
) -> list[StationarityEntry]:
    return [make_stationary(s, max_adf_lags, kind)[1] for s in series]


def granger_text(results: Sequence[GrangerResult], lags: Sequence[int] = (1, 2, 3)) -> str:
    header = ["Variable", *(f"Lag {k} (chi2)" for k in lags)]
    rows = []
    for name in dict.fromkeys(r.cause for r in results):
        cells = {r.lag_order: r for r in results if r.cause == name}
        rows.append([name] + [report.star(cells[k].chi2, cells[k].significant_at_5pct) if k in cells else "" for k in lags])
    n = max((r.nobs for r in results), default=0)
    return report.text_table(header, rows, footer=f"N = {n}; *p<0.05")
