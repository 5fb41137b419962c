"""ARIMA / ARIMAX estimation by conditional sum of squares.

The model is a regression with ARMA errors on the ``d``-times differenced
target ``z``::

    z_t = c + x_t' beta + u_t
    u_t = phi_1 u_{t-1} + ... + phi_p u_{t-p} + e_t + theta_1 e_{t-1} + ... + theta_q e_{t-q}

Residuals are computed conditionally on the first ``p`` (or more)
observations with pre-sample shocks set to zero. The constant and the
exogenous coefficients enter the residuals linearly, so they are profiled out
by least squares and the derivative-free search only runs over the AR and MA
coefficients, parameterised through partial autocorrelations so that every
candidate is stationary and invertible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, signal
from scipy.special import comb

from . import report
from .errors import (
    ExogMissing,
    MissingFutureExog,
    NonConvergence,
    NonStationaryParams,
    TooFewObservations,
)
from .series import MAX_LAG, DailySeries, SignalSet, TradingCalendar, difference, inner_join, lag, to_date

logger = logging.getLogger(__name__)

MAX_ORDER = 6
N_STARTS = 5
MAX_ITER = 2000
FTOL = 1e-9
_BOUND = 4.5  # tanh(4.5) ~ 0.9998: partial autocorrelations kept off the unit circle
_LN2PI = math.log(2.0 * math.pi)


# -- specifications ----------------------------------------------------------


@dataclass(frozen=True)
class ArimaSpec:
    """Orders of an ARIMA(p, d, q) model.

    ``include_constant=None`` resolves to ``d == 0``: a mean for stationary
    models, no drift once the target has been differenced.
    """

    p: int
    d: int
    q: int
    include_constant: bool | None = None

    def __post_init__(self):
        for name in ("p", "d", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v <= MAX_ORDER:
                raise ValueError(f"{name}={v!r} outside 0..{MAX_ORDER}")
        if self.include_constant is None:
            object.__setattr__(self, "include_constant", self.d == 0)

    @property
    def label(self) -> str:
        return f"ARIMA({self.p},{self.d},{self.q})"


@dataclass(frozen=True)
class ExogTerm:
    name: str
    lag: int
    difference_like_target: bool = True

    def __post_init__(self):
        if not 1 <= self.lag <= MAX_LAG:
            raise ValueError(f"exogenous lag {self.lag} outside 1..{MAX_LAG}")

    @property
    def label(self) -> str:
        return f"{self.name} (t-{self.lag})"


@dataclass(frozen=True)
class ArimaxSpec:
    base: ArimaSpec
    exog: tuple[ExogTerm, ...] = ()

    def __post_init__(self):
        exog = tuple(self.exog)
        names = [t.name for t in exog]
        if len(set(names)) != len(names):
            raise ValueError(f"exogenous names must be unique: {names}")
        b = self.base
        if b.p + b.q == 0 and not b.include_constant and not exog and b.d == 0:
            raise ValueError("model has nothing to estimate besides the variance of a raw series")
        object.__setattr__(self, "exog", exog)

    @classmethod
    def of(cls, p: int, d: int, q: int, exog: Sequence = (), include_constant: bool | None = None) -> ArimaxSpec:
        """Shorthand: ``ArimaxSpec.of(2, 1, 4, [("x", 1)])``."""
        terms = tuple(t if isinstance(t, ExogTerm) else ExogTerm(*t) for t in exog)
        return cls(ArimaSpec(p, d, q, include_constant), terms)

    @property
    def label(self) -> str:
        b = self.base
        return f"{'ARIMAX' if self.exog else 'ARIMA'}({b.p},{b.d},{b.q})"


def _as_arimax(spec) -> ArimaxSpec:
    return spec if isinstance(spec, ArimaxSpec) else ArimaxSpec(spec)


# -- parameters --------------------------------------------------------------


def _poly_roots_outside(coefs: np.ndarray, sign: float) -> bool:
    """Roots of ``1 + sign * sum(coefs_i z^i)`` all lie outside the unit circle."""
    coefs = np.trim_zeros(np.asarray(coefs, dtype=float), "b")
    if coefs.size == 0:
        return True
    # roots outside the circle <=> companion eigenvalues inside it; stable for tiny trailing coefs
    p = coefs.size
    companion = np.zeros((p, p))
    companion[0] = -sign * coefs
    companion[1:, :-1] = np.eye(p - 1)
    return bool(np.all(np.abs(np.linalg.eigvals(companion)) < 1.0 - 1e-10))


@dataclass(frozen=True)
class ArimaParams:
    phi: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    constant: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self):
        for name in ("phi", "theta", "beta"):
            object.__setattr__(self, name, tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not (self.sigma2 > 0.0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if not _poly_roots_outside(np.array(self.phi), -1.0):
            raise NonStationaryParams(f"AR coefficients {self.phi} are not stationary")
        if not _poly_roots_outside(np.array(self.theta), 1.0):
            raise NonStationaryParams(f"MA coefficients {self.theta} are not invertible")


def pacf_to_ar(r: np.ndarray) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to stationary AR coefficients."""
    phi = np.zeros(0)
    for rk in r:
        phi = np.r_[phi - rk * phi[::-1], rk]
    return phi


def ar_to_pacf(phi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pacf_to_ar` (step-down Levinson recursion)."""
    phi = np.asarray(phi, dtype=float).copy()
    out = np.zeros(phi.size)
    for k in range(phi.size - 1, -1, -1):
        rk = phi[k]
        out[k] = rk
        if k:
            phi = (phi[:k] + rk * phi[:k][::-1]) / (1.0 - rk * rk)
    return out


def _unpack(u: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.tanh(u)
    return pacf_to_ar(r[:p]), -pacf_to_ar(r[p:])


# -- residual machinery --------------------------------------------------------


def _ar_filter(a: np.ndarray, phi: np.ndarray, start: int) -> np.ndarray:
    """``a_t - sum_i phi_i a_{t-i}`` for ``t >= start`` (rows for 2-D input)."""
    n = a.shape[0]
    w = a[start:].copy()
    for i, f in enumerate(phi, 1):
        w -= f * a[start - i : n - i]
    return w


def _ma_inverse(w: np.ndarray, theta: np.ndarray) -> np.ndarray:
    if theta.size == 0:
        return w
    return signal.lfilter([1.0], np.r_[1.0, theta], w, axis=0)


def _residuals(z, R, coef, phi, theta, start) -> np.ndarray:
    u = z - R @ coef if R.shape[1] else z
    return _ma_inverse(_ar_filter(u, phi, start), theta)


def _profile(z, R, phi, theta, start):
    """Residuals with the linear coefficients set to their least-squares values."""
    ez = _ma_inverse(_ar_filter(z, phi, start), theta)
    if R.shape[1] == 0:
        return ez, np.zeros(0)
    WR = _ma_inverse(_ar_filter(R, phi, start), theta)
    coef, *_ = np.linalg.lstsq(WR, ez, rcond=None)
    return ez - WR @ coef, coef


def _css_loglik(e: np.ndarray) -> float:
    n = e.size
    ssr = float(e @ e)
    if ssr <= 0.0:
        return math.inf
    return -0.5 * n * (_LN2PI + math.log(ssr / n) + 1.0)


def loglikelihood(z, exog_matrix, params: ArimaParams, start: int | None = None) -> float:
    """Gaussian conditional-sum-of-squares log-likelihood of a transformed target.

    ``z`` is the differenced target and ``exog_matrix`` the matching
    regressor columns (``None`` or zero columns when there are none). The
    variance is concentrated out as ``sum(e^2)/n``.
    """
    if not isinstance(params, ArimaParams):
        raise TypeError("params must be ArimaParams")
    _ = ArimaParams(params.phi, params.theta, params.beta, params.constant, params.sigma2)
    z = np.asarray(z, dtype=float)
    X = np.zeros((z.size, 0)) if exog_matrix is None else np.asarray(exog_matrix, dtype=float).reshape(z.size, -1)
    if X.shape[1] != len(params.beta):
        raise ValueError(f"{X.shape[1]} regressor columns for {len(params.beta)} coefficients")
    phi, theta = np.array(params.phi), np.array(params.theta)
    start = phi.size if start is None else start
    u = z - params.constant - X @ np.array(params.beta)
    return _css_loglik(_ma_inverse(_ar_filter(u, phi, start), theta))


# -- data layout --------------------------------------------------------------


@dataclass(frozen=True)
class _Design:
    dates: np.ndarray
    z: np.ndarray
    X: np.ndarray
    levels: np.ndarray  # y on the same dates as z


_TARGET = "\x00target"


def _exog_column(x: DailySeries, term: ExogTerm, d: int) -> DailySeries:
    col = lag(x, term.lag)
    if term.difference_like_target:
        col = difference(col, d)
    return col.replace(name=term.label)


def exog_columns(spec: ArimaxSpec, exog: SignalSet) -> SignalSet:
    """Lagged (and, where requested, differenced) regressor columns on their common dates."""
    spec = _as_arimax(spec)
    cols = []
    for term in spec.exog:
        if exog is None or term.name not in exog:
            raise ExogMissing(term.name)
        cols.append(_exog_column(exog[term.name], term, spec.base.d))
    return inner_join(cols)


def _build_design(y: DailySeries, exog: SignalSet | None, spec: ArimaxSpec) -> _Design:
    d = spec.base.d
    zs = difference(y, d).replace(name=_TARGET)
    cols = []
    for term in spec.exog:
        if exog is None or term.name not in exog:
            raise ExogMissing(term.name)
        cols.append(_exog_column(exog[term.name], term, d))
    joined = inner_join([zs, *cols]) if cols else SignalSet([zs])
    z = joined[_TARGET]
    X = joined.matrix([t.label for t in spec.exog]) if cols else np.zeros((len(z), 0))
    levels = y.between(z.start_date, z.end_date).values
    return _Design(z.dates, z.values.copy(), X, levels)


def _regressors(design: _Design, spec: ArimaxSpec) -> np.ndarray:
    cols = [np.ones(design.z.size)] if spec.base.include_constant else []
    cols += [design.X[:, j] for j in range(design.X.shape[1])]
    return np.column_stack(cols) if cols else np.zeros((design.z.size, 0))


# -- results ---------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientRow:
    name: str
    lag: int | None
    estimate: float
    se: float

    @property
    def significant(self) -> bool:
        return bool(math.isfinite(self.se) and self.se > 0 and abs(self.estimate) > 1.96 * self.se)


@dataclass(frozen=True, eq=False)
class FitResult:
    spec: ArimaxSpec
    params: ArimaParams
    standard_errors: dict[str, float]
    loglik: float
    aic: float
    bic: float
    k: int
    residuals: DailySeries
    converged: bool
    n_effective: int
    y: DailySeries
    exog: SignalSet | None
    condition_on: int
    messages: tuple[str, ...] = ()
    _design: _Design | None = field(default=None, repr=False)

    def coefficients(self) -> list[CoefficientRow]:
        rows = []
        se = self.standard_errors
        for i, v in enumerate(self.params.phi, 1):
            rows.append(CoefficientRow(f"ar.L{i}", i, v, se.get(f"ar.L{i}", math.nan)))
        for j, v in enumerate(self.params.theta, 1):
            rows.append(CoefficientRow(f"ma.L{j}", j, v, se.get(f"ma.L{j}", math.nan)))
        if self.spec.base.include_constant:
            rows.append(CoefficientRow("const", None, self.params.constant, se.get("const", math.nan)))
        for term, v in zip(self.spec.exog, self.params.beta):
            rows.append(CoefficientRow(term.name, term.lag, v, se.get(term.label, math.nan)))
        return rows

    def to_text(self, title: str = "") -> str:
        """Human-readable coefficient report."""
        head = title or f"{self.spec.label} fit of {self.y.name}"
        rows = [
            [r.name if r.lag is None or r.name.startswith(("ar.", "ma.")) else f"{r.name} (t-{r.lag})",
             report.fmt_num(r.estimate, 6), report.fmt_num(r.se, 6), "*" if r.significant else ""]
            for r in self.coefficients()
        ]
        table = report.text_table(["coefficient", "estimate", "std.err", "p<0.05"], rows)
        b = self.spec.base
        lines = [
            head,
            f"orders: p={b.p} d={b.d} q={b.q}; constant: {'included' if b.include_constant else 'excluded'}",
            f"sample: {to_date(self.residuals.dates[0])}..{self.residuals.end_date} (n_effective={self.n_effective})",
            table.rstrip("\n"),
            f"sigma2: {self.params.sigma2:.6g}",
            f"loglik: {self.loglik:.4f}",
            f"AIC: {self.aic:.4f}",
            f"BIC: {self.bic:.4f}",
            f"k: {self.k}",
            f"converged: {'yes' if self.converged else 'no'}",
        ]
        lines += [f"note: {m}" for m in self.messages]
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        """Machine-readable ``key=value`` lines."""
        b = self.spec.base
        out = {
            "model": self.spec.label,
            "p": b.p,
            "d": b.d,
            "q": b.q,
            "include_constant": str(b.include_constant).lower(),
            "n_effective": self.n_effective,
            "k": self.k,
            "loglik": repr(self.loglik),
            "aic": repr(self.aic),
            "bic": repr(self.bic),
            "sigma2": repr(self.params.sigma2),
            "converged": str(self.converged).lower(),
        }
        for r in self.coefficients():
            key = r.name if r.lag is None or r.name.startswith(("ar.", "ma.")) else f"{r.name}.L{r.lag}"
            out[f"coef.{key}"] = repr(r.estimate)
            out[f"se.{key}"] = repr(r.se)
            out[f"sig.{key}"] = str(r.significant).lower()
        return "".join(f"{k}={v}\n" for k, v in out.items())


# -- estimation ---------------------------------------------------------------


def _nelder_mead(fun, x0: np.ndarray, maxiter: int, ftol: float, step: float = 0.5):
    dim = x0.size
    simplex = np.vstack([x0, x0 + step * np.eye(dim)])
    simplex = np.clip(simplex, -_BOUND, _BOUND)
    return optimize.minimize(
        fun,
        x0,
        method="Nelder-Mead",
        bounds=[(-_BOUND, _BOUND)] * dim,
        options={
            "initial_simplex": simplex,
            "maxiter": maxiter,
            "maxfev": 4 * maxiter,
            "xatol": 1e-9,
            "fatol": ftol,
            "adaptive": dim > 2,
        },
    )


def _fd_gradient_hessian(fun, x: np.ndarray, h: np.ndarray):
    """Central-difference gradient and Hessian."""
    dim = x.size
    f0 = fun(x)
    g = np.zeros(dim)
    H = np.zeros((dim, dim))
    fp = np.zeros(dim)
    fm = np.zeros(dim)
    for i in range(dim):
        ei = np.zeros(dim)
        ei[i] = h[i]
        fp[i], fm[i] = fun(x + ei), fun(x - ei)
        g[i] = (fp[i] - fm[i]) / (2 * h[i])
        H[i, i] = (fp[i] - 2 * f0 + fm[i]) / h[i] ** 2
    for i in range(dim):
        for j in range(i + 1, dim):
            ei = np.zeros(dim)
            ej = np.zeros(dim)
            ei[i], ej[j] = h[i], h[j]
            v = (fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)) / (4 * h[i] * h[j])
            H[i, j] = H[j, i] = v
    return g, H


def _newton_polish(fun, x: np.ndarray, steps: int = 8) -> np.ndarray:
    """Finite-difference Newton refinement; each step is kept only if it lowers ``fun``."""
    fx = fun(x)
    for _ in range(steps):
        h = np.full(x.size, 1e-5)
        g, H = _fd_gradient_hessian(fun, x, h)
        if np.max(np.abs(g)) < 1e-8:
            break
        try:
            w, V = np.linalg.eigh(H)
        except np.linalg.LinAlgError:
            break
        w = np.maximum(w, 1e-8 * max(1.0, np.max(np.abs(w))))
        step = -(V @ ((V.T @ g) / w))
        improved = False
        for scale in (1.0, 0.5, 0.25, 0.1):
            cand = np.clip(x + scale * step, -_BOUND, _BOUND)
            fc = fun(cand)
            if fc < fx:
                x, fx, improved = cand, fc, True
                break
        if not improved:
            break
    return x


def fit(
    y: DailySeries,
    exog: SignalSet | None = None,
    spec: ArimaxSpec | ArimaSpec | None = None,
    seed: int = 0,
    n_starts: int = N_STARTS,
    maxiter: int = MAX_ITER,
    condition_on: int | None = None,
    strict: bool = False,
) -> FitResult:
    """Estimate an ARIMA/ARIMAX model by conditional sum of squares.

    ``condition_on`` sets how many leading transformed observations are held
    back as pre-sample values (default ``p``); order selection raises it so
    every candidate is scored on the same observations. With ``strict`` a
    search that hits its iteration cap raises :class:`NonConvergence`
    instead of returning the best point found with ``converged=False``.
    """
    if spec is None:
        raise ValueError("a model spec is required")
    spec = _as_arimax(spec)
    p, q = spec.base.p, spec.base.q
    design = _build_design(y, exog, spec)
    z = design.z
    R = _regressors(design, spec)
    start = p if condition_on is None else max(condition_on, p)
    n_eff = z.size - start
    k = p + q + R.shape[1] + 1
    if n_eff < 10 * k:
        raise TooFewObservations(f"{n_eff} usable observations for {k} parameters (need {10 * k})")

    messages: list[str] = []
    converged = True
    dim = p + q

    def objective(u):
        phi, theta = _unpack(u, p)
        e, _ = _profile(z, R, phi, theta, start)
        ll = _css_loglik(e)
        return -ll if math.isfinite(ll) else 1e300

    if dim:
        rng = np.random.default_rng(seed)
        starts = [np.zeros(dim)] + [rng.normal(0.0, 0.5, dim) for _ in range(n_starts - 1)]
        best = None
        for x0 in starts:
            res = _nelder_mead(objective, np.clip(x0, -_BOUND, _BOUND), maxiter, FTOL)
            if best is None or res.fun < best.fun:
                best = res
        u = best.x
        # restart from the best vertex with a fresh simplex, then polish
        for _ in range(3):
            res = _nelder_mead(objective, u, maxiter, FTOL, step=0.05)
            gain = objective(u) - res.fun
            if res.fun < objective(u):
                u = res.x
            if gain < FTOL:
                break
        converged = bool(best.success) or bool(res.success)
        u = _newton_polish(objective, u)
        phi, theta = _unpack(u, p)
        if np.any(np.abs(u) >= _BOUND - 1e-6):
            messages.append("a partial autocorrelation sits on the search bound")
    else:
        phi, theta = np.zeros(0), np.zeros(0)
    if not converged:
        messages.append("optimizer stopped at the iteration cap")
        if strict:
            raise NonConvergence(f"{spec.label} did not converge in {maxiter} iterations")

    e, coef = _profile(z, R, phi, theta, start)
    ssr = float(e @ e)
    if ssr <= 0.0:
        raise TooFewObservations("model fits the sample exactly; variance is zero")
    sigma2 = ssr / n_eff
    loglik = _css_loglik(e)
    const = float(coef[0]) if spec.base.include_constant else 0.0
    beta = coef[1:] if spec.base.include_constant else coef
    params = ArimaParams(phi, theta, beta, const, sigma2)

    names = [f"ar.L{i}" for i in range(1, p + 1)] + [f"ma.L{j}" for j in range(1, q + 1)]
    names += (["const"] if spec.base.include_constant else []) + [t.label for t in spec.exog]
    se = _standard_errors(z, R, params, start, coef)
    messages += se[1]
    standard_errors = dict(zip(names, se[0]))

    resid = DailySeries(f"{y.name}_residuals", y.calendar, to_date(design.dates[start]), e, "arima.fit")
    return FitResult(
        spec=spec,
        params=params,
        standard_errors=standard_errors,
        loglik=loglik,
        aic=2 * k - 2 * loglik,
        bic=k * math.log(n_eff) - 2 * loglik,
        k=k,
        residuals=resid,
        converged=converged,
        n_effective=n_eff,
        y=y,
        exog=exog,
        condition_on=start,
        messages=tuple(messages),
        _design=design,
    )


def _full_vector(params: ArimaParams, include_constant: bool) -> np.ndarray:
    lin = ([params.constant] if include_constant else []) + list(params.beta)
    return np.array(list(params.phi) + list(params.theta) + lin, dtype=float)


def _natural_loglik(z, R, p, q, start):
    def ll(x):
        phi, theta, coef = x[:p], x[p : p + q], x[p + q :]
        return _css_loglik(_residuals(z, R, coef, phi, theta, start))

    return ll


def _standard_errors(z, R, params: ArimaParams, start: int, coef: np.ndarray):
    """Standard errors from the inverse of the negative numerical Hessian."""
    p, q = len(params.phi), len(params.theta)
    x = np.r_[np.array(params.phi), np.array(params.theta), coef]
    n = z.size - start
    # step sizes near a hundredth of the rough standard errors
    scale = np.full(x.size, 1.0 / math.sqrt(n))
    if R.shape[1]:
        phi, theta = np.array(params.phi), np.array(params.theta)
        WR = _ma_inverse(_ar_filter(R, phi, start), theta)
        try:
            lin_cov = params.sigma2 * np.linalg.pinv(WR.T @ WR)
            scale[p + q :] = np.sqrt(np.maximum(np.diag(lin_cov), 1e-300))
        except np.linalg.LinAlgError:
            pass
    h = 1e-2 * scale
    ll = _natural_loglik(z, R, p, q, start)
    _, H = _fd_gradient_hessian(ll, x, h)
    try:
        cov = np.linalg.inv(-H)
        diag = np.diag(cov)
        if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
            raise np.linalg.LinAlgError
        return np.sqrt(diag), []
    except np.linalg.LinAlgError:
        return np.full(x.size, math.nan), ["Hessian not negative definite; standard errors unavailable"]


def loglik_gradient(result: FitResult) -> np.ndarray:
    """Central-difference gradient of the log-likelihood at the reported estimates."""
    design = result._design
    R = _regressors(design, result.spec)
    p, q = result.spec.base.p, result.spec.base.q
    x = _full_vector(result.params, result.spec.base.include_constant)
    se = np.array(list(result.standard_errors.values()), dtype=float)
    h = 1e-3 * np.where(np.isfinite(se) & (se > 0), se, 1e-3)
    ll = _natural_loglik(design.z, R, p, q, result.condition_on)
    return np.array([(ll(x + hi * e) - ll(x - hi * e)) / (2 * hi) for hi, e in zip(h, np.eye(x.size))])


# -- prediction ---------------------------------------------------------------


def _undifference_offsets(levels: np.ndarray, d: int) -> np.ndarray:
    """``y_t - (Δ^d y)_t``, which only involves values before ``t``."""
    if d == 0:
        return np.zeros(levels.size)
    return levels[d:] - np.diff(levels, n=d)


def one_step_predictions(result: FitResult, y: DailySeries | None = None, exog: SignalSet | None = None) -> DailySeries:
    """Rolling one-step-ahead level predictions with the fitted parameters frozen.

    ``y``/``exog`` may extend past the estimation sample; the recursion runs
    from the start of the estimation sample so in-sample residuals match the
    fit exactly.
    """
    y = result.y if y is None else y
    exog = result.exog if exog is None else exog
    spec = result.spec
    design = _build_design(y, exog, spec)
    if design.dates[0] != result._design.dates[0]:
        # keep the recursion anchored where the fit started
        first = result._design.dates[0]
        keep = design.dates >= first
        design = _Design(design.dates[keep], design.z[keep], design.X[keep], design.levels[keep])
    R = _regressors(design, spec)
    coef = np.r_[[result.params.constant] if spec.base.include_constant else [], result.params.beta]
    start = result.condition_on
    e = _residuals(design.z, R, coef, np.array(result.params.phi), np.array(result.params.theta), start)
    zhat = design.z[start:] - e
    d = spec.base.d
    full = y.between(to_date(design.dates[0]), to_date(design.dates[-1]))
    i0 = y.index_of(to_date(design.dates[0]))
    if i0 < d:
        raise TooFewObservations("not enough history to undo differencing")
    hist = y.values[i0 - d : i0 + design.z.size]
    offsets = _undifference_offsets(hist, d) if d else np.zeros(design.z.size)
    yhat = zhat + offsets[start:]
    return full.replace(values=yhat, start_date=to_date(design.dates[start]), name=f"{y.name}_predicted", provenance="one-step")


def _extend_exog(hist: DailySeries, future: SignalSet | None, name: str) -> DailySeries:
    if future is None or name not in future:
        return hist
    fut = future[name]
    if fut.end_date <= hist.end_date:
        return hist
    if fut.start_date > hist.calendar.shift(hist.end_date, 1):
        raise MissingFutureExog(f"future values of '{name}' leave a gap after {hist.end_date}")
    tail = fut.between(hist.calendar.shift(hist.end_date, 1), None)
    return hist.replace(values=np.r_[hist.values, tail.values])


def forecast(result: FitResult, horizon: int, future_exog: SignalSet | None = None) -> DailySeries:
    """Multi-step forecast from the end of the estimation sample.

    Future shocks are zero. Exogenous values come from the fitted history
    when the lag reaches back far enough and from ``future_exog`` otherwise.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    spec = result.spec
    design = result._design
    cal = result.y.calendar
    p, q, d = spec.base.p, spec.base.q, spec.base.d
    T = to_date(design.dates[-1])
    dates = [cal.shift(T, h) for h in range(1, horizon + 1)]

    Xf = np.zeros((horizon, len(spec.exog)))
    for j, term in enumerate(spec.exog):
        ext = _extend_exog(result.exog[term.name], future_exog, term.name)
        src = difference(ext, d) if term.difference_like_target else ext
        for h, day in enumerate(dates):
            try:
                Xf[h, j] = src.value_at(cal.shift(day, -term.lag))
            except KeyError:
                raise MissingFutureExog(f"no value of '{term.name}' for {day} at lag {term.lag}") from None

    phi, theta = np.array(result.params.phi), np.array(result.params.theta)
    c = result.params.constant
    beta = np.array(result.params.beta)
    u_hist = design.z - c - design.X @ beta
    e_hist = np.r_[np.zeros(result.condition_on), result.residuals.values]
    u = list(u_hist)
    e = list(e_hist) + [0.0] * horizon
    n0 = len(u)
    zf = np.zeros(horizon)
    for h in range(horizon):
        t = n0 + h
        ut = sum(phi[i - 1] * u[t - i] for i in range(1, p + 1))
        ut += sum(theta[j - 1] * e[t - j] for j in range(1, q + 1) if t - j < n0)
        u.append(ut)
        zf[h] = c + Xf[h] @ beta + ut

    levels = list(result.y.values[: result.y.index_of(T) + 1][-d:]) if d else []
    out = np.zeros(horizon)
    coefs = [(-1) ** j * comb(d, j, exact=True) for j in range(1, d + 1)]
    for h in range(horizon):
        val = zf[h] - sum(cj * levels[-j] for j, cj in enumerate(coefs, 1))
        out[h] = val
        if d:
            levels.append(val)
    return DailySeries(f"{result.y.name}_forecast", cal, dates[0], out, "arima.forecast")


# -- simulation ---------------------------------------------------------------


def simulate(
    spec: ArimaxSpec | ArimaSpec,
    params: ArimaParams,
    n: int,
    seed: int,
    exog: SignalSet | None = None,
    calendar: TradingCalendar | None = None,
    start_date=None,
    name: str = "simulated",
    burn_in: int = 200,
    initial_level: float = 0.0,
) -> DailySeries:
    """Draw a path of length ``n`` from the model.

    Shocks are Gaussian with variance ``params.sigma2``; the first
    ``burn_in`` ARMA draws are discarded before integrating ``d`` times from
    ``initial_level``. With exogenous terms the path is laid on the dates
    where every transformed regressor is available.
    """
    spec = _as_arimax(spec)
    b = spec.base
    if len(params.phi) != b.p or len(params.theta) != b.q or len(params.beta) != len(spec.exog):
        raise ValueError("parameter counts do not match the spec")
    m = n - b.d
    if m < 1:
        raise ValueError("n must exceed the differencing order")
    rng = np.random.default_rng(seed)
    shocks = rng.normal(0.0, math.sqrt(params.sigma2), m + burn_in)
    u = signal.lfilter(np.r_[1.0, params.theta], np.r_[1.0, -np.array(params.phi)], shocks)[burn_in:]

    if spec.exog:
        cols = []
        for term in spec.exog:
            if exog is None or term.name not in exog:
                raise ExogMissing(term.name)
            cols.append(_exog_column(exog[term.name], term, b.d))
        grid = inner_join(cols)
        if grid.n_obs < m:
            raise ValueError(f"exogenous data cover {grid.n_obs} points, {m} needed")
        X = grid.matrix([t.label for t in spec.exog])[:m]
        cal = grid[spec.exog[0].label].calendar
        z_start = to_date(grid.dates[0])
        first = cal.shift(z_start, -b.d)
    else:
        X = np.zeros((m, 0))
        cal = calendar or TradingCalendar()
        first = cal.shift(to_date(start_date) if start_date is not None else "2000-01-03", 0)

    const = params.constant if b.include_constant else 0.0
    z = const + X @ np.array(params.beta) + u
    levels = z
    for _ in range(b.d):
        levels = np.r_[initial_level, initial_level + np.cumsum(levels)]
    return DailySeries(name, cal, first, levels, "arima.simulate")


# -- order selection -------------------------------------------------------------


def acf(x: np.ndarray, nlags: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    dx = x - x.mean()
    denom = float(dx @ dx)
    nlags = min(nlags, x.size - 1)
    return np.array([1.0] + [float(dx[k:] @ dx[:-k]) / denom for k in range(1, nlags + 1)])


def pacf(x: np.ndarray, nlags: int) -> np.ndarray:
    """Partial autocorrelations by the Durbin-Levinson recursion."""
    r = acf(x, nlags)
    out = [1.0]
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, r.size):
        a = (r[k] - phi @ r[1:k][::-1]) / v if k > 1 else r[1]
        phi = np.r_[phi - a * phi[::-1], a]
        v *= 1.0 - a * a
        out.append(a)
    return np.array(out)


@dataclass(frozen=True)
class OrderSelection:
    spec: ArimaSpec
    table: tuple[tuple[ArimaSpec, float, float], ...]  # (spec, aic, bic) for every fitted cell
    skipped: tuple[tuple[ArimaSpec, str], ...]
    acf: np.ndarray
    pacf: np.ndarray


def select_order(
    y: DailySeries,
    p_max: int,
    q_max: int,
    d: int,
    include_constant: bool | None = None,
    exog: SignalSet | None = None,
    exog_terms: Sequence[ExogTerm] = (),
    seed: int = 0,
) -> OrderSelection:
    """Grid-search ARIMA(p, d, q) by AIC on a common estimation sample.

    Ties go to the smaller ``p + q`` and then the smaller ``q``. Cells that
    fail or do not converge are skipped and listed in ``skipped``.
    """
    if max(p_max, q_max, d) > MAX_ORDER or min(p_max, q_max, d) < 0:
        raise ValueError(f"grid bounds must lie in 0..{MAX_ORDER}")
    scored, skipped = [], []
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            base = ArimaSpec(p, d, q, include_constant)
            try:
                spec = ArimaxSpec(base, tuple(exog_terms))
                res = fit(y, exog, spec, seed=seed, condition_on=p_max)
            except (ValueError, ArithmeticError, NonConvergence) as exc:
                skipped.append((base, f"{type(exc).__name__}: {exc}"))
                continue
            if not res.converged:
                skipped.append((base, "NonConvergence"))
                logger.warning("order selection: %s did not converge", base.label)
                continue
            scored.append((base, res.aic, res.bic))
    if not scored:
        raise NonConvergence("no cell of the order grid could be fitted")
    best = min(scored, key=lambda t: (round(t[1], 8), t[0].p + t[0].q, t[0].q))[0]
    zd = difference(y, d).values
    return OrderSelection(best, tuple(scored), tuple(skipped), acf(zd, 20), pacf(zd, 20))
