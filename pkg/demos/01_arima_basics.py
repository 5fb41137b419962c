"""Simulate, fit and forecast an ARIMA model on a business-day calendar."""

# %%
import datetime as dt

import numpy as np

from crudecast.arima import ArimaParams, ArimaSpec, fit, forecast, one_step_predictions, simulate
from crudecast.evaluation import rmse
from crudecast.series import TradingCalendar, split

cal = TradingCalendar(holidays=(dt.date(2015, 1, 1), dt.date(2015, 1, 19), dt.date(2015, 2, 16)))
truth = ArimaParams(phi=(0.5, -0.2), theta=(0.3,), sigma2=0.25)
y = simulate(ArimaSpec(2, 1, 1), truth, 400, seed=3, calendar=cal, start_date=dt.date(2014, 1, 2), initial_level=60.0)
print(y.name, len(y), y.start_date, "->", y.end_date)

# %% Hold out the last 15 business days and fit on the rest
train, test = split(y, y.date_list()[-16])
res = fit(train, spec=ArimaSpec(2, 1, 1))
print(res.to_text("ARIMA(2,1,1) on simulated prices"))

# %% A 15-step trajectory against the held-out values
path = forecast(res, len(test))
print("trajectory RMSE", round(rmse(test, path), 4))

# %% The AR(1) forecast decays geometrically towards the mean
ar = fit(simulate(ArimaSpec(1, 0, 0), ArimaParams(phi=(0.8,), constant=5.0), 500, seed=0), spec=ArimaSpec(1, 0, 0))
fc = forecast(ar, 10).values
mu, phi = ar.params.constant, ar.params.phi[0]
closed = mu + phi ** np.arange(1, 11) * (ar.y.values[-1] - mu)
print("max |forecast - closed form|", np.max(np.abs(fc - closed)))

# %% In-sample one-step predictions are the data minus the residuals
pred = one_step_predictions(res)
print("first predictions", np.round(pred.values[:5], 3))
