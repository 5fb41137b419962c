"""Correlation, unit-root and Granger screening on the bundled synthetic signals."""

# %%
import tempfile

from crudecast import econometrics, pipeline
from crudecast.synthetic import fixture_config

out = tempfile.mkdtemp()
cfg = pipeline.load_config(fixture_config(), out=out)
for stage in ("ingest", "features"):
    pipeline.run_stage(cfg, stage)
signals, _ = pipeline.load_signals(cfg)
print(signals.n_obs, "aligned business days;", ", ".join(signals.names))

# %% Lagged Pearson correlations against the price
target = signals["wti"]
entries = econometrics.correlation_table([signals[n] for n in signals.names if n != "wti"], target)
print(econometrics.correlation_text(entries))

# %% Prices carry a unit root; the differenced series do not
for entry in econometrics.stationarity_report([target, signals["gdelt_articles"]]):
    after = f"{entry.after.statistic:.2f}" if entry.after else "-"
    print(f"{entry.name:16s} level ADF {entry.level.statistic:6.2f}  differenced {entry.differenced}  after {after}")

# %% Granger tests on the stationary versions
results = econometrics.granger_table([signals["twitter_complexity"], signals["trends_opec"]], target)
print(econometrics.granger_text(results))
