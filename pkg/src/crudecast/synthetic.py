"""Planted-truth fixture: raw media files plus a price series built from them.

The bundled dataset under ``crudecast/data/fixture`` was produced by
:func:`generate`. Three latent AR(1) drivers shape the raw inputs:

* ``C`` sets the share of rare words in tweets, so it moves tweet complexity;
* ``W`` moves "Price of oil" page views, tweet volume and the matching
  Trends query;
* ``G`` moves the number of matching GKG records.

The price is ARIMA(2,1,4) noise plus ``b1 * complexity(t-1) + b2 *
wiki_price_of_oil(t-3) + b3 * gdelt_articles(t-2)``. The three regressors
are the values the pipeline itself derives from the raw files, so a
correctly specified ARIMAX model recovers the planted coefficients exactly
up to noise. The NASDAQ control tracks realized complexity and acts as an
imperfect proxy for it.

Regenerate with ``python -m crudecast.synthetic --out DIR``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import gzip
import json
import math
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .arima import ArimaParams, ArimaxSpec, simulate
from .series import SignalSet, TradingCalendar

FIXTURE_DIR = Path(__file__).parent / "data" / "fixture"
FIXTURE_SEED = 10
END_DATE = dt.date(2015, 4, 1)
BOUNDARY = dt.date(2015, 3, 13)
N_OBS = 372
LEAD_DAYS = 10

NOISE_PARAMS = ArimaParams(phi=(0.5, -0.2), theta=(0.3, 0.1, -0.1, 0.05), sigma2=0.35**2)
# lags of the planted contributions: complexity, wiki "Price of oil", GDELT articles
PLANTED = (("twitter_complexity", 1), ("wiki_price_of_oil", 3), ("gdelt_articles", 2))

NYSE_HOLIDAYS = (
    "2013-01-01", "2013-01-21", "2013-02-18", "2013-03-29", "2013-05-27", "2013-07-04",
    "2013-09-02", "2013-11-28", "2013-12-25",
    "2014-01-01", "2014-01-20", "2014-02-17", "2014-04-18", "2014-05-26", "2014-07-04",
    "2014-09-01", "2014-11-27", "2014-12-25",
    "2015-01-01", "2015-01-19", "2015-02-16", "2015-04-03", "2015-05-25", "2015-07-03",
    "2015-09-07", "2015-11-26", "2015-12-25",
)

POSITIVE = (
    "gain", "gains", "rally", "rebound", "strong", "good", "great", "up", "rise", "rising",
    "boost", "win", "bullish", "recover", "recovery", "surge", "happy", "optimistic", "profit", "growth",
)
NEGATIVE = (
    "drop", "drops", "fall", "falling", "weak", "bad", "crash", "down", "loss", "losses",
    "fear", "slump", "bearish", "glut", "plunge", "worst", "worry", "cut", "decline", "crisis",
)
COMMON = (
    "the", "price", "of", "today", "barrel", "market", "is", "on", "for", "and", "in", "at",
    "news", "trading", "this", "week", "energy", "brent", "wti", "futures", "supply", "demand",
    "analysts", "says", "report", "stocks", "new", "after", "more", "data",
)
QUERY_TERMS = ("crude", "oil", "opec")
EXCLUSIONS = ("olive oil", "essential oil")
GKG_TERMS = ("oil", "opec")
GKG_MATCH_THEMES = ("ENV_OIL", "ECON_OILPRICE", "OPEC", "ENV_OIL;ECON_OILPRICE")
GKG_OTHER_THEMES = ("TAX_FNCACT", "EDUCATION", "ELECTION;LEADER", "SOC_POINTSOFINTEREST", "HEALTH_PANDEMIC")
ORGANIZATIONS = ("opec", "exxon mobil", "bp", "chevron", "saudi aramco", "international energy agency", "shell")
_SYLLABLES = ("ka", "lo", "mi", "ru", "te", "zo", "ven", "dar", "qui", "sel", "bor", "nix", "pha", "gul", "tev")


@dataclasses.dataclass(frozen=True)
class FixtureInfo:
    seed: int
    n_obs: int
    rmse: dict[str, float]
    ok: bool


def calendar() -> TradingCalendar:
    return TradingCalendar(frozenset({5, 6}), tuple(dt.date.fromisoformat(h) for h in NYSE_HOLIDAYS))


def fixture_config() -> Path:
    """Path of the bundled run configuration."""
    return FIXTURE_DIR / "config.toml"


def _ar1(rng: np.random.Generator, n: int, rho: float = 0.95) -> np.ndarray:
    """Unit-variance stationary AR(1) path."""
    e = rng.normal(0.0, math.sqrt(1 - rho * rho), n)
    x = np.empty(n)
    x[0] = rng.normal()
    for t in range(1, n):
        x[t] = rho * x[t - 1] + e[t]
    return x


def _gz_write(path: Path, lines: list[str]) -> None:
    with open(path, "wb") as raw:
        with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
            gz.write("".join(lines).encode("utf-8"))


def _write_lines(path: Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)


def _rare_words(rng: np.random.Generator, k: int) -> list[str]:
    idx = rng.integers(0, len(_SYLLABLES), size=(k, 4))
    return ["".join(_SYLLABLES[i] for i in row) for row in idx]


def _tweet(rng, day: dt.date, rare_share: float, query: str) -> dict:
    n_tokens = int(rng.integers(7, 13))
    words = [query]
    for _ in range(n_tokens):
        words += _rare_words(rng, 1) if rng.random() < rare_share else [COMMON[rng.integers(len(COMMON))]]
    for _ in range(int(rng.integers(0, 3))):
        words.insert(int(rng.integers(len(words) + 1)), POSITIVE[rng.integers(len(POSITIVE))])
    for _ in range(int(rng.integers(0, 3))):
        words.insert(int(rng.integers(len(words) + 1)), NEGATIVE[rng.integers(len(NEGATIVE))])
    if rng.random() < 0.2:
        words.append("https://t.co/" + "".join(_rare_words(rng, 1)))
    if rng.random() < 0.2:
        words.insert(0, "@" + _rare_words(rng, 1)[0])
    secs = int(rng.integers(0, 86400))
    ts = dt.datetime.combine(day, dt.time(), dt.timezone.utc) + dt.timedelta(seconds=secs)
    return {"timestamp": ts.strftime("%Y-%m-%dT%H:%M:%SZ"), "text": " ".join(words)}


def _media_files(out: Path, rng: np.random.Generator, cal: TradingCalendar, start: dt.date, end: dt.date) -> None:
    """Write every raw media input; latent drivers live on calendar days."""
    days = [start + dt.timedelta(days=i) for i in range((end - start).days + 1)]
    n = len(days)
    C, W, G = _ar1(rng, n), _ar1(rng, n), _ar1(rng, n)
    W_opec, T_opec = _ar1(rng, n), _ar1(rng, n)

    tweets: list[str] = []
    for i, day in enumerate(days):
        weekday = cal.is_business_day(day)
        count = max(2, int(round(16 + 5 * W[i]))) if weekday else int(rng.integers(1, 4))
        share = 0.25 + 0.15 * math.tanh(C[i])
        for _ in range(count):
            rec = _tweet(rng, day, share, QUERY_TERMS[rng.integers(len(QUERY_TERMS))])
            tweets.append(json.dumps(rec) + "\n")
        if rng.random() < 0.5:
            rec = _tweet(rng, day, 0.1, "essential oil")
            tweets.append(json.dumps(rec) + "\n")
        if rng.random() < 0.5:
            stamp = f"{day.isoformat()}T{int(rng.integers(0, 24)):02d}:30:00Z"
            tweets.append(json.dumps({"timestamp": stamp, "text": "sunny weather in the park today"}) + "\n")
        if i % 97 == 13:
            tweets.append('{"timestamp": "2014-13-40T00:00:00Z", "text": "broken oil"}\n')
        if i % 131 == 7:
            tweets.append('{"text": "oil without a timestamp"\n')
    _gz_write(out / "tweets.jsonl.gz", tweets)

    price_of_oil = np.round(3000 + 600 * W + rng.normal(0, 30, n)).astype(int)
    opec_views = np.round(1500 + 300 * W_opec).astype(int)
    pv: list[str] = []
    for i, day in enumerate(days):
        stamp = day.strftime("%Y%m%d00") if i % 2 else day.isoformat()
        part = int(price_of_oil[i] // 3)
        pv.append(json.dumps({"date": stamp, "article": "Price_of_oil", "views": int(price_of_oil[i] - part)}) + "\n")
        pv.append(json.dumps({"date": stamp, "article": "Price of oil", "views": part}) + "\n")
        pv.append(json.dumps({"date": stamp, "article": "OPEC", "views": int(opec_views[i])}) + "\n")
        pv.append(json.dumps({"date": stamp, "article": "Olive_oil", "views": int(rng.integers(200, 400))}) + "\n")
    _write_lines(out / "pageviews.jsonl", pv)

    trends_oil = np.clip(np.round(50 + 12 * W + rng.normal(0, 1.5, n)), 0, 100).astype(int)
    trends_opec = np.clip(np.round(40 + 10 * T_opec), 0, 100).astype(int)
    _write_lines(out / "trends_price_of_oil.csv", ["date,relative_volume\n"] + [f"{d.isoformat()},{v}\n" for d, v in zip(days, trends_oil)])
    _write_lines(out / "trends_opec.csv", ["date,relative_volume\n"] + [f"{d.isoformat()},{v}\n" for d, v in zip(days, trends_opec)])

    gkg = ["\t".join(("DATE", "NUMARTS", "COUNTS", "THEMES", "LOCATIONS", "PERSONS", "ORGANIZATIONS",
                      "TONE", "CAMEOEVENTIDS", "SOURCES", "SOURCEURLS")) + "\n"]
    for i, day in enumerate(days):
        stamp = day.strftime("%Y%m%d")
        matching = max(1, int(round(20 + 5 * G[i]))) if cal.is_business_day(day) else int(rng.integers(0, 4))
        other = int(rng.integers(2, 7))
        kinds = [True] * matching + [False] * other
        rng.shuffle(kinds)
        for match in kinds:
            themes = (GKG_MATCH_THEMES if match else GKG_OTHER_THEMES)[rng.integers(4 if match else 5)]
            k = int(rng.integers(0, 4))
            orgs = ";".join(ORGANIZATIONS[j] for j in rng.choice(len(ORGANIZATIONS), size=k, replace=False))
            tone = f"{rng.normal(-1, 2):.2f},1.5,2.5,4.0,20.1,0.5,120"
            gkg.append("\t".join((stamp, str(int(rng.integers(1, 6))), "", themes, "", "", orgs, tone, "",
                                  "example.com", "http://example.com/a")) + "\n")
        if i % 113 == 29:
            gkg.append(f"{stamp}\t1\ttruncated record\n")
    _gz_write(out / "gkg.tsv.gz", gkg)


def _write_static(out: Path) -> None:
    _write_lines(out / "holidays.txt", ["# NYSE full-day closures 2013-2015\n"] + [h + "\n" for h in NYSE_HOLIDAYS])
    _write_lines(out / "positive.txt", ["# positive tokens\n"] + [w + "\n" for w in POSITIVE])
    _write_lines(out / "negative.txt", ["# negative tokens\n"] + [w + "\n" for w in NEGATIVE])
    (out / "config.toml").write_text(CONFIG_TEMPLATE, encoding="utf-8")


def _write_price(path: Path, days, values) -> None:
    _write_lines(path, ["date,value\n"] + [f"{d.isoformat()},{v!r}\n" for d, v in zip(days, values)])


def _realized_signals(out: Path, work: Path) -> SignalSet:
    """Run ingest and features with placeholder prices; return the joined media signals."""
    from . import pipeline

    cfg = pipeline.load_config(out / "config.toml", out=work, seed=0)
    pipeline.run_stage(cfg, "ingest")
    pipeline.run_stage(cfg, "features")
    signals, _ = pipeline.load_signals(cfg)
    return signals


def generate(out: Path, seed: int = FIXTURE_SEED) -> dict[str, float]:
    """Write the fixture into ``out`` and return the planted coefficients."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cal = calendar()
    rng = np.random.default_rng(seed)
    first = cal.shift(END_DATE, -(N_OBS - 1))
    media_start = cal.shift(first, -LEAD_DAYS)
    _write_static(out)
    _media_files(out, rng, cal, media_start, END_DATE)

    grid = [d.astype(dt.date) for d in cal.business_days(media_start, END_DATE)]
    _write_price(out / "wti.csv", grid, [70.0] * len(grid))
    _write_price(out / "nasdaq.csv", grid, [4000.0] * len(grid))
    with tempfile.TemporaryDirectory() as tmp:
        media = _realized_signals(out, Path(tmp))
    full = {name: media[name].values for name in media.names}
    media_days = [d.astype(dt.date) for d in media.dates]
    offset = media_days.index(first)
    if media_days[0] != media_start:
        raise ValueError("media signals do not reach back to the intended start")

    noise = simulate(ArimaxSpec.of(2, 1, 4), NOISE_PARAMS, N_OBS, seed=seed + 1000).values
    y = 70.0 + noise
    coefs = {}
    for name, k in PLANTED:
        x = full[name]
        window = x[offset - k : offset - k + N_OBS]
        b = -1.0 / float(np.std(np.diff(window)))
        coefs[name] = b
        y = y + b * (window - window.mean())
    if y.min() <= 5.0:
        raise ValueError("simulated price dropped too low; pick another seed")

    # NASDAQ follows realized complexity with iid level noise, |corr| of differences near 0.9
    c = full["twitter_complexity"]
    a = 150.0
    sd = math.sqrt(a * a * float(np.var(np.diff(c))) * (1 / 0.81 - 1) / 2)
    nasdaq = 4000.0 + a * (c - c.mean()) + rng.normal(0, sd, c.size)

    days = media_days[offset:]
    price_rows = [(d, round(float(v), 4)) for d, v in zip(days, y)]
    # a few interior quotes missing, to exercise interpolation
    drop = {days[40], days[41], days[150], days[260]}
    price_rows = [(d, v) for d, v in price_rows if d not in drop]
    _write_price(out / "wti.csv", [d for d, _ in price_rows], [v for _, v in price_rows])
    _write_price(out / "nasdaq.csv", media_days, [round(float(v), 2) for v in nasdaq])
    return coefs


def verify(config: Path) -> FixtureInfo:
    """Fit the bundled battery and check the ordering the fixture was built for."""
    from . import pipeline

    with tempfile.TemporaryDirectory() as tmp:
        cfg = pipeline.load_config(config, out=tmp)
        for stage in ("ingest", "features", "fit"):
            pipeline.run_stage(cfg, stage)
        signals, _ = pipeline.load_signals(cfg)
        with open(Path(tmp) / "tables" / "battery_metrics.csv", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    rmse = {r["model"]: float(r["rmse"]) if r["rmse"] else math.nan for r in rows}
    ok = battery_ordering_holds(rmse) and signals.n_obs == N_OBS
    return FixtureInfo(cfg.seed, signals.n_obs, rmse, ok)


def battery_ordering_holds(rmse: dict[str, float], baseline: str = "Model 1", combined: str = "Model 8") -> bool:
    """Combined < every single-source model < baseline, with baseline/combined at least 3."""
    singles = [v for k, v in rmse.items() if k not in (baseline, combined)]
    b, c = rmse[baseline], rmse[combined]
    if not all(math.isfinite(v) for v in rmse.values()):
        return False
    return all(c < s < b for s in singles) and b / c >= 3.0


CONFIG_TEMPLATE = """\
# Bundled planted-truth run (see crudecast.synthetic).
output_dir = "crudecast-out"

[calendar]
holidays = "holidays.txt"
weekend_days = [5, 6]

[inputs]
price = "wti.csv"
tweets = "tweets.jsonl.gz"
lexicon_positive = "positive.txt"
lexicon_negative = "negative.txt"
pageviews = "pageviews.jsonl"
gkg = ["gkg.tsv.gz"]

[inputs.controls]
nasdaq = "nasdaq.csv"

[inputs.trends]
opec = { file = "trends_opec.csv", query = "OPEC" }
price_of_oil = { file = "trends_price_of_oil.csv", query = "price of oil" }

[queries]
tweets = ["crude", "oil", "opec"]
exclusions = ["olive oil", "essential oil"]
gkg_terms = ["oil", "opec"]
gkg_match_field = "themes"

[queries.pageview_titles]
wiki_opec = "OPEC"
wiki_price_of_oil = "Price of oil"

[analysis]
target = "wti"
lag_cap = 3
boundary = "2015-03-13"
seed = 0
adf_regression = "constant"
granger_form = "chi2"
collinearity_threshold = 0.95
forecast_modes = ["rolling", "trajectory"]
figure_model = "Model 8"

[[models]]
name = "Model 1"
order = [2, 1, 4]

[[models]]
name = "Model 2"
order = [2, 1, 4]
exog = [{ name = "nasdaq", lag = 1 }]

[[models]]
name = "Model 3"
order = [2, 1, 4]
exog = [
    { name = "twitter_messages", lag = 3 },
    { name = "twitter_sentiment", lag = 3 },
    { name = "twitter_emotionality", lag = 1 },
]

[[models]]
name = "Model 4"
order = [2, 1, 4]
exog = [{ name = "twitter_complexity", lag = 1 }]

[[models]]
name = "Model 5"
order = [2, 1, 4]
exog = [{ name = "trends_opec", lag = 2 }, { name = "trends_price_of_oil", lag = 3 }]

[[models]]
name = "Model 6"
order = [2, 1, 4]
exog = [{ name = "wiki_opec", lag = 2 }, { name = "wiki_price_of_oil", lag = 3 }]

[[models]]
name = "Model 7"
order = [2, 1, 4]
exog = [{ name = "gdelt_organizations", lag = 3 }, { name = "gdelt_articles", lag = 2 }]

[[models]]
name = "Model 8"
order = [2, 1, 4]
exog = [
    { name = "nasdaq", lag = 1 },
    { name = "twitter_complexity", lag = 1 },
    { name = "wiki_price_of_oil", lag = 3 },
    { name = "gdelt_articles", lag = 2 },
]
"""


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Regenerate the planted-truth fixture.")
    parser.add_argument("--out", default=str(FIXTURE_DIR))
    parser.add_argument("--seed", type=int, default=FIXTURE_SEED)
    parser.add_argument("--search", type=int, default=0, help="try this many further seeds until the battery check passes")
    args = parser.parse_args(argv)
    out = Path(args.out)
    for seed in range(args.seed, args.seed + args.search + 1):
        if out.exists():
            shutil.rmtree(out)
        try:
            coefs = generate(out, seed)
        except ValueError as exc:
            print(f"seed {seed}: {exc}")
            continue
        info = verify(out / "config.toml")
        print(f"seed {seed}: n_obs={info.n_obs} ok={info.ok}")
        print("  planted:", {k: round(v, 4) for k, v in coefs.items()})
        print("  rmse:", {k: round(v, 4) for k, v in info.rmse.items()})
        if info.ok:
            return 0
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
