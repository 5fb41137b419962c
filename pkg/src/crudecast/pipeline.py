"""End-to-end workflow: ingest -> features -> correlate -> granger -> fit -> report.

Each stage reads the artifacts of the stages before it from the output
directory, writes its own, and records their SHA-256 digests in
``manifest.json``. Running the stages one at a time therefore produces the
same tree as :func:`run`.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
import logging
import os
import platform
import re
import sys
from collections import defaultdict
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy

from . import __version__, econometrics, evaluation, ingest, report
from .arima import ArimaSpec, ArimaxSpec, ExogTerm, forecast, select_order
from .errors import ConfigError, CrudecastError, StageError
from .series import MAX_LAG, RawObservations, SignalSet, TradingCalendar, align_to_calendar, inner_join, split, to_date
from .text import Document, Lexicon, aggregate_daily

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

STAGES = ("ingest", "features", "correlate", "granger", "fit", "report")
ENV_OUT = "CRUDECAST_OUT"
ENV_SEED = "CRUDECAST_SEED"


@dataclasses.dataclass(frozen=True)
class ModelDef:
    name: str
    spec: ArimaxSpec


@dataclasses.dataclass(frozen=True)
class PipelineConfig:
    """Everything one run needs. Paths are absolute after loading.

    Input paths in the file are relative to the file itself; the output
    directory is relative to the working directory.
    """

    config_path: Path
    price: Path
    target: str = "wti"
    controls: dict[str, Path] = dataclasses.field(default_factory=dict)
    tweets: Path | None = None
    lexicon_positive: Path | None = None
    lexicon_negative: Path | None = None
    tweet_queries: tuple[str, ...] = ()
    tweet_exclusions: tuple[str, ...] = ()
    pageviews: Path | None = None
    pageview_titles: dict[str, str] = dataclasses.field(default_factory=dict)
    trends: dict[str, tuple[Path, str]] = dataclasses.field(default_factory=dict)
    gkg: tuple[Path, ...] = ()
    gkg_terms: tuple[str, ...] = ()
    gkg_match_field: str = "themes"
    holidays: Path | None = None
    weekend_days: tuple[int, ...] = (5, 6)
    lag_cap: int = MAX_LAG
    boundary: dt.date | None = None
    seed: int = 0
    adf_regression: str = "constant"
    adf_max_lags: int | None = None
    granger_form: str = "chi2"
    collinearity_threshold: float = evaluation.COLLINEARITY_THRESHOLD
    models: tuple[ModelDef, ...] = ()
    figure_model: str | None = None
    forecast_modes: tuple[str, ...] = ("rolling",)
    selection: tuple[int, int] | None = None
    output_dir: Path = Path("out")

    @property
    def lags(self) -> tuple[int, ...]:
        return tuple(range(1, self.lag_cap + 1))

    def calendar(self) -> TradingCalendar:
        if self.holidays is None:
            return TradingCalendar(frozenset(self.weekend_days))
        return TradingCalendar.from_holiday_file(self.holidays, self.weekend_days)

    def input_files(self) -> list[Path]:
        files = [self.price, *self.controls.values(), *(f for f, _ in self.trends.values()), *self.gkg]
        files += [p for p in (self.tweets, self.pageviews, self.lexicon_positive, self.lexicon_negative, self.holidays) if p]
        return files


# -- configuration -----------------------------------------------------------------


def _req(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing '{key}' in [{where}]")
    return table[key]


def load_config(path, out: str | os.PathLike | None = None, seed: int | None = None) -> PipelineConfig:
    """Parse and validate a TOML run configuration.

    ``CRUDECAST_OUT`` / ``CRUDECAST_SEED`` override the file; explicit
    ``out`` / ``seed`` arguments override both.
    """
    path = Path(path).resolve()
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent

    def rel(p) -> Path:
        if not isinstance(p, str):
            raise ConfigError(f"expected a path string, got {p!r}")
        return (base / p).resolve()

    inputs = raw.get("inputs", {})
    queries = raw.get("queries", {})
    analysis = raw.get("analysis", {})
    cal = raw.get("calendar", {})

    trends = {}
    for key, entry in inputs.get("trends", {}).items():
        if isinstance(entry, str):
            trends[key] = (rel(entry), key)
        else:
            trends[key] = (rel(_req(entry, "file", f"inputs.trends.{key}")), entry.get("query", key))

    models = []
    for i, m in enumerate(raw.get("models", []), 1):
        where = f"models #{i}"
        order = _req(m, "order", where)
        if not (isinstance(order, list) and len(order) == 3):
            raise ConfigError(f"{where}: order must be [p, d, q]")
        try:
            terms = tuple(ExogTerm(e["name"], int(e["lag"]), bool(e.get("difference", True))) for e in m.get("exog", []))
            spec = ArimaxSpec(ArimaSpec(int(order[0]), int(order[1]), int(order[2]), m.get("include_constant")), terms)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
        models.append(ModelDef(str(m.get("name", f"Model {i}")), spec))

    boundary = analysis.get("boundary")
    if isinstance(boundary, str):
        boundary = dt.date.fromisoformat(boundary)
    elif isinstance(boundary, dt.datetime):
        boundary = boundary.date()

    sel = raw.get("selection")
    env_out, env_seed = os.environ.get(ENV_OUT), os.environ.get(ENV_SEED)
    out_dir = out if out is not None else env_out if env_out else raw.get("output_dir", "out")
    seed_val = seed if seed is not None else int(env_seed) if env_seed else int(analysis.get("seed", 0))

    try:
        cfg = PipelineConfig(
            config_path=path,
            price=rel(_req(inputs, "price", "inputs")),
            target=str(analysis.get("target", "wti")),
            controls={k: rel(v) for k, v in inputs.get("controls", {}).items()},
            tweets=rel(inputs["tweets"]) if "tweets" in inputs else None,
            lexicon_positive=rel(inputs["lexicon_positive"]) if "lexicon_positive" in inputs else None,
            lexicon_negative=rel(inputs["lexicon_negative"]) if "lexicon_negative" in inputs else None,
            tweet_queries=tuple(queries.get("tweets", ())),
            tweet_exclusions=tuple(queries.get("exclusions", ())),
            pageviews=rel(inputs["pageviews"]) if "pageviews" in inputs else None,
            pageview_titles=dict(queries.get("pageview_titles", {})),
            trends=trends,
            gkg=tuple(rel(p) for p in ([inputs["gkg"]] if isinstance(inputs.get("gkg"), str) else inputs.get("gkg", []))),
            gkg_terms=tuple(queries.get("gkg_terms", ())),
            gkg_match_field=str(queries.get("gkg_match_field", "themes")),
            holidays=rel(cal["holidays"]) if "holidays" in cal else None,
            weekend_days=tuple(int(d) for d in cal.get("weekend_days", (5, 6))),
            lag_cap=int(analysis.get("lag_cap", MAX_LAG)),
            boundary=boundary,
            seed=seed_val,
            adf_regression=str(analysis.get("adf_regression", "constant")),
            adf_max_lags=analysis.get("adf_max_lags"),
            granger_form=str(analysis.get("granger_form", "chi2")),
            collinearity_threshold=float(analysis.get("collinearity_threshold", evaluation.COLLINEARITY_THRESHOLD)),
            models=tuple(models),
            figure_model=analysis.get("figure_model"),
            forecast_modes=tuple(analysis.get("forecast_modes", ("rolling",))),
            selection=(int(sel["p_max"]), int(sel["q_max"])) if sel else None,
            output_dir=Path(out_dir).resolve(),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def validate(cfg: PipelineConfig) -> None:
    """Check everything that can be checked before any stage runs."""
    if not 1 <= cfg.lag_cap <= MAX_LAG:
        raise ConfigError(f"lag_cap must be within 1..{MAX_LAG}")
    for f in cfg.input_files():
        if not f.is_file():
            raise ConfigError(f"input file {f} does not exist")
    if cfg.tweets and not (cfg.lexicon_positive and cfg.lexicon_negative):
        raise ConfigError("tweets need lexicon_positive and lexicon_negative")
    if cfg.tweets and not cfg.tweet_queries:
        raise ConfigError("tweets need at least one query term in [queries].tweets")
    if cfg.gkg and not cfg.gkg_terms:
        raise ConfigError("GKG input needs [queries].gkg_terms")
    if cfg.pageviews and not cfg.pageview_titles:
        raise ConfigError("pageviews need [queries].pageview_titles")
    if cfg.adf_regression not in econometrics.ADF_RESPONSE_SURFACE:
        raise ConfigError(f"unknown adf_regression {cfg.adf_regression!r}")
    if cfg.granger_form not in ("chi2", "f"):
        raise ConfigError("granger_form must be 'chi2' or 'f'")
    bad_modes = set(cfg.forecast_modes) - {"rolling", "trajectory"}
    if bad_modes:
        raise ConfigError(f"unknown forecast modes {sorted(bad_modes)}")
    names = [m.name for m in cfg.models]
    if len(set(names)) != len(names):
        raise ConfigError("model names must be unique")
    for m in cfg.models:
        for t in m.spec.exog:
            if t.lag > cfg.lag_cap:
                raise ConfigError(f"{m.name}: lag {t.lag} exceeds lag_cap {cfg.lag_cap}")
    if cfg.figure_model is not None and cfg.figure_model not in names:
        raise ConfigError(f"figure_model {cfg.figure_model!r} is not a configured model")
    if cfg.boundary is None:
        raise ConfigError("[analysis].boundary is required")
    price = ingest.parse_price_csv(cfg.price)
    days = [d for d, _ in price]
    if not days:
        raise ConfigError(f"{cfg.price} has no observations")
    if not min(days) < cfg.boundary < max(days):
        raise ConfigError(f"boundary {cfg.boundary} is not inside the price span {min(days)}..{max(days)}")


def config_digest(cfg: PipelineConfig) -> str:
    h = hashlib.sha256()
    h.update(cfg.config_path.read_bytes())
    h.update(f"seed={cfg.seed}".encode())
    return h.hexdigest()


# -- manifest ----------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest_path(cfg: PipelineConfig) -> Path:
    return cfg.output_dir / "manifest.json"


def _load_manifest(cfg: PipelineConfig) -> dict:
    digest = config_digest(cfg)
    path = _manifest_path(cfg)
    if path.is_file():
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("config_sha256") == digest:
                return data
        except ValueError:
            pass
    base = cfg.config_path.parent
    return {
        "tool": "crudecast",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config_sha256": digest,
        "seed": cfg.seed,
        "inputs": {_relname(f, base): _sha256(f) for f in cfg.input_files()},
        "stages": {},
    }


def _relname(path: Path, base: Path) -> str:
    try:
        return path.relative_to(base).as_posix()
    except ValueError:
        return path.name


def _record_stage(cfg: PipelineConfig, stage: str, artifacts: Sequence[Path], consumed: Sequence[Path], rows: dict) -> None:
    manifest = _load_manifest(cfg)
    out = cfg.output_dir
    manifest["stages"][stage] = {
        "consumed": {p.relative_to(out).as_posix(): _sha256(p) for p in consumed},
        "artifacts": {p.relative_to(out).as_posix(): _sha256(p) for p in sorted(artifacts)},
        "rows": rows,
    }
    manifest["stages"] = {s: manifest["stages"][s] for s in STAGES if s in manifest["stages"]}
    _manifest_path(cfg).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _require(cfg: PipelineConfig, *rel: str) -> list[Path]:
    paths = [cfg.output_dir / r for r in rel]
    missing = [p for p in paths if not p.is_file()]
    if missing:
        raise FileNotFoundError(f"missing upstream artifact {missing[0]}; run the earlier stages first")
    return paths


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_") or "model"


# -- stages ----------------------------------------------------------------------------------


def stage_ingest(cfg: PipelineConfig) -> None:
    d = cfg.output_dir / "ingest"
    d.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    stats: dict[str, dict] = {}
    order: list[str] = []

    def save(name: str, raw: RawObservations) -> None:
        path = d / f"{name}.csv"
        raw.to_csv(path)
        written.append(path)
        order.append(name)

    st = ingest.ParseStats()
    save(cfg.target, ingest.parse_price_csv(cfg.price, st))
    stats[cfg.target] = st.as_dict()
    for name, path in cfg.controls.items():
        st = ingest.ParseStats()
        save(name, ingest.parse_price_csv(path, st))
        stats[name] = st.as_dict()

    if cfg.tweets:
        st = ingest.ParseStats()
        docs = ingest.parse_tweets(cfg.tweets, cfg.tweet_queries, cfg.tweet_exclusions, st)
        stats["tweets"] = st.as_dict()
        docs = sorted(docs, key=lambda doc: (doc.timestamp, doc.text))
        path = d / "documents.jsonl"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for doc in docs:
                rec = {"timestamp": doc.timestamp.isoformat(), "text": doc.text, "query": doc.query}
                fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
        written.append(path)

    for key, (path, query) in cfg.trends.items():
        st = ingest.ParseStats()
        save(f"trends_{key}", ingest.parse_trends_csv(path, query, st))
        stats[f"trends_{key}"] = st.as_dict()

    if cfg.pageviews:
        st = ingest.ParseStats()
        views = ingest.parse_pageviews(cfg.pageviews, list(cfg.pageview_titles.values()), st)
        stats["pageviews"] = st.as_dict()
        for name, title in cfg.pageview_titles.items():
            save(name, views[title])

    if cfg.gkg:
        art_total: dict = defaultdict(float)
        org_total: dict = defaultdict(float)
        st = ingest.ParseStats()
        for path in cfg.gkg:
            arts, orgs = ingest.parse_gkg(path, cfg.gkg_terms, cfg.gkg_match_field, st)
            for day, v in arts:
                art_total[day] += v
            for day, v in orgs:
                org_total[day] += v
        stats["gkg"] = st.as_dict()
        save("gdelt_organizations", RawObservations.from_mapping(org_total))
        save("gdelt_articles", RawObservations.from_mapping(art_total))

    stats_path = d / "parse_stats.json"
    stats_path.write_text(json.dumps({"signals": order, "parsers": stats}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(stats_path)
    _record_stage(cfg, "ingest", written, [], {k: v["kept"] for k, v in stats.items()})


def _read_documents(path: Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            docs.append(Document(dt.datetime.fromisoformat(rec["timestamp"]), rec["text"], "tweet", rec["query"]))
    return docs


def stage_features(cfg: PipelineConfig) -> None:
    (stats_path,) = _require(cfg, "ingest/parse_stats.json")
    order = json.loads(stats_path.read_text(encoding="utf-8"))["signals"]
    cal = cfg.calendar()
    consumed = [stats_path]
    series = {}
    raw_counts = {}
    for name in order:
        (path,) = _require(cfg, f"ingest/{name}.csv")
        consumed.append(path)
        raw = _read_raw(path)
        raw_counts[name] = len(raw)
        series[name] = align_to_calendar(raw, cal, name, f"ingest/{name}.csv")

    text_series = []
    if cfg.tweets:
        (doc_path,) = _require(cfg, "ingest/documents.jsonl")
        consumed.append(doc_path)
        lex = Lexicon.from_files(cfg.lexicon_positive, cfg.lexicon_negative)
        signals = aggregate_daily(_read_documents(doc_path), lex, cal, prefix="twitter")
        text_series = signals.as_list()

    ordered = [series[cfg.target]] + [series[n] for n in cfg.controls] + text_series
    ordered += [series[n] for n in order if n not in (cfg.target, *cfg.controls)]
    joined = inner_join(ordered)

    d = cfg.output_dir / "features"
    d.mkdir(parents=True, exist_ok=True)
    sig_path = d / "signals.csv"
    joined.to_csv(sig_path)
    summary = {
        "calendar": cal.describe(),
        "n_obs": joined.n_obs,
        "start": to_date(joined.dates[0]).isoformat(),
        "end": to_date(joined.dates[-1]).isoformat(),
        "signals": {
            s.name: {
                "raw_points": raw_counts.get(s.name),
                "aligned_points": len(s),
                "aligned_start": s.start_date.isoformat(),
                "aligned_end": s.end_date.isoformat(),
            }
            for s in ordered
        },
    }
    sum_path = d / "summary.json"
    sum_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _record_stage(cfg, "features", [sig_path, sum_path], consumed, {"aligned_observations": joined.n_obs})


def _read_raw(path: Path) -> RawObservations:
    rows = []
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if line.strip():
                day, value = line.strip().split(",")
                rows.append((dt.date.fromisoformat(day), float(value)))
    return RawObservations(tuple(rows))


def load_signals(cfg: PipelineConfig) -> tuple[SignalSet, Path]:
    (path,) = _require(cfg, "features/signals.csv")
    return SignalSet.from_csv(path, cfg.calendar()), path


def stage_correlate(cfg: PipelineConfig) -> None:
    signals, src = load_signals(cfg)
    target = signals[cfg.target]
    entries = econometrics.correlation_table(signals, target, cfg.lags)
    d = cfg.output_dir / "tables"
    d.mkdir(parents=True, exist_ok=True)
    csv_path, txt_path = d / "correlation.csv", d / "correlation.txt"
    report.write_csv(
        csv_path,
        ["predictor", "lag", "r", "p_value", "n", "significant", "error"],
        [[e.predictor, e.lag, e.r, e.p_value, e.n, str(e.significant).lower(), e.error] for e in entries],
    )
    report.write_text(txt_path, econometrics.correlation_text(entries, cfg.lags))
    _record_stage(cfg, "correlate", [csv_path, txt_path], [src], {"entries": len(entries)})


def stage_granger(cfg: PipelineConfig) -> None:
    signals, src = load_signals(cfg)
    target = signals[cfg.target]
    kind = cfg.adf_regression
    station = econometrics.stationarity_report(signals, cfg.adf_max_lags, kind)
    predictors = [s for s in signals if s.name != cfg.target]
    results = econometrics.granger_table(predictors, target, cfg.lags, cfg.adf_max_lags, kind, cfg.granger_form)
    d = cfg.output_dir / "tables"
    d.mkdir(parents=True, exist_ok=True)
    paths = [d / "adf.csv", d / "adf.txt", d / "granger.csv", d / "granger.txt"]
    report.write_csv(
        paths[0],
        ["series", "statistic", "lags_used", "nobs", "cv_1", "cv_5", "cv_10", "stationary_5pct", "differenced", "statistic_after"],
        [
            [e.name, e.level.statistic, e.level.lags_used, e.level.nobs, e.level.critical_values["1%"],
             e.level.critical_values["5%"], e.level.critical_values["10%"], str(e.level.stationary_at_5pct).lower(),
             str(e.differenced).lower(), e.after.statistic if e.after else None]
            for e in station
        ],
    )
    report.write_text(paths[1], econometrics.stationarity_text(station))
    report.write_csv(
        paths[2],
        ["cause", "effect", "lag", "statistic", "form", "p_value", "nobs", "significant"],
        [[r.cause, r.effect, r.lag_order, r.chi2, r.form, r.p_value, r.nobs, str(r.significant_at_5pct).lower()] for r in results],
    )
    report.write_text(paths[3], econometrics.granger_text(results, cfg.lags))
    _record_stage(cfg, "granger", paths, [src], {"adf_rows": len(station), "granger_cells": len(results)})


def stage_fit(cfg: PipelineConfig) -> None:
    if not cfg.models:
        raise ConfigError("no [[models]] configured")
    signals, src = load_signals(cfg)
    target = signals[cfg.target]
    exog = signals.select([n for n in signals.names if n != cfg.target])
    specs = [(m.name, m.spec) for m in cfg.models]
    reports = evaluation.model_battery(target, exog, specs, cfg.boundary, cfg.seed, cfg.collinearity_threshold)

    tables = cfg.output_dir / "tables"
    models_dir = cfg.output_dir / "models"
    fc_dir = cfg.output_dir / "forecasts"
    for p in (tables, models_dir, fc_dir):
        p.mkdir(parents=True, exist_ok=True)
    written = [tables / "battery_metrics.csv", tables / "battery_coefficients.csv", tables / "table4.txt"]
    evaluation.write_battery_csv(reports, written[0], written[1])
    report.write_text(written[2], evaluation.battery_text(reports))

    _, test = split(target, cfg.boundary)
    for rep in reports:
        slug = _slug(rep.model_name)
        if not rep.ok:
            path = models_dir / f"{slug}.txt"
            report.write_text(path, f"{rep.model_name}: {rep.error}\n")
            written.append(path)
            continue
        txt, kv = models_dir / f"{slug}.txt", models_dir / f"{slug}.kv"
        report.write_text(txt, rep.fit.to_text(f"{rep.model_name}: {rep.spec.label} fit of {cfg.target}"))
        report.write_text(kv, f"name={rep.model_name}\n" + rep.fit.to_kv())
        written += [txt, kv]
        if "rolling" in cfg.forecast_modes:
            path = fc_dir / f"{slug}.csv"
            evaluation.write_trajectory_csv(rep, path)
            written.append(path)
        if "trajectory" in cfg.forecast_modes:
            path = fc_dir / f"{slug}_trajectory.csv"
            traj = forecast(rep.fit, len(test), exog)
            joined = inner_join([test, traj])
            report.write_csv(
                path,
                ["date", "actual", "predicted"],
                [(d_.isoformat(), a, p) for d_, a, p in zip(joined[test.name].date_list(),
                                                            joined[test.name].values.tolist(),
                                                            joined[traj.name].values.tolist())],
            )
            written.append(path)

    rows = {"models": len(reports), "failed": sum(not r.ok for r in reports)}
    if cfg.selection:
        train, _ = split(target, cfg.boundary)
        d = cfg.models[0].spec.base.d
        sel = select_order(train, cfg.selection[0], cfg.selection[1], d, seed=cfg.seed)
        path = tables / "order_selection.txt"
        body = [[s.label, report.fmt_num(a, 2), report.fmt_num(b, 2)] for s, a, b in sel.table]
        text = report.text_table(["order", "AIC", "BIC"], body, footer=f"selected: {sel.spec.label}")
        text += "\nlag  ACF     PACF\n" + "".join(
            f"{k:>3}  {sel.acf[k]:+.3f}  {sel.pacf[k]:+.3f}\n" for k in range(1, len(sel.acf))
        )
        report.write_text(path, text)
        written.append(path)
        rows["selected_order"] = sel.spec.label
    _record_stage(cfg, "fit", written, [src], rows)


def stage_report(cfg: PipelineConfig) -> None:
    signals, src = load_signals(cfg)
    (metrics_path,) = _require(cfg, "tables/battery_metrics.csv")
    name = cfg.figure_model or _best_model(metrics_path)
    (fc_path,) = _require(cfg, f"forecasts/{_slug(name)}.csv")
    fig_dir = cfg.output_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    fig_path = fig_dir / "forecast.svg"
    plot_forecast(signals[cfg.target], fc_path, fig_path, title=f"{name} one-step forecasts")

    parts = []
    consumed = [src, metrics_path, fc_path]
    for rel in ("tables/correlation.txt", "tables/adf.txt", "tables/granger.txt", "tables/table4.txt", "tables/order_selection.txt"):
        p = cfg.output_dir / rel
        if p.is_file():
            consumed.append(p)
            parts.append(f"== {rel} ==\n{p.read_text(encoding='utf-8')}")
    summary = cfg.output_dir / "summary.txt"
    report.write_text(summary, f"crudecast run summary (figure model: {name})\n\n" + "\n".join(parts))
    _record_stage(cfg, "report", [fig_path, summary], consumed, {"figure_model": name})


def _best_model(metrics_path: Path) -> str:
    import csv

    with open(metrics_path, encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(fh) if not r["error"]]
    if not rows:
        raise CrudecastError("no model produced forecasts")
    return min(rows, key=lambda r: float(r["rmse"]))["model"]


def plot_forecast(target, forecast_csv: Path, out_path: Path, title: str = "") -> None:
    """Actual target over the whole sample with out-of-sample predictions overlaid (SVG)."""
    import csv

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(forecast_csv, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    f_dates = np.array([r["date"] for r in rows], dtype="datetime64[D]")
    actual = np.array([float(r["actual"]) for r in rows])
    pred = np.array([float(r["predicted"]) for r in rows])

    with matplotlib.rc_context({"svg.hashsalt": "crudecast", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4))
        ax.plot(target.dates, target.values, color="0.6", lw=1.0, label="actual")
        ax.plot(f_dates, actual, color="black", lw=1.2)
        ax.plot(f_dates, pred, color="tab:red", lw=1.5, marker="o", ms=3, label="predicted")
        if f_dates.size:
            ax.axvline(f_dates[0], color="0.3", ls=":", lw=0.8)
        ax.set_title(title)
        ax.set_ylabel(target.name)
        ax.legend(loc="best", frameon=False)
        fig.autofmt_xdate()
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)


STAGE_FUNCS: dict[str, Callable[[PipelineConfig], None]] = {
    "ingest": stage_ingest,
    "features": stage_features,
    "correlate": stage_correlate,
    "granger": stage_granger,
    "fit": stage_fit,
    "report": stage_report,
}


def run_stage(cfg: PipelineConfig, stage: str) -> None:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    try:
        STAGE_FUNCS[stage](cfg)
    except (CrudecastError, OSError, ValueError, KeyError) as exc:
        raise StageError(stage, exc) from exc


def run(cfg: PipelineConfig) -> None:
    for stage in STAGES:
        run_stage(cfg, stage)
