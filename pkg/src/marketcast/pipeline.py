"""End-to-end experiment runs: ingest, features, models, reports, charts.

A run executes ingest -> forward-fill -> indicator derivation -> chronological
split -> train-only scaling -> correlation-based feature selection -> sliding
windows, then the requested model legs:

  arima: order search on the unscaled close over the train+validation span,
         then a STATIC (fixed-origin) or ROLLING (one-step) forecast of the
         test span;
  lstm:  windowed training in scaled space with early stopping on the
         validation split, one-step test predictions mapped back to prices.

Both legs score the same test rows, so their metrics files are directly
comparable. Windows are built over the whole frame and partitioned by target
row; a window may therefore read rows from before its own split, which is
ordinary use of past data and leaks nothing from the future. All artifact
writes are atomic (temp file + rename) and a failed stage removes whatever
was already written.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import arima as arima_mod
from . import metrics as metrics_mod
from .chart import format_predictions, render_chart
from .errors import DataError, MarketcastError
from .frame import (
    SplitSpec,
    apply_scaler,
    correlation_vector,
    fit_scaler,
    forward_fill,
    invert_scaler,
    load_csv,
    make_windows,
    select_features,
    split_bounds,
    write_csv,
)
from .indicators import DEFAULT_INDICATORS, derive_indicators
from .lstm import LstmConfig, init_network, predict_series, save_checkpoint, train

__all__ = [
    "PipelineConfig",
    "RunArtifacts",
    "run_pipeline",
    "load_config",
    "atomic_write_text",
    "atomic_write_via",
    "DUMPABLE_STAGES",
]

FEATURE_MODES = ("with_features", "price_only")
MODEL_MODES = ("arima", "lstm", "both")
FORECAST_MODES = ("static", "rolling")
DUMPABLE_STAGES = ("filled", "enriched", "scaler", "features", "windows")

# rows of history shown before the forecast in predictions files and charts
PREDICTION_CONTEXT_ROWS = 60


@dataclass(frozen=True)
class PipelineConfig:
    input_path: str
    out_dir: str = "."
    target_column: str = "PX_LAST"
    splits: tuple[float, float, float] = (0.6, 0.2, 0.2)
    window: int = 216
    horizon: int = 1
    corr_threshold: float = 0.5
    feature_mode: str = "with_features"
    model_mode: str = "both"
    forecast_mode: str = "static"
    arima_bounds: tuple[int, int, int] = (5, 2, 5)
    lstm_hidden: int = 64
    lstm_layers: int = 2
    lstm_dropout: float = 0.20
    lstm_lr: float = 0.001
    lstm_batch: int = 32
    lstm_epochs: int = 200
    lstm_patience: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "splits", tuple(float(f) for f in self.splits))
        object.__setattr__(self, "arima_bounds", tuple(int(b) for b in self.arima_bounds))
        if len(self.splits) != 3:
            raise DataError("splits must be (train, validation, test) fractions")
        SplitSpec(self.splits)  # validates sign and sum
        if self.window < 1 or self.horizon < 1:
            raise DataError("window and horizon must be >= 1")
        if not 0.0 <= self.corr_threshold <= 1.0:
            raise DataError("corr_threshold must be in [0, 1]")
        if self.feature_mode not in FEATURE_MODES:
            raise DataError(f"feature_mode must be one of {FEATURE_MODES}")
        if self.model_mode not in MODEL_MODES:
            raise DataError(f"model_mode must be one of {MODEL_MODES}")
        if self.forecast_mode not in FORECAST_MODES:
            raise DataError(f"forecast_mode must be one of {FORECAST_MODES}")
        if len(self.arima_bounds) != 3 or min(self.arima_bounds) < 0:
            raise DataError("arima_bounds must be three non-negative integers")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        clean = {}
        for key, value in payload.items():
            if key.startswith("_"):
                continue  # annotation keys in resolved configs
            if key not in known:
                raise DataError(f"unknown config key {key!r}")
            clean[key] = tuple(value) if isinstance(value, list) else value
        if "input_path" not in clean:
            raise DataError("config needs an input_path")
        return cls(**clean)

    def lstm_config(self, input_size: int) -> LstmConfig:
        return LstmConfig(
            input_size=input_size,
            hidden_size=self.lstm_hidden,
            num_layers=self.lstm_layers,
            dropout_rate=self.lstm_dropout,
            learning_rate=self.lstm_lr,
            batch_size=self.lstm_batch,
            max_epochs=self.lstm_epochs,
            # short runs keep the config valid: patience may not exceed max_epochs
            patience=min(self.lstm_patience, self.lstm_epochs),
            seed=self.seed,
        )


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Read a JSON config file and apply flag overrides on top."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError("config file must hold a JSON object")
    cfg = PipelineConfig.from_dict(payload)
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


@dataclass(frozen=True)
class RunArtifacts:
    predictions: dict[str, str]
    metrics: dict[str, str]
    charts: dict[str, str]
    checkpoint: str | None
    arima_model: str | None
    selected_features: str
    resolved_config: str
    stages: dict[str, str]


class _Writer:
    """Atomic file writes with rollback of everything written so far."""

    def __init__(self):
        self.written: list[Path] = []

    def text(self, path: Path, content: str):
        atomic_write_text(path, content)
        self.written.append(path)

    def via(self, path: Path, write_fn, suffix: str = ".tmp"):
        atomic_write_via(path, write_fn, suffix=suffix)
        self.written.append(path)

    def rollback(self):
        for path in self.written:
            try:
                os.unlink(path)
            except OSError:
                pass


def _stage_guard(name: str, exc: MarketcastError):
    head = exc.args[0] if exc.args else str(exc)
    exc.args = (f"stage {name}: {head}",) + tuple(exc.args[1:])


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def atomic_write_text(path, content: str) -> None:
    """Write text via a temp file in the same directory plus os.replace."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_via(path, write_fn, suffix: str = ".tmp") -> None:
    """Atomic variant for writers that need a path (np.savez, write_csv)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=suffix)
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_pipeline(config: PipelineConfig, dump_stages=()) -> RunArtifacts:
    """Execute the configured experiment and write all artifacts.

    `dump_stages` is a collection of DUMPABLE_STAGES names (or "all"); each
    requested intermediate lands under <out_dir>/stages/.
    """
    dump = set(dump_stages)
    if "all" in dump:
        dump = set(DUMPABLE_STAGES)
    unknown = dump - set(DUMPABLE_STAGES)
    if unknown:
        raise DataError(f"unknown dump stage {sorted(unknown)[0]!r}")

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage_dir = out_dir / "stages"
    if dump:
        stage_dir.mkdir(exist_ok=True)

    writer = _Writer()
    stages_written: dict[str, str] = {}
    stage = "ingest"
    try:
        frame = load_csv(config.input_path)

        stage = "fill"
        filled = forward_fill(frame)
        if config.target_column not in filled.columns:
            raise DataError(f"target column {config.target_column!r} not in input")
        if dump and "filled" in dump:
            path = stage_dir / "filled.csv"
            writer.via(path, lambda tmp: write_csv(filled, tmp), suffix=".csv")
            stages_written["filled"] = str(path)

        stage = "indicators"
        enriched = derive_indicators(filled, DEFAULT_INDICATORS, price_column=config.target_column)
        # indicator warmup rows carry leading NaN; a second fill drops them
        enriched = forward_fill(enriched)
        if dump and "enriched" in dump:
            path = stage_dir / "enriched.csv"
            writer.via(path, lambda tmp: write_csv(enriched, tmp), suffix=".csv")
            stages_written["enriched"] = str(path)

        stage = "split"
        n = len(enriched)
        bounds = split_bounds(n, SplitSpec(config.splits))
        b1, b2 = bounds[1], bounds[2]
        if min(b1, b2 - b1, n - b2) < 0 or n - b2 < 2:
            raise DataError(f"test split has {n - b2} rows; need at least 2")

        stage = "scale"
        scaler = fit_scaler(enriched.rows(0, b1))
        scaled = apply_scaler(enriched, scaler)
        if dump and "scaler" in dump:
            path = stage_dir / "scaler.json"
            writer.text(path, json.dumps(scaler.to_dict(), indent=2, sort_keys=True) + "\n")
            stages_written["scaler"] = str(path)

        stage = "features"
        correlations = correlation_vector(enriched.rows(0, b1), config.target_column)
        if config.feature_mode == "with_features":
            selected = select_features(correlations, config.corr_threshold)
        else:
            selected = []
        window_columns = [config.target_column] + [c for c in selected if c != config.target_column]
        features_payload = {
            "correlations": {k: _jsonable(v) for k, v in correlations.items()},
            "threshold": config.corr_threshold,
            "feature_mode": config.feature_mode,
            "selected": selected,
            "window_columns": window_columns,
        }
        features_json = json.dumps(features_payload, indent=2, sort_keys=True) + "\n"
        if dump and "features" in dump:
            path = stage_dir / "features.json"
            writer.text(path, features_json)
            stages_written["features"] = str(path)

        stage = "windows"
        windows = make_windows(scaled, window_columns, config.target_column, config.window, config.horizon)
        target_rows = np.arange(len(windows)) + config.window + config.horizon - 1
        train_ds = windows.subset(target_rows < b1)
        val_ds = windows.subset((target_rows >= b1) & (target_rows < b2))
        test_ds = windows.subset(target_rows >= b2)
        if len(train_ds) == 0:
            raise DataError(
                f"no training windows: window {config.window} + horizon {config.horizon} "
                f"reaches past the training split of {b1} rows"
            )
        if len(test_ds) != n - b2:
            raise DataError("test windows do not cover the test split")
        if dump and "windows" in dump:
            path = stage_dir / "windows.npz"

            def _dump_windows(tmp):
                np.savez(
                    tmp,
                    train_inputs=train_ds.inputs,
                    train_targets=train_ds.targets,
                    val_inputs=val_ds.inputs,
                    val_targets=val_ds.targets,
                    test_inputs=test_ds.inputs,
                    test_targets=test_ds.targets,
                )

            writer.via(path, _dump_windows, suffix=".npz")
            stages_written["windows"] = str(path)

        prices = enriched.column(config.target_column)
        test_dates = enriched.dates[b2:]
        actual_test = prices[b2:]
        context = min(PREDICTION_CONTEXT_ROWS, b2)
        ctx_dates = enriched.dates[b2 - context : b2]
        ctx_actual = prices[b2 - context : b2]

        predictions: dict[str, str] = {}
        metric_files: dict[str, str] = {}
        chart_files: dict[str, str] = {}
        arima_model_path: str | None = None
        checkpoint_path: str | None = None

        def _emit_leg(leg: str, preds: np.ndarray):
            all_dates = list(ctx_dates) + list(test_dates)
            all_actual = np.concatenate([ctx_actual, actual_test])
            all_preds = np.concatenate([np.full(context, np.nan), preds])
            pred_path = out_dir / f"predictions_{leg}.csv"
            writer.text(pred_path, format_predictions(all_dates, all_actual, all_preds))
            predictions[leg] = str(pred_path)

            rep = metrics_mod.report(test_dates, actual_test, preds)
            met_path = out_dir / f"metrics_{leg}.txt"
            writer.text(met_path, metrics_mod.format_report(rep))
            metric_files[leg] = str(met_path)

            svg = render_chart(all_dates, all_actual, all_preds, title=f"{leg} forecast vs actual")
            chart_path = out_dir / f"chart_{leg}.svg"
            writer.text(chart_path, svg)
            chart_files[leg] = str(chart_path)

        if config.model_mode in ("arima", "both"):
            stage = "arima"
            model = arima_mod.auto_arima(prices[:b2], bounds=config.arima_bounds)
            mode = (
                arima_mod.ForecastMode.STATIC
                if config.forecast_mode == "static"
                else arima_mod.ForecastMode.ROLLING
            )
            history = prices[:b2] if mode is arima_mod.ForecastMode.STATIC else prices
            preds = arima_mod.forecast(model, history, n - b2, mode)
            model_path = out_dir / "arima_model.json"
            writer.text(
                model_path,
                json.dumps(arima_mod.model_to_dict(model), indent=2, sort_keys=True) + "\n",
            )
            arima_model_path = str(model_path)
            _emit_leg("arima", preds)

        if config.model_mode in ("lstm", "both"):
            stage = "lstm"
            lcfg = config.lstm_config(input_size=len(window_columns))
            network = init_network(lcfg)
            network, history = train(network, train_ds, val_ds, lcfg)
            preds_scaled = predict_series(network, test_ds)
            preds = invert_scaler(preds_scaled, config.target_column, scaler)
            ckpt_path = out_dir / "lstm_checkpoint.npz"
            writer.via(ckpt_path, lambda tmp: save_checkpoint(network, tmp), suffix=".npz")
            checkpoint_path = str(ckpt_path)
            _emit_leg("lstm", preds)

        stage = "report"
        features_path = out_dir / "selected_features.json"
        writer.text(features_path, features_json)
        resolved = dict(config.to_dict())
        resolved["_window_includes_target"] = True
        resolved_path = out_dir / "resolved_config.json"
        writer.text(resolved_path, json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    except MarketcastError as exc:
        writer.rollback()
        _stage_guard(stage, exc)
        raise
    except BaseException:
        writer.rollback()
        raise

    return RunArtifacts(
        predictions=predictions,
        metrics=metric_files,
        charts=chart_files,
        checkpoint=checkpoint_path,
        arima_model=arima_model_path,
        selected_features=str(features_path),
        resolved_config=str(resolved_path),
        stages=stages_written,
    )
