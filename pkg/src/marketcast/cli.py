"""Command-line interface.

Subcommands cover each pipeline stage plus an end-to-end run:

  synth       generate a synthetic daily price CSV
  features    correlation scan and feature selection on the training split
  fit-arima   order search / fit on one column, model written as JSON
  forecast    apply a stored model to the tail of a series
  fit-garch   GARCH(1,1) on a returns column, variance path as CSV
  train-lstm  the LSTM leg of the experiment on its own
  run         the full experiment (arima and/or lstm legs)
  evaluate    metrics report for a predictions file
  chart       SVG rendering of a predictions file

Exit codes: 0 success, 1 usage error, 2 data error, 3 model-fit error.
The default output directory is $MARKETCAST_OUT when set, else the current
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import arima as arima_mod
from . import garch as garch_mod
from . import metrics as metrics_mod
from . import synth as synth_mod
from .chart import chart_from_file, format_predictions, read_predictions
from .errors import DataError, ModelFitError
from .frame import forward_fill, load_csv
from .pipeline import (
    DUMPABLE_STAGES,
    PipelineConfig,
    atomic_write_text,
    atomic_write_via,
    load_config,
    run_pipeline,
)

OUT_DIR_ENV = "MARKETCAST_OUT"

# history rows written before the forecast span in standalone predictions files
CONTEXT_ROWS = 60


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the documented contract is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, ".")


def _parse_floats(text: str, expect: int, label: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != expect:
        raise DataError(f"{label} expects {expect} comma-separated values, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise DataError(f"{label}: {exc}") from exc


def _parse_ints(text: str, expect: int, label: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != expect:
        raise DataError(f"{label} expects {expect} comma-separated values, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise DataError(f"{label}: {exc}") from exc


def _load_column(path, column: str) -> tuple[list, np.ndarray]:
    frame = forward_fill(load_csv(path))
    return list(frame.dates), frame.column(column)


def _add_pipeline_flags(p: argparse.ArgumentParser, include_arima: bool = True):
    p.add_argument("--input", help="input CSV (required unless --config provides it)")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out-dir", default=None, help=f"output directory (default ${OUT_DIR_ENV} or .)")
    p.add_argument("--target", default=None, help="target column (default PX_LAST)")
    p.add_argument("--splits", default=None, help="train,val,test fractions, e.g. 0.6,0.2,0.2")
    p.add_argument("--window", type=int, default=None, help="window length W")
    p.add_argument("--horizon", type=int, default=None, help="steps ahead to predict")
    p.add_argument("--threshold", type=float, default=None, help="|correlation| cutoff for features")
    p.add_argument("--features", choices=("with", "without"), default=None,
                   help="include selected indicator/auxiliary features, or price only")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="LSTM max epochs")
    p.add_argument("--patience", type=int, default=None, help="LSTM early-stopping patience")
    p.add_argument("--hidden", type=int, default=None, help="LSTM hidden units per layer")
    p.add_argument("--dropout", type=float, default=None, help="LSTM dropout rate")
    p.add_argument("--batch", type=int, default=None, help="LSTM batch size")
    p.add_argument("--lr", type=float, default=None, help="LSTM learning rate")
    if include_arima:
        p.add_argument("--mode", choices=("arima", "lstm", "both"), default=None, help="model legs to run")
        p.add_argument("--forecast", choices=("static", "rolling"), default=None, help="ARIMA forecast mode")
        p.add_argument("--bounds", default=None, help="ARIMA search bounds p,d,q (default 5,2,5)")
    p.add_argument("--dump-stage", action="append", default=[], metavar="STAGE",
                   help=f"dump an intermediate ({', '.join(DUMPABLE_STAGES)}, or all); repeatable")


def _pipeline_config(args, forced_mode: str | None = None) -> PipelineConfig:
    overrides = {}
    if args.input is not None:
        overrides["input_path"] = args.input
    overrides["out_dir"] = args.out_dir if args.out_dir is not None else _default_out_dir()
    if args.target is not None:
        overrides["target_column"] = args.target
    if args.splits is not None:
        overrides["splits"] = _parse_floats(args.splits, 3, "--splits")
    if args.window is not None:
        overrides["window"] = args.window
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.threshold is not None:
        overrides["corr_threshold"] = args.threshold
    if args.features is not None:
        overrides["feature_mode"] = "with_features" if args.features == "with" else "price_only"
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.epochs is not None:
        overrides["lstm_epochs"] = args.epochs
    if args.patience is not None:
        overrides["lstm_patience"] = args.patience
    if args.hidden is not None:
        overrides["lstm_hidden"] = args.hidden
    if args.dropout is not None:
        overrides["lstm_dropout"] = args.dropout
    if args.batch is not None:
        overrides["lstm_batch"] = args.batch
    if args.lr is not None:
        overrides["lstm_lr"] = args.lr
    if getattr(args, "mode", None) is not None:
        overrides["model_mode"] = args.mode
    if getattr(args, "forecast", None) is not None:
        overrides["forecast_mode"] = args.forecast
    if getattr(args, "bounds", None) is not None:
        overrides["arima_bounds"] = _parse_ints(args.bounds, 3, "--bounds")
    if forced_mode is not None:
        overrides["model_mode"] = forced_mode

    if args.config is not None:
        return load_config(args.config, overrides)
    if "input_path" not in overrides:
        raise DataError("either --input or --config is required")
    return PipelineConfig(**overrides)


def _cmd_synth(args) -> int:
    regimes = synth_mod.RegimeSpec(
        break_fraction=args.break_frac,
        drift_before=args.drift_before,
        vol_before=args.vol_before,
        drift_after=args.drift_after,
        vol_after=args.vol_after,
        start_price=args.start_price,
    )
    min_days = 216 + 1 + 10
    if args.days < min_days:
        raise DataError(f"--days must be at least {min_days} to feed the default pipeline")
    frame = synth_mod.generate(args.seed, args.days, regimes)
    out = Path(args.out if args.out else Path(_default_out_dir()) / "synthetic_prices.csv")
    atomic_write_via(out, lambda tmp: synth_mod.write_csv(frame, tmp), suffix=".csv")
    print(f"wrote {out} ({args.days} rows, seed {args.seed})")
    return 0


def _cmd_features(args) -> int:
    cfg = _pipeline_config(args, forced_mode=None)
    from .frame import SplitSpec, correlation_vector, select_features, split_bounds
    from .indicators import DEFAULT_INDICATORS, derive_indicators

    frame = forward_fill(load_csv(cfg.input_path))
    enriched = forward_fill(derive_indicators(frame, DEFAULT_INDICATORS, price_column=cfg.target_column))
    b1 = split_bounds(len(enriched), SplitSpec(cfg.splits))[1]
    correlations = correlation_vector(enriched.rows(0, b1), cfg.target_column)
    selected = select_features(correlations, cfg.corr_threshold)
    payload = {
        "correlations": {k: (None if not np.isfinite(v) else v) for k, v in correlations.items()},
        "threshold": cfg.corr_threshold,
        "selected": selected,
        "training_rows": b1,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_fit_arima(args) -> int:
    _, series = _load_column(args.input, args.column)
    n_fit = int(len(series) * args.train_frac)
    if n_fit < 1:
        raise DataError("--train-frac leaves no observations to fit")
    series = series[:n_fit]
    if args.order is not None:
        p, d, q = _parse_ints(args.order, 3, "--order")
        model = arima_mod.fit_arma(arima_mod.difference(series, d), p, q)
        model = replace(model, order=arima_mod.ArimaOrder(p, d, q))
    else:
        bounds = _parse_ints(args.bounds, 3, "--bounds") if args.bounds else arima_mod.DEFAULT_BOUNDS
        model = arima_mod.auto_arima(series, bounds=bounds)
    out = Path(args.out if args.out else Path(_default_out_dir()) / "arima_model.json")
    atomic_write_text(out, json.dumps(arima_mod.model_to_dict(model), indent=2, sort_keys=True) + "\n")
    o = model.order
    print(f"order ({o.p},{o.d},{o.q})  aic {model.aic:.4f}  sigma2 {model.sigma2:.6g}  n {model.n_obs}")
    print(f"wrote {out}")
    return 0


def _cmd_forecast(args) -> int:
    try:
        with open(args.model, encoding="utf-8") as fh:
            model = arima_mod.model_from_dict(json.load(fh))
    except OSError as exc:
        raise DataError(f"cannot read model: {exc}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed model file: {exc}") from exc
    dates, series = _load_column(args.input, args.column)
    steps = args.steps
    if steps < 1:
        raise DataError("--steps must be >= 1")
    if steps >= len(series):
        raise DataError(f"--steps {steps} must be below the series length {len(series)}")
    mode = arima_mod.ForecastMode.STATIC if args.mode == "static" else arima_mod.ForecastMode.ROLLING
    history = series[:-steps] if mode is arima_mod.ForecastMode.STATIC else series
    preds = arima_mod.forecast(model, history, steps, mode)
    start = len(series) - steps
    context = min(CONTEXT_ROWS, start)
    out_dates = dates[start - context :]
    actual = series[start - context :]
    predicted = np.concatenate([np.full(context, np.nan), preds])
    out = Path(args.out if args.out else Path(_default_out_dir()) / "predictions_arima.csv")
    atomic_write_text(out, format_predictions(out_dates, actual, predicted))
    print(f"wrote {out}")
    return 0


def _cmd_fit_garch(args) -> int:
    dates, series = _load_column(args.input, args.column)
    if args.input_kind == "prices":
        if np.any(series <= 0):
            raise DataError(f"column {args.column!r} has non-positive prices; cannot take log returns")
        returns = 100.0 * np.diff(np.log(series))
        dates = dates[1:]
    else:
        returns = series
    residuals = returns - returns.mean()
    params = garch_mod.fit_garch11(residuals)
    state = garch_mod.garch_state(params, residuals)
    out_dir = Path(_default_out_dir())
    params_path = Path(args.out_params if args.out_params else out_dir / "garch_params.json")
    payload = {
        "alpha0": params.alpha0,
        "alpha1": params.alpha1,
        "beta1": params.beta1,
        "persistence": params.persistence,
        "long_run_variance": params.long_run_variance,
        "log_likelihood": garch_mod.log_likelihood(residuals, params),
        "n_obs": len(residuals),
    }
    atomic_write_text(params_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    csv_path = Path(args.out_csv if args.out_csv else out_dir / "garch_variance.csv")
    lines = ["date,residual,sigma2"]
    for d, e, s2 in zip(dates, state.residuals, state.sigma2):
        lines.append(f"{d.isoformat()},{e:.8f},{s2:.8f}")
    atomic_write_text(csv_path, "\n".join(lines) + "\n")
    print(
        f"alpha0 {params.alpha0:.6g}  alpha1 {params.alpha1:.4f}  beta1 {params.beta1:.4f}  "
        f"persistence {params.persistence:.4f}"
    )
    print(f"wrote {params_path}")
    print(f"wrote {csv_path}")
    return 0


def _print_artifacts(artifacts) -> None:
    for leg in artifacts.predictions:
        print(f"wrote {artifacts.predictions[leg]}")
        print(f"wrote {artifacts.metrics[leg]}")
        print(f"wrote {artifacts.charts[leg]}")
    if artifacts.arima_model:
        print(f"wrote {artifacts.arima_model}")
    if artifacts.checkpoint:
        print(f"wrote {artifacts.checkpoint}")
    print(f"wrote {artifacts.selected_features}")
    print(f"wrote {artifacts.resolved_config}")
    for name, path in artifacts.stages.items():
        print(f"dumped {name} -> {path}")


def _cmd_run(args) -> int:
    cfg = _pipeline_config(args)
    artifacts = run_pipeline(cfg, dump_stages=args.dump_stage)
    _print_artifacts(artifacts)
    return 0


def _cmd_train_lstm(args) -> int:
    cfg = _pipeline_config(args, forced_mode="lstm")
    artifacts = run_pipeline(cfg, dump_stages=args.dump_stage)
    _print_artifacts(artifacts)
    return 0


def _cmd_evaluate(args) -> int:
    dates, actual, predicted = read_predictions(args.input)
    have = np.isfinite(predicted)
    if have.sum() < 2:
        raise DataError("need at least 2 predicted rows to evaluate")
    idx = np.flatnonzero(have)
    rep = metrics_mod.report([dates[i] for i in idx], actual[idx], predicted[idx])
    text = metrics_mod.format_report(rep)
    if args.out:
        atomic_write_text(args.out, text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_chart(args) -> int:
    svg = chart_from_file(args.input, title=args.title)
    out = Path(args.out if args.out else Path(_default_out_dir()) / "chart.svg")
    atomic_write_text(out, svg)
    print(f"wrote {out}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="marketcast", description="Price forecasting toolkit and benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic daily price CSV")
    p.add_argument("--out", default=None, help="output CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=2770, help="number of trading-day rows")
    p.add_argument("--break-frac", type=float, default=0.9, help="regime break position in (0, 1]")
    p.add_argument("--drift-before", type=float, default=0.08, help="annual drift before the break")
    p.add_argument("--vol-before", type=float, default=0.15, help="annual volatility before the break")
    p.add_argument("--drift-after", type=float, default=-0.25, help="annual drift after the break")
    p.add_argument("--vol-after", type=float, default=0.35, help="annual volatility after the break")
    p.add_argument("--start-price", type=float, default=1700.0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("features", help="correlation scan and feature selection")
    _add_pipeline_flags(p, include_arima=False)
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("fit-arima", help="fit an ARIMA model to one CSV column")
    p.add_argument("--input", required=True)
    p.add_argument("--column", default="PX_LAST")
    p.add_argument("--bounds", default=None, help="search bounds p,d,q (default 5,2,5)")
    p.add_argument("--order", default=None, help="skip the search and fit this exact p,d,q")
    p.add_argument("--train-frac", type=float, default=1.0, help="fit on the first fraction of rows")
    p.add_argument("--out", default=None, help="model JSON path")
    p.set_defaults(func=_cmd_fit_arima)

    p = sub.add_parser("forecast", help="forecast the tail of a series with a stored model")
    p.add_argument("--model", required=True, help="model JSON from fit-arima")
    p.add_argument("--input", required=True)
    p.add_argument("--column", default="PX_LAST")
    p.add_argument("--steps", type=int, required=True, help="evaluate the last N observations")
    p.add_argument("--mode", choices=("static", "rolling"), default="static")
    p.add_argument("--out", default=None, help="predictions CSV path")
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("fit-garch", help="fit GARCH(1,1) to a returns column")
    p.add_argument("--input", required=True)
    p.add_argument("--column", default="PX_LAST")
    p.add_argument("--input-kind", choices=("returns", "prices"), default="prices",
                   help="treat the column as returns, or derive demeaned log returns from prices")
    p.add_argument("--out-params", default=None, help="parameters JSON path")
    p.add_argument("--out-csv", default=None, help="variance path CSV path")
    p.set_defaults(func=_cmd_fit_garch)

    p = sub.add_parser("train-lstm", help="run only the LSTM leg of the experiment")
    _add_pipeline_flags(p, include_arima=False)
    p.set_defaults(func=_cmd_train_lstm)

    p = sub.add_parser("run", help="run the full experiment")
    _add_pipeline_flags(p, include_arima=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("evaluate", help="metrics report for a predictions CSV")
    p.add_argument("--input", required=True, help="predictions CSV (date,actual,predicted)")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("chart", help="render a predictions CSV as an SVG chart")
    p.add_argument("--input", required=True, help="predictions CSV (date,actual,predicted)")
    p.add_argument("--out", default=None, help="SVG path")
    p.add_argument("--title", default=None)
    p.set_defaults(func=_cmd_chart)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ModelFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
