#!/usr/bin/env python3
"""Run the three-leg forecasting comparison on the bundled synthetic data.

Legs:
  1. ARIMA, automatic order selection, fixed-origin (static) forecast
  2. LSTM on the correlation-selected feature set
  3. LSTM on the closing price alone

Each leg scores one-step-ahead test targets over the final 20% of the data
(the LSTM legs predict one step ahead per window; the static ARIMA projects
the whole test period from the train/val boundary). Prints a comparison
table and leaves the usual per-leg artifacts (predictions CSV, metrics,
chart) under --out-dir.

The default epoch budget (25) gives a trained but not exhaustively tuned
LSTM in a few minutes per leg on a laptop. Use --full for the production
schedule (200 epochs with patience 10), which takes the better part of an
hour per leg on CPU.
"""

import argparse
import re
import time
from pathlib import Path

from marketcast.pipeline import PipelineConfig, run_pipeline

DEFAULT_DATA = Path(__file__).resolve().parent.parent / "data" / "synthetic_prices.csv"


def read_metrics(path: str) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        m = re.match(r"(\w+) = (.+)", line)
        if m:
            out[m.group(1)] = m.group(2)
    return out


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--input", type=Path, default=DEFAULT_DATA)
    ap.add_argument("--out-dir", type=Path, default=Path("experiment_out"))
    ap.add_argument("--epochs", type=int, default=25, help="LSTM epoch budget")
    ap.add_argument("--full", action="store_true", help="use the 200-epoch production schedule")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    epochs = 200 if args.full else args.epochs

    legs = [
        ("arima_static", dict(model_mode="arima", forecast_mode="static")),
        ("lstm_features", dict(model_mode="lstm", feature_mode="with_features")),
        ("lstm_price_only", dict(model_mode="lstm", feature_mode="price_only")),
    ]
    rows = []
    for name, options in legs:
        out_dir = args.out_dir / name
        cfg = PipelineConfig(
            input_path=str(args.input),
            out_dir=str(out_dir),
            lstm_epochs=epochs,
            seed=args.seed,
            **options,
        )
        t0 = time.time()
        artifacts = run_pipeline(cfg)
        took = time.time() - t0
        leg = "arima" if options["model_mode"] == "arima" else "lstm"
        metrics = read_metrics(artifacts.metrics[leg])
        rows.append((name, metrics, took))
        print(f"[{name}] done in {took:.1f}s -> {out_dir}")

    print()
    header = f"{'leg':<18}{'mae':>12}{'rmse':>12}{'acc%':>9}{'acc 1st%':>10}{'acc 2nd%':>10}{'time':>9}"
    print(header)
    print("-" * len(header))
    for name, m, took in rows:
        print(
            f"{name:<18}{float(m['mae']):>12.2f}{float(m['rmse']):>12.2f}"
            f"{float(m['accuracy_pct']):>9.2f}{float(m['accuracy_first_half_pct']):>10.2f}"
            f"{float(m['accuracy_second_half_pct']):>10.2f}{took:>8.1f}s"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
