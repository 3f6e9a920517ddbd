#!/usr/bin/env python3
"""Regenerate the bundled synthetic price history.

The repository ships data/synthetic_prices.csv, a 2770-row geometric random
walk with a late regime break (drift flips negative, volatility more than
doubles). This script rebuilds it byte-for-byte; pass a different seed or
regime shape to build variants for experiments.
"""

import argparse
from pathlib import Path

from marketcast.synth import RegimeSpec, generate, write_csv

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic_prices.csv"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--days", type=int, default=2770)
    ap.add_argument("--break-frac", type=float, default=0.9)
    ap.add_argument("--drift-before", type=float, default=0.08)
    ap.add_argument("--vol-before", type=float, default=0.15)
    ap.add_argument("--drift-after", type=float, default=-0.25)
    ap.add_argument("--vol-after", type=float, default=0.35)
    ap.add_argument("--start-price", type=float, default=1700.0)
    args = ap.parse_args()

    regimes = RegimeSpec(
        break_fraction=args.break_frac,
        drift_before=args.drift_before,
        vol_before=args.vol_before,
        drift_after=args.drift_after,
        vol_after=args.vol_after,
        start_price=args.start_price,
    )
    frame = generate(seed=args.seed, n_days=args.days, regimes=regimes)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(frame, args.out)
    print(f"wrote {args.out} ({args.days} rows, seed {args.seed})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
