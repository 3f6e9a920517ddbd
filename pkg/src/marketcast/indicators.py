"""Technical indicators derived from raw OHLCV series.

Every indicator returns an array aligned index-for-index with its input;
warm-up positions that cannot be computed yet are NaN. Column names are
deterministic from the indicator kind and period (MOV_AVG_50D, RSI_14D,
VOLATILITY_30D, PX_HIGH_LOW_DIFFERENCE) so derived datasets match the naming
of vendor-sourced ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError
from .frame import TimeSeriesFrame

TRADING_DAYS_PER_YEAR = 252

__all__ = [
    "IndicatorKind",
    "IndicatorSpec",
    "sma",
    "rsi",
    "rolling_volatility",
    "high_low_diff",
    "derive_indicators",
    "DEFAULT_INDICATORS",
]


class IndicatorKind(str, Enum):
    SMA = "SMA"
    RSI = "RSI"
    ROLLING_VOL = "ROLLING_VOL"
    HIGH_LOW_DIFF = "HIGH_LOW_DIFF"


@dataclass(frozen=True)
class IndicatorSpec:
    """One derived column: what to compute, over which period, from which input."""

    kind: IndicatorKind
    period: int = 1
    sources: tuple[str, ...] = ("PX_LAST",)

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("indicator period must be >= 1")

    @property
    def column_name(self) -> str:
        if self.kind is IndicatorKind.SMA:
            return f"MOV_AVG_{self.period}D"
        if self.kind is IndicatorKind.RSI:
            return f"RSI_{self.period}D"
        if self.kind is IndicatorKind.ROLLING_VOL:
            return f"VOLATILITY_{self.period}D"
        return "PX_HIGH_LOW_DIFFERENCE"


DEFAULT_INDICATORS = (
    IndicatorSpec(IndicatorKind.SMA, 50),
    IndicatorSpec(IndicatorKind.SMA, 200),
    IndicatorSpec(IndicatorKind.RSI, 14),
    IndicatorSpec(IndicatorKind.ROLLING_VOL, 30),
    IndicatorSpec(IndicatorKind.HIGH_LOW_DIFF, sources=("PX_HIGH", "PX_LOW")),
)


def sma(series, n: int) -> np.ndarray:
    """Simple moving average of the n most recent values; first n-1 are NaN."""
    if n < 1:
        raise ValueError("sma period must be >= 1")
    series = np.asarray(series, dtype=float)
    out = np.full(len(series), np.nan)
    if len(series) >= n:
        kernel = np.ones(n) / n
        out[n - 1 :] = np.convolve(series, kernel, mode="valid")
    return out


def rsi(series, n: int = 14) -> np.ndarray:
    """Wilder's relative strength index.

    The first n changes seed the average gain/loss with a simple mean; later
    averages are smoothed with factor (n-1)/n. By convention RSI is 100 when
    the average loss is zero with positive gains, and 50 when both averages
    are zero. Positions 0..n-1 are NaN.
    """
    series = np.asarray(series, dtype=float)
    if n < 1:
        raise ValueError("rsi period must be >= 1")
    if len(series) <= n:
        raise DataError(f"rsi needs more than {n} prices, got {len(series)}")
    delta = np.diff(series)
    gains = np.clip(delta, 0.0, None)
    losses = np.clip(-delta, 0.0, None)
    out = np.full(len(series), np.nan)
    avg_gain = gains[:n].mean()
    avg_loss = losses[:n].mean()
    out[n] = _rsi_value(avg_gain, avg_loss)
    for t in range(n, len(delta)):
        avg_gain = (avg_gain * (n - 1) + gains[t]) / n
        avg_loss = (avg_loss * (n - 1) + losses[t]) / n
        out[t + 1] = _rsi_value(avg_gain, avg_loss)
    return out


def _rsi_value(avg_gain: float, avg_loss: float) -> float:
    if avg_loss == 0.0:
        return 50.0 if avg_gain == 0.0 else 100.0
    rs = avg_gain / avg_loss
    return 100.0 - 100.0 / (1.0 + rs)


def rolling_volatility(series, n: int = 30) -> np.ndarray:
    """Annualized percent volatility of daily log returns.

    Sample standard deviation over the trailing n returns, scaled by
    sqrt(252) and expressed in percent. Defined from index n onward.
    """
    if n < 2:
        raise ValueError("rolling_volatility period must be >= 2")
    series = np.asarray(series, dtype=float)
    if np.any(series <= 0):
        bad = int(np.argmax(series <= 0))
        raise DataError(f"non-positive price at index {bad}")
    returns = np.diff(np.log(series))
    out = np.full(len(series), np.nan)
    if len(returns) >= n:
        windows = np.lib.stride_tricks.sliding_window_view(returns, n)
        out[n:] = windows.std(axis=1, ddof=1) * np.sqrt(TRADING_DAYS_PER_YEAR) * 100.0
    return out


def high_low_diff(high, low) -> np.ndarray:
    """Elementwise daily trading range high - low."""
    high = np.asarray(high, dtype=float)
    low = np.asarray(low, dtype=float)
    if high.shape != low.shape:
        raise DataError("high and low series have different lengths")
    below = high < low
    if below.any():
        raise DataError(f"high below low at index {int(np.argmax(below))}")
    return high - low


def derive_indicators(
    frame: TimeSeriesFrame,
    specs=DEFAULT_INDICATORS,
    price_column: str = "PX_LAST",
) -> TimeSeriesFrame:
    """Append indicator columns that are absent and whose sources exist.

    Price-based indicators read `price_column`; the high-low range needs both
    of its source columns. Specs whose sources are missing are skipped so the
    pipeline runs on price-only datasets.
    """
    new: dict[str, np.ndarray] = {}
    for spec in specs:
        name = spec.column_name
        if name in frame.columns:
            continue
        if spec.kind is IndicatorKind.HIGH_LOW_DIFF:
            if not all(src in frame.columns for src in spec.sources):
                continue
            new[name] = high_low_diff(
                frame.column(spec.sources[0]), frame.column(spec.sources[1])
            )
            continue
        if price_column not in frame.columns:
            continue
        prices = frame.column(price_column)
        if spec.kind is IndicatorKind.SMA:
            new[name] = sma(prices, spec.period)
        elif spec.kind is IndicatorKind.RSI:
            new[name] = rsi(prices, spec.period)
        elif spec.kind is IndicatorKind.ROLLING_VOL:
            new[name] = rolling_volatility(prices, spec.period)
    return frame.with_columns(new) if new else frame
