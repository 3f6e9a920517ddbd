import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from marketcast.errors import DataError
from marketcast.metrics import accuracy, format_report, mae, report, rmse


def mae_oracle(actual, predicted):
    total = 0.0
    for a, p in zip(actual, predicted):
        total += abs(a - p)
    return total / len(actual)


def rmse_oracle(actual, predicted):
    total = 0.0
    for a, p in zip(actual, predicted):
        total += (a - p) ** 2
    return math.sqrt(total / len(actual))


pair_strategy = st.lists(
    st.tuples(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    ),
    min_size=1,
    max_size=200,
)


@given(pair_strategy)
def test_mae_matches_oracle(pairs):
    actual = [a for a, _ in pairs]
    predicted = [p for _, p in pairs]
    assert mae(actual, predicted) == pytest.approx(mae_oracle(actual, predicted), abs=1e-9)


@given(pair_strategy)
def test_rmse_matches_oracle(pairs):
    actual = [a for a, _ in pairs]
    predicted = [p for _, p in pairs]
    assert rmse(actual, predicted) == pytest.approx(rmse_oracle(actual, predicted), abs=1e-9)


def test_mae_rmse_hand_example():
    actual = [1.0, 2.0, 3.0]
    predicted = [2.0, 2.0, 2.0]
    assert mae(actual, predicted) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert rmse(actual, predicted) == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-15)


def test_rmse_dominates_mae():
    rng = np.random.default_rng(3)
    a = rng.normal(size=100)
    p = rng.normal(size=100)
    assert rmse(a, p) >= mae(a, p)


def test_accuracy_formula():
    assert accuracy(0.0, 50.0) == 100.0
    assert accuracy(50.0, 50.0) == 0.0
    assert accuracy(10.0, 100.0) == pytest.approx(90.0, abs=1e-12)
    # worse than predicting the mean itself goes negative, no clamping
    assert accuracy(120.0, 100.0) == pytest.approx(-20.0, abs=1e-12)


def test_accuracy_mae_consistency_cross_check():
    # a published pairing of MAE 462.1 with 89.8% accuracy implies the
    # actual mean; feeding that mean back through must recover 89.8 +/- 0.05
    implied_mean = 100.0 * 462.1 / (100.0 - 89.8)
    assert abs(accuracy(462.1, implied_mean) - 89.8) < 0.05


def test_accuracy_zero_mean_rejected():
    with pytest.raises(DataError):
        accuracy(1.0, 0.0)


def test_mismatched_lengths_rejected():
    with pytest.raises(DataError):
        mae([1.0, 2.0], [1.0])
    with pytest.raises(DataError):
        rmse([1.0], [1.0, 2.0])


def test_empty_rejected():
    with pytest.raises(DataError):
        mae([], [])


def _dates(n):
    start = date(2020, 1, 1)
    return [start + timedelta(days=i) for i in range(n)]


def test_report_halves_split_odd_length():
    # 5 points: first half is 2, second half gets the extra point
    actual = np.array([10.0, 20.0, 30.0, 40.0, 50.0])
    predicted = np.array([11.0, 19.0, 33.0, 44.0, 45.0])
    rep = report(_dates(5), actual, predicted)
    assert rep.n_points == 5
    assert rep.mae == pytest.approx(mae_oracle(actual, predicted), abs=1e-12)
    first_acc = accuracy(mae_oracle(actual[:2], predicted[:2]), actual[:2].mean())
    second_acc = accuracy(mae_oracle(actual[2:], predicted[2:]), actual[2:].mean())
    assert rep.accuracy_first_half_pct == pytest.approx(first_acc, abs=1e-12)
    assert rep.accuracy_second_half_pct == pytest.approx(second_acc, abs=1e-12)


def test_report_requires_two_points():
    with pytest.raises(DataError):
        report(_dates(1), [1.0], [1.0])


def test_report_date_length_mismatch():
    with pytest.raises(DataError):
        report(_dates(3), [1.0, 2.0], [1.0, 2.0])


def test_format_report_layout():
    rep = report(_dates(4), [100.0, 100.0, 100.0, 100.0], [99.0, 101.0, 98.0, 102.0])
    text = format_report(rep)
    lines = text.splitlines()
    assert lines[0] == f"mae = {rep.mae:.6f}"
    assert lines[1] == f"rmse = {rep.rmse:.6f}"
    assert lines[2] == f"accuracy_pct = {rep.accuracy_pct:.6f}"
    assert lines[5] == "n_points = 4"
    assert lines[6] == "date_range = 2020-01-01..2020-01-04"
    assert text.endswith("\n")
