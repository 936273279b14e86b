"""CSV loading, normalization, folds, windows, metrics, early stopping."""

import numpy as np
import pytest

from qtsbench.errors import ConfigurationError, DataError, UsageError
from qtsbench.pipeline import (
    FoldPurpose,
    early_stop_check,
    load_csv,
    mae,
    make_folds,
    minmax_normalize,
    mse,
    windowize,
)


class TestLoadCsv:
    def test_well_formed(self, tmp_path):
        path = tmp_path / "ok.csv"
        path.write_text("t,value\n1,10.0\n2,11.5\n3,9.0\n")
        series = load_csv(path, value_column="value", timestamp_column="t")
        assert len(series) == 3
        np.testing.assert_allclose(series.values, [10.0, 11.5, 9.0])

    def test_non_numeric_value_names_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,value\n1,10.0\n2,oops\n3,9.0\n")
        with pytest.raises(DataError, match=r"3"):
            load_csv(path, value_column="value", timestamp_column="t")

    def test_duplicate_timestamp(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("t,value\n1,10.0\n1,11.0\n")
        with pytest.raises(DataError, match="strictly increasing"):
            load_csv(path, value_column="value", timestamp_column="t")

    def test_missing_column(self, tmp_path):
        path = tmp_path / "cols.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="price"):
            load_csv(path, value_column="price")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataError, match="empty"):
            load_csv(path)

    def test_without_timestamp_column(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("value\n1\n2\n3\n")
        series = load_csv(path)
        assert series.timestamps == [0, 1, 2]


class TestNormalize:
    def test_basic(self):
        norm = minmax_normalize(np.array([2.0, 4.0, 6.0]))
        np.testing.assert_allclose(norm.values, [0.0, 0.5, 1.0])
        assert norm.vmin == 2.0 and norm.vmax == 6.0

    def test_constant_rejected(self):
        with pytest.raises(DataError):
            minmax_normalize(np.array([5.0, 5.0, 5.0]))

    def test_denormalize_inverse(self):
        norm = minmax_normalize(np.array([2.0, 4.0, 6.0]))
        np.testing.assert_allclose(norm.denormalize([0.25]), [3.0])

    def test_round_trip(self):
        rng = np.random.default_rng(4)
        values = rng.normal(size=200) * 13 + 5
        norm = minmax_normalize(values)
        np.testing.assert_allclose(norm.denormalize(norm.values), values, atol=1e-12)
        assert norm.values.min() >= 0.0 and norm.values.max() <= 1.0

    def test_train_only_stats(self):
        values = np.array([0.0, 1.0, 2.0, 10.0])
        norm = minmax_normalize(values, stats_slice=slice(0, 3))
        np.testing.assert_allclose(norm.values, [0.0, 0.5, 1.0, 5.0])


class TestMakeFolds:
    def test_default_layout(self):
        folds = make_folds(750)
        assert len(folds) == 6
        assert [f.train_start for f in folds] == [0, 50, 100, 150, 200, 250]
        first, last = folds[0], folds[5]
        assert (first.train_start, first.train_end) == (0, 450)
        assert (first.eval_start, first.eval_end) == (450, 500)
        assert (last.train_start, last.train_end) == (250, 700)
        assert (last.eval_start, last.eval_end) == (700, 750)
        assert [f.purpose for f in folds[:3]] == [FoldPurpose.VALIDATION] * 3
        assert [f.purpose for f in folds[3:]] == [FoldPurpose.TEST] * 3

    def test_boundary_length(self):
        with pytest.raises(ConfigurationError, match="750"):
            make_folds(749)

    def test_single_fold(self):
        folds = make_folds(500, n_validation=1, n_test=0)
        assert len(folds) == 1
        assert (folds[0].train_start, folds[0].eval_end) == (0, 500)

    def test_no_leakage(self):
        for fold in make_folds(800):
            assert fold.train_end - 1 < fold.eval_start
            assert fold.eval_end - fold.eval_start == 50


class TestWindowize:
    def test_definition(self):
        windows, targets = windowize([1, 2, 3, 4], 2)
        np.testing.assert_allclose(windows, [[1, 2], [2, 3]])
        np.testing.assert_allclose(targets, [3, 4])

    def test_count(self):
        windows, targets = windowize(np.arange(450), 8)
        assert windows.shape == (442, 8)
        assert targets.shape == (442,)

    def test_rejects_bad_sizes(self):
        with pytest.raises(UsageError):
            windowize([1, 2, 3], 0)
        with pytest.raises(UsageError):
            windowize([1, 2], 2)


class TestMetrics:
    def test_identity(self):
        y = [0.3, 0.7]
        assert mse(y, y) == 0.0
        assert mae(y, y) == 0.0

    def test_unit_errors(self):
        assert mse([0, 0], [1, 1]) == pytest.approx(1.0)
        assert mae([0, 0], [1, 1]) == pytest.approx(1.0)

    def test_hand_arithmetic(self):
        assert mse([0, 0], [1, 3]) == pytest.approx(5.0)
        assert mae([0, 0], [1, 3]) == pytest.approx(2.0)
        assert mae([0, 0], [1, 3]) <= np.sqrt(mse([0, 0], [1, 3]))

    def test_jensen_relation_random(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            y = rng.normal(size=30)
            y_hat = rng.normal(size=30)
            assert mae(y, y_hat) <= np.sqrt(mse(y, y_hat)) + 1e-12

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            mse([1.0], [1.0, 2.0])
        with pytest.raises(UsageError):
            mae([], [])


class TestEarlyStop:
    def test_plateau(self):
        stop, best = early_stop_check([1.0, 0.9, 0.9, 0.9], patience=2, min_delta=0.01)
        assert stop is True
        assert best == 1

    def test_strictly_decreasing_never_stops(self):
        trace = list(np.linspace(1.0, 0.1, 20))
        stop, best = early_stop_check(trace, patience=3, min_delta=1e-6)
        assert stop is False
        assert best == 19

    def test_patience_one(self):
        stop, best = early_stop_check([0.5, 0.5], patience=1, min_delta=0.0)
        assert stop is True
        assert best == 0

    def test_sub_delta_improvement_counts_toward_patience(self):
        stop, best = early_stop_check([0.5, 0.495, 0.492], patience=2, min_delta=0.01)
        assert stop is True
        assert best == 2  # true argmin, even though unqualified

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            early_stop_check([1.0], patience=0, min_delta=0.0)
        with pytest.raises(ConfigurationError):
            early_stop_check([1.0], patience=1, min_delta=-0.1)
