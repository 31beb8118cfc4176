import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from robust_tsf.series import (DataError, NormParams, TimeSeries, WindowConfig, apply_norm, invert_norm,
                               load_csv, mae, mse, normalize, split, window)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_timeseries_invariants():
    with pytest.raises(DataError):
        TimeSeries([1.0])
    with pytest.raises(DataError):
        TimeSeries([1.0, np.nan])
    ts = TimeSeries([1, 2, 3])
    with pytest.raises(ValueError):
        ts.values[0] = 5.0


def test_load_csv_plain(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1.0\n2.0\n3.0\n")
    np.testing.assert_array_equal(load_csv(p).values, [1, 2, 3])


def test_load_csv_header(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("value\n" + "\n".join(str(i) for i in range(5)) + "\n")
    assert len(load_csv(p)) == 5
    q = tmp_path / "c.csv"
    q.write_text("t,value\n0,4\n1,5\n")
    np.testing.assert_array_equal(load_csv(q, "value").values, [4, 5])


def test_load_csv_reports_bad_row(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1\n2\nabc\n4\n")
    with pytest.raises(DataError, match="row 3"):
        load_csv(p)


def test_load_csv_missing_and_empty(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv")
    p = tmp_path / "e.csv"
    p.write_text("value\n")
    with pytest.raises(DataError):
        load_csv(p)


def test_normalize_examples():
    out, p = normalize(TimeSeries([0.0, 2.0]))
    np.testing.assert_array_equal(out.values, [-1, 1])
    assert (p.mean, p.std) == (1.0, 1.0)
    with pytest.raises(DataError):
        normalize(TimeSeries([1, 1, 1]))
    again, q = normalize(out)
    np.testing.assert_allclose(again.values, out.values, atol=1e-9)
    assert abs(q.mean) < 1e-9 and abs(q.std - 1) < 1e-9


def test_apply_norm_examples():
    ts = TimeSeries([3.0, 5.0])
    assert apply_norm(ts, NormParams(1, 2)).values[0] == 1.0
    np.testing.assert_array_equal(apply_norm(ts, NormParams(0, 1)).values, ts.values)
    with pytest.raises(ValueError):
        NormParams(0.0, 0.0)


@given(arrays(float, st.integers(2, 50), elements=finite))
def test_normalize_round_trip(values):
    ts = TimeSeries(values)
    if np.std(values) < 1e-6:
        return
    out, p = normalize(ts)
    assert abs(out.values.mean()) < 1e-9
    assert abs(out.values.std() - 1) < 1e-9
    back = invert_norm(out, p).values
    np.testing.assert_allclose(back, values, rtol=1e-12, atol=1e-12 * np.abs(values).max())


def test_split_examples():
    ts = TimeSeries(np.arange(10.0))
    a, b = split(ts, 0.7)
    assert (len(a), len(b)) == (7, 3)
    a, b = split(ts, 0.99)
    assert (len(a), len(b)) == (9, 1)
    np.testing.assert_array_equal(np.concatenate((a.values, b.values)), ts.values)
    with pytest.raises(ValueError):
        split(ts, 0.0)


def test_window_enumeration():
    ds = window(TimeSeries([1, 2, 3, 4, 5]), WindowConfig(2, 1, 1))
    np.testing.assert_array_equal(ds.inputs, [[1, 2], [2, 3], [3, 4]])
    np.testing.assert_array_equal(ds.labels, [[3], [4], [5]])
    assert len(window(TimeSeries(np.arange(6.0)), WindowConfig(5, 1))) == 1
    with pytest.raises(DataError):
        window(TimeSeries([1, 2]), WindowConfig(2, 1))


@given(st.integers(1, 6), st.integers(1, 3), st.integers(1, 4), st.integers(12, 40))
def test_window_definition(K, O, stride, T):
    z = np.arange(T, dtype=float) * 1.5
    ds = window(z, WindowConfig(K, O, stride))
    assert len(ds) == (T - K - O) // stride + 1
    for n in range(len(ds)):
        np.testing.assert_array_equal(ds.inputs[n], z[n * stride:n * stride + K])
        np.testing.assert_array_equal(ds.labels[n], z[n * stride + K:n * stride + K + O])


@given(st.integers(2, 6), st.integers(20, 60))
def test_nonoverlapping_windows_rebuild_prefix(K, T):
    z = np.sin(np.arange(T))
    ds = window(z, WindowConfig(K, 1, K))
    flat = ds.inputs.ravel()
    np.testing.assert_array_equal(flat, z[:flat.size])


def test_metrics_examples():
    assert mae([[0.0]], [[2.0]]) == 2.0 and mse([[0.0]], [[2.0]]) == 4.0
    y = np.arange(6.0).reshape(3, 2)
    assert mae(y, y) == 0 and mse(y, y) == 0
    assert mae(y + 0.5, y) == 0.5 and mse(y - 0.5, y) == 0.25
    with pytest.raises(ValueError):
        mae([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        mse([], [])


@given(arrays(float, st.tuples(st.integers(1, 8), st.integers(1, 3)), elements=finite),
       arrays(float, st.tuples(st.integers(1, 8), st.integers(1, 3)), elements=finite))
def test_mae_below_rmse(a, b):
    if a.shape != b.shape:
        b = np.resize(b, a.shape)
    assert mae(a, b) <= np.sqrt(mse(a, b)) * (1 + 1e-12) + 1e-12
