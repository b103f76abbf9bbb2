import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dtpm.data import (Dataset, cap_rows, export_split_csv, fit_standardizer,
                       load_csv, make_dataset, save_csv, split_semi_supervised,
                       split_unsupervised_bootstrap, standardize_apply,
                       standardize_invert)
from dtpm.exceptions import DataError


def write_csv(path, text):
    path.write_text(text)
    return path


def test_load_small_csv(tmp_path):
    p = write_csv(tmp_path / "toy.csv",
                  "a,b,label\n1.0,2.0,0\n3.5,-1.0,1\n0.0,0.25,0\n")
    ds = load_csv(p)
    assert ds.features.shape == (3, 2)
    np.testing.assert_array_equal(ds.labels, [0, 1, 0])
    np.testing.assert_allclose(ds.features[1], [3.5, -1.0])
    assert ds.name == "toy"


def test_label_column_found_by_name_not_position(tmp_path):
    p = write_csv(tmp_path / "mid.csv",
                  "a,label,b\n1.0,0,2.0\n3.0,1,4.0\n")
    ds = load_csv(p)
    np.testing.assert_allclose(ds.features, [[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(ds.labels, [0, 1])


def test_csv_round_trip_exact(tmp_path):
    rng = np.random.default_rng(8)
    ds = make_dataset(rng.standard_normal((20, 3)) * 1e3,
                      rng.integers(0, 2, 20), name="rt")
    p = tmp_path / "rt.csv"
    save_csv(p, ds)
    back = load_csv(p)
    np.testing.assert_allclose(back.features, ds.features, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_load_errors_name_location(tmp_path):
    with pytest.raises(DataError, match="label"):
        load_csv(write_csv(tmp_path / "nolabel.csv", "a,b\n1,2\n"))
    with pytest.raises(DataError, match="empty"):
        load_csv(write_csv(tmp_path / "empty.csv", ""))
    with pytest.raises(DataError, match=r":3"):
        load_csv(write_csv(tmp_path / "badcell.csv",
                           "a,label\n1,0\nfoo,1\n"))
    with pytest.raises(DataError, match="'a'"):
        load_csv(write_csv(tmp_path / "badcol.csv",
                           "a,label\n1,0\nfoo,1\n"))
    with pytest.raises(DataError):
        load_csv(tmp_path / "missing.csv")


def test_cap_rows_truncates():
    ds = make_dataset(np.arange(20.0).reshape(10, 2), np.zeros(10))
    capped = cap_rows(ds, 4)
    assert capped.n == 4
    np.testing.assert_array_equal(capped.features, ds.features[:4])
    assert cap_rows(ds, 100).n == 10


# -------------------------------------------------------------------- splits

def ten_plus_three():
    rng = np.random.default_rng(0)
    feats = np.vstack([rng.standard_normal((10, 2)),
                       rng.standard_normal((3, 2)) + 50.0])
    labels = np.r_[np.zeros(10), np.ones(3)]
    return make_dataset(feats, labels, name="tiny")


def test_semi_split_counts():
    split = split_semi_supervised(ten_plus_three(), seed=0)
    assert split.train.shape[0] == 5
    assert split.test.shape[0] == 8
    assert int(split.test_labels.sum()) == 3
    assert split.mode == "semi"


def test_semi_split_train_has_no_anomalies():
    ds = ten_plus_three()
    split = split_semi_supervised(ds, seed=4)
    # anomalies live at +50, far from every normal: reconstruct raw train
    raw_train = standardize_invert(split.standardizer, split.train)
    assert np.all(raw_train < 25.0)


def test_semi_split_seed_behavior():
    ds = ten_plus_three()
    a = split_semi_supervised(ds, seed=1)
    b = split_semi_supervised(ds, seed=1)
    np.testing.assert_array_equal(a.train, b.train)
    c = split_semi_supervised(ds, seed=2)
    assert not np.array_equal(a.train, c.train)


def test_semi_split_requires_normals():
    ds = make_dataset(np.ones((3, 2)), np.ones(3))
    with pytest.raises(DataError):
        split_semi_supervised(ds, 0)


def test_bootstrap_single_row():
    ds = make_dataset(np.array([[2.0, 4.0]]), np.array([0]))
    split = split_unsupervised_bootstrap(ds, seed=0)
    assert split.train.shape == (1, 2)
    assert split.test.shape == (1, 2)
    np.testing.assert_array_equal(split.train, split.test)


def test_bootstrap_unique_fraction_near_one_minus_inv_e():
    n = 10_000
    ds = make_dataset(np.arange(n, dtype=float)[:, np.newaxis], np.zeros(n))
    split = split_unsupervised_bootstrap(ds, seed=3)
    raw = standardize_invert(split.standardizer, split.train)
    unique_frac = np.unique(raw).size / n
    assert abs(unique_frac - (1 - 1 / np.e)) < 0.02


def test_bootstrap_seed_determinism():
    ds = ten_plus_three()
    a = split_unsupervised_bootstrap(ds, seed=9)
    b = split_unsupervised_bootstrap(ds, seed=9)
    np.testing.assert_array_equal(a.train, b.train)
    # test side is always the full dataset
    assert a.test.shape[0] == ds.n


# ------------------------------------------------------------ standardization

def test_standardize_fitting_matrix_centered():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 4)) * 3.0 + 7.0
    st = fit_standardizer(X)
    Z = standardize_apply(st, X)
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-9)


def test_constant_feature_maps_to_zero():
    X = np.column_stack([np.arange(5.0), np.full(5, 3.3)])
    st = fit_standardizer(X)
    Z = standardize_apply(st, X)
    np.testing.assert_array_equal(Z[:, 1], 0.0)
    assert st.std[1] == 1.0


def test_standardize_round_trip():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((30, 3)) * 100
    st = fit_standardizer(X)
    np.testing.assert_allclose(standardize_invert(st, standardize_apply(st, X)),
                               X, rtol=0, atol=1e-12)


def test_standardizer_width_mismatch():
    st = fit_standardizer(np.zeros((3, 2)))
    with pytest.raises(DataError):
        standardize_apply(st, np.zeros((3, 5)))


def test_standardizer_fit_on_train_rows_only():
    """Leakage guard: stats must match the train half, not the full data."""
    ds = ten_plus_three()
    split = split_semi_supervised(ds, seed=0)
    raw_train = standardize_invert(split.standardizer, split.train)
    np.testing.assert_allclose(split.standardizer.mean, raw_train.mean(axis=0),
                               atol=1e-9)
    np.testing.assert_allclose(split.standardizer.std, raw_train.std(axis=0),
                               atol=1e-9)
    # anomalies at +50 would drag the mean far from the train-only value
    assert np.all(np.abs(split.standardizer.mean) < 5.0)


@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 5)),
              elements=st.floats(-1e6, 1e6)))
@settings(max_examples=50, deadline=None)
def test_standardize_round_trip_property(X):
    st = fit_standardizer(X)
    back = standardize_invert(st, standardize_apply(st, X))
    np.testing.assert_allclose(back, X, rtol=1e-9, atol=1e-6)


def test_export_split_csv(tmp_path):
    split = split_semi_supervised(ten_plus_three(), seed=0)
    train_p, test_p = export_split_csv(split, tmp_path / "audit")
    back_train = load_csv(train_p)
    np.testing.assert_allclose(back_train.features, split.train, atol=1e-12)
    back_test = load_csv(test_p)
    np.testing.assert_allclose(back_test.features, split.test, atol=1e-12)
    np.testing.assert_array_equal(back_test.labels, split.test_labels)


def test_make_dataset_validation():
    with pytest.raises(DataError):
        make_dataset(np.array([[np.inf, 1.0]]), np.array([0]))
    with pytest.raises(DataError):
        make_dataset(np.ones((2, 2)), np.array([0, 2]))
    with pytest.raises(DataError):
        make_dataset(np.ones((2, 2)), np.array([0]))
