import numpy as np
import pytest

from addkern.dataset import (Dataset, ScalingFactor, from_arrays,
                             invert_quarter_box, load_csv,
                             minmax_to_quarter_box, prescale,
                             same_scaling, train_test_split, zscore_normalize)
from addkern.errors import EmptyDatasetError, InvalidDMaxError, InvalidScalingError

from conftest import make_quarter, make_raw


def test_scaling_factor_identity():
    for d_max in (1, 2, 3):
        sf = ScalingFactor(d_max)
        assert abs(sf.delta_max * sf.factor * 4.0 - 1.0) < 1e-15


def test_zscore_basic_column():
    ds = from_arrays(np.array([[1.0], [2.0], [3.0]]), [0.0, 1.0, 2.0])
    z = zscore_normalize(ds)
    assert abs(z.features[:, 0].mean()) < 1e-12
    assert abs(z.features[:, 0].var() - 1.0) < 1e-10
    assert abs(z.targets.mean()) < 1e-12
    assert abs(z.targets.var() - 1.0) < 1e-10


def test_zscore_drops_constant_column():
    X = np.column_stack([[5.0, 5.0, 5.0], [1.0, 2.0, 3.0]])
    z = zscore_normalize(from_arrays(X, [1.0, 2.0, 3.0]))
    assert z.n_features == 1
    assert any("constant" in w for w in z.warnings)


def test_zscore_matches_hand_computed():
    X = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 60.0], [6.0, 30.0]])
    y = np.array([0.0, 1.0, 2.0, 3.0])
    z = zscore_normalize(from_arrays(X, y))
    expected = (X - X.mean(axis=0)) / X.std(axis=0)
    np.testing.assert_allclose(z.features, expected, atol=1e-14)


def test_zscore_requires_raw():
    ds = make_quarter(30, 3)
    with pytest.raises(InvalidScalingError):
        zscore_normalize(ds)


def test_quarter_box_endpoints_and_linearity():
    X = np.array([[-3.0, -1.0], [0.0, 0.0], [3.0, 1.0]])
    ds = Dataset(X, np.zeros(3), ("a", "b"), scaling_state="zscored")
    q = minmax_to_quarter_box(ds)
    np.testing.assert_allclose(q.features[:, 0], [-0.25, 0.0, 0.25], atol=1e-15)
    np.testing.assert_allclose(q.features[:, 1], [-0.25, 0.0, 0.25], atol=1e-15)


def test_quarter_box_random_column_bounds():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(200, 4))
    ds = Dataset(X, np.zeros(200), tuple("abcd"), scaling_state="zscored")
    q = minmax_to_quarter_box(ds)
    assert np.all(np.abs(q.features) <= 0.25 + 1e-15)
    np.testing.assert_allclose(q.features.min(axis=0), -0.25, atol=1e-12)
    np.testing.assert_allclose(q.features.max(axis=0), 0.25, atol=1e-12)


def test_quarter_box_roundtrip():
    z = zscore_normalize(make_raw(100, 5, seed=3))
    q = minmax_to_quarter_box(z)
    np.testing.assert_allclose(invert_quarter_box(q), z.features, atol=1e-10)


def test_prescale_dmax_one_is_identity():
    q = make_quarter(50, 3, seed=1)
    p, ell = prescale(q, 1, 2.0)
    np.testing.assert_array_equal(p.features, q.features)
    assert ell == 2.0


def test_prescale_ell_scaling():
    q = make_quarter(50, 3, seed=1)
    _, ell = prescale(q, 3, 1.0)
    assert abs(ell - 1.0 / np.sqrt(3.0)) < 1e-15


def test_prescale_ratio_invariance():
    q = make_quarter(300, 6, seed=2)
    ell = 0.7
    p, ell_t = prescale(q, 3, ell)
    rng = np.random.default_rng(0)
    for _ in range(100):
        i, j = rng.integers(0, q.n_rows, size=2)
        r2_q = np.sum((q.features[i] - q.features[j]) ** 2)
        r2_p = np.sum((p.features[i] - p.features[j]) ** 2)
        a = r2_q / (2 * ell ** 2)
        b = r2_p / (2 * ell_t ** 2)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_prescale_kernel_value_invariance():
    q = make_quarter(200, 4, seed=5)
    ell = 0.37
    p, ell_t = prescale(q, 2, ell)
    rng = np.random.default_rng(1)
    i = rng.integers(0, q.n_rows, size=50)
    j = rng.integers(0, q.n_rows, size=50)
    k_q = np.exp(-np.sum((q.features[i] - q.features[j]) ** 2, axis=1) / (2 * ell ** 2))
    k_p = np.exp(-np.sum((p.features[i] - p.features[j]) ** 2, axis=1) / (2 * ell_t ** 2))
    assert np.max(np.abs(k_q - k_p)) <= 1e-12


def test_prescale_window_distance_bound():
    p, _ = prescale(make_quarter(500, 6, seed=4), 3, 1.0)
    X = p.features[:, :3]
    diff = X[:, None, :] - X[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    assert dist.max() <= 0.5 + 1e-12


def test_prescale_invalid_dmax():
    q = make_quarter(20, 3)
    with pytest.raises(InvalidDMaxError):
        prescale(q, 0, 1.0)
    with pytest.raises(InvalidDMaxError):
        prescale(q, 4, 1.0)


def test_split_sizes_and_determinism():
    ds = make_raw(10, 3)
    tr, te = train_test_split(ds, 0.5, seed=42)
    assert tr.n_rows == 5 and te.n_rows == 5
    tr2, te2 = train_test_split(ds, 0.5, seed=42)
    np.testing.assert_array_equal(tr.features, tr2.features)
    np.testing.assert_array_equal(te.targets, te2.targets)


def test_split_floor_rule_and_partition():
    ds = make_raw(7, 2)
    tr, te = train_test_split(ds, 0.5, seed=0)
    assert (tr.n_rows, te.n_rows) == (3, 4)
    all_rows = np.vstack([tr.features, te.features])
    assert all_rows.shape[0] == 7
    # disjoint cover: every original row appears exactly once
    orig = {tuple(r) for r in ds.features}
    got = [tuple(r) for r in all_rows]
    assert set(got) == orig and len(got) == len(orig)


def test_from_arrays_drops_nonfinite_rows():
    X = np.array([[1.0, 2.0], [np.nan, 1.0], [2.0, np.inf], [3.0, 4.0]])
    ds = from_arrays(X, [1.0, 2.0, 3.0, 4.0])
    assert ds.n_rows == 2
    assert ds.transform_log["rows_dropped"] == 2


def test_from_arrays_empty_raises():
    with pytest.raises(EmptyDatasetError):
        from_arrays(np.array([[np.nan]]), [1.0])


def test_load_csv_by_name_and_index(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,label\n1,2,3\n4,,6\n7,8,9\n")
    ds = load_csv(p, "label")
    assert ds.n_rows == 2  # missing entry dropped
    assert ds.feature_names == ("a", "b")
    ds2 = load_csv(p, 2)
    np.testing.assert_array_equal(ds.targets, ds2.targets)


def test_load_csv_custom_delimiter(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a;b;y\n1;2;3\n4;5;6\n")
    ds = load_csv(p, "y", delimiter=";")
    assert ds.n_rows == 2 and ds.n_features == 2


def test_same_scaling_tracks_maps():
    q = make_quarter(40, 3, seed=9)
    a, _ = prescale(q, 2, 1.0)
    b, _ = prescale(q, 2, 1.0)
    c, _ = prescale(q, 3, 1.0)
    assert same_scaling(a, b)
    assert not same_scaling(a, c)
