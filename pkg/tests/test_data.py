import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcdd.data import (TabularDataset, load_csv, make_loco_scenarios, stratified_folds, zscore_apply,
                       zscore_fit, zscore_invert)
from mcdd.errors import ValidationError


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_string_labels_first_occurrence(tmp_path):
    ds = load_csv(write(tmp_path, "x1,x2,label\n1,2,a\n3,4,b\n5,6,a\n"))
    assert ds.labels.tolist() == [0, 1, 0]
    assert ds.class_names == ["a", "b"]
    assert ds.features.dtype == np.float64
    np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4], [5, 6]])
    assert ds.name == "data"


def test_load_label_by_name_index_and_without_header(tmp_path):
    path = write(tmp_path, "y,f\nb,1.5\na,2.5\n")
    by_name = load_csv(path, "y")
    by_index = load_csv(path, 0)
    assert by_name.labels.tolist() == by_index.labels.tolist() == [0, 1]
    np.testing.assert_array_equal(by_name.features[:, 0], [1.5, 2.5])
    bare = load_csv(write(tmp_path, "1.0,2.0,7\n3.0,4.0,5\n", "bare.csv"), has_header=False)
    assert bare.class_names == ["7", "5"]


def test_load_sorted_label_order(tmp_path):
    path = write(tmp_path, "f,y\n0,10\n0,2\n0,1\n")
    ds = load_csv(path, label_order="sorted")
    # numeric labels compare as numbers, not strings
    assert ds.class_names == ["1", "2", "10"]
    assert ds.labels.tolist() == [2, 1, 0]


def test_label_mapping_stable_across_reloads(tmp_path):
    path = write(tmp_path, "f,y\n1,c\n2,a\n3,b\n4,a\n")
    a, b = load_csv(path), load_csv(path)
    assert a.class_names == b.class_names and np.array_equal(a.labels, b.labels)


def test_load_reports_unparsable_cell_position(tmp_path):
    path = write(tmp_path, "f,g,y\n1,2,a\n1,oops,b\n")
    with pytest.raises(ValidationError, match="line 3, column 1"):
        load_csv(path)


def test_load_rejects_ragged_rows(tmp_path):
    with pytest.raises(ValidationError, match="line 3"):
        load_csv(write(tmp_path, "f,g,y\n1,2,a\n1,b\n"))


def test_load_rejects_missing_label_column(tmp_path):
    with pytest.raises(ValidationError):
        load_csv(write(tmp_path, "f,y\n1,a\n"), "label")
    with pytest.raises(ValidationError):
        load_csv(write(tmp_path, "f,y\n1,a\n"), 5)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "absent.csv")


def test_zscore_constant_attribute():
    x = np.array([[3.0, 1.0], [3.0, 2.0], [3.0, 4.0]])
    stats = zscore_fit(x)
    assert stats.std[0] == 1.0
    assert np.all(zscore_apply(x, stats)[:, 0] == 0.0)


def test_zscore_hand_values():
    stats = zscore_fit(np.array([[0.0], [2.0]]))
    assert stats.mean[0] == 1.0 and stats.std[0] == 1.0  # population std
    np.testing.assert_array_equal(zscore_apply(np.array([[0.0], [2.0]]), stats)[:, 0], [-1.0, 1.0])


def test_zscore_fit_on_train_only():
    rng = np.random.default_rng(0)
    train = rng.normal(size=(200, 3))
    test = rng.normal(loc=5.0, scale=2.0, size=(100, 3))
    x = np.vstack([train, test])
    stats = zscore_fit(x, np.arange(200))
    normed = zscore_apply(x, stats)
    np.testing.assert_allclose(normed[:200].mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(normed[:200].std(axis=0), 1.0, atol=1e-12)
    assert np.all(normed[200:].mean(axis=0) > 3.0)


def test_zscore_rejects_empty_rows():
    with pytest.raises(ValidationError):
        zscore_fit(np.zeros((3, 2)), np.array([], dtype=int))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), scale=st.floats(1e-3, 1e3))
def test_zscore_round_trip(seed, scale):
    rng = np.random.default_rng(seed)
    x = rng.normal(scale=scale, size=(20, 4))
    x[:, 1] = 7.0
    stats = zscore_fit(x, np.arange(10))
    np.testing.assert_allclose(zscore_invert(zscore_apply(x, stats), stats), x, rtol=0, atol=1e-10 * max(1.0, scale))


def test_csv_normalize_round_trip(tmp_path):
    path = write(tmp_path, "a,b,y\n1.25,-3,u\n2.5,8,v\n-0.5,4,u\n")
    ds = load_csv(path)
    stats = zscore_fit(ds.features)
    np.testing.assert_allclose(zscore_invert(zscore_apply(ds.features, stats), stats), ds.features, atol=1e-10)


def six_class_dataset(seed=0):
    rng = np.random.default_rng(seed)
    counts = [23, 17, 30, 11, 9, 14]
    y = np.concatenate([np.full(c, k) for k, c in enumerate(counts)])
    y = rng.permutation(y)
    return TabularDataset(rng.normal(size=(y.size, 3)), y, [str(k) for k in range(6)], "six")


def test_loco_bookkeeping():
    ds = six_class_dataset()
    scenarios = make_loco_scenarios(ds, folds=5, seed=0)
    assert len(scenarios) == 30
    assert [s.key for s in scenarios] == [(c, f) for c in range(6) for f in range(5)]


def test_loco_invariants():
    ds = six_class_dataset()
    for s in make_loco_scenarios(ds, folds=5, seed=1):
        assert not np.any(ds.labels[s.train_indices] == s.ood_class)
        assert not np.any(ds.labels[s.id_test_indices] == s.ood_class)
        assert np.intersect1d(s.train_indices, s.id_test_indices).size == 0
        assert np.array_equal(s.ood_test_indices, np.flatnonzero(ds.labels == s.ood_class))
        assert s.train_indices.size + s.id_test_indices.size == np.sum(ds.labels != s.ood_class)


def test_loco_id_test_folds_cover_every_row_once():
    ds = six_class_dataset()
    scenarios = make_loco_scenarios(ds, folds=5, seed=2)
    for ood in range(6):
        held = np.concatenate([s.id_test_indices for s in scenarios if s.ood_class == ood])
        assert np.array_equal(np.sort(held), np.flatnonzero(ds.labels != ood))


def test_loco_stratification_within_one_sample():
    ds = six_class_dataset()
    for s in make_loco_scenarios(ds, folds=5, seed=3):
        for c in range(6):
            if c == s.ood_class:
                continue
            n_c = np.sum(ds.labels == c)
            in_fold = np.sum(ds.labels[s.id_test_indices] == c)
            assert abs(in_fold - n_c / 5) < 1.0


def test_fold_sizes_balanced():
    labels = np.repeat(np.arange(4), 7)  # every class leaves remainder 2
    parts = stratified_folds(labels, 5, np.random.default_rng(0))
    sizes = [p.size for p in parts]
    assert max(sizes) - min(sizes) <= 1


def test_loco_deterministic_and_seed_sensitive():
    ds = six_class_dataset()
    a = make_loco_scenarios(ds, folds=5, seed=4)
    b = make_loco_scenarios(ds, folds=5, seed=4)
    c = make_loco_scenarios(ds, folds=5, seed=5)
    for s, t in zip(a, b):
        assert np.array_equal(s.train_indices, t.train_indices)
        assert np.array_equal(s.id_test_indices, t.id_test_indices)
    assert any(not np.array_equal(s.id_test_indices, t.id_test_indices) for s, t in zip(a, c))


def test_loco_subset_of_ood_classes_matches_full_run():
    ds = six_class_dataset()
    full = {s.key: s for s in make_loco_scenarios(ds, folds=5, seed=0)}
    for s in make_loco_scenarios(ds, folds=5, seed=0, ood_classes=[3]):
        assert np.array_equal(s.id_test_indices, full[s.key].id_test_indices)


def test_loco_rejects_small_classes_and_bad_folds():
    ds = six_class_dataset()
    with pytest.raises(ValidationError):
        make_loco_scenarios(ds, folds=10)
    with pytest.raises(ValidationError):
        make_loco_scenarios(ds, folds=1)
    with pytest.raises(ValidationError):
        make_loco_scenarios(ds, folds=5, ood_classes=[6])
