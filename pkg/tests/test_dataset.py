import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeknn.dataset import (
    Dataset,
    FoldPlan,
    NormalizationStats,
    fit_normalizer,
    load_csv,
    make_folds,
    transform,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_first_appearance_label_mapping(self, tmp_path):
        path = write(tmp_path, "1.0,2.0,A\n3.0,4.0,B\n5.0,6.0,A\n")
        data = load_csv(path)
        assert data.n_classes == 2
        assert data.class_names == ("A", "B")
        assert data.labels.tolist() == [0, 1, 0]
        assert data.n_samples == 3 and data.n_features == 2

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = write(tmp_path, "1.0,2.0,A\n3.0,oops,B\n")
        with pytest.raises(ValueError, match=r"row 2.*column 2"):
            load_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = write(tmp_path, "")
        with pytest.raises(ValueError, match="empty"):
            load_csv(path)

    def test_single_class_rejected(self, tmp_path):
        path = write(tmp_path, "1.0,A\n2.0,A\n")
        with pytest.raises(ValueError, match="single-class"):
            load_csv(path)

    def test_header_and_named_label_column(self, tmp_path):
        path = write(tmp_path, "x,y,cls\n1,2,A\n3,4,B\n")
        data = load_csv(path, label_column="cls", has_header=True)
        assert data.class_names == ("A", "B")
        assert data.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_label_column_by_index(self, tmp_path):
        path = write(tmp_path, "A,1.0,2.0\nB,3.0,4.0\n")
        data = load_csv(path, label_column=0)
        assert data.class_names == ("A", "B")
        assert data.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_non_finite_value_rejected(self, tmp_path):
        path = write(tmp_path, "1.0,A\ninf,B\n")
        with pytest.raises(ValueError, match="non-finite"):
            load_csv(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = write(tmp_path, "1.0,2.0,A\n3.0,B\n")
        with pytest.raises(ValueError, match="columns"):
            load_csv(path)

    def test_dataset_name_defaults_to_stem(self, tmp_path):
        path = write(tmp_path, "1,A\n2,B\n", name="segment.csv")
        assert load_csv(path).name == "segment"


class TestDatasetInvariants:
    def test_label_mapping_is_bijection(self, tmp_path):
        path = write(tmp_path, "1,z\n2,y\n3,x\n4,y\n")
        data = load_csv(path)
        assert sorted(np.unique(data.labels)) == list(range(data.n_classes))
        assert len(set(data.class_names)) == data.n_classes

    def test_features_are_immutable(self):
        data = Dataset(
            features=np.array([[1.0], [2.0]]),
            labels=np.array([0, 1]),
            class_names=("a", "b"),
        )
        with pytest.raises(ValueError):
            data.features[0, 0] = 9.0

    def test_subset_keeps_indices_and_classes(self):
        data = Dataset(
            features=np.arange(8.0).reshape(4, 2),
            labels=np.array([0, 1, 0, 1]),
            class_names=("a", "b"),
        )
        view = data.subset([2, 0])
        assert view.indices.tolist() == [2, 0]
        assert view.labels.tolist() == [0, 0]
        assert view.class_names == ("a", "b")


class TestNormalizer:
    def test_min_max_of_plain_column(self):
        stats = fit_normalizer(np.array([[2.0], [4.0], [6.0]]))
        assert stats.minimum[0] == 2.0 and stats.maximum[0] == 6.0

    def test_constant_column_maps_to_zero(self):
        stats = fit_normalizer(np.array([[5.0], [5.0], [5.0]]))
        assert stats.minimum[0] == 5.0 and stats.maximum[0] == 6.0
        assert np.all(stats.apply(np.array([[5.0], [5.0]])) == 0.0)

    def test_subset_fit_then_clamp(self):
        matrix = np.array([[0.0], [10.0], [100.0]])
        stats = fit_normalizer(matrix, rows=[0, 1])
        assert stats.minimum[0] == 0.0 and stats.maximum[0] == 10.0
        # row 2 maps to 10 before clamping and is clamped to 1
        raw = (matrix[2] - stats.minimum) / (stats.maximum - stats.minimum)
        assert raw[0] == 10.0
        assert stats.apply(matrix)[2, 0] == 1.0

    def test_endpoint_and_midpoint_values(self):
        stats = fit_normalizer(np.array([[2.0], [6.0]]))
        out = stats.apply(np.array([[2.0], [6.0], [4.0]]))
        assert out.tolist() == [[0.0], [1.0], [0.5]]

    def test_feature_count_mismatch(self):
        stats = fit_normalizer(np.array([[1.0, 2.0], [3.0, 4.0]]))
        with pytest.raises(ValueError, match="feature"):
            stats.apply(np.zeros((3, 3)))

    def test_empty_subset_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            fit_normalizer(np.zeros((3, 2)), rows=[])

    def test_transform_returns_unit_range_dataset(self):
        data = Dataset(
            features=np.array([[0.0, 10.0], [4.0, 30.0]]),
            labels=np.array([0, 1]),
            class_names=("a", "b"),
        )
        stats = fit_normalizer(data)
        out = transform(data, stats)
        assert out.features.min() >= 0.0 and out.features.max() <= 1.0
        assert out.labels.tolist() == data.labels.tolist()

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=2,
            max_size=12,
            unique=True,
        )
    )
    def test_round_trip_within_fitted_range(self, column):
        values = np.array(column)[:, None]
        stats = fit_normalizer(values)
        recovered = stats.invert(stats.apply(values))
        # relative to the feature's own scale: a value tiny against the fitted
        # range cannot survive the subtraction in any floating-point scheme
        scale = np.maximum(np.abs(values), stats.maximum - stats.minimum)
        assert np.all(np.abs(recovered - values) / scale < 1e-12)


def two_class_dataset(n_per_class, n_features=3, seed=0):
    rng = np.random.default_rng(seed)
    n = 2 * n_per_class
    return Dataset(
        features=rng.normal(size=(n, n_features)),
        labels=np.repeat([0, 1], n_per_class),
        class_names=("a", "b"),
    )


class TestFoldPlan:
    def test_five_folds_of_two_balanced_classes(self):
        data = two_class_dataset(5)
        plan = make_folds(data, repetitions=1, k_folds=5, seed=1)
        for fold in range(5):
            idx = plan.test_indices(0, fold)
            assert idx.size == 2
            assert sorted(data.labels[idx]) == [0, 1]

    def test_same_seed_is_deterministic(self):
        data = two_class_dataset(20)
        a = make_folds(data, 2, 5, seed=9)
        b = make_folds(data, 2, 5, seed=9)
        assert np.array_equal(a.assignments, b.assignments)
        assert make_folds(data, 2, 5, seed=10).fingerprint() != a.fingerprint()

    def test_2310_samples_give_462_per_test_fold(self):
        rng = np.random.default_rng(3)
        data = Dataset(
            features=rng.normal(size=(2310, 4)),
            labels=np.repeat(np.arange(7), 330),
            class_names=tuple("abcdefg"),
        )
        plan = make_folds(data, 2, 5, seed=0)
        splits = list(plan.iter_splits())
        assert len(splits) == 10
        for _, _, train_idx, test_idx in splits:
            assert test_idx.size == 462
            assert train_idx.size == 2310 - 462

    def test_disjoint_and_covering_per_repetition(self):
        data = two_class_dataset(13)
        plan = make_folds(data, 2, 5, seed=4)
        for rep in range(plan.repetitions):
            seen = np.concatenate([plan.test_indices(rep, f) for f in range(5)])
            assert sorted(seen) == list(range(data.n_samples))

    def test_stratification_bound(self):
        rng = np.random.default_rng(5)
        labels = np.concatenate([np.zeros(23), np.ones(11), np.full(7, 2)]).astype(int)
        data = Dataset(
            features=rng.normal(size=(labels.size, 2)),
            labels=labels,
            class_names=("a", "b", "c"),
        )
        plan = make_folds(data, 3, 5, seed=6)
        counts = np.bincount(labels)
        for rep in range(plan.repetitions):
            for fold in range(5):
                idx = plan.test_indices(rep, fold)
                for c in range(3):
                    got = int(np.sum(labels[idx] == c))
                    assert abs(got - counts[c] / 5) <= 1

    def test_small_class_rejected(self):
        data = two_class_dataset(3)
        with pytest.raises(ValueError, match="fewer than"):
            make_folds(data, 1, 5, seed=0)

    def test_sidecar_round_trip(self, tmp_path):
        data = two_class_dataset(10)
        plan = make_folds(data, 2, 5, seed=11)
        path = tmp_path / "plan.txt"
        plan.save_text(path)
        loaded = FoldPlan.load_text(path)
        assert np.array_equal(loaded.assignments, plan.assignments)
        assert loaded.n_folds == plan.n_folds
        assert loaded.fingerprint() == plan.fingerprint()
