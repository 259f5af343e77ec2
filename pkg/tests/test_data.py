import numpy as np
import pytest

from haseparator.data import (
    Dataset,
    gaussian_blobs,
    load_delimited,
    save_delimited,
    split_dataset,
    standardize,
    two_rings,
)
from haseparator.errors import (
    ConfigError,
    LabelError,
    NonNumericCellError,
    RaggedRowError,
)


class TestDataset:
    def test_validates_label_range(self):
        with pytest.raises(LabelError):
            Dataset(np.ones((2, 2)), [0, 5], num_classes=2, split="train")

    def test_length_and_dim(self):
        d = Dataset(np.ones((3, 4)), [0, 1, 0], num_classes=2, split="train")
        assert len(d) == 3 and d.dim == 4


class TestGaussianBlobs:
    def test_zero_stddev_puts_points_on_centers(self):
        train, test = gaussian_blobs(3, 10, 2, center_radius=2.0, stddev=0.0, seed=0)
        for data in (train, test):
            radii = np.linalg.norm(data.features, axis=1)
            np.testing.assert_allclose(radii, 2.0, atol=1e-12)

    def test_same_seed_identical(self):
        a_train, a_test = gaussian_blobs(3, 8, 4, seed=5)
        b_train, b_test = gaussian_blobs(3, 8, 4, seed=5)
        np.testing.assert_array_equal(a_train.features, b_train.features)
        np.testing.assert_array_equal(a_test.labels, b_test.labels)

    def test_centers_evenly_spaced_in_2d(self):
        train, test = gaussian_blobs(3, 50, 2, center_radius=1.0, stddev=0.0, seed=1)
        feats = np.vstack([train.features, test.features])
        labels = np.concatenate([train.labels, test.labels])
        centers = np.array([feats[labels == c][0] for c in range(3)])
        angles = np.degrees(np.arctan2(centers[:, 1], centers[:, 0]))
        gaps = np.sort((angles - angles[0]) % 360.0)
        np.testing.assert_allclose(gaps, [0.0, 120.0, 240.0], atol=1e-9)

    def test_split_sizes_and_disjoint_labels(self):
        train, test = gaussian_blobs(4, 20, 3, seed=2)
        assert len(train) == 4 * 16 and len(test) == 4 * 4
        for c in range(4):
            assert np.sum(train.labels == c) == 16
            assert np.sum(test.labels == c) == 4

    def test_counts_validated(self):
        with pytest.raises(ConfigError):
            gaussian_blobs(1, 10, 2)
        with pytest.raises(ConfigError):
            gaussian_blobs(3, 1, 2)


class TestTwoRings:
    def test_zero_noise_exact_radii(self):
        train, test = two_rings(20, noise=0.0, seed=3)
        for data in (train, test):
            radii = np.linalg.norm(data.features, axis=1)
            inner = radii[data.labels == 0]
            outer = radii[data.labels == 1]
            np.testing.assert_allclose(inner, 1.0, atol=1e-12)
            np.testing.assert_allclose(outer, 2.0, atol=1e-12)

    def test_label_balance_exact(self):
        train, test = two_rings(25, seed=4)
        labels = np.concatenate([train.labels, test.labels])
        assert np.sum(labels == 0) == 25 and np.sum(labels == 1) == 25

    def test_deterministic(self):
        a, _ = two_rings(10, seed=6)
        b, _ = two_rings(10, seed=6)
        np.testing.assert_array_equal(a.features, b.features)


class TestSplit:
    def test_split_is_disjoint_and_covers(self):
        full = Dataset(np.arange(40.0).reshape(20, 2), [i % 2 for i in range(20)], 2, "train")
        train, test = split_dataset(full, seed=7)
        key = lambda d: {tuple(row) for row in d.features}
        assert key(train) & key(test) == set()
        assert key(train) | key(test) == key(full)

    def test_split_deterministic(self):
        full = Dataset(np.arange(40.0).reshape(20, 2), [i % 2 for i in range(20)], 2, "train")
        a, _ = split_dataset(full, seed=8)
        b, _ = split_dataset(full, seed=8)
        np.testing.assert_array_equal(a.features, b.features)


class TestStandardize:
    def test_mean_zero_unit_variance(self):
        rng = np.random.default_rng(9)
        out = standardize(rng.normal(3.0, 5.0, size=(200, 4)))
        assert np.all(np.abs(out.mean(axis=0)) < 1e-9)
        np.testing.assert_allclose(out.var(axis=0), 1.0, atol=1e-9)

    def test_constant_column_maps_to_zeros(self):
        features = np.column_stack([np.full(10, 7.0), np.arange(10.0)])
        out = standardize(features)
        assert not out[:, 0].any()


class TestLoadDelimited:
    def test_round_trip_pre_standardization(self, tmp_path):
        rng = np.random.default_rng(10)
        original = Dataset(rng.normal(size=(12, 3)), rng.integers(0, 3, size=12), 3, "train")
        path = tmp_path / "data.csv"
        save_delimited(original, path)
        loaded = load_delimited(path, standardize_features=False)
        np.testing.assert_allclose(loaded.features, original.features, atol=1e-9)
        np.testing.assert_array_equal(loaded.labels, original.labels)

    def test_standardized_by_default(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("1.0,10.0,0\n2.0,20.0,1\n3.0,30.0,0\n4.0,40.0,1\n")
        loaded = load_delimited(path)
        assert np.all(np.abs(loaded.features.mean(axis=0)) < 1e-9)
        np.testing.assert_allclose(loaded.features.var(axis=0), 1.0, atol=1e-9)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_delimited(tmp_path / "absent.csv")

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,2,0\n1,2,3,0\n")
        with pytest.raises(RaggedRowError):
            load_delimited(path)

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "text.csv"
        path.write_text("1,2,0\n1,oops,1\n")
        with pytest.raises(NonNumericCellError):
            load_delimited(path)

    def test_fractional_label_rejected(self, tmp_path):
        path = tmp_path / "frac.csv"
        path.write_text("1,2,0.5\n3,4,1\n")
        with pytest.raises(NonNumericCellError):
            load_delimited(path)

    def test_negative_label_rejected(self, tmp_path):
        path = tmp_path / "neg.csv"
        path.write_text("1,2,-1\n3,4,0\n")
        with pytest.raises(NonNumericCellError):
            load_delimited(path)

    def test_header_skipped_when_flagged(self, tmp_path):
        path = tmp_path / "header.csv"
        path.write_text("x,y,label\n1,2,0\n3,4,1\n")
        loaded = load_delimited(path, has_header=True, standardize_features=False)
        assert len(loaded) == 2

    def test_label_column_configurable(self, tmp_path):
        path = tmp_path / "first.csv"
        path.write_text("1,5.0,6.0\n0,7.0,8.0\n")
        loaded = load_delimited(path, label_column=0, standardize_features=False)
        assert loaded.labels.tolist() == [1, 0]
        np.testing.assert_allclose(loaded.features[0], [5.0, 6.0])
