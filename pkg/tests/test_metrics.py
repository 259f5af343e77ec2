import json
import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haseparator.errors import ConfigError
from haseparator.metrics import (
    AngleHistograms,
    DiscriminationScores,
    accuracy,
    build_histograms,
    emd_1d,
    kl_divergence,
    pair_angles,
    write_histogram_csv,
    write_scores_json,
)
from helpers import transport_cost

counts_strategy = st.lists(st.integers(0, 50), min_size=2, max_size=16)


def hist_from_counts(pos, neg, span=180.0):
    pos = np.asarray(pos, dtype=np.int64)
    neg = np.asarray(neg, dtype=np.int64)
    edges = np.linspace(0.0, span, pos.size + 1)
    return AngleHistograms(
        bin_edges=edges,
        pos_counts=pos,
        neg_counts=neg,
        pos_total=int(pos.sum()),
        neg_total=int(neg.sum()),
    )


class TestPairAngles:
    def test_identical_vectors_zero_degrees(self):
        e = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
        pos, _ = pair_angles(e, [0, 0, 1])
        assert pos[0] == pytest.approx(0.0, abs=1e-9)

    def test_orthogonal_ninety_degrees(self):
        e = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        _, neg = pair_angles(e, [0, 0, 1, 1])
        np.testing.assert_allclose(neg, 90.0, atol=1e-9)

    def test_opposite_one_eighty(self):
        e = np.array([[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0]])
        _, neg = pair_angles(e, [0, 0, 1, 1])
        np.testing.assert_allclose(neg, 180.0, atol=1e-9)

    def test_all_angles_in_range(self):
        rng = np.random.default_rng(0)
        e = rng.normal(size=(40, 6))
        labels = rng.integers(0, 4, size=40)
        pos, neg = pair_angles(e, labels)
        for arr in (pos, neg):
            assert np.all(arr >= 0.0) and np.all(arr <= 180.0)

    def test_exact_pair_counts_without_sampling(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 3, size=25)
        e = rng.normal(size=(25, 4))
        pos, neg = pair_angles(e, labels)
        sizes = [int(np.sum(labels == c)) for c in range(3)]
        expected_pos = sum(n * (n - 1) // 2 for n in sizes)
        assert len(pos) == expected_pos
        assert len(neg) == 25 * 24 // 2 - expected_pos

    def test_zero_rows_excluded_with_warning(self):
        e = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        labels = [0, 0, 1, 1, 0]
        with pytest.warns(UserWarning, match="2 zero embeddings"):
            pos, neg = pair_angles(e, labels)
        assert len(pos) == 1  # rows 0 and 4 remain in class 0
        assert len(neg) == 2

    def test_sampling_caps_counts_and_is_deterministic(self):
        rng = np.random.default_rng(2)
        e = rng.normal(size=(60, 5))
        labels = rng.integers(0, 3, size=60)
        pos_a, neg_a = pair_angles(e, labels, max_pairs_per_kind=50, seed=42)
        pos_b, neg_b = pair_angles(e, labels, max_pairs_per_kind=50, seed=42)
        assert len(pos_a) == len(neg_a) == 50
        np.testing.assert_array_equal(pos_a, pos_b)
        np.testing.assert_array_equal(neg_a, neg_b)
        pos_c, _ = pair_angles(e, labels, max_pairs_per_kind=50, seed=43)
        assert not np.array_equal(pos_a, pos_c)

    def test_sampled_angles_are_a_subset_of_full_enumeration(self):
        rng = np.random.default_rng(3)
        e = rng.normal(size=(30, 4))
        labels = rng.integers(0, 3, size=30)
        pos_full, neg_full = pair_angles(e, labels)
        pos_s, neg_s = pair_angles(e, labels, max_pairs_per_kind=20, seed=5)
        for sample, full in ((pos_s, pos_full), (neg_s, neg_full)):
            full_sorted = np.sort(full)
            idx = np.searchsorted(full_sorted, sample)
            assert np.allclose(full_sorted[np.clip(idx, 0, full_sorted.size - 1)], sample)

    def test_sampling_agrees_with_brute_force_pair_space(self):
        # cap equal to the space size must reproduce the full enumeration
        rng = np.random.default_rng(4)
        e = rng.normal(size=(20, 3))
        labels = rng.integers(0, 2, size=20)
        pos_full, neg_full = pair_angles(e, labels)
        brute_pos = []
        brute_neg = []
        unit = e / np.linalg.norm(e, axis=1, keepdims=True)
        for i, j in combinations(range(20), 2):
            angle = math.degrees(math.acos(max(-1.0, min(1.0, float(unit[i] @ unit[j])))))
            (brute_pos if labels[i] == labels[j] else brute_neg).append(angle)
        np.testing.assert_allclose(np.sort(pos_full), np.sort(brute_pos), atol=1e-9)
        np.testing.assert_allclose(np.sort(neg_full), np.sort(brute_neg), atol=1e-9)

    def test_single_class_has_no_negatives(self):
        with pytest.raises(ConfigError):
            pair_angles(np.eye(3), [0, 0, 0])

    def test_singleton_classes_have_no_positives(self):
        with pytest.raises(ConfigError):
            pair_angles(np.eye(3), [0, 1, 2])


class TestBuildHistograms:
    def test_all_zero_angles_fill_first_bin(self):
        h = build_histograms([0.0, 0.0, 0.0], [90.0], num_bins=180)
        assert h.pos_counts[0] == 3 and h.pos_counts[1:].sum() == 0

    def test_exact_180_lands_in_final_bin(self):
        h = build_histograms([180.0], [0.0], num_bins=180)
        assert h.pos_counts[-1] == 1

    def test_totals_match_counts(self):
        rng = np.random.default_rng(5)
        h = build_histograms(rng.uniform(0, 180, 100), rng.uniform(0, 180, 50), num_bins=18)
        assert h.pos_counts.sum() == h.pos_total == 100
        assert h.neg_counts.sum() == h.neg_total == 50

    def test_empty_angles_rejected(self):
        with pytest.raises(ValueError):
            build_histograms([], [90.0])

    def test_too_few_bins_rejected(self):
        with pytest.raises(ConfigError):
            build_histograms([0.0], [90.0], num_bins=1)

    def test_uniform_angles_give_roughly_uniform_counts(self):
        rng = np.random.default_rng(6)
        n, bins = 36_000, 18
        h = build_histograms(rng.uniform(0, 180, n), rng.uniform(0, 180, n), num_bins=bins)
        expected = n / bins
        sd = math.sqrt(n * (1 / bins) * (1 - 1 / bins))
        assert np.all(np.abs(h.pos_counts - expected) < 5 * sd)


class TestKlDivergence:
    def test_identical_histograms_zero(self):
        h = hist_from_counts([5, 3, 2], [5, 3, 2])
        assert kl_divergence(h) == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_point_masses_closed_form(self):
        counts_pos = np.zeros(180, dtype=int)
        counts_neg = np.zeros(180, dtype=int)
        counts_pos[0] = 7
        counts_neg[90] = 4
        h = hist_from_counts(counts_pos, counts_neg)
        eps = 1e-10
        z = 1.0 + 180 * eps
        one = (1.0 + eps) / z
        tiny = eps / z
        expected = one * math.log(one / tiny) + tiny * math.log(tiny / one)
        assert kl_divergence(h) == pytest.approx(expected, rel=1e-12)

    def test_scale_invariance_of_counts(self):
        a = hist_from_counts([4, 1, 5], [2, 2, 6])
        b = hist_from_counts([8, 2, 10], [1, 1, 3])
        assert kl_divergence(a) == pytest.approx(kl_divergence(b), rel=1e-12)

    @given(counts_strategy, counts_strategy)
    @settings(max_examples=100, deadline=None)
    def test_nonnegative(self, pos, neg):
        size = min(len(pos), len(neg))
        pos, neg = pos[:size], neg[:size]
        if sum(pos) == 0 or sum(neg) == 0:
            return
        assert kl_divergence(hist_from_counts(pos, neg)) >= -1e-12


class TestEmd1d:
    def test_identical_histograms_zero(self):
        h = hist_from_counts([1, 2, 3], [1, 2, 3])
        assert emd_1d(h) == 0.0

    def test_point_masses_at_zero_and_ninety(self):
        counts_pos = np.zeros(180, dtype=int)
        counts_neg = np.zeros(180, dtype=int)
        counts_pos[0] = 10
        counts_neg[90] = 10
        assert emd_1d(hist_from_counts(counts_pos, counts_neg)) == pytest.approx(90.0, abs=1e-9)

    def test_symmetry(self):
        h = hist_from_counts([5, 0, 2, 1], [1, 3, 0, 4])
        swapped = hist_from_counts([1, 3, 0, 4], [5, 0, 2, 1])
        assert emd_1d(h) == pytest.approx(emd_1d(swapped), abs=1e-12)

    def test_bounded_by_span(self):
        h = hist_from_counts([9, 0, 0, 0], [0, 0, 0, 9])
        assert emd_1d(h) <= 180.0

    def test_matches_transport_lp_oracle(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 100:
            bins = int(rng.integers(2, 17))
            pos = rng.integers(0, 20, size=bins)
            neg = rng.integers(0, 20, size=bins)
            if pos.sum() == 0 or neg.sum() == 0:
                continue
            h = hist_from_counts(pos, neg)
            expected = transport_cost(
                pos / pos.sum(), neg / neg.sum(), h.bin_centers
            )
            assert emd_1d(h) == pytest.approx(expected, abs=1e-9)
            checked += 1

    def test_zero_mass_rejected(self):
        with pytest.raises(ValueError):
            emd_1d(hist_from_counts([0, 0], [1, 1]))


class TestAccuracy:
    def test_one_hot_logits(self):
        logits = np.eye(3)
        assert accuracy(logits, [0, 1, 2]) == 1.0

    def test_anti_aligned(self):
        logits = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert accuracy(logits, [0, 1]) == 0.0

    def test_tie_breaks_to_lowest_index(self):
        logits = np.zeros((4, 3))
        assert accuracy(logits, [0, 0, 0, 0]) == 1.0
        assert accuracy(logits, [1, 1, 1, 1]) == 0.0

    def test_fraction(self):
        logits = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        assert accuracy(logits, [0, 1, 1, 0]) == 0.75


class TestExports:
    def test_histogram_csv_round_trip(self, tmp_path):
        h = build_histograms([0.0, 45.0, 90.1], [120.0, 179.0, 180.0], num_bins=18)
        path = tmp_path / "hist.csv"
        write_histogram_csv(h, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "bin_start_deg,bin_end_deg,pos_count,neg_count"
        assert len(lines) == 19
        pos = [int(line.split(",")[2]) for line in lines[1:]]
        neg = [int(line.split(",")[3]) for line in lines[1:]]
        assert pos == h.pos_counts.tolist()
        assert neg == h.neg_counts.tolist()

    def test_scores_json_round_trip(self, tmp_path):
        scores = DiscriminationScores(d_kl=1.5, d_em=42.25, accuracy=0.9)
        path = tmp_path / "scores.json"
        write_scores_json(scores, path)
        loaded = json.loads(path.read_text())
        assert loaded == {"d_kl": 1.5, "d_em": 42.25, "accuracy": 0.9}
