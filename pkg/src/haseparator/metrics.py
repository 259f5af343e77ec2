"""Feature-discrimination evaluation: pair angles, histograms, KL, EMD.

Angles between embedding pairs of the same class (positive pairs) and of
different classes (negative pairs) are binned over [0, 180] degrees; the
divergence between the two normalized histograms is summarized by a
Kullback-Leibler score (bin-wise separability) and a 1-d Wasserstein
distance in degrees (topological margin between the distributions).
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .tensor import EPSILON, as_labels, as_matrix

KL_SMOOTHING = 1e-10
DEFAULT_BINS = 180
DEFAULT_MAX_PAIRS = 200_000


@dataclass
class AngleHistograms:
    """Binned positive/negative pair-angle counts over uniform degree bins."""

    bin_edges: np.ndarray
    pos_counts: np.ndarray
    neg_counts: np.ndarray
    pos_total: int
    neg_total: int

    @property
    def num_bins(self) -> int:
        return len(self.bin_edges) - 1

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


@dataclass
class DiscriminationScores:
    d_kl: float
    d_em: float
    accuracy: float


def _pair_rank_sample(total: int, cap: int, rng) -> np.ndarray:
    """Uniform sample of `cap` distinct ranks from [0, total), seeded.

    For spaces not much larger than the cap a partial permutation is used;
    for huge spaces, iid draws are deduplicated (by symmetry any distinct
    set is equally likely) and thinned to exactly `cap`.
    """
    if cap >= total:
        return np.arange(total, dtype=np.int64)
    if total <= max(4 * cap, 1_000_000):
        return rng.permutation(total)[:cap].astype(np.int64)
    chosen = np.array([], dtype=np.int64)
    while chosen.size < cap:
        draw = rng.integers(0, total, size=2 * (cap - chosen.size) + 16)
        chosen = np.union1d(chosen, draw)
    return chosen[rng.permutation(chosen.size)[:cap]]


def _unrank_within_class(ranks, members):
    """Map pair ranks to (i, j) index pairs within one class, lexicographic order."""
    n = members.size
    row_sizes = np.arange(n - 1, 0, -1)
    starts = np.concatenate([[0], np.cumsum(row_sizes)])
    a = np.searchsorted(starts, ranks, side="right") - 1
    b = a + 1 + (ranks - starts[a])
    return members[a], members[b]


def _positive_pairs(members_by_class, ranks):
    totals = np.array([m.size * (m.size - 1) // 2 for m in members_by_class])
    block_starts = np.concatenate([[0], np.cumsum(totals)])
    block = np.searchsorted(block_starts, ranks, side="right") - 1
    first = np.empty(ranks.size, dtype=np.int64)
    second = np.empty(ranks.size, dtype=np.int64)
    for c, members in enumerate(members_by_class):
        in_block = block == c
        if not np.any(in_block):
            continue
        local = ranks[in_block] - block_starts[c]
        first[in_block], second[in_block] = _unrank_within_class(local, members)
    return first, second


def _negative_pairs(members_by_class, ranks):
    num_classes = len(members_by_class)
    blocks = [
        (c1, c2)
        for c1 in range(num_classes)
        for c2 in range(c1 + 1, num_classes)
    ]
    totals = np.array(
        [members_by_class[c1].size * members_by_class[c2].size for c1, c2 in blocks]
    )
    block_starts = np.concatenate([[0], np.cumsum(totals)])
    which = np.searchsorted(block_starts, ranks, side="right") - 1
    first = np.empty(ranks.size, dtype=np.int64)
    second = np.empty(ranks.size, dtype=np.int64)
    for b, (c1, c2) in enumerate(blocks):
        in_block = which == b
        if not np.any(in_block):
            continue
        local = ranks[in_block] - block_starts[b]
        a_local, b_local = np.divmod(local, members_by_class[c2].size)
        first[in_block] = members_by_class[c1][a_local]
        second[in_block] = members_by_class[c2][b_local]
    return first, second


def pair_angles(
    embeddings,
    labels,
    max_pairs_per_kind: int = DEFAULT_MAX_PAIRS,
    seed=0,
) -> tuple[np.ndarray, np.ndarray]:
    """Angles in degrees over unordered positive and negative embedding pairs.

    All pairs are used when a kind has at most max_pairs_per_kind of them;
    otherwise a seeded uniform sample without replacement of exactly that
    many pairs is taken. All-zero embeddings have no direction and are
    excluded with a warning.
    """
    embeddings = as_matrix(embeddings)
    labels = as_labels(labels, int(np.max(labels)) + 1)
    if labels.shape[0] != embeddings.shape[0]:
        raise ConfigError("labels must match embedding rows")
    if max_pairs_per_kind < 1:
        raise ConfigError("max_pairs_per_kind must be >= 1")

    norms = np.sqrt(np.sum(embeddings * embeddings, axis=1))
    keep = norms > EPSILON
    dropped = int(np.sum(~keep))
    if dropped:
        warnings.warn(f"excluded {dropped} zero embeddings from pair angles")
    unit = embeddings[keep] / norms[keep][:, None]
    kept_labels = labels[keep]
    if unit.shape[0] < 2:
        raise ConfigError("need at least 2 nonzero embeddings")

    classes = np.unique(kept_labels)
    members_by_class = [np.flatnonzero(kept_labels == c) for c in classes]
    pos_total = sum(m.size * (m.size - 1) // 2 for m in members_by_class)
    total_pairs = unit.shape[0] * (unit.shape[0] - 1) // 2
    neg_total = total_pairs - pos_total
    if pos_total == 0:
        raise ConfigError("no positive pairs: every class has fewer than 2 members")
    if neg_total == 0:
        raise ConfigError("no negative pairs: need at least 2 distinct classes")

    rng = np.random.default_rng(seed)
    pos_ranks = _pair_rank_sample(pos_total, max_pairs_per_kind, rng)
    neg_ranks = _pair_rank_sample(neg_total, max_pairs_per_kind, rng)
    pos_i, pos_j = _positive_pairs(members_by_class, pos_ranks)
    neg_i, neg_j = _negative_pairs(members_by_class, neg_ranks)

    def _angles(i, j):
        cos = np.einsum("ij,ij->i", unit[i], unit[j])
        return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))

    return _angles(pos_i, pos_j), _angles(neg_i, neg_j)


def build_histograms(pos_angles, neg_angles, num_bins: int = DEFAULT_BINS) -> AngleHistograms:
    """Count angles into uniform bins over [0, 180] degrees.

    Bins are right-open except the final one, which includes 180 exactly.
    """
    if num_bins < 2:
        raise ConfigError(f"num_bins must be >= 2, got {num_bins}")
    pos = np.asarray(pos_angles, dtype=np.float64)
    neg = np.asarray(neg_angles, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("cannot build histograms from empty angle lists")
    pos_counts, edges = np.histogram(pos, bins=num_bins, range=(0.0, 180.0))
    neg_counts, _ = np.histogram(neg, bins=num_bins, range=(0.0, 180.0))
    return AngleHistograms(
        bin_edges=edges,
        pos_counts=pos_counts.astype(np.int64),
        neg_counts=neg_counts.astype(np.int64),
        pos_total=int(pos_counts.sum()),
        neg_total=int(neg_counts.sum()),
    )


def kl_divergence(h: AngleHistograms, epsilon: float = KL_SMOOTHING) -> float:
    """KL(pos || neg) between the smoothed, normalized histograms.

    Counts are normalized first, then epsilon is added to every bin and the
    result renormalized, so empty bins never produce infinities and the
    value is independent of the absolute pair counts. Natural log.
    """
    if h.pos_total <= 0 or h.neg_total <= 0:
        raise ValueError("both histograms must contain mass")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    p = h.pos_counts / h.pos_total
    q = h.neg_counts / h.neg_total
    p = (p + epsilon) / (1.0 + h.num_bins * epsilon)
    q = (q + epsilon) / (1.0 + h.num_bins * epsilon)
    return float(np.sum(p * np.log(p / q)))


def emd_1d(h: AngleHistograms) -> float:
    """Wasserstein-1 distance in degrees between the normalized histograms.

    With bin centers as mass locations the optimal transport cost on a line
    reduces to bin_width * sum |CDF_pos - CDF_neg|.
    """
    if h.pos_total <= 0 or h.neg_total <= 0:
        raise ValueError("both histograms must contain mass")
    p = h.pos_counts / h.pos_total
    q = h.neg_counts / h.neg_total
    return float(h.bin_width * np.sum(np.abs(np.cumsum(p - q))))


def accuracy(logits, labels) -> float:
    """Fraction of rows whose argmax matches the label (ties: lowest index)."""
    logits = as_matrix(logits)
    labels = as_labels(labels, logits.shape[1])
    if labels.shape[0] != logits.shape[0]:
        raise ConfigError("labels must match logit rows")
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def write_histogram_csv(h: AngleHistograms, path) -> None:
    """Rows of bin_start_deg, bin_end_deg, pos_count, neg_count."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_start_deg", "bin_end_deg", "pos_count", "neg_count"])
        for b in range(h.num_bins):
            writer.writerow(
                [format(h.bin_edges[b], ".10g"), format(h.bin_edges[b + 1], ".10g"),
                 int(h.pos_counts[b]), int(h.neg_counts[b])]
            )


def write_scores_json(scores: DiscriminationScores, path) -> None:
    """One structured record per evaluation."""
    with open(path, "w") as fh:
        json.dump(
            {"d_kl": scores.d_kl, "d_em": scores.d_em, "accuracy": scores.accuracy},
            fh,
            indent=2,
        )
        fh.write("\n")
