"""Deterministic synthetic datasets and a delimited-text loader.

Generators stand in for image benchmarks at desk scale: Gaussian blobs for
the linearly separable case and two concentric rings for a case that needs
the MLP. Everything is seeded; train/test splits are stratified 80/20 so
label balance survives small sample counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonNumericCellError, RaggedRowError
from .tensor import as_labels, as_matrix

VARIANCE_FLOOR = 1e-12


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"

    def __post_init__(self):
        self.features = as_matrix(self.features)
        self.labels = as_labels(self.labels, self.num_classes)
        if self.labels.shape != (self.features.shape[0],):
            raise ConfigError("labels must match the number of feature rows")

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]


def _stratified_split(features, labels, num_classes, rng, train_fraction=0.8):
    """Per-class seeded permutation split; every class keeps >= 1 sample per side."""
    train_idx, test_idx = [], []
    for c in range(num_classes):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            continue
        members = members[rng.permutation(members.size)]
        n_train = int(round(train_fraction * members.size))
        n_train = max(1, min(members.size - 1, n_train)) if members.size > 1 else 1
        train_idx.append(members[:n_train])
        test_idx.append(members[n_train:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    train = Dataset(features[train_idx], labels[train_idx], num_classes, "train")
    test = Dataset(features[test_idx], labels[test_idx], num_classes, "test")
    return train, test


def gaussian_blobs(
    num_classes: int,
    per_class: int,
    dim: int,
    center_radius: float = 3.0,
    stddev: float = 1.0,
    seed=0,
) -> tuple[Dataset, Dataset]:
    """Isotropic Gaussian clusters around deterministic class centers.

    For dim == 2 the centers sit evenly spaced on a circle of the given
    radius; in higher dimensions each center is a seeded random direction
    scaled to the radius.
    """
    if num_classes < 2 or per_class < 2:
        raise ConfigError("need num_classes >= 2 and per_class >= 2")
    if dim < 1:
        raise ConfigError(f"dim must be positive, got {dim}")
    rng = np.random.default_rng(seed)
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(num_classes) / num_classes
        centers = center_radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        directions = rng.normal(size=(num_classes, dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        centers = center_radius * directions
    features = np.repeat(centers, per_class, axis=0)
    features = features + stddev * rng.normal(size=features.shape)
    labels = np.repeat(np.arange(num_classes), per_class)
    return _stratified_split(features, labels, num_classes, rng)


def two_rings(per_class: int, noise: float = 0.1, seed=0) -> tuple[Dataset, Dataset]:
    """Two concentric 2-d rings (radii 1 and 2) with radial Gaussian noise."""
    if per_class < 2:
        raise ConfigError("need per_class >= 2")
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=2 * per_class)
    radii = np.repeat([1.0, 2.0], per_class) + noise * rng.normal(size=2 * per_class)
    features = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    labels = np.repeat([0, 1], per_class)
    return _stratified_split(features, labels, 2, rng)


def split_dataset(dataset: Dataset, seed=0, train_fraction: float = 0.8) -> tuple[Dataset, Dataset]:
    """Stratified 80/20 re-split of a loaded dataset, seeded."""
    rng = np.random.default_rng(seed)
    return _stratified_split(
        dataset.features, dataset.labels, dataset.num_classes, rng, train_fraction
    )


def standardize(features) -> np.ndarray:
    """Per-feature shift/scale to mean 0, variance 1.

    Columns whose variance is at or below the floor (constants) map to all
    zeros instead of blowing up.
    """
    features = np.asarray(features, dtype=np.float64)
    means = features.mean(axis=0)
    variances = features.var(axis=0)
    scale = np.where(variances > VARIANCE_FLOOR, np.sqrt(variances), 1.0)
    out = (features - means) / scale
    out[:, variances <= VARIANCE_FLOOR] = 0.0
    return out


def load_delimited(
    path,
    label_column: int = -1,
    has_header: bool = False,
    delimiter: str = ",",
    standardize_features: bool = True,
    split: str = "train",
) -> Dataset:
    """Load a numeric delimited file with one sample per row.

    The label column must hold integer class ids; the remaining columns are
    features, standardized per feature unless standardize_features=False.
    Missing file, ragged rows, and non-numeric cells raise distinct errors.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    rows = [ln for ln in lines if ln and not ln.startswith("#")]
    if has_header:
        rows = rows[1:]
    if not rows:
        raise RaggedRowError(f"{path}: no data rows")
    parsed = []
    width = None
    for lineno, row in enumerate(rows, start=1):
        cells = [c.strip() for c in row.split(delimiter)]
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise RaggedRowError(
                f"{path}: row {lineno} has {len(cells)} fields, expected {width}"
            )
        try:
            parsed.append([float(c) for c in cells])
        except ValueError as exc:
            raise NonNumericCellError(f"{path}: row {lineno}: {exc}") from exc
    table = np.array(parsed)
    if table.shape[1] < 2:
        raise RaggedRowError(f"{path}: need at least 2 columns, got {table.shape[1]}")
    col = label_column % table.shape[1]
    raw_labels = table[:, col]
    labels = np.rint(raw_labels).astype(np.int64)
    if not np.allclose(raw_labels, labels, atol=1e-9):
        raise NonNumericCellError(f"{path}: label column {label_column} is not integral")
    if labels.min() < 0:
        raise NonNumericCellError(f"{path}: negative class label {labels.min()}")
    features = np.delete(table, col, axis=1)
    if standardize_features:
        features = standardize(features)
    return Dataset(features, labels, int(labels.max()) + 1, split)


def save_delimited(dataset: Dataset, path, delimiter: str = ",") -> None:
    """Write features plus a final label column, the loader's default layout."""
    with open(path, "w") as fh:
        for row, label in zip(dataset.features, dataset.labels):
            cells = [format(v, ".17g") for v in row] + [str(int(label))]
            fh.write(delimiter.join(cells) + "\n")
