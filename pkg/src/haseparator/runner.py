"""Experiment harness: dataset -> MLP -> training -> discrimination scores.

A single experiment is fully described by an ExperimentConfig; its master
seed feeds a SeedSequence that derives independent streams for dataset
generation, weight init, batch shuffling, and pair sampling, so runs are
reproducible end to end and two losses given the same seed see the same
data. Sweeps cross losses x sigmas x margins x seeds, run cells in a
deterministic grid order (optionally across processes), and never drop
failed cells.
"""

from __future__ import annotations

import csv
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import Dataset, gaussian_blobs, load_delimited, split_dataset, two_rings
from .errors import ConfigError
from .losses import (
    ARCFACE,
    HASEPARATOR,
    LOSS_KINDS,
    SOFTMAX,
    LossConfig,
    scaled_cosine_logits,
)
from .metrics import (
    DEFAULT_BINS,
    DEFAULT_MAX_PAIRS,
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
from .model import MlpModel, forward, init_model, save_checkpoint
from .trainer import TrainConfig, TrainReport, train, write_report_csv

DATASET_KINDS = ("blobs", "rings")
FILE_PREFIX = "file:"
SPLITS = ("train", "test")


@dataclass(frozen=True)
class DatasetConfig:
    """Where the samples come from.

    kind is "blobs", "rings", or "file:<path>". Synthetic kinds regenerate
    from the experiment seed; rings is inherently 2 classes in 2 dims, so
    num_classes and dim apply to blobs only. train_fraction applies to file
    datasets (synthetic generators split 80/20 internally).
    """

    kind: str = "blobs"
    num_classes: int = 5
    per_class: int = 100
    dim: int = 2
    center_radius: float = 3.0
    stddev: float = 1.0
    noise: float = 0.1
    train_fraction: float = 0.8

    def __post_init__(self):
        if self.kind not in DATASET_KINDS and not self.kind.startswith(FILE_PREFIX):
            raise ConfigError(
                f"dataset kind must be one of {DATASET_KINDS} or {FILE_PREFIX}<path>, "
                f"got {self.kind!r}"
            )
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One training run plus its evaluation.

    seed is the master seed; the seed field on the nested TrainConfig is
    replaced by a derived stream, so only this one matters.
    """

    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    hidden_dims: tuple[int, ...] = (32, 32)
    embedding_dim: int = 64
    train: TrainConfig = field(default_factory=lambda: TrainConfig(steps=200))
    bins: int = DEFAULT_BINS
    max_pairs: int = DEFAULT_MAX_PAIRS
    seed: int = 0

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ConfigError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if any(h < 1 for h in self.hidden_dims):
            raise ConfigError(f"hidden dims must be >= 1, got {self.hidden_dims}")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    train_data: Dataset
    test_data: Dataset
    model: MlpModel
    report: TrainReport
    hists: dict[str, AngleHistograms]
    scores: dict[str, DiscriminationScores]


def _derive_seeds(seed) -> dict[str, int]:
    state = np.random.SeedSequence(seed).generate_state(5)
    names = ("data", "init", "train", "eval_train", "eval_test")
    return {name: int(value) for name, value in zip(names, state)}


def build_datasets(config: DatasetConfig, seed) -> tuple[Dataset, Dataset]:
    if config.kind == "blobs":
        return gaussian_blobs(
            config.num_classes,
            config.per_class,
            config.dim,
            center_radius=config.center_radius,
            stddev=config.stddev,
            seed=seed,
        )
    if config.kind == "rings":
        return two_rings(config.per_class, noise=config.noise, seed=seed)
    path = config.kind[len(FILE_PREFIX):]
    full = load_delimited(path)
    return split_dataset(full, seed=seed, train_fraction=config.train_fraction)


def evaluate_model(
    model: MlpModel,
    dataset: Dataset,
    sigma: float,
    bins: int = DEFAULT_BINS,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    seed=0,
) -> tuple[AngleHistograms, DiscriminationScores, np.ndarray]:
    """Embed a split and score it: accuracy from cosine logits, D_KL and
    D_EM from the positive/negative pair-angle histograms."""
    embeddings = forward(model, dataset.features).embeddings
    logits = scaled_cosine_logits(embeddings, model.class_weights, sigma)
    acc = accuracy(logits, dataset.labels)
    pos, neg = pair_angles(embeddings, dataset.labels, max_pairs_per_kind=max_pairs, seed=seed)
    hist = build_histograms(pos, neg, num_bins=bins)
    scores = DiscriminationScores(d_kl=kl_divergence(hist), d_em=emd_1d(hist), accuracy=acc)
    return hist, scores, embeddings


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Train one model and evaluate both splits; write artifacts when asked."""
    seeds = _derive_seeds(config.seed)
    train_data, test_data = build_datasets(config.dataset, seeds["data"])
    layer_dims = (train_data.dim, *config.hidden_dims, config.embedding_dim)
    model = init_model(layer_dims, train_data.num_classes, seeds["init"])
    report = train(model, train_data, replace(config.train, seed=seeds["train"]))

    hists: dict[str, AngleHistograms] = {}
    scores: dict[str, DiscriminationScores] = {}
    embeddings: dict[str, np.ndarray] = {}
    for split, dataset in (("train", train_data), ("test", test_data)):
        hist, split_scores, emb = evaluate_model(
            report.final_model,
            dataset,
            config.train.loss.sigma,
            bins=config.bins,
            max_pairs=config.max_pairs,
            seed=seeds[f"eval_{split}"],
        )
        hists[split] = hist
        scores[split] = split_scores
        embeddings[split] = emb

    result = ExperimentResult(
        config=config,
        train_data=train_data,
        test_data=test_data,
        model=report.final_model,
        report=report,
        hists=hists,
        scores=scores,
    )
    if out_dir is not None:
        write_experiment_artifacts(result, embeddings, out_dir)
    return result


def write_embeddings_csv(embeddings, labels, path) -> None:
    """First line is the embedding width, then one row of values plus the
    integer label per sample."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write(f"{embeddings.shape[1]}\n")
        for row, label in zip(embeddings, labels):
            cells = [format(v, ".17g") for v in row] + [str(int(label))]
            fh.write(",".join(cells) + "\n")


def read_embeddings_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        n_dims = int(fh.readline().strip())
        rows, labels = [], []
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) != n_dims + 1:
                raise ConfigError(f"expected {n_dims} values + label, got {len(cells)} cells")
            rows.append([float(c) for c in cells[:-1]])
            labels.append(int(cells[-1]))
    return np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int64)


def _flatten_config(value, prefix="") -> list[tuple[str, str]]:
    if isinstance(value, dict):
        items = []
        for key, sub in value.items():
            sub_prefix = f"{prefix}.{key}" if prefix else key
            items.extend(_flatten_config(sub, sub_prefix))
        return items
    if isinstance(value, (tuple, list)):
        return [(prefix, ",".join(str(v) for v in value))]
    return [(prefix, str(value))]


def write_config_echo(config, path) -> None:
    """Echo every effective setting as flat key=value lines."""
    with open(path, "w") as fh:
        for key, value in _flatten_config(asdict(config)):
            fh.write(f"{key}={value}\n")


def write_experiment_artifacts(result: ExperimentResult, embeddings, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    join = lambda name: os.path.join(out_dir, name)
    write_report_csv(result.report, join("report.csv"))
    save_checkpoint(result.model, join("checkpoint.txt"))
    write_config_echo(result.config, join("config.txt"))
    for split in SPLITS:
        write_histogram_csv(result.hists[split], join(f"hist_{split}.csv"))
        write_scores_json(result.scores[split], join(f"scores_{split}.json"))
        labels = (result.train_data if split == "train" else result.test_data).labels
        write_embeddings_csv(embeddings[split], labels, join(f"embeddings_{split}.csv"))


@dataclass
class SweepRecord:
    """One grid cell's outcome; failed cells carry the error, never vanish."""

    loss_kind: str
    sigma: float
    margin: float
    seed: int
    accuracy: float = math.nan
    d_kl: float = math.nan
    d_em: float = math.nan
    final_c_t: float = math.nan
    wall_time_s: float = math.nan
    error: str = ""


@dataclass(frozen=True)
class SweepConfig:
    """Cross product of losses x sigmas x margins x seeds over one template.

    The margin axis feeds HASeparator's cosine margin and doubles as
    ArcFace's additive angle in radians (both live on comparable [0.1, 1.0]
    grids); softmax ignores it but is still run per cell so rows stay
    aligned for seed-wise comparisons. Duplicate grid values are dropped
    with a warning.
    """

    losses: tuple[str, ...] = LOSS_KINDS
    sigmas: tuple[float, ...] = (3.0,)
    margins: tuple[float, ...] = (0.5,)
    seeds: tuple[int, ...] = (0,)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    jobs: int = 1

    def __post_init__(self):
        for name in ("losses", "sigmas", "margins", "seeds"):
            values = getattr(self, name)
            if len(values) == 0:
                raise ConfigError(f"sweep grid {name} must be nonempty")
            object.__setattr__(self, name, _dedupe(values, name))
        for loss in self.losses:
            if loss not in LOSS_KINDS:
                raise ConfigError(f"unknown loss {loss!r}, expected one of {LOSS_KINDS}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


def _dedupe(values, label) -> tuple:
    seen, out = set(), []
    for value in values:
        if value in seen:
            warnings.warn(f"duplicate {label} value {value!r} dropped from sweep grid")
        else:
            seen.add(value)
            out.append(value)
    return tuple(out)


def default_seeds(seed_base: int, num_seeds: int) -> tuple[int, ...]:
    """Run seeds seed_base + index, so schedules cannot reshuffle them."""
    if num_seeds < 1:
        raise ConfigError(f"num_seeds must be >= 1, got {num_seeds}")
    return tuple(seed_base + i for i in range(num_seeds))


def _cell_config(template: ExperimentConfig, loss_kind, sigma, margin, seed) -> ExperimentConfig:
    base_loss = template.train.loss
    if loss_kind == HASEPARATOR:
        loss = replace(base_loss, loss_kind=loss_kind, sigma=sigma, margin=margin)
    elif loss_kind == ARCFACE:
        loss = replace(base_loss, loss_kind=loss_kind, sigma=sigma, arc_margin=margin)
    else:
        loss = replace(base_loss, loss_kind=loss_kind, sigma=sigma)
    return replace(template, train=replace(template.train, loss=loss), seed=seed)


def _run_cell(args) -> SweepRecord:
    loss_kind, sigma, margin, seed, template = args
    record = SweepRecord(loss_kind=loss_kind, sigma=float(sigma), margin=float(margin), seed=int(seed))
    start = time.perf_counter()
    try:
        config = _cell_config(template, loss_kind, sigma, margin, seed)
        result = run_experiment(config)
        test = result.scores["test"]
        record.accuracy = test.accuracy
        record.d_kl = test.d_kl
        record.d_em = test.d_em
        record.final_c_t = result.report.records[-1].c_sep if result.report.records else math.nan
    except Exception as exc:
        record.error = f"{type(exc).__name__}: {exc}"
    record.wall_time_s = time.perf_counter() - start
    return record


def run_sweep(sweep: SweepConfig) -> list[SweepRecord]:
    """Run every grid cell; results come back in grid order (losses outermost,
    then sigmas, margins, seeds) regardless of scheduling."""
    cells = [
        (loss, sigma, margin, seed, sweep.experiment)
        for loss in sweep.losses
        for sigma in sweep.sigmas
        for margin in sweep.margins
        for seed in sweep.seeds
    ]
    if sweep.jobs == 1:
        return [_run_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=sweep.jobs) as pool:
        return list(pool.map(_run_cell, cells))


def write_sweep_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["loss", "sigma", "margin", "seed",
             "accuracy", "d_kl", "d_em", "final_c_t", "wall_time_s", "error"]
        )
        for r in records:
            writer.writerow(
                [r.loss_kind, format(r.sigma, ".17g"), format(r.margin, ".17g"), r.seed,
                 format(r.accuracy, ".17g"), format(r.d_kl, ".17g"), format(r.d_em, ".17g"),
                 format(r.final_c_t, ".17g"), format(r.wall_time_s, ".17g"), r.error]
            )


def read_sweep_csv(path) -> list[SweepRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                SweepRecord(
                    loss_kind=row["loss"],
                    sigma=float(row["sigma"]),
                    margin=float(row["margin"]),
                    seed=int(row["seed"]),
                    accuracy=float(row["accuracy"]),
                    d_kl=float(row["d_kl"]),
                    d_em=float(row["d_em"]),
                    final_c_t=float(row["final_c_t"]),
                    wall_time_s=float(row["wall_time_s"]),
                    error=row["error"],
                )
            )
    return records
