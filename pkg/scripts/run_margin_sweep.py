"""Margin-sensitivity study on Gaussian blobs.

Sweeps the margin for the separator and additive-angle losses at a fixed
feature scale, runs plain softmax as the reference, writes every run to
sweep.csv, and prints a per-margin summary of the test-set discrimination
scores. The defaults reproduce the setup used by the behavioral acceptance
test; expect the arcface rows to fall apart at large margins while the
haseparator rows stay put.
"""

import argparse
import os

import numpy as np

from haseparator.losses import ARCFACE, HASEPARATOR, SOFTMAX, LossConfig
from haseparator.runner import (
    DatasetConfig,
    ExperimentConfig,
    SweepConfig,
    default_seeds,
    run_sweep,
    write_config_echo,
    write_sweep_csv,
)
from haseparator.trainer import TrainConfig


def build_template(args) -> ExperimentConfig:
    return ExperimentConfig(
        dataset=DatasetConfig(kind="blobs", num_classes=args.num_classes,
                              per_class=args.per_class, dim=args.dim,
                              stddev=args.stddev),
        hidden_dims=tuple(args.hidden_dims),
        embedding_dim=args.embedding_dim,
        train=TrainConfig(steps=args.steps, batch_size=args.batch_size,
                          base_lr=args.lr, loss=LossConfig()),
        seed=args.seed,
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--sigma", type=float, default=5.0)
    parser.add_argument("--margins", type=float, nargs="+",
                        default=[round(0.1 * k, 1) for k in range(1, 11)])
    parser.add_argument("--num-seeds", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--num-classes", type=int, default=5)
    parser.add_argument("--per-class", type=int, default=60)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--stddev", type=float, default=1.3)
    parser.add_argument("--hidden-dims", type=int, nargs="+", default=[32, 32])
    parser.add_argument("--embedding-dim", type=int, default=16)
    parser.add_argument("--steps", type=int, default=250)
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--lr", type=float, default=0.1)
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    args = parser.parse_args()

    template = build_template(args)
    seeds = default_seeds(args.seed, args.num_seeds)
    sweep = SweepConfig(
        losses=(HASEPARATOR, ARCFACE), sigmas=(args.sigma,),
        margins=tuple(args.margins), seeds=seeds, experiment=template,
        jobs=args.jobs,
    )
    records = run_sweep(sweep)
    records += run_sweep(SweepConfig(
        losses=(SOFTMAX,), sigmas=(args.sigma,), margins=(args.margins[0],),
        seeds=seeds, experiment=template, jobs=args.jobs,
    ))

    os.makedirs(args.out, exist_ok=True)
    write_sweep_csv(records, os.path.join(args.out, "sweep.csv"))
    write_config_echo(sweep, os.path.join(args.out, "config.txt"))

    ok = [r for r in records if not r.error]
    failed = len(records) - len(ok)
    print(f"{len(records)} runs ({failed} failed) -> {args.out}/sweep.csv")
    print(f"{'loss':>12} {'margin':>6} {'d_em':>8} {'d_kl':>8} {'accuracy':>8}")
    for loss in (HASEPARATOR, ARCFACE):
        for margin in args.margins:
            rows = [r for r in ok if r.loss_kind == loss and r.margin == margin]
            if not rows:
                continue
            print(f"{loss:>12} {margin:>6.2f} "
                  f"{np.mean([r.d_em for r in rows]):>8.2f} "
                  f"{np.mean([r.d_kl for r in rows]):>8.3f} "
                  f"{np.mean([r.accuracy for r in rows]):>8.3f}")
    soft = [r for r in ok if r.loss_kind == SOFTMAX]
    if soft:
        print(f"{SOFTMAX:>12} {'-':>6} "
              f"{np.mean([r.d_em for r in soft]):>8.2f} "
              f"{np.mean([r.d_kl for r in soft]):>8.3f} "
              f"{np.mean([r.accuracy for r in soft]):>8.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
