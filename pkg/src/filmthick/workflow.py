"""Two-stage experiment orchestration: source pre-training, target retraining
(full or partial weights), the direct-training baseline, the retraining-count
sweep, and ensemble prediction.

Pre-training and direct training share one code path; retraining warm-starts
from a copy of the source weights and in partial mode freezes every
convolutional parameter, which routes training through the cached-feature fast
path.  All aggregates are recomputable from the per-run records they summarize.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datagen import (
    DatasetSplit,
    build_target_dataset,
    denormalize_thickness,
    samples_to_arrays,
)
from .errors import InvalidParameterError
from .fileio import write_table
from .metrics import AccuracyReport, spectrum_accuracy
from .neuralnet import (
    ModelWeights,
    NetworkConfig,
    TrainResult,
    TrainSchedule,
    check_same_architecture,
    init_weights,
    predict,
    train,
)

RETRAIN_MODES = ("partial", "full")


@dataclass
class Run:
    """One training run: its weights, loss traces, and evaluation metrics."""

    stage: str
    seed: int
    weights: ModelWeights
    result: TrainResult
    metrics: dict
    split_seed: int | None = None
    train_count: int | None = None

    @property
    def epoch1_loss(self):
        return self.result.epoch_losses[0] if self.result.epoch_losses else None

    @property
    def final_loss(self):
        return self.result.epoch_losses[-1] if self.result.epoch_losses else None


def evaluate_on_samples(weights: ModelWeights, samples: list) -> dict:
    """Thickness accuracy and MAPE (plus n/k accuracy for multitask heads)."""
    if not samples:
        raise InvalidParameterError("cannot evaluate on an empty sample list")
    multitask = weights.config.multitask
    inputs, targets = samples_to_arrays(samples, multitask=multitask,
                                        dtype=weights.dtype)
    preds = predict(weights, inputs)
    d_pred = denormalize_thickness(np.asarray(preds["d"], dtype=np.float64))
    d_true = np.array([sample.thickness_nm for sample in samples])
    report = AccuracyReport.from_pairs(d_pred, d_true)
    metrics = {"d_accuracy": report.fraction_within, "d_mape": report.mape}
    if multitask:
        metrics["n_accuracy"] = spectrum_accuracy(preds["n"], targets["n"])
        metrics["k_accuracy"] = spectrum_accuracy(preds["k"], targets["k"])
    return metrics


def _train_and_evaluate(stage: str, weights: ModelWeights, dataset: DatasetSplit,
                        schedule: TrainSchedule, seed: int, freeze_conv: bool,
                        eval_every: int = 0) -> Run:
    multitask = weights.config.multitask
    inputs, targets = samples_to_arrays(dataset.train, multitask=multitask,
                                        dtype=weights.dtype)
    validation = None
    if dataset.validation:
        validation = samples_to_arrays(dataset.validation, multitask=multitask,
                                       dtype=weights.dtype)
    result = train(weights, inputs, targets, schedule, seed,
                   freeze_conv=freeze_conv, validation=validation,
                   eval_every=eval_every)
    metrics = evaluate_on_samples(weights, dataset.test)
    return Run(stage=stage, seed=seed, weights=weights, result=result,
               metrics=metrics)


def pretrain(dataset: DatasetSplit, config: NetworkConfig,
             schedule: TrainSchedule, seeds=(0, 1, 2),
             dtype=np.float64, eval_every: int = 0) -> list[Run]:
    """One full training run per ensemble seed on the source dataset."""
    runs = []
    for seed in seeds:
        weights = init_weights(config, seed=seed, dtype=dtype)
        runs.append(_train_and_evaluate("pretrain", weights, dataset, schedule,
                                        seed, freeze_conv=False,
                                        eval_every=eval_every))
    return runs


def direct_train(dataset: DatasetSplit, config: NetworkConfig,
                 schedule: TrainSchedule, seed: int,
                 dtype=np.float64) -> Run:
    """Random-initialized training on target data; same machinery as pretrain."""
    weights = init_weights(config, seed=seed, dtype=dtype)
    run = _train_and_evaluate("direct", weights, dataset, schedule, seed,
                              freeze_conv=False)
    run.train_count = len(dataset.train)
    return run


def retrain(source_weights: ModelWeights, dataset: DatasetSplit, mode: str,
            schedule: TrainSchedule, seed: int) -> Run:
    """Warm-start from the source weights and adapt to the target dataset.

    Partial mode freezes all convolutional parameters; full mode updates
    everything.  With an empty target training part (the count-0 sweep arm)
    or a 0-epoch schedule the input weights pass through unchanged.
    """
    if mode not in RETRAIN_MODES:
        raise InvalidParameterError(f"mode must be one of {RETRAIN_MODES}, got {mode!r}")
    weights = source_weights.copy()
    if not dataset.train or schedule.epochs == 0:
        metrics = evaluate_on_samples(weights, dataset.test)
        return Run(stage=f"retrain_{mode}", seed=seed, weights=weights,
                   result=TrainResult(weights), metrics=metrics)
    return _train_and_evaluate(f"retrain_{mode}", weights, dataset, schedule,
                               seed, freeze_conv=(mode == "partial"))


def split_seed_for(master_seed: int, split_index: int) -> int:
    """Deterministic split seed from (master seed, split index)."""
    return int(np.random.SeedSequence((master_seed, split_index)).generate_state(1)[0])


def mean_std(values) -> tuple[float, float]:
    """Population mean and standard deviation."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InvalidParameterError("cannot aggregate zero values")
    return float(values.mean()), float(values.std())


@dataclass
class SweepRow:
    """Aggregate accuracy at one retraining-spectra count."""

    train_count: int
    accuracies: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    @property
    def mean(self):
        return mean_std(self.accuracies)[0]

    @property
    def std(self):
        return mean_std(self.accuracies)[1]


def sweep_retrain_count(source_runs_weights: list, spectra: list, counts,
                        schedule: TrainSchedule, master_seed: int,
                        mode: str = "partial", splits: int = 5,
                        draws_train: int = 10, draws_test: int = 50) -> list[SweepRow]:
    """Accuracy vs number of retraining spectra.

    For each count, every (split, source checkpoint) pair yields one retrained
    model; the row aggregates accuracy over splits x ensemble.  Split
    membership depends only on (master_seed, split index), so rows share the
    same partitions.
    """
    counts = list(counts)
    for count in counts:
        if not 0 <= count < len(spectra):
            raise InvalidParameterError(
                f"retrain count {count} outside [0, {len(spectra) - 1}]")
    rows = []
    for count in counts:
        row = SweepRow(train_count=count)
        for split_index in range(splits):
            seed = split_seed_for(master_seed, split_index)
            dataset = build_target_dataset(spectra, count, seed,
                                           draws_train=draws_train,
                                           draws_test=draws_test)
            for weights in source_runs_weights:
                run = retrain(weights, dataset, mode, schedule, seed)
                run.split_seed = seed
                run.train_count = count
                row.accuracies.append(run.metrics["d_accuracy"])
                row.runs.append(run)
        rows.append(row)
    return rows


def ensemble_predict(weights_list: list, inputs) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample mean and population std of denormalized d predictions."""
    if not weights_list:
        raise InvalidParameterError("ensemble needs at least one model")
    first = weights_list[0].config
    for weights in weights_list[1:]:
        check_same_architecture(first, weights.config)
    stacked = np.stack([
        denormalize_thickness(np.asarray(predict(weights, inputs)["d"],
                                         dtype=np.float64))
        for weights in weights_list
    ])
    return stacked.mean(axis=0), stacked.std(axis=0)


_RUN_COLUMNS = ["stage", "seed", "split_seed", "train_count", "epochs",
                "epoch1_loss", "final_loss", "d_accuracy", "d_mape",
                "n_accuracy", "k_accuracy"]


def runs_to_rows(runs: list) -> list[list]:
    rows = []
    for run in runs:
        rows.append([
            run.stage,
            run.seed,
            "" if run.split_seed is None else run.split_seed,
            "" if run.train_count is None else run.train_count,
            len(run.result.epoch_losses),
            "" if run.epoch1_loss is None else run.epoch1_loss,
            "" if run.final_loss is None else run.final_loss,
            run.metrics.get("d_accuracy", ""),
            run.metrics.get("d_mape", ""),
            run.metrics.get("n_accuracy", ""),
            run.metrics.get("k_accuracy", ""),
        ])
    return rows


def write_runs_csv(path, runs: list) -> None:
    """One row per run; blank cells where a field does not apply."""
    write_table(path, _RUN_COLUMNS, runs_to_rows(runs))


def write_aggregate_csv(path, runs: list, keys=("d_accuracy", "d_mape")) -> None:
    """Mean and population std per metric over the given runs."""
    rows = []
    for key in keys:
        values = [run.metrics[key] for run in runs if key in run.metrics]
        if not values:
            continue
        mean, std = mean_std(values)
        rows.append([key, mean, std, len(values)])
    write_table(path, ["metric", "mean", "std", "runs"], rows)


def write_sweep_csv(path, rows: list) -> None:
    """Fig-4-style table: one row per retraining-spectra count."""
    table = [[row.train_count, row.mean, row.std, len(row.accuracies)]
             for row in rows]
    write_table(path, ["train_count", "mean_d_accuracy", "std_d_accuracy", "runs"],
                table)
