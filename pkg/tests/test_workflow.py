"""Experiment orchestration: pretrain/retrain/direct runs, freeze semantics,
the retraining-count sweep, ensembles, and CSV reporting."""

import csv

import numpy as np
import pytest

from filmthick.datagen import (
    SplitSpec,
    build_source_dataset,
    build_target_dataset,
    pseudo_target_spectra,
)
from filmthick.dispersion import WavelengthGrid
from filmthick.errors import ArchitectureMismatchError, InvalidParameterError
from filmthick.neuralnet import NetworkConfig, TrainSchedule, init_weights
from filmthick.workflow import (
    Run,
    SweepRow,
    direct_train,
    ensemble_predict,
    evaluate_on_samples,
    mean_std,
    pretrain,
    retrain,
    runs_to_rows,
    split_seed_for,
    sweep_retrain_count,
    write_aggregate_csv,
    write_runs_csv,
    write_sweep_csv,
)

GRID = WavelengthGrid(400.0, 700.0, 10.0)
CONFIG = NetworkConfig(input_length=31, conv_channels=(8, 8),
                       conv_kernels=(5, 3), pool_sizes=(2, 2),
                       d_head=(16, 1), n_head=(16, 31), k_head=(16, 31))
SCHEDULE = TrainSchedule(epochs=3, batch_size=8)


def source_dataset():
    split = SplitSpec(train_materials=4, validation_materials=2,
                      test_materials=3, draws_train=3, draws_validation=2,
                      draws_test=4, seed=5)
    return build_source_dataset(split, grid=GRID)


def target_dataset(count=6, train_count=4, seed=0):
    spectra, _ = pseudo_target_spectra(count, 3, GRID)
    return build_target_dataset(spectra, train_count, seed,
                                draws_train=2, draws_test=3)


def conv_names(weights):
    return [n for n in weights.arrays if n.startswith("conv")]


def head_names(weights):
    return [n for n in weights.arrays if not n.startswith("conv")]


class TestPretrain:
    def test_one_run_per_seed(self):
        runs = pretrain(source_dataset(), CONFIG, SCHEDULE, seeds=(0, 1),
                        dtype=np.float32)
        assert [run.seed for run in runs] == [0, 1]
        for run in runs:
            assert run.stage == "pretrain"
            assert len(run.result.epoch_losses) == 3
            assert set(run.metrics) == {"d_accuracy", "d_mape"}
            assert run.weights.dtype == np.float32
            assert run.epoch1_loss == run.result.epoch_losses[0]
            assert run.final_loss == run.result.epoch_losses[-1]

    def test_seeds_give_different_weights(self):
        runs = pretrain(source_dataset(), CONFIG, SCHEDULE, seeds=(0, 1),
                        dtype=np.float32)
        assert not np.array_equal(runs[0].weights.arrays["d1_w"],
                                  runs[1].weights.arrays["d1_w"])

    def test_multitask_metrics(self):
        config = NetworkConfig(**{**CONFIG.to_dict(), "multitask": True})
        runs = pretrain(source_dataset(), config, SCHEDULE, seeds=(0,),
                        dtype=np.float32)
        assert set(runs[0].metrics) == {"d_accuracy", "d_mape",
                                        "n_accuracy", "k_accuracy"}

    def test_validation_trace(self):
        runs = pretrain(source_dataset(), CONFIG, SCHEDULE, seeds=(0,),
                        dtype=np.float32, eval_every=1)
        assert [epoch for epoch, _ in runs[0].result.validation] == [1, 2, 3]


class TestDirect:
    def test_shares_the_pretrain_code_path(self):
        # Same dataset, config, schedule, and seed: direct training must be
        # bit-identical to a pretrain run.
        dataset = target_dataset()
        direct = direct_train(dataset, CONFIG, SCHEDULE, seed=4,
                              dtype=np.float32)
        via_pretrain = pretrain(dataset, CONFIG, SCHEDULE, seeds=(4,),
                                dtype=np.float32)[0]
        assert direct.result.epoch_losses == via_pretrain.result.epoch_losses
        for name in direct.weights.arrays:
            assert np.array_equal(direct.weights.arrays[name],
                                  via_pretrain.weights.arrays[name])
        assert direct.stage == "direct"
        assert direct.train_count == len(dataset.train)


class TestRetrain:
    def make_source(self):
        weights = init_weights(CONFIG, seed=0, dtype=np.float32)
        return pretrain(target_dataset(seed=1), CONFIG, SCHEDULE,
                        seeds=(0,), dtype=np.float32)[0].weights

    def test_partial_freezes_conv(self):
        source = self.make_source()
        run = retrain(source, target_dataset(seed=2), "partial", SCHEDULE, 0)
        for name in conv_names(source):
            assert np.array_equal(run.weights.arrays[name], source.arrays[name])
        assert any(not np.array_equal(run.weights.arrays[name],
                                      source.arrays[name])
                   for name in head_names(source))

    def test_full_updates_conv(self):
        source = self.make_source()
        run = retrain(source, target_dataset(seed=2), "full", SCHEDULE, 0)
        assert any(not np.array_equal(run.weights.arrays[name],
                                      source.arrays[name])
                   for name in conv_names(source))

    def test_source_weights_untouched(self):
        source = self.make_source()
        before = {k: v.copy() for k, v in source.arrays.items()}
        retrain(source, target_dataset(seed=2), "full", SCHEDULE, 0)
        for name, array in before.items():
            assert np.array_equal(source.arrays[name], array)

    def test_zero_epochs_is_identity(self):
        source = self.make_source()
        run = retrain(source, target_dataset(seed=2), "partial",
                      TrainSchedule(epochs=0, batch_size=8), 0)
        for name in source.arrays:
            assert np.array_equal(run.weights.arrays[name], source.arrays[name])
        assert set(run.metrics) == {"d_accuracy", "d_mape"}
        assert run.result.epoch_losses == []

    def test_empty_train_part_is_identity(self):
        source = self.make_source()
        run = retrain(source, target_dataset(train_count=0, seed=2),
                      "partial", SCHEDULE, 0)
        for name in source.arrays:
            assert np.array_equal(run.weights.arrays[name], source.arrays[name])

    def test_bad_mode(self):
        with pytest.raises(InvalidParameterError):
            retrain(self.make_source(), target_dataset(), "half", SCHEDULE, 0)


class TestEvaluate:
    def test_metric_keys(self):
        dataset = target_dataset()
        weights = init_weights(CONFIG, seed=0, dtype=np.float32)
        metrics = evaluate_on_samples(weights, dataset.test)
        assert set(metrics) == {"d_accuracy", "d_mape"}
        assert 0.0 <= metrics["d_accuracy"] <= 1.0
        assert metrics["d_mape"] >= 0.0

    def test_empty_rejected(self):
        weights = init_weights(CONFIG, seed=0, dtype=np.float32)
        with pytest.raises(InvalidParameterError):
            evaluate_on_samples(weights, [])


class TestSeedsAndAggregates:
    def test_split_seed_oracle(self):
        expected = int(np.random.SeedSequence((9, 2)).generate_state(1)[0])
        assert split_seed_for(9, 2) == expected

    def test_split_seeds_distinct(self):
        seeds = [split_seed_for(0, i) for i in range(6)]
        assert len(set(seeds)) == 6

    def test_mean_std_population(self):
        values = [1.0, 2.0, 4.0]
        mean, std = mean_std(values)
        assert mean == pytest.approx(7.0 / 3.0)
        assert std == pytest.approx(np.std(values))  # ddof=0
        with pytest.raises(InvalidParameterError):
            mean_std([])

    def test_sweep_row_recompute(self):
        row = SweepRow(train_count=3, accuracies=[0.2, 0.4, 0.6])
        assert row.mean == pytest.approx(0.4)
        assert row.std == pytest.approx(np.std([0.2, 0.4, 0.6]))


class TestSweep:
    def make_sources(self):
        dataset = target_dataset(seed=1)
        runs = pretrain(dataset, CONFIG, SCHEDULE, seeds=(0, 1),
                        dtype=np.float32)
        return [run.weights for run in runs]

    def test_shapes_and_partition_sharing(self):
        spectra, _ = pseudo_target_spectra(6, 3, GRID)
        sources = self.make_sources()
        rows = sweep_retrain_count(sources, spectra, [0, 2], SCHEDULE,
                                   master_seed=7, splits=2,
                                   draws_train=2, draws_test=3)
        assert [row.train_count for row in rows] == [0, 2]
        for row in rows:
            assert len(row.accuracies) == 2 * 2  # splits x ensemble
            assert len(row.runs) == len(row.accuracies)
        # Rows reuse the same split seeds, so partitions match across counts.
        assert [r.split_seed for r in rows[0].runs] == \
            [r.split_seed for r in rows[1].runs]

    def test_count_zero_is_evaluation_only(self):
        spectra, _ = pseudo_target_spectra(6, 3, GRID)
        sources = self.make_sources()
        rows = sweep_retrain_count(sources, spectra, [0], SCHEDULE,
                                   master_seed=7, splits=1,
                                   draws_train=2, draws_test=3)
        for run, source in zip(rows[0].runs, sources):
            for name in source.arrays:
                assert np.array_equal(run.weights.arrays[name],
                                      source.arrays[name])

    def test_count_bounds(self):
        spectra, _ = pseudo_target_spectra(4, 3, GRID)
        with pytest.raises(InvalidParameterError):
            sweep_retrain_count(self.make_sources(), spectra, [4], SCHEDULE,
                                master_seed=0)


class TestEnsemble:
    def test_mean_and_population_std(self):
        dataset = target_dataset()
        runs = pretrain(dataset, CONFIG, SCHEDULE, seeds=(0, 1, 2),
                        dtype=np.float32)
        inputs = np.stack([np.column_stack([s.R, s.T])
                           for s in [sample.spectra for sample in dataset.test[:4]]])
        mean, std = ensemble_predict([run.weights for run in runs], inputs)
        assert mean.shape == (4,)
        assert np.all(std >= 0.0)

    def test_single_model_zero_std(self):
        dataset = target_dataset()
        weights = init_weights(CONFIG, seed=0, dtype=np.float32)
        inputs = np.stack([np.column_stack([s.R, s.T])
                           for s in [sample.spectra for sample in dataset.test[:2]]])
        mean, std = ensemble_predict([weights], inputs)
        assert np.all(std == 0.0)

    def test_identical_models_zero_std(self):
        weights = init_weights(CONFIG, seed=0, dtype=np.float32)
        inputs = np.zeros((2, 31, 2))
        mean, std = ensemble_predict([weights, weights.copy()], inputs)
        assert np.all(std == 0.0)

    def test_architecture_mismatch(self):
        small = init_weights(CONFIG, seed=0, dtype=np.float32)
        other = NetworkConfig(**{**CONFIG.to_dict(), "d_head": [8, 1]})
        big = init_weights(other, seed=0, dtype=np.float32)
        with pytest.raises(ArchitectureMismatchError):
            ensemble_predict([small, big], np.zeros((1, 31, 2)))
        with pytest.raises(InvalidParameterError):
            ensemble_predict([], np.zeros((1, 31, 2)))


class TestReports:
    def read_csv(self, path):
        with open(path, newline="") as fh:
            return list(csv.reader(fh))

    def make_runs(self):
        dataset = target_dataset()
        return pretrain(dataset, CONFIG, SCHEDULE, seeds=(0, 1),
                        dtype=np.float32)

    def test_runs_csv(self, tmp_path):
        runs = self.make_runs()
        path = tmp_path / "runs.csv"
        write_runs_csv(path, runs)
        rows = self.read_csv(path)
        assert rows[0] == ["stage", "seed", "split_seed", "train_count",
                           "epochs", "epoch1_loss", "final_loss",
                           "d_accuracy", "d_mape", "n_accuracy", "k_accuracy"]
        assert len(rows) == 3
        assert rows[1][0] == "pretrain"
        assert rows[1][2] == ""  # no split seed on a source run
        assert rows[1][9] == "" and rows[1][10] == ""  # single-task run
        assert float(rows[1][5]) == pytest.approx(runs[0].epoch1_loss)

    def test_rows_carry_optional_fields(self):
        run = self.make_runs()[0]
        run.split_seed = 42
        run.train_count = 4
        row = runs_to_rows([run])[0]
        assert row[2] == 42 and row[3] == 4

    def test_aggregate_csv_recompute(self, tmp_path):
        runs = self.make_runs()
        path = tmp_path / "aggregate.csv"
        write_aggregate_csv(path, runs)
        rows = self.read_csv(path)
        assert rows[0] == ["metric", "mean", "std", "runs"]
        by_metric = {row[0]: row for row in rows[1:]}
        values = [run.metrics["d_accuracy"] for run in runs]
        assert float(by_metric["d_accuracy"][1]) == pytest.approx(np.mean(values))
        assert float(by_metric["d_accuracy"][2]) == pytest.approx(np.std(values))
        assert int(by_metric["d_accuracy"][3]) == 2

    def test_sweep_csv(self, tmp_path):
        rows = [SweepRow(train_count=0, accuracies=[0.1, 0.3]),
                SweepRow(train_count=2, accuracies=[0.5, 0.7])]
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, rows)
        table = self.read_csv(path)
        assert table[0] == ["train_count", "mean_d_accuracy",
                            "std_d_accuracy", "runs"]
        assert [row[0] for row in table[1:]] == ["0", "2"]
        assert float(table[1][1]) == pytest.approx(0.2)
