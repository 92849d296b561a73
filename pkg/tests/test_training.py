"""Training loop: determinism, freezing, schedules, divergence handling."""

import numpy as np
import pytest

from filmthick.errors import InvalidParameterError, TrainingDivergedError
from filmthick.neuralnet.adagrad import adagrad_step
from filmthick.neuralnet.config import NetworkConfig, TrainSchedule
from filmthick.neuralnet.model import init_weights, loss_and_gradients
from filmthick.neuralnet.training import (
    evaluate_loss,
    predict,
    single_thread_mode,
    train,
)

TOY = NetworkConfig(input_length=40, in_channels=2, conv_channels=(4, 3),
                    conv_kernels=(5, 3), pool_sizes=(2, 2), d_head=(16, 1),
                    n_head=(12, 40), k_head=(12, 40), dropout=0.3)


def toy_data(count=20, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.random((count, 40, 2))
    return x, {"d": rng.random(count)}


def weights_equal(a, b):
    return all(np.array_equal(a.arrays[n], b.arrays[n]) for n in a.arrays)


class TestDeterminism:
    def test_same_seed_bitwise(self):
        x, y = toy_data()
        schedule = TrainSchedule(epochs=3, batch_size=8)
        runs = []
        for _ in range(2):
            weights = init_weights(TOY, 7)
            result = train(weights, x, y, schedule, seed=11)
            runs.append((weights, result.epoch_losses))
        assert weights_equal(runs[0][0], runs[1][0])
        assert runs[0][1] == runs[1][1]

    def test_different_seed_differs(self):
        x, y = toy_data()
        schedule = TrainSchedule(epochs=3, batch_size=8)
        a = init_weights(TOY, 7)
        train(a, x, y, schedule, seed=11)
        b = init_weights(TOY, 7)
        train(b, x, y, schedule, seed=12)
        assert not weights_equal(a, b)

    def test_shuffle_changes_batches(self):
        x, y = toy_data()
        schedule = TrainSchedule(epochs=1, batch_size=8, shuffle=False)
        a = init_weights(TOY, 7)
        train(a, x, y, schedule, seed=11)
        b = init_weights(TOY, 7)
        train(b, x, y, TrainSchedule(epochs=1, batch_size=8, shuffle=True), seed=11)
        assert not weights_equal(a, b)


class TestFreezeConv:
    def test_conv_untouched_heads_move(self):
        x, y = toy_data()
        weights = init_weights(TOY, 1)
        before = weights.copy()
        train(weights, x, y, TrainSchedule(epochs=2, batch_size=8), seed=0,
              freeze_conv=True)
        for name in weights.arrays:
            if name.startswith("conv"):
                np.testing.assert_array_equal(weights.arrays[name], before.arrays[name])
                assert np.all(weights.accumulators[name] == 0.0)
        assert not np.array_equal(weights.arrays["d1_w"], before.arrays["d1_w"])

    def test_cached_path_matches_direct_frozen_loop(self):
        """The cached-feature loop must reproduce per-batch frozen training."""
        x, y = toy_data()
        schedule = TrainSchedule(epochs=3, batch_size=8)
        cached = init_weights(TOY, 2)
        train(cached, x, y, schedule, seed=5, freeze_conv=True)

        manual = init_weights(TOY, 2)
        for epoch in range(1, schedule.epochs + 1):
            if schedule.is_reset_epoch(epoch):
                from filmthick.neuralnet.adagrad import reset_accumulators
                reset_accumulators(manual)
            order = np.random.default_rng(
                np.random.SeedSequence((5, epoch))).permutation(len(x))
            for step, start in enumerate(range(0, len(x), schedule.batch_size)):
                idx = order[start:start + schedule.batch_size]
                rng = np.random.default_rng(np.random.SeedSequence((5, epoch, step)))
                _, _, grads = loss_and_gradients(manual, x[idx],
                                                 {k: v[idx] for k, v in y.items()},
                                                 rng, freeze_conv=True)
                adagrad_step(manual, grads, schedule.learning_rate,
                             schedule.adagrad_epsilon)
        assert weights_equal(cached, manual)


class TestSchedule:
    def test_reset_epochs(self):
        schedule = TrainSchedule()
        assert not schedule.is_reset_epoch(1)
        assert not schedule.is_reset_epoch(149)
        assert schedule.is_reset_epoch(150)
        assert not schedule.is_reset_epoch(151)
        assert schedule.is_reset_epoch(200)
        assert schedule.is_reset_epoch(250)
        assert not schedule.is_reset_epoch(249)

    def test_reset_disabled(self):
        schedule = TrainSchedule(reset_start=None)
        assert not any(schedule.is_reset_epoch(e) for e in range(1, 2001))
        round_trip = TrainSchedule.from_dict(schedule.to_dict())
        assert round_trip == schedule
        with pytest.raises(InvalidParameterError):
            TrainSchedule(reset_start=0)

    def test_reset_affects_training(self):
        x, y = toy_data()
        base = TrainSchedule(epochs=4, batch_size=8, reset_start=2, reset_interval=1)
        no_reset = TrainSchedule(epochs=4, batch_size=8, reset_start=100,
                                 reset_interval=1)
        a = init_weights(TOY, 3)
        train(a, x, y, base, seed=0)
        b = init_weights(TOY, 3)
        train(b, x, y, no_reset, seed=0)
        assert not weights_equal(a, b)

    def test_zero_epochs_is_identity(self):
        x, y = toy_data()
        weights = init_weights(TOY, 4)
        before = weights.copy()
        result = train(weights, x, y, TrainSchedule(epochs=0), seed=0)
        assert weights_equal(weights, before)
        assert result.epoch_losses == []
        assert weights.epoch == 0

    def test_epoch_counter_accumulates(self):
        x, y = toy_data()
        weights = init_weights(TOY, 4)
        train(weights, x, y, TrainSchedule(epochs=2, batch_size=8), seed=0)
        train(weights, x, y, TrainSchedule(epochs=3, batch_size=8), seed=1)
        assert weights.epoch == 5

    def test_partial_batches_kept(self):
        # 20 samples, batch 8: steps of 8, 8, and 4; the tail must train too.
        x, y = toy_data(count=20)
        schedule = TrainSchedule(epochs=1, batch_size=8, shuffle=False)
        weights = init_weights(TOY, 4)
        result = train(weights, x, y, schedule, seed=0)
        assert len(result.epoch_losses) == 1

    def test_validation_cadence(self):
        x, y = toy_data()
        vx, vy = toy_data(count=8, seed=9)
        weights = init_weights(TOY, 4)
        result = train(weights, x, y, TrainSchedule(epochs=5, batch_size=8), seed=0,
                       validation=(vx, vy), eval_every=2)
        assert [epoch for epoch, _ in result.validation] == [2, 4, 5]

    def test_frozen_validation_matches_eval(self):
        x, y = toy_data()
        vx, vy = toy_data(count=8, seed=9)
        weights = init_weights(TOY, 4)
        result = train(weights, x, y, TrainSchedule(epochs=2, batch_size=8), seed=0,
                       freeze_conv=True, validation=(vx, vy), eval_every=2)
        direct = evaluate_loss(weights, vx, vy)
        assert result.validation[-1][1] == pytest.approx(direct, rel=1e-12)


class TestRobustness:
    def test_divergence_aborts_cleanly(self):
        x, y = toy_data()
        y = {"d": np.where(np.arange(20) == 3, np.inf, y["d"])}
        weights = init_weights(TOY, 0)
        with pytest.raises(TrainingDivergedError, match="epoch 1"):
            train(weights, x, y, TrainSchedule(epochs=1, batch_size=8), seed=0)

    def test_empty_dataset_rejected(self):
        weights = init_weights(TOY, 0)
        with pytest.raises(InvalidParameterError):
            train(weights, np.zeros((0, 40, 2)), {"d": np.zeros(0)},
                  TrainSchedule(epochs=1), seed=0)

    def test_single_thread_mode_runs(self):
        x, y = toy_data(count=8)
        weights = init_weights(TOY, 0)
        with single_thread_mode():
            train(weights, x, y, TrainSchedule(epochs=1, batch_size=8), seed=0)


class TestPredictEvaluate:
    def test_predict_shapes_and_eval_mode(self):
        x, y = toy_data()
        weights = init_weights(TOY, 6)
        preds = predict(weights, x, batch_size=7)
        assert preds["d"].shape == (20,)
        again = predict(weights, x, batch_size=20)
        np.testing.assert_allclose(preds["d"], again["d"], rtol=1e-10)

    def test_float32_pipeline(self):
        x, y = toy_data()
        weights = init_weights(TOY, 6, dtype=np.float32)
        result = train(weights, x, y, TrainSchedule(epochs=2, batch_size=8), seed=0)
        assert weights.dtype == np.float32
        assert all(np.isfinite(v) for v in result.epoch_losses)
        preds = predict(weights, x)
        assert preds["d"].dtype == np.float32

    def test_loss_decreases_on_easy_problem(self):
        # Constant target: the bias path alone can fit it.  AdaGrad step sizes
        # scale with the learning rate, so a toy-length run uses a larger one.
        rng = np.random.default_rng(0)
        x = rng.random((30, 40, 2))
        y = {"d": np.full(30, 0.4)}
        weights = init_weights(TOY, 1)
        result = train(weights, x, y,
                       TrainSchedule(epochs=60, batch_size=16, learning_rate=0.05),
                       seed=2)
        assert result.epoch_losses[-1] < 0.1 * result.epoch_losses[0]
