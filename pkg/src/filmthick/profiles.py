"""Named run presets so scripts and tests reference profiles, not raw flags.

`paper` is the full-fidelity workload (float64, full split, 2000-epoch
pre-training).  `desk` is the reduced single-machine workload: 200 source
materials with 5 thickness draws each, 300-epoch pre-training, float32
compute.  `ci` is a minutes-scale smoke preset.  All three share the canonical
architecture and wavelength grid.

Periodic AdaGrad accumulator resets belong to the 2000-epoch pre-training
recipe only.  The shorter schedules disable them: with a 200 or 300 epoch
budget the reset points land in the closing epochs and destroy the converged
step scaling right before the run ends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import SplitSpec
from .errors import InvalidParameterError
from .neuralnet import NetworkConfig, TrainSchedule


@dataclass(frozen=True)
class Profile:
    name: str
    description: str
    split: SplitSpec
    network: NetworkConfig
    pretrain_schedule: TrainSchedule
    retrain_schedule: TrainSchedule
    dtype: str

    @property
    def numpy_dtype(self):
        return np.dtype(self.dtype)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "split": self.split.to_dict(),
            "network": self.network.to_dict(),
            "pretrain_schedule": self.pretrain_schedule.to_dict(),
            "retrain_schedule": self.retrain_schedule.to_dict(),
            "dtype": self.dtype,
        }


PROFILES = {
    "paper": Profile(
        name="paper",
        description="Full-fidelity workload: 1116-material source split, "
                    "2000-epoch pre-training, float64 compute.",
        split=SplitSpec(),
        network=NetworkConfig(),
        pretrain_schedule=TrainSchedule(epochs=2000),
        retrain_schedule=TrainSchedule(epochs=200, reset_start=None),
        dtype="float64",
    ),
    "desk": Profile(
        name="desk",
        description="Reduced single-machine workload: 200 training materials "
                    "with 5 draws each, 300-epoch pre-training, float32 compute.",
        split=SplitSpec(train_materials=200, validation_materials=30,
                        test_materials=50, draws_train=5, draws_validation=5,
                        draws_test=5),
        network=NetworkConfig(),
        pretrain_schedule=TrainSchedule(epochs=300, reset_start=None),
        retrain_schedule=TrainSchedule(epochs=200, reset_start=None),
        dtype="float32",
    ),
    "ci": Profile(
        name="ci",
        description="Smoke-test workload: 22 materials, 8-epoch pre-training, "
                    "float32 compute.",
        split=SplitSpec(train_materials=12, validation_materials=4,
                        test_materials=6, draws_train=3, draws_validation=3,
                        draws_test=4),
        network=NetworkConfig(),
        pretrain_schedule=TrainSchedule(epochs=8, reset_start=None),
        retrain_schedule=TrainSchedule(epochs=4, reset_start=None),
        dtype="float32",
    ),
}


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
