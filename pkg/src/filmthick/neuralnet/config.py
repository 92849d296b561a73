"""Architecture and training-schedule configuration.

The network is a stack of valid (no padding, stride 1) 1-D convolutions, each
followed by ReLU and non-overlapping floor max pooling, then one fully
connected head per regression task.  The thickness head ends in a single linear
unit; the optional index heads end in one linear unit per grid point.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ArchitectureMismatchError, InvalidParameterError


@dataclass(frozen=True)
class NetworkConfig:
    input_length: int = 651
    in_channels: int = 2
    conv_channels: tuple = (512, 128, 64, 32)
    conv_kernels: tuple = (8, 5, 3, 3)
    pool_sizes: tuple = (3, 3, 2, 2)
    d_head: tuple = (2048, 1024, 512, 1)
    n_head: tuple = (2048, 1024, 651)
    k_head: tuple = (2048, 1024, 651)
    dropout: float = 0.3
    multitask: bool = False
    loss_weights: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        object.__setattr__(self, "conv_kernels", tuple(int(k) for k in self.conv_kernels))
        object.__setattr__(self, "pool_sizes", tuple(int(p) for p in self.pool_sizes))
        for name in ("d_head", "n_head", "k_head"):
            object.__setattr__(self, name, tuple(int(u) for u in getattr(self, name)))
        object.__setattr__(self, "loss_weights", tuple(float(w) for w in self.loss_weights))
        if self.input_length < 1 or self.in_channels < 1:
            raise InvalidParameterError("input must have positive length and channels")
        if not (len(self.conv_channels) == len(self.conv_kernels) == len(self.pool_sizes)):
            raise InvalidParameterError("conv stage tuples must have equal length")
        if not self.conv_channels:
            raise InvalidParameterError("need at least one conv stage")
        if any(c < 1 for c in self.conv_channels) or any(k < 1 for k in self.conv_kernels) \
                or any(p < 1 for p in self.pool_sizes):
            raise InvalidParameterError("conv channels, kernels, and pools must be >= 1")
        if not (0.0 <= self.dropout < 1.0):
            raise InvalidParameterError(f"dropout must lie in [0, 1), got {self.dropout}")
        if len(self.loss_weights) != 3 or any(w < 0.0 for w in self.loss_weights):
            raise InvalidParameterError("loss_weights must be three non-negative floats")
        if self.d_head[-1] != 1:
            raise InvalidParameterError("thickness head must end in a single unit")
        if self.multitask:
            for name in ("n_head", "k_head"):
                if getattr(self, name)[-1] != self.input_length:
                    raise InvalidParameterError(
                        f"{name} must end in input_length units for multitask training")
        self.conv_trace()  # raises if any stage collapses below one sample

    def conv_trace(self) -> list[tuple[int, int]]:
        """(length after conv, length after pool) per stage."""
        trace = []
        length = self.input_length
        for kernel, pool in zip(self.conv_kernels, self.pool_sizes):
            after_conv = length - kernel + 1
            after_pool = after_conv // pool
            if after_conv < 1 or after_pool < 1:
                raise InvalidParameterError(
                    f"conv stack collapses: length {length} with kernel {kernel} "
                    f"and pool {pool}")
            trace.append((after_conv, after_pool))
            length = after_pool
        return trace

    @property
    def flatten_size(self) -> int:
        return self.conv_trace()[-1][1] * self.conv_channels[-1]

    @property
    def heads(self) -> tuple[str, ...]:
        return ("d", "n", "k") if self.multitask else ("d",)

    def head_widths(self, head: str) -> tuple:
        return {"d": self.d_head, "n": self.n_head, "k": self.k_head}[head]

    def head_layers(self, head: str) -> list[tuple[int, int]]:
        """(fan_in, fan_out) of every dense layer in one head."""
        widths = self.head_widths(head)
        fan_in = self.flatten_size
        layers = []
        for width in widths:
            layers.append((fan_in, width))
            fan_in = width
        return layers

    def to_dict(self) -> dict:
        return {
            "input_length": self.input_length,
            "in_channels": self.in_channels,
            "conv_channels": list(self.conv_channels),
            "conv_kernels": list(self.conv_kernels),
            "pool_sizes": list(self.pool_sizes),
            "d_head": list(self.d_head),
            "n_head": list(self.n_head),
            "k_head": list(self.k_head),
            "dropout": self.dropout,
            "multitask": self.multitask,
            "loss_weights": list(self.loss_weights),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        return cls(
            input_length=int(data["input_length"]),
            in_channels=int(data["in_channels"]),
            conv_channels=tuple(data["conv_channels"]),
            conv_kernels=tuple(data["conv_kernels"]),
            pool_sizes=tuple(data["pool_sizes"]),
            d_head=tuple(data["d_head"]),
            n_head=tuple(data["n_head"]),
            k_head=tuple(data["k_head"]),
            dropout=float(data["dropout"]),
            multitask=bool(data["multitask"]),
            loss_weights=tuple(data["loss_weights"]),
        )


@dataclass(frozen=True)
class TrainSchedule:
    """Optimization schedule; epochs and steps are 1-based within a run.

    Periodic accumulator resets counter AdaGrad's vanishing step size over
    very long runs; `reset_start=None` disables them.  Short schedules should
    disable them: a reset near the end of a run discards the accumulated step
    scaling with no time left to recover.
    """

    epochs: int = 2000
    batch_size: int = 128
    learning_rate: float = 0.001
    adagrad_epsilon: float = 1e-8
    reset_start: int | None = 150
    reset_interval: int = 50
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise InvalidParameterError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate <= 0.0 or self.adagrad_epsilon <= 0.0:
            raise InvalidParameterError("learning_rate and adagrad_epsilon must be positive")
        if self.reset_start is not None and self.reset_start < 1:
            raise InvalidParameterError("reset_start must be >= 1 or None")
        if self.reset_interval < 1:
            raise InvalidParameterError("reset_interval must be >= 1")

    def is_reset_epoch(self, epoch: int) -> bool:
        """True when accumulators reset at the start of this run-local epoch."""
        if self.reset_start is None:
            return False
        return epoch >= self.reset_start and (epoch - self.reset_start) % self.reset_interval == 0

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "adagrad_epsilon": self.adagrad_epsilon,
            "reset_start": self.reset_start,
            "reset_interval": self.reset_interval,
            "shuffle": self.shuffle,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainSchedule":
        reset_start = data["reset_start"]
        return cls(
            epochs=int(data["epochs"]),
            batch_size=int(data["batch_size"]),
            learning_rate=float(data["learning_rate"]),
            adagrad_epsilon=float(data["adagrad_epsilon"]),
            reset_start=None if reset_start is None else int(reset_start),
            reset_interval=int(data["reset_interval"]),
            shuffle=bool(data["shuffle"]),
        )


def check_same_architecture(a: NetworkConfig, b: NetworkConfig) -> None:
    """Raise unless two configs describe the same trainable parameter set."""
    keys = ("input_length", "in_channels", "conv_channels", "conv_kernels",
            "pool_sizes", "d_head", "n_head", "k_head", "multitask")
    mismatched = [k for k in keys if getattr(a, k) != getattr(b, k)]
    if mismatched:
        raise ArchitectureMismatchError(
            f"checkpoint architecture differs in: {', '.join(mismatched)}")
