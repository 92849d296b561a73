"""Request and response models for the service endpoints.

Requests carry filesystem paths plus run parameters; the service owns all
artifact I/O.  Responses echo what was written and summarize metrics.  Field
defaults mirror the runner's, so the CLI can send only what the user set.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class ErrorDetail(BaseModel):
    kind: str
    exit_code: int
    message: str


class ErrorResponse(BaseModel):
    error: ErrorDetail


class HealthResponse(BaseModel):
    status: str
    version: str


class SimulateRequest(BaseModel):
    output_dir: str
    profile: str = "paper"
    seed: int | None = None
    split: dict | None = None
    single_thread: bool = True


class SimulateResponse(BaseModel):
    output_dir: str
    counts: dict[str, int]
    files: dict[str, str]
    seed: int


class PretrainRequest(BaseModel):
    dataset_dir: str
    output_dir: str
    profile: str = "desk"
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])
    epochs: int | None = None
    batch_size: int | None = None
    learning_rate: float | None = None
    multitask: bool = False
    dtype: str | None = None
    network: dict | None = None
    eval_every: int = 0
    single_thread: bool = True


class RunSummary(BaseModel):
    seed: int
    epochs: int
    epoch1_loss: float | None
    final_loss: float | None
    d_accuracy: float
    d_mape: float
    n_accuracy: float | None = None
    k_accuracy: float | None = None


class PretrainResponse(BaseModel):
    output_dir: str
    checkpoints: list[str]
    runs: list[RunSummary]


class RetrainRequest(BaseModel):
    checkpoint: str
    output_dir: str
    mode: str = "partial"
    target_dir: str | None = None
    pseudo_count: int | None = None
    pseudo_seed: int = 0
    train_count: int = 13
    split_seed: int = 0
    draws_train: int = 10
    draws_test: int = 50
    epochs: int | None = None
    single_thread: bool = True


class RetrainResponse(BaseModel):
    output_dir: str
    checkpoint: str
    mode: str
    train_samples: int
    test_samples: int
    metrics: dict[str, float]
    epoch1_loss: float | None
    final_loss: float | None


class DirectRequest(BaseModel):
    output_dir: str
    target_dir: str | None = None
    pseudo_count: int | None = None
    pseudo_seed: int = 0
    train_count: int = 13
    split_seed: int = 0
    draws_train: int = 10
    draws_test: int = 50
    profile: str = "desk"
    seed: int = 0
    epochs: int | None = None
    multitask: bool = False
    network: dict | None = None
    single_thread: bool = True


class DirectResponse(BaseModel):
    output_dir: str
    checkpoint: str
    train_samples: int
    test_samples: int
    metrics: dict[str, float]
    epoch1_loss: float | None
    final_loss: float | None


class PredictRequest(BaseModel):
    checkpoints: list[str]
    spectra: list[str]
    output_csv: str | None = None
    single_thread: bool = True


class PredictionRow(BaseModel):
    file: str
    mean_d_nm: float
    std_d_nm: float


class PredictResponse(BaseModel):
    predictions: list[PredictionRow]
    output_csv: str | None


class EvaluateRequest(BaseModel):
    checkpoints: list[str]
    dataset_dir: str
    part: str = "test"
    output_dir: str | None = None
    single_thread: bool = True


class EvaluateResponse(BaseModel):
    part: str
    samples: int
    results: list[dict]
    output_dir: str | None


class FitRequest(BaseModel):
    spectra_csv: str
    index_csv: str
    output_dir: str | None = None
    d_min_nm: float = 10.0
    d_max_nm: float = 2010.0
    step_nm: float = 1.0
    r_weight: float = 1.0
    t_weight: float = 1.0
    substrate_n: float = 1.52
    substrate_k: float = 0.0
    coherent: bool = False
    single_thread: bool = True


class FitResponse(BaseModel):
    best_d_nm: float
    residual_rms: float
    candidates: int
    curve_csv: str | None


class ActivationsRequest(BaseModel):
    checkpoint: str
    spectra_csv: str
    output_dir: str
    filters_per_layer: int = 10
    seed: int = 0
    single_thread: bool = True


class StageSummary(BaseModel):
    stage: int
    filters: list[int]
    length: int


class ActivationsResponse(BaseModel):
    output_dir: str
    files: list[str]
    stages: list[StageSummary]
