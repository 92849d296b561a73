"""Evaluation metrics: within-deviation accuracy, MAPE, spectrum accuracy,
forward-model reconstruction residuals, and activation-map export.

Thickness metrics treat the measured value as the denominator.  Spectrum
metrics average relative deviation across wavelengths per spectrum, guarding
near-zero denominators with a configurable floor.  The six-film fixture is a
fixed regression table of spin-coated perovskite films (profilometry-measured
vs ensemble-mean predicted thickness) used to pin the metric conventions.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .dispersion import RefractiveIndexSpectrum
from .errors import GridMismatchError, InvalidParameterError
from .fileio import write_table
from .neuralnet.model import ModelWeights, conv_stage_activations
from .optics import OpticalSpectra, SubstrateConfig, film_on_substrate_rt

SIX_FILM_MEASURED_NM = (154.17, 99.29, 389.89, 265.07, 460.35, 311.15)
SIX_FILM_PREDICTED_NM = (122.8, 101.3, 418.5, 256.0, 489.9, 373.8)


def six_film_fixture():
    """(predicted, measured) thickness arrays of the six-film fixture."""
    return np.array(SIX_FILM_PREDICTED_NM), np.array(SIX_FILM_MEASURED_NM)


def _check_pairs(preds, actuals):
    preds = np.asarray(preds, dtype=np.float64)
    actuals = np.asarray(actuals, dtype=np.float64)
    if preds.shape != actuals.shape or preds.ndim != 1:
        raise InvalidParameterError("predictions and actuals must be equal-length vectors")
    if preds.size == 0:
        raise InvalidParameterError("empty metric input")
    if np.any(actuals <= 0.0):
        raise InvalidParameterError("actual values must be positive")
    return preds, actuals


def deviations(preds, actuals) -> np.ndarray:
    """Per-sample relative deviation |pred - actual| / actual."""
    preds, actuals = _check_pairs(preds, actuals)
    return np.abs(preds - actuals) / actuals


def within_deviation_accuracy(preds, actuals, threshold: float = 0.10) -> float:
    """Fraction of samples with relative deviation <= threshold (inclusive)."""
    if threshold <= 0.0:
        raise InvalidParameterError("threshold must be positive")
    dev = deviations(preds, actuals)
    return float(np.count_nonzero(dev <= threshold)) / dev.size


def mape(preds, actuals) -> float:
    """Mean absolute percentage error, in percent."""
    return float(np.mean(deviations(preds, actuals))) * 100.0


def spectrum_deviations(pred_spectra, actual_spectra, floor: float = 1e-3) -> np.ndarray:
    """Wavelength-averaged relative deviation per spectrum.

    Denominators are max(|actual|, floor) so near-zero tails (absorption edges
    where k sits at ~1e-2 or below) cannot blow up the ratio.
    """
    preds = np.atleast_2d(np.asarray(pred_spectra, dtype=np.float64))
    actuals = np.atleast_2d(np.asarray(actual_spectra, dtype=np.float64))
    if preds.shape != actuals.shape:
        raise GridMismatchError("prediction and actual spectra shapes differ")
    if floor <= 0.0:
        raise InvalidParameterError("floor must be positive")
    denom = np.maximum(np.abs(actuals), floor)
    return np.mean(np.abs(preds - actuals) / denom, axis=1)


def spectrum_accuracy(pred_spectra, actual_spectra, threshold: float = 0.10,
                      floor: float = 1e-3) -> float:
    """Fraction of spectra whose wavelength-averaged deviation is <= threshold."""
    dev = spectrum_deviations(pred_spectra, actual_spectra, floor)
    return float(np.count_nonzero(dev <= threshold)) / dev.size


@dataclass(frozen=True)
class AccuracyReport:
    """Within-threshold accuracy plus MAPE with the per-sample deviations kept."""

    fraction_within: float
    mape: float
    deviations: np.ndarray
    threshold: float = 0.10

    @classmethod
    def from_pairs(cls, preds, actuals, threshold: float = 0.10) -> "AccuracyReport":
        dev = deviations(preds, actuals)
        fraction = float(np.count_nonzero(dev <= threshold)) / dev.size
        return cls(fraction_within=fraction, mape=float(np.mean(dev)) * 100.0,
                   deviations=dev, threshold=threshold)

    def recomputed(self):
        """(fraction, mape) recomputed from the stored deviations."""
        fraction = float(np.count_nonzero(self.deviations <= self.threshold))
        return fraction / self.deviations.size, float(np.mean(self.deviations)) * 100.0


@dataclass(frozen=True)
class ReconstructionResidual:
    """Per-wavelength forward-simulation residuals against measured spectra."""

    residual_r: np.ndarray
    residual_t: np.ndarray
    rms: float


def reconstruction_residual(thickness_nm: float, index: RefractiveIndexSpectrum,
                            measured: OpticalSpectra,
                            substrate: SubstrateConfig | None = None) -> ReconstructionResidual:
    """Forward-simulate (d, n, k) and compare against the measured R and T."""
    if substrate is None:
        substrate = SubstrateConfig()
    if measured.grid != index.grid:
        raise GridMismatchError("measured spectra and index are on different grids")
    sim = film_on_substrate_rt(index, thickness_nm, substrate)
    residual_r = sim.R - measured.R
    residual_t = sim.T - measured.T
    stacked = np.concatenate([residual_r, residual_t])
    return ReconstructionResidual(residual_r=residual_r, residual_t=residual_t,
                                  rms=float(np.sqrt(np.mean(stacked * stacked))))


@dataclass(frozen=True)
class ActivationMap:
    """Post-ReLU activations of seed-selected filters for one conv stage."""

    stage: int
    filter_ids: np.ndarray
    maps: np.ndarray


def activation_maps(weights: ModelWeights, sample, filters_per_layer: int = 10,
                    seed: int = 0) -> list[ActivationMap]:
    """Activations of `filters_per_layer` randomly selected filters per stage.

    The selection is drawn once per stage from a generator seeded with `seed`,
    so the same seed always picks the same filters.  A request exceeding a
    stage's width is clamped with a warning.
    """
    sample = np.asarray(sample, dtype=np.float64)
    if sample.ndim == 2:
        sample = sample[None, :, :]
    if sample.shape[0] != 1:
        raise InvalidParameterError("activation maps take a single sample")
    if filters_per_layer < 1:
        raise InvalidParameterError("filters_per_layer must be at least 1")
    rng = np.random.default_rng(seed)
    stages = conv_stage_activations(weights, sample)
    out = []
    for stage_index, act in enumerate(stages):
        width = act.shape[2]
        take = filters_per_layer
        if take > width:
            warnings.warn(f"stage {stage_index + 1} has {width} filters; "
                          f"clamping selection from {filters_per_layer}")
            take = width
        chosen = np.sort(rng.choice(width, size=take, replace=False))
        out.append(ActivationMap(stage=stage_index + 1, filter_ids=chosen,
                                 maps=act[0][:, chosen].T.copy()))
    return out


def write_activation_maps(directory, maps: list[ActivationMap]) -> list[str]:
    """One CSV per stage: rows are filters, columns are positions."""
    paths = []
    for entry in maps:
        length = entry.maps.shape[1]
        header = ["filter"] + [f"pos{i}" for i in range(length)]
        rows = [[int(fid)] + [float(v) for v in row]
                for fid, row in zip(entry.filter_ids, entry.maps)]
        path = os.path.join(directory, f"activations_stage{entry.stage}.csv")
        write_table(path, header, rows)
        paths.append(path)
    return paths
