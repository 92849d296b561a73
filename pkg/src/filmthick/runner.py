"""Filesystem-level run orchestration shared by the service and the CLI.

Each `run_*` function performs one subcommand's work end to end: read inputs,
delegate to the core modules, persist artifacts under the requested output
directory, and return a JSON-serializable summary.  Every run that writes
output also writes a `provenance.json` capturing the request, seeds, and
library versions (no timestamps, so reruns stay byte-identical).
"""

from __future__ import annotations

import contextlib
import dataclasses
import glob
import os
import platform

import numpy as np

from . import __version__
from .datagen import (
    SplitSpec,
    build_source_dataset,
    build_target_dataset,
    load_target_spectra,
    pseudo_target_spectra,
    read_dataset,
    write_dataset,
)
from .dispersion import RefractiveIndexSpectrum, WavelengthGrid
from .errors import ArchitectureMismatchError, DataFormatError, InvalidParameterError
from .fileio import (
    read_index_table,
    read_optical_table,
    resample_to_grid,
    write_json,
    write_table,
)
from .gridfit import grid_search_thickness
from .metrics import activation_maps, write_activation_maps
from .neuralnet import (
    NetworkConfig,
    TrainSchedule,
    load_checkpoint,
    save_checkpoint,
    single_thread_mode,
)
from .optics import OpticalSpectra, SubstrateConfig
from .profiles import get_profile
from .workflow import (
    direct_train,
    ensemble_predict,
    evaluate_on_samples,
    pretrain,
    retrain,
    write_aggregate_csv,
    write_runs_csv,
)


def _threading(single_thread: bool):
    return single_thread_mode() if single_thread else contextlib.nullcontext()


def _ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _write_provenance(output_dir: str, command: str, request: dict) -> str:
    payload = {
        "command": command,
        "request": request,
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    path = os.path.join(output_dir, "provenance.json")
    write_json(path, payload)
    return path


def _override_schedule(schedule: TrainSchedule, epochs=None, batch_size=None,
                       learning_rate=None) -> TrainSchedule:
    changes = {}
    if epochs is not None:
        changes["epochs"] = epochs
    if batch_size is not None:
        changes["batch_size"] = batch_size
    if learning_rate is not None:
        changes["learning_rate"] = learning_rate
    return dataclasses.replace(schedule, **changes) if changes else schedule


def _override_network(config: NetworkConfig, multitask: bool,
                      network: dict | None) -> NetworkConfig:
    base = config.to_dict()
    base["multitask"] = multitask
    if network:
        unknown = set(network) - set(base)
        if unknown:
            raise InvalidParameterError(f"unknown network fields {sorted(unknown)}")
        base.update(network)
    return NetworkConfig.from_dict(base)


def load_spectra_csv(path, grid: WavelengthGrid | None = None) -> OpticalSpectra:
    """Read an R/T CSV and resample it onto the grid (canonical by default)."""
    if grid is None:
        grid = WavelengthGrid.canonical()
    wavelength, big_r, big_t = read_optical_table(path)
    big_r = resample_to_grid(wavelength, big_r, grid, label=f"{path} R")
    big_t = resample_to_grid(wavelength, big_t, grid, label=f"{path} T")
    return OpticalSpectra.from_measured(grid, big_r, big_t)


def load_index_csv(path, grid: WavelengthGrid | None = None) -> RefractiveIndexSpectrum:
    """Read an n/k CSV and resample it onto the grid (canonical by default)."""
    if grid is None:
        grid = WavelengthGrid.canonical()
    wavelength, n, k = read_index_table(path)
    n = resample_to_grid(wavelength, n, grid, label=f"{path} n")
    k = resample_to_grid(wavelength, k, grid, label=f"{path} k")
    return RefractiveIndexSpectrum(grid, np.maximum(n, 0.0), np.maximum(k, 0.0))


def _target_spectra(target_dir: str | None, pseudo_count: int | None,
                    pseudo_seed: int, grid: WavelengthGrid):
    """Target-domain index spectra from CSVs or the pseudo-material generator."""
    if (target_dir is None) == (pseudo_count is None):
        raise InvalidParameterError(
            "provide exactly one of target_dir or pseudo_count")
    if target_dir is not None:
        paths = sorted(glob.glob(os.path.join(target_dir, "*.csv")))
        if not paths:
            raise DataFormatError(f"no .csv index files under {target_dir}")
        return load_target_spectra(paths, grid), {"target_dir": target_dir,
                                                  "files": paths}
    spectra, materials = pseudo_target_spectra(pseudo_count, pseudo_seed, grid)
    return spectra, {"pseudo_count": pseudo_count, "pseudo_seed": pseudo_seed,
                     "materials": materials}


def _require_grid_match(config: NetworkConfig, grid: WavelengthGrid) -> None:
    if config.input_length != grid.count:
        raise ArchitectureMismatchError(
            f"network input length {config.input_length} != grid count {grid.count}")


def run_simulate(output_dir: str, profile: str = "paper", seed: int | None = None,
                 split: dict | None = None, single_thread: bool = True,
                 request: dict | None = None) -> dict:
    """Build and persist the source dataset for a profile."""
    preset = get_profile(profile)
    spec = preset.split.to_dict()
    if split:
        unknown = set(split) - set(spec)
        if unknown:
            raise InvalidParameterError(f"unknown split fields {sorted(unknown)}")
        spec.update(split)
    if seed is not None:
        spec["seed"] = seed
    split_spec = SplitSpec(**spec)
    with _threading(single_thread):
        dataset = build_source_dataset(split_spec)
        _ensure_dir(output_dir)
        paths = write_dataset(output_dir, dataset)
    _write_provenance(output_dir, "simulate", request or {
        "profile": profile, "split": split_spec.to_dict()})
    return {
        "output_dir": output_dir,
        "counts": {part: len(dataset.part(part))
                   for part in ("train", "validation", "test")},
        "files": paths,
        "seed": split_spec.seed,
    }


def run_pretrain(dataset_dir: str, output_dir: str, profile: str = "desk",
                 seeds=(0, 1, 2), epochs: int | None = None,
                 batch_size: int | None = None, learning_rate: float | None = None,
                 multitask: bool = False, dtype: str | None = None,
                 network: dict | None = None, eval_every: int = 0,
                 single_thread: bool = True, request: dict | None = None) -> dict:
    """Train one model per ensemble seed on a simulated source dataset."""
    preset = get_profile(profile)
    dataset = read_dataset(dataset_dir)
    config = _override_network(preset.network, multitask, network)
    _require_grid_match(config, dataset.grid)
    schedule = _override_schedule(preset.pretrain_schedule, epochs, batch_size,
                                  learning_rate)
    run_dtype = np.dtype(dtype) if dtype else preset.numpy_dtype
    with _threading(single_thread):
        runs = pretrain(dataset, config, schedule, seeds=tuple(seeds),
                        dtype=run_dtype, eval_every=eval_every)
    _ensure_dir(output_dir)
    checkpoints = []
    for run in runs:
        path = os.path.join(output_dir, f"pretrain_seed{run.seed}.thkw")
        save_checkpoint(path, run.weights)
        checkpoints.append(path)
    write_runs_csv(os.path.join(output_dir, "runs.csv"), runs)
    write_aggregate_csv(os.path.join(output_dir, "aggregate.csv"), runs)
    _write_provenance(output_dir, "pretrain", request or {
        "dataset_dir": dataset_dir, "profile": profile, "seeds": list(seeds)})
    return {
        "output_dir": output_dir,
        "checkpoints": checkpoints,
        "runs": [{"seed": run.seed, "epochs": len(run.result.epoch_losses),
                  "epoch1_loss": run.epoch1_loss, "final_loss": run.final_loss,
                  **run.metrics} for run in runs],
    }


def run_retrain(checkpoint: str, output_dir: str, mode: str = "partial",
                target_dir: str | None = None, pseudo_count: int | None = None,
                pseudo_seed: int = 0, train_count: int = 13, split_seed: int = 0,
                draws_train: int = 10, draws_test: int = 50,
                epochs: int | None = None, single_thread: bool = True,
                request: dict | None = None) -> dict:
    """Warm-start a source checkpoint on a target dataset (partial or full)."""
    weights = load_checkpoint(checkpoint)
    grid = WavelengthGrid.canonical()
    _require_grid_match(weights.config, grid)
    spectra, target_meta = _target_spectra(target_dir, pseudo_count, pseudo_seed, grid)
    schedule = _override_schedule(get_profile("desk").retrain_schedule, epochs)
    with _threading(single_thread):
        dataset = build_target_dataset(spectra, train_count, split_seed,
                                       draws_train=draws_train,
                                       draws_test=draws_test)
        run = retrain(weights, dataset, mode, schedule, split_seed)
    run.split_seed = split_seed
    run.train_count = train_count
    _ensure_dir(output_dir)
    out_path = os.path.join(output_dir, f"retrain_{mode}.thkw")
    save_checkpoint(out_path, run.weights)
    write_runs_csv(os.path.join(output_dir, "runs.csv"), [run])
    _write_provenance(output_dir, "retrain", request or {
        "checkpoint": checkpoint, "mode": mode, "train_count": train_count,
        "split_seed": split_seed, "target": {k: v for k, v in target_meta.items()
                                             if k != "materials"}})
    return {
        "output_dir": output_dir,
        "checkpoint": out_path,
        "mode": mode,
        "train_samples": len(dataset.train),
        "test_samples": len(dataset.test),
        "metrics": run.metrics,
        "epoch1_loss": run.epoch1_loss,
        "final_loss": run.final_loss,
    }


def run_direct(output_dir: str, target_dir: str | None = None,
               pseudo_count: int | None = None, pseudo_seed: int = 0,
               train_count: int = 13, split_seed: int = 0,
               draws_train: int = 10, draws_test: int = 50,
               profile: str = "desk", seed: int = 0, epochs: int | None = None,
               multitask: bool = False, network: dict | None = None,
               single_thread: bool = True, request: dict | None = None) -> dict:
    """Random-initialized training on target data only (the baseline)."""
    preset = get_profile(profile)
    grid = WavelengthGrid.canonical()
    config = _override_network(preset.network, multitask, network)
    _require_grid_match(config, grid)
    spectra, target_meta = _target_spectra(target_dir, pseudo_count, pseudo_seed, grid)
    schedule = _override_schedule(preset.retrain_schedule, epochs)
    with _threading(single_thread):
        dataset = build_target_dataset(spectra, train_count, split_seed,
                                       draws_train=draws_train,
                                       draws_test=draws_test)
        run = direct_train(dataset, config, schedule, seed,
                           dtype=preset.numpy_dtype)
    run.split_seed = split_seed
    _ensure_dir(output_dir)
    out_path = os.path.join(output_dir, "direct.thkw")
    save_checkpoint(out_path, run.weights)
    write_runs_csv(os.path.join(output_dir, "runs.csv"), [run])
    _write_provenance(output_dir, "direct", request or {
        "train_count": train_count, "split_seed": split_seed, "seed": seed,
        "target": {k: v for k, v in target_meta.items() if k != "materials"}})
    return {
        "output_dir": output_dir,
        "checkpoint": out_path,
        "train_samples": len(dataset.train),
        "test_samples": len(dataset.test),
        "metrics": run.metrics,
        "epoch1_loss": run.epoch1_loss,
        "final_loss": run.final_loss,
    }


def run_predict(checkpoints, spectra, output_csv: str | None = None,
                single_thread: bool = True, request: dict | None = None) -> dict:
    """Ensemble thickness predictions for R/T CSV files."""
    if not checkpoints:
        raise InvalidParameterError("predict needs at least one checkpoint")
    if not spectra:
        raise InvalidParameterError("predict needs at least one spectra file")
    models = [load_checkpoint(path) for path in checkpoints]
    grid = WavelengthGrid.canonical()
    _require_grid_match(models[0].config, grid)
    loaded = [load_spectra_csv(path, grid) for path in spectra]
    inputs = np.stack([np.column_stack([s.R, s.T]) for s in loaded])
    with _threading(single_thread):
        mean_d, std_d = ensemble_predict(models, inputs)
    rows = [{"file": path, "mean_d_nm": float(m), "std_d_nm": float(s)}
            for path, m, s in zip(spectra, mean_d, std_d)]
    if output_csv:
        _ensure_dir(os.path.dirname(output_csv) or ".")
        write_table(output_csv, ["file", "mean_d_nm", "std_d_nm"],
                    [[r["file"], r["mean_d_nm"], r["std_d_nm"]] for r in rows])
        _write_provenance(os.path.dirname(output_csv) or ".", "predict",
                          request or {"checkpoints": list(checkpoints),
                                      "spectra": list(spectra)})
    return {"predictions": rows, "output_csv": output_csv}


def run_evaluate(checkpoints, dataset_dir: str, part: str = "test",
                 output_dir: str | None = None, single_thread: bool = True,
                 request: dict | None = None) -> dict:
    """Accuracy/MAPE of each checkpoint on a labeled dataset part."""
    if not checkpoints:
        raise InvalidParameterError("evaluate needs at least one checkpoint")
    dataset = read_dataset(dataset_dir)
    samples = dataset.part(part)
    if not samples:
        raise InvalidParameterError(f"dataset part {part!r} is empty")
    results = []
    with _threading(single_thread):
        for path in checkpoints:
            weights = load_checkpoint(path)
            _require_grid_match(weights.config, dataset.grid)
            results.append({"checkpoint": path,
                            **evaluate_on_samples(weights, samples)})
    if output_dir:
        _ensure_dir(output_dir)
        keys = [k for k in results[0] if k != "checkpoint"]
        write_table(os.path.join(output_dir, "evaluation.csv"),
                    ["checkpoint"] + keys,
                    [[r["checkpoint"]] + [r[k] for k in keys] for r in results])
        _write_provenance(output_dir, "evaluate", request or {
            "checkpoints": list(checkpoints), "dataset_dir": dataset_dir,
            "part": part})
    return {"part": part, "samples": len(samples), "results": results,
            "output_dir": output_dir}


def run_fit(spectra_csv: str, index_csv: str, output_dir: str | None = None,
            d_min_nm: float = 10.0, d_max_nm: float = 2010.0, step_nm: float = 1.0,
            r_weight: float = 1.0, t_weight: float = 1.0,
            substrate_n: float = 1.52, substrate_k: float = 0.0,
            coherent: bool = False, single_thread: bool = True,
            request: dict | None = None) -> dict:
    """ML-free thickness recovery by exhaustive forward-model search."""
    grid = WavelengthGrid.canonical()
    measured = load_spectra_csv(spectra_csv, grid)
    index = load_index_csv(index_csv, grid)
    substrate = SubstrateConfig(index_n=substrate_n, index_k=substrate_k,
                                coherent=coherent)
    with _threading(single_thread):
        fit = grid_search_thickness(measured, index, substrate,
                                    d_min_nm=d_min_nm, d_max_nm=d_max_nm,
                                    step_nm=step_nm, r_weight=r_weight,
                                    t_weight=t_weight)
    curve_csv = None
    if output_dir:
        _ensure_dir(output_dir)
        curve_csv = os.path.join(output_dir, "fit_curve.csv")
        write_table(curve_csv, ["candidate_d_nm", "residual_rms"],
                    list(zip(fit.candidates_nm, fit.residual_curve)))
        _write_provenance(output_dir, "fit", request or {
            "spectra_csv": spectra_csv, "index_csv": index_csv})
    return {"best_d_nm": fit.best_d_nm, "residual_rms": fit.residual_rms,
            "candidates": int(fit.candidates_nm.size), "curve_csv": curve_csv}


def run_activations(checkpoint: str, spectra_csv: str, output_dir: str,
                    filters_per_layer: int = 10, seed: int = 0,
                    single_thread: bool = True, request: dict | None = None) -> dict:
    """Export per-stage activation maps of seed-selected filters as CSVs."""
    weights = load_checkpoint(checkpoint)
    grid = WavelengthGrid.canonical()
    _require_grid_match(weights.config, grid)
    spectra = load_spectra_csv(spectra_csv, grid)
    sample = np.column_stack([spectra.R, spectra.T])
    with _threading(single_thread):
        maps = activation_maps(weights, sample, filters_per_layer, seed)
    _ensure_dir(output_dir)
    paths = write_activation_maps(output_dir, maps)
    _write_provenance(output_dir, "activations", request or {
        "checkpoint": checkpoint, "spectra_csv": spectra_csv, "seed": seed})
    return {
        "output_dir": output_dir,
        "files": paths,
        "stages": [{"stage": m.stage, "filters": [int(f) for f in m.filter_ids],
                    "length": int(m.maps.shape[1])} for m in maps],
    }
