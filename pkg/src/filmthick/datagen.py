"""Simulated dataset construction.

A source dataset pairs randomly drawn oscillator-grid materials with uniform
random thicknesses and forward-simulates (R, T) for each pair.  Target datasets
do the same for externally supplied or pseudo-generated (n, k) spectra.  All
randomness is derived from explicit seeds: material draws from the master seed,
thickness draws from per-(material, draw) child sequences, so datasets are
reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import THICKNESS_MIN_NM, THICKNESS_SPAN_NM
from . import fileio
from .dispersion import (
    ParameterGridSpec,
    RefractiveIndexSpectrum,
    TaucLorentzParams,
    WavelengthGrid,
    evaluate_spectrum,
    multi_oscillator_spectrum,
)
from .errors import DataFormatError, InvalidParameterError
from .optics import OpticalSpectra, SubstrateConfig, film_rt_batch


@dataclass(frozen=True)
class SplitSpec:
    """Material and thickness-draw counts for the three dataset splits."""

    train_materials: int = 702
    validation_materials: int = 302
    test_materials: int = 112
    draws_train: int = 10
    draws_validation: int = 10
    draws_test: int = 50
    seed: int = 0

    def __post_init__(self):
        counts = (self.train_materials, self.validation_materials, self.test_materials,
                  self.draws_train, self.draws_validation, self.draws_test)
        if any(int(c) != c or c < 0 for c in counts):
            raise InvalidParameterError(f"split counts must be non-negative integers: {counts}")

    @property
    def total_materials(self) -> int:
        return self.train_materials + self.validation_materials + self.test_materials

    def to_dict(self) -> dict:
        return {
            "train_materials": self.train_materials,
            "validation_materials": self.validation_materials,
            "test_materials": self.test_materials,
            "draws_train": self.draws_train,
            "draws_validation": self.draws_validation,
            "draws_test": self.draws_test,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SplitSpec":
        return cls(**{key: int(data[key]) for key in cls().to_dict()})


@dataclass
class Sample:
    """One simulated measurement: spectra plus ground truth."""

    material_id: int
    thickness_nm: float
    spectra: OpticalSpectra
    index: RefractiveIndexSpectrum


@dataclass
class DatasetSplit:
    """Train/validation/test sample lists plus generation provenance."""

    grid: WavelengthGrid
    train: list = field(default_factory=list)
    validation: list = field(default_factory=list)
    test: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def part(self, name: str) -> list:
        if name not in ("train", "validation", "test"):
            raise InvalidParameterError(f"unknown split part '{name}'")
        return getattr(self, name)


def draw_thicknesses(master_seed: int, material_id: int, count: int) -> np.ndarray:
    """Uniform thickness draws from the per-(material, draw) child streams."""
    values = np.empty(count)
    for draw in range(count):
        rng = np.random.default_rng(np.random.SeedSequence((master_seed, material_id, draw)))
        values[draw] = THICKNESS_MIN_NM + THICKNESS_SPAN_NM * rng.random()
    return values


def _simulate_material(material_id: int, index: RefractiveIndexSpectrum,
                       draws: int, seed: int, substrate: SubstrateConfig) -> list:
    thicknesses = draw_thicknesses(seed, material_id, draws)
    big_r, big_t = film_rt_batch(index, thicknesses, substrate)
    return [Sample(material_id, float(thicknesses[i]),
                   OpticalSpectra(index.grid, big_r[i], big_t[i]), index)
            for i in range(draws)]


def build_source_dataset(split_spec: SplitSpec = SplitSpec(),
                         grid_spec: ParameterGridSpec = ParameterGridSpec(),
                         substrate: SubstrateConfig = SubstrateConfig(),
                         grid: WavelengthGrid = WavelengthGrid.canonical(),
                         sample_seed: int | None = None) -> DatasetSplit:
    """Simulate the oscillator-grid source corpus.

    Materials are drawn once in randomized order and partitioned front to back
    into train/validation/test, so splits never share a material.
    """
    from .dispersion import sample_parameter_grid

    seed = split_spec.seed if sample_seed is None else sample_seed
    params = sample_parameter_grid(grid_spec, split_spec.total_materials, seed)
    boundaries = (split_spec.train_materials,
                  split_spec.train_materials + split_spec.validation_materials)
    parts = {"train": [], "validation": [], "test": []}
    part_params = {"train": [], "validation": [], "test": []}
    for material_id, material in enumerate(params):
        if material_id < boundaries[0]:
            part, draws = "train", split_spec.draws_train
        elif material_id < boundaries[1]:
            part, draws = "validation", split_spec.draws_validation
        else:
            part, draws = "test", split_spec.draws_test
        index = evaluate_spectrum(material, grid)
        parts[part].extend(_simulate_material(material_id, index, draws, seed, substrate))
        part_params[part].append({"material_id": material_id, **material.to_dict()})

    provenance = {
        "kind": "source",
        "seed": seed,
        "grid": grid.to_dict(),
        "split": split_spec.to_dict(),
        "parameter_grid": grid_spec.to_dict(),
        "substrate": substrate.to_dict(),
        "materials": part_params,
        "draws": {"train": split_spec.draws_train,
                  "validation": split_spec.draws_validation,
                  "test": split_spec.draws_test},
    }
    return DatasetSplit(grid, parts["train"], parts["validation"], parts["test"], provenance)


def build_target_dataset(spectra: list, train_count: int, seed: int,
                         draws_train: int = 10, draws_test: int = 50,
                         substrate: SubstrateConfig = SubstrateConfig()) -> DatasetSplit:
    """Split real or pseudo target materials and simulate their spectra.

    `spectra` is a list of RefractiveIndexSpectrum; material ids are positions
    in that list.  A permutation under `seed` assigns the first `train_count`
    shuffled materials to train and the rest to test (no validation part).
    """
    if not spectra:
        raise InvalidParameterError("target dataset needs at least one spectrum")
    if not 0 <= train_count <= len(spectra):
        raise InvalidParameterError(
            f"train_count {train_count} outside [0, {len(spectra)}]")
    grid = spectra[0].grid
    for spectrum in spectra:
        if spectrum.grid != grid:
            raise InvalidParameterError("all target spectra must share one grid")

    order = np.random.default_rng(seed).permutation(len(spectra))
    train_ids = [int(i) for i in order[:train_count]]
    test_ids = [int(i) for i in order[train_count:]]
    parts = {"train": [], "test": []}
    for part, ids, draws in (("train", train_ids, draws_train),
                             ("test", test_ids, draws_test)):
        for material_id in ids:
            parts[part].extend(_simulate_material(material_id, spectra[material_id],
                                                  draws, seed, substrate))
    provenance = {
        "kind": "target",
        "seed": seed,
        "grid": grid.to_dict(),
        "substrate": substrate.to_dict(),
        "materials": {"train": [{"material_id": i} for i in train_ids],
                      "validation": [],
                      "test": [{"material_id": i} for i in test_ids]},
        "draws": {"train": draws_train, "validation": 0, "test": draws_test},
    }
    return DatasetSplit(grid, parts["train"], [], parts["test"], provenance)


def pseudo_target_spectra(count: int, seed: int,
                          grid: WavelengthGrid = WavelengthGrid.canonical()):
    """Two-oscillator materials lying off the single-oscillator source grid.

    Both oscillators share one band gap; the second adds a higher-energy
    transition, giving absorption structure a single oscillator cannot produce.
    Returns (spectra, oscillator parameter dicts).
    """
    spectra = []
    materials = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        band_gap = rng.uniform(1.2, 2.5)
        while True:
            amplitude = rng.uniform(20.0, 150.0)
            broadening = rng.uniform(0.8, 4.0)
            peak = rng.uniform(band_gap + 0.2, 5.0)
            if peak * peak > broadening * broadening / 2.0:
                first = TaucLorentzParams(amplitude, broadening, peak, band_gap, 1.0)
                break
        second = TaucLorentzParams(rng.uniform(10.0, 100.0), rng.uniform(1.0, 5.0),
                                   rng.uniform(4.0, 8.0), band_gap, 1.0)
        spectra.append(multi_oscillator_spectrum([first, second], grid, eps_inf=1.0))
        materials.append({"oscillators": [first.to_dict(), second.to_dict()],
                          "eps_inf": 1.0})
    return spectra, materials


def load_target_spectra(paths, grid: WavelengthGrid = WavelengthGrid.canonical()):
    """Load (n, k) CSVs, resample onto the grid, clamp round-off negatives."""
    spectra = []
    for path in paths:
        lam, n, k = fileio.read_index_table(path)
        n_grid = fileio.resample_to_grid(lam, n, grid, label=str(path))
        k_grid = fileio.resample_to_grid(lam, k, grid, label=str(path))
        if np.any(n_grid < -1e-6) or np.any(k_grid < -1e-6):
            raise DataFormatError(f"{path}: negative refractive index values")
        spectra.append(RefractiveIndexSpectrum(grid, np.maximum(n_grid, 0.0),
                                               np.maximum(k_grid, 0.0)))
    return spectra


def normalize_thickness(thickness_nm):
    """Map [THICKNESS_MIN_NM, THICKNESS_MAX_NM] onto [0, 1] for regression."""
    return (np.asarray(thickness_nm, dtype=np.float64) - THICKNESS_MIN_NM) / THICKNESS_SPAN_NM


def denormalize_thickness(value):
    return np.asarray(value, dtype=np.float64) * THICKNESS_SPAN_NM + THICKNESS_MIN_NM


def samples_to_arrays(samples: list, multitask: bool = False, dtype=np.float64):
    """Stack samples into network tensors.

    Returns (inputs, targets): inputs shaped (N, grid, 2) with channel 0 = R and
    channel 1 = T; targets maps 'd' to normalized thickness and, for multitask
    training, 'n' and 'k' to the index curves.
    """
    if not samples:
        raise InvalidParameterError("cannot build arrays from an empty sample list")
    count = len(samples)
    grid_count = samples[0].spectra.grid.count
    inputs = np.empty((count, grid_count, 2), dtype=dtype)
    thickness = np.empty(count)
    for i, sample in enumerate(samples):
        inputs[i, :, 0] = sample.spectra.R
        inputs[i, :, 1] = sample.spectra.T
        thickness[i] = sample.thickness_nm
    targets = {"d": normalize_thickness(thickness).astype(dtype)}
    if multitask:
        targets["n"] = np.stack([s.index.n for s in samples]).astype(dtype)
        targets["k"] = np.stack([s.index.k for s in samples]).astype(dtype)
    return inputs, targets


def write_dataset(directory, split: DatasetSplit) -> dict:
    """Persist a dataset split directory; returns the file paths written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for part in ("train", "validation", "test"):
        samples = split.part(part)
        path = directory / f"{part}.bin"
        thickness = np.array([s.thickness_nm for s in samples])
        stack = lambda get: (np.stack([get(s) for s in samples])
                             if samples else np.zeros((0, split.grid.count)))
        fileio.write_dataset_file(path, thickness,
                                  stack(lambda s: s.spectra.R),
                                  stack(lambda s: s.spectra.T),
                                  stack(lambda s: s.index.n),
                                  stack(lambda s: s.index.k))
        paths[part] = str(path)
    manifest = dict(split.provenance)
    manifest["counts"] = {part: len(split.part(part))
                          for part in ("train", "validation", "test")}
    fileio.write_json(directory / "manifest.json", manifest)
    paths["manifest"] = str(directory / "manifest.json")
    return paths


def read_dataset(directory) -> DatasetSplit:
    """Load a dataset directory back into sample lists."""
    directory = Path(directory)
    manifest = fileio.read_json(directory / "manifest.json")
    grid = WavelengthGrid.from_dict(manifest["grid"])
    split = DatasetSplit(grid, provenance=manifest)
    for part in ("train", "validation", "test"):
        thickness, big_r, big_t, n, k = fileio.read_dataset_file(directory / f"{part}.bin")
        if thickness.shape[0] != manifest["counts"][part]:
            raise DataFormatError(
                f"{directory}/{part}.bin holds {thickness.shape[0]} samples, "
                f"manifest says {manifest['counts'][part]}")
        draws = manifest["draws"][part]
        ids = [m["material_id"] for m in manifest["materials"][part]]
        samples = split.part(part)
        for i in range(thickness.shape[0]):
            material_id = ids[i // draws] if draws else -1
            samples.append(Sample(material_id, float(thickness[i]),
                                  OpticalSpectra(grid, big_r[i], big_t[i]),
                                  RefractiveIndexSpectrum(grid, n[i], k[i])))
    return split
