"""File formats: spectra CSVs, dataset binaries, JSON sidecars, result tables.

CSV numbers are written with 17 significant digits so float64 values round-trip
exactly.  The dataset binary is a little-endian block format with a magic tag,
counts, and per-sample float64 records; readers validate structure and sizes
and report parse failures with line or byte positions.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .dispersion import RefractiveIndexSpectrum, WavelengthGrid
from .errors import DataFormatError
from .optics import OpticalSpectra

DATASET_MAGIC = b"THKD1\x00"
_FLOAT_FORMAT = ".17g"


def _format_row(values) -> str:
    return ",".join(format(float(v), _FLOAT_FORMAT) for v in values)


def _read_rows(path, expected_header: str, columns: int):
    """Parse a CSV of floats, reporting 1-based line numbers on failure."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    if lines[0].strip() != expected_header:
        raise DataFormatError(
            f"{path}, line 1: expected header '{expected_header}', got '{lines[0].strip()}'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != columns:
            raise DataFormatError(
                f"{path}, line {lineno}: expected {columns} columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise DataFormatError(f"{path}, line {lineno}: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def write_index_csv(path, spectrum: RefractiveIndexSpectrum) -> None:
    lam = spectrum.grid.wavelengths()
    lines = ["wavelength_nm,n,k"]
    lines += [_format_row(row) for row in zip(lam, spectrum.n, spectrum.k)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_index_table(path):
    """Raw (wavelength, n, k) columns of an index CSV, unresampled."""
    rows = _read_rows(path, "wavelength_nm,n,k", 3)
    return rows[:, 0], rows[:, 1], rows[:, 2]


def write_optical_csv(path, spectra: OpticalSpectra) -> None:
    lam = spectra.grid.wavelengths()
    lines = ["wavelength_nm,R,T"]
    lines += [_format_row(row) for row in zip(lam, spectra.R, spectra.T)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_optical_table(path):
    """Raw (wavelength, R, T) columns of an optical CSV, unresampled."""
    rows = _read_rows(path, "wavelength_nm,R,T", 3)
    return rows[:, 0], rows[:, 1], rows[:, 2]


def write_table(path, header: list[str], rows) -> None:
    """Generic results table; floats keep full precision, strings pass through."""
    def cell(value):
        if isinstance(value, str):
            return value
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        return format(float(value), _FLOAT_FORMAT)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc


def write_dataset_file(path, thickness, big_r, big_t, n, k) -> None:
    """Write one dataset split: magic, counts, then per-sample records.

    Record layout per sample: f64 thickness, then f64[grid] blocks R, T, n, k.
    """
    thickness = np.asarray(thickness, dtype=np.float64)
    blocks = [np.asarray(a, dtype=np.float64) for a in (big_r, big_t, n, k)]
    count = thickness.shape[0]
    if blocks[0].ndim != 2:
        raise DataFormatError("dataset blocks must be 2-D (samples, grid)")
    grid_count = blocks[0].shape[1]
    for block in blocks:
        if block.shape != (count, grid_count):
            raise DataFormatError("dataset blocks must share one (samples, grid) shape")
    record = np.empty((count, 1 + 4 * grid_count), dtype="<f8")
    record[:, 0] = thickness
    for i, block in enumerate(blocks):
        record[:, 1 + i * grid_count:1 + (i + 1) * grid_count] = block
    with open(path, "wb") as handle:
        handle.write(DATASET_MAGIC)
        handle.write(struct.pack("<II", count, grid_count))
        handle.write(record.tobytes())


def read_dataset_file(path):
    """Read one dataset split; returns (thickness, R, T, n, k) arrays."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    header_size = len(DATASET_MAGIC) + 8
    if len(raw) < header_size:
        raise DataFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:len(DATASET_MAGIC)] != DATASET_MAGIC:
        raise DataFormatError(f"{path}: bad magic {raw[:len(DATASET_MAGIC)]!r}")
    count, grid_count = struct.unpack_from("<II", raw, len(DATASET_MAGIC))
    expected = header_size + count * (1 + 4 * grid_count) * 8
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: size mismatch, expected {expected} bytes for {count} samples "
            f"on a {grid_count}-point grid, got {len(raw)}")
    record = np.frombuffer(raw, dtype="<f8", offset=header_size)
    record = record.reshape(count, 1 + 4 * grid_count)
    thickness = record[:, 0].copy()
    blocks = [record[:, 1 + i * grid_count:1 + (i + 1) * grid_count].copy()
              for i in range(4)]
    return thickness, blocks[0], blocks[1], blocks[2], blocks[3]


def resample_to_grid(wavelength, values, grid: WavelengthGrid,
                     label: str = "spectrum") -> np.ndarray:
    """Linear interpolation of a tabulated spectrum onto a wavelength grid.

    The table must be strictly increasing in wavelength and cover the grid.
    """
    wavelength = np.asarray(wavelength, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if np.any(np.diff(wavelength) <= 0.0):
        raise DataFormatError(f"{label}: wavelengths must be strictly increasing")
    lam = grid.wavelengths()
    if wavelength[0] > lam[0] + 1e-9 or wavelength[-1] < lam[-1] - 1e-9:
        raise DataFormatError(
            f"{label}: covers [{wavelength[0]}, {wavelength[-1]}] nm but the grid "
            f"needs [{lam[0]}, {lam[-1]}] nm")
    return np.interp(lam, wavelength, values)
