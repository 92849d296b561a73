"""Exhaustive thickness recovery against the forward optics model.

Given measured (R, T) spectra and a known refractive-index spectrum, every
candidate thickness on a 1 nm lattice is forward-simulated and scored by the
RMS residual over the concatenated R and T curves.  No learning is involved;
this is the verification baseline for the regressor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import RefractiveIndexSpectrum
from .errors import GridMismatchError, InvalidParameterError
from .optics import OpticalSpectra, SubstrateConfig, film_rt_batch


@dataclass(frozen=True)
class FitResult:
    """Best thickness plus the full residual curve over the candidate lattice."""

    best_d_nm: float
    residual_rms: float
    candidates_nm: np.ndarray
    residual_curve: np.ndarray

    def __post_init__(self):
        if self.candidates_nm.shape != self.residual_curve.shape:
            raise InvalidParameterError("candidate and residual arrays must align")


def best_index(residuals) -> int:
    """Index of the smallest residual; ties resolve to the lowest index."""
    residuals = np.asarray(residuals)
    if residuals.size == 0:
        raise InvalidParameterError("empty residual curve")
    if not np.all(np.isfinite(residuals)):
        raise InvalidParameterError("residual curve contains non-finite values")
    return int(np.argmin(residuals))


def grid_search_thickness(measured: OpticalSpectra,
                          index: RefractiveIndexSpectrum,
                          substrate: SubstrateConfig | None = None,
                          d_min_nm: float = 10.0,
                          d_max_nm: float = 2010.0,
                          step_nm: float = 1.0,
                          r_weight: float = 1.0,
                          t_weight: float = 1.0) -> FitResult:
    """Recover film thickness by scanning d over [d_min_nm, d_max_nm].

    The residual at each candidate is the weighted RMS over both spectra:
    sqrt((w_r * sum dR^2 + w_t * sum dT^2) / ((w_r + w_t) * L)).  With equal
    weights this is the plain RMS of the concatenated R and T residuals.
    Candidates ascend, so equal residuals resolve toward smaller d.
    """
    if substrate is None:
        substrate = SubstrateConfig()
    if measured.grid != index.grid:
        raise GridMismatchError("measured spectra and index are on different grids")
    if not d_min_nm < d_max_nm:
        raise InvalidParameterError("d_min_nm must be below d_max_nm")
    if step_nm <= 0.0:
        raise InvalidParameterError("step_nm must be positive")
    if r_weight < 0.0 or t_weight < 0.0 or r_weight + t_weight == 0.0:
        raise InvalidParameterError("residual weights must be non-negative and not both zero")

    count = int(np.floor((d_max_nm - d_min_nm) / step_nm + 0.5)) + 1
    candidates = d_min_nm + step_nm * np.arange(count)
    r_sim, t_sim = film_rt_batch(index, candidates, substrate)
    dr = r_sim - measured.R
    dt = t_sim - measured.T
    points = (r_weight + t_weight) * measured.grid.count
    sq = (r_weight * np.sum(dr * dr, axis=1) + t_weight * np.sum(dt * dt, axis=1)) / points
    curve = np.sqrt(sq)
    best = best_index(curve)
    return FitResult(best_d_nm=float(candidates[best]),
                     residual_rms=float(curve[best]),
                     candidates_nm=candidates,
                     residual_curve=curve)
