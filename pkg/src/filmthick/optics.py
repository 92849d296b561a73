"""Transfer-matrix reflection and transmission at normal incidence.

A coherent stack is reduced to a single 2x2 system matrix built from interface
and propagation matrices; intensity coefficients follow from its entries.  The
default film-on-glass geometry treats the millimeter substrate incoherently:
interference in the film is kept, interference across the substrate is averaged
out with the standard multiple-bounce closed form.  A coherent-substrate switch
exists for reproducing fully coherent reference data.

All routines broadcast, so a whole thickness ladder can be evaluated against a
wavelength grid in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import RefractiveIndexSpectrum, WavelengthGrid
from .errors import InvalidParameterError, NumericFailureError

# Saturate attenuation phases: beyond e^300 a film is numerically opaque and
# larger exponents would overflow matrix entries.
_MAX_ATTENUATION = 300.0


@dataclass(frozen=True)
class SubstrateConfig:
    """Thick transparent substrate under the film, bounded by air."""

    index_n: float = 1.52
    index_k: float = 0.0
    thickness_nm: float = 1.0e6
    coherent: bool = False

    def __post_init__(self):
        if self.index_n <= 0.0 or self.index_k < 0.0 or self.thickness_nm <= 0.0:
            raise InvalidParameterError(
                f"invalid substrate: n={self.index_n}, k={self.index_k}, "
                f"thickness={self.thickness_nm}")

    @property
    def index(self) -> complex:
        return complex(self.index_n, self.index_k)

    def to_dict(self) -> dict:
        return {"index_n": self.index_n, "index_k": self.index_k,
                "thickness_nm": self.thickness_nm, "coherent": self.coherent}

    @classmethod
    def from_dict(cls, data: dict) -> "SubstrateConfig":
        return cls(float(data["index_n"]), float(data["index_k"]),
                   float(data["thickness_nm"]), bool(data["coherent"]))


@dataclass(frozen=True)
class OpticalSpectra:
    """Reflectance and transmittance sampled on a wavelength grid."""

    grid: WavelengthGrid
    R: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.R, dtype=np.float64)
        t = np.asarray(self.T, dtype=np.float64)
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "T", t)
        if r.shape != (self.grid.count,) or t.shape != (self.grid.count,):
            raise InvalidParameterError(
                f"spectra length mismatch: grid has {self.grid.count} points, "
                f"got R{r.shape}, T{t.shape}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise NumericFailureError("optical spectra contain non-finite values")
        slack = 1e-9
        if (np.any(r < -slack) or np.any(t < -slack)
                or np.any(r > 1.0 + slack) or np.any(t > 1.0 + slack)
                or np.any(r + t > 1.0 + slack)):
            raise InvalidParameterError(
                "optical spectra must satisfy 0 <= R, T and R + T <= 1")

    @classmethod
    def from_measured(cls, grid: WavelengthGrid, r, t) -> "OpticalSpectra":
        """Build from measured data, clipping small out-of-range excursions."""
        r = np.clip(np.asarray(r, dtype=np.float64), 0.0, 1.0)
        t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
        total = r + t
        excess = total > 1.0
        if np.any(excess):
            scale = np.where(excess, 1.0 / total, 1.0)
            r = r * scale
            t = t * scale
        return cls(grid, r, t)


def _apply_interface(m, n_from, n_to):
    """Right-multiply the running system matrix by one interface matrix."""
    r = (n_from - n_to) / (n_from + n_to)
    t = 2.0 * n_from / (n_from + n_to)
    m00, m01, m10, m11 = m
    return ((m00 + m01 * r) / t, (m00 * r + m01) / t,
            (m10 + m11 * r) / t, (m10 * r + m11) / t)


def _apply_propagation(m, index, thickness_nm, wavelength_nm):
    """Right-multiply by the propagation matrix of one coherent layer."""
    delta = 2.0 * math.pi * index * thickness_nm / wavelength_nm
    delta = delta.real + 1j * np.minimum(delta.imag, _MAX_ATTENUATION)
    forward = np.exp(-1j * delta)
    backward = np.exp(1j * delta)
    m00, m01, m10, m11 = m
    return (m00 * forward, m01 * backward, m10 * forward, m11 * backward)


def coherent_amplitudes(n_inc, layers, n_exit, wavelength_nm):
    """Complex (r, t) of a coherent stack; inputs broadcast elementwise.

    `layers` is a sequence of (complex_index, thickness_nm) pairs ordered from
    the incidence side.  Forward amplitudes carry exp(-i*delta), so absorbing
    layers (k >= 0) attenuate.
    """
    lam = np.asarray(wavelength_nm, dtype=np.float64)
    media = [np.asarray(n_inc, dtype=np.complex128)]
    for index, _ in layers:
        media.append(np.asarray(index, dtype=np.complex128))
    media.append(np.asarray(n_exit, dtype=np.complex128))
    shape = np.broadcast_shapes(lam.shape, *(m.shape for m in media),
                                *(np.shape(d) for _, d in layers))
    m = (np.ones(shape, dtype=np.complex128), np.zeros(shape, dtype=np.complex128),
         np.zeros(shape, dtype=np.complex128), np.ones(shape, dtype=np.complex128))
    m = _apply_interface(m, media[0], media[1])
    for j, (_, thickness) in enumerate(layers):
        m = _apply_propagation(m, media[j + 1], np.asarray(thickness, dtype=np.float64), lam)
        m = _apply_interface(m, media[j + 1], media[j + 2])
    r = m[2] / m[0]
    with np.errstate(under="ignore"):
        t = 1.0 / m[0]
    return r, t


def coherent_rt(n_inc, layers, n_exit, wavelength_nm):
    """Intensity (R, T) of a coherent stack at normal incidence."""
    r, t = coherent_amplitudes(n_inc, layers, n_exit, wavelength_nm)
    n_inc = np.asarray(n_inc, dtype=np.complex128)
    n_exit = np.asarray(n_exit, dtype=np.complex128)
    big_r = np.abs(r) ** 2
    with np.errstate(under="ignore"):
        big_t = (n_exit.real / n_inc.real) * np.abs(t) ** 2
    return big_r, big_t


def fresnel_reflectance(n_from, n_to) -> float:
    """Intensity reflectance of a single interface at normal incidence."""
    return float(abs((n_from - n_to) / (n_from + n_to)) ** 2)


def film_rt_batch(film: RefractiveIndexSpectrum, thickness_nm,
                  substrate: SubstrateConfig = SubstrateConfig()):
    """(R, T) of film-on-substrate for a vector of thicknesses.

    Returns arrays shaped (len(thickness_nm), grid.count).
    """
    thickness = np.asarray(thickness_nm, dtype=np.float64).reshape(-1, 1)
    if np.any(thickness < 0.0):
        raise InvalidParameterError("film thickness must be non-negative")
    lam = film.grid.wavelengths()
    n_film = film.complex_index()
    n_sub = substrate.index

    if substrate.coherent:
        layers = [(n_film, thickness), (n_sub, substrate.thickness_nm)]
        return coherent_rt(1.0, layers, 1.0, lam)

    # Incoherent substrate: coherent film sub-stack from both sides, then the
    # standard multiple-bounce average across the substrate.
    big_r1, big_t1 = coherent_rt(1.0, [(n_film, thickness)], n_sub, lam)
    big_r1b, big_t1b = coherent_rt(n_sub, [(n_film, thickness)], 1.0, lam)
    big_r2 = fresnel_reflectance(n_sub, 1.0)
    big_t2 = 1.0 - big_r2
    with np.errstate(under="ignore"):
        tau = np.exp(-4.0 * math.pi * substrate.index_k * substrate.thickness_nm / lam)
    denom = 1.0 - big_r1b * big_r2 * tau * tau
    big_t = big_t1 * tau * big_t2 / denom
    big_r = big_r1 + big_t1 * big_t1b * big_r2 * tau * tau / denom
    return big_r, big_t


def film_on_substrate_rt(film: RefractiveIndexSpectrum, thickness_nm: float,
                         substrate: SubstrateConfig = SubstrateConfig()) -> OpticalSpectra:
    """(R, T) spectra of one film thickness on the substrate."""
    big_r, big_t = film_rt_batch(film, [float(thickness_nm)], substrate)
    return OpticalSpectra(film.grid, big_r[0], big_t[0])


def reconstruct_spectra(thickness_nm: float, index: RefractiveIndexSpectrum,
                        substrate: SubstrateConfig = SubstrateConfig()) -> OpticalSpectra:
    """Forward-simulate (R, T) from a thickness and an (n, k) spectrum."""
    return film_on_substrate_rt(index, thickness_nm, substrate)
