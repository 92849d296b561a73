"""Tauc-Lorentz dispersion synthesis.

A single Tauc-Lorentz oscillator has an imaginary dielectric part that is zero
below the band gap and a Lorentzian-damped Tauc edge above it.  The real part
is the closed-form Kramers-Kronig transform of that edge, so the synthesized
(n, k) pairs are causal by construction.  This module provides the oscillator
parameters, the dielectric evaluation, the canonical wavelength grid, and the
sampling of oscillator parameter grids used to build training corpora.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import HC_EV_NM
from .errors import InvalidParameterError

# Floor for |E - Eg| inside logarithms.  The two log terms of the real part
# diverge individually at E == Eg but their sum stays finite; the floor only
# matters when an evaluation energy hits the gap exactly.
_LOG_FLOOR = 1e-300


def photon_energy(wavelength_nm):
    """Convert wavelength in nm to photon energy in eV."""
    lam = np.asarray(wavelength_nm, dtype=np.float64)
    if np.any(lam <= 0.0):
        raise InvalidParameterError("wavelength must be positive")
    energy = HC_EV_NM / lam
    return float(energy) if np.isscalar(wavelength_nm) else energy


@dataclass(frozen=True)
class TaucLorentzParams:
    """One Tauc-Lorentz oscillator.

    amplitude    transition strength (eV)
    broadening   damping width (eV)
    peak_energy  resonance energy of the transition (eV)
    band_gap     absorption onset (eV)
    eps_inf      constant dielectric background added to the real part
    """

    amplitude: float
    broadening: float
    peak_energy: float
    band_gap: float
    eps_inf: float = 1.0

    def __post_init__(self):
        for name in ("amplitude", "broadening", "peak_energy", "band_gap"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidParameterError(f"{name} must be finite and positive, got {value}")
        if not (math.isfinite(self.eps_inf) and self.eps_inf >= 0.0):
            raise InvalidParameterError(f"eps_inf must be finite and non-negative, got {self.eps_inf}")
        # Validity of the closed-form real part: gamma^2 = E0^2 - C^2/2 > 0.
        # This also keeps alpha = sqrt(4 E0^2 - C^2) real.
        if self.peak_energy ** 2 <= self.broadening ** 2 / 2.0:
            raise InvalidParameterError(
                "oscillator outside validity domain: require peak_energy^2 > broadening^2 / 2, "
                f"got peak_energy={self.peak_energy}, broadening={self.broadening}"
            )

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "broadening": self.broadening,
            "peak_energy": self.peak_energy,
            "band_gap": self.band_gap,
            "eps_inf": self.eps_inf,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaucLorentzParams":
        return cls(**{key: float(data[key]) for key in
                      ("amplitude", "broadening", "peak_energy", "band_gap", "eps_inf")})


@dataclass(frozen=True)
class AuxiliaryTerms:
    """Intermediate quantities of the closed-form real dielectric part."""

    alpha: float
    gamma_sq: float
    zeta4: np.ndarray
    a_ln: np.ndarray
    a_atan: np.ndarray


@dataclass(frozen=True)
class DielectricPoint:
    """Complex dielectric function at a single photon energy."""

    energy_ev: float
    eps_r: float
    eps_i: float


def auxiliary_terms(params: TaucLorentzParams, energy_ev) -> AuxiliaryTerms:
    """Evaluate the auxiliary quantities alpha, gamma^2, zeta^4, a_ln, a_atan."""
    e2 = np.asarray(energy_ev, dtype=np.float64) ** 2
    c2 = params.broadening ** 2
    p2 = params.peak_energy ** 2
    g2 = params.band_gap ** 2
    alpha = math.sqrt(4.0 * p2 - c2)
    gamma_sq = p2 - c2 / 2.0
    zeta4 = (e2 - gamma_sq) ** 2 + alpha * alpha * c2 / 4.0
    a_ln = (g2 - p2) * e2 + g2 * c2 - p2 * (p2 + 3.0 * g2)
    a_atan = (e2 - p2) * (p2 + g2) + g2 * c2
    return AuxiliaryTerms(alpha, gamma_sq, zeta4, a_ln, a_atan)


def imaginary_dielectric(params: TaucLorentzParams, energy_ev) -> np.ndarray:
    """Tauc-Lorentz eps_i: zero at and below the gap, damped Tauc edge above."""
    e = np.atleast_1d(np.asarray(energy_ev, dtype=np.float64))
    if np.any(e <= 0.0):
        raise InvalidParameterError("photon energy must be positive")
    e2 = e * e
    p2 = params.peak_energy ** 2
    numerator = (params.amplitude * params.peak_energy * params.broadening
                 * (e - params.band_gap) ** 2)
    denominator = ((e2 - p2) ** 2 + params.broadening ** 2 * e2) * e
    return np.where(e > params.band_gap, numerator / denominator, 0.0)


def real_dielectric(params: TaucLorentzParams, energy_ev) -> np.ndarray:
    """Closed-form Kramers-Kronig transform of the Tauc-Lorentz eps_i."""
    e = np.atleast_1d(np.asarray(energy_ev, dtype=np.float64))
    if np.any(e <= 0.0):
        raise InvalidParameterError("photon energy must be positive")
    a = params.amplitude
    c = params.broadening
    e0 = params.peak_energy
    eg = params.band_gap
    aux = auxiliary_terms(params, e)
    alpha, zeta4 = aux.alpha, aux.zeta4
    p2, g2, e2 = e0 * e0, eg * eg, e * e
    pi = math.pi

    atan_plus = math.atan((alpha + 2.0 * eg) / c)
    atan_minus = math.atan((alpha - 2.0 * eg) / c)
    term_ln = (a * c * aux.a_ln) / (2.0 * pi * zeta4 * alpha * e0) * np.log(
        (p2 + g2 + alpha * eg) / (p2 + g2 - alpha * eg))
    term_atan = -(a * aux.a_atan) / (pi * zeta4 * e0) * (pi - atan_plus + atan_minus)
    term_gamma = (4.0 * a * e0 * eg * (e2 - aux.gamma_sq)) / (pi * zeta4 * alpha) * (
        atan_plus + atan_minus)
    gap = np.maximum(np.abs(e - eg), _LOG_FLOOR)
    term_edge = -(a * e0 * c * (e2 + g2)) / (pi * zeta4 * e) * np.log(gap / (e + eg))
    term_gap = (2.0 * a * e0 * c * eg) / (pi * zeta4) * np.log(
        gap * (e + eg) / math.sqrt((p2 - g2) ** 2 + g2 * c * c))
    return params.eps_inf + term_ln + term_atan + term_gamma + term_edge + term_gap


def dielectric_function(params: TaucLorentzParams, energy_ev):
    """Return (eps_r, eps_i) arrays over the given photon energies."""
    return real_dielectric(params, energy_ev), imaginary_dielectric(params, energy_ev)


def dielectric_at_energy(params: TaucLorentzParams, energy_ev: float) -> DielectricPoint:
    """Evaluate the complex dielectric function at one photon energy."""
    eps_r, eps_i = dielectric_function(params, float(energy_ev))
    return DielectricPoint(float(energy_ev), float(eps_r[0]), float(eps_i[0]))


def refractive_index(eps_r, eps_i):
    """Convert the complex dielectric function to (n, k).

    n = sqrt((|eps| + eps_r) / 2), k = sqrt((|eps| - eps_r) / 2).  Both radicands
    are non-negative analytically; max() guards round-off.
    """
    eps_r = np.asarray(eps_r, dtype=np.float64)
    eps_i = np.asarray(eps_i, dtype=np.float64)
    modulus = np.hypot(eps_r, eps_i)
    n = np.sqrt(np.maximum(modulus + eps_r, 0.0) / 2.0)
    k = np.sqrt(np.maximum(modulus - eps_r, 0.0) / 2.0)
    return n, k


@dataclass(frozen=True)
class WavelengthGrid:
    """Uniform wavelength grid in nm, endpoints inclusive."""

    start_nm: float = 350.0
    stop_nm: float = 1000.0
    step_nm: float = 1.0

    def __post_init__(self):
        if self.start_nm <= 0.0 or self.stop_nm <= self.start_nm or self.step_nm <= 0.0:
            raise InvalidParameterError(
                f"invalid wavelength grid [{self.start_nm}, {self.stop_nm}] step {self.step_nm}")
        span = (self.stop_nm - self.start_nm) / self.step_nm
        if abs(span - round(span)) > 1e-9:
            raise InvalidParameterError("grid span must be an integer number of steps")

    @classmethod
    def canonical(cls) -> "WavelengthGrid":
        return cls(350.0, 1000.0, 1.0)

    @property
    def count(self) -> int:
        return int(round((self.stop_nm - self.start_nm) / self.step_nm)) + 1

    def wavelengths(self) -> np.ndarray:
        return np.linspace(self.start_nm, self.stop_nm, self.count)

    def energies(self) -> np.ndarray:
        return HC_EV_NM / self.wavelengths()

    def to_dict(self) -> dict:
        return {"start_nm": self.start_nm, "stop_nm": self.stop_nm, "step_nm": self.step_nm}

    @classmethod
    def from_dict(cls, data: dict) -> "WavelengthGrid":
        return cls(float(data["start_nm"]), float(data["stop_nm"]), float(data["step_nm"]))


@dataclass(frozen=True)
class RefractiveIndexSpectrum:
    """(n, k) sampled on a wavelength grid."""

    grid: WavelengthGrid
    n: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n, dtype=np.float64)
        k = np.asarray(self.k, dtype=np.float64)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        if n.shape != (self.grid.count,) or k.shape != (self.grid.count,):
            raise InvalidParameterError(
                f"spectrum length mismatch: grid has {self.grid.count} points, "
                f"got n{n.shape}, k{k.shape}")
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(k))):
            raise InvalidParameterError("spectrum contains non-finite values")
        if np.any(n < 0.0) or np.any(k < 0.0):
            raise InvalidParameterError("refractive index components must be non-negative")

    def complex_index(self) -> np.ndarray:
        return self.n + 1j * self.k


def evaluate_spectrum(params: TaucLorentzParams, grid: WavelengthGrid) -> RefractiveIndexSpectrum:
    """Synthesize the (n, k) spectrum of one oscillator on a wavelength grid."""
    eps_r, eps_i = dielectric_function(params, grid.energies())
    n, k = refractive_index(eps_r, eps_i)
    return RefractiveIndexSpectrum(grid, n, k)


def multi_oscillator_spectrum(oscillators, grid: WavelengthGrid,
                              eps_inf: float = 1.0) -> RefractiveIndexSpectrum:
    """Synthesize (n, k) for a sum of oscillators sharing one eps_inf.

    Each oscillator contributes its eps_i and its KK real part with the
    oscillator's own background subtracted, so the constant background enters
    exactly once.
    """
    energies = grid.energies()
    eps_r = np.full(grid.count, float(eps_inf))
    eps_i = np.zeros(grid.count)
    for osc in oscillators:
        eps_r += real_dielectric(osc, energies) - osc.eps_inf
        eps_i += imaginary_dielectric(osc, energies)
    n, k = refractive_index(eps_r, eps_i)
    return RefractiveIndexSpectrum(grid, n, k)


@dataclass(frozen=True)
class ParameterGridSpec:
    """Uniform node grid over the four oscillator parameters.

    Each axis is (min, max, node_count); nodes are linspace values.  eps_inf is
    held fixed across the grid.
    """

    amplitude: tuple = (10.0, 200.0, 11)
    broadening: tuple = (0.5, 10.0, 10)
    peak_energy: tuple = (1.0, 10.0, 10)
    band_gap: tuple = (1.0, 5.0, 10)
    eps_inf: float = 1.0

    def axis_values(self, name: str) -> np.ndarray:
        lo, hi, count = getattr(self, name)
        return np.linspace(float(lo), float(hi), int(count))

    def valid_nodes(self) -> list[TaucLorentzParams]:
        """All nodes passing the validity filter, in lexicographic axis order."""
        nodes = []
        for a in self.axis_values("amplitude"):
            for c in self.axis_values("broadening"):
                for e0 in self.axis_values("peak_energy"):
                    if e0 * e0 <= c * c / 2.0:
                        continue
                    for eg in self.axis_values("band_gap"):
                        nodes.append(TaucLorentzParams(float(a), float(c), float(e0),
                                                       float(eg), self.eps_inf))
        return nodes

    def to_dict(self) -> dict:
        return {
            "amplitude": list(self.amplitude),
            "broadening": list(self.broadening),
            "peak_energy": list(self.peak_energy),
            "band_gap": list(self.band_gap),
            "eps_inf": self.eps_inf,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParameterGridSpec":
        def axis(values):
            return (float(values[0]), float(values[1]), int(values[2]))
        return cls(axis(data["amplitude"]), axis(data["broadening"]),
                   axis(data["peak_energy"]), axis(data["band_gap"]),
                   float(data["eps_inf"]))


def sample_parameter_grid(grid_spec: ParameterGridSpec, count: int,
                          seed: int) -> list[TaucLorentzParams]:
    """Draw `count` distinct valid nodes, in randomized order.

    The draw order is part of the contract: downstream splits partition the
    returned list front to back.
    """
    nodes = grid_spec.valid_nodes()
    if count > len(nodes):
        raise InvalidParameterError(
            f"requested {count} materials but the grid has only {len(nodes)} valid nodes")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(nodes), size=count, replace=False)
    return [nodes[i] for i in chosen]
