"""Grid-search thickness recovery: exact and near-lattice recovery, residual
definition, tie-breaking, and argument validation."""

import numpy as np
import pytest

from filmthick.datagen import pseudo_target_spectra
from filmthick.dispersion import WavelengthGrid
from filmthick.errors import GridMismatchError, InvalidParameterError
from filmthick.gridfit import FitResult, best_index, grid_search_thickness
from filmthick.optics import SubstrateConfig, film_on_substrate_rt

GRID = WavelengthGrid.canonical()


def material(seed):
    spectra, _ = pseudo_target_spectra(1, seed, GRID)
    return spectra[0]


def simulate(index, d_nm, substrate=None):
    return film_on_substrate_rt(index, d_nm,
                                substrate or SubstrateConfig())


class TestRecovery:
    def test_exact_on_lattice(self):
        index = material(3)
        fit = grid_search_thickness(simulate(index, 500.0), index)
        assert fit.best_d_nm == 500.0
        assert fit.residual_rms < 1e-12

    def test_lower_boundary(self):
        index = material(4)
        fit = grid_search_thickness(simulate(index, 10.0), index)
        assert fit.best_d_nm == 10.0

    def test_upper_boundary(self):
        index = material(4)
        fit = grid_search_thickness(simulate(index, 2010.0), index)
        assert fit.best_d_nm == 2010.0

    def test_off_lattice_within_one_nm(self):
        rng = np.random.default_rng(11)
        for trial in range(15):
            index = material(20 + trial)
            d_true = 10.0 + 2000.0 * rng.random()
            fit = grid_search_thickness(simulate(index, d_true), index)
            assert abs(fit.best_d_nm - d_true) <= 1.0

    def test_coarse_step(self):
        index = material(5)
        fit = grid_search_thickness(simulate(index, 400.0), index,
                                    d_min_nm=100.0, d_max_nm=700.0, step_nm=50.0)
        assert fit.best_d_nm == 400.0
        assert fit.candidates_nm.size == 13

    def test_coherent_substrate_round_trip(self):
        index = material(6)
        substrate = SubstrateConfig(coherent=True)
        measured = simulate(index, 750.0, substrate)
        fit = grid_search_thickness(measured, index, substrate)
        assert fit.best_d_nm == 750.0
        assert fit.residual_rms < 1e-12

    def test_wrong_index_scores_worse(self):
        right = material(7)
        wrong = material(8)
        measured = simulate(right, 600.0)
        fit_right = grid_search_thickness(measured, right)
        fit_wrong = grid_search_thickness(measured, wrong)
        assert fit_right.residual_rms < fit_wrong.residual_rms


class TestResidualDefinition:
    def test_default_lattice(self):
        index = material(9)
        fit = grid_search_thickness(simulate(index, 123.0), index)
        assert fit.candidates_nm.size == 2001
        assert fit.candidates_nm[0] == 10.0
        assert fit.candidates_nm[-1] == 2010.0
        assert fit.residual_curve.shape == fit.candidates_nm.shape

    def test_equal_weights_match_concatenated_rms(self):
        index = material(10)
        measured = simulate(index, 300.0)
        fit = grid_search_thickness(measured, index,
                                    d_min_nm=290.0, d_max_nm=310.0)
        for i, d in enumerate(fit.candidates_nm):
            sim = simulate(index, float(d))
            stacked = np.concatenate([sim.R - measured.R, sim.T - measured.T])
            assert fit.residual_curve[i] == pytest.approx(
                np.sqrt(np.mean(stacked ** 2)), rel=1e-12)

    def test_r_only_weighting(self):
        index = material(12)
        measured = simulate(index, 450.0)
        # Corrupt T; an R-only fit must still recover the thickness.
        broken = type(measured)(measured.grid, measured.R,
                                np.clip(measured.T * 0.5, 0.0, 1.0))
        fit = grid_search_thickness(broken, index, t_weight=0.0)
        assert fit.best_d_nm == 450.0
        sim = simulate(index, 450.0)
        expected = np.sqrt(np.mean((sim.R - measured.R) ** 2))
        assert fit.residual_rms == pytest.approx(expected, abs=1e-15)

    def test_t_only_weighting(self):
        index = material(13)
        measured = simulate(index, 450.0)
        broken = type(measured)(measured.grid,
                                np.clip(measured.R * 0.5, 0.0, 1.0),
                                measured.T)
        fit = grid_search_thickness(broken, index, r_weight=0.0)
        assert fit.best_d_nm == 450.0


class TestBestIndex:
    def test_tie_takes_first(self):
        assert best_index([2.0, 1.0, 1.0, 3.0]) == 1

    def test_empty_rejected(self):
        with pytest.raises(InvalidParameterError):
            best_index([])

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidParameterError):
            best_index([1.0, np.nan, 0.5])
        with pytest.raises(InvalidParameterError):
            best_index([np.inf])


class TestValidation:
    def test_grid_mismatch(self):
        index = material(14)
        other = WavelengthGrid(400.0, 700.0, 10.0)
        spectra, _ = pseudo_target_spectra(1, 14, other)
        measured = simulate(spectra[0], 100.0)
        with pytest.raises(GridMismatchError):
            grid_search_thickness(measured, index)

    def test_bad_range(self):
        index = material(15)
        measured = simulate(index, 100.0)
        with pytest.raises(InvalidParameterError):
            grid_search_thickness(measured, index, d_min_nm=500.0, d_max_nm=100.0)

    def test_bad_step(self):
        index = material(15)
        measured = simulate(index, 100.0)
        with pytest.raises(InvalidParameterError):
            grid_search_thickness(measured, index, step_nm=0.0)

    def test_bad_weights(self):
        index = material(15)
        measured = simulate(index, 100.0)
        with pytest.raises(InvalidParameterError):
            grid_search_thickness(measured, index, r_weight=-1.0)
        with pytest.raises(InvalidParameterError):
            grid_search_thickness(measured, index, r_weight=0.0, t_weight=0.0)

    def test_result_shape_check(self):
        with pytest.raises(InvalidParameterError):
            FitResult(best_d_nm=1.0, residual_rms=0.0,
                      candidates_nm=np.arange(3.0),
                      residual_curve=np.arange(4.0))
