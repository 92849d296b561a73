"""CLI behavior: subcommand round trips through the embedded service, exit
codes per error class, env-var defaults, and provenance output."""

import json

import numpy as np
import pytest

from filmthick.cli import main
from filmthick.datagen import pseudo_target_spectra
from filmthick.dispersion import WavelengthGrid
from filmthick.fileio import write_table
from filmthick.optics import film_on_substrate_rt

TINY_NET_JSON = json.dumps({"conv_channels": [8, 8], "conv_kernels": [8, 5],
                            "pool_sizes": [3, 3], "d_head": [16, 1]})
TINY_SPLIT_ARGS = ["--train-materials", "6", "--validation-materials", "2",
                   "--test-materials", "3", "--draws-train", "2",
                   "--draws-validation", "2", "--draws-test", "3"]


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def dataset_dir(work):
    out = str(work / "dataset")
    assert main(["simulate", "--output", out, "--profile", "ci",
                 *TINY_SPLIT_ARGS]) == 0
    return out


@pytest.fixture(scope="module")
def pretrain_dir(work, dataset_dir):
    out = str(work / "pre")
    assert main(["pretrain", "--dataset", dataset_dir, "--output", out,
                 "--profile", "ci", "--seeds", "0", "1", "--epochs", "2",
                 "--network-json", TINY_NET_JSON]) == 0
    return out


@pytest.fixture(scope="module")
def sample_csvs(work):
    grid = WavelengthGrid.canonical()
    spectra, _ = pseudo_target_spectra(1, 7, grid)
    index = spectra[0]
    rt = film_on_substrate_rt(index, 487.0)
    lam = grid.wavelengths()
    rt_csv = str(work / "sample_rt.csv")
    nk_csv = str(work / "sample_nk.csv")
    write_table(rt_csv, ["wavelength_nm", "R", "T"],
                np.column_stack([lam, rt.R, rt.T]))
    write_table(nk_csv, ["wavelength_nm", "n", "k"],
                np.column_stack([lam, index.n, index.k]))
    return rt_csv, nk_csv


class TestRoundTrips:
    def test_simulate_output(self, dataset_dir, capsys):
        assert main(["simulate", "--output", dataset_dir, "--profile", "ci",
                     *TINY_SPLIT_ARGS]) == 0
        out = capsys.readouterr().out
        assert "train=12" in out and "validation=4" in out and "test=9" in out

    def test_pretrain_reports_runs(self, pretrain_dir, capsys, dataset_dir):
        assert main(["evaluate", "--checkpoint",
                     f"{pretrain_dir}/pretrain_seed0.thkw",
                     "--dataset", dataset_dir]) == 0
        out = capsys.readouterr().out
        assert "9 test samples" in out
        assert "d_accuracy" in out and "d_mape" in out

    def test_retrain(self, work, pretrain_dir, capsys):
        assert main(["retrain", "--checkpoint",
                     f"{pretrain_dir}/pretrain_seed0.thkw",
                     "--output", str(work / "ret"), "--pseudo-count", "4",
                     "--pseudo-seed", "1", "--train-count", "2",
                     "--draws-train", "2", "--draws-test", "2",
                     "--epochs", "1"]) == 0
        out = capsys.readouterr().out
        assert "retrained (partial) on 4 samples" in out
        assert "retrain_partial.thkw" in out

    def test_direct(self, work, capsys):
        assert main(["direct", "--output", str(work / "dir"),
                     "--profile", "ci", "--pseudo-count", "4",
                     "--pseudo-seed", "1", "--train-count", "2",
                     "--draws-train", "2", "--draws-test", "2",
                     "--epochs", "1", "--network-json", TINY_NET_JSON]) == 0
        out = capsys.readouterr().out
        assert "direct-trained on 4 samples" in out

    def test_predict(self, pretrain_dir, sample_csvs, capsys):
        rt_csv, _ = sample_csvs
        assert main(["predict", "--checkpoint",
                     f"{pretrain_dir}/pretrain_seed0.thkw",
                     f"{pretrain_dir}/pretrain_seed1.thkw",
                     "--spectra", rt_csv]) == 0
        out = capsys.readouterr().out
        assert "d = " in out and "nm" in out

    def test_fit(self, sample_csvs, capsys):
        rt_csv, nk_csv = sample_csvs
        assert main(["fit", "--spectra", rt_csv, "--index", nk_csv]) == 0
        out = capsys.readouterr().out
        assert "best d = 487.0 nm" in out

    def test_activations(self, work, pretrain_dir, sample_csvs, capsys):
        rt_csv, _ = sample_csvs
        assert main(["activations", "--checkpoint",
                     f"{pretrain_dir}/pretrain_seed0.thkw",
                     "--spectra", rt_csv, "--output", str(work / "act"),
                     "--filters", "2"]) == 0
        out = capsys.readouterr().out
        assert "stage 1: 2 filters" in out
        assert (work / "act" / "activations_stage1.csv").exists()

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0


class TestProvenance:
    def test_written_and_timestamp_free(self, dataset_dir):
        with open(f"{dataset_dir}/provenance.json") as fh:
            payload = json.load(fh)
        assert payload["command"] == "simulate"
        assert payload["request"]["profile"] == "ci"
        assert set(payload["versions"]) == {"package", "numpy", "python"}

    def test_rerun_is_byte_identical(self, work, dataset_dir):
        other = str(work / "dataset_again")
        assert main(["simulate", "--output", other, "--profile", "ci",
                     *TINY_SPLIT_ARGS]) == 0
        for name in ("train.bin", "validation.bin", "test.bin"):
            with open(f"{dataset_dir}/{name}", "rb") as a, \
                    open(f"{other}/{name}", "rb") as b:
                assert a.read() == b.read()


class TestExitCodes:
    def test_missing_output_is_config_error(self, capsys, monkeypatch):
        monkeypatch.delenv("FILMTHICK_OUTPUT_ROOT", raising=False)
        assert main(["simulate", "--profile", "ci"]) == 2
        assert "--output is required" in capsys.readouterr().err

    def test_unknown_profile(self, work, capsys):
        assert main(["simulate", "--output", str(work / "x"),
                     "--profile", "nope"]) == 2
        assert "unknown profile" in capsys.readouterr().err

    def test_malformed_csv_is_data_error(self, work, sample_csvs, capsys):
        _, nk_csv = sample_csvs
        bad = work / "bad_rt.csv"
        bad.write_text("wavelength_nm,R,T\n350,0.1,0.2\n351,oops,0.2\n")
        assert main(["fit", "--spectra", str(bad), "--index", nk_csv]) == 3
        err = capsys.readouterr().err
        assert "line 3" in err

    def test_bad_network_json(self, work, dataset_dir, capsys):
        assert main(["pretrain", "--dataset", dataset_dir,
                     "--output", str(work / "p2"), "--profile", "ci",
                     "--network-json", "{not json"]) == 2
        assert "not valid JSON" in capsys.readouterr().err

    def test_unreachable_url(self, sample_csvs, capsys):
        rt_csv, nk_csv = sample_csvs
        assert main(["--url", "http://127.0.0.1:1",
                     "fit", "--spectra", rt_csv, "--index", nk_csv]) == 1
        assert "cannot reach service" in capsys.readouterr().err


class TestOutputRootEnv:
    def test_default_output_under_root(self, work, monkeypatch, capsys):
        root = work / "root"
        monkeypatch.setenv("FILMTHICK_OUTPUT_ROOT", str(root))
        assert main(["simulate", "--profile", "ci", *TINY_SPLIT_ARGS]) == 0
        assert (root / "dataset" / "manifest.json").exists()
        capsys.readouterr()
