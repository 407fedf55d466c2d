"""Integration tests for the command-line front end."""
from pathlib import Path

import numpy as np
import pytest

from src.levy.innovations import calibrated_spec
from src.levy.io import read_observations, read_values
from src.main import build_parser, invocation_from_args, main

pytestmark = pytest.mark.integration

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def simulated(tmp_path):
    """Noisy observations and the noiseless path of a Brownian motion."""
    obs_path, path_path = tmp_path / "obs.csv", tmp_path / "path.csv"
    code = main([
        "simulate", "--innovation", "gaussian", "--sigma", "1", "--n", "32", "--seed", "7",
        "--noise-var", "0.5", "--out", str(obs_path), "--path-out", str(path_path),
    ])
    assert code == 0
    return obs_path, path_path


class TestSimulate:
    """Test the simulate subcommand."""

    def test_writes_observations(self, simulated):
        obs_path, path_path = simulated
        obs = read_observations(obs_path)
        assert obs.num_observations == 32
        assert obs.noise_variance == pytest.approx(0.5)
        assert obs.seed == 7
        assert obs.spec.sigma == 1.0
        np.testing.assert_array_equal(read_values(path_path), obs.clean)

    def test_reproducible(self, tmp_path):
        for name in ("a.csv", "b.csv"):
            assert main([
                "simulate", "--innovation", "cauchy", "--calibrated", "--n", "16", "--seed", "3",
                "--out", str(tmp_path / name),
            ]) == 0
        assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()

    def test_default_seed_reported(self, tmp_path, capsys):
        assert main(["simulate", "--innovation", "gaussian", "--sigma", "1", "--n", "4",
                     "--out", str(tmp_path / "p.csv")]) == 0
        assert "seed=20130101" in capsys.readouterr().err


class TestPdf:
    """Test the pdf subcommand."""

    def test_closed_form(self, tmp_path):
        out = tmp_path / "pdf.csv"
        assert main(["pdf", "--innovation", "cauchy", "--calibrated", "--route", "closed",
                     "--grid-n", "256", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "# atom_at_zero=0.0"
        assert lines[1] == "x,density"
        assert len(lines) == 258

    def test_potential_column(self, tmp_path):
        """At T = 1 the Laplace potential is gamma |x|."""
        out = tmp_path / "pdf.csv"
        assert main(["pdf", "--innovation", "variance_gamma", "--calibrated", "--grid-n", "256",
                     "--potential", "--out", str(out)]) == 0
        assert out.read_text().splitlines()[1] == "x,density,psi"
        x = read_values(out, "x")
        gamma = calibrated_spec("variance_gamma").gamma
        np.testing.assert_allclose(read_values(out, "psi"), gamma * np.abs(x), atol=1e-9)

    def test_potential_of_compound_poisson(self, tmp_path):
        code = main(["pdf", "--innovation", "compound_poisson", "--poisson-rate", "0.6",
                     "--amplitude-sigma", "1", "--potential", "--out", str(tmp_path / "pdf.csv")])
        assert code == 3
        assert not (tmp_path / "pdf.csv").exists()

    def test_unsupported_closed_form(self, tmp_path):
        code = main(["pdf", "--innovation", "alpha_stable", "--alpha", "1.5", "--stable-scale", "1",
                     "--route", "closed", "--out", str(tmp_path / "pdf.csv")])
        assert code == 3

    def test_invalid_parameters(self, tmp_path):
        code = main(["pdf", "--innovation", "gaussian", "--gamma", "1", "--out", str(tmp_path / "pdf.csv")])
        assert code == 2


class TestDenoise:
    """Test the denoise subcommand."""

    def test_quadratic_with_truth(self, simulated, tmp_path, capsys):
        obs_path, path_path = simulated
        out = tmp_path / "estimate.csv"
        assert main(["denoise", "--in", str(obs_path), "--method", "lmmse", "--lambda", "0.5",
                     "--truth", str(path_path), "--out", str(out)]) == 0
        assert "snri_db=" in capsys.readouterr().out
        assert read_values(out, "estimate").size == 33

    def test_mmse_uses_file_spec(self, simulated, tmp_path):
        obs_path, _ = simulated
        out = tmp_path / "estimate.csv"
        marginals = tmp_path / "marginals"
        assert main(["denoise", "--in", str(obs_path), "--method", "mmse", "--grid-n", "512",
                     "--dump-marginals", str(marginals), "--out", str(out)]) == 0
        assert len(list(marginals.glob("node_*.csv"))) == 33

    def test_gaussian_mmse_matches_lmmse(self, simulated, tmp_path):
        """For a Brownian prior the posterior mean is the smoothing spline with lambda = sigma_n^2."""
        obs_path, _ = simulated
        mmse, lmmse = tmp_path / "mmse.csv", tmp_path / "lmmse.csv"
        assert main(["denoise", "--in", str(obs_path), "--method", "mmse", "--out", str(mmse)]) == 0
        assert main(["denoise", "--in", str(obs_path), "--method", "lmmse", "--lambda", "0.5",
                     "--out", str(lmmse)]) == 0
        np.testing.assert_allclose(read_values(mmse, "estimate"), read_values(lmmse, "estimate"), atol=1e-2)

    def test_auto_lambda(self, simulated, tmp_path, capsys):
        obs_path, _ = simulated
        assert main(["denoise", "--in", str(obs_path), "--method", "tv", "--auto-lambda",
                     "--calibration-realizations", "2", "--seed", "1", "--out", str(tmp_path / "e.csv")]) == 0
        assert "lambda=" in capsys.readouterr().out

    def test_huge_tv_weight_gives_zero(self, simulated, tmp_path):
        obs_path, _ = simulated
        out = tmp_path / "e.csv"
        assert main(["denoise", "--in", str(obs_path), "--method", "tv", "--lambda", "1e6", "--out", str(out)]) == 0
        np.testing.assert_allclose(read_values(out, "estimate"), 0.0, atol=1e-9)

    def test_missing_lambda(self, simulated, tmp_path):
        obs_path, _ = simulated
        assert main(["denoise", "--in", str(obs_path), "--method", "log", "--out", str(tmp_path / "e.csv")]) == 2

    def test_unknown_method(self, simulated, tmp_path):
        obs_path, _ = simulated
        assert main(["denoise", "--in", str(obs_path), "--method", "quadrature", "--out", str(tmp_path / "e.csv")]) == 2

    def test_missing_input(self, tmp_path):
        assert main(["denoise", "--in", str(tmp_path / "none.csv"), "--method", "lmmse", "--lambda", "1",
                     "--out", str(tmp_path / "e.csv")]) == 2


class TestInterpolate:
    """Test the interpolate subcommand."""

    def test_linear(self, tmp_path):
        obs_path, out = tmp_path / "obs.csv", tmp_path / "fine.csv"
        assert main(["simulate", "--innovation", "laplace", "--calibrated", "--n", "16", "--seed", "5",
                     "--stride", "4", "--out", str(obs_path)]) == 0
        assert main(["interpolate", "--in", str(obs_path), "--method", "linear", "--out", str(out)]) == 0
        estimate = read_values(out, "estimate")
        obs = read_observations(obs_path)
        assert estimate.size == 17
        np.testing.assert_allclose(estimate[::4], obs.noisy)


class TestBenchmark:
    """Test the benchmark subcommand and argument handling."""

    def test_dry_run(self, tmp_path):
        out = tmp_path / "report.csv"
        assert main(["benchmark", "--config", str(CONFIG_DIR / "laplace.cfg"), "--out", str(out), "--dry-run"]) == 0
        assert not list(tmp_path.iterdir())

    def test_bad_config(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("kind=gaussian\nsigma=1\nnoise_variances=1\nmethods=tv\nspeed=fast\n")
        assert main(["benchmark", "--config", str(path), "--dry-run"]) == 2

    def test_usage_error(self):
        assert main(["simulate", "--n", "4"]) == 2

    def test_invocation_record(self, tmp_path):
        args = build_parser().parse_args(["denoise", "--in", "obs.csv", "--method", "tv", "--lambda", "1",
                                          "--out", str(tmp_path / "e.csv")])
        invocation = invocation_from_args(args)
        assert invocation.subcommand == "denoise"
        assert invocation.inputs == [Path("obs.csv")]
        assert invocation.flags["reg_weight"] == 1.0
