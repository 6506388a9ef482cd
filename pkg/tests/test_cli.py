from pathlib import Path

import numpy as np
import pytest

from ebsure.cli import main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def run_cli(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tune_bundled_scalar_example(capsys):
    code, out, _ = run_cli(
        ["tune", "--config", CONFIG_DIR / "tune_ridge_limit_eb.cfg"], capsys
    )
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("eta_hat"))
    eta = float(line.split("=")[1])
    assert eta == pytest.approx(1.0, abs=1e-6)  # mean power of theta0 = (1, 1)


def test_generate_deterministic(tmp_path, capsys):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("n = 3\nN = 30\ncond_target = 10\nsnr_target = 5\nseed = 7\n")
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert run_cli(["generate", "--config", cfg, "--out", out1], capsys)[0] == 0
    assert run_cli(["generate", "--config", cfg, "--out", out2], capsys)[0] == 0
    for name in ("Phi.csv", "Y.csv", "theta0.csv", "Sigma.csv", "meta.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_generate_seed_override_changes_output(tmp_path, capsys):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("n = 3\nN = 30\ncond_target = 10\nsnr_target = 5\nseed = 7\n")
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    run_cli(["generate", "--config", cfg, "--out", out1], capsys)
    run_cli(["generate", "--config", cfg, "--out", out2, "--seed", "8"], capsys)
    assert (out1 / "Phi.csv").read_bytes() != (out2 / "Phi.csv").read_bytes()


def test_sweep_row_count_and_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run_cli(
        ["sweep", "--config", CONFIG_DIR / "sweep_mini.cfg", "--out", out, "--quiet"],
        capsys,
    )
    assert code == 0
    lines = (out / "records.csv").read_text().splitlines()
    assert len(lines) == 1 + 4 * 4  # header + |N_grid| * replicates
    assert (out / "aggregates.csv").is_file()
    assert (out / "manifest.txt").is_file()


def test_sweep_writes_only_inside_out(tmp_path, capsys):
    out = tmp_path / "nested" / "run"
    before = set(tmp_path.iterdir())
    code, _, _ = run_cli(
        ["sweep", "--config", CONFIG_DIR / "sweep_mini.cfg", "--out", out, "--quiet"],
        capsys,
    )
    assert code == 0
    after = set(tmp_path.iterdir())
    assert after - before == {tmp_path / "nested"}


def test_manifest_round_trips_through_sweep(tmp_path, capsys):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    run_cli(["sweep", "--config", CONFIG_DIR / "sweep_mini.cfg", "--out", out1, "--quiet"], capsys)
    run_cli(["sweep", "--config", out1 / "manifest.txt", "--out", out2, "--quiet"], capsys)
    assert (out1 / "records.csv").read_bytes() == (out2 / "records.csv").read_bytes()


def test_bounds_subcommand(tmp_path, capsys):
    out = tmp_path / "bounds"
    code, stdout, _ = run_cli(
        ["bounds", "--config", CONFIG_DIR / "bounds_small.cfg", "--out", out], capsys
    )
    assert code == 0
    assert "verdict = all inequalities hold" in stdout
    assert (out / "bounds.csv").is_file()


def test_bounds_cond_sweep(tmp_path, capsys):
    cfg = tmp_path / "bounds.cfg"
    cfg.write_text(
        "family = tc\nn = 4\nN = 150\ncond_target = 1e2\nsnr_target = 5\n"
        "seed = 11\neta = 1.0, 0.6\ncond_levels = 1e1, 1e2, 1e3, 1e4\n"
    )
    out = tmp_path / "o"
    code, stdout, _ = run_cli(["bounds", "--config", cfg, "--out", out], capsys)
    assert code == 0
    assert "empirical slope" in stdout
    assert (out / "cond_power.csv").is_file()


def test_asymptotics_subcommand(capsys):
    code, stdout, _ = run_cli(
        ["asymptotics", "--config", CONFIG_DIR / "asymptotics_ridge.cfg"], capsys
    )
    assert code == 0
    assert "variance_ratio" in stdout
    assert "asymptotic_cov_eb" in stdout
    # printed covariances must agree with the closed-form ridge expressions
    lines = stdout.splitlines()
    idx = lines.index("asymptotic_cov_eb =")
    cov_eb = float(lines[idx + 1])
    from ebsure.asymptotics import ridge_asymptotic_variances
    from ebsure.problems import make_covariance

    theta0 = np.array([1.0, -0.5, 0.25])
    Sigma = make_covariance(3, 1e4, 1.0, 3)
    var_eb, _ = ridge_asymptotic_variances(theta0, Sigma, 0.5)
    assert cov_eb == pytest.approx(var_eb, rel=1e-6)


def test_normality_subcommand(tmp_path, capsys):
    cfg = tmp_path / "norm.cfg"
    cfg.write_text(
        "family = ridge\nn = 2\ncond_target = 10\nsnr_target = 5\n"
        "N_grid = 800\nreplicates = 100\nbase_seed = 6\n"
    )
    code, stdout, _ = run_cli(["normality", "--config", cfg, "--quiet"], capsys)
    assert code == 0
    assert "ratio_emp" in stdout and "var_analytic_eb" in stdout


def test_full_scale_flag_rewrites_config():
    import argparse

    from ebsure.cli import _sweep_config
    from ebsure.configfile import ConfigView

    args = argparse.Namespace(seed=None, threads=1, full_scale=True)
    cfg = _sweep_config(args, ConfigView({"replicates": "7"}))
    assert cfg.n == 50
    assert cfg.cond_target == 1e5
    assert cfg.replicates == 1000


def test_validation_error_names_field(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 3\nN = 30\ncond_target = huge\nseed = 1\n")
    code, _, err = run_cli(["generate", "--config", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 1
    assert "cond_target" in err


def test_unknown_field_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 3\nN = 30\nwibble = 1\n")
    code, _, err = run_cli(["generate", "--config", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 1
    assert "wibble" in err


def test_missing_config_file(tmp_path, capsys):
    code, _, err = run_cli(
        ["tune", "--config", tmp_path / "nope.cfg"], capsys
    )
    assert code == 1
    assert "not found" in err


def test_malformed_line_reports_location(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 3\njust words\n")
    code, _, err = run_cli(["generate", "--config", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 1
    assert "bad.cfg:2" in err
