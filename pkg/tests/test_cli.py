import json
import subprocess
import sys

import pytest

from ahspectrum.cli import main
from ahspectrum.config import RunConfig, parse_ini
from ahspectrum.geometry import ConfigurationError

SMALL = """
[model]
n_t = 128
[quasimode]
lambdas = 0.5
radii = 2.0, 4.0, 8.0
[spectrum]
t_max = 10.0
n_t = 256
n_theta = 16
modes = 0, 2
count = 4
eigentensor_n = 2
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return str(path)


def test_ini_roundtrip():
    cfg = RunConfig()
    assert parse_ini(cfg.to_ini()) == cfg


@pytest.mark.parametrize("text", ["[nope]\nx = 1\n", "[model]\nbogus = 1\n", "[model]\nn_t = many\n"])
def test_bad_ini_is_rejected(text):
    with pytest.raises(ConfigurationError):
        parse_ini(text)


def test_verify_subset_writes_outputs(tmp_path, small_cfg):
    out = tmp_path / "o"
    code = main(["verify", "--config", small_cfg, "--out", str(out),
                 "--only", "check_norm_identity", "--grid-ladder", "64,128"])
    assert code == 0
    rep = json.loads((out / "verify" / "reports.json").read_text())
    assert len(rep) == 1 and rep[0]["passed"]
    assert (out / "verify" / "config.ini").is_file()
    assert (out / "verify" / "reports.csv").read_text().startswith("report,h,residual")


def test_global_flags_before_subcommand(tmp_path, small_cfg):
    out = tmp_path / "o"
    assert main(["--out", str(out), "--only", "check_weitzenbock", "--grid-ladder", "64,128",
                 "verify", "--config", small_cfg]) == 0
    assert (out / "verify" / "summary.json").is_file()


def test_quasimode_spectrum_and_report(tmp_path, small_cfg):
    out = str(tmp_path / "o")
    assert main(["quasimode", "--config", small_cfg, "--out", out]) == 0
    assert (tmp_path / "o" / "quasimode" / "scan.csv").is_file()
    assert main(["spectrum", "--config", small_cfg, "--out", out]) == 0
    summary = json.loads((tmp_path / "o" / "spectrum" / "summary.json").read_text())
    assert summary["passed"]
    assert main(["report", "--out", out]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["passed"]


def test_lambda_below_quarter_exits_2(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[quasimode]\nlambdas = 0.2, 0.5\n")
    assert main(["quasimode", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("argv", [["frobnicate"], ["verify", "--config", "/no/such.ini"],
                                  ["verify", "--only", "not_a_suite"],
                                  ["verify", "--grid-ladder", "a,b"]])
def test_usage_errors_exit_2(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_report_without_summaries_exits_2(tmp_path):
    assert main(["report", "--out", str(tmp_path / "empty")]) == 2


def test_module_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "ahspectrum", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "verify" in proc.stdout


@pytest.mark.parametrize("script", ["identity_ladder", "quasimode_scan", "spectral_picture",
                                    "indicial_fit"])
def test_scripts_show_help(script):
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "scripts" / f"{script}.py"
    proc = subprocess.run([sys.executable, str(path), "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "usage" in proc.stdout
