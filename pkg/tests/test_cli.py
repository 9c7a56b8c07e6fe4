import os
import subprocess
import sys

import pytest

from entmux import io
from entmux.cli import fringe_metrics, main


def write_conf(tmp_path, text, name="run.conf"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


FAST = "duration_s = 0.2\nduration_s.T2 = 0.2\nduration_s.T3 = 0.2\nsweep.points = 6\n" \
       "dark_rate_hz = 2000\nmu = 0.02\nbatch_periods = 262144\n"


def test_help_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "entmux.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for name in ("fringe", "hom", "budget", "car-scan", "oracle", "grid"):
        assert name in out.stdout


def test_unknown_flag_is_usage_error(capsys):
    assert main(["budget", "--bogus"]) == 2


def test_missing_subcommand_is_usage_error():
    assert main([]) == 2


def test_one_point_sweep_rejected(tmp_path):
    conf = write_conf(tmp_path, FAST + "sweep.points = 1\n")
    assert main(["fringe", "--config", conf, "--out", str(tmp_path)]) == 2


def test_unwritable_output_is_runtime_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    conf = write_conf(tmp_path, FAST)
    assert main(["fringe", "--config", conf, "--out", str(blocker / "sub")]) == 3


def test_hom_without_slots_rejected(tmp_path):
    conf = write_conf(tmp_path, FAST)
    assert main(["hom", "--config", conf, "--out", str(tmp_path)]) == 2


def test_zero_duration_rejected(tmp_path):
    conf = write_conf(tmp_path, FAST + "scan.parameter = mu\nscan.values = 0.01, 0.02\n")
    assert main(["car-scan", "--config", conf, "--out", str(tmp_path), "--duration", "0"]) == 2


def test_unknown_config_key_rejected(tmp_path):
    conf = write_conf(tmp_path, "no_such_key = 1\n")
    assert main(["budget", "--config", conf]) == 2


def test_budget_output(capsys):
    assert main(["budget"]) == 0
    out = capsys.readouterr().out.splitlines()
    totals = [line for line in out if not line.startswith(" ")]
    assert totals[0].startswith("T1 15.7 dB transmittance")
    assert totals[1].startswith("T2 18.2 dB") and totals[2].startswith("T3 18.2 dB")


def test_budget_channels_table(capsys):
    assert main(["budget", "--channels"]) == 0
    out = capsys.readouterr().out
    assert "S8" in out and "I8" in out


def test_empty_ledger_is_zero_db(tmp_path, capsys):
    conf = write_conf(tmp_path, "loss.T1 = none\n")
    assert main(["budget", "--config", conf, "--out", str(tmp_path)]) == 0
    line = [x for x in capsys.readouterr().out.splitlines() if x.startswith("T1 ")][0]
    assert line == "T1 0 dB transmittance 1.0"


def test_grid_and_oracle_run(capsys):
    assert main(["grid"]) == 0
    assert main(["oracle"]) == 0
    assert "visibility" in capsys.readouterr().out


def _fringe_files(tmp_path, workers):
    out = tmp_path / f"w{workers}"
    out.mkdir()
    conf = write_conf(tmp_path, FAST)
    assert main(["fringe", "--config", conf, "--out", str(out), "--seed", "7",
                 "--workers", str(workers)]) == 0
    return out


def test_fringe_outputs_independent_of_workers(tmp_path):
    a = _fringe_files(tmp_path, 1)
    b = _fringe_files(tmp_path, 4)
    names = sorted(p.name for p in a.iterdir())
    assert "fringe_S8-I8_T1.csv" in names and "results.csv" in names
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_results_rederive_from_fringe_csv(tmp_path):
    out = _fringe_files(tmp_path, 2)
    data = io.read_fringe_csv(out / "fringe_S8-I8_T1.csv")
    import math
    rows = fringe_metrics(data["phase_rad"], data["coincidences"], data["accidentals"], math.pi)
    stored = io.read_results_csv(out / "results.csv")
    for name, value, _ in rows:
        if isinstance(value, float):
            assert abs(float(stored[name]) - value) < 1e-9
    assert (out / "fringe_S8-I8_T1.csv").read_bytes().count(b"\r") == 0


def test_car_scan_writes_oracle_column(tmp_path):
    conf = write_conf(tmp_path, FAST + "scan.parameter = mu\nscan.values = 0.01, 0.03\n")
    assert main(["car-scan", "--config", conf, "--out", str(tmp_path)]) == 0
    rows = io.read_csv(tmp_path / "car_scan.csv", io.CAR_SCAN_HEADER)
    assert len(rows) == 2 and float(rows[0]["car"]) > float(rows[1]["car"])


def test_hom_runs(tmp_path):
    conf = write_conf(tmp_path, FAST + "loss.T1 = none\nloss.T2 = none\n"
                      "hom.slot_a = 1\nhom.slot_b = 2\nhom.delays_ps = -2000, 0, 2000\n")
    assert main(["hom", "--config", conf, "--out", str(tmp_path)]) == 0
    data = io.read_hom_csv(tmp_path / "hom_S8-I8-T1_S8-I8-T2.csv")
    assert data["delay_ps"].tolist() == [-2000.0, 0.0, 2000.0]


def test_hom_without_counts_is_runtime_error(tmp_path):
    conf = write_conf(tmp_path, FAST + "dark_rate_hz = 0\nhom.slot_a = 1\nhom.slot_b = 2\n"
                      "hom.delays_ps = 0, 2000\nduration_s = 0.001\n")
    assert main(["hom", "--config", conf, "--out", str(tmp_path)]) == 3
