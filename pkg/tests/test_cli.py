import json
import subprocess
import sys

import pytest

from qkdwdm.cli import main


def run(*argv):
    return main(list(argv))


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "cfg.json"
    assert run("preset", "paper-default", "--out", str(p)) == 0
    return p


def test_version(capsys):
    with pytest.raises(SystemExit) as ei:
        run("--version")
    assert ei.value.code == 0
    out = capsys.readouterr().out
    assert "schema 1" in out


def test_budget_sarg_filters(cfg, capsys):
    assert run("budget", "--config", str(cfg), "--length", "25", "--protocol", "sarg", "--filters") == 0
    out = capsys.readouterr().out
    qber = float(next(l for l in out.splitlines() if l.startswith("qber")).split()[1])
    assert qber == pytest.approx(1.7, rel=0.3)
    assert "r_ec" in out and "r_pa" in out


def test_sweep_min_gt_max(cfg, tmp_path, capsys):
    assert run("sweep", "--config", str(cfg), "--min", "5", "--max", "1", "--step", "1",
               "--out", str(tmp_path / "x.csv")) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_sweep_csv_byte_stable(cfg, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run("sweep", "--config", str(cfg), "--min", "0", "--max", "50", "--step", "2.5", "--out", str(out)) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert len(lines) == 22 and lines[0].startswith("length_km,protocol,filters")


def test_plan_check_ok(cfg, capsys):
    assert run("plan", "check", "--config", str(cfg)) == 0
    assert "no FWM product" in capsys.readouterr().out


def test_plan_check_violation(cfg, capsys):
    data = json.loads(cfg.read_text())
    data["plan"]["channels"][1]["offset_ghz_from_quantum"] = 400.0
    data["plan"]["channels"] = data["plan"]["channels"][:2]
    cfg.write_text(json.dumps(data))
    assert run("plan", "check", "--config", str(cfg)) == 1
    captured = capsys.readouterr()
    assert "VIOLATION" in captured.out and captured.err.startswith("error:")


def test_config_error_exit_3(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"schema_version": 1}')
    assert run("budget", "--config", str(p), "--length", "1") == 3
    assert capsys.readouterr().err.startswith("error:")
    assert run("budget", "--config", str(tmp_path / "missing.json"), "--length", "1") == 3


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as ei:
        run("budget", "--length", "1")
    assert ei.value.code == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit) as ei:
        run("frobnicate")
    assert ei.value.code == 2


def test_mc_deterministic(cfg, tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("mc", "--config", str(cfg), "--length", "25", "--gates", "400000", "--seed", "8", "--csv", str(a)) == 0
    assert run("mc", "--config", str(cfg), "--length", "25", "--gates", "400000", "--seed", "8",
               "--chunks", "3", "--csv", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "analytic" in capsys.readouterr().out


def test_mc_requires_seed(cfg):
    with pytest.raises(SystemExit) as ei:
        run("mc", "--config", str(cfg), "--length", "25", "--gates", "10")
    assert ei.value.code == 2


def test_calibrate_writes_config(cfg, tmp_path, capsys):
    out = tmp_path / "cal.json"
    assert run("calibrate", "--config", str(cfg), "--qber", "0.05", "--length", "25", "--out", str(out)) == 0
    assert "scale factor" in capsys.readouterr().out
    assert json.loads(out.read_text())["raman_scale"] > json.loads(cfg.read_text())["raman_scale"]
    assert run("calibrate", "--config", str(cfg), "--qber", "0.001", "--length", "25", "--out", str(out)) == 3


def test_compare_bands(tmp_path, capsys):
    a, b, out = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "o.csv"
    run("preset", "paper-default-filters", "--out", str(a))
    run("preset", "paper-1310", "--out", str(b))
    assert run("compare-bands", "--config1550", str(a), "--config1310", str(b), "--out", str(out),
               "--max", "20", "--step", "5") == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("band,length_km")
    assert len(lines) == 1 + 2 * 5
    assert "max distance" in capsys.readouterr().out


def test_1310_budget_explains(tmp_path, capsys):
    p = tmp_path / "c.json"
    run("preset", "paper-1310", "--out", str(p))
    assert run("budget", "--config", str(p), "--length", "10") == 3
    assert "compare-bands" in capsys.readouterr().err


def test_console_script_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qkdwdm.cli", "preset", "dark-fibre", "--out",
                        str(tmp_path / "d.json")], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads((tmp_path / "d.json").read_text())["plan"]["channels"] == []
