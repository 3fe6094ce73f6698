import json

import pytest

from activeris.cli import main
from activeris.harness import SUMMARY_HEADER, read_summary

CFG = """
[meta]
schema_version = 1
[system]
L = 8
[solver]
max_outer_iters = 10
outer_tol = 1e-3
init_strategy = mrt
[experiment]
power_dbm = 6, 21
position_x_m = 390, 410
elements = 4, 8
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(CFG)
    return str(p)


def test_single_run_deterministic(tmp_path, cfg):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["single-run", "--config", cfg, "--seed", "7", "--out", str(a)]) == 0
    assert main(["single-run", "--config", cfg, "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert set(doc["runs"]) == {"practical_active", "ideal_active", "passive"}


@pytest.mark.parametrize("cmd", ["sweep-power", "sweep-position", "sweep-elements"])
def test_sweeps_write_csv(tmp_path, cfg, cmd):
    out, long = tmp_path / "s.csv", tmp_path / "l.csv"
    rc = main([cmd, "--config", cfg, "--realizations", "1", "--mode", "passive",
               "--out", str(out), "--long", str(long)])
    assert rc == 0
    assert out.read_text().splitlines()[0] == ",".join(SUMMARY_HEADER)
    assert len(read_summary(out)) == 2
    assert len(long.read_text().splitlines()) == 3


def test_sweep_to_stdout(cfg, capsys):
    assert main(["sweep-power", "--config", cfg, "--realizations", "1", "--mode", "passive"]) == 0
    assert capsys.readouterr().out.startswith("mode,sweep_variable")


def test_validate(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 5


def test_missing_config_names_path(tmp_path, capsys):
    path = str(tmp_path / "missing.ini")
    assert main(["sweep-power", "--config", path]) != 0
    assert "missing.ini" in capsys.readouterr().err


def test_malformed_config(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[system]\nL = lots\n")
    assert main(["single-run", "--config", str(p)]) != 0
    assert "bad value" in capsys.readouterr().err


def test_unknown_flag_and_bad_mode(cfg, capsys):
    with pytest.raises(SystemExit) as e:
        main(["sweep-power", "--frobnicate"])
    assert e.value.code != 0
    assert main(["sweep-power", "--config", cfg, "--mode", "warp"]) != 0


def test_unwritable_output(tmp_path, cfg, capsys):
    bad = str(tmp_path / "no" / "dir" / "x.csv")
    rc = main(["sweep-power", "--config", cfg, "--realizations", "1", "--mode", "passive", "--out", bad])
    assert rc != 0
    assert "x.csv" in capsys.readouterr().err
