import csv
import json
import math

import numpy as np
import pytest

from pwcorr.cli import main
from pwcorr.config import DEFAULT_LAGS, RunConfig, config_from_mapping, load_config, parse_time
from pwcorr.errors import ConfigurationError
from pwcorr.oscillator import StateSpec

T = 2 * math.pi


@pytest.mark.parametrize("text,expected", [
    ("0.5T", 0.5 * T), ("T/2", 0.5 * T), ("3T/8", 3 * T / 8), ("T", T), ("1T", T),
    ("0", 0.0), (1.25, 1.25), ("2.5", 2.5), ("-0.25T", -0.25 * T),
])
def test_parse_time(text, expected):
    assert parse_time(text, T) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("bad", ["half", "T/", "nanT", True, float("inf")])
def test_parse_time_rejects(bad):
    with pytest.raises(ConfigurationError):
        parse_time(bad, T)


def test_defaults():
    cfg = RunConfig()
    assert cfg.dt == pytest.approx(T / 1000)
    assert cfg.grid.n_points == 1024 and cfg.grid.x_min == -10 and cfg.grid.x_max == 10
    assert cfg.ensemble.n == 10_000 and cfg.ensemble.scheme == "quantile"
    assert cfg.lags == tuple(parse_time(x, T) for x in DEFAULT_LAGS)
    assert len(cfg.lags) == 8 and cfg.lags[4] == pytest.approx(T / 2)


def test_config_from_mapping():
    cfg = config_from_mapping({
        "params": {"mass": 2.0, "omega": 3.0},
        "grid": {"x_min": -6, "x_max": 6, "n_points": 512},
        "run": {"dt": "T/2000", "state": "coherent:0.5+0.5i", "lags": ["0", "0.5T"]},
        "ensemble": {"n": 100, "scheme": "random", "seed": 4},
        "output": {"format": "json", "record_every": 10},
    })
    assert cfg.dt == pytest.approx(2 * math.pi / 3 / 2000)
    assert cfg.state == StateSpec.coherent(0.5 + 0.5j)
    assert cfg.lags[1] == pytest.approx(math.pi / 3)
    assert cfg.to_dict()["state"] == "coherent:0.5+0.5i"


@pytest.mark.parametrize("data", [
    {"grid": {"n_points": 100}},
    {"run": {"dt": 0}},
    {"run": {"lags": ["-0.5T"]}},
    {"run": {"state": "eigenstate:one"}},
    {"params": {"mass": -1}},
    {"ensemble": {"scheme": "sobol"}},
    {"output": {"format": "xml"}},
    {"run": {"dtt": 0.1}},
    {"extra": {}},
])
def test_config_rejects(data):
    with pytest.raises(ConfigurationError):
        config_from_mapping(data)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid\n")
    with pytest.raises(ConfigurationError):
        load_config(bad)


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_usage_errors(tmp_path):
    assert main(["nonsense"]) == 2
    assert main([]) == 2
    cfg = _write(tmp_path, "[grid]\nn_points = 100\n")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_demo_refuses_excited_states(tmp_path, capsys):
    cfg = _write(tmp_path, '[run]\nstate = "coherent:1.0+0.0i"\n')
    assert main(["demo-contradiction", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "eigenstate:0" in capsys.readouterr().err


def test_demo_default(tmp_path):
    out = tmp_path / "demo"
    assert main(["demo-contradiction", "--out", str(out)]) == 0
    report = json.loads((out / "contradiction.json").read_text())
    assert {"params", "grid", "lags"} <= set(report)
    assert report["config"]["dt"] == pytest.approx(T / 1000)
    rows = {round(r["tau"] / T, 6): r for r in report["lags"]}
    half = rows[0.5]
    assert abs(half["qm_sym"] + 1) <= 2e-4 and abs(half["bohm"] - 1) <= 1e-3
    assert half["flag"] == "CONTRADICTION"
    assert rows[0.0]["flag"] == "AGREE"
    assert abs(rows[0.0]["qm_sym"] - 1) <= 2e-5 and abs(rows[0.0]["bohm"] - 1) <= 1e-3
    csv_rows = _rows(out / "contradiction.csv")
    assert list(csv_rows[0]) == ["tau", "qm_re", "qm_im", "qm_sym", "bohm", "fock_re",
                                 "fock_im", "flag"]
    assert len(csv_rows) == len(report["lags"])
    assert float(csv_rows[4]["qm_sym"]) == half["qm_sym"]


def test_demo_other_units(tmp_path):
    cfg = _write(tmp_path, "[params]\nmass = 2.0\nomega = 3.0\nhbar = 1.0\n"
                           "[grid]\nx_min = -6.0\nx_max = 6.0\nn_points = 512\n"
                           '[run]\nlags = ["0", "0.5T"]\n')
    out = tmp_path / "o"
    assert main(["demo-contradiction", "--config", cfg, "--out", str(out),
                 "--format", "json"]) == 0
    half = json.loads((out / "contradiction.json").read_text())["lags"][1]
    assert abs(abs(half["qm_sym"]) - 1 / 6) <= 1e-3
    assert abs(abs(half["bohm"]) - 1 / 6) <= 1e-3
    assert not (out / "contradiction.csv").exists()


def test_demo_adds_half_period_lag(tmp_path):
    cfg = _write(tmp_path, '[run]\nlags = ["0"]\n[ensemble]\nn = 2000\n')
    out = tmp_path / "o"
    assert main(["demo-contradiction", "--config", cfg, "--out", str(out)]) == 0
    assert len(_rows(out / "contradiction.csv")) == 2


def test_trajectories_ground_stand_still(tmp_path):
    cfg = _write(tmp_path, "[ensemble]\nn = 5\n[output]\nrecord_every = 100\n")
    out = tmp_path / "o"
    assert main(["trajectories", "--config", cfg, "--out", str(out)]) == 0
    rows = _rows(out / "trajectories.csv")
    assert list(rows[0]) == ["particle_id", "xi", "t", "x"]
    ids = sorted({r["particle_id"] for r in rows})
    assert ids == ["0", "1", "2", "3", "4"]
    for r in rows:
        # T/1000 stepping leaves the ground state breathing at the 1e-5 level
        assert abs(float(r["x"]) - float(r["xi"])) <= 2e-5
    per = [sum(r["particle_id"] == i for r in rows) for i in ids]
    assert len(set(per)) == 1 and per[0] == 11
    summary = json.loads((out / "trajectories.json").read_text())
    assert summary["config"]["ensemble"]["n"] == 5


def test_trajectories_coherent_return(tmp_path):
    cfg = _write(tmp_path, '[run]\nstate = "coherent:1.0+0.0i"\n[ensemble]\nn = 20\n')
    out = tmp_path / "o"
    assert main(["trajectories", "--config", cfg, "--out", str(out), "--format", "csv"]) == 0
    rows = _rows(out / "trajectories.csv")
    t_end = max(float(r["t"]) for r in rows)
    assert t_end == pytest.approx(T)
    ends = [r for r in rows if float(r["t"]) == t_end]
    assert len(ends) == 20
    assert max(abs(float(r["x"]) - float(r["xi"])) for r in ends) <= 2e-3


def test_determinism(tmp_path):
    cfg = _write(tmp_path, '[run]\nstate = "superposition:[0.6,0.8]"\nt_final = "0.25T"\n'
                           '[ensemble]\nn = 50\nscheme = "random"\nseed = 9\n'
                           "[output]\nrecord_every = 25\n")
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["trajectories", "--config", cfg, "--out", str(out)]) == 0
        blobs.append((out / "trajectories.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_correlate(tmp_path, monkeypatch):
    monkeypatch.setenv("PWC_THREADS", "2")
    cfg = _write(tmp_path, '[run]\nstate = "coherent:1.0+0.0i"\nlags = ["0", "0.25T"]\n'
                           "[ensemble]\nn = 2000\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"c{k}"
        assert main(["correlate", "--config", cfg, "--out", str(out)]) == 0
        outs.append((out / "correlations.csv").read_bytes())
    assert outs[0] == outs[1]
    data = json.loads((tmp_path / "c0" / "correlations.json").read_text())
    assert data["state"] == "coherent:1.0+0.0i"
    lag0 = data["lags"][0]
    assert abs(lag0["qm_re"] - 2.5) <= 1e-4 and abs(lag0["fock_re"] - 2.5) <= 1e-10


@pytest.mark.slow
def test_verify_default_passes(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--out", str(out)]) == 0
    report = json.loads((out / "verify.json").read_text())
    assert report["passed"] and report["config"]["grid"]["n_points"] == 1024
    assert all({"name", "value", "tolerance", "passed"} <= set(c) for c in report["checks"])


@pytest.mark.slow
def test_verify_coarse_step_fails(tmp_path, capsys):
    cfg = _write(tmp_path, '[run]\ndt = "T/10"\n')
    out = tmp_path / "v"
    assert main(["verify", "--config", cfg, "--out", str(out), "--format", "json"]) == 1
    report = json.loads((out / "verify.json").read_text())
    assert "evolution.splitting_error_one_period" in report["failed"]
    assert "evolution.splitting_error_one_period" in capsys.readouterr().out


def test_shipped_configs_load():
    from pathlib import Path
    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))
    assert paths
    for p in paths:
        load_config(p)
