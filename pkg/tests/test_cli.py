import json

import pytest

from resonia.cli import main
from resonia.io import read_csv


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"family": "gauss_well", "params": {"E0": 0.5, "kappa": 1.0, "alpha": 1.0},
                             "output_dir": str(tmp_path)}))
    return p


def test_agmon_csv(cfg, tmp_path):
    assert main(["agmon", "--config", str(cfg), "--grid", "201"]) == 0
    cols = read_csv(tmp_path / "field.csv")
    assert set(cols) == {"x", "d", "V", "mask"}


def test_gamma_json(cfg, tmp_path):
    assert main(["gamma", "--config", str(cfg), "--out", str(tmp_path / "g.json")]) == 0
    doc = json.loads((tmp_path / "g.json").read_text())
    assert doc["n_gamma"] == 0 and len(doc["points"]) == 2
    assert doc["meta"]["schema_version"] == 1


def test_wkb_and_caustic(cfg, tmp_path):
    assert main(["wkb", "--config", str(cfg), "--h", "0.05"]) == 0
    assert set(read_csv(tmp_path / "wkb.csv")) == {"x", "d", "a0", "mask"}
    assert main(["caustic", "--config", str(cfg), "--h", "0.02", "--x1-index", "1"]) == 0
    strip = read_csv(tmp_path / "strip.csv")
    assert list(strip) == ["xn_plus_b", "re_phi", "im_phi", "re_w", "im_w", "a0_tilde_abs"]
    assert len(strip["xn_plus_b"]) > 20


def test_resonance_json(cfg, tmp_path):
    out = tmp_path / "r.json"
    assert main(["resonance", "--config", str(cfg), "--h", "0.05", "--nodes", "6000", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["im_rho"] < 0
    assert set(doc) >= {"h", "theta", "lambda_D", "re_rho", "im_rho", "residual", "grid"}


def test_bad_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"family": "gauss_well", "tolerances": {"p_abs": -1}}))
    assert main(["verify", "--config", str(p)]) == 2
    assert "tolerances.p_abs" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path):
    p = tmp_path / "h.json"
    p.write_text(json.dumps({"family": "harmonic", "params": {"E0": 0.5, "k": 1.0}}))
    assert main(["gamma", "--config", str(p)]) == 3


def test_width_two_points_is_insufficient(cfg, tmp_path):
    out = tmp_path / "w.json"
    assert main(["width", "--config", str(cfg), "--h-ladder", "0.05,0.04", "--out", str(out)]) == 1
    assert json.loads(out.read_text())["note"] == "insufficient ladder"


def test_verify_two_point_ladder(tmp_path, capsys):
    p = tmp_path / "two.json"
    p.write_text(json.dumps({"family": "gauss_well", "ladder": [0.05, 0.04], "output_dir": str(tmp_path)}))
    assert main(["verify", "--config", str(p)]) != 0
    rep = json.loads((tmp_path / "report.json").read_text())
    c8 = [e for e in rep["criteria"] if e["id"] == 8][0]
    assert c8["note"] == "insufficient ladder" and not c8["pass"]


def test_threads_env(monkeypatch):
    from resonia.acceptance import thread_budget

    monkeypatch.setenv("RESONIA_THREADS", "3")
    assert thread_budget() == 3
    monkeypatch.setenv("RESONIA_THREADS", "junk")
    assert thread_budget() == 1
