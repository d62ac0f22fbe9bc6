import json

import numpy as np

from resonia import SCHEMA_VERSION
from resonia.io import read_csv, write_csv, write_json
from resonia.wkb import NORMALIZATION


def test_json_header(tmp_path):
    p = write_json(tmp_path / "a.json", {"x": np.float64(1.5), "z": 1 - 2j, "bad": float("nan")}, "abc")
    doc = json.loads(p.read_text())
    assert doc["meta"] == {"schema_version": SCHEMA_VERSION, "config_hash": "abc", "normalization": NORMALIZATION}
    assert doc["x"] == 1.5
    assert doc["z"] == {"re": 1.0, "im": -2.0}
    assert doc["bad"] == "nan"


def test_csv_round_trip(tmp_path):
    x = np.linspace(0, 1, 7)
    p = write_csv(tmp_path / "a.csv", {"x": x, "d": x**2}, "abc")
    text = p.read_text()
    assert text.startswith("# schema_version: 1\n# config_hash: abc\n# normalization:")
    back = read_csv(p)
    assert np.array_equal(back["x"], x)
    assert np.array_equal(back["d"], x**2)
