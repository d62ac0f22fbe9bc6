import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonia.config import (DEFAULT_LADDER, DEFAULT_TOLERANCES, RunConfig, config_from_dict, config_hash,
                            emit_config, parse_config)
from resonia.errors import SchemaError, VersionError


def _write(tmp_path, obj):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(obj))
    return p


def test_minimal_file_fills_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, {"family": "gauss_well", "params": {"E0": 0.5}}))
    assert cfg.ladder == list(DEFAULT_LADDER)
    assert cfg.theta == 0.3 and cfg.R0 == 4.0
    assert cfg.tolerances == DEFAULT_TOLERANCES


def test_negative_tolerance_names_field(tmp_path):
    with pytest.raises(SchemaError) as e:
        parse_config(_write(tmp_path, {"family": "gauss_well", "tolerances": {"green_rel": -0.1}}))
    assert e.value.path == "tolerances.green_rel"


@pytest.mark.parametrize("raw,path", [
    ({"family": "gauss_well", "colour": 1}, "colour"),
    ({"family": "gauss_well", "grid": {"cells": 3}}, "grid.cells"),
    ({"family": "gauss_well", "ladder": [0.03, 0.04]}, "ladder"),
    ({"family": "gauss_well", "grid": {"nodes": -5}}, "grid.nodes"),
    ({"family": "nope"}, "family"),
    ({"params": {}}, "family"),
])
def test_schema_errors(raw, path):
    with pytest.raises(SchemaError) as e:
        config_from_dict(raw)
    assert e.value.path == path


def test_version_error():
    with pytest.raises(VersionError):
        config_from_dict({"family": "gauss_well", "schema_version": 2})


def test_missing_file(tmp_path):
    with pytest.raises(SchemaError):
        parse_config(tmp_path / "absent.json")


ladders = st.lists(st.floats(min_value=0.005, max_value=0.2), min_size=1, max_size=6, unique=True).map(
    lambda v: sorted(v, reverse=True))


@settings(max_examples=40, deadline=None)
@given(ladders, st.floats(min_value=0.01, max_value=1.0), st.integers(0, 2**31), st.booleans())
def test_emit_parse_round_trip(ladder, tol, seed, radial):
    cfg = config_from_dict({"family": "gauss_well", "ladder": ladder, "seed": seed,
                            "tolerances": {"S_rel": tol}, "radial": {"enabled": radial}})
    text = emit_config(cfg)
    again = config_from_dict(json.loads(text))
    assert emit_config(again) == text
    assert config_hash(again) == config_hash(cfg)


def test_key_order_does_not_matter():
    a = config_from_dict({"family": "gauss_well", "theta": 0.25, "R0": 5.0})
    b = config_from_dict({"R0": 5.0, "theta": 0.25, "family": "gauss_well"})
    assert emit_config(a) == emit_config(b)


def test_potential_from_config():
    spec = RunConfig().potential()
    assert spec.well_energy == pytest.approx(0.5)
