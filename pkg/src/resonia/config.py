"""Run configuration: parsing with defaults, validation and canonical emission."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import SCHEMA_VERSION
from .errors import SchemaError, VersionError
from .potential import FAMILIES, PotentialSpec

DEFAULT_LADDER = (0.05, 0.04, 0.035, 0.03, 0.025)

DEFAULT_TOLERANCES = {
    "eikonal_factor": 5.0,
    "action_rel": 0.01,
    "E1_rel": 0.03,
    "harmonic_abs": 5e-4,
    "qm_ratio_lo": 3.2,
    "qm_ratio_hi": 4.8,
    "overlap": 0.995,
    "fold_rel": 1e-6,
    "steepest_rel": 0.01,
    "re_phi_floor": 1e-8,
    "imphi_rel": 0.05,
    "nu_tilde_abs": 1e-6,
    "theta_rel": 1e-3,
    "grid_rel": 0.01,
    "shift_ratio": 10.0,
    "green_rel": 0.05,
    "offset_rel": 0.02,
    "S_rel": 0.02,
    "p_abs": 0.15,
    "f0_rel": 0.2,
    "agmon_abs": 1e-12,
    "agmon_order_lo": 1.8,
    "agmon_order_hi": 2.2,
    "radial_p_abs": 0.2,
}


@dataclass
class GridConfig:
    nodes: int = 8000
    box: float = 12.0
    agmon_nodes: int = 801


@dataclass
class RadialConfig:
    enabled: bool = False
    nodes: int = 8000


@dataclass
class RunConfig:
    family: str = "gauss_well"
    params: dict = field(default_factory=lambda: {"E0": 0.5, "kappa": 1.0, "alpha": 1.0})
    dim: int = 1
    grid: GridConfig = field(default_factory=GridConfig)
    ladder: list = field(default_factory=lambda: list(DEFAULT_LADDER))
    theta: float = 0.3
    theta_alt: float = 0.2
    R0: float = 4.0
    band: list = field(default_factory=lambda: [0.6, 1.0])
    h_caustic: float = 0.02
    eta_frac: float = 0.2
    eta_resonance_frac: float = 0.05
    offsets: list = field(default_factory=lambda: [1.10, 1.15, 1.20])
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: str = "."
    seed: int = 0
    radial: RadialConfig = field(default_factory=RadialConfig)
    schema_version: int = SCHEMA_VERSION

    def potential(self) -> PotentialSpec:
        return PotentialSpec(self.family, copy.deepcopy(self.params), self.dim).with_well()

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {"grid": GridConfig, "radial": RadialConfig}
_TOP = set(RunConfig.__dataclass_fields__)


def _check_number(path, v, positive=False, integer=False):
    ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    if integer:
        ok = ok and float(v) == int(v)
    if not ok:
        raise SchemaError(path, "expected a number")
    if positive and not v > 0:
        raise SchemaError(path, "must be positive")


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise SchemaError("$", "top level must be an object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise VersionError(f"schema_version {version!r} is not supported (expected {SCHEMA_VERSION})")
    for k in raw:
        if k not in _TOP:
            raise SchemaError(k, "unknown key")
    if "family" not in raw:
        raise SchemaError("family", "required")
    if raw["family"] not in FAMILIES:
        raise SchemaError("family", f"unknown family; choose from {FAMILIES}")
    kw: dict[str, Any] = {}
    for k, v in raw.items():
        if k in _SECTIONS:
            cls = _SECTIONS[k]
            if not isinstance(v, dict):
                raise SchemaError(k, "expected an object")
            for kk in v:
                if kk not in cls.__dataclass_fields__:
                    raise SchemaError(f"{k}.{kk}", "unknown key")
            kw[k] = cls(**v)
        elif k == "tolerances":
            if not isinstance(v, dict):
                raise SchemaError(k, "expected an object")
            tol = dict(DEFAULT_TOLERANCES)
            for kk, vv in v.items():
                if kk not in DEFAULT_TOLERANCES:
                    raise SchemaError(f"tolerances.{kk}", "unknown key")
                _check_number(f"tolerances.{kk}", vv, positive=True)
                tol[kk] = float(vv)
            kw[k] = tol
        else:
            kw[k] = copy.deepcopy(v)
    cfg = RunConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if not isinstance(cfg.params, dict):
        raise SchemaError("params", "expected an object")
    if cfg.dim not in (1, 2):
        raise SchemaError("dim", "must be 1 or 2")
    _check_number("grid.nodes", cfg.grid.nodes, positive=True, integer=True)
    _check_number("grid.box", cfg.grid.box, positive=True)
    _check_number("grid.agmon_nodes", cfg.grid.agmon_nodes, positive=True, integer=True)
    _check_number("radial.nodes", cfg.radial.nodes, positive=True, integer=True)
    if not isinstance(cfg.radial.enabled, bool):
        raise SchemaError("radial.enabled", "expected a boolean")
    if not isinstance(cfg.ladder, list) or not cfg.ladder:
        raise SchemaError("ladder", "expected a non-empty list")
    for i, h in enumerate(cfg.ladder):
        _check_number(f"ladder[{i}]", h, positive=True)
    if any(b >= a for a, b in zip(cfg.ladder, cfg.ladder[1:])):
        raise SchemaError("ladder", "must be strictly decreasing")
    for name in ("theta", "theta_alt", "R0", "h_caustic", "eta_frac", "eta_resonance_frac"):
        _check_number(name, getattr(cfg, name), positive=True)
    if not (isinstance(cfg.band, list) and len(cfg.band) == 2 and 0 < cfg.band[0] < cfg.band[1]):
        raise SchemaError("band", "expected [lo, hi] with 0 < lo < hi")
    if not cfg.offsets or any(not (isinstance(o, (int, float)) and o > 1) for o in cfg.offsets):
        raise SchemaError("offsets", "surface offsets must exceed 1")
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
        raise SchemaError("seed", "expected an integer")
    if not isinstance(cfg.output_dir, str):
        raise SchemaError("output_dir", "expected a string")


def parse_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise SchemaError("$", f"config file {str(p)!r} not found")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from exc
    return config_from_dict(raw)


def emit_config(cfg: RunConfig) -> str:
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(emit_config(cfg).encode()).hexdigest()
