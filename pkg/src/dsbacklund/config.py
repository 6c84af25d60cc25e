"""Run configuration: a JSON document with complex numbers as ``[re, im]``."""

import json
from dataclasses import dataclass, field, fields as dc_fields

from .backlund import StepParams
from .errors import ConfigInvalid, DSBTError
from .fields import GridSpec
from .laxpair import SeedParams, consistent_seed
from .verify import TOLERANCES

CHECKS = ("seed_lax", "identities", "jets", "lax_chain", "ds")

_SEED_COMMON = ("q0", "r0", "m0", "n0", "alpha", "beta", "K")
_SEED_RAW = _SEED_COMMON + ("a", "b", "xi1", "xi2", "A10", "A20")
_STEP_KEYS = tuple(f.name for f in dc_fields(StepParams))
_STEP_REQUIRED = ("lambda_l", "lambda_lp")
_GRID_KEYS = ("x_min", "x_max", "nx", "y_min", "y_max", "ny", "t")


@dataclass
class VerifyOptions:
    lambdas: list
    h_t: float = 1e-3
    checks: tuple = CHECKS
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))


@dataclass
class RunConfig:
    seed: SeedParams
    steps: list
    grid: GridSpec
    verify: VerifyOptions
    out_dir: str = "out"
    depths: list = None
    delta: complex = None
    source: dict = field(default_factory=dict)

    def resolved(self):
        """Plain-JSON echo of the fully resolved configuration."""
        seed = {k: _enc(getattr(self.seed, k)) for k in _SEED_RAW}
        seed["mode"] = "raw"
        return {
            "seed": seed,
            "steps": [{k: _enc(getattr(s, k)) for k in _STEP_KEYS} for s in self.steps],
            "grid": {k: getattr(self.grid, k) for k in _GRID_KEYS},
            "verify": {
                "lambdas": [_enc(l) for l in self.verify.lambdas],
                "h_t": self.verify.h_t,
                "checks": list(self.verify.checks),
                "tolerances": dict(sorted(self.verify.tolerances.items())),
            },
            "compact": {"delta": None if self.delta is None else _enc(self.delta)},
            "output": {"dir": self.out_dir, "depths": self.depths},
        }


def _enc(z):
    z = complex(z)
    return [z.real, z.imag]


def parse_complex(v, path):
    if isinstance(v, bool):
        raise ConfigInvalid(path, "expected a number or [re, im]")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        return complex(v[0], v[1])
    raise ConfigInvalid(path, "expected a number or [re, im]")


def _number(v, path, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigInvalid(path, "expected a number")
    if kind is int:
        if int(v) != v:
            raise ConfigInvalid(path, "expected an integer")
        return int(v)
    return float(v)


def _block(doc, key, path):
    v = doc.get(key)
    if not isinstance(v, dict):
        raise ConfigInvalid(f"{path}{key}", "missing or not an object")
    return v


def _reject_unknown(block, allowed, path):
    for k in block:
        if k not in allowed:
            raise ConfigInvalid(f"{path}.{k}", "unknown field")


def _seed(block):
    mode = block.get("mode", "consistent")
    if mode == "consistent":
        _reject_unknown(block, _SEED_COMMON + ("mode", "A0"), "seed")
        for k in ("q0", "r0", "m0", "n0"):
            if k not in block:
                raise ConfigInvalid(f"seed.{k}", "required")
        vals = {k: parse_complex(block[k], f"seed.{k}")
                for k in _SEED_COMMON + ("A0",) if k in block}
        try:
            return consistent_seed(**vals)
        except (DSBTError, ValueError) as exc:
            raise ConfigInvalid("seed", str(exc)) from exc
    if mode == "raw":
        _reject_unknown(block, _SEED_RAW + ("mode",), "seed")
        for k in ("q0", "r0", "m0", "n0", "a", "b"):
            if k not in block:
                raise ConfigInvalid(f"seed.{k}", "required")
        vals = {k: parse_complex(block[k], f"seed.{k}") for k in _SEED_RAW if k in block}
        if vals["m0"] == vals["n0"] or vals["m0"] == 0 or vals["n0"] == 0:
            raise ConfigInvalid("seed.n0", "m0 and n0 must be distinct and nonzero")
        return SeedParams(**vals)
    raise ConfigInvalid("seed.mode", "expected 'consistent' or 'raw'")


def _step(block, i):
    path = f"steps[{i}]"
    if not isinstance(block, dict):
        raise ConfigInvalid(path, "not an object")
    _reject_unknown(block, _STEP_KEYS, path)
    for k in _STEP_REQUIRED:
        if k not in block:
            raise ConfigInvalid(f"{path}.{k}", "required")
    vals = {k: parse_complex(v, f"{path}.{k}") for k, v in block.items()}
    try:
        return StepParams(**vals)
    except (DSBTError, ValueError) as exc:
        raise ConfigInvalid(path, str(exc)) from exc


def _grid(block):
    _reject_unknown(block, _GRID_KEYS, "grid")
    vals = {}
    for k in _GRID_KEYS:
        if k not in block:
            if k == "t":
                continue
            raise ConfigInvalid(f"grid.{k}", "required")
        vals[k] = _number(block[k], f"grid.{k}", int if k in ("nx", "ny") else float)
    try:
        return GridSpec(**vals)
    except ValueError as exc:
        raise ConfigInvalid("grid", str(exc)) from exc


def _verify(block):
    _reject_unknown(block, ("lambdas", "h_t", "checks", "tolerances"), "verify")
    lams = block.get("lambdas", [[1.3, 0.4], [1.7, -0.2], [-1.5, 0.6]])
    if not isinstance(lams, list) or not lams:
        raise ConfigInvalid("verify.lambdas", "expected a non-empty list")
    lambdas = [parse_complex(v, f"verify.lambdas[{i}]") for i, v in enumerate(lams)]
    for i, l in enumerate(lambdas):
        if l == 0:
            raise ConfigInvalid(f"verify.lambdas[{i}]", "must be nonzero")
    checks = block.get("checks", list(CHECKS))
    if not isinstance(checks, list):
        raise ConfigInvalid("verify.checks", "expected a list")
    for i, c in enumerate(checks):
        if c not in CHECKS:
            raise ConfigInvalid(f"verify.checks[{i}]", f"unknown check {c!r}")
    tols = dict(TOLERANCES)
    for k, v in block.get("tolerances", {}).items():
        if k not in TOLERANCES:
            raise ConfigInvalid(f"verify.tolerances.{k}", "unknown tolerance")
        tols[k] = _number(v, f"verify.tolerances.{k}")
    h_t = _number(block.get("h_t", 1e-3), "verify.h_t")
    return VerifyOptions(lambdas, h_t, tuple(checks), tols)


def parse_config(doc):
    """Validate a decoded JSON document and build a :class:`RunConfig`."""
    if not isinstance(doc, dict):
        raise ConfigInvalid("$", "top level must be an object")
    _reject_unknown(doc, ("seed", "steps", "grid", "verify", "compact", "output"), "$")
    seed = _seed(_block(doc, "seed", ""))
    raw_steps = doc.get("steps", [])
    if not isinstance(raw_steps, list):
        raise ConfigInvalid("steps", "expected a list")
    steps = [_step(b, i) for i, b in enumerate(raw_steps)]
    grid = _grid(_block(doc, "grid", ""))
    verify = _verify(doc.get("verify", {}))
    compact = doc.get("compact", {})
    _reject_unknown(compact, ("delta",), "compact")
    delta = compact.get("delta")
    delta = None if delta is None else parse_complex(delta, "compact.delta")
    output = doc.get("output", {})
    _reject_unknown(output, ("dir", "depths"), "output")
    depths = output.get("depths")
    if depths is not None:
        if not isinstance(depths, list):
            raise ConfigInvalid("output.depths", "expected a list")
        depths = [_number(d, f"output.depths[{i}]", int) for i, d in enumerate(depths)]
        for i, d in enumerate(depths):
            if not 0 <= d <= len(steps):
                raise ConfigInvalid(f"output.depths[{i}]", f"must be in 0..{len(steps)}")
    return RunConfig(seed, steps, grid, verify, output.get("dir", "out"), depths, delta, doc)


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(str(path), f"cannot read: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(str(path), f"invalid JSON: {exc}") from exc
    return parse_config(doc)
