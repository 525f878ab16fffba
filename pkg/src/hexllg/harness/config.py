"""Run configuration: JSON schema, validation and canonical hashing.

A configuration is one JSON object::

    {
      "lattice":    {"n1": 8, "n2": 16, "h": 0.25}
                    or {"n1": 4, "n2": 8, "h0": 0.4, "levels": 3, "ratio": 2},
      "params":     {"J1": 1.0, "J2": 0, "J3": 0, "K": 0, "mu": 0,
                     "alpha": 0.1, "h_star": 1.0, "gamma": 1.0},
      "coeffs":     {"lambda": <field>, "L": [<field>, <field>, <field>], "B": <field>},
      "initial":    {"kind": "uniform" | "gaussian_tilt" | "meron_like" | "random_smooth", ...},
      "time":       {"t_end": 1.0, "dt": 0.01 or "dt_rule": {"c": 0.1},
                     "monitor_stride": 10, "snapshot_times": [0.0, 1.0], "samples": 8},
      "integrator": "rk4" | "midpoint",
      "outputs":    {"directory": "out"},
      "continuum":  {"refine": 2, "mapping": "discrete_limit", "c": 0.2}
    }

A ``<field>`` is ``{"kind": "constant", "value": v}``, ``{"kind": "gaussian",
"amplitude", "center", "width", "offset", "direction"}`` or ``{"kind": "grid",
"origin", "dx", "dy", "values"}``.  Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..coefficients import CoefficientFields, ConstantField, GaussianBump, TabulatedGrid
from ..model import ConfigurationError, MaterialParams

SCHEMA_VERSION = "1.0"

INITIAL_KINDS = {
    "uniform": {"direction": None},
    "gaussian_tilt": {"center": None, "width": None, "amplitude": 1.0, "axis": [1.0, 0.0, 0.0]},
    "meron_like": {"center": None, "radius": None, "polarity": 1, "vorticity": 1, "phase": 0.0},
    "random_smooth": {"seed": None, "smoothing_passes": 3},
}
FIELD_KINDS = {
    "constant": {"value": None},
    "gaussian": {"amplitude": None, "center": None, "width": None, "offset": 0.0, "direction": None},
    "grid": {"origin": [0.0, 0.0], "dx": None, "dy": None, "values": None},
}
_OPTIONAL_NONE = {("gaussian", "direction")}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class LatticeSpec:
    n1: int
    n2: int
    h: Optional[float] = None
    h0: Optional[float] = None
    levels: Optional[int] = None
    ratio: int = 2

    @property
    def is_ladder(self) -> bool:
        return self.levels is not None

    def level(self, index: int) -> tuple:
        """``(n1, n2, h)`` of ladder level ``index``; level 0 is the coarsest."""
        if not self.is_ladder:
            return (self.n1, self.n2, self.h)
        f = self.ratio**index
        return (self.n1 * f, self.n2 * f, self.h0 / f)

    def to_dict(self) -> dict:
        if self.is_ladder:
            return {"n1": self.n1, "n2": self.n2, "h0": self.h0, "levels": self.levels,
                    "ratio": self.ratio}
        return {"n1": self.n1, "n2": self.n2, "h": self.h}


@dataclass(frozen=True)
class TimeSpec:
    t_end: float
    dt: Optional[float] = None
    dt_rule_c: Optional[float] = None
    monitor_stride: int = 1
    snapshot_times: tuple = ()
    samples: int = 8

    def step_for(self, h: float, exchange_scale: float) -> float:
        if self.dt is not None:
            return self.dt
        return self.dt_rule_c * h**2 / exchange_scale

    def to_dict(self) -> dict:
        out = {"t_end": self.t_end}
        if self.dt is not None:
            out["dt"] = self.dt
        else:
            out["dt_rule"] = {"c": self.dt_rule_c}
        out["monitor_stride"] = self.monitor_stride
        out["snapshot_times"] = list(self.snapshot_times)
        out["samples"] = self.samples
        return out


@dataclass(frozen=True)
class ContinuumSpec:
    refine: int = 2
    mapping: str = "discrete_limit"
    c: float = 0.2


@dataclass(frozen=True)
class RunConfig:
    lattice: LatticeSpec
    params: MaterialParams
    coeffs: dict
    initial: dict
    time: TimeSpec
    integrator: str = "rk4"
    outputs: dict = field(default_factory=lambda: {"directory": "out"})
    continuum: ContinuumSpec = ContinuumSpec()

    def to_dict(self) -> dict:
        return {
            "lattice": self.lattice.to_dict(),
            "params": asdict(self.params),
            "coeffs": json.loads(json.dumps(self.coeffs)),
            "initial": dict(self.initial),
            "time": self.time.to_dict(),
            "integrator": self.integrator,
            "outputs": dict(self.outputs),
            "continuum": asdict(self.continuum),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def coefficient_fields(self, periods=None) -> CoefficientFields:
        """Evaluators for the coefficient specs; gaussians wrap with ``periods``."""
        per = None if periods is None else tuple(map(tuple, periods))
        return CoefficientFields(
            lam=_build_field(self.coeffs["lambda"], per),
            L=tuple(_build_field(s, per) for s in self.coeffs["L"]),
            B=_build_field(self.coeffs["B"], per),
        )


def _build_field(spec: dict, periods):
    kind = spec["kind"]
    if kind == "constant":
        v = spec["value"]
        return ConstantField(tuple(v) if isinstance(v, list) else v)
    if kind == "gaussian":
        d = spec.get("direction")
        return GaussianBump(spec["amplitude"], tuple(spec["center"]), spec["width"],
                            spec.get("offset", 0.0), None if d is None else tuple(d), periods)
    return TabulatedGrid(tuple(spec["origin"]), spec["dx"], spec["dy"], spec["values"])


# ---------------------------------------------------------------- validation


class _Checker:
    def __init__(self):
        self.errors = []

    def fail(self, path: str, msg: str) -> None:
        self.errors.append(f"{path}: {msg}")

    def obj(self, value, path: str, allowed, required=()) -> dict:
        if not isinstance(value, dict):
            self.fail(path, f"expected an object, got {type(value).__name__}")
            return {}
        for key in sorted(set(value) - set(allowed)):
            self.fail(f"{path}.{key}", "unknown key")
        for key in required:
            if key not in value:
                self.fail(f"{path}.{key}", "missing required key")
        return value

    def number(self, d: dict, key: str, path: str, default=None, positive=False,
               nonneg=False, integer=False, required=False):
        if key not in d:
            if required:
                return None
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(f"{path}.{key}", f"expected a finite number, got {v!r}")
            return default
        if integer and int(v) != v:
            self.fail(f"{path}.{key}", f"expected an integer, got {v!r}")
            return default
        if positive and not v > 0:
            self.fail(f"{path}.{key}", f"must be positive, got {v!r}")
            return default
        if nonneg and not v >= 0:
            self.fail(f"{path}.{key}", f"must be non-negative, got {v!r}")
            return default
        return int(v) if integer else v

    def vector(self, d: dict, key: str, path: str, length: int, default=None):
        if key not in d:
            return default
        v = d[key]
        if (not isinstance(v, list) or len(v) != length
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                           and math.isfinite(x) for x in v)):
            self.fail(f"{path}.{key}", f"expected a list of {length} finite numbers, got {v!r}")
            return default
        return [float(x) for x in v]


def _check_field(c: _Checker, spec, path: str, vector: bool) -> dict:
    if not isinstance(spec, dict):
        c.fail(path, "expected a field object")
        return {"kind": "constant", "value": [0.0] * 3 if vector else 0.0}
    kind = spec.get("kind")
    if kind not in FIELD_KINDS:
        c.fail(f"{path}.kind", f"expected one of {sorted(FIELD_KINDS)}, got {kind!r}")
        return {"kind": "constant", "value": [0.0] * 3 if vector else 0.0}
    allowed = set(FIELD_KINDS[kind]) | {"kind"}
    required = [k for k, v in FIELD_KINDS[kind].items() if v is None and (kind, k) not in _OPTIONAL_NONE]
    c.obj(spec, path, allowed, required)
    out = {"kind": kind}
    if kind == "constant":
        if vector:
            out["value"] = c.vector(spec, "value", path, 3, [0.0, 0.0, 0.0])
        else:
            out["value"] = float(c.number(spec, "value", path, 0.0))
    elif kind == "gaussian":
        out["amplitude"] = float(c.number(spec, "amplitude", path, 0.0))
        out["center"] = c.vector(spec, "center", path, 2, [0.0, 0.0])
        out["width"] = float(c.number(spec, "width", path, 1.0, positive=True))
        out["offset"] = float(c.number(spec, "offset", path, 0.0))
        if vector:
            d = c.vector(spec, "direction", path, 3, None)
            if d is None:
                c.fail(f"{path}.direction", "vector gaussian fields need a direction")
            out["direction"] = d
        elif "direction" in spec:
            c.fail(f"{path}.direction", "scalar fields take no direction")
    else:
        out["origin"] = c.vector(spec, "origin", path, 2, [0.0, 0.0])
        out["dx"] = float(c.number(spec, "dx", path, 1.0, positive=True))
        out["dy"] = float(c.number(spec, "dy", path, 1.0, positive=True))
        vals = spec.get("values")
        try:
            arr = np.asarray(vals, dtype=float)
            want = 3 if vector else 2
            if arr.ndim != want or arr.shape[0] < 2 or arr.shape[1] < 2 or (
                    vector and arr.shape[2] != 3) or not np.all(np.isfinite(arr)):
                raise ValueError
            out["values"] = arr.tolist()
        except (TypeError, ValueError):
            shape = "[nx][ny][3]" if vector else "[nx][ny]"
            c.fail(f"{path}.values", f"expected a finite {shape} table with nx, ny >= 2")
            out["values"] = None
    return out


def _check_initial(c: _Checker, spec, path: str) -> dict:
    if not isinstance(spec, dict):
        c.fail(path, "expected an object")
        return {}
    kind = spec.get("kind")
    if kind not in INITIAL_KINDS:
        c.fail(f"{path}.kind", f"expected one of {sorted(INITIAL_KINDS)}, got {kind!r}")
        return {}
    fields = INITIAL_KINDS[kind]
    c.obj(spec, path, set(fields) | {"kind"}, [k for k, v in fields.items() if v is None])
    out = {"kind": kind}
    if kind == "uniform":
        d = c.vector(spec, "direction", path, 3, [0.0, 0.0, 1.0])
        if d is not None and math.hypot(*d) == 0:
            c.fail(f"{path}.direction", "must be nonzero")
        out["direction"] = d
    elif kind == "gaussian_tilt":
        out["center"] = c.vector(spec, "center", path, 2, [0.0, 0.0])
        out["width"] = float(c.number(spec, "width", path, 1.0, positive=True))
        out["amplitude"] = float(c.number(spec, "amplitude", path, 1.0))
        axis = c.vector(spec, "axis", path, 3, [1.0, 0.0, 0.0])
        if axis is not None and math.hypot(axis[0], axis[1]) == 0:
            c.fail(f"{path}.axis", "needs a component orthogonal to e_z")
        out["axis"] = axis
    elif kind == "meron_like":
        out["center"] = c.vector(spec, "center", path, 2, [0.0, 0.0])
        out["radius"] = float(c.number(spec, "radius", path, 1.0, positive=True))
        pol = c.number(spec, "polarity", path, 1, integer=True)
        if pol not in (1, -1):
            c.fail(f"{path}.polarity", f"must be +1 or -1, got {pol!r}")
        out["polarity"] = pol
        out["vorticity"] = c.number(spec, "vorticity", path, 1, integer=True)
        out["phase"] = float(c.number(spec, "phase", path, 0.0))
    else:
        out["seed"] = c.number(spec, "seed", path, 0, integer=True, nonneg=True)
        out["smoothing_passes"] = c.number(spec, "smoothing_passes", path, 3, integer=True,
                                           nonneg=True)
    return out


def config_from_dict(raw) -> RunConfig:
    """Validate a parsed JSON document; raises :class:`ConfigError` listing every problem."""
    c = _Checker()
    top = c.obj(raw, "config",
                {"lattice", "params", "coeffs", "initial", "time", "integrator", "outputs",
                 "continuum"},
                ("lattice", "initial", "time"))

    lat_raw = c.obj(top.get("lattice", {}), "lattice", {"n1", "n2", "h", "h0", "levels", "ratio"},
                    ("n1", "n2"))
    n1 = c.number(lat_raw, "n1", "lattice", 4, integer=True)
    n2 = c.number(lat_raw, "n2", "lattice", 4, integer=True)
    if n1 is not None and n1 < 2:
        c.fail("lattice.n1", f"must be at least 2, got {n1}")
    if n2 is not None and n2 < 3:
        c.fail("lattice.n2", f"must be at least 3, got {n2}")
    if "levels" in lat_raw or "h0" in lat_raw:
        if "h" in lat_raw:
            c.fail("lattice.h", "give either h or a ladder (h0, levels), not both")
        for key in ("h0", "levels"):
            if key not in lat_raw:
                c.fail(f"lattice.{key}", "ladder needs both h0 and levels")
        lattice = LatticeSpec(
            n1, n2, None,
            float(c.number(lat_raw, "h0", "lattice", 1.0, positive=True)),
            c.number(lat_raw, "levels", "lattice", 1, integer=True, positive=True),
            c.number(lat_raw, "ratio", "lattice", 2, integer=True, positive=True),
        )
    else:
        if "h" not in lat_raw:
            c.fail("lattice.h", "missing required key (or give h0 and levels)")
        if "ratio" in lat_raw:
            c.fail("lattice.ratio", "only valid for a ladder")
        lattice = LatticeSpec(n1, n2, float(c.number(lat_raw, "h", "lattice", 1.0, positive=True)))

    p_raw = c.obj(top.get("params", {}), "params",
                  {"J1", "J2", "J3", "K", "mu", "alpha", "h_star", "gamma"})
    defaults = asdict(MaterialParams())
    pvals = {}
    for key, dv in defaults.items():
        pvals[key] = float(c.number(p_raw, key, "params", dv,
                                    positive=key in ("h_star", "gamma"), nonneg=key == "alpha"))
    try:
        params = MaterialParams(**pvals)
    except ConfigurationError as exc:
        c.fail("params", str(exc))
        params = MaterialParams()

    co_raw = c.obj(top.get("coeffs", {}), "coeffs", {"lambda", "L", "B"})
    coeffs = {
        "lambda": _check_field(c, co_raw.get("lambda", {"kind": "constant", "value": 0.0}),
                               "coeffs.lambda", vector=False),
        "B": _check_field(c, co_raw.get("B", {"kind": "constant", "value": [0.0, 0.0, 0.0]}),
                          "coeffs.B", vector=True),
    }
    L_raw = co_raw.get("L", [{"kind": "constant", "value": 0.0}] * 3)
    if not isinstance(L_raw, list) or len(L_raw) != 3:
        c.fail("coeffs.L", "expected a list of three field objects")
        L_raw = [{"kind": "constant", "value": 0.0}] * 3
    coeffs["L"] = [_check_field(c, s, f"coeffs.L[{i}]", vector=False) for i, s in enumerate(L_raw)]

    initial = _check_initial(c, top.get("initial", {}), "initial")

    t_raw = c.obj(top.get("time", {}), "time",
                  {"t_end", "dt", "dt_rule", "monitor_stride", "snapshot_times", "samples"},
                  ("t_end",))
    t_end = c.number(t_raw, "t_end", "time", 0.0, nonneg=True, required=True)
    t_end = 0.0 if t_end is None else float(t_end)
    dt = None
    rule_c = None
    if "dt" in t_raw and "dt_rule" in t_raw:
        c.fail("time.dt", "give either dt or dt_rule, not both")
    if "dt" in t_raw:
        dt = float(c.number(t_raw, "dt", "time", 1.0, positive=True))
    else:
        rule = c.obj(t_raw.get("dt_rule", {"c": 0.1}), "time.dt_rule", {"c"}, ("c",))
        rule_c = float(c.number(rule, "c", "time.dt_rule", 0.1, positive=True))
        scale = params.exchange_scale
        if not scale > 0:
            c.fail("time.dt_rule", "needs a nonzero exchange scale; give dt explicitly")
    stride = c.number(t_raw, "monitor_stride", "time", 1, integer=True, positive=True)
    snaps = t_raw.get("snapshot_times", [t_end])
    if not isinstance(snaps, list) or not all(
            isinstance(s, (int, float)) and not isinstance(s, bool) for s in snaps):
        c.fail("time.snapshot_times", "expected a list of numbers")
        snaps = []
    for s in snaps:
        if not 0 <= s <= t_end:
            c.fail("time.snapshot_times", f"time {s!r} outside [0, t_end]")
    samples = c.number(t_raw, "samples", "time", 8, integer=True, positive=True)
    if samples is not None and samples < 2:
        c.fail("time.samples", "need at least 2 sample times")
    time_spec = TimeSpec(t_end, dt, rule_c, stride, tuple(sorted(float(s) for s in snaps)), samples)

    integrator = top.get("integrator", "rk4")
    if integrator not in ("rk4", "midpoint"):
        c.fail("integrator", f"expected 'rk4' or 'midpoint', got {integrator!r}")

    out_raw = c.obj(top.get("outputs", {"directory": "out"}), "outputs", {"directory"})
    directory = out_raw.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        c.fail("outputs.directory", "expected a non-empty path string")
        directory = "out"

    cont_raw = c.obj(top.get("continuum", {}), "continuum", {"refine", "mapping", "c"})
    refine = c.number(cont_raw, "refine", "continuum", 2, integer=True, positive=True)
    mapping = cont_raw.get("mapping", "discrete_limit")
    if mapping not in ("table", "discrete_limit"):
        c.fail("continuum.mapping", f"expected 'table' or 'discrete_limit', got {mapping!r}")
    cc = float(c.number(cont_raw, "c", "continuum", 0.2, positive=True))

    if c.errors:
        raise ConfigError(c.errors)
    return RunConfig(lattice, params, coeffs, initial, time_spec, integrator,
                     {"directory": directory}, ContinuumSpec(refine, mapping, cc))


def read_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: malformed JSON ({exc.msg})"]) from exc
    return config_from_dict(raw)


def write_config(path, config: RunConfig) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
