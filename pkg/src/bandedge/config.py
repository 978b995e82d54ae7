"""Run configuration: one TOML file drives every pipeline stage.

Layers are top-level [[layer]] tables; the remaining sections select the
scan window, the envelope profile, and the synthesis scales.  Every
numeric field is validated (finite, lattice sizes powers of two,
chi in (0, 0.2]) and violations raise ConfigError with the section and
field named.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import ConfigError
from .medium import LayerStack, build_stack

DEFAULT_CONFIG_TOML = """\
# Quarter-wave-like two-layer stack, internal units (c = 1).
[[layer]]
thickness = 0.25
eps = 4.0
mu = 1.0

[[layer]]
thickness = 0.5
eps = 1.0
mu = 1.0

[bands]
omega_min = 0.1
omega_max = 4.5
scan_points = 512
polarization = "AXIAL"
p_par = 0.0

[stationary]
omega_min = 0.1
omega_max = 4.5
scan_points = 512
samples_per_layer = 16

[envelope]
profile = "gaussian"      # gaussian | plane | file
mode = "separated"        # separated | tau3d
width = 3.0
center = 0.0
carrier = 0.0
nx = 256
ny = 1
dxi = 0.3125
deta = 0.5
delta_omega = 0.0
edge_index = 0
zeta_count = 9
ring_center = 1.5
ring_width = 0.3

[synth]
chi = 0.05
periods = 8
samples_per_period = 32
order = 1

[validate]
seed = 12345

[output]
directory = "out"
formats = ["csv", "bin"]
"""


@dataclass
class RunConfig:
    """Validated configuration for the CLI pipeline."""

    layers: list
    bands: dict
    stationary: dict
    envelope: dict
    synth: dict
    validate: dict
    output: dict
    unit_scale: float = 1.0

    def stack(self) -> LayerStack:
        return build_stack([(l["thickness"], l["eps"], l["mu"])
                            for l in self.layers], self.unit_scale)


def _need(table, section, key, kind, default=None):
    if key not in table:
        if default is not None:
            return default
        raise ConfigError("missing required field", section=section, field=key)
    val = table[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"expected a number, got {val!r}",
                              section=section, field=key)
        val = float(val)
        if not math.isfinite(val):
            raise ConfigError(f"non-finite value {val!r}",
                              section=section, field=key)
        return val
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"expected an integer, got {val!r}",
                              section=section, field=key)
        return val
    if kind is str:
        if not isinstance(val, str):
            raise ConfigError(f"expected a string, got {val!r}",
                              section=section, field=key)
        return val
    raise AssertionError(kind)


def _power_of_two(section, key, n):
    if n < 1 or (n & (n - 1)) != 0:
        raise ConfigError(f"lattice size must be a power of two, got {n}",
                          section=section, field=key)
    return n


def parse_config(data: dict) -> RunConfig:
    if "layer" not in data or not data["layer"]:
        raise ConfigError("missing required section", section="layer")
    layers = []
    for i, tab in enumerate(data["layer"]):
        layers.append({
            "thickness": _need(tab, f"layer[{i}]", "thickness", float),
            "eps": _need(tab, f"layer[{i}]", "eps", float),
            "mu": _need(tab, f"layer[{i}]", "mu", float, default=1.0),
        })

    bands_in = data.get("bands", {})
    bands = {
        "omega_min": _need(bands_in, "bands", "omega_min", float, 0.1),
        "omega_max": _need(bands_in, "bands", "omega_max", float, 4.5),
        "scan_points": _need(bands_in, "bands", "scan_points", int, 512),
        "polarization": _need(bands_in, "bands", "polarization", str, "AXIAL"),
        "p_par": _need(bands_in, "bands", "p_par", float, 0.0),
    }
    if bands["polarization"] not in ("TM", "TE", "AXIAL"):
        raise ConfigError(f"unknown polarization {bands['polarization']!r}",
                          section="bands", field="polarization")
    if bands["scan_points"] < 64:
        raise ConfigError("scan_points must be >= 64",
                          section="bands", field="scan_points")

    st_in = data.get("stationary", {})
    stationary = {
        "omega_min": _need(st_in, "stationary", "omega_min", float, 0.1),
        "omega_max": _need(st_in, "stationary", "omega_max", float, 4.5),
        "scan_points": _need(st_in, "stationary", "scan_points", int, 512),
        "samples_per_layer": _need(st_in, "stationary", "samples_per_layer",
                                   int, 16),
    }

    env_in = data.get("envelope", {})
    envelope = {
        "profile": _need(env_in, "envelope", "profile", str, "gaussian"),
        "mode": _need(env_in, "envelope", "mode", str, "separated"),
        "width": _need(env_in, "envelope", "width", float, 3.0),
        "center": _need(env_in, "envelope", "center", float, 0.0),
        "carrier": _need(env_in, "envelope", "carrier", float, 0.0),
        "nx": _power_of_two("envelope", "nx",
                            _need(env_in, "envelope", "nx", int, 256)),
        "ny": _power_of_two("envelope", "ny",
                            _need(env_in, "envelope", "ny", int, 1)),
        "dxi": _need(env_in, "envelope", "dxi", float, 0.3125),
        "deta": _need(env_in, "envelope", "deta", float, 0.5),
        "delta_omega": _need(env_in, "envelope", "delta_omega", float, 0.0),
        "edge_index": _need(env_in, "envelope", "edge_index", int, 0),
        "zeta_count": _need(env_in, "envelope", "zeta_count", int, 9),
        "ring_center": _need(env_in, "envelope", "ring_center", float, 1.5),
        "ring_width": _need(env_in, "envelope", "ring_width", float, 0.3),
        "spectra_file": env_in.get("spectra_file", ""),
    }
    if envelope["profile"] not in ("gaussian", "plane", "file"):
        raise ConfigError(f"unknown profile {envelope['profile']!r}",
                          section="envelope", field="profile")
    if envelope["mode"] not in ("separated", "tau3d"):
        raise ConfigError(f"unknown mode {envelope['mode']!r}",
                          section="envelope", field="mode")

    sy_in = data.get("synth", {})
    synth = {
        "chi": _need(sy_in, "synth", "chi", float, 0.05),
        "periods": _need(sy_in, "synth", "periods", int, 8),
        "samples_per_period": _need(sy_in, "synth", "samples_per_period",
                                    int, 32),
        "order": _need(sy_in, "synth", "order", int, 1),
    }
    if not (0.0 < synth["chi"] <= 0.2):
        raise ConfigError(f"chi must lie in (0, 0.2], got {synth['chi']}",
                          section="synth", field="chi")
    if synth["order"] not in (0, 1):
        raise ConfigError("order must be 0 or 1", section="synth", field="order")

    va_in = data.get("validate", {})
    validate = {"seed": _need(va_in, "validate", "seed", int, 12345)}

    out_in = data.get("output", {})
    formats = out_in.get("formats", ["csv", "bin"])
    if (not isinstance(formats, list)
            or any(not isinstance(f, str) for f in formats)):
        raise ConfigError("formats must be a list of strings",
                          section="output", field="formats")
    output = {
        "directory": _need(out_in, "output", "directory", str, "out"),
        "formats": formats,
    }

    unit_scale = _need(data.get("units", {}), "units", "scale", float, 1.0)
    return RunConfig(layers=layers, bands=bands, stationary=stationary,
                     envelope=envelope, synth=synth, validate=validate,
                     output=output, unit_scale=unit_scale)


def load_config(path=None) -> RunConfig:
    """Parse the TOML at ``path``; None loads the built-in default."""
    if path is None:
        data = tomllib.loads(DEFAULT_CONFIG_TOML)
        return parse_config(data)
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return parse_config(data)
