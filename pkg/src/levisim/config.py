"""INI run configuration.

Seven flat sections; every key has a typed default, so an empty file is a
valid configuration describing the headline scenario (144 nm silica
dumbbell, 1550 nm / 200 mW beam, sapphire surface).  Unknown sections or
keys are rejected with the offending line number.
"""

from __future__ import annotations

import configparser
import copy
import hashlib
import json
import re

from .errors import ConfigError

DEFAULTS = {
    "beam": {
        "wavelength_nm": 1550.0,
        "power_mw": 200.0,
        "waist_um": 0.0,  # 0: calibrate to target_fz_khz
        "target_fz_khz": 35.0,
    },
    "surface": {
        "kind": "sapphire",
        "index_real": 1.746,
        "index_imag": 0.0,
        "n_wells": 4,
    },
    "particle": {
        "sphere_diameter_nm": 144.0,
        "density": 2200.0,
        "permittivity": 2.1,
        "n_spheres": 2,
    },
    "environment": {
        "pressure_torr": 1.5,
        "temperature_k": 300.0,
        "accommodation": 1.0,
        "torque_pressure_torr": 6.1e-5,
        "rotation_calib_torr": 5.9e-5,
        "rotation_calib_hz": 1.6e9,
        "grating_calib_torr": 1.0e-3,
        "grating_calib_hz": 175e6,
        "p_min_torr": 1e-4,
        "p_max_torr": 1e-2,
        "n_pressures": 9,
    },
    "sim": {
        "dt_ns": 0.0,  # 0: largest step allowed by the stiffest mode
        "n_steps": 1_000_000,
        "stride": 10,
        "nperseg": 4096,
        "spin_samples": 65536,
    },
    "grating": {
        "period_nm": 600.0,
        "stripe_width_nm": 300.0,
        "n_orders": 9,
        "scan_step_nm": 20.0,
        "scan_periods": 4,
    },
    "casimir": {
        "separation_nm": 370.0,
        "theta_deg": 135.0,
        "thickness_nm": 100.0,
        "n_periods": 7,
        "force_n": 3.0e-16,
        "theta_step_deg": 5.0,
        "width_min_nm": 30.0,
        "width_max_nm": 570.0,
        "n_widths": 19,
        "d_min_nm": 300.0,
        "d_max_nm": 600.0,
        "d_step_nm": 10.0,
    },
}

_CHOICES = {("surface", "kind"): ("sapphire", "gold", "none", "grating")}


class RunConfig:
    def __init__(self, values=None):
        self.values = copy.deepcopy(DEFAULTS)
        for sec, kv in (values or {}).items():
            self.values[sec].update(kv)

    def __getitem__(self, section):
        return self.values[section]

    def as_dict(self):
        return copy.deepcopy(self.values)

    def hash(self):
        blob = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # --- builders ----------------------------------------------------------

    def geom(self):
        from .trap import DumbbellGeom

        p = self["particle"]
        return DumbbellGeom(p["sphere_diameter_nm"] * 1e-9, p["density"], p["permittivity"], p["n_spheres"])

    def beam(self):
        from .optics import BeamParams
        from .trap import calibrate_waist

        b = self["beam"]
        beam = BeamParams(wavelength=b["wavelength_nm"] * 1e-9, power=b["power_mw"] * 1e-3, waist=2e-6)
        if b["waist_um"] > 0:
            return beam.with_(waist=b["waist_um"] * 1e-6)
        return beam.with_(waist=calibrate_waist(beam, self.geom(), b["target_fz_khz"] * 1e3))

    def surface(self):
        from .grating import GratingSpec
        from .optics import SurfaceKind, SurfaceSpec

        s = self["surface"]
        kind = s["kind"]
        if kind == "none":
            return SurfaceSpec.none()
        if kind == "grating":
            return self.grating()
        if kind == "gold":
            return SurfaceSpec.gold()
        return SurfaceSpec(SurfaceKind.FLAT_DIELECTRIC, complex(s["index_real"], s["index_imag"]))

    def grating(self):
        from .grating import GratingSpec

        g = self["grating"]
        return GratingSpec(period=g["period_nm"] * 1e-9, stripe_width=g["stripe_width_nm"] * 1e-9,
                           n_orders=g["n_orders"])

    def env(self, pressure_torr=None):
        from .damping import Environment

        e = self["environment"]
        return Environment(e["pressure_torr"] if pressure_torr is None else pressure_torr,
                           e["temperature_k"], accommodation=e["accommodation"])

    def casimir(self):
        from .casimir import CasimirConfig

        c = self["casimir"]
        return CasimirConfig(separation=c["separation_nm"] * 1e-9, theta_deg=c["theta_deg"],
                             period=self["grating"]["period_nm"] * 1e-9,
                             stripe_width=self["grating"]["stripe_width_nm"] * 1e-9,
                             thickness=c["thickness_nm"] * 1e-9, n_periods=c["n_periods"])


def _key_lines(text):
    """Map (section, key) and section headers to 1-based line numbers."""
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), i)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
        lines.setdefault((section, key), i)
    return lines


def _convert(default, raw, where):
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(float(raw)) if float(raw).is_integer() else int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {where[0]}.{where[1]}", line=where[2], key=where[1]) from None


def parse_config(text="") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}", line=getattr(exc, "lineno", None)) from None
    lines = _key_lines(text)
    values = {}
    for sec in parser.sections():
        if sec not in DEFAULTS:
            raise ConfigError(f"unknown section [{sec}]", line=lines.get((sec, None)), key=sec)
        for key, raw in parser.items(sec):
            line = lines.get((sec, key))
            if key not in DEFAULTS[sec]:
                raise ConfigError(f"unknown key {sec}.{key}", line=line, key=key)
            val = _convert(DEFAULTS[sec][key], raw, (sec, key, line))
            choices = _CHOICES.get((sec, key))
            if choices and val not in choices:
                raise ConfigError(f"{sec}.{key} must be one of {', '.join(choices)}", line=line, key=key)
            values.setdefault(sec, {})[key] = val
    return RunConfig(values)


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path) as fh:
        return parse_config(fh.read())
