"""Sectioned ``key = value`` experiment configuration.

Sections: ``[grid]``, ``[initial]``, ``[integrator]``, ``[analysis]``,
``[bourgain]``.  Every key has a documented default (see
:func:`defaults_template`); unknown sections or keys are rejected with the
line number of the offending entry.  Relative paths are resolved against the
directory of the config file.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "defaults_template", "bundled_configs", "SCHEMA"]


class ConfigError(ValueError):
    def __init__(self, message: str, lineno: Optional[int] = None, source: str = "<config>"):
        self.lineno = lineno
        self.source = source
        where = f"{source}:{lineno}: " if lineno is not None else f"{source}: "
        super().__init__(where + message)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _opt_float(s: str):
    s = s.strip()
    return None if s.lower() in ("", "none", "auto") else float(s)


def _float_list(s: str):
    vals = [float(x) for x in re.split(r"[,\s]+", s.strip()) if x]
    if not vals:
        raise ValueError("expected a comma-separated list of numbers")
    return vals


def _int(s: str) -> int:
    f = float(s)
    if f != int(f):
        raise ValueError(f"expected an integer, got {s!r}")
    return int(f)


def _seed(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return v


def _path(s: str):
    s = s.strip()
    return None if s.lower() in ("", "none", "auto") else s


# (parser, default, help); paths are resolved relative to the config file
SCHEMA: dict[str, dict[str, tuple[Callable, Any, str]]] = {
    "grid": {
        "dims": (_int, 1, "spatial dimension: 1, 2 or 3"),
        "extent": (float, 2 * math.pi, "box side length L (same on every axis)"),
        "points": (_int, 64, "grid points per axis (even, >= 8)"),
        "dealias": (_bool, True, "apply the 2/3 rule to the quadratic products"),
    },
    "initial": {
        "kind": (str, "gaussian", "gaussian | sech | free_wave | self_similar_2d | zero"),
        "amplitude": (_opt_float, None, "peak amplitude; 'auto' uses amplitude_factor (gaussian)"),
        "amplitude_factor": (float, 1.25, "gaussian: multiple of the negative-Hamiltonian threshold"),
        "sigma": (float, 1.0, "gaussian width: psi0 = A exp(-|x|^2/sigma^2)"),
        "width": (float, 1.0, "sech width"),
        "velocity": (float, 0.0, "sech carrier wavenumber along axis 0"),
        "mode": (_int, 1, "free_wave: integer mode number along axis 0"),
        "a": (float, 1.0, "self_similar_2d: profile parameter a"),
        "tstar": (float, 1.0, "self_similar_2d: blow-up time"),
        "theta": (float, 0.0, "self_similar_2d: constant phase"),
        "t0": (float, 0.0, "self_similar_2d: time of the initial data"),
        "eta_max": (float, 30.0, "self_similar_2d: radial extent of the profile grid"),
        "profile_points": (_int, 1500, "self_similar_2d: radial grid points"),
        "profile_file": (_path, None, "self_similar_2d: reuse a profile CSV instead of solving"),
    },
    "integrator": {
        "cfl_constant": (float, 0.05, "dt = cfl_constant / max(1, max|n|)"),
        "dt_min": (float, 1e-9, "smallest admissible step; reaching it ends the run"),
        "dt_max": (float, 1e-2, "largest step"),
        "stop_time": (float, 1.0, "final time"),
        "stop_amplitude": (_opt_float, None, "blow-up threshold on max|psi|; 'auto' uses the factor"),
        "stop_amplitude_factor": (float, 50.0, "default threshold as a multiple of the initial max|psi|"),
        "blowup_dt_contraction": (float, 100.0, "required contraction of dt before blow-up is declared"),
        "record_every": (_int, 10, "record norms every this many steps"),
        "sobolev_ell": (float, 0.0, "ell in H^{ell+1/2} x H^ell x H^{ell-1}, 0 <= ell <= 1"),
        "leak_threshold": (float, 1e-6, "warn when |psi| on the box boundary exceeds this"),
        "max_steps": (_int, 10_000_000, "hard cap on the number of steps"),
    },
    "analysis": {
        "seed": (_seed, 0, "64-bit seed for every stochastic operation"),
        "ell": (_opt_float, None, "ell for the rate verdict; 'auto' reads it from the series"),
        "tstar": (_opt_float, None, "blow-up time; 'auto' estimates it from the sum norm"),
        "window_lo": (_opt_float, None, "fit window start time; 'auto' = default window"),
        "window_hi": (_opt_float, None, "fit window end time"),
        "t_max": (_opt_float, None, "rates: ignore samples after this time (e.g. the last resolved time)"),
        "profile_dimension": (_int, 3, "profile: 2 or 3"),
        "profile_a": (float, 1.0, "profile: parameter a (2D)"),
        "profile_continuation": (str, "", "profile: extra a values to reach by continuation (2D), comma separated"),
        "profile_eta_max": (float, 30.0, "profile: radial extent"),
        "profile_points": (_int, 3000, "profile: radial grid points"),
        "profile_beta": (float, 3.0, "profile: grid stretching"),
        "profile_guess": (str, "gaussian", "profile: gaussian | zero"),
        "profile_guess_amplitude": (_opt_float, None, "profile: guess amplitude ('auto' = 2.2 in 2D, 1.0 in 3D)"),
        "profile_guess_width": (_opt_float, None, "profile: guess width ('auto' = 1.5 in 2D, 2.0 in 3D)"),
    },
    "bourgain": {
        "mode": (str, "conditions", "conditions | identity | cutoff | scan | resonance | all"),
        "b0": (float, 0.51, "condition check: b0"),
        "gamma": (_opt_float, None, "condition check: gamma ('auto' = the N1 region-1 choice)"),
        "a": (float, 0.51, "condition check: a"),
        "a1": (float, 0.47, "condition check: a1"),
        "a2": (float, 0.51, "condition check: a2"),
        "m": (float, 1.0, "condition check: m"),
        "ell": (float, 1.0, "trilinear forms: ell (k = ell + 1/2)"),
        "b": (float, 0.51, "trilinear forms: b"),
        "c": (float, 0.47, "trilinear forms: c"),
        "eps_bar": (float, 0.01, "parameter maps: b = 1/2 + eps_bar"),
        "eps": (float, 0.02, "parameter maps: c = 1 - eps - b"),
        "eps0": (float, 0.01, "parameter maps: b0 = 1/2 + eps0"),
        "T_list": (_float_list, [0.02, 0.03, 0.05, 0.07, 0.1, 0.14, 0.2], "cutoff scales in (0, 1], spanning at least a decade"),
        "trials": (_int, 2, "random trials per T"),
        "space_points": (_int, 8, "points per axis of the 3D space grid (extent 2 pi)"),
        "time_points": (_int, 2048, "time samples (must resolve the smallest T)"),
        "time_extent": (float, 8.0, "time box length (>= 4)"),
        "identity_time_points": (_int, 1024, "time samples for the free-evolution norm identity"),
        "resonance_points": (_int, 16, "points per axis for the exhaustive resonance sweep"),
    },
}

PATH_KEYS = {("initial", "profile_file")}


@dataclass
class ExperimentConfig:
    values: dict
    source: Optional[Path] = None

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def get(self, section: str, key: str):
        return self.values[section][key]


def _line_of(text: str, section: Optional[str], key: Optional[str] = None) -> Optional[int]:
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if key is not None and cur == section:
            k = re.split(r"[=:]", line, 1)[0].strip().lower()
            if k == key.lower():
                return i
    return None


def parse_config(text: str, source: str = "<config>", base_dir: Optional[Path] = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, source) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, source) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", exc.lineno, source) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected key = value)", lineno, source) from None

    values = {sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]; expected one of {', '.join(SCHEMA)}", _line_of(text, sec), source)
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", _line_of(text, sec, key), source)
            parser = SCHEMA[sec][key][0]
            try:
                val = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {sec}.{key}: {exc}", _line_of(text, sec, key), source) from None
            if (sec, key) in PATH_KEYS and val is not None and base_dir is not None:
                p = Path(val)
                val = str(p if p.is_absolute() else (base_dir / p).resolve())
            values[sec][key] = val
    return ExperimentConfig(values, Path(source) if source != "<config>" else None)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(p)) from None
    return parse_config(text, str(p), p.parent.resolve())


def bundled_configs(prefix: str = "") -> dict[str, Path]:
    """Example configs shipped with the package, keyed by stem; ``prefix`` filters by name
    (``"blowup_"`` selects the bundled blow-up experiment set)."""
    root = resources.files("zakharov_lab") / "configs"
    return {p.stem: Path(str(p)) for p in sorted(root.iterdir(), key=lambda q: q.name) if p.name.endswith(".ini") and p.name.startswith(prefix)}


def _fmt_default(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def defaults_template() -> str:
    """Every section and key with its default, each documented by a comment."""
    out = ["# zakharov-lab experiment configuration; every key shown with its default", ""]
    for sec, keys in SCHEMA.items():
        out.append(f"[{sec}]")
        for key, (_, default, doc) in keys.items():
            out.append(f"# {doc}")
            out.append(f"{key} = {_fmt_default(default)}")
        out.append("")
    return "\n".join(out)
