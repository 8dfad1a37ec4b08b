"""Run configuration: a flat ``key = value`` text format with ``[section]`` headers.

Several ``key=value`` pairs may share a line. ``#`` starts a comment. Keys that
appear before any section header belong to ``[params]``. Omitted fields take the
dataclass defaults (vehicle parameters default to the reference vehicle
m1=m2=3, m3=1, I1=I2=2, I3=1, m=1, l=0.5, g=10); unknown sections or keys are
rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .classifier import BOUNDARY_TOL, ScanGrid
from .errors import LeafstabError, ParseError, ValidationError
from .simulator import IntegratorConfig, ProbeMode
from .stability_core import Tolerances
from .vehicle_model import REF_PARAMS, EquilibriumSpec, VehicleParams


@dataclass(frozen=True)
class ProbeSettings:
    mode: ProbeMode = ProbeMode.FULL_SPACE
    epsilon: float = 1e-3
    samples: int = 20
    seed: int = 0
    escape_radius: float = 0.1
    t_final: float = 200.0
    rel_tol: float = 1e-9

    def __post_init__(self):
        if self.epsilon <= 0 or self.escape_radius <= 0:
            raise ValidationError("probe epsilon and escape_radius must be positive")
        if self.samples < 1:
            raise ValidationError("probe samples must be at least 1")


@dataclass(frozen=True)
class OutputSettings:
    csv_path: Optional[str] = None
    plot_data_path: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    params: VehicleParams = REF_PARAMS
    equilibrium: Optional[EquilibriumSpec] = None
    lam: Optional[float] = None
    z0: Optional[tuple] = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    probe: ProbeSettings = field(default_factory=ProbeSettings)
    scan: Optional[ScanGrid] = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    boundary_tol: float = BOUNDARY_TOL
    output: OutputSettings = field(default_factory=OutputSettings)


_PARAM_KEYS = ("m1", "m2", "m3", "I1", "I2", "I3", "m", "l", "g")
_SCAN_KEYS = ("Pi_min", "Pi_max", "Pi_step", "P_min", "P_max", "P_step")

# section -> key -> converter
_SCHEMA = {
    "params": {k: float for k in _PARAM_KEYS},
    "equilibrium": {"Pi_e": float, "P_e": float, "lambda": float},
    "simulate": {"z0": lambda s: tuple(float(v) for v in s.split(","))},
    "integrator": {
        "rel_tol": float, "abs_tol": float, "dt_init": float, "dt_min": float,
        "dt_max": float, "t_final": float, "max_steps": int,
    },
    "probe": {
        "mode": lambda s: ProbeMode(s.lower()), "epsilon": float, "samples": int, "seed": int,
        "escape_radius": float, "t_final": float, "rel_tol": float,
    },
    "scan": {k: float for k in _SCAN_KEYS},
    "tolerances": {
        "regularity": float, "boundary": float, "gram_det": float, "tangent": float,
        "definite": float, "symmetry": float, "fd_metric": float, "fd_grad": float, "fd_hess": float,
    },
    "output": {"csv_path": str, "plot_data_path": str},
}

_SECTION = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")


def _tokenize(line: str):
    line = re.sub(r"\s*([=,])\s*", r"\1", line)
    return line.split()


def parse_sections(text: str) -> dict:
    """Split into {section: {key: converted value}}; syntax errors carry line numbers."""
    sections: dict = {}
    current = "params"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1).lower()
            if current not in _SCHEMA:
                raise ParseError(lineno, f"unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if line.startswith("["):
            raise ParseError(lineno, f"malformed section header {line!r}")
        for token in _tokenize(line):
            key, sep, value = token.partition("=")
            if not sep or not key or not value:
                raise ParseError(lineno, f"expected key=value, got {token!r}")
            schema = _SCHEMA[current]
            if key not in schema:
                raise ParseError(lineno, f"unknown key {key!r} in [{current}]")
            entries = sections.setdefault(current, {})
            if key in entries:
                raise ParseError(lineno, f"duplicate key {key!r} in [{current}]")
            try:
                entries[key] = schema[key](value)
            except ValueError as exc:
                raise ParseError(lineno, f"bad value for {key}: {exc}") from None
    return sections


def parse_config(text: str) -> RunConfig:
    sec = parse_sections(text)
    try:
        return _build(sec)
    except ValidationError:
        raise
    except (LeafstabError, ValueError, TypeError) as exc:
        raise ValidationError(str(exc)) from None


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _build(sec: dict) -> RunConfig:
    params = REF_PARAMS.replace(**sec.get("params", {}))

    eq = sec.get("equilibrium", {})
    equilibrium = lam = None
    if "Pi_e" in eq or "P_e" in eq:
        if "Pi_e" not in eq or "P_e" not in eq:
            raise ValidationError("[equilibrium] needs both Pi_e and P_e")
        equilibrium = EquilibriumSpec(eq["Pi_e"], eq["P_e"])
    lam = eq.get("lambda")

    z0 = sec.get("simulate", {}).get("z0")
    if z0 is not None and (len(z0) != 9 or not np.all(np.isfinite(z0))):
        raise ValidationError("z0 must list 9 finite numbers")

    integrator = IntegratorConfig(**sec.get("integrator", {}))
    probe = ProbeSettings(**sec.get("probe", {}))

    scan = None
    if "scan" in sec:
        s = sec["scan"]
        missing = [k for k in _SCAN_KEYS if k not in s]
        if missing:
            raise ValidationError(f"[scan] missing {', '.join(missing)}")
        scan = ScanGrid(params=params, **s)

    tol_in = dict(sec.get("tolerances", {}))
    boundary = tol_in.pop("boundary", BOUNDARY_TOL)
    tolerances = Tolerances(**tol_in)
    for f in fields(tolerances):
        if getattr(tolerances, f.name) <= 0:
            raise ValidationError(f"tolerance {f.name} must be positive")
    if boundary < 0:
        raise ValidationError("boundary tolerance must be nonnegative")

    return RunConfig(params, equilibrium, lam, z0, integrator, probe, scan, tolerances, boundary,
                     OutputSettings(**sec.get("output", {})))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, ProbeMode):
        return v.value
    if isinstance(v, tuple):
        return ",".join(repr(float(x)) for x in v)
    return str(v)


def format_config(cfg: RunConfig) -> str:
    """Inverse of parse_config: parse_config(format_config(c)) == c."""
    out = ["[params]"]
    out += [f"{k} = {_fmt(getattr(cfg.params, k))}" for k in _PARAM_KEYS]
    if cfg.equilibrium is not None or cfg.lam is not None:
        out.append("\n[equilibrium]")
        if cfg.equilibrium is not None:
            out += [f"Pi_e = {_fmt(cfg.equilibrium.Pi_e)}", f"P_e = {_fmt(cfg.equilibrium.P_e)}"]
        if cfg.lam is not None:
            out.append(f"lambda = {_fmt(cfg.lam)}")
    if cfg.z0 is not None:
        out += ["\n[simulate]", f"z0 = {_fmt(tuple(cfg.z0))}"]
    out.append("\n[integrator]")
    out += [f"{f.name} = {_fmt(getattr(cfg.integrator, f.name))}" for f in fields(cfg.integrator)]
    out.append("\n[probe]")
    out += [f"{f.name} = {_fmt(getattr(cfg.probe, f.name))}" for f in fields(cfg.probe)]
    if cfg.scan is not None:
        out.append("\n[scan]")
        out += [f"{k} = {_fmt(getattr(cfg.scan, k))}" for k in _SCAN_KEYS]
    out.append("\n[tolerances]")
    out.append(f"boundary = {_fmt(cfg.boundary_tol)}")
    out += [f"{f.name} = {_fmt(getattr(cfg.tolerances, f.name))}" for f in fields(cfg.tolerances)
            if f.name in _SCHEMA["tolerances"]]
    if cfg.output.csv_path or cfg.output.plot_data_path:
        out.append("\n[output]")
        if cfg.output.csv_path:
            out.append(f"csv_path = {cfg.output.csv_path}")
        if cfg.output.plot_data_path:
            out.append(f"plot_data_path = {cfg.output.plot_data_path}")
    return "\n".join(out) + "\n"
