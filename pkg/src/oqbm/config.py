"""Flat ``key = value`` scenario files.

One assignment per line, ``#`` starts a comment, keys are case-sensitive.
Recognized keys::

    name, mode, preset
    coeff.<coefficient>      direct coefficients (any CoefficientSet field or alias)
    micro.<field>            m, omega, omega0, Omega_drive, alpha, temperature, hbar, x_scale
    spectral.<field>         kind, eta, omega_c
    init.<field>             theta, phi (angle expressions such as pi/5), j
    grid.<field>             x_min, x_max, n_points
    run.<field>              t_end, dt, safety, snapshots, n_trunc, orders, closures,
                             record_every, pde_form, moment_form, cumulant_form
    out.dir

A preset supplies defaults; explicit keys override it. ``coeff.*`` keys
given next to a preset are applied on top of the preset's coefficient map.
"""

from __future__ import annotations

import dataclasses
import os

from .coefficients import (
    ALIASES, COEFFICIENT_NAMES, CoefficientSet, PhysicalParams, SpectralSpec,
    build_coefficients, direct_coefficients,
)
from .errors import MissingKey, ParseError, UnknownKey
from .field import BlochInit, Grid
from .presets import get_preset, list_presets, parse_angle

MODES = ("pde", "moments", "cumulants", "crosscheck")
TOP_KEYS = ("name", "mode", "preset")
SECTION_KEYS = {
    "micro": ("m", "omega", "omega0", "Omega_drive", "alpha", "temperature", "hbar", "x_scale"),
    "spectral": ("kind", "eta", "omega_c"),
    "init": ("theta", "phi", "j"),
    "grid": ("x_min", "x_max", "n_points"),
    "run": ("t_end", "dt", "safety", "snapshots", "n_trunc", "orders", "closures",
            "record_every", "pde_form", "moment_form", "cumulant_form"),
    "out": ("dir",),
}
DEFAULT_DT = {"pde": 0.02, "moments": 0.01, "cumulants": 1e-3, "crosscheck": 0.01}


@dataclasses.dataclass(frozen=True)
class RunSettings:
    t_end: float
    dt: float
    safety: float = 0.9
    snapshots: tuple = ()
    n_trunc: int = 30
    orders: tuple = (0, 1, 2, 3, 4)
    closures: tuple = ("close3", "close4")
    record_every: int = 1
    pde_form: str = "reconciled"
    moment_form: str = "reconciled"
    cumulant_form: str = "reconciled"


@dataclasses.dataclass(frozen=True)
class Scenario:
    name: str
    mode: str
    coefficients: CoefficientSet
    coefficient_source: str
    initial: BlochInit
    grid: Grid
    run: RunSettings
    out_dir: str | None = None
    preset: str | None = None
    raw_coefficients: dict = dataclasses.field(default_factory=dict)
    physical: PhysicalParams | None = None

    def resolved(self) -> dict:
        """Every number the run consumes, for the manifest."""
        out = {
            "name": self.name, "mode": self.mode, "preset": self.preset,
            "coefficient_source": self.coefficient_source,
            "raw_coefficients": dict(self.raw_coefficients),
            "coefficients": self.coefficients.as_dict(),
            "initial": dataclasses.asdict(self.initial),
            "grid": dataclasses.asdict(self.grid) | {"dx": self.grid.dx},
            "run": dataclasses.asdict(self.run),
        }
        if self.physical is not None:
            phys = dataclasses.asdict(self.physical)
            out["physical"] = phys
        return out


def parse_text(text: str) -> dict:
    """Split a config text into ``{key: (value, line_number)}``."""
    entries = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("empty key", number)
        if not value:
            raise ParseError(f"empty value for {key!r}", number)
        if key in entries:
            raise ParseError(f"duplicate key {key!r} (first set on line {entries[key][1]})", number)
        entries[key] = (value, number)
    return entries


def _check_keys(entries):
    for key in entries:
        if key in TOP_KEYS:
            continue
        section, _, field = key.partition(".")
        if section == "coeff":
            if ALIASES.get(field, field) not in COEFFICIENT_NAMES:
                raise UnknownKey(key, "config")
            continue
        if section not in SECTION_KEYS or field not in SECTION_KEYS[section]:
            raise UnknownKey(key, "config")


def _num(entries, key, kind=float):
    value, line = entries[key]
    try:
        if kind is int:
            as_float = float(value)
            if as_float != int(as_float):
                raise ValueError
            return int(as_float)
        return kind(value)
    except ValueError:
        raise ParseError(f"{key} = {value!r} is not a valid {kind.__name__}", line) from None


def _angle(entries, key):
    value, line = entries[key]
    try:
        return parse_angle(value)
    except ValueError:
        raise ParseError(f"{key} = {value!r} is not an angle", line) from None


def _tuple(entries, key, kind):
    value, line = entries[key]
    try:
        return tuple(kind(v.strip()) for v in value.split(",") if v.strip())
    except ValueError:
        raise ParseError(f"{key} = {value!r} is not a comma-separated list", line) from None


def _from_preset(name):
    """Flatten a preset into config entries (line number None)."""
    preset = get_preset(name)
    flat = {"mode": (preset["mode"], None), "name": (name, None)}
    for k, v in preset["coefficients"].items():
        flat[f"coeff.{k}"] = (repr(v), None)
    for section in ("init", "grid", "run"):
        for k, v in preset[section].items():
            if isinstance(v, (tuple, list)):
                v = ",".join(str(item) for item in v)
            flat[f"{section}.{k}"] = (str(v), None)
    return flat


def scenario_from_entries(entries: dict, base_dir: str | None = None) -> Scenario:
    _check_keys(entries)
    preset = None
    if "preset" in entries:
        preset, line = entries["preset"]
        if preset not in list_presets():
            raise ParseError(f"unknown preset {preset!r}", line)
        merged = _from_preset(preset)
        # a microscopic override replaces the preset's direct coefficients wholesale
        if any(k.startswith(("micro.", "spectral.")) for k in entries):
            merged = {k: v for k, v in merged.items() if not k.startswith("coeff.")}
        merged.update(entries)
        # preset snapshots past an overridden end time are dropped
        snaps = merged.get("run.snapshots")
        if snaps is not None and snaps[1] is None and "run.t_end" in entries:
            t_end = _num(entries, "run.t_end")
            kept = [v for v in snaps[0].split(",") if v.strip() and float(v) <= t_end]
            merged["run.snapshots"] = (",".join(kept), None)
        entries = merged
        del entries["preset"]

    for key in ("mode",):
        if key not in entries:
            raise MissingKey(key)
    mode, line = entries["mode"]
    if mode not in MODES:
        raise ParseError(f"mode must be one of {MODES}, got {mode!r}", line)
    for key in ("init.theta", "init.phi", "run.t_end"):
        if key not in entries:
            raise MissingKey(key)

    coeff_entries = {k[len("coeff."):]: v for k, v in entries.items() if k.startswith("coeff.")}
    micro_entries = {k: v for k, v in entries.items() if k.startswith(("micro.", "spectral."))}
    physical = None
    if micro_entries and coeff_entries:
        key = sorted(coeff_entries)[0]
        raise ParseError("coeff.* and micro.*/spectral.* keys cannot be mixed", coeff_entries[key][1])
    if micro_entries:
        spec_kwargs = {}
        if "spectral.kind" in entries:
            spec_kwargs["kind"] = entries["spectral.kind"][0]
        for f in ("eta", "omega_c"):
            if f"spectral.{f}" in entries:
                spec_kwargs[f] = _num(entries, f"spectral.{f}")
        micro = {f: _num(entries, f"micro.{f}") for f in SECTION_KEYS["micro"] if f"micro.{f}" in entries}
        try:
            physical = PhysicalParams(spectral=SpectralSpec(**spec_kwargs), **micro)
        except ValueError as exc:
            raise ParseError(str(exc)) from None
        coefficients = build_coefficients(physical)
        source = "microscopic"
        raw = {}
    else:
        raw = {k: _num({k: v}, k) for k, v in coeff_entries.items()}
        try:
            coefficients = direct_coefficients(raw)
        except ValueError as exc:
            raise ParseError(str(exc)) from None
        source = f"preset:{preset}" if preset else "direct"
        if mode == "cumulants" and not ("chi" in raw):
            raise MissingKey("coeff.chi")

    j = _num(entries, "init.j", int) if "init.j" in entries else 2
    try:
        initial = BlochInit(_angle(entries, "init.theta"), _angle(entries, "init.phi"), j)
    except ValueError as exc:
        raise ParseError(str(exc), entries["init.theta"][1]) from None

    grid_kwargs = {}
    for f, kind in (("x_min", float), ("x_max", float), ("n_points", int)):
        if f"grid.{f}" in entries:
            grid_kwargs[f] = _num(entries, f"grid.{f}", kind)
    try:
        grid = Grid(**grid_kwargs)
    except ValueError as exc:
        raise ParseError(str(exc)) from None

    run_kwargs = {"t_end": _num(entries, "run.t_end"),
                  "dt": _num(entries, "run.dt") if "run.dt" in entries else DEFAULT_DT[mode]}
    if "run.safety" in entries:
        run_kwargs["safety"] = _num(entries, "run.safety")
    for f, kind in (("n_trunc", int), ("record_every", int)):
        if f"run.{f}" in entries:
            run_kwargs[f] = _num(entries, f"run.{f}", kind)
    if "run.snapshots" in entries:
        run_kwargs["snapshots"] = _tuple(entries, "run.snapshots", float)
    if "run.orders" in entries:
        run_kwargs["orders"] = _tuple(entries, "run.orders", int)
    if "run.closures" in entries:
        run_kwargs["closures"] = _tuple(entries, "run.closures", str)
    for f in ("pde_form", "moment_form", "cumulant_form"):
        if f"run.{f}" in entries:
            run_kwargs[f] = entries[f"run.{f}"][0]
    run = RunSettings(**run_kwargs)
    _validate_run(run, mode, entries)

    out_dir = entries["out.dir"][0] if "out.dir" in entries else None
    if out_dir is not None and base_dir is not None and not os.path.isabs(out_dir):
        out_dir = os.path.join(base_dir, out_dir)
    name = entries["name"][0] if "name" in entries else (preset or mode)
    return Scenario(name, mode, coefficients, source, initial, grid, run, out_dir, preset, raw, physical)


def _validate_run(run: RunSettings, mode, entries):
    from .cumulants import CLOSURES, FORMS as CUMULANT_FORMS
    from .moments import FORMS as MOMENT_FORMS
    from .pde import FORMS as PDE_FORMS

    def line(key):
        return entries[key][1] if key in entries else None

    checks = [
        (run.t_end >= 0, "run.t_end", "must be >= 0"),
        (run.dt > 0, "run.dt", "must be > 0"),
        (0 < run.safety <= 1, "run.safety", "must lie in (0, 1]"),
        (run.record_every >= 1, "run.record_every", "must be >= 1"),
        (run.n_trunc >= 4, "run.n_trunc", "must be >= 4"),
        (all(0 <= n <= run.n_trunc for n in run.orders), "run.orders", "must lie in [0, n_trunc]"),
        (all(c in CLOSURES for c in run.closures) and run.closures, "run.closures", f"must be drawn from {CLOSURES}"),
        (list(run.snapshots) == sorted(run.snapshots) and all(0 <= t <= run.t_end for t in run.snapshots),
         "run.snapshots", "must be sorted and within [0, t_end]"),
        (run.pde_form in PDE_FORMS, "run.pde_form", f"must be one of {PDE_FORMS}"),
        (run.moment_form in MOMENT_FORMS, "run.moment_form", f"must be one of {MOMENT_FORMS}"),
        (run.cumulant_form in CUMULANT_FORMS, "run.cumulant_form", f"must be one of {CUMULANT_FORMS}"),
    ]
    for ok, key, message in checks:
        if not ok:
            raise ParseError(f"{key} {message}", line(key))


def load_text(text: str, base_dir: str | None = None) -> Scenario:
    return scenario_from_entries(parse_text(text), base_dir)


def load_config(path) -> Scenario:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    return load_text(text, os.path.dirname(os.path.abspath(path)))


def preset_scenario(name: str) -> Scenario:
    return scenario_from_entries({"preset": (name, None)})
