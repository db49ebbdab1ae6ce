"""Run configuration: layered YAML loading, validation and unit conversion.

Layers, later ones winning: built-in defaults, the constraint preset, the
user's file, command-line overrides.  Config files use microseconds,
megahertz and lifetimes; everything is converted to SI in one place,
:func:`resolve`.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .codes import CodeName, GateKind
from .dynamics import standard_channels
from .error_model import ErrorBoundParams
from .grape import PRESETS
from .hilbert import MHZ, NS, US, mhz_to_angular

COMMANDS = ("optimize", "evaluate", "susceptibility", "ensemble", "bound", "trajectory")
SEEDED = ("optimize", "ensemble")
NEEDS_PARAMS = ("evaluate", "susceptibility", "trajectory")
CARDINAL_LABELS = ("0", "1", "+", "-", "+i", "-i")

DEFAULTS: dict = {
    "command": None,
    "code": {"name": "Bin11", "cavity_dim": 30, "transmon_dim": 2, "alpha": None},
    "gate": {"kind": "Hadamard", "angle": None},
    "T_gate_us": 1.0,
    "chi_MHz": -2.0,
    "preset": "standard",
    "constraints": {"f_max_MHz": None, "dt_ns": None, "u_max_MHz": None, "harmonics": None},
    "weights": {"c1": 1.0, "c2": 1e-4, "c3": 1e-3},
    "optimizer": {"max_iter": 2000, "target_cost": 1e-4, "gtol": 1e-9},
    "decoherence": {"T1_us": 100.0, "Tphi_us": 25.0, "kappa_inv_us": 1000.0, "n_th": 0.01},
    "lindblad": {"substeps": 4},
    "susceptibility": {"include_thermal": False, "histogram_bins": 20},
    "restarts": 1,
    "seed": None,
    "jobs": 1,
    "out": None,
    "params": None,
    "trajectory": {"initial": "0", "stride": 25, "open": False, "wigner": None},
    "bound": {
        "a_per_us": 11.05,
        "s1": 0.25,
        "s_phi": 0.31,
        "s_cav_per_photon": 0.94,
        "n_bar": None,
        "T_us": {"start": 0.2, "stop": 2.0, "num": 91},
        "Tphi_us": {"start": 10.0, "stop": 100.0, "num": 91},
    },
}


def preset_layer(name: str) -> dict:
    p = PRESETS[name]
    return {
        "constraints": {
            "f_max_MHz": p.f_max / MHZ,
            "dt_ns": p.dt / NS,
            "u_max_MHz": list(p.u_max),
        }
    }


def merge(base: dict, over: dict) -> dict:
    """Recursive dict merge; ``None`` in ``over`` does not clobber a set value."""
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        elif v is not None or k not in out:
            out[k] = copy.deepcopy(v)
    return out


def _key_lines(text: str) -> dict:
    """Map dotted key paths of a YAML mapping to 1-based line numbers."""
    lines: dict = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}{k.value}"
                lines[path] = k.start_mark.line + 1
                walk(v, path + ".")

    if root is not None:
        walk(root, "")
    return lines


@dataclass
class Diagnostic:
    field: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.field}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


def read_file(path) -> tuple[dict, dict]:
    """Parsed YAML mapping and its key line numbers."""
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError([Diagnostic("<root>", "config must be a mapping")])
    return data, _key_lines(text)


def layered(file_data: dict | None = None, overrides: dict | None = None) -> dict:
    file_data = file_data or {}
    overrides = overrides or {}
    preset = overrides.get("preset") or file_data.get("preset") or DEFAULTS["preset"]
    cfg = merge(DEFAULTS, preset_layer(preset) if preset in PRESETS else {})
    cfg = merge(cfg, file_data)
    return merge(cfg, overrides)


def _unknown_keys(data: dict, ref: dict, prefix=""):
    for k, v in data.items():
        path = f"{prefix}{k}"
        if k not in ref:
            yield path
        elif isinstance(v, dict) and isinstance(ref[k], dict):
            yield from _unknown_keys(v, ref[k], path + ".")


def check(cfg: dict, file_data: dict | None = None, lines: dict | None = None) -> list[Diagnostic]:
    """Schema and physical-range diagnostics for a layered config."""
    lines = lines or {}
    diags: list[Diagnostic] = []

    def bad(path, msg):
        diags.append(Diagnostic(path, msg, lines.get(path)))

    for path in _unknown_keys(file_data or {}, DEFAULTS):
        bad(path, "unknown key")

    def positive(path, value, allow_none=False, integer=False):
        if value is None:
            if not allow_none:
                bad(path, "required")
            return
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            bad(path, f"must be a number, got {value!r}")
        elif integer and int(value) != value:
            bad(path, f"must be an integer, got {value!r}")
        elif not value > 0:
            bad(path, f"must be positive, got {value!r}")

    cmd = cfg.get("command")
    if cmd not in COMMANDS:
        bad("command", f"must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    if cfg.get("preset") not in PRESETS:
        bad("preset", f"must be one of {', '.join(PRESETS)}, got {cfg.get('preset')!r}")

    code = cfg.get("code") or {}
    if code.get("name") not in [c.value for c in CodeName]:
        bad("code.name", f"must be one of {', '.join(c.value for c in CodeName)}")
    positive("code.cavity_dim", code.get("cavity_dim"), integer=True)
    positive("code.transmon_dim", code.get("transmon_dim"), integer=True)
    for key in ("cavity_dim", "transmon_dim"):
        v = code.get(key)
        if isinstance(v, int) and v < 2:
            bad(f"code.{key}", "must be at least 2")
    gate = cfg.get("gate") or {}
    if gate.get("kind") not in [g.value for g in GateKind]:
        bad("gate.kind", f"must be one of {', '.join(g.value for g in GateKind)}")
    elif gate["kind"] == GateKind.PHASE.value and gate.get("angle") is None:
        bad("gate.angle", "required for PhaseGate")

    positive("T_gate_us", cfg.get("T_gate_us"))
    chi = cfg.get("chi_MHz")
    if not isinstance(chi, (int, float)) or isinstance(chi, bool) or chi == 0:
        bad("chi_MHz", "must be a non-zero number")
    cons = cfg.get("constraints") or {}
    positive("constraints.f_max_MHz", cons.get("f_max_MHz"))
    positive("constraints.dt_ns", cons.get("dt_ns"))
    positive("constraints.harmonics", cons.get("harmonics"), allow_none=True, integer=True)
    u_max = cons.get("u_max_MHz")
    if not isinstance(u_max, (list, tuple)) or len(u_max) != 4:
        bad("constraints.u_max_MHz", "must be a list of 4 amplitudes")
    else:
        for i, v in enumerate(u_max):
            positive(f"constraints.u_max_MHz[{i}]", v)
    if not diags and cons.get("dt_ns") and cfg.get("T_gate_us"):
        n = cfg["T_gate_us"] * 1000 / cons["dt_ns"]
        if abs(n - round(n)) > 1e-9 * max(n, 1):
            bad("T_gate_us", "must be a whole number of control steps")

    for k, v in (cfg.get("weights") or {}).items():
        if not isinstance(v, (int, float)) or v < 0:
            bad(f"weights.{k}", f"must be non-negative, got {v!r}")
    opt = cfg.get("optimizer") or {}
    positive("optimizer.max_iter", opt.get("max_iter"), integer=True)
    positive("optimizer.target_cost", opt.get("target_cost"))
    positive("optimizer.gtol", opt.get("gtol"))

    dec = cfg.get("decoherence") or {}
    for key in ("T1_us", "Tphi_us", "kappa_inv_us"):
        positive(f"decoherence.{key}", dec.get(key), allow_none=True)
    n_th = dec.get("n_th")
    if n_th is not None and (not isinstance(n_th, (int, float)) or n_th < 0):
        bad("decoherence.n_th", f"must be non-negative, got {n_th!r}")
    positive("lindblad.substeps", (cfg.get("lindblad") or {}).get("substeps"), integer=True)
    positive("susceptibility.histogram_bins", (cfg.get("susceptibility") or {}).get("histogram_bins"), integer=True)

    positive("restarts", cfg.get("restarts"), integer=True)
    positive("jobs", cfg.get("jobs"), integer=True)
    seed = cfg.get("seed")
    if cmd in SEEDED and seed is None:
        bad("seed", f"required for {cmd}")
    elif seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        bad("seed", f"must be a non-negative integer, got {seed!r}")
    if cmd in NEEDS_PARAMS:
        p = cfg.get("params")
        if not p:
            bad("params", f"path to a params JSON is required for {cmd}")
        elif not Path(p).is_file():
            bad("params", f"file not found: {p}")

    traj = cfg.get("trajectory") or {}
    if str(traj.get("initial")) not in CARDINAL_LABELS:
        bad("trajectory.initial", f"must be one of {', '.join(CARDINAL_LABELS)}")
    positive("trajectory.stride", traj.get("stride"), integer=True)
    wig = traj.get("wigner")
    if wig is not None:
        if not isinstance(wig, dict):
            bad("trajectory.wigner", "must be a mapping with points, extent, times_us")
        else:
            positive("trajectory.wigner.points", wig.get("points"), integer=True)
            positive("trajectory.wigner.extent", wig.get("extent"))

    bnd = cfg.get("bound") or {}
    for key in ("a_per_us", "s1", "s_phi", "s_cav_per_photon"):
        positive(f"bound.{key}", bnd.get(key))
    positive("bound.n_bar", bnd.get("n_bar"), allow_none=True)
    for axis in ("T_us", "Tphi_us"):
        ax = bnd.get(axis) or {}
        positive(f"bound.{axis}.start", ax.get("start"))
        positive(f"bound.{axis}.stop", ax.get("stop"))
        positive(f"bound.{axis}.num", ax.get("num"), integer=True)
        if isinstance(ax.get("start"), (int, float)) and isinstance(ax.get("stop"), (int, float)):
            if ax.get("num", 1) > 1 and not ax["stop"] > ax["start"]:
                bad(f"bound.{axis}.stop", "must exceed start")
    return diags


def validate(path) -> list[Diagnostic]:
    """Diagnostics for the config file at ``path``; empty iff a run would start."""
    try:
        data, lines = read_file(path)
    except ConfigError as exc:
        return exc.diagnostics
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        return [Diagnostic("<yaml>", str(getattr(exc, "problem", exc)), mark.line + 1 if mark else None)]
    return check(layered(data), data, lines)


# resolved, SI-unit view ------------------------------------------------------


@dataclass(frozen=True)
class Resolved:
    """Config values in SI units."""

    raw: dict

    @property
    def t_gate(self) -> float:
        return self.raw["T_gate_us"] * US

    @property
    def chi(self) -> float:
        return float(mhz_to_angular(self.raw["chi_MHz"]))

    @property
    def f_max(self) -> float:
        return self.raw["constraints"]["f_max_MHz"] * MHZ

    @property
    def dt(self) -> float:
        return self.raw["constraints"]["dt_ns"] * NS

    @property
    def u_max(self) -> np.ndarray:
        return np.array(self.raw["constraints"]["u_max_MHz"], dtype=float)

    def channels(self, include_thermal: bool = True):
        d = self.raw["decoherence"]

        def life(key):
            v = d.get(key)
            return None if v is None else v * US

        return standard_channels(
            kappa_inv=life("kappa_inv_us"),
            t1=life("T1_us"),
            t_phi=life("Tphi_us"),
            n_th=(d.get("n_th") or 0.0) if include_thermal else 0.0,
        )

    def bound_params(self, n_bar: float) -> ErrorBoundParams:
        b, d = self.raw["bound"], self.raw["decoherence"]
        missing = [k for k in ("T1_us", "Tphi_us", "kappa_inv_us") if d.get(k) is None]
        if missing:
            raise ConfigError([Diagnostic(f"decoherence.{k}", "required for bound") for k in missing])
        return ErrorBoundParams(
            a=b["a_per_us"] / US,
            s1_min=b["s1"],
            s_phi_min=b["s_phi"],
            s_cav_per_photon=b["s_cav_per_photon"],
            n_bar=b["n_bar"] if b.get("n_bar") is not None else n_bar,
            t1=d["T1_us"] * US,
            t_phi=d["Tphi_us"] * US,
            kappa_inv=d["kappa_inv_us"] * US,
        )

    def axis(self, name: str) -> np.ndarray:
        ax = self.raw["bound"][name]
        return np.linspace(ax["start"], ax["stop"], int(ax["num"])) * US


def resolve(cfg: dict) -> Resolved:
    diags = check(cfg)
    if diags:
        raise ConfigError(diags)
    return Resolved(cfg)
