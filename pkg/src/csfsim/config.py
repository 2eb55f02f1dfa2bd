"""Scenario files: INI-style sections with typed keys.

See docs/config.md for the grammar. A scenario may name a preset as its base
and override any key; every key left unset takes its default and is listed in
``ScenarioConfig.defaults_applied``.
"""

from __future__ import annotations

import configparser
import csv
import io
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, ExprSyntaxError
from .expr import evaluate, parse_expr
from .model import FIELDS, MODELS, Grid, ModelOptions, PhysConstants, State
from .numerics import StepperConfig

PRESETS = {
    "caseA": {
        "u": "4*sin(pi*z)+1",
        "eta": "z/5",
        "zeta": "z/2+1",
        "P": "cos(pi*z)/6",
        "A": "2*cos(pi*z)",
    },
    "caseB": {
        "u": "-(exp(z)+1)",
        "eta": "z/5",
        "zeta": "z/2+1",
        "P": "exp(z)",
        "A": "2*cos(pi*z)",
    },
}

# sections that a run report adds on top of the scenario; ignored on load
REPORT_SECTIONS = ("run", "existence", "physiology", "events")

STEPPER_KEYS = ("scheme", "dt", "t_final", "atol", "rtol", "dt_init", "dt_min", "blowup_threshold")
OPTION_KEYS = ("floor", "absorption_sign", "a2_include_u", "zeta_damping", "advection")


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "runs"
    fields: tuple = FIELDS
    every: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    models: tuple = MODELS
    constants: PhysConstants = PhysConstants()
    nz: int = 100
    stepper: StepperConfig = StepperConfig()
    initial: dict = field(default_factory=lambda: dict(PRESETS["caseA"]))
    outputs: OutputSpec = OutputSpec()
    options: ModelOptions = ModelOptions()
    C_hat1: float = 1.0
    eps: Optional[float] = None
    base_dir: str = "."
    defaults_applied: tuple = ()

    @property
    def grid(self) -> Grid:
        return Grid(self.nz, self.constants.L)

    def with_overrides(self, nz=None, dt=None, t_final=None, out=None, model=None) -> "ScenarioConfig":
        cfg = self
        if nz is not None:
            cfg = replace(cfg, nz=nz)
        if dt is not None or t_final is not None:
            st = replace(cfg.stepper,
                         dt=cfg.stepper.dt if dt is None else dt,
                         t_final=cfg.stepper.t_final if t_final is None else t_final)
            cfg = replace(cfg, stepper=st)
        if out is not None:
            cfg = replace(cfg, outputs=replace(cfg.outputs, dir=out))
        if model is not None:
            cfg = replace(cfg, models=_parse_models(model, "scenario.model"))
        return cfg

    def initial_state(self) -> State:
        z = self.grid.z
        values = {name: resolve_field(self.initial[name], z, f"initial.{name}", self.base_dir)
                  for name in FIELDS}
        return State(0.0, values["u"], values["eta"], values["zeta"], values["P"], values["A"])

    def f_and_b(self):
        s = self.initial_state()
        return s.u, s.P


def _parse_models(text: str, path: str) -> tuple:
    t = text.strip().lower()
    if t == "both":
        return MODELS
    if t in MODELS:
        return (t,)
    raise ConfigError(path, f"expected a1, a2 or both, got {text!r}")


def _to_float(text, path):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(path, f"expected a number, got {text!r}") from None


def _to_int(text, path):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(path, f"expected an integer, got {text!r}") from None


def _to_bool(text, path):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(path, f"expected true or false, got {text!r}")


def resolve_field(source: str, z: np.ndarray, path: str, base_dir: str = ".") -> np.ndarray:
    """Evaluate an initial-data source on the grid nodes ``z``.

    Sources: an expression in z, ``preset:<name>`` (that preset's expression
    for the same field) or ``csv:<file>`` with columns z,value, linearly
    interpolated onto the grid.
    """
    src = source.strip()
    name = path.rsplit(".", 1)[-1]
    if src.startswith("preset:"):
        preset = src[len("preset:"):].strip()
        if preset not in PRESETS:
            raise ConfigError(path, f"unknown preset {preset!r}")
        src = PRESETS[preset][name]
    if src.startswith("csv:"):
        return _read_profile(os.path.join(base_dir, src[4:].strip()), z, path)
    try:
        values = evaluate(parse_expr(src), z)
    except ExprSyntaxError as exc:
        raise ConfigError(path, str(exc)) from None
    except ZeroDivisionError as exc:
        raise ConfigError(path, str(exc)) from None
    if not np.all(np.isfinite(values)):
        raise ConfigError(path, f"expression {src!r} is not finite on the grid")
    return values


def _read_profile(fname, z, path):
    try:
        with open(fname, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(path, f"cannot read {fname}: {exc.strerror}") from None
    if rows and rows[0] and not _is_number(rows[0][0]):
        rows = rows[1:]
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows if r])
    except (ValueError, IndexError):
        raise ConfigError(path, f"{fname}: expected two numeric columns z,value") from None
    if data.shape[0] < 2 or np.any(np.diff(data[:, 0]) <= 0):
        raise ConfigError(path, f"{fname}: need at least two rows with increasing z")
    if data[0, 0] > z[0] + 1e-12 or data[-1, 0] < z[-1] - 1e-12:
        raise ConfigError(path, f"{fname}: profile does not cover [{z[0]}, {z[-1]}]")
    return np.interp(z, data[:, 0], data[:, 1])


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError("scenario", f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    return ScenarioConfig(name=name, initial=dict(PRESETS[name]), defaults_applied=all_keys(initial=False))


def all_keys(initial: bool = True) -> tuple:
    keys = ["scenario.model"]
    keys += [f"constants.{k}" for k in PhysConstants.input_names()]
    keys += ["grid.nz"] + [f"stepper.{k}" for k in STEPPER_KEYS]
    keys += [f"outputs.{k}" for k in ("dir", "fields", "every")]
    keys += [f"options.{k}" for k in OPTION_KEYS] + ["analysis.C_hat1", "analysis.eps"]
    if initial:
        keys += [f"initial.{k}" for k in FIELDS]
    return tuple(keys)


def load_scenario(spec: str) -> ScenarioConfig:
    """Load a preset by name or a scenario file by path."""
    if spec in PRESETS:
        return preset(spec)
    try:
        with open(spec) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("scenario", f"cannot read {spec}: {exc.strerror}") from None
    name = os.path.splitext(os.path.basename(spec))[0]
    return parse_scenario(text, name=name, base_dir=os.path.dirname(os.path.abspath(spec)))


def parse_scenario(text: str, name: str = "scenario", base_dir: str = ".") -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case sensitive (P, A)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("scenario", f"malformed file: {exc}") from None

    known = {"scenario", "constants", "grid", "stepper", "initial", "outputs", "options", "analysis"}
    for sec in parser.sections():
        if sec not in known and sec not in REPORT_SECTIONS:
            raise ConfigError(sec, "unknown section")

    def section(sec):
        return dict(parser.items(sec)) if parser.has_section(sec) else {}

    defaults = []
    sc = section("scenario")
    _reject_unknown(sc, {"name", "base", "model"}, "scenario")
    base = sc.get("base")
    cfg = preset(base) if base else ScenarioConfig(name=name)
    cfg = replace(cfg, name=sc.get("name", name), base_dir=base_dir)
    if "model" in sc:
        cfg = replace(cfg, models=_parse_models(sc["model"], "scenario.model"))
    else:
        defaults.append("scenario.model")

    consts = section("constants")
    _reject_unknown(consts, set(PhysConstants.input_names()), "constants")
    over = {k: _to_float(v, f"constants.{k}") for k, v in consts.items()}
    defaults += [f"constants.{k}" for k in PhysConstants.input_names() if k not in over]
    try:
        cfg = replace(cfg, constants=cfg.constants.with_(**over))
    except ValueError as exc:
        raise ConfigError("constants", str(exc)) from None

    grid = section("grid")
    _reject_unknown(grid, {"nz"}, "grid")
    if "nz" in grid:
        cfg = replace(cfg, nz=_to_int(grid["nz"], "grid.nz"))
    else:
        defaults.append("grid.nz")
    try:
        cfg.grid
    except ValueError as exc:
        raise ConfigError("grid.nz", str(exc)) from None

    st = section("stepper")
    _reject_unknown(st, set(STEPPER_KEYS), "stepper")
    st_over = {}
    for k, v in st.items():
        st_over[k] = v.strip() if k == "scheme" else _to_float(v, f"stepper.{k}")
    defaults += [f"stepper.{k}" for k in STEPPER_KEYS if k not in st_over]

    out = section("outputs")
    _reject_unknown(out, {"dir", "fields", "every"}, "outputs")
    outputs = cfg.outputs
    if "dir" in out:
        outputs = replace(outputs, dir=out["dir"].strip())
    if "fields" in out:
        names = tuple(x.strip() for x in out["fields"].split(",") if x.strip())
        bad = [x for x in names if x not in FIELDS]
        if bad or not names:
            raise ConfigError("outputs.fields", f"unknown field(s) {bad}; choose from {FIELDS}")
        outputs = replace(outputs, fields=names)
    if "every" in out:
        outputs = replace(outputs, every=_to_int(out["every"], "outputs.every"))
    defaults += [f"outputs.{k}" for k in ("dir", "fields", "every") if k not in out]
    try:
        stepper = replace(cfg.stepper, sample_every=outputs.every, **st_over)
    except ValueError as exc:
        raise ConfigError("stepper", str(exc)) from None
    cfg = replace(cfg, stepper=stepper, outputs=outputs)

    opts = section("options")
    _reject_unknown(opts, set(OPTION_KEYS), "options")
    o_over = {}
    for k, v in opts.items():
        if k == "floor":
            o_over[k] = _to_float(v, "options.floor")
        elif k == "a2_include_u":
            o_over[k] = _to_bool(v, "options.a2_include_u")
        else:
            o_over[k] = v.strip()
    defaults += [f"options.{k}" for k in OPTION_KEYS if k not in o_over]
    try:
        cfg = replace(cfg, options=replace(cfg.options, **o_over))
    except ValueError as exc:
        raise ConfigError("options", str(exc)) from None

    an = section("analysis")
    _reject_unknown(an, {"C_hat1", "eps"}, "analysis")
    if "C_hat1" in an:
        cfg = replace(cfg, C_hat1=_to_float(an["C_hat1"], "analysis.C_hat1"))
    else:
        defaults.append("analysis.C_hat1")
    if "eps" in an and an["eps"].strip().lower() != "auto":
        cfg = replace(cfg, eps=_to_float(an["eps"], "analysis.eps"))
    else:
        defaults.append("analysis.eps")
    if not cfg.C_hat1 > 0:
        raise ConfigError("analysis.C_hat1", "must be positive")
    if cfg.eps is not None and not 0 < cfg.eps <= 1:
        raise ConfigError("analysis.eps", "must lie in (0, 1]")

    init = section("initial")
    _reject_unknown(init, set(FIELDS), "initial")
    initial = dict(cfg.initial)
    initial.update({k: v.strip() for k, v in init.items()})
    defaults += [f"initial.{k}" for k in FIELDS if k not in init]
    cfg = replace(cfg, initial=initial, defaults_applied=tuple(defaults))
    cfg.initial_state()  # surfaces parse and file errors now
    return cfg


def _reject_unknown(items: dict, allowed: set, sec: str):
    for key in items:
        if key not in allowed:
            raise ConfigError(f"{sec}.{key}", "unknown key")


def _num(x) -> str:
    return format(float(x), ".17g")


def to_ini(cfg: ScenarioConfig) -> str:
    """Fully resolved scenario text; loading it reproduces ``cfg``."""
    buf = io.StringIO()
    w = buf.write
    w("[scenario]\n")
    w(f"name = {cfg.name}\n")
    w(f"model = {'both' if cfg.models == MODELS else cfg.models[0]}\n\n")
    w("[constants]\n")
    for k, v in cfg.constants.as_dict().items():
        w(f"{k} = {_num(v)}\n")
    w("\n[grid]\n")
    w(f"nz = {cfg.nz}\n\n")
    w("[stepper]\n")
    for k in STEPPER_KEYS:
        v = getattr(cfg.stepper, k)
        w(f"{k} = {v if isinstance(v, str) else _num(v)}\n")
    w("\n[initial]\n")
    for k in FIELDS:
        src = cfg.initial[k]
        if src.startswith("csv:") and not os.path.isabs(src[4:].strip()):
            src = "csv:" + os.path.join(cfg.base_dir, src[4:].strip())
        w(f"{k} = {src}\n")
    w("\n[outputs]\n")
    w(f"dir = {cfg.outputs.dir}\n")
    w(f"fields = {', '.join(cfg.outputs.fields)}\n")
    w(f"every = {cfg.outputs.every}\n\n")
    w("[options]\n")
    for k in OPTION_KEYS:
        v = getattr(cfg.options, k)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = _num(v)
        w(f"{k} = {v}\n")
    w("\n[analysis]\n")
    w(f"C_hat1 = {_num(cfg.C_hat1)}\n")
    w(f"eps = {'auto' if cfg.eps is None else _num(cfg.eps)}\n")
    return buf.getvalue()


def default_listing() -> str:
    """Every key with its default value, as scenario text."""
    return to_ini(ScenarioConfig(name="defaults"))
