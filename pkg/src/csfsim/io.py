"""CSV time series and the run report."""

from __future__ import annotations

import os
from dataclasses import replace
from typing import Iterable, Optional

import numpy as np

from .config import ScenarioConfig, to_ini
from .model import FIELDS
from .numerics import BlowUpDetected, Singular, Trajectory

REPORT_NAME = "report.ini"


def _num(x) -> str:
    return format(float(x), ".17g")


def write_field_csv(traj: Trajectory, name: str, path: str):
    """Long format: one row per (sample, node), header t,z,value."""
    z = traj.grid.z
    zs = [_num(v) for v in z]
    with open(path, "w", newline="\n") as fh:
        fh.write("t,z,value\n")
        for s in traj.samples:
            t = _num(s.t)
            vals = s.field(name)
            fh.write("".join(f"{t},{zz},{_num(v)}\n" for zz, v in zip(zs, vals)))


def read_field_csv(path: str):
    """Inverse of write_field_csv: (times, z, values[t, z])."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    z = np.unique(data[:, 1])
    return times, z, data[:, 2].reshape(times.size, z.size)


def outcome_lines(traj: Trajectory) -> list:
    out = traj.outcome
    lines = [f"outcome = {out.kind}"]
    if isinstance(out, BlowUpDetected):
        lines += [f"blowup_time = {_num(out.t)}", f"blowup_field = {out.field_name}"]
    elif isinstance(out, Singular):
        lines += [f"singular_time = {_num(out.t)}", f"singular_quantity = {out.which}",
                  f"singular_node = {out.node}"]
    lines.append(f"t_end = {_num(traj.samples[-1].t)}")
    lines.append(f"n_steps = {traj.n_steps}")
    lines.append(f"n_samples = {len(traj.samples)}")
    for name in ("u", "eta", "zeta"):
        lines.append(f"bc_violation_{name} = {'true' if traj.bc_violations.get(name) else 'false'}")
    return lines


def render_report(traj: Trajectory, cfg: ScenarioConfig, model: str,
                  existence: Optional[dict] = None, physiology: Optional[dict] = None) -> str:
    """Run report: [run] and diagnostic sections followed by the resolved scenario.

    Loading the report as a scenario replays the same run.
    """
    parts = ["[run]", f"model = {model}"] + outcome_lines(traj)
    parts.append("defaults_applied = " + ", ".join(cfg.defaults_applied))
    if existence:
        parts += ["", "[existence]"] + [f"{k} = {_fmt(v)}" for k, v in existence.items()]
    if physiology:
        parts += ["", "[physiology]"] + [f"{k} = {_fmt(v)}" for k, v in physiology.items()]
    if traj.events:
        parts += ["", "[events]"] + [f"e{i} = {e}" for i, e in enumerate(traj.events)]
    return "\n".join(parts) + "\n\n" + to_ini(replace(cfg, models=(model,)))


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _num(v)
    return str(v)


def emit_csv(traj: Trajectory, directory: str, fields: Iterable[str] = FIELDS,
             report: Optional[str] = None) -> list:
    """Write one CSV per field (and the report text, if given). Returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name in fields:
        path = os.path.join(directory, f"{name}.csv")
        write_field_csv(traj, name, path)
        paths.append(path)
    if report is not None:
        path = os.path.join(directory, REPORT_NAME)
        with open(path, "w", newline="\n") as fh:
            fh.write(report)
        paths.append(path)
    return paths
