"""Method-of-lines discretization and time integration.

Space: second-order finite differences on the uniform node grid. Time: classical
RK4 at a fixed step, or the Dormand-Prince 5(4) embedded pair with step-size
control. Boundary conditions are re-imposed after every stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .closed_form import (
    RiccatiParams,
    boundary_coeffs,
    integrate_linear_ode,
    riccati_pressure,
)
from .errors import BlowUpCrossed, SingularState, StepSizeUnderflow
from .model import (
    FIELDS,
    RHS,
    Grid,
    ModelOptions,
    PhysConstants,
    State,
    check_model,
)

# -- spatial operators ------------------------------------------------------


def ddz(f, grid: Grid) -> np.ndarray:
    """First derivative: centered inside, one-sided three-point at the ends."""
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != grid.n:
        raise ValueError(f"field has {f.shape[-1]} nodes, grid has {grid.n}")
    return np.gradient(f, grid.dz, edge_order=2, axis=-1)


def d2dz2(f, grid: Grid) -> np.ndarray:
    """Second derivative: centered inside, one-sided four-point at the ends."""
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != grid.n:
        raise ValueError(f"field has {f.shape[-1]} nodes, grid has {grid.n}")
    out = np.empty_like(f)
    out[..., 1:-1] = f[..., 2:] - 2.0 * f[..., 1:-1] + f[..., :-2]
    out[..., 0] = 2.0 * f[..., 0] - 5.0 * f[..., 1] + 4.0 * f[..., 2] - f[..., 3]
    out[..., -1] = 2.0 * f[..., -1] - 5.0 * f[..., -2] + 4.0 * f[..., -3] - f[..., -4]
    return out / grid.dz**2


def upwind_ddz(f, velocity, grid: Grid) -> np.ndarray:
    """First-order upwind derivative of ``f`` for transport with ``velocity``."""
    f = np.asarray(f, dtype=float)
    back = np.empty_like(f)
    fwd = np.empty_like(f)
    back[1:] = (f[1:] - f[:-1]) / grid.dz
    back[0] = (f[1] - f[0]) / grid.dz
    fwd[:-1] = back[1:]
    fwd[-1] = back[-1]
    return np.where(np.asarray(velocity) >= 0, back, fwd)


def trapz_l2(f, grid: Grid) -> float:
    f = np.asarray(f, dtype=float)
    return math.sqrt(float(np.trapezoid(f * f, dx=grid.dz)))


# -- problem definition -------------------------------------------------------

Source = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Problem:
    """Everything the right-hand side and boundary closure need.

    ``b_ends`` and ``h_ends`` are the initial pressure and cross section at
    z = 0 and z = L, which fix the closed-form boundary data. ``source`` is an
    optional additive forcing (t, z) -> array of shape (5, n), used for
    manufactured-solution checks.
    """

    model: str
    constants: PhysConstants
    grid: Grid
    b_ends: tuple
    h_ends: tuple
    options: ModelOptions = ModelOptions()
    source: Optional[Source] = None

    def __post_init__(self):
        object.__setattr__(self, "model", check_model(self.model))

    @classmethod
    def from_initial(cls, model, c, grid, init: State, options=ModelOptions(), source=None):
        return cls(
            model, c, grid,
            (float(init.P[0]), float(init.P[-1])),
            (float(init.A[0]), float(init.A[-1])),
            options, source,
        )

    @property
    def riccati(self) -> RiccatiParams:
        return RiccatiParams.from_constants(self.constants)


class BoundaryTracker:
    """Propagates the boundary cross sections incrementally in time.

    Values at any time after the reference time are obtained with the exact
    integrating-factor solution started from the reference; ``commit`` moves the
    reference forward once a step is accepted.
    """

    def __init__(self, problem: Problem, t0: float = 0.0, A0=None):
        self.problem = problem
        self.coeffs = boundary_coeffs(
            np.array(problem.b_ends), problem.constants, problem.model, problem.options
        )
        self.t_ref = t0
        self.A_ref = np.array(problem.h_ends if A0 is None else A0, dtype=float)
        self._cache = {t0: self.A_ref}

    def at(self, t: float) -> np.ndarray:
        hit = self._cache.get(t)
        if hit is None:
            # one step is short against the forcing period and 1/C
            hit = integrate_linear_ode(self.A_ref, self.coeffs, t, t0=self.t_ref, min_depth=1)
            self._cache[t] = hit
        return hit

    def commit(self, t: float):
        A = self.at(t)
        self.t_ref, self.A_ref = t, A
        self._cache = {t: A}


def _apply_bcs_array(Y, t, problem: Problem, tracker: Optional[BoundaryTracker]):
    Y = Y.copy()
    Y[0:3, 0] = 0.0
    Y[0:3, -1] = 0.0
    Y[3, [0, -1]] = riccati_pressure(np.array(problem.b_ends), t, problem.riccati)
    if tracker is None:
        tracker = BoundaryTracker(problem)
    Y[4, [0, -1]] = tracker.at(t)
    return Y


def apply_bcs(s: State, problem: Problem, tracker: Optional[BoundaryTracker] = None) -> State:
    """Zero u, eta, zeta at both ends; set P and A ends to their closed forms."""
    return State.from_array(s.t, _apply_bcs_array(s.as_array(), s.t, problem, tracker))


def rates_array(t: float, Y: np.ndarray, problem: Problem) -> np.ndarray:
    grid = problem.grid
    s = State(t, Y[0], Y[1], Y[2], Y[3], Y[4])
    if problem.options.advection == "upwind":
        uz = upwind_ddz(s.u, s.u, grid)
    else:
        uz = ddz(s.u, grid)
    Pz = ddz(s.P, grid)
    r = RHS[problem.model](s, uz, Pz, problem.constants, problem.options.floor).as_array()
    if problem.source is not None:
        r = r + problem.source(t, grid.z)
    return r


# -- time stepping ----------------------------------------------------------


@dataclass(frozen=True)
class StepperConfig:
    scheme: str = "rk4"
    dt: float = 5e-3
    t_final: float = 1.0
    atol: float = 1e-8
    rtol: float = 1e-6
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    blowup_threshold: float = 1e8
    sample_every: int = 1

    def __post_init__(self):
        if self.scheme not in ("rk4", "rk45"):
            raise ValueError(f"scheme must be 'rk4' or 'rk45', got {self.scheme!r}")
        if not self.dt > 0 or not self.dt_init > 0:
            raise ValueError("dt must be positive")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not self.blowup_threshold > 1:
            raise ValueError("blowup_threshold must exceed 1")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError("sample_every must be a positive integer")
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("tolerances must be positive")


def rk4_step(f, t, y, h, project=None):
    """Classical RK4 step; ``project(t, y)`` is applied to each stage argument."""
    p = project or (lambda tt, yy: yy)
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, p(t + 0.5 * h, y + 0.5 * h * k1))
    k3 = f(t + 0.5 * h, p(t + 0.5 * h, y + 0.5 * h * k2))
    k4 = f(t + h, p(t + h, y + h * k3))
    return p(t + h, y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def _rk4(t, Y, dt, problem, tracker):
    return rk4_step(
        lambda tt, YY: rates_array(tt, YY, problem), t, Y, dt,
        lambda tt, YY: _apply_bcs_array(YY, tt, problem, tracker),
    )


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_DP_E = tuple(b5 - b4 for b5, b4 in zip(_DP_B5, _DP_B4))


def dp45_attempt(f, t, y, h, k1=None, project=None):
    """One Dormand-Prince trial step. Returns (y5, error_estimate, k7).

    ``project`` is applied to every stage argument (used for boundary closure).
    """
    ks = [f(t, y) if k1 is None else k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks) if a != 0.0)
        ti = t + _DP_C[i] * h
        if project is not None:
            yi = project(ti, yi)
        ks.append(f(ti, yi))
    y5 = y + h * sum(b * k for b, k in zip(_DP_B5, ks) if b != 0.0)
    if project is not None:
        y5 = project(t + h, y5)
    err = h * sum(e * k for e, k in zip(_DP_E, ks) if e != 0.0)
    return y5, err, ks[-1]


def _err_norm(err, y0, y1, atol, rtol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _next_factor(norm):
    if norm == 0:
        return 5.0
    return min(5.0, max(0.2, 0.9 * norm ** -0.2))


def dopri45(fun, t0, y0, t1, atol=1e-10, rtol=1e-10, h0=None, dt_min=1e-14, stop=None):
    """Adaptive Dormand-Prince integration of y' = fun(t, y) on [t0, t1].

    ``stop(t, y)`` may return True to end early (e.g. a blow-up threshold).
    Returns (ts, ys) of accepted steps including the start.
    """
    t = float(t0)
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    h = h0 if h0 is not None else 1e-3 * max(abs(t1 - t0), 1e-12)
    ts, ys = [t], [y]
    k1 = fun(t, y)
    while t < t1:
        h = min(h, t1 - t)
        if h < dt_min * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size {h:.3g} underflow at t={t:.6g}")
        y_new, err, k7 = dp45_attempt(fun, t, y, h, k1)
        norm = _err_norm(err, y, y_new, atol, rtol) if np.all(np.isfinite(y_new)) else np.inf
        if norm <= 1.0:
            t = t + h
            y = y_new
            k1 = k7
            ts.append(t)
            ys.append(y)
            if stop is not None and stop(t, y):
                break
        h = h * (_next_factor(norm) if np.isfinite(norm) else 0.2)
    return np.array(ts), np.array(ys)


def step(s: State, cfg: StepperConfig, problem: Problem, dt=None, tracker=None) -> State:
    """Advance one step (fixed RK4) or one accepted step (adaptive 5(4))."""
    tracker = tracker or BoundaryTracker(problem, s.t, (s.A[0], s.A[-1]))
    Y = s.as_array()
    if cfg.scheme == "rk4":
        h = cfg.dt if dt is None else dt
        Ynew = _rk4(s.t, Y, h, problem, tracker)
        return State.from_array(s.t + h, Ynew)
    h = cfg.dt_init if dt is None else dt
    Ynew, h_used, _ = _adaptive_step(s.t, Y, h, cfg, problem, tracker, None)
    return State.from_array(s.t + h_used, Ynew)


def _adaptive_step(t, Y, h, cfg, problem, tracker, k1):
    f = lambda tt, YY: rates_array(tt, YY, problem)
    project = lambda tt, YY: _apply_bcs_array(YY, tt, problem, tracker)
    while True:
        if h < cfg.dt_min * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size {h:.3g} underflow at t={t:.6g}")
        Ynew, err, _ = dp45_attempt(f, t, Y, h, k1, project)
        norm = _err_norm(err, Y, Ynew, cfg.atol, cfg.rtol) if np.all(np.isfinite(Ynew)) else np.inf
        if norm <= 1.0:
            return Ynew, h, h * _next_factor(norm)
        h = h * (_next_factor(norm) if np.isfinite(norm) else 0.2)


# -- simulation loop --------------------------------------------------------


@dataclass(frozen=True)
class Completed:
    kind = "completed"


@dataclass(frozen=True)
class BlowUpDetected:
    t: float
    field_name: str
    kind = "blowup"


@dataclass(frozen=True)
class Singular:
    t: float
    which: str = ""
    node: int = -1
    kind = "singular"


Outcome = Union[Completed, BlowUpDetected, Singular]


@dataclass
class Trajectory:
    samples: list
    outcome: Outcome
    grid: Grid
    model: str
    events: list = field(default_factory=list)
    bc_violations: dict = field(default_factory=dict)
    n_steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def stack(self, name: str) -> np.ndarray:
        return np.array([s.field(name) for s in self.samples])

    @property
    def completed(self) -> bool:
        return isinstance(self.outcome, Completed)


def enforce_initial_bcs(init: State, problem: Problem):
    """Apply the boundary closure at t = 0 and report incompatible initial data."""
    violations = {
        name: bool(init.field(name)[0] != 0.0 or init.field(name)[-1] != 0.0)
        for name in ("u", "eta", "zeta")
    }
    return apply_bcs(init, problem), violations


def _blown(Y, ref_norms, threshold):
    for i, name in enumerate(FIELDS):
        row = Y[i]
        if not np.all(np.isfinite(row)) or np.max(np.abs(row)) > threshold * (1.0 + ref_norms[i]):
            return name
    return None


def simulate(init: State, cfg: StepperConfig, problem: Problem) -> Trajectory:
    """Integrate from ``init`` to ``cfg.t_final`` or until blow-up / singularity."""
    state, violations = enforce_initial_bcs(init, problem)
    events = [f"bc_enforced t=0 field={k}" for k, v in violations.items() if v]
    traj = Trajectory([state], Completed(), problem.grid, problem.model, events, violations)
    Y = state.as_array()
    ref = np.max(np.abs(init.as_array()), axis=1)
    tracker = BoundaryTracker(problem, state.t, Y[4, [0, -1]])
    t = state.t
    n = 0
    h = cfg.dt if cfg.scheme == "rk4" else cfg.dt_init
    n_fixed = max(1, int(math.ceil(cfg.t_final / cfg.dt - 1e-9)))
    try:
        rates_array(t, Y, problem)  # denominators at the initial state
        while t < cfg.t_final:
            if cfg.scheme == "rk4":
                t_new = cfg.t_final if n + 1 >= n_fixed else (n + 1) * cfg.dt
                Ynew = _rk4(t, Y, t_new - t, problem, tracker)
            else:
                h = min(h, cfg.t_final - t)
                Ynew, h_used, h = _adaptive_step(t, Y, h, cfg, problem, tracker, None)
                t_new = cfg.t_final if cfg.t_final - (t + h_used) <= 1e-12 * cfg.t_final else t + h_used
            n += 1
            blown = _blown(Ynew, ref, cfg.blowup_threshold)
            if blown is not None:
                traj.outcome = BlowUpDetected(t_new, blown)
                traj.events.append(f"blowup t={t_new!r} field={blown}")
                break
            tracker.commit(t_new)
            t, Y = t_new, Ynew
            if n % cfg.sample_every == 0 or t >= cfg.t_final:
                traj.samples.append(State.from_array(t, Y))
    except BlowUpCrossed as exc:
        traj.outcome = BlowUpDetected(exc.t, "P")
        traj.events.append(f"blowup t={exc.t!r} field=P (closed-form boundary pressure)")
    except SingularState as exc:
        traj.outcome = Singular(exc.t, exc.which, exc.node)
        traj.events.append(f"singular t={exc.t!r} {exc.which} node={exc.node}")
    if not traj.completed and traj.samples[-1].t != t:
        traj.samples.append(State.from_array(t, Y))
    traj.n_steps = n
    return traj
