"""Successive approximations for the coupled models.

Each iterate is a time-sampled sequence of States. Iterate n+1 is obtained
from iterate n by solving decoupled linear problems:

* P from the closed-form Riccati solution (independent of n),
* eta by integrating the previous tissue velocity,
* zeta and A from scalar linear ODEs whose coefficients use iterate n,
* u from the linear transport equation with frozen advection field u^n.

Iterate 0 is the initial data held constant in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .closed_form import (
    integrate_linear_ode,
    linear_coeffs_A1,
    linear_coeffs_A2,
    riccati_pressure,
    zeta_coeffs,
)
from .errors import NoContraction, QuadratureFailure
from .model import FIELDS, State
from .numerics import (
    BoundaryTracker,
    Problem,
    ddz,
    enforce_initial_bcs,
    trapz_l2,
    upwind_ddz,
)


@dataclass(frozen=True, eq=False)
class StateSequence:
    """States sampled at ``times``; ``data`` has shape (len(times), 5, n)."""

    times: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape[0] != self.times.shape[0] or self.data.shape[1] != len(FIELDS):
            raise ValueError("data must have shape (len(times), 5, n)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @classmethod
    def constant(cls, s: State, times) -> "StateSequence":
        times = np.asarray(times, dtype=float)
        return cls(times, np.repeat(s.as_array()[None], times.size, axis=0))

    def _interp(self, t: float) -> np.ndarray:
        ts = self.times
        if t <= ts[0]:
            return self.data[0]
        if t >= ts[-1]:
            return self.data[-1]
        k = int(np.searchsorted(ts, t, side="right")) - 1
        w = (t - ts[k]) / (ts[k + 1] - ts[k])
        return (1.0 - w) * self.data[k] + w * self.data[k + 1]

    def at(self, t: float) -> State:
        """Linear interpolation in time (clamped at the ends)."""
        return State.from_array(t, self._interp(t))

    def field(self, name: str) -> np.ndarray:
        return self.data[:, FIELDS.index(name), :]

    def field_at(self, name: str):
        i = FIELDS.index(name)
        return lambda t: self._interp(t)[i]

    def states(self):
        return [State.from_array(t, Y) for t, Y in zip(self.times, self.data)]


def sup_l2(values: np.ndarray, grid) -> float:
    """max over samples of the trapezoidal spatial L2 norm."""
    return max(trapz_l2(row, grid) for row in values)


@dataclass(frozen=True)
class IterationRecord:
    n: int
    diff_u: float
    diff_P: float
    diff_eta: float
    diff_zeta: float
    diff_A: float
    ratio: Optional[float] = None

    def diff(self, name: str) -> float:
        return getattr(self, f"diff_{name}")


def time_grid(T: float, dt: float) -> np.ndarray:
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    ts = np.arange(n + 1) * dt
    ts[-1] = T
    return ts


def _transport_u(prev: StateSequence, u0, problem: Problem) -> np.ndarray:
    """RK4 method of lines for rho u_t + rho u^n u_z + beta u + P^n_z = 0."""
    c, grid = problem.constants, problem.grid
    upwind = problem.options.advection == "upwind"
    u_n = prev.field_at("u")
    P_n = prev.field_at("P")

    def rate(t, u):
        adv = u_n(t)
        uz = upwind_ddz(u, adv, grid) if upwind else ddz(u, grid)
        r = -adv * uz - c.friction_rate * u - ddz(P_n(t), grid) / c.rho
        r[[0, -1]] = 0.0
        return r

    ts = prev.times
    out = np.empty((ts.size, grid.n))
    u = np.array(u0, dtype=float)
    u[[0, -1]] = 0.0
    out[0] = u
    for k in range(ts.size - 1):
        t, h = ts[k], ts[k + 1] - ts[k]
        k1 = rate(t, u)
        k2 = rate(t + 0.5 * h, u + 0.5 * h * k1)
        k3 = rate(t + 0.5 * h, u + 0.5 * h * k2)
        k4 = rate(t + h, u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = u
    return out


def _chain_linear(x0, coeffs, ts) -> np.ndarray:
    """Solve a linear ODE interval by interval, restarting at each sample."""
    out = np.empty((ts.size, np.size(x0)))
    x = np.array(x0, dtype=float)
    out[0] = x
    for k in range(ts.size - 1):
        x = integrate_linear_ode(x, coeffs, ts[k + 1], t0=ts[k], min_depth=1)
        out[k + 1] = x
    return out


def picard_step(prev: StateSequence, init: State, problem: Problem) -> StateSequence:
    """Compute iterate n+1 on the sample times of iterate n = ``prev``.

    ``init`` must already satisfy the boundary conditions (see
    ``enforce_initial_bcs``). Raises SingularState or BlowUpCrossed.
    """
    if problem.source is not None:
        raise ValueError("additive sources are not supported by the Picard iteration")
    c, opts = problem.constants, problem.options
    ts = prev.times
    rp = problem.riccati

    P = np.array([riccati_pressure(init.P, t, rp) for t in ts])

    # eta^{n+1} = g + int_0^t zeta^n: exact for the piecewise-linear zeta^n
    zeta_n = prev.field("zeta")
    incr = 0.5 * (zeta_n[1:] + zeta_n[:-1]) * np.diff(ts)[:, None]
    eta = init.eta + np.concatenate([np.zeros((1, zeta_n.shape[1])), np.cumsum(incr, axis=0)])

    zc = zeta_coeffs(prev.field_at("A"), prev.field_at("eta"), prev.field_at("P"), c, opts)
    zeta = _chain_linear(init.zeta, zc, ts)

    if problem.model == "a1":
        ac = linear_coeffs_A1(prev, c=c, options=opts)
    else:
        ac = linear_coeffs_A2(prev, c, opts)
    A = _chain_linear(init.A, ac, ts)

    u = _transport_u(prev, init.u, problem)

    tracker = BoundaryTracker(problem, ts[0], init.A[[0, -1]])
    for k, t in enumerate(ts):
        eta[k, [0, -1]] = 0.0
        zeta[k, [0, -1]] = 0.0
        A[k, [0, -1]] = tracker.at(t)
        tracker.commit(t)
    return StateSequence(ts, np.stack([u, eta, zeta, P, A], axis=1))


def _record(n, new: StateSequence, old: StateSequence, grid, prev_diff_u) -> IterationRecord:
    diffs = {name: sup_l2(new.field(name) - old.field(name), grid) for name in FIELDS}
    ratio = None
    if prev_diff_u is not None:
        ratio = diffs["u"] / prev_diff_u if prev_diff_u > 0 else (0.0 if diffs["u"] == 0 else math.inf)
    return IterationRecord(
        n, diffs["u"], diffs["P"], diffs["eta"], diffs["zeta"], diffs["A"], ratio
    )


def run_fixed_point(
    init: State,
    T: float,
    problem: Problem,
    dt: float = 5e-3,
    tol: float = 1e-10,
    max_iter: int = 50,
    max_growth: int = 3,
):
    """Iterate until diff_u < tol or ``max_iter`` iterates have been built.

    Raises NoContraction once ``max_growth`` consecutive ratios exceed 1,
    which indicates the horizon T is too long for the iteration to contract.
    Returns (last iterate, history).
    """
    if not T > 0:
        raise ValueError("horizon T must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    init, _ = enforce_initial_bcs(init, problem)
    seq = StateSequence.constant(init, time_grid(T, dt))
    history = []
    growth = 0
    for n in range(max_iter):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                new = picard_step(seq, init, problem)
        except QuadratureFailure as exc:
            # the iterates left the range of floating point numbers
            raise NoContraction(history, f"iterate {n + 1} diverged: {exc}") from exc
        if not np.all(np.isfinite(new.data)):
            raise NoContraction(history, f"iterate {n + 1} is not finite")
        rec = _record(n, new, seq, problem.grid, history[-1].diff_u if history else None)
        history.append(rec)
        seq = new
        if rec.diff_u < tol:
            break
        growth = growth + 1 if (rec.ratio is not None and rec.ratio > 1.0) else 0
        if growth >= max_growth:
            raise NoContraction(history)
    return seq, history


def equicontinuity_modulus(seq: StateSequence, pairs, grid) -> dict:
    """Per-field max of ||X(t) - X(s)||_2 / |t - s| over the given time pairs."""
    out = {name: 0.0 for name in FIELDS}
    for t, s in pairs:
        if t == s:
            raise ValueError("equicontinuity pairs need t != s")
        a, b = seq.at(t), seq.at(s)
        for name in FIELDS:
            q = trapz_l2(a.field(name) - b.field(name), grid) / abs(t - s)
            out[name] = max(out[name], q)
    return out


def tail_sums(history) -> list:
    """Sum of diff_u over records n, n+1, ... for each n."""
    d = [r.diff_u for r in history]
    return [float(sum(d[k:])) for k in range(len(d))]
