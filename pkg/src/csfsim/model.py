"""Physical constants, grid and state containers, and the right-hand sides
of the two CSF compartment models in time-derivative-resolved form.

Both models share the tissue (eta, zeta), momentum (u) and Marmarou pressure
(P) equations. They differ in the continuity equation for the cross section A:
model A1 carries the axial outflow term ``u * A``, model A2 replaces it with the
pressure-driven absorption ``(P - P_tilde) / R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import SingularState

FIELDS = ("u", "eta", "zeta", "P", "A")
MODELS = ("a1", "a2")

DEFAULT_FLOOR = 1e-12


@dataclass(frozen=True)
class PhysConstants:
    """Model constants in SI units.

    ``alpha_hat`` and ``beta`` are derived (rho * delta and 8 mu / r^2) and
    cannot be passed in. Only rho, mu, Q_p and P_tilde have values grounded in
    reported physiology; the rest are placeholders on the unit scale of the
    preset initial data and are meant to be overridden.
    """

    rho: float = 998.2
    mu: float = 1.003e-3
    r_foramen: float = 7.3e-4
    delta: float = 1.0
    kappa: float = 2.0
    k_tilde: float = 0.2
    h_tilde: float = 1.0
    Q_p: float = 0.35e-6 / 60.0
    R_abs: float = 8.0e10
    alpha_bar: float = 0.05
    omega: float = 2.0 * math.pi * 1.2
    K_marm: float = 5.8e8
    P_tilde: float = 500.0
    L: float = 1.0
    alpha_hat: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        for name in ("rho", "h_tilde", "R_abs", "L", "r_foramen", "delta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        object.__setattr__(self, "alpha_hat", self.rho * self.delta)
        object.__setattr__(self, "beta", 8.0 * self.mu / self.r_foramen**2)

    @classmethod
    def input_names(cls):
        return [f.name for f in fields(cls) if f.init]

    def with_(self, **overrides) -> "PhysConstants":
        return replace(self, **overrides)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.input_names()}

    @property
    def friction_rate(self) -> float:
        """beta / rho, the velocity damping rate in 1/s."""
        return self.beta / self.rho


@dataclass(frozen=True)
class ModelOptions:
    """Discretization and formula-variant switches.

    absorption_sign: "continuity" uses R*Q_p - P + P_tilde in the A2 source,
        "printed" uses R*Q_p - P - P_tilde.
    a2_include_u: add the u*A outflow to the A2 growth coefficient.
    zeta_damping: "derived" gives the tissue damping rate k_tilde/(alpha_hat*A),
        "printed" gives (k_tilde/alpha_hat)*A.
    advection: "centered" or "upwind" differencing of u*u_z.
    """

    floor: float = DEFAULT_FLOOR
    absorption_sign: str = "continuity"
    a2_include_u: bool = False
    zeta_damping: str = "derived"
    advection: str = "centered"

    def __post_init__(self):
        if self.absorption_sign not in ("continuity", "printed"):
            raise ValueError(f"absorption_sign must be 'continuity' or 'printed', got {self.absorption_sign!r}")
        if self.zeta_damping not in ("derived", "printed"):
            raise ValueError(f"zeta_damping must be 'derived' or 'printed', got {self.zeta_damping!r}")
        if self.advection not in ("centered", "upwind"):
            raise ValueError(f"advection must be 'centered' or 'upwind', got {self.advection!r}")
        if self.floor < 0:
            raise ValueError("floor must be non-negative")


@dataclass(frozen=True)
class Grid:
    nz: int
    L: float = 1.0

    def __post_init__(self):
        if int(self.nz) != self.nz or self.nz < 4:
            raise ValueError(f"nz must be an integer >= 4, got {self.nz}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def dz(self) -> float:
        return self.L / self.nz

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.nz + 1) * self.dz

    @property
    def n(self) -> int:
        return self.nz + 1


@dataclass(frozen=True, eq=False)
class State:
    """The five unknowns sampled on the grid at time ``t``."""

    t: float
    u: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    P: np.ndarray
    A: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.stack([self.u, self.eta, self.zeta, self.P, self.A])

    @classmethod
    def from_array(cls, t: float, Y: np.ndarray) -> "State":
        return cls(float(t), *(np.array(row, dtype=float) for row in Y))

    def replace(self, **changes) -> "State":
        return replace(self, **changes)

    def at(self, t: float) -> "State":
        # a single State acts as a constant-in-time sequence
        return self

    def field(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass(frozen=True)
class Rates:
    """Per-field time derivatives."""

    u: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    P: np.ndarray
    A: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.stack([self.u, self.eta, self.zeta, self.P, self.A])


def forcing(t, c: PhysConstants):
    """Choroid plexus wall motion a(t), 2 pi / omega periodic."""
    wt = c.omega * np.asarray(t, dtype=float)
    return c.alpha_bar * (1.3 + np.sin(wt - np.pi / 2) - 0.5 * np.cos(2 * wt - np.pi / 2))


def forcing_deriv(t, c: PhysConstants):
    wt = c.omega * np.asarray(t, dtype=float)
    return c.alpha_bar * c.omega * (np.cos(wt - np.pi / 2) + np.sin(2 * wt - np.pi / 2))


def absorption(P, c: PhysConstants):
    """Venous outflow Q_a = (P - P_tilde) / R."""
    return (np.asarray(P, dtype=float) - c.P_tilde) / c.R_abs


def riccati_rate(P, c: PhysConstants):
    """dP/dt of the Marmarou pressure equation (identical in both models)."""
    k = c.K_marm / c.R_abs
    return k * P * P + k * (c.R_abs * c.Q_p + c.P_tilde) * P


def check_floor(values, floor, t, which):
    if floor <= 0:
        return
    bad = np.flatnonzero(~(np.abs(values) >= floor))
    if bad.size:
        i = int(bad[0])
        raise SingularState(t, which, i, float(values[i]))


def _shared_rates(s: State, uz, Pz, c: PhysConstants, floor):
    mass = c.alpha_hat * s.A
    check_floor(mass, floor, s.t, "alpha_hat*A")
    height = c.h_tilde + forcing(s.t, c) + s.eta
    check_floor(height, floor, s.t, "h_tilde+a+eta")
    d_eta = s.zeta.copy()
    d_zeta = (s.A * s.P - s.A * c.P_tilde - c.k_tilde * s.zeta - c.kappa * s.eta) / mass
    d_u = -s.u * uz - c.friction_rate * s.u - Pz / c.rho
    d_P = riccati_rate(s.P, c)
    return height, d_eta, d_zeta, d_u, d_P


def rhs_A1(s: State, uz, Pz, c: PhysConstants, floor=DEFAULT_FLOOR) -> Rates:
    height, d_eta, d_zeta, d_u, d_P = _shared_rates(s, uz, Pz, c, floor)
    ap = forcing_deriv(s.t, c)
    d_A = (c.Q_p - (ap + s.zeta + s.u) * s.A) / height
    return Rates(d_u, d_eta, d_zeta, d_P, d_A)


def rhs_A2(s: State, uz, Pz, c: PhysConstants, floor=DEFAULT_FLOOR) -> Rates:
    height, d_eta, d_zeta, d_u, d_P = _shared_rates(s, uz, Pz, c, floor)
    ap = forcing_deriv(s.t, c)
    d_A = (c.Q_p - (ap + s.zeta) * s.A - absorption(s.P, c)) / height
    return Rates(d_u, d_eta, d_zeta, d_P, d_A)


RHS = {"a1": rhs_A1, "a2": rhs_A2}


def check_model(model: str) -> str:
    m = str(model).lower()
    if m not in MODELS:
        raise ValueError(f"unknown model {model!r}, expected one of {MODELS}")
    return m
