"""Global-existence checks on initial data, the Riccati equation for the
velocity gradient along characteristics, and comparison with published
physiological ranges."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .closed_form import RiccatiParams, blowup_times, riccati_denominator, riccati_pressure
from .model import Grid, PhysConstants
from .numerics import Trajectory, d2dz2, ddz, dopri45, trapz_l2

PA_PER_MMHG = 932.54 / 7.0
SECONDS_PER_YEAR = 365.25 * 86400.0


def pa_to_mmhg(p):
    return np.asarray(p, dtype=float) * 7.0 / 932.54


def mmhg_to_pa(p):
    return np.asarray(p, dtype=float) * PA_PER_MMHG


# -- existence conditions -----------------------------------------------------


@dataclass(frozen=True)
class Condition:
    passed: bool
    margin: float
    bound: str

    def __str__(self):
        return f"{'pass' if self.passed else 'FAIL'} (margin {self.margin:.6g}; {self.bound})"


@dataclass(frozen=True)
class ExistenceReport:
    cond_slope: Condition
    cond_pressure: Condition
    cond_pzz: Condition
    posture: str
    predicted_blowup: Optional[float]
    blowup_node: Optional[int]
    norm_b: float
    eps: float
    C_hat1: float

    @property
    def all_passed(self) -> bool:
        return self.cond_slope.passed and self.cond_pressure.passed and self.cond_pzz.passed

    def as_dict(self) -> dict:
        return {
            "cond_slope": self.cond_slope.passed,
            "cond_slope_margin": self.cond_slope.margin,
            "cond_pressure": self.cond_pressure.passed,
            "cond_pressure_margin": self.cond_pressure.margin,
            "cond_pzz": self.cond_pzz.passed,
            "cond_pzz_margin": self.cond_pzz.margin,
            "posture": self.posture,
            "predicted_blowup": self.predicted_blowup,
            "norm_b": self.norm_b,
            "eps": self.eps,
            "C_hat1": self.C_hat1,
        }


def sobolev_surrogate(b, grid: Grid) -> float:
    """Discrete stand-in for the H^s norm: L2 norms of b, b' and b'' summed."""
    b = np.asarray(b, dtype=float)
    return trapz_l2(b, grid) + trapz_l2(ddz(b, grid), grid) + trapz_l2(d2dz2(b, grid), grid)


def posture_of(b) -> str:
    b = np.asarray(b)
    if np.all(b > 0):
        return "supine"
    if np.all(b < 0):
        return "upright"
    return "mixed"


def eps_from_horizon(b, rp: RiccatiParams, T: float) -> float:
    """Smallest value of the Riccati denominator over [0, T], capped at 1.

    The denominator is monotone in t, so the minimum sits at t = T. A
    non-positive result means some node blows up before T.
    """
    den = riccati_denominator(b, T, rp)
    return float(min(1.0, np.min(den)))


def check_conditions(f, b, grid: Grid, c: PhysConstants, C_hat1: float = 1.0,
                     eps: Optional[float] = None, T: float = 1.0) -> ExistenceReport:
    """Evaluate the three global-existence conditions on initial data.

    ``eps`` defaults to ``eps_from_horizon(b, ., T)``. The pressure bound is
    scaled by eps whenever b has a positive node; mixed-sign data therefore
    get the more demanding test.
    """
    if not C_hat1 > 0:
        raise ValueError("C_hat1 must be positive")
    f = np.asarray(f, dtype=float)
    b = np.asarray(b, dtype=float)
    rp = RiccatiParams.from_constants(c)
    p = c.friction_rate
    if eps is None:
        eps = max(0.0, eps_from_horizon(b, rp, T))
    elif not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")

    slope = float(np.min(ddz(f, grid))) + p
    cond_slope = Condition(slope >= 0, slope, "min f' + beta/rho >= 0")

    norm_b = sobolev_surrogate(b, grid)
    full = p / (4.0 * C_hat1)
    if np.any(b > 0):
        bound, label = eps * full, "||b|| <= eps*beta/(4*C_hat1*rho)"
    else:
        bound, label = full, "||b|| <= beta/(4*C_hat1*rho)"
    cond_pressure = Condition(norm_b <= bound and bound > 0, bound - norm_b, label)

    pzz, ok, pzz_lim = pzz_bound(b, rp, grid, 0.0, c)
    cond_pzz = Condition(ok, pzz_lim - pzz, "sup|P_zz| <= beta/(4*rho)")

    times = blowup_times(b, rp)
    if np.all(np.isinf(times)):
        t_blow, node = None, None
    else:
        node = int(np.argmin(times))
        t_blow = float(times[node])
    return ExistenceReport(cond_slope, cond_pressure, cond_pzz, posture_of(b),
                           t_blow, node, norm_b, float(eps), float(C_hat1))


def pzz_bound(b, rp: RiccatiParams, grid: Grid, T: float, c: PhysConstants, n_times: int = 50):
    """sup over a time ladder on [0, T] and all nodes of |P_zz|.

    Returns (sup, passed, bound) with bound = beta/(4 rho). Raises
    BlowUpCrossed if T is past some node's blow-up time.
    """
    ladder = [0.0] if T == 0 else np.linspace(0.0, T, n_times + 1)
    sup = 0.0
    for t in ladder:
        sup = max(sup, float(np.max(np.abs(d2dz2(riccati_pressure(b, t, rp), grid)))))
    bound = c.friction_rate / 4.0
    return sup, sup <= bound, bound


# -- characteristics ----------------------------------------------------------


@dataclass(frozen=True)
class CharacteristicResult:
    times: np.ndarray
    omega: np.ndarray
    blowup_time: Optional[float]

    @property
    def blew_up(self) -> bool:
        return self.blowup_time is not None


def characteristic_riccati(
    f_prime: float,
    q_forcing: Union[float, Callable[[float], float]],
    c: PhysConstants,
    T: float,
    coefficient: str = "printed",
    threshold: float = 1e9,
    rate: Optional[float] = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> CharacteristicResult:
    """Integrate w' + w^2 + p w + k q(t) = 0 from w(0) = f'.

    p = beta/rho (or ``rate``). The forcing coefficient k is beta/rho with
    ``coefficient="printed"`` and 1/rho with ``"derived"``. Blow-up is reported
    when |w| exceeds ``threshold``; it is a result, not an error.
    """
    if not T > 0:
        raise ValueError("horizon T must be positive")
    if coefficient not in ("printed", "derived"):
        raise ValueError("coefficient must be 'printed' or 'derived'")
    p = c.friction_rate if rate is None else float(rate)
    k = p if coefficient == "printed" else 1.0 / c.rho
    q = q_forcing if callable(q_forcing) else (lambda t, v=float(q_forcing): v)

    def fun(t, w):
        return -w * w - p * w - k * q(t)

    def stop(t, w):
        return not np.all(np.isfinite(w)) or abs(w[0]) > threshold

    ts, ws = dopri45(fun, 0.0, [f_prime], T, atol=atol, rtol=rtol, stop=stop,
                     h0=min(1e-3, T * 1e-3), dt_min=1e-300)
    w = ws[:, 0]
    t_blow = float(ts[-1]) if (not np.isfinite(w[-1]) or abs(w[-1]) > threshold) else None
    return CharacteristicResult(ts, w, t_blow)


def homogeneous_blowup_time(f_prime: float, p: float) -> Optional[float]:
    """Blow-up time of w' = -w^2 - p w from w(0) = f' (None if f' >= -p)."""
    if f_prime >= -p:
        return None
    return math.log(f_prime / (f_prime + p)) / p


# -- physiology ---------------------------------------------------------------


@dataclass(frozen=True)
class PhysiologyTable:
    velocity_range: tuple = (50.0, 80.0)  # mm/s
    icp_supine: tuple = (7.0, 15.0)  # mmHg
    icp_upright_avg: float = -3.4  # mmHg


@dataclass(frozen=True)
class PhysiologyReport:
    peak_velocity_mm_s: float
    icp_min_mmhg: float
    icp_max_mmhg: float
    velocity_in_range: bool
    velocity_below_range: bool
    icp_in_supine_range: bool
    table: PhysiologyTable

    def as_dict(self) -> dict:
        return {
            "peak_velocity_mm_s": self.peak_velocity_mm_s,
            "icp_min_mmhg": self.icp_min_mmhg,
            "icp_max_mmhg": self.icp_max_mmhg,
            "velocity_in_range": self.velocity_in_range,
            "velocity_below_range": self.velocity_below_range,
            "icp_in_supine_range": self.icp_in_supine_range,
        }


def compare_physiology(traj: Trajectory, table: PhysiologyTable = PhysiologyTable()) -> PhysiologyReport:
    """Peak |u| in mm/s and the ICP range in mmHg, checked against ``table``."""
    if not traj.completed:
        raise ValueError(f"physiology comparison needs a completed run, got {traj.outcome}")
    u = traj.stack("u")
    P = traj.stack("P")
    peak = float(np.max(np.abs(u))) * 1000.0
    lo, hi = float(pa_to_mmhg(P.min())), float(pa_to_mmhg(P.max()))
    vlo, vhi = table.velocity_range
    slo, shi = table.icp_supine
    return PhysiologyReport(
        peak, lo, hi,
        vlo <= peak <= vhi,
        peak < vlo,
        slo <= lo and hi <= shi,
        table,
    )


def calibrate_K(b: float, T_blowup: float, c: PhysConstants) -> float:
    """Marmarou constant K giving blow-up time ``T_blowup`` from pressure ``b`` > 0.

    Inverts T = (R / (K S)) ln(1 + S / b) with S = R Q_p + P_tilde.
    """
    if not (b > 0 and T_blowup > 0):
        raise ValueError("calibration needs b > 0 and T_blowup > 0")
    S = c.R_abs * c.Q_p + c.P_tilde
    return c.R_abs * math.log1p(S / b) / (S * T_blowup)
