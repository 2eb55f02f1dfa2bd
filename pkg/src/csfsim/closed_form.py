"""Exact and semi-exact sub-solutions of the models.

The pressure equation is an autonomous Riccati equation solved in closed form.
The cross section and the tissue velocity obey scalar linear ODEs per node,
x' + G(t) x = H(t), solved with the integrating factor and adaptive Simpson
quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BlowUpCrossed, InvalidParams, QuadratureFailure
from .model import (
    ModelOptions,
    PhysConstants,
    check_floor,
    check_model,
    forcing,
    forcing_deriv,
)

QUAD_ATOL = 1e-10
QUAD_RTOL = 1e-8


@dataclass(frozen=True)
class RiccatiParams:
    """Growth rate ``C = K (Q_p + P_tilde / R)`` and ``K_over_RC = K / (R C)``."""

    C: float
    K_over_RC: float

    def __post_init__(self):
        if self.C == 0:
            raise InvalidParams("Riccati growth rate C must be non-zero")

    @classmethod
    def from_constants(cls, c: PhysConstants) -> "RiccatiParams":
        C = c.K_marm * (c.Q_p + c.P_tilde / c.R_abs)
        if C == 0:
            raise InvalidParams("Riccati growth rate C = K (Q_p + P_tilde / R) is zero")
        return cls(C=C, K_over_RC=c.K_marm / (c.R_abs * C))

    @property
    def quadratic(self) -> float:
        """Coefficient K/R of P^2 in dP/dt."""
        return self.C * self.K_over_RC

    @property
    def equilibrium(self) -> float:
        """Magnitude R Q_p + P_tilde of the non-zero equilibrium -RC/K."""
        return 1.0 / self.K_over_RC


def riccati_denominator(b, t, rp: RiccatiParams):
    return 1.0 + rp.K_over_RC * np.asarray(b, dtype=float) * (1.0 - math.exp(rp.C * t))


def riccati_pressure(b, t: float, rp: RiccatiParams) -> np.ndarray:
    """P(t, z) = b e^{Ct} / (1 + (K/RC) b (1 - e^{Ct})).

    The denominator is monotone in t and equals 1 at t = 0, so it changes sign
    on [0, t] iff it is non-positive at t.
    """
    b = np.asarray(b, dtype=float)
    if t == 0:
        return b.copy()
    if rp.C * t > 0:
        # scaled by e^{-Ct} so that long horizons do not overflow
        g = math.exp(-rp.C * t)
        den = g + rp.K_over_RC * b * (g - 1.0)
        num = b
    else:
        den = riccati_denominator(b, t, rp)
        num = b * math.exp(rp.C * t)
    bad = np.flatnonzero(np.atleast_1d(den <= 0))
    if bad.size:
        raise BlowUpCrossed(t, int(bad[0]) if b.ndim else None)
    return num / den


def riccati_integral(b, t: float, rp: RiccatiParams) -> np.ndarray:
    """Exact time integral of riccati_pressure over [0, t]: -(R/K) ln(denominator)."""
    den = riccati_denominator(b, t, rp)
    if np.any(den <= 0):
        raise BlowUpCrossed(t)
    return -np.log(den) / rp.quadratic


def blowup_time(b_node: float, rp: RiccatiParams):
    """Finite blow-up time of the pressure started from ``b_node``.

    Returns None when b_node <= 0: with C > 0 and K > 0 the denominator then
    stays >= 1 for all t.
    """
    if b_node <= 0:
        return None
    if rp.C <= 0 or rp.K_over_RC <= 0:
        raise InvalidParams("blow-up time needs C > 0 and K > 0 for positive b")
    return math.log1p(1.0 / (rp.K_over_RC * b_node)) / rp.C


def blowup_times(b, rp: RiccatiParams) -> np.ndarray:
    """Nodewise blow-up times, +inf where there is none."""
    b = np.asarray(b, dtype=float)
    out = np.full(b.shape, np.inf)
    pos = b > 0
    if np.any(pos):
        if rp.C <= 0 or rp.K_over_RC <= 0:
            raise InvalidParams("blow-up time needs C > 0 and K > 0 for positive b")
        with np.errstate(over="ignore"):  # tiny b: the blow-up time is effectively infinite
            out[pos] = np.log1p(1.0 / (rp.K_over_RC * b[pos])) / rp.C
    return out


# -- linear ODEs ------------------------------------------------------------


@dataclass(frozen=True)
class LinearODECoeffs:
    """Time-dependent coefficients of x' + G(t) x = H(t), evaluated nodewise."""

    G: Callable[[float], np.ndarray]
    H: Callable[[float], np.ndarray]

    @classmethod
    def constant(cls, G, H) -> "LinearODECoeffs":
        G = np.asarray(G, dtype=float)
        H = np.asarray(H, dtype=float)
        return cls(G=lambda t: G, H=lambda t: H)

    def frozen_at(self, t0: float) -> "LinearODECoeffs":
        return LinearODECoeffs.constant(self.G(t0), self.H(t0))


def _simpson(fa, fm, fb, h):
    return (h / 6.0) * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, a: float, b: float, atol=QUAD_ATOL, rtol=QUAD_RTOL, max_depth=40, min_depth=3):
    """Integrate a (vector-valued) function over [a, b].

    Panels are refined until the Richardson error estimate |S2 - S1| / 15 is
    below the panel's share of max(atol, rtol * |I|) in the max norm. The
    first ``min_depth`` levels are always split, since the estimate on a
    single coarse panel can vanish by accident.
    """
    if b == a:
        return np.zeros_like(np.asarray(f(a), dtype=float))
    fa, fm, fb = (np.asarray(f(x), dtype=float) for x in (a, 0.5 * (a + b), b))
    whole = _simpson(fa, fm, fb, b - a)
    scale = max(atol, rtol * float(np.max(np.abs(whole))))
    total = np.zeros_like(whole)
    stack = [(a, b, fa, fm, fb, whole, 0)]
    span = b - a
    while stack:
        lo, hi, flo, fmid, fhi, s, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl = np.asarray(f(0.5 * (lo + mid)), dtype=float)
        fr = np.asarray(f(0.5 * (mid + hi)), dtype=float)
        left = _simpson(flo, fl, fmid, mid - lo)
        right = _simpson(fmid, fr, fhi, hi - mid)
        err = float(np.max(np.abs(left + right - s))) / 15.0
        if not math.isfinite(err):
            raise QuadratureFailure(f"non-finite panel sum on [{lo:.6g}, {hi:.6g}]")
        tol = scale * (hi - lo) / span
        if depth >= min_depth and (err <= tol or err <= 1e-15 * float(np.max(np.abs(left + right)))):
            total = total + left + right + (left + right - s) / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureFailure(
                f"adaptive Simpson did not converge on [{lo:.6g}, {hi:.6g}] (err {err:.3g})"
            )
        stack.append((mid, hi, fmid, fr, fhi, right, depth + 1))
        stack.append((lo, mid, flo, fl, fmid, left, depth + 1))
    return total


def integrate_linear_ode(
    x0,
    coeffs: LinearODECoeffs,
    t: float,
    t0: float = 0.0,
    frozen: bool = False,
    atol=QUAD_ATOL,
    rtol=QUAD_RTOL,
    min_depth: int = 3,
):
    """Solve x' + G x = H nodewise from x(t0) = x0 up to time t.

    Exact integrating-factor form
        x(t) = x0 e^{-I(t)} + int_{t0}^{t} H(s) e^{I(s) - I(t)} ds,
        I(s) = int_{t0}^{s} G.
    With ``frozen=True`` the literal constant-coefficient transcription
        x(t) = x0 e^{-G(t) t} + e^{-G(t) t} int_0^t H(s) e^{G(s) s} ds
    is evaluated instead (t0 must be 0); both agree when G and H are constant.
    ``min_depth`` is passed to the outer quadrature; intervals much shorter
    than the time scale of G and H can safely use 1.
    """
    x0 = np.asarray(x0, dtype=float)
    if t == t0:
        return x0.copy()
    if frozen:
        if t0 != 0:
            raise ValueError("frozen mode integrates from t0 = 0")
        Gt = np.asarray(coeffs.G(t), dtype=float)
        integral = adaptive_simpson(
            lambda s: coeffs.H(s) * np.exp(np.asarray(coeffs.G(s)) * s - Gt * t),
            0.0, t, atol, rtol, min_depth=min_depth,
        )
        return x0 * np.exp(-Gt * t) + integral

    def I(s):
        return adaptive_simpson(coeffs.G, t0, s, atol * 1e-2, rtol * 1e-2, min_depth=0)

    It = I(t)
    integral = adaptive_simpson(lambda s: coeffs.H(s) * np.exp(I(s) - It), t0, t, atol, rtol,
                                 min_depth=min_depth)
    x = x0 * np.exp(-It) + integral
    if not np.all(np.isfinite(x)):
        raise QuadratureFailure("non-finite linear ODE solution")
    return x


# -- model-specific coefficients ---------------------------------------------


def _height(t, eta, c, floor):
    height = c.h_tilde + forcing(t, c) + eta
    check_floor(height, floor, t, "h_tilde+a+eta")
    return height


def linear_coeffs_A1(s, u=None, c: PhysConstants = None, options: ModelOptions = ModelOptions()):
    """Cross-section coefficients of model A1.

    ``s`` is a State (frozen in time, except for a(t)) or anything with an
    ``at(t)`` method returning a State. ``u`` overrides the velocity field.
    """

    def G(t):
        st = s.at(t)
        uu = st.u if u is None else _field_at(u, t)
        return (forcing_deriv(t, c) + st.zeta + uu) / _height(t, st.eta, c, options.floor)

    def H(t):
        return c.Q_p / _height(t, s.at(t).eta, c, options.floor)

    return LinearODECoeffs(G, H)


def linear_coeffs_A2(s, c: PhysConstants, options: ModelOptions = ModelOptions(), P=None):
    """Cross-section coefficients of model A2.

    With ``absorption_sign="printed"`` the source numerator is
    R Q_p - P - P_tilde; the default follows the continuity equation,
    R Q_p - P + P_tilde.
    """
    sign = 1.0 if options.absorption_sign == "continuity" else -1.0

    def G(t):
        st = s.at(t)
        rate = forcing_deriv(t, c) + st.zeta
        if options.a2_include_u:
            rate = rate + st.u
        return rate / _height(t, st.eta, c, options.floor)

    def H(t):
        st = s.at(t)
        pp = st.P if P is None else _field_at(P, t)
        num = c.R_abs * c.Q_p - pp + sign * c.P_tilde
        return num / (c.R_abs * _height(t, st.eta, c, options.floor))

    return LinearODECoeffs(G, H)


def _field_at(src, t):
    return src(t) if callable(src) else np.asarray(src, dtype=float)


def zeta_coeffs(A, eta, P, c: PhysConstants, options: ModelOptions = ModelOptions()):
    """Coefficients of the tissue velocity equation zeta' + F zeta = J / alpha_hat.

    J = P - kappa eta / A - P_tilde. Arguments may be arrays or callables of t.
    """

    def F(t):
        a = _field_at(A, t)
        check_floor(c.alpha_hat * a, options.floor, t, "alpha_hat*A")
        if options.zeta_damping == "derived":
            return c.k_tilde / (c.alpha_hat * a)
        return (c.k_tilde / c.alpha_hat) * a

    def J(t):
        a = _field_at(A, t)
        check_floor(c.alpha_hat * a, options.floor, t, "alpha_hat*A")
        return (_field_at(P, t) - c.kappa * _field_at(eta, t) / a - c.P_tilde) / c.alpha_hat

    return LinearODECoeffs(F, J)


def basic_step_zeta_eta(g, q, b, h, t: float, c: PhysConstants, options: ModelOptions = ModelOptions()):
    """First successive-approximation iterate of (eta, zeta) from initial data.

    eta1 = g + q t; zeta1 solves zeta' + F0 zeta = J0 / alpha_hat from q with
    coefficients frozen at the initial data.
    """
    g, q, b, h = (np.asarray(x, dtype=float) for x in (g, q, b, h))
    check_floor(h, options.floor, 0.0, "h")
    eta1 = g + q * t
    zeta1 = integrate_linear_ode(q, zeta_coeffs(h, g, b, c, options), t)
    return eta1, zeta1


def boundary_coeffs(b_ends, c: PhysConstants, model: str, options: ModelOptions = ModelOptions()):
    """Linear-ODE coefficients for A at z = 0 and z = L, where u = eta = zeta = 0."""
    model = check_model(model)
    b_ends = np.asarray(b_ends, dtype=float)
    rp = RiccatiParams.from_constants(c)

    def G(t):
        return np.full(b_ends.shape, forcing_deriv(t, c) / _height(t, 0.0, c, options.floor))

    if model == "a1":
        def H(t):
            return np.full(b_ends.shape, c.Q_p / _height(t, 0.0, c, options.floor))
    else:
        sign = 1.0 if options.absorption_sign == "continuity" else -1.0

        def H(t):
            pp = riccati_pressure(b_ends, t, rp)
            num = c.R_abs * c.Q_p - pp + sign * c.P_tilde
            return num / (c.R_abs * _height(t, 0.0, c, options.floor))

    return LinearODECoeffs(G, H)


def boundary_values(t: float, b, h, c: PhysConstants, model: str, options: ModelOptions = ModelOptions()):
    """Closed-form boundary data (P(t,0), P(t,L), A(t,0), A(t,L))."""
    b = np.asarray(b, dtype=float)
    h = np.asarray(h, dtype=float)
    b_ends = np.array([b[0], b[-1]])
    h_ends = np.array([h[0], h[-1]])
    rp = RiccatiParams.from_constants(c)
    P_ends = riccati_pressure(b_ends, t, rp)
    A_ends = integrate_linear_ode(h_ends, boundary_coeffs(b_ends, c, model, options), t)
    return float(P_ends[0]), float(P_ends[1]), float(A_ends[0]), float(A_ends[1])
