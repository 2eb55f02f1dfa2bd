import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import smooth_state
from csfsim.closed_form import riccati_pressure
from csfsim.errors import StepSizeUnderflow
from csfsim.model import FIELDS, Grid, ModelOptions, PhysConstants, State
from csfsim.numerics import (
    BlowUpDetected,
    Completed,
    Problem,
    Singular,
    StepperConfig,
    apply_bcs,
    d2dz2,
    ddz,
    dopri45,
    rk4_step,
    simulate,
    step,
    trapz_l2,
    upwind_ddz,
)


def test_ddz_constant_and_linear():
    g = Grid(20, 2.0)
    np.testing.assert_allclose(ddz(np.full(g.n, 3.0), g), 0.0, atol=1e-13)
    np.testing.assert_allclose(ddz(g.z, g), 1.0, atol=1e-13)
    with pytest.raises(ValueError):
        ddz(np.zeros(5), g)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10), st.integers(4, 60))
def test_ddz_exact_for_quadratics(a, b, c, nz):
    g = Grid(nz)
    z = g.z
    np.testing.assert_allclose(ddz(a + b * z + c * z * z, g), b + 2 * c * z, atol=1e-8 * (1 + abs(c) + abs(b)) * nz)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10), st.integers(4, 60))
def test_d2dz2_exact_for_quadratics(a, b, c, nz):
    g = Grid(nz)
    z = g.z
    np.testing.assert_allclose(d2dz2(a + b * z + c * z * z, g), 2 * c, atol=1e-7 * (1 + abs(a) + abs(b) + abs(c)) * nz**2)


def _order(errs, ratio=2.0):
    return [math.log(errs[i] / errs[i + 1], ratio) for i in range(len(errs) - 1)]


def test_ddz_second_order():
    errs = []
    for nz in (50, 100, 200):
        g = Grid(nz)
        errs.append(np.max(np.abs(ddz(np.sin(np.pi * g.z), g) - np.pi * np.cos(np.pi * g.z))))
    for p in _order(errs):
        assert p == pytest.approx(2.0, abs=0.3)


def test_d2dz2_second_order_and_limit():
    errs = []
    for nz in (50, 100, 200):
        g = Grid(nz)
        f = np.cos(np.pi * g.z) / 6
        errs.append(np.max(np.abs(d2dz2(f, g) + np.pi**2 * f)))
    for p in _order(errs):
        assert p == pytest.approx(2.0, abs=0.3)
    g = Grid(400)
    assert np.max(np.abs(d2dz2(np.cos(np.pi * g.z) / 6, g))) == pytest.approx(np.pi**2 / 6, rel=1e-3)


def test_d2dz2_linear():
    g = Grid(10)
    np.testing.assert_allclose(d2dz2(3 * g.z - 1, g), 0.0, atol=1e-11)


def test_upwind_direction():
    g = Grid(4)
    f = g.z**2
    fwd = upwind_ddz(f, -np.ones(g.n), g)
    back = upwind_ddz(f, np.ones(g.n), g)
    assert fwd[1] == pytest.approx((f[2] - f[1]) / g.dz)
    assert back[1] == pytest.approx((f[1] - f[0]) / g.dz)


def test_trapz_l2():
    g = Grid(1000)
    assert trapz_l2(np.sin(np.pi * g.z), g) == pytest.approx(math.sqrt(0.5), rel=1e-5)


# -- boundary closure --------------------------------------------------------


def _problem(model="a1", grid=None, c=None, init=None, **kw):
    grid = grid or Grid(40)
    init = init or smooth_state(grid)
    return Problem.from_initial(model, c or PhysConstants(), grid, init, **kw), init


def test_apply_bcs_zeroes_ends_only():
    g = Grid(10)
    s = smooth_state(g, u=np.linspace(1, 2, g.n))
    pr, _ = _problem(grid=g, init=s)
    out = apply_bcs(s, pr)
    assert out.u[0] == 0 and out.u[-1] == 0
    np.testing.assert_array_equal(out.u[1:-1], s.u[1:-1])
    assert out.P[0] == s.P[0] and out.A[-1] == s.A[-1]


def test_apply_bcs_idempotent():
    pr, init = _problem()
    s = apply_bcs(init.replace(t=0.3), pr)
    s2 = apply_bcs(s, pr)
    for name in FIELDS:
        np.testing.assert_array_equal(s.field(name), s2.field(name))


def test_rk4_step_scalar_decay():
    y, t = np.array([1.0]), 0.0
    for _ in range(1000):
        y = rk4_step(lambda tt, yy: -yy, t, y, 1e-3)
        t += 1e-3
    assert y[0] == pytest.approx(math.exp(-1), abs=1e-8)


def test_single_step_riccati_fifth_order():
    g = Grid(8)
    b = np.full(g.n, 30.0)
    pr, init = _problem(grid=g, init=smooth_state(g, b=b))
    errs = []
    for dt in (4e-3, 2e-3):
        s1 = step(init, StepperConfig(dt=dt), pr)
        errs.append(np.max(np.abs(s1.P - riccati_pressure(b, dt, pr.riccati))))
    assert errs[0] / errs[1] == pytest.approx(32, rel=0.15)


def test_step_preserves_boundaries():
    pr, init = _problem()
    for scheme in ("rk4", "rk45"):
        s1 = step(init, StepperConfig(scheme=scheme), pr)
        for name in ("u", "eta", "zeta"):
            assert s1.field(name)[0] == 0 and s1.field(name)[-1] == 0


def test_dopri45_scalar():
    ts, ys = dopri45(lambda t, y: -y, 0.0, [1.0], 1.0)
    assert ts[-1] == 1.0
    assert ys[-1, 0] == pytest.approx(math.exp(-1), rel=1e-9)


def test_dopri45_underflow():
    with pytest.raises(StepSizeUnderflow):
        dopri45(lambda t, y: y * y, 0.0, [1.0], 2.0, dt_min=1e-6)


def test_stepper_config_validation():
    for bad in (dict(dt=0), dict(t_final=-1), dict(blowup_threshold=1.0), dict(scheme="euler"),
                dict(sample_every=0)):
        with pytest.raises(ValueError):
            StepperConfig(**bad)


# -- simulation ---------------------------------------------------------------


def test_full_equilibrium_is_constant():
    # P = P_tilde is only stationary for a vanishing Marmarou constant
    c = PhysConstants(Q_p=0.0, alpha_bar=0.0, K_marm=1e-30)
    g = Grid(20)
    n = g.n
    init = State(0.0, np.zeros(n), np.zeros(n), np.zeros(n), np.full(n, c.P_tilde), np.full(n, 1.7))
    tr = simulate(init, StepperConfig(dt=1e-2, t_final=0.5), Problem.from_initial("a2", c, g, init))
    assert tr.completed
    for s in tr.samples:
        np.testing.assert_allclose(s.as_array(), init.as_array(), atol=1e-10)


@pytest.mark.parametrize("model", ["a1", "a2"])
def test_simulate_invariants(model):
    pr, init = _problem(model, grid=Grid(30), init=smooth_state(Grid(30), u=4 * np.sin(np.pi * Grid(30).z) + 1))
    tr = simulate(init, StepperConfig(dt=1e-2, t_final=0.3), pr)
    assert isinstance(tr.outcome, Completed)
    assert np.all(np.diff(tr.times) > 0)
    assert tr.times[-1] == 0.3
    assert tr.bc_violations["u"] and not tr.bc_violations["eta"]
    for s in tr.samples:
        for name in ("u", "eta", "zeta"):
            assert abs(s.field(name)[0]) <= 1e-14 and abs(s.field(name)[-1]) <= 1e-14
        np.testing.assert_allclose(s.P, riccati_pressure(init.P, s.t, pr.riccati), rtol=1e-6)


def test_simulate_deterministic():
    pr, init = _problem()
    cfg = StepperConfig(dt=1e-2, t_final=0.2)
    a, b = simulate(init, cfg, pr), simulate(init, cfg, pr)
    assert len(a.samples) == len(b.samples)
    for x, y in zip(a.samples, b.samples):
        assert x.t == y.t
        assert np.array_equal(x.as_array(), y.as_array())


def test_sample_cadence():
    pr, init = _problem()
    tr = simulate(init, StepperConfig(dt=5e-3, t_final=1.0, sample_every=10), pr)
    assert tr.n_steps == 200
    assert len(tr.samples) == 21


def test_blowup_detected_before_predicted_time():
    g = Grid(20)
    init = smooth_state(g, b=np.exp(g.z))
    pr, _ = _problem(grid=g, init=init)
    tr = simulate(init, StepperConfig(), pr)
    assert isinstance(tr.outcome, BlowUpDetected)
    assert tr.outcome.field_name == "P"
    from csfsim.closed_form import blowup_time
    assert tr.outcome.t == pytest.approx(blowup_time(math.e, pr.riccati), abs=5e-3)
    assert tr.samples[-1].t < tr.outcome.t


def test_singular_initial_cross_section():
    g = Grid(100)
    init = smooth_state(g).replace(A=2 * np.cos(np.pi * g.z))
    pr, _ = _problem(grid=g, init=init)
    tr = simulate(init, StepperConfig(), pr)
    assert isinstance(tr.outcome, Singular)
    assert tr.outcome.t == 0.0 and tr.outcome.node == 50


def test_odd_grid_avoids_zero_node():
    g = Grid(101)
    init = smooth_state(g).replace(A=2 * np.cos(np.pi * g.z))
    pr, _ = _problem(grid=g, init=init)
    tr = simulate(init, StepperConfig(t_final=0.1), pr)
    assert tr.completed


def test_adaptive_agrees_with_fixed():
    pr, init = _problem()
    a = simulate(init, StepperConfig(dt=2e-3, t_final=0.2), pr)
    b = simulate(init, StepperConfig(scheme="rk45", t_final=0.2, rtol=1e-9, atol=1e-11), pr)
    assert b.times[-1] == 0.2
    np.testing.assert_allclose(a.samples[-1].as_array(), b.samples[-1].as_array(), atol=1e-6)


def test_upwind_option_runs():
    pr, init = _problem(options=ModelOptions(advection="upwind"))
    tr = simulate(init, StepperConfig(dt=1e-2, t_final=0.1), pr)
    assert tr.completed


def test_source_hook():
    g = Grid(10)
    c = PhysConstants(Q_p=0.0, alpha_bar=0.0, K_marm=1e-30, kappa=0.0)
    n = g.n
    init = State(0.0, np.zeros(n), np.zeros(n), np.zeros(n), np.full(n, c.P_tilde), np.ones(n))

    def src(t, z):
        s = np.zeros((5, z.size))
        s[1] = 1.0  # eta grows at unit rate away from the clamped ends
        return s

    tr = simulate(init, StepperConfig(dt=0.01, t_final=0.5), Problem.from_initial("a1", c, g, init, source=src))
    np.testing.assert_allclose(tr.samples[-1].eta[1:-1], 0.5, rtol=1e-12)
