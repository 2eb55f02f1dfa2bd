import math
import warnings

import numpy as np
import pytest

from conftest import smooth_state
from csfsim.errors import NoContraction
from csfsim.model import FIELDS, Grid, PhysConstants, State
from csfsim.numerics import Problem, StepperConfig, enforce_initial_bcs, simulate, trapz_l2
from csfsim.picard import (
    StateSequence,
    equicontinuity_modulus,
    picard_step,
    run_fixed_point,
    sup_l2,
    tail_sums,
    time_grid,
)

GRID = Grid(41)
Z = GRID.z


def case_a_like(grid=GRID):
    z = grid.z
    return State(0.0, 4 * np.sin(np.pi * z) + 1, z / 5, z / 2 + 1, np.cos(np.pi * z) / 6, 2 * np.cos(np.pi * z))


def _setup(model="a1", init=None, c=None, grid=GRID):
    init = init if init is not None else case_a_like(grid)
    pr = Problem.from_initial(model, c or PhysConstants(), grid, init)
    init_bc, _ = enforce_initial_bcs(init, pr)
    return pr, init_bc


def test_time_grid():
    ts = time_grid(0.05, 5e-3)
    assert ts.size == 11 and ts[-1] == 0.05
    assert time_grid(0.051, 5e-3)[-1] == 0.051


def test_sequence_interpolation():
    s0 = smooth_state(Grid(4))
    seq = StateSequence(np.array([0.0, 1.0]), np.stack([s0.as_array(), 3 * s0.as_array()]))
    np.testing.assert_allclose(seq.at(0.25).as_array(), 1.5 * s0.as_array())
    np.testing.assert_allclose(seq.at(5.0).as_array(), 3 * s0.as_array())
    with pytest.raises(ValueError):
        StateSequence(np.array([1.0, 0.0]), np.stack([s0.as_array()] * 2))


def test_first_iterate_eta_is_linear():
    pr, init = _setup()
    seq0 = StateSequence.constant(init, time_grid(0.05, 5e-3))
    seq1 = picard_step(seq0, init, pr)
    for t, eta in zip(seq1.times, seq1.field("eta")):
        np.testing.assert_allclose(eta, init.eta + init.zeta * t, rtol=1e-14, atol=1e-16)


def test_zero_pressure_stays_zero():
    init = case_a_like().replace(P=np.zeros(GRID.n))
    pr, init = _setup(init=init)
    seq, hist = run_fixed_point(init, 0.03, pr, dt=5e-3, tol=1e-8)
    assert np.all(seq.field("P") == 0.0)


def test_linear_decay_without_advection():
    c = PhysConstants()
    f = np.sin(np.pi * Z)
    init = State(0.0, f, np.zeros(GRID.n), np.zeros(GRID.n), np.zeros(GRID.n), np.full(GRID.n, 2.0))
    pr, init = _setup(init=init, c=c)
    prev = StateSequence.constant(init.replace(u=np.zeros(GRID.n)), time_grid(0.1, 1e-3))
    nxt = picard_step(prev, init, pr)
    for t, u in zip(nxt.times, nxt.field("u")):
        np.testing.assert_allclose(u, f * math.exp(-c.friction_rate * t), rtol=1e-8, atol=1e-15)


def test_degenerate_tolerance_single_iteration():
    pr, init = _setup()
    _, hist = run_fixed_point(init, 0.02, pr, tol=math.inf)
    assert len(hist) == 1
    assert hist[0].ratio is None


@pytest.mark.parametrize("model", ["a1", "a2"])
def test_contraction_and_pressure_frozen(model):
    pr, init = _setup(model)
    seq, hist = run_fixed_point(init, 0.05, pr, dt=5e-3, tol=1e-10)
    assert hist[-1].diff_u < 1e-10
    assert hist[0].diff_P > 0
    assert all(r.diff_P == 0.0 for r in hist[1:])
    ratios = [r.ratio for r in hist[1:]]
    assert all(r < 1 for r in ratios[3:])
    assert all(r.diff_u >= 0 and r.diff_A >= 0 for r in hist)
    tails = tail_sums(hist)
    assert tails[-1] < 1e-10
    assert all(a >= b for a, b in zip(tails, tails[1:]))


def test_limit_matches_direct_simulation():
    pr, init = _setup("a1", grid=Grid(41))
    seq, _ = run_fixed_point(init, 0.05, pr, dt=1e-3, tol=1e-12)
    tr = simulate(init, StepperConfig(dt=1e-3, t_final=0.05), pr)
    for name in FIELDS:
        err = max(trapz_l2(s.field(name) - seq.at(s.t).field(name), GRID) for s in tr.samples)
        assert err < 1e-4, name


def test_no_contraction_on_long_horizon():
    g = Grid(20)
    z = g.z
    c = PhysConstants(mu=1e-7)  # almost no friction
    init = State(0.0, 3 * np.sin(np.pi * z), z * (1 - z), z * (1 - z), np.cos(np.pi * z) / 6, 2 + np.cos(np.pi * z))
    pr = Problem.from_initial("a1", c, g, init)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(NoContraction) as info:
            run_fixed_point(init, 0.5, pr, dt=4e-3, tol=1e-9, max_iter=30)
    assert len(info.value.history) >= 2


def test_equicontinuity_constant_sequence():
    seq = StateSequence.constant(smooth_state(GRID), time_grid(0.1, 0.01))
    mod = equicontinuity_modulus(seq, [(0.0, 0.05), (0.02, 0.1)], GRID)
    assert all(v == 0.0 for v in mod.values())
    with pytest.raises(ValueError):
        equicontinuity_modulus(seq, [(0.1, 0.1)], GRID)


def test_equicontinuity_linear_eta():
    pr, init = _setup()
    seq1 = picard_step(StateSequence.constant(init, time_grid(0.05, 5e-3)), init, pr)
    mod = equicontinuity_modulus(seq1, [(0.0, 0.05), (0.01, 0.03)], GRID)
    assert mod["eta"] == pytest.approx(trapz_l2(init.zeta, GRID), rel=1e-12)


def test_equicontinuity_no_growth_across_iterates():
    pr, init = _setup()
    seq = StateSequence.constant(init, time_grid(0.05, 5e-3))
    pairs = [(t, t + 5e-3) for t in np.arange(0, 0.045, 5e-3)]
    mods = []
    for _ in range(10):
        seq = picard_step(seq, init, pr)
        mods.append(equicontinuity_modulus(seq, pairs, GRID))
    for name in FIELDS:
        m = np.array([d[name] for d in mods])
        slope = np.polyfit(np.arange(1, 11), m, 1)[0]
        assert slope <= 1e-3 * max(m.max(), 1e-12), name
        assert m.max() < np.inf


def test_sup_l2():
    vals = np.stack([np.zeros(GRID.n), np.ones(GRID.n)])
    assert sup_l2(vals, GRID) == pytest.approx(1.0)
