"""The presets on a 101-node grid, where no node sits on the zero of A0 = 2 cos(pi z)."""

import numpy as np
import pytest

from csfsim.config import load_scenario
from csfsim.numerics import BlowUpDetected, Problem, simulate
from csfsim.picard import run_fixed_point, tail_sums


def _run(name, model):
    cfg = load_scenario(name).with_overrides(nz=101)
    init = cfg.initial_state()
    return cfg, simulate(init, cfg.stepper, Problem.from_initial(model, cfg.constants, cfg.grid, init))


@pytest.mark.parametrize("model", ["a1", "a2"])
def test_case_a_completes(model):
    _, tr = _run("caseA", model)
    assert tr.completed and tr.samples[-1].t == 1.0
    for s in tr.samples:
        assert np.all(np.isfinite(s.as_array()))
        for f in ("u", "eta", "zeta"):
            assert abs(s.field(f)[0]) <= 1e-14 and abs(s.field(f)[-1]) <= 1e-14


@pytest.mark.parametrize("model", ["a1", "a2"])
def test_case_b_blows_up(model):
    _, tr = _run("caseB", model)
    assert isinstance(tr.outcome, BlowUpDetected)
    assert tr.outcome.t < 1.0


def test_case_a_picard_contracts():
    cfg = load_scenario("caseA").with_overrides(nz=101)
    init = cfg.initial_state()
    pr = Problem.from_initial("a1", cfg.constants, cfg.grid, init)
    _, hist = run_fixed_point(init, 0.05, pr, dt=cfg.stepper.dt, tol=1e-10)
    assert hist[-1].diff_u < 1e-10
    assert all(r.ratio < 1 for r in hist[2:])
    assert all(r.diff_P == 0.0 for r in hist[1:])
    tails = tail_sums(hist)
    assert all(a >= b for a, b in zip(tails, tails[1:]))
