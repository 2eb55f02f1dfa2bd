"""Observed spatial and temporal orders of the method-of-lines solver.

Spatial: manufactured u = sin(pi z) exp(-t) driven through the source hook,
with P following its exact pressure solution. Temporal: self-convergence of
RK4 against a run with a 16x smaller step.
"""

import argparse
import math

import numpy as np

from csfsim.closed_form import RiccatiParams, riccati_denominator
from csfsim.model import Grid, PhysConstants, State
from csfsim.numerics import Problem, StepperConfig, simulate


def spatial_error(nz, c, model, T=0.2, dt=1e-3):
    g = Grid(nz)
    z = g.z
    b = np.cos(np.pi * z) / 6
    init = State(0.0, np.sin(np.pi * z), z * (1 - z), z * (1 - z), b, 2 + np.cos(np.pi * z))
    rp = RiccatiParams.from_constants(c)

    def src(t, z):
        den = riccati_denominator(np.cos(np.pi * z) / 6, t, rp)
        Pz = -np.pi * np.sin(np.pi * z) / 6 * math.exp(rp.C * t) / den**2
        u = np.sin(np.pi * z) * math.exp(-t)
        uz = np.pi * np.cos(np.pi * z) * math.exp(-t)
        S = np.zeros((5, z.size))
        S[0] = -u + u * uz + c.friction_rate * u + Pz / c.rho
        return S

    tr = simulate(init, StepperConfig(dt=dt, t_final=T), Problem.from_initial(model, c, g, init, source=src))
    return max(np.max(np.abs(s.u - np.sin(np.pi * z) * math.exp(-s.t))) for s in tr.samples)


def final_state(dt, c, model, nz=20, T=0.2):
    g = Grid(nz)
    z = g.z
    init = State(0.0, 4 * np.sin(np.pi * z) + 1, z / 5, z / 2 + 1, np.cos(np.pi * z) / 6,
                 2 + np.cos(np.pi * z))
    tr = simulate(init, StepperConfig(dt=dt, t_final=T), Problem.from_initial(model, c, g, init))
    return tr.samples[-1].as_array()


def orders(errs):
    return [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]


def main():
    ap = argparse.ArgumentParser(description="observed convergence orders")
    ap.add_argument("--model", choices=("a1", "a2"), default="a1")
    args = ap.parse_args()
    c = PhysConstants()
    nzs = (20, 40, 80, 160)
    es = [spatial_error(n, c, args.model) for n in nzs]
    print("nz      max error   order")
    for n, e, p in zip(nzs, es, [None] + orders(es)):
        print(f"{n:4d}  {e:11.4e}   {'' if p is None else f'{p:.3f}'}")
    dts = (0.02, 0.01, 0.005, 0.0025)
    ref = final_state(dts[-1] / 16, c, args.model)
    et = [np.max(np.abs(final_state(d, c, args.model) - ref)) for d in dts]
    print("\ndt      max error   order")
    for d, e, p in zip(dts, et, [None] + orders(et)):
        print(f"{d:6.4f}  {e:11.4e}   {'' if p is None else f'{p:.3f}'}")


if __name__ == "__main__":
    main()
