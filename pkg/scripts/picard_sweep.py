"""Double the Picard horizon until the iteration stops contracting."""

import argparse

from csfsim.config import load_scenario
from csfsim.errors import BlowUpCrossed, NoContraction
from csfsim.numerics import Problem
from csfsim.picard import run_fixed_point


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="caseA")
    ap.add_argument("--nz", type=int, default=101)
    ap.add_argument("--model", choices=("a1", "a2"), default="a1")
    ap.add_argument("--start", type=float, default=0.025)
    ap.add_argument("--max-horizon", type=float, default=1.6)
    ap.add_argument("--mu", type=float, help="override the viscosity (weaker friction contracts less)")
    args = ap.parse_args()
    cfg = load_scenario(args.scenario).with_overrides(nz=args.nz)
    c = cfg.constants if args.mu is None else cfg.constants.with_(mu=args.mu)
    init = cfg.initial_state()
    pr = Problem.from_initial(args.model, c, cfg.grid, init, cfg.options)
    T = args.start
    print("   T  iterates  last diff_u  max ratio")
    while T <= args.max_horizon:
        try:
            _, hist = run_fixed_point(init, T, pr, dt=min(cfg.stepper.dt, T / 10), tol=1e-10)
        except NoContraction as exc:
            print(f"{T:5.3f}  no contraction: {exc}")
            break
        except BlowUpCrossed as exc:
            print(f"{T:5.3f}  horizon passes the pressure blow-up: {exc}")
            break
        worst = max((r.ratio for r in hist if r.ratio is not None), default=float("nan"))
        print(f"{T:5.3f}  {len(hist):8d}  {hist[-1].diff_u:11.3e}  {worst:9.4f}")
        T *= 2


if __name__ == "__main__":
    main()
