"""Command-line entry point.

Exit codes: 0 success, 1 numerical failure, 2 blow-up, 3 configuration or
usage error, 4 existence conditions violated, 5 singular state,
6 Picard iteration not contracting.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .analysis import check_conditions, compare_physiology
from .closed_form import RiccatiParams, blowup_time
from .config import ScenarioConfig, default_listing, load_scenario
from .errors import BlowUpCrossed, ConfigError, CSFError, NoContraction, SingularState
from .io import emit_csv, render_report
from .numerics import BlowUpDetected, Problem, Singular, simulate
from .picard import run_fixed_point, tail_sums

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_BLOWUP = 2
EXIT_CONFIG = 3
EXIT_CHECK = 4
EXIT_SINGULAR = 5
EXIT_NO_CONTRACTION = 6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="csfsim", description="CSF flow model simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(sp, many=False):
        sp.add_argument("--scenario", required=True, nargs="+" if many else None,
                        help="preset name (caseA, caseB) or scenario file")
        sp.add_argument("--nz", type=int)
        sp.add_argument("--t-final", type=float, dest="t_final")

    s = sub.add_parser("simulate", help="integrate a scenario")
    scenario_args(s, many=True)
    s.add_argument("--model", choices=("a1", "a2", "both"))
    s.add_argument("--dt", type=float)
    s.add_argument("--out", help="output directory (default from the scenario)")
    s.add_argument("--jobs", type=_positive_int, default=1, help="parallel runs")

    c = sub.add_parser("check", help="existence conditions on the initial data")
    scenario_args(c)

    pc = sub.add_parser("picard", help="successive approximations on [0, T]")
    scenario_args(pc)
    pc.add_argument("--model", choices=("a1", "a2"), default="a1")
    pc.add_argument("--horizon", type=float, required=True)
    pc.add_argument("--tol", type=float, default=1e-10)
    pc.add_argument("--max-iter", type=_positive_int, default=50, dest="max_iter")
    pc.add_argument("--dt", type=float)

    b = sub.add_parser("blowup", help="closed-form pressure blow-up time")
    b.add_argument("--b", type=float, required=True, help="initial pressure (Pa)")
    b.add_argument("--scenario", help="take constants from this scenario")

    sub.add_parser("defaults", help="print every configuration key with its default")
    return p


def _load(args) -> ScenarioConfig:
    return load_scenario(args.scenario).with_overrides(nz=args.nz, t_final=args.t_final)


def _existence(cfg: ScenarioConfig):
    f, b = cfg.f_and_b()
    return check_conditions(f, b, cfg.grid, cfg.constants, cfg.C_hat1, cfg.eps,
                            T=cfg.stepper.t_final)


def run_one(cfg: ScenarioConfig, model: str, out_dir: str):
    """Simulate one model of one scenario and write its outputs."""
    init = cfg.initial_state()
    problem = Problem.from_initial(model, cfg.constants, cfg.grid, init, cfg.options)
    traj = simulate(init, cfg.stepper, problem)
    phys = compare_physiology(traj).as_dict() if traj.completed else None
    report = render_report(traj, cfg, model, _existence(cfg).as_dict(), phys)
    emit_csv(traj, out_dir, cfg.outputs.fields, report)
    out = traj.outcome
    if isinstance(out, BlowUpDetected):
        return EXIT_BLOWUP, f"{cfg.name}/{model}: blow-up in {out.field_name} at t={out.t:.6g}"
    if isinstance(out, Singular):
        return EXIT_SINGULAR, (f"{cfg.name}/{model}: singular state, {out.which} vanishes "
                               f"at node {out.node}, t={out.t:.6g}")
    return EXIT_OK, f"{cfg.name}/{model}: completed to t={traj.samples[-1].t:.6g}"


def _cmd_simulate(args) -> int:
    tasks = []
    for spec in args.scenario:
        cfg = load_scenario(spec).with_overrides(
            nz=args.nz, dt=args.dt, t_final=args.t_final, out=args.out, model=args.model
        )
        for model in cfg.models:
            tasks.append((cfg, model, os.path.join(cfg.outputs.dir, cfg.name, model)))
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, *zip(*tasks)))
    else:
        results = [run_one(*t) for t in tasks]
    codes = []
    for (cfg, model, out_dir), (code, msg) in zip(tasks, results):
        print(f"{msg} -> {out_dir}")
        codes.append(code)
    if EXIT_SINGULAR in codes:
        return EXIT_SINGULAR
    if EXIT_BLOWUP in codes:
        return EXIT_BLOWUP
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = _load(args)
    rep = _existence(cfg)
    print(f"scenario {cfg.name}: posture {rep.posture}, ||b|| = {rep.norm_b:.6g}, "
          f"eps = {rep.eps:.6g}, C_hat1 = {rep.C_hat1:g}")
    print(f"  slope     {rep.cond_slope}")
    print(f"  pressure  {rep.cond_pressure}")
    print(f"  P_zz      {rep.cond_pzz}")
    if rep.predicted_blowup is None:
        print("  predicted pressure blow-up: none")
    else:
        print(f"  predicted pressure blow-up: t = {rep.predicted_blowup:.6g} s at node {rep.blowup_node}")
    return EXIT_OK if rep.all_passed else EXIT_CHECK


def _print_history(history):
    print(" n      diff_u      diff_P    diff_eta   diff_zeta      diff_A   ratio")
    for r in history:
        ratio = "-" if r.ratio is None else f"{r.ratio:.4f}"
        print(f"{r.n:2d} {r.diff_u:11.4e} {r.diff_P:11.4e} {r.diff_eta:11.4e} "
              f"{r.diff_zeta:11.4e} {r.diff_A:11.4e}   {ratio}")


def _cmd_picard(args) -> int:
    cfg = _load(args)
    init = cfg.initial_state()
    problem = Problem.from_initial(args.model, cfg.constants, cfg.grid, init, cfg.options)
    dt = cfg.stepper.dt if args.dt is None else args.dt
    try:
        _, history = run_fixed_point(init, args.horizon, problem, dt=dt, tol=args.tol,
                                     max_iter=args.max_iter)
    except NoContraction as exc:
        _print_history(exc.history)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONTRACTION
    _print_history(history)
    print(f"tail sum of diff_u: {tail_sums(history)[0]:.6g}")
    return EXIT_OK


def _cmd_blowup(args) -> int:
    c = load_scenario(args.scenario).constants if args.scenario else ScenarioConfig("defaults").constants
    t = blowup_time(args.b, RiccatiParams.from_constants(c))
    if t is None:
        print("no blow-up: b <= 0 keeps the pressure bounded")
    else:
        print(f"blow-up time T0 = {t:.17g} s")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    commands = {"simulate": _cmd_simulate, "check": _cmd_check, "picard": _cmd_picard,
                "blowup": _cmd_blowup}
    try:
        if args.command == "defaults":
            print(default_listing(), end="")
            return EXIT_OK
        return commands[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularState as exc:
        print(f"singular state: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except BlowUpCrossed as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (CSFError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc, CSFError) else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
