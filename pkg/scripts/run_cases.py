"""Run both presets under both models and print a one-line summary per run.

    python scripts/run_cases.py --nz 101 --out runs
"""

import argparse
import os
import time

from csfsim.cli import run_one
from csfsim.config import load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nz", type=int, default=100)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--cases", nargs="+", default=["caseA", "caseB"])
    args = ap.parse_args()
    for name in args.cases:
        cfg = load_scenario(name).with_overrides(nz=args.nz, out=args.out)
        for model in cfg.models:
            t0 = time.perf_counter()
            code, msg = run_one(cfg, model, os.path.join(args.out, name, model))
            print(f"[exit {code}] {msg} ({time.perf_counter() - t0:.2f}s)")


if __name__ == "__main__":
    main()
