"""Space-time plots of the CSV output of ``csfsim simulate``.

    python scripts/plot_run.py runs/caseA/a1 --out caseA_a1.png
"""

import argparse
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from csfsim.io import read_field_csv  # noqa: E402
from csfsim.model import FIELDS  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description="plot a run directory")
    ap.add_argument("run_dir")
    ap.add_argument("--out", default="run.png")
    args = ap.parse_args()
    names = [f for f in FIELDS if os.path.exists(os.path.join(args.run_dir, f"{f}.csv"))]
    fig, axes = plt.subplots(1, len(names), figsize=(3.2 * len(names), 3), squeeze=False)
    for ax, name in zip(axes[0], names):
        t, z, v = read_field_csv(os.path.join(args.run_dir, f"{name}.csv"))
        im = ax.pcolormesh(z, t, v, shading="auto")
        ax.set_title(name)
        ax.set_xlabel("z (m)")
        fig.colorbar(im, ax=ax)
    axes[0][0].set_ylabel("t (s)")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
