#!/usr/bin/env python3
"""Render a signals CSV produced by `modfun run` as a stacked figure.

Not part of the core package: the CLI emits tidy CSV, this script draws it.

    python scripts/plot_signals.py out/signals_L1_r0.csv [-o fig.png]

One panel per estimated quantity: truth vs estimate for each state, the
disturbance, and the sliding-mode baseline when present.
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from modfun import read_signals_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", help="signals CSV written by `modfun run`")
    parser.add_argument("-o", "--out", default=None, help="output image (default: <csv>.png)")
    args = parser.parse_args()

    grid, data = read_signals_csv(args.csv)
    t = grid.times

    panels = []
    for name in data:
        if name.startswith("xhat_"):
            k = name.removeprefix("xhat_")
            panels.append((f"x{k}", [(f"x{k}", data[f"x{k}"], "truth"), (name, data[name], "estimate")]))
    if "dhat" in data:
        panels.append(("d", [("d", data["d"], "truth"), ("dhat", data["dhat"], "estimate")]))
    if "sto_x2" in data:
        panels.append(("x2 vs baseline", [("x2", data["x2"], "truth"), ("sto_x2", data["sto_x2"], "sliding-mode")]))
    panels.insert(0, ("measured output", [("y_noisy", data["y_noisy"], "y (noisy)"), ("x1", data["x1"], "x1 truth")]))

    fig, axes = plt.subplots(len(panels), 1, figsize=(9, 2.2 * len(panels)), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, (title, curves) in zip(axes, panels):
        for _, values, label in curves:
            ax.plot(t, values, label=label, linewidth=1)
        ax.set_ylabel(title)
        ax.legend(loc="upper right", fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("time (s)")
    fig.tight_layout()

    out = args.out or f"{args.csv}.png"
    fig.savefig(out, dpi=130)
    print(out)


if __name__ == "__main__":
    main()
