#!/usr/bin/env python3
"""Steady states of the membrane reaction law against flow speed, as SVG and CSV."""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from blebsim.kinetics import KineticsParams, bifurcation_table, critical_speed  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, nargs="+", default=[1.0, 2.0])
    ap.add_argument("--w-max", type=float, default=0.15)
    ap.add_argument("--num", type=int, default=301)
    ap.add_argument("--out", default="bifurcation")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    speeds = np.linspace(0.0, args.w_max, args.num)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for alpha in args.alpha:
        p = KineticsParams(alpha=alpha)
        rows = bifurcation_table(p, speeds)
        lines = ["w,stable_roots,unstable_roots"]
        for r in rows:
            lines.append(f"{r['w']:.12g},{';'.join(f'{u:.12g}' for u in r['stable_roots'])},"
                         f"{';'.join(f'{u:.12g}' for u in r['unstable_roots'])}")
        (out / f"bifurcation_alpha{alpha:g}.csv").write_text("\n".join(lines) + "\n")
        for key, marker in (("stable_roots", "."), ("unstable_roots", "x")):
            ws = [r["w"] for r in rows for _ in r[key]]
            us = [u for r in rows for u in r[key]]
            ax.plot(ws, us, marker, ms=1.5, ls="none", label=f"alpha={alpha:g} {key.split('_')[0]}")
        ax.axvline(critical_speed(p), color="gray", lw=0.5)
    ax.set_xlabel("|w|")
    ax.set_ylabel("steady u")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "bifurcation.svg")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
