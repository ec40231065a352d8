"""Print the bound table for the bounds-demo inputs and the Monte Carlo
check of the concentration tail on the M x eps grid.

    python3 scripts/run_bounds_validation.py [--trials 1000] [--out table.csv]
"""

import argparse
from pathlib import Path

from mmdnet.cli import bounds_tables
from mmdnet.config import BOUNDS_DEMO


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=BOUNDS_DEMO["trials"])
    ap.add_argument("--out")
    args = ap.parse_args()
    d = BOUNDS_DEMO
    text = bounds_tables(d["p1"], d["gamma1"], d["p2"], d["gamma2"], d["delta"], d["m_grid"],
                         validate=True, eps_grid=d["eps_grid"], trials=args.trials, seed=d["seed"])
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")


if __name__ == "__main__":
    main()
