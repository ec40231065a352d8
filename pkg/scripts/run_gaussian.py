"""Fit the affine generator to 1-D (or 2-D) Gaussian data and print the
trajectory of (mu, sigma) alongside the cost.

    python3 scripts/run_gaussian.py [--preset gaussian1d|gaussian2d] [--out DIR] [--every 25]
"""

import argparse
from pathlib import Path

from mmdnet.cli import run_experiment
from mmdnet.config import load_preset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="gaussian1d", choices=["gaussian1d", "gaussian2d"])
    ap.add_argument("--out")
    ap.add_argument("--every", type=int, default=25)
    args = ap.parse_args()

    cfg = load_preset(args.preset)
    cfg.train.snapshot_every = args.every
    out = Path(args.out) if args.out else cfg.output_dir
    s = run_experiment(cfg, out)

    print(f"bandwidth {s['bandwidth']:.4f}, data mean {s['train_mean']} std {s['train_std']}")
    for it, v in sorted((int(k), v) for k, v in s["probe_mmd_u2"].items()):
        print(f"iter {it:4d}  probe MMD_u2 {v: .5f}")
    print(f"final mu {s['mu']} sigma {s['sigma']}")
    print(f"outputs in {out}")


if __name__ == "__main__":
    main()
