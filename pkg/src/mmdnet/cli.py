"""``mmdnet`` command-line interface.

Exit codes: 0 success, 2 config/usage error, 3 numerical failure,
4 data dimension mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds as bnd
from .config import BOUNDS_DEMO, PRESETS, ConfigError, ExperimentConfig, load_config, load_preset
from .core import DimensionError, NumericalError, Rng
from .data import (
    Dataset, ParseError, SplitSpec, export_image_grid, grid_shape, load_dataset,
    save_csv, split, subsample, synth_gaussian,
)
from .evaluation import KdeConfig, score_samples
from .generator import AffineGenerator, forward, init_mlp, load_checkpoint, save_checkpoint
from .kernels import Family, KernelSpec, median_heuristic
from .mmd import mmd_u_squared
from .trainer import train

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4


class UsageError(ValueError):
    pass


def _prepare_data(cfg: ExperimentConfig, rng: Rng):
    """Return (train, probe, validation, test); probe/validation/test may be None."""
    d = cfg.data
    if d.source == "gaussian":
        r_tr, r_pr, r_va, r_te = rng.spawn(4)
        draw = lambda r, n: synth_gaussian(r, n, d.mean, d.std) if n > 0 else None
        return draw(r_tr, d.n), draw(r_pr, d.n_probe), draw(r_va, d.n_validation), draw(r_te, d.n_test)

    r_sub, r_split = rng.spawn(2)
    ds = load_dataset(d.path, d.has_header)
    if d.subsample:
        ds = subsample(ds, d.subsample, r_sub)
    parts = d.split or {"train": 0.7, "probe": 0.1, "validation": 0.1, "test": 0.1}
    total = sum(parts.values())
    if all(isinstance(v, int) for v in parts.values()) and total > 1:
        if total != ds.n:
            raise ConfigError(f"[data.split] counts sum to {total} but the dataset has {ds.n} rows")
        frac = {k: v / total for k, v in parts.items()}
    else:
        frac = parts
    seed = int(r_split.integers(0, 2**63))
    try:
        tr_all, va, te = split(ds, SplitSpec(frac["train"] + frac["probe"], frac["validation"], frac["test"], seed))
    except ValueError as e:
        raise ConfigError(f"[data.split] {e}") from None
    n_probe = int(round(ds.n * frac["probe"]))
    if not 2 <= n_probe < tr_all.n - 1:
        raise ConfigError(f"probe split of {n_probe} rows is unusable")
    n_tr = tr_all.n - n_probe
    return tr_all.take(slice(0, n_tr)), tr_all.take(slice(n_tr, None)), va, te


def _build_generator(cfg: ExperimentConfig, dim: int, rng: Rng):
    g = cfg.generator
    if g.kind == "affine":
        gen = AffineGenerator(g.mu, g.sigma)
        if gen.output_dim != dim:
            raise DimensionError(f"affine generator has dimension {gen.output_dim}, data has {dim}")
        return gen
    return init_mlp(rng, [g.noise_dim, *g.hidden, dim])


def _kernel(cfg: ExperimentConfig, train_x, gen, rng: Rng) -> KernelSpec:
    k = cfg.kernel
    if k.bandwidth == "median":
        r_med, r_noise = rng.spawn(2)
        pts = train_x
        if k.median_source == "pooled":
            noise = r_noise.standard_normal((cfg.train.m_generated, gen.input_dim))
            pts = np.vstack([train_x, forward(gen, noise)])
        ell = median_heuristic(pts, r_med, k.median_max_pairs)
    else:
        ell = float(k.bandwidth)
    return KernelSpec(k.family, ell, k.rq_alpha)


def run_experiment(cfg: ExperimentConfig, out_dir: Path | None = None) -> dict:
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    r_data, r_bw, r_init, r_train, r_eval = Rng(cfg.seed).spawn(5)

    tr, probe, va, te = _prepare_data(cfg, r_data)
    gen0 = _build_generator(cfg, tr.dim, r_init)
    kspec = _kernel(cfg, tr.samples, gen0, r_bw)

    def snapshot(i, g):
        if cfg.checkpoint_every and i % cfg.checkpoint_every == 0 and i < cfg.train.iterations + cfg.train.frozen_tail:
            save_checkpoint(g, out / f"checkpoint_{i:07d}.mmdn")

    report = train(tr.samples, gen0, kspec, cfg.train, r_train,
                   probe=None if probe is None else probe.samples, on_snapshot=snapshot)
    (out / "curve.csv").write_text(report.to_csv(timing=cfg.timing))
    save_checkpoint(report.params, out / "checkpoint_final.mmdn")

    r_samp, r_score, r_unif = r_eval.spawn(3)
    n_gen = cfg.eval.n_generated
    samples = forward(report.params, r_samp.standard_normal((n_gen, report.params.input_dim)))
    if tr.image_shape is not None:
        rows, cols = grid_shape(min(n_gen, 100))
        export_image_grid(samples, rows, cols, *tr.image_shape, out / "samples.pgm")
    else:
        save_csv(out / "samples.csv", samples)

    summary = {
        "bandwidth": kspec.bandwidth,
        "kernel": kspec.family.value,
        "n_train": tr.n,
        "n_probe": 0 if probe is None else probe.n,
        "iterations": cfg.train.iterations + cfg.train.frozen_tail,
        "final_cost": report.rows[-1].minibatch_cost if report.rows else None,
    }
    it, pv = report.probe_curve()
    if pv.size:
        summary["probe_mmd_u2"] = {str(int(i)): float(v) for i, v in zip(it, pv)}
    if isinstance(report.params, AffineGenerator):
        summary["mu"] = report.params.mu.tolist()
        summary["sigma"] = report.params.sigma.tolist()
        summary["train_mean"] = tr.samples.mean(axis=0).tolist()
        summary["train_std"] = tr.samples.std(axis=0, ddof=1).tolist()

    if cfg.eval.enabled and va is not None and te is not None:
        score = score_samples(samples, va.samples, te.samples, cfg.eval.kde, r_score, cfg.eval.bootstrap)
        text = score.format()
        summary["kde_score"] = score.score
        summary["kde_stderr"] = score.stderr
        summary["kde_bandwidth"] = score.bandwidth
        if cfg.eval.uniform_baseline:
            u = r_unif.uniform(0.0, 1.0, (n_gen, tr.dim))
            base = score_samples(u, va.samples, te.samples, cfg.eval.kde, r_score, cfg.eval.bootstrap)
            summary["uniform_kde_score"] = base.score
            text += "uniform_baseline_score: %.6f\nuniform_baseline_bandwidth: %r\n" % (base.score, base.bandwidth)
        (out / "score.txt").write_text(text)

    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_train(args) -> int:
    target = args.config
    cfg = load_preset(target) if target in PRESETS and not Path(target).is_file() else load_config(target)
    summary = run_experiment(cfg, Path(args.out) if args.out else None)
    print(json.dumps({k: v for k, v in summary.items() if k != "probe_mmd_u2"}, sort_keys=True))
    return EXIT_OK


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None


def cmd_eval(args) -> int:
    if args.n_samples < 1:
        raise UsageError("--n-samples must be >= 1")
    gen = load_checkpoint(args.checkpoint)
    ds = load_dataset(args.data, args.has_header)
    if ds.dim != gen.output_dim:
        raise DimensionError(f"generator outputs dimension {gen.output_dim}, data has {ds.dim}")
    r_split, r_samp, r_boot = Rng(args.seed).spawn(3)
    if args.kde_bandwidth is not None:
        kde = KdeConfig(bandwidth=args.kde_bandwidth, validation_fraction=args.validation_fraction)
    elif args.kde_grid:
        kde = KdeConfig(bandwidth_grid=tuple(_parse_floats(args.kde_grid)), validation_fraction=args.validation_fraction)
    else:
        kde = KdeConfig(validation_fraction=args.validation_fraction)
    perm = r_split.permutation(ds.n)
    n_val = int(round(ds.n * kde.validation_fraction))
    if not 1 <= n_val < ds.n:
        raise UsageError("validation split would leave an empty part")
    va, te = ds.samples[perm[:n_val]], ds.samples[perm[n_val:]]
    samples = forward(gen, r_samp.standard_normal((args.n_samples, gen.input_dim)))
    rep = score_samples(samples, va, te, kde, r_boot, args.bootstrap)
    sys.stdout.write(rep.format())
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    gen = load_checkpoint(args.checkpoint)
    samples = forward(gen, Rng(args.seed).standard_normal((args.n, gen.input_dim)))
    if args.out.endswith(".pgm"):
        if not args.image_shape:
            raise UsageError("--image-shape HxW is required for PGM output")
        h, w = (int(v) for v in args.image_shape.lower().split("x"))
        rows, cols = grid_shape(args.n)
        export_image_grid(samples, rows, cols, h, w, args.out)
    else:
        save_csv(args.out, samples)
    return EXIT_OK


def cmd_mmd(args) -> int:
    a = load_dataset(args.a, args.has_header)
    b = load_dataset(args.b, args.has_header)
    if a.dim != b.dim:
        raise DimensionError(f"{args.a} has dimension {a.dim}, {args.b} has {b.dim}")
    if args.bandwidth == "median":
        rng = None if args.seed is None else Rng(args.seed)
        ell = median_heuristic(np.vstack([a.samples, b.samples]), rng, args.max_pairs)
        how = "median"
    else:
        try:
            ell = float(args.bandwidth)
        except ValueError:
            raise UsageError("--bandwidth must be a number or 'median'") from None
        how = "fixed"
    est = mmd_u_squared(KernelSpec(Family.parse(args.kernel), ell, args.rq_alpha), a.samples, b.samples)
    print(f"mmd_u2: {est.value!r}")
    print(f"n: {est.n}")
    print(f"m: {est.m}")
    print(f"bandwidth: {ell!r} ({how})")
    return EXIT_OK


def bounds_tables(p1, gamma1, p2, gamma2, delta, m_grid, C_p1=1.0, C_p2=1.0,
                  validate=False, eps_grid=(0.1, 0.2, 0.4), trials=1000, seed=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "epsilon"])
    for M in m_grid:
        b = bnd.BoundInputs(p1, gamma1, p2, gamma2, delta, int(M), 1.0, C_p1, C_p2)
        w.writerow([int(M), repr(bnd.epsilon_bound(b))])
    if validate:
        if seed is None:
            raise UsageError("--validate needs --seed")
        buf.write("\n")
        w.writerow(["M", "eps", "analytic_bound", "empirical_frequency", "trials"])
        kspec = KernelSpec(Family.RBF, 1.0)
        for M, child in zip(m_grid, Rng(seed).spawn(len(m_grid))):
            for row in bnd.validate_theorem3(bnd.GaussianPair(), kspec, int(M), eps_grid, trials, child):
                w.writerow([row.M, repr(row.eps), repr(row.analytic), repr(row.frequency), row.trials])
    return buf.getvalue()


def cmd_bounds(args) -> int:
    vals = dict(BOUNDS_DEMO) if args.preset == "bounds-demo" else {}
    if args.preset and args.preset != "bounds-demo":
        raise UsageError(f"unknown bounds preset {args.preset!r}")
    for key in ("p1", "gamma1", "p2", "gamma2", "delta", "trials", "seed"):
        if getattr(args, key) is not None:
            vals[key] = getattr(args, key)
    if args.m_grid:
        vals["m_grid"] = [int(v) for v in _parse_floats(args.m_grid)]
    if args.eps_grid:
        vals["eps_grid"] = _parse_floats(args.eps_grid)
    missing = [k for k in ("p1", "gamma1", "p2", "gamma2", "delta", "m_grid") if k not in vals]
    if missing:
        raise UsageError(f"missing bounds inputs: {', '.join(missing)}")
    validate = args.validate or args.preset == "bounds-demo"
    text = bounds_tables(
        vals["p1"], vals["gamma1"], vals["p2"], vals["gamma2"], vals["delta"], vals["m_grid"],
        args.C_p1, args.C_p2, validate, vals.get("eps_grid", (0.1, 0.2, 0.4)),
        vals.get("trials", 1000), vals.get("seed"),
    )
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.name is None:
        print("\n".join(list(PRESETS) + ["bounds-demo"]))
        return EXIT_OK
    if args.name == "bounds-demo":
        print(json.dumps(BOUNDS_DEMO, indent=2))
        return EXIT_OK
    if args.name not in PRESETS:
        raise UsageError(f"unknown preset {args.name!r}")
    sys.stdout.write(PRESETS[args.name].lstrip())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmdnet", description="Train and evaluate MMD generator networks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training experiment from a TOML config or preset name")
    p.add_argument("config")
    p.add_argument("--out", help="override the config's output_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="KDE score of a checkpoint against a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-samples", type=int, default=500)
    p.add_argument("--kde-grid")
    p.add_argument("--kde-bandwidth", type=float)
    p.add_argument("--validation-fraction", type=float, default=0.5)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--has-header", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="draw samples from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help=".csv or .pgm")
    p.add_argument("--image-shape", help="HxW, for PGM output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("mmd", help="unbiased MMD^2 between two datasets")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--kernel", default="rbf", choices=["rbf", "laplace", "rq"])
    p.add_argument("--bandwidth", default="median")
    p.add_argument("--rq-alpha", type=float, default=1.0)
    p.add_argument("--max-pairs", type=int, default=100_000)
    p.add_argument("--seed", type=int, help="required when the median heuristic subsamples pairs")
    p.add_argument("--has-header", action="store_true")
    p.set_defaults(func=cmd_mmd)

    p = sub.add_parser("bounds", help="generalization-bound table over an M grid")
    p.add_argument("--preset", help="'bounds-demo'")
    p.add_argument("--p1", type=int)
    p.add_argument("--gamma1", type=float)
    p.add_argument("--p2", type=int)
    p.add_argument("--gamma2", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--m-grid")
    p.add_argument("--C-p1", type=float, default=1.0)
    p.add_argument("--C-p2", type=float, default=1.0)
    p.add_argument("--validate", action="store_true")
    p.add_argument("--eps-grid")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("preset", help="list presets or print one")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_preset)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DimensionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    except NumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, UsageError, ParseError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
