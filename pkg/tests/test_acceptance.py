"""Acceptance criteria 1-8, each at its stated tolerance.

Every test records one PASS/FAIL line (echoed immediately and repeated in
the terminal summary), then asserts.
"""

import csv
import json
import math
import time

import numpy as np
import pytest

from mmdnet.bounds import BoundInputs, GaussianPair, epsilon_bound, theorem3_tail, validate_theorem3
from mmdnet.cli import run_experiment
from mmdnet.config import BOUNDS_DEMO, load_preset
from mmdnet.core import Rng
from mmdnet.data import (
    export_image_grid, load_csv, load_idx_images, quantize, read_pgm, save_csv, write_idx_images,
)
from mmdnet.generator import (
    AffineGenerator, forward, init_mlp, load_checkpoint, save_checkpoint, to_bytes, vjp_params,
)
from mmdnet.kernels import KernelSpec
from mmdnet.mmd import cost, cost_grad_wrt_y, mmd_u_squared, population_mmd_gaussian_oracle
from oracles import central_difference
from conftest import FAMILIES
from test_bounds import WORKED


def _curve(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_criterion_1_gaussian_reproduction(tmp_path, criterion):
    t0 = time.perf_counter()
    s = run_experiment(load_preset("gaussian1d"), tmp_path)
    elapsed = time.perf_counter() - t0
    rows = _curve(tmp_path / "curve.csv")
    c0, c250 = float(rows[0]["minibatch_cost"]), float(rows[-1]["minibatch_cost"])
    probe = {int(k): v for k, v in s["probe_mmd_u2"].items()}
    mu_gap = abs(s["mu"][0] - s["train_mean"][0])
    sigma = s["sigma"][0]
    ok = (
        rows[-1]["iteration"] == "250"
        and mu_gap < 0.25
        and 0.5 <= sigma <= 1.5
        and c250 < 0.1 * c0
        and elapsed < 5.0
    )
    criterion(1, ok, f"|mu - mean|={mu_gap:.4f} (<0.25), sigma={sigma:.4f} in [0.5,1.5], "
                     f"cost0={c0:.4f} cost250={c250:.4f} (<10%), probe MMD_u2 {probe[0]:.4f} -> {probe[250]:.4f}, "
                     f"{elapsed:.2f}s (<5s)")
    assert ok


def _pipeline_rel_err(gen, W, X, spec):
    grad = vjp_params(gen, W, cost_grad_wrt_y(spec, forward(gen, W), X)).parameters()
    params = [p.copy() for p in gen.parameters()]
    fd = []
    for k, p in enumerate(params):
        def f(v, k=k):
            ps = list(params)
            ps[k] = v
            return cost(spec, forward(gen.with_parameters(ps), W), X)
        fd.append(central_difference(f, p))
    a = np.concatenate([g.ravel() for g in grad])
    b = np.concatenate([g.ravel() for g in fd])
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_criterion_2_gradient_correctness(criterion):
    t0 = time.perf_counter()
    worst = {}
    for fam in FAMILIES:
        errs = []
        for child in Rng(20150602).spawn(20):
            n_hidden = int(child.integers(1, 4))
            sizes = [int(v) for v in child.integers(1, 6, size=n_hidden + 2)]
            m, n = (int(v) for v in child.integers(2, 9, size=2))
            gen = init_mlp(child, sizes)
            gen = gen.with_parameters([p + 0.3 * child.standard_normal(p.shape) for p in gen.parameters()])
            W = child.standard_normal((m, sizes[0]))
            X = child.uniform(0.0, 1.0, (n, sizes[-1]))
            spec = KernelSpec(fam, float(child.uniform(0.3, 1.0)), float(child.uniform(0.5, 2.0)))
            errs.append(_pipeline_rel_err(gen, W, X, spec))
        worst[fam.value] = max(errs)
    elapsed = time.perf_counter() - t0
    ok = all(v < 1e-4 for v in worst.values()) and elapsed < 10.0
    detail = ", ".join(f"{k} worst rel err {v:.2e}" for k, v in worst.items())
    criterion(2, ok, f"{detail} (<1e-4), 20 configs each, {elapsed:.2f}s (<10s)")
    assert ok


def test_criterion_3_unbiasedness(criterion):
    t0 = time.perf_counter()
    spec = KernelSpec("rbf", 1.0)
    pairs = {"equal": (0.0, 1.0, 0.0, 1.0), "mean+2": (0.0, 1.0, 2.0, 1.0), "var*2": (0.0, 1.0, 0.0, 2.0)}
    parts, ok = [], True
    for (name, (m1, v1, m2, v2)), stream in zip(pairs.items(), Rng(20150603).spawn(3)):
        truth = population_mmd_gaussian_oracle(spec, m1, v1, m2, v2, 1)
        vals = np.empty(2000)
        for t, child in enumerate(stream.spawn(2000)):
            X = m1 + math.sqrt(v1) * child.standard_normal((100, 1))
            Y = m2 + math.sqrt(v2) * child.standard_normal((100, 1))
            vals[t] = mmd_u_squared(spec, X, Y).value
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        z = (vals.mean() - truth) / se
        ok &= abs(z) <= 4.0
        parts.append(f"{name}: mean {vals.mean():.5f} vs {truth:.5f} ({z:+.2f} SE)")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60.0
    criterion(3, ok, "; ".join(parts) + f" (|z|<=4), {elapsed:.1f}s (<60s)")
    assert ok


def test_criterion_4_concentration(criterion):
    t0 = time.perf_counter()
    spec = KernelSpec("rbf", 1.0)
    rows = []
    for M, child in zip(BOUNDS_DEMO["m_grid"], Rng(BOUNDS_DEMO["seed"]).spawn(3)):
        rows += validate_theorem3(GaussianPair(), spec, M, BOUNDS_DEMO["eps_grid"], 1000, child)
    elapsed = time.perf_counter() - t0
    ok = len(rows) == 9 and all(r.ok for r in rows) and all(
        r.analytic == theorem3_tail(r.eps, r.M) for r in rows) and elapsed < 300
    worst = max(rows, key=lambda r: r.frequency - r.allowance)
    criterion(4, ok, f"9 cells, worst M={worst.M} eps={worst.eps}: freq {worst.frequency:.3f} "
                     f"<= allowance {worst.allowance:.3f}, {elapsed:.1f}s (<300s)")
    assert ok


def test_criterion_5_bound_calculator(criterion):
    diffs = [abs(epsilon_bound(b) - v) for b, v in WORKED]
    ms = [2**k for k in range(2, 22)]
    by_m = [epsilon_bound(BoundInputs(2, 2.0, 3, 1.5, 0.05, m)) for m in ms]
    deltas = np.logspace(-0.05, -15, 20)
    by_d = [epsilon_bound(BoundInputs(1, 2.0, 2, 2.0, float(d), 1000)) for d in deltas]
    dec = all(a > b for a, b in zip(by_m, by_m[1:]))
    inc = all(a < b for a, b in zip(by_d, by_d[1:]))
    ok = max(diffs) <= 1e-12 and dec and inc
    criterion(5, ok, f"worked examples max |diff| {max(diffs):.1e} (<=1e-12), "
                     f"decreasing over 20 doublings of M: {dec}, increasing over 20 shrinking deltas: {inc}")
    assert ok


@pytest.fixture(scope="module")
def mnist_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("mnist_desk")
    t0 = time.perf_counter()
    summary = run_experiment(load_preset("mnist-desk"), out)
    return out, summary, time.perf_counter() - t0


def test_criterion_6_desk_mnist(mnist_run, criterion):
    out, s, elapsed = mnist_run
    cfg = load_preset("mnist-desk")
    probe = {int(k): v for k, v in s["probe_mmd_u2"].items()}
    final = probe[cfg.train.iterations]
    ratio = final / probe[100]
    margin = s["kde_score"] - s["uniform_kde_score"]
    setup_ok = (
        s["n_train"] == 1000 and cfg.generator.hidden == [64, 32, 64] and cfg.train.minibatch_size == 100
        and cfg.train.optimizer == "rmsprop" and cfg.train.iterations == 5000 and cfg.kernel.bandwidth == "median"
        and cfg.eval.n_generated == 500
    )
    ok = setup_ok and ratio < 0.5 and margin >= 100 and elapsed < 900
    criterion(6, ok, f"probe MMD_u2 {probe[100]:.4f} @100 -> {final:.4f} @5000, ratio {ratio:.3f} (<0.5); "
                     f"KDE {s['kde_score']:.1f} vs uniform {s['uniform_kde_score']:.1f}, margin {margin:.1f} nats "
                     f"(>=100); {elapsed:.0f}s (<900s)")
    assert ok


def test_criterion_7_determinism(mnist_run, tmp_path, criterion):
    checked, bad = [], []
    first, _, _ = mnist_run
    runs = {"mnist-desk": first}
    for name in ("gaussian1d", "gaussian2d"):
        runs[name] = tmp_path / f"{name}-a"
        run_experiment(load_preset(name), runs[name])
    for name, a in runs.items():
        b = tmp_path / f"{name}-b"
        run_experiment(load_preset(name), b)
        files = sorted(p.name for p in a.iterdir() if p.suffix in (".csv", ".mmdn"))
        assert "curve.csv" in files and "checkpoint_final.mmdn" in files
        for f in files:
            checked.append(f"{name}/{f}")
            if (a / f).read_bytes() != (b / f).read_bytes():
                bad.append(f"{name}/{f}")
    ok = not bad
    criterion(7, ok, f"{len(checked)} curve/checkpoint files over 3 presets byte-identical on rerun"
                     + (f"; differing: {bad}" if bad else ""))
    assert ok


def test_criterion_8_round_trips(tmp_path, criterion):
    r = Rng(8)
    results = {}

    images = r.integers(0, 256, size=(50, 28, 28)).astype(np.uint8)
    write_idx_images(tmp_path / "x.idx.gz", images)
    back = quantize(load_idx_images(tmp_path / "x.idx.gz").samples)
    results["idx"] = back.tobytes() == images.reshape(50, -1).tobytes()

    X = r.standard_normal((1000, 5)) * 10.0 ** r.integers(-300, 300, size=(1000, 5))
    save_csv(tmp_path / "x.csv", X)
    results["csv"] = load_csv(tmp_path / "x.csv").samples.tobytes() == X.tobytes()

    P = r.uniform(0, 1, (12, 28 * 28))
    export_image_grid(P, 3, 4, 28, 28, tmp_path / "x.pgm")
    img, q = read_pgm(tmp_path / "x.pgm"), quantize(P)
    results["pgm"] = img.shape == (3 * 29 - 1, 4 * 29 - 1) and all(
        img[(k // 4) * 29:(k // 4) * 29 + 28, (k % 4) * 29:(k % 4) * 29 + 28].tobytes()
        == q[k].reshape(28, 28).tobytes() for k in range(12))

    ok_ck = True
    for gen in (init_mlp(r, [10, 64, 32, 64, 784]), AffineGenerator(r.standard_normal(3), r.uniform(0, 2, 3))):
        save_checkpoint(gen, tmp_path / "g.mmdn")
        back = load_checkpoint(tmp_path / "g.mmdn")
        ok_ck &= all(p.tobytes() == q.tobytes() for p, q in zip(gen.parameters(), back.parameters()))
        ok_ck &= to_bytes(back) == (tmp_path / "g.mmdn").read_bytes()
    results["checkpoint"] = ok_ck

    ok = all(results.values())
    criterion(8, ok, ", ".join(f"{k} {'bit-exact' if v else 'MISMATCH'}" for k, v in results.items()))
    assert ok
