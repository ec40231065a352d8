"""Minibatch gradient descent on the MMD cost.

One *iteration* is one minibatch gradient step. The noise matrix W (M rows)
is drawn once, then redrawn at iterations r, 2r, ... when a resample
interval r is set, and held fixed otherwise. An optional frozen tail runs
extra iterations with the noise held at its last value.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .core import DimensionError, NumericalError, Rng, as_matrix
from .generator import GeneratorParams, forward, vjp_params
from .kernels import KernelSpec
from .mmd import cost_and_grad, mmd_u_squared

OPTIMIZERS = ("sgd", "rmsprop")


class TrainingDivergence(NumericalError):
    def __init__(self, iteration: int, what: str):
        super().__init__(f"{what} is not finite at iteration {iteration}")
        self.iteration = iteration


@dataclass
class TrainConfig:
    m_generated: int = 100
    minibatch_size: int = 100
    resample_interval: int | None = None  # None: never resample
    iterations: int = 1000
    base_lr: float = 1e-3
    optimizer: str = "rmsprop"
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-8
    seed: int = 0
    snapshot_every: int = 100
    frozen_tail: int = 0

    def validate(self, n_data: int | None = None):
        for name in ("m_generated", "minibatch_size", "snapshot_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.m_generated < 2:
            raise ValueError("m_generated must be >= 2")
        if self.iterations < 0 or self.frozen_tail < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.resample_interval is not None and self.resample_interval < 1:
            raise ValueError("resample_interval must be >= 1 or None")
        if not self.base_lr > 0:
            raise ValueError("base_lr must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if not 0 < self.rmsprop_decay < 1:
            raise ValueError("rmsprop_decay must be in (0, 1)")
        if not self.rmsprop_eps >= 0:
            raise ValueError("rmsprop_eps must be >= 0")
        if n_data is not None and self.minibatch_size > n_data:
            raise ValueError(f"minibatch_size {self.minibatch_size} exceeds training set size {n_data}")
        return self


@dataclass(frozen=True)
class CurveRow:
    iteration: int
    minibatch_cost: float
    probe_mmd_u2: float | None
    elapsed_ms: float = field(default=0.0, compare=False)


@dataclass
class TrainReport:
    rows: list[CurveRow]
    params: GeneratorParams
    noise: np.ndarray | None = field(default=None, compare=False)

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r.iteration for r in self.rows], dtype=np.int64)

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.minibatch_cost for r in self.rows])

    def probe_curve(self) -> tuple[np.ndarray, np.ndarray]:
        pts = [(r.iteration, r.probe_mmd_u2) for r in self.rows if r.probe_mmd_u2 is not None]
        if not pts:
            return np.array([], dtype=np.int64), np.array([])
        it, v = zip(*pts)
        return np.array(it), np.array(v)

    def to_csv(self, fh=None, timing: bool = False) -> str:
        """CSV with columns iteration, minibatch_cost, probe_mmd_u2, elapsed_ms.

        Reals use ``repr`` (shortest round-trip form). ``elapsed_ms`` is left
        empty unless ``timing`` is set, so reruns stay byte-identical.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "minibatch_cost", "probe_mmd_u2", "elapsed_ms"])
        for r in self.rows:
            w.writerow([
                r.iteration,
                repr(r.minibatch_cost),
                "" if r.probe_mmd_u2 is None else repr(r.probe_mmd_u2),
                f"{r.elapsed_ms:.3f}" if timing else "",
            ])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def sgd_step(params, grads, lr):
    _check_shapes(params, grads, "grads")
    return [p - lr * g for p, g in zip(params, grads)]


def rmsprop_step(params, grads, state, lr, decay=0.9, eps=1e-8):
    """``v <- decay*v + (1-decay)*g^2``; ``p <- p - lr*g/(sqrt(v)+eps)``.

    Returns new ``(params, state)`` lists; inputs are not modified.
    """
    _check_shapes(params, grads, "grads")
    _check_shapes(params, state, "state")
    new_state = [decay * v + (1.0 - decay) * g * g for v, g in zip(state, grads)]
    new_params = [p - lr * g / (np.sqrt(v) + eps) for p, g, v in zip(params, grads, new_state)]
    return new_params, new_state


def _check_shapes(params, other, what):
    if len(params) != len(other):
        raise DimensionError(f"{what} has {len(other)} arrays, params has {len(params)}")
    for i, (p, o) in enumerate(zip(params, other)):
        if np.shape(p) != np.shape(o):
            raise DimensionError(f"{what}[{i}] shape {np.shape(o)} != param shape {np.shape(p)}")


def minibatch_schedule(n_data: int, batch: int, rng: Rng) -> list[np.ndarray]:
    """One epoch: a fresh shuffle split into ceil(n/batch) blocks (last may be short)."""
    if not 1 <= batch <= n_data:
        raise ValueError(f"batch size must be in [1, {n_data}], got {batch}")
    perm = rng.permutation(n_data)
    return [perm[i:i + batch] for i in range(0, n_data, batch)]


def _batches(n_data, batch, rng) -> Iterator[np.ndarray]:
    while True:
        yield from minibatch_schedule(n_data, batch, rng)


def train(
    data,
    gen: GeneratorParams,
    kspec: KernelSpec,
    cfg: TrainConfig,
    rng: Rng | None = None,
    probe=None,
    on_noise: Callable[[int, np.ndarray], None] | None = None,
    on_snapshot: Callable[[int, GeneratorParams], None] | None = None,
) -> TrainReport:
    """Fit ``gen`` to ``data`` by minimizing the MMD cost.

    Rows of the report hold the minibatch cost before each update. When
    ``probe`` is given, MMD_u^2 between it and a fixed set of generated
    points (one per probe row) is recorded every ``cfg.snapshot_every``
    iterations. A last row at index ``iterations + frozen_tail`` evaluates
    the final parameters without updating them.

    ``on_noise(i, W)`` sees the noise used at every iteration;
    ``on_snapshot(i, params)`` fires with the probe evaluation.
    """
    X = as_matrix(data, "data")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if X.shape[1] != gen.output_dim:
        raise DimensionError(f"generator outputs dimension {gen.output_dim}, data has {X.shape[1]}")
    cfg.validate(X.shape[0])
    rng = Rng(cfg.seed) if rng is None else rng
    sched_rng, noise_rng, probe_rng = rng.spawn(3)

    if probe is not None:
        probe = as_matrix(probe, "probe")
        if probe.shape[1] != X.shape[1]:
            raise DimensionError(f"probe dimension {probe.shape[1]} != data dimension {X.shape[1]}")
        probe_noise = probe_rng.standard_normal((probe.shape[0], gen.input_dim))

    def probe_value(g):
        if probe is None:
            return None
        return mmd_u_squared(kspec, probe, forward(g, probe_noise)).value

    total = cfg.iterations + cfg.frozen_tail
    rows: list[CurveRow] = []
    W = noise_rng.standard_normal((cfg.m_generated, gen.input_dim))
    if total == 0:
        return TrainReport(rows, gen, W)

    batches = _batches(X.shape[0], cfg.minibatch_size, sched_rng)
    params = gen.parameters()
    state = [np.zeros_like(p) for p in params]
    t0 = time.perf_counter()

    for i in range(total + 1):
        final = i == total
        r = cfg.resample_interval
        if not final and r is not None and 0 < i < cfg.iterations and i % r == 0:
            W = noise_rng.standard_normal((cfg.m_generated, gen.input_dim))
        if on_noise is not None and not final:
            on_noise(i, W)

        Xb = X[next(batches)]
        Y = forward(gen, W)
        c, grad_y = cost_and_grad(kspec, Y, Xb)
        if not math.isfinite(c):
            raise TrainingDivergence(i, "cost")
        snap = final or i % cfg.snapshot_every == 0
        pv = probe_value(gen) if snap else None
        if pv is not None and not math.isfinite(pv):
            raise TrainingDivergence(i, "probe MMD")
        if snap and on_snapshot is not None:
            on_snapshot(i, gen)
        rows.append(CurveRow(i, c, pv, (time.perf_counter() - t0) * 1e3))
        if final:
            break

        grads = vjp_params(gen, W, grad_y).parameters()
        if not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingDivergence(i, "gradient")
        if cfg.optimizer == "sgd":
            params = sgd_step(params, grads, cfg.base_lr)
        else:
            params, state = rmsprop_step(params, grads, state, cfg.base_lr, cfg.rmsprop_decay, cfg.rmsprop_eps)
        if not all(np.all(np.isfinite(p)) for p in params):
            raise TrainingDivergence(i, "parameters")
        gen = gen.with_parameters(params)

    return TrainReport(rows, gen, W)
