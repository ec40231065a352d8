"""Generators mapping noise rows to sample rows.

Two families:

* :class:`AffineGenerator` computes ``mu + sigma * w`` coordinatewise.
* :class:`MlpGenerator` is a fully connected net with a sigmoid after every
  layer, the output layer included, so samples lie in (0, 1).

Both expose ``parameters()`` (a flat list of arrays in a fixed order) and
``with_parameters()`` so optimizers can treat them uniformly.

Checkpoint layout (``MMDN`` version 1, all integers u32 little-endian,
all reals f64 little-endian)::

    b"MMDN" | version | variant (0 affine, 1 mlp)
    affine: dim | mu[dim] | sigma[dim]
    mlp:    n_layers | sizes[n_layers + 1] | per layer: W[in*out] row-major, b[out]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit as sigmoid

from .core import DimensionError, Rng, as_matrix

TFD_HIDDEN = (1000, 600, 1000)
DESK_HIDDEN = (64, 32, 64)

MAGIC = b"MMDN"
FORMAT_VERSION = 1
_AFFINE, _MLP = 0, 1


@dataclass
class AffineGenerator:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64)).copy()
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64)).copy()
        if self.mu.shape != self.sigma.shape or self.mu.ndim != 1:
            raise DimensionError(f"mu {self.mu.shape} and sigma {self.sigma.shape} must be equal-length vectors")

    @property
    def input_dim(self) -> int:
        return self.mu.size

    @property
    def output_dim(self) -> int:
        return self.mu.size

    def parameters(self) -> list[np.ndarray]:
        return [self.mu, self.sigma]

    def with_parameters(self, params) -> "AffineGenerator":
        mu, sigma = params
        return AffineGenerator(mu, sigma)


@dataclass
class MlpGenerator:
    weights: list[np.ndarray]
    biases: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.weights = [np.array(w, dtype=np.float64, ndmin=2) for w in self.weights]
        if not self.biases:
            self.biases = [np.zeros(w.shape[1]) for w in self.weights]
        self.biases = [np.atleast_1d(np.array(b, dtype=np.float64)) for b in self.biases]
        if not self.weights or len(self.weights) != len(self.biases):
            raise DimensionError("need one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[1],):
                raise DimensionError(f"layer {i}: bias shape {b.shape} does not match weight {w.shape}")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise DimensionError(
                    f"layer {i - 1} outputs {self.weights[i - 1].shape[1]} but layer {i} expects {w.shape[0]}"
                )

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_parameters(self, params) -> "MlpGenerator":
        params = list(params)
        return MlpGenerator(params[0::2], params[1::2])


GeneratorParams = AffineGenerator | MlpGenerator


def _check_input(gen: GeneratorParams, W) -> np.ndarray:
    W = as_matrix(W, "noise")
    if W.shape[1] != gen.input_dim:
        raise DimensionError(f"generator expects noise of dimension {gen.input_dim}, got {W.shape[1]}")
    return W


def _mlp_activations(gen: MlpGenerator, W):
    acts = [W]
    h = W
    for w, b in zip(gen.weights, gen.biases):
        h = sigmoid(h @ w + b)
        acts.append(h)
    return acts


def forward(gen: GeneratorParams, W) -> np.ndarray:
    W = _check_input(gen, W)
    if isinstance(gen, AffineGenerator):
        return gen.mu + gen.sigma * W
    return _mlp_activations(gen, W)[-1]


def vjp_params(gen: GeneratorParams, W, upstream) -> GeneratorParams:
    """Gradient of ``sum_m <upstream[m], G(W[m])>`` with respect to every
    parameter, returned in the generator's own shape."""
    W = _check_input(gen, W)
    upstream = as_matrix(upstream, "upstream")
    if upstream.shape != (W.shape[0], gen.output_dim):
        raise DimensionError(
            f"upstream shape {upstream.shape} does not match output shape {(W.shape[0], gen.output_dim)}"
        )
    if isinstance(gen, AffineGenerator):
        return AffineGenerator(upstream.sum(axis=0), (upstream * W).sum(axis=0))

    acts = _mlp_activations(gen, W)
    gw, gb = [None] * len(gen.weights), [None] * len(gen.weights)
    delta = upstream
    for i in range(len(gen.weights) - 1, -1, -1):
        out = acts[i + 1]
        dz = delta * out * (1.0 - out)
        gw[i] = acts[i].T @ dz
        gb[i] = dz.sum(axis=0)
        if i:
            delta = dz @ gen.weights[i].T
    return MlpGenerator(gw, gb)


def init_affine(mu, sigma) -> AffineGenerator:
    return AffineGenerator(mu, sigma)


def init_mlp(rng: Rng, sizes) -> MlpGenerator:
    """Uniform Glorot-style weights ``U(-sqrt(6/(fan_in+fan_out)), +...)``, zero biases."""
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    if any(s <= 0 for s in sizes):
        raise ValueError(f"layer sizes must be positive, got {sizes}")
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
    return MlpGenerator(weights, [np.zeros(s) for s in sizes[1:]])


def to_bytes(gen: GeneratorParams) -> bytes:
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, _AFFINE if isinstance(gen, AffineGenerator) else _MLP)]
    if isinstance(gen, AffineGenerator):
        parts.append(struct.pack("<I", gen.mu.size))
    else:
        sizes = gen.sizes
        parts.append(struct.pack(f"<{len(sizes) + 1}I", len(sizes) - 1, *sizes))
    for p in gen.parameters():
        parts.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    return b"".join(parts)


def from_bytes(buf: bytes) -> GeneratorParams:
    try:
        return _from_bytes(buf)
    except struct.error:
        raise ValueError("truncated checkpoint header") from None


def _from_bytes(buf: bytes) -> GeneratorParams:
    if buf[:4] != MAGIC:
        raise ValueError(f"bad checkpoint magic {buf[:4]!r}")
    if len(buf) < 12:
        raise ValueError("truncated checkpoint header")
    version, variant = struct.unpack_from("<II", buf, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    off = 12

    def take(n):
        nonlocal off
        end = off + 8 * n
        if end > len(buf):
            raise ValueError(f"truncated checkpoint at byte {off}")
        arr = np.frombuffer(buf, dtype="<f8", count=n, offset=off).astype(np.float64)
        off = end
        return arr

    if variant == _AFFINE:
        (dim,) = struct.unpack_from("<I", buf, off)
        off += 4
        gen = AffineGenerator(take(dim), take(dim))
    elif variant == _MLP:
        (n_layers,) = struct.unpack_from("<I", buf, off)
        off += 4
        sizes = struct.unpack_from(f"<{n_layers + 1}I", buf, off)
        off += 4 * (n_layers + 1)
        ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            ws.append(take(fan_in * fan_out).reshape(fan_in, fan_out))
            bs.append(take(fan_out))
        gen = MlpGenerator(ws, bs)
    else:
        raise ValueError(f"unknown generator variant tag {variant}")
    if off != len(buf):
        raise ValueError(f"{len(buf) - off} trailing bytes after checkpoint payload")
    return gen


def save_checkpoint(gen: GeneratorParams, path) -> None:
    Path(path).write_bytes(to_bytes(gen))


def load_checkpoint(path) -> GeneratorParams:
    return from_bytes(Path(path).read_bytes())
