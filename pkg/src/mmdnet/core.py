"""Dense matrix helpers and the seeded random source shared by all modules.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64, one sample
per row and one coordinate per column.

The random source wraps numpy's counter-based Philox4x64-10 bit generator,
seeded through ``numpy.random.SeedSequence``. Normal variates come from
numpy's ziggurat sampler, so a given seed yields the same stream on every
platform for a fixed numpy major version.
"""

from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class NumericalError(ArithmeticError):
    """Raised when a computation produces NaN or infinite values."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a 2-D float64 array, promoting vectors to one row."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def check_finite(a: np.ndarray, what: str = "result") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{what} contains NaN or Inf")
    return a


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return check_finite(a @ b, "matmul")


class Rng:
    """Seeded, single-owner random stream.

    ``spawn`` derives statistically independent child streams, which is how
    the trainer and Monte Carlo validators split randomness by purpose.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            seed = int(seed)
            if not 0 <= seed < 2**64:
                raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
            self._seq = np.random.SeedSequence(seed)
        self.generator = np.random.Generator(np.random.Philox(self._seq))

    @property
    def seed(self):
        return self._seq.entropy

    def spawn(self, n: int) -> list["Rng"]:
        return [Rng(s) for s in self._seq.spawn(n)]

    def standard_normal(self, shape) -> np.ndarray:
        return self.generator.standard_normal(shape)

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, n: int, size: int, replace: bool = True) -> np.ndarray:
        return self.generator.choice(n, size=size, replace=replace)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size)


def sample_standard_normal(rng: Rng, rows: int, cols: int) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise DimensionError(f"shape must be positive, got ({rows}, {cols})")
    return rng.standard_normal((rows, cols))
