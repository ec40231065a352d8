"""Squared MMD estimators and the generator training cost.

Gram matrices are materialized in full, so memory grows as
O(N^2 + M^2 + NM); this is meant for N, M up to a few thousand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, as_matrix
from .kernels import Family, KernelSpec, gram, gram_with_grad


@dataclass(frozen=True)
class MmdEstimate:
    value: float
    n: int
    m: int
    kernel: KernelSpec

    def __float__(self):
        return self.value


def _offdiag_mean(K: np.ndarray) -> float:
    n = K.shape[0]
    return (K.sum() - np.trace(K)) / (n * (n - 1))


def _pair(X, Y, min_x=2, min_y=2, names=("X", "Y")):
    X = as_matrix(X, names[0])
    Y = as_matrix(Y, names[1])
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"dimensions differ: {names[0]} has {X.shape[1]}, {names[1]} has {Y.shape[1]}")
    if X.shape[0] < min_x:
        raise ValueError(f"{names[0]} needs at least {min_x} rows, got {X.shape[0]}")
    if Y.shape[0] < min_y:
        raise ValueError(f"{names[1]} needs at least {min_y} rows, got {Y.shape[0]}")
    return X, Y


def mmd_u_squared(spec: KernelSpec, X, Y) -> MmdEstimate:
    """Unbiased U-statistic estimate of MMD^2 between samples X and Y.

    The value can be negative; it is never clamped.
    """
    X, Y = _pair(X, Y)
    n, m = X.shape[0], Y.shape[0]
    value = (
        _offdiag_mean(gram(spec, X, X))
        + _offdiag_mean(gram(spec, Y, Y))
        - 2.0 * gram(spec, X, Y).mean()
    )
    return MmdEstimate(float(value), n, m, spec)


def _gaussian_rbf_expectation(ell: float, delta, var, dim: int) -> float:
    # E exp(-|Z|^2 / 2l^2) for Z ~ N(delta * 1, var * I_dim)
    s = ell**2 + var
    per_coord = ell / np.sqrt(s) * np.exp(-(delta**2) / (2 * s))
    return float(per_coord**dim)


def population_mmd_gaussian_oracle(spec: KernelSpec, mean1, var1, mean2, var2, dim: int = 1) -> float:
    """Closed-form MMD^2 under an RBF kernel between two isotropic Gaussians.

    ``mean1``/``mean2`` are per-coordinate means (scalars, applied to every
    coordinate); ``var1``/``var2`` per-coordinate variances.
    """
    if spec.family is not Family.RBF:
        raise NotImplementedError(f"closed form only for RBF kernels, got {spec.family.value}")
    if not (var1 > 0 and var2 > 0):
        raise ValueError("variances must be positive")
    ell = spec.bandwidth
    kxx = _gaussian_rbf_expectation(ell, 0.0, 2 * var1, dim)
    kyy = _gaussian_rbf_expectation(ell, 0.0, 2 * var2, dim)
    kxy = _gaussian_rbf_expectation(ell, mean1 - mean2, var1 + var2, dim)
    return kxx + kyy - 2 * kxy


def cost(spec: KernelSpec, Y, X) -> float:
    """The part of ``mmd_u_squared(X, Y)`` that depends on the generated Y."""
    Y, X = _pair(Y, X, min_x=2, min_y=1, names=("Y", "X"))
    return float(_offdiag_mean(gram(spec, Y, Y)) - 2.0 * gram(spec, Y, X).mean())


def cost_grad_wrt_y(spec: KernelSpec, Y, X) -> np.ndarray:
    """dC/dY, same shape as Y.

    k(y_m, y_m') contributes to row m twice (both slots), hence the factor 2
    on the repulsion term. Diagonal terms have zero gradient for every family
    so they need no masking.
    """
    return cost_and_grad(spec, Y, X)[1]


def cost_and_grad(spec: KernelSpec, Y, X) -> tuple[float, np.ndarray]:
    """``(cost, cost_grad_wrt_y)`` sharing the two Gram matrices."""
    Y, X = _pair(Y, X, min_x=2, min_y=1, names=("Y", "X"))
    m, n = Y.shape[0], X.shape[0]
    Kyy, repulse = gram_with_grad(spec, Y, Y)
    Kyx, attract = gram_with_grad(spec, Y, X)
    c = _offdiag_mean(Kyy) - 2.0 * Kyx.mean()
    return float(c), 2.0 / (m * (m - 1)) * repulse - 2.0 / (m * n) * attract


def per_point_cost(spec: KernelSpec, Y, x) -> float:
    """Cost against a single training point; averaging over points gives ``cost``."""
    x = as_matrix(x, "x")
    return cost(spec, Y, x)


def per_point_cost_grad(spec: KernelSpec, Y, x) -> np.ndarray:
    return cost_grad_wrt_y(spec, Y, as_matrix(x, "x"))
