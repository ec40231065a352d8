"""Translation-invariant kernels bounded by one, their input gradients, and
the median-distance bandwidth heuristic.

All three families satisfy ``k(x, x) = 1`` and ``0 < k(x, y) <= 1``:

* RBF:        ``exp(-|x-y|^2 / (2 l^2))``
* Laplacian:  ``exp(-|x-y|_1 / l)``
* RQ:         ``(1 + |x-y|^2 / (2 alpha l^2)) ** -alpha``
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .core import DimensionError, Rng, as_matrix


class Family(str, enum.Enum):
    RBF = "rbf"
    LAPLACIAN = "laplace"
    RATIONAL_QUADRATIC = "rq"

    @classmethod
    def parse(cls, name: str) -> "Family":
        aliases = {"laplacian": "laplace", "rationalquadratic": "rq", "gaussian": "rbf"}
        key = name.lower().replace("_", "").replace("-", "")
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown kernel family {name!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    family: Family = Family.RBF
    bandwidth: float = 1.0
    rq_alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.rq_alpha > 0:
            raise ValueError(f"rq_alpha must be positive, got {self.rq_alpha}")


def _vectors(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"vector dimensions differ: {x.size} vs {y.size}")
    if x.size == 0:
        raise DimensionError("vectors must have dimension >= 1")
    return x, y


def evaluate(spec: KernelSpec, x, y) -> float:
    """k(x, y) for two single points."""
    x, y = _vectors(x, y)
    d = x - y
    ell = spec.bandwidth
    if spec.family is Family.RBF:
        return float(np.exp(-np.dot(d, d) / (2 * ell**2)))
    if spec.family is Family.LAPLACIAN:
        return float(np.exp(-np.abs(d).sum() / ell))
    a = spec.rq_alpha
    return float((1 + np.dot(d, d) / (2 * a * ell**2)) ** (-a))


def _check_pair(A, B):
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise DimensionError(
            f"point dimensions differ: {A.shape[0]}x{A.shape[1]} vs {B.shape[0]}x{B.shape[1]}"
        )
    return A, B


_BLAS_MIN_DIM = 32


def _sq_dists(A, B):
    # Low dimension: cdist is exact per pair (no cancellation) and gives 0 on
    # identical rows. High dimension: the |a|^2 + |b|^2 - 2ab expansion
    # through BLAS is far faster; clamp the cancellation noise at 0.
    if A.shape[1] < _BLAS_MIN_DIM:
        return cdist(A, B, "sqeuclidean")
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    if A is B:
        np.fill_diagonal(sq, 0.0)
    return sq


def gram(spec: KernelSpec, A, B) -> np.ndarray:
    """Kernel matrix ``G[i, j] = k(A[i], B[j])``."""
    A, B = _check_pair(A, B)
    ell = spec.bandwidth
    if spec.family is Family.RBF:
        return np.exp(-_sq_dists(A, B) / (2 * ell**2))
    if spec.family is Family.LAPLACIAN:
        return np.exp(-cdist(A, B, "cityblock") / ell)
    a = spec.rq_alpha
    return (1 + _sq_dists(A, B) / (2 * a * ell**2)) ** (-a)


def grad_wrt_first(spec: KernelSpec, x, y) -> np.ndarray:
    """Gradient of k(x, y) with respect to x.

    For the Laplacian the subgradient at a tied coordinate is 0.
    """
    x, y = _vectors(x, y)
    d = x - y
    ell = spec.bandwidth
    if spec.family is Family.RBF:
        return -d / ell**2 * np.exp(-np.dot(d, d) / (2 * ell**2))
    if spec.family is Family.LAPLACIAN:
        return -np.sign(d) / ell * np.exp(-np.abs(d).sum() / ell)
    a = spec.rq_alpha
    return -d / ell**2 * (1 + np.dot(d, d) / (2 * a * ell**2)) ** (-a - 1)


def gram_with_grad(spec: KernelSpec, A, B, weights=None):
    """``(gram(A, B), G)`` where row i of G is
    ``sum_j w[i, j] * grad_wrt_first(A[i], B[j])`` (weights default to 1).

    RBF and RQ reduce to two matrix products against a factor matrix F with
    ``grad = -(a_i - b_j) F_ij``; the Laplacian needs a per-coordinate sign sum.
    """
    A, B = _check_pair(A, B)
    ell = spec.bandwidth
    W = 1.0 if weights is None else np.asarray(weights, dtype=np.float64)
    if spec.family is Family.LAPLACIAN:
        K = gram(spec, A, B)
        KW = K * W
        out = np.empty_like(A)
        for d in range(A.shape[1]):
            out[:, d] = (np.sign(A[:, d, None] - B[None, :, d]) * KW).sum(axis=1)
        return K, -out / ell
    sq = _sq_dists(A, B)
    if spec.family is Family.RBF:
        K = np.exp(-sq / (2 * ell**2))
        F = K / ell**2
    else:
        a = spec.rq_alpha
        base = 1 + sq / (2 * a * ell**2)
        K = base ** (-a)
        F = K / base / ell**2
    F = F * W
    return K, -(A * F.sum(axis=1, keepdims=True) - F @ B)


def grad_gram_rowsum(spec: KernelSpec, A, B, weights=None) -> np.ndarray:
    return gram_with_grad(spec, A, B, weights)[1]


def median_heuristic(data, rng: Rng | None = None, max_pairs: int = 100_000) -> float:
    """Median Euclidean distance between distinct rows of ``data``.

    All ``N(N-1)/2`` unordered pairs are used when that count is at most
    ``max_pairs``; otherwise ``max_pairs`` pairs are sampled uniformly without
    replacement (``rng`` is then required). Even counts take the lower-middle
    order statistic.
    """
    X = as_matrix(data, "data")
    n = X.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs at least 2 points")
    if max_pairs < 1:
        raise ValueError("max_pairs must be >= 1")
    n_pairs = n * (n - 1) // 2
    if n_pairs <= max_pairs:
        dists = pdist(X, "euclidean")
    else:
        if rng is None:
            raise ValueError("rng is required when subsampling pairs")
        flat = np.sort(rng.choice(n_pairs, max_pairs, replace=False))
        i, j = _pair_from_index(flat, n)
        dists = np.sqrt(((X[i] - X[j]) ** 2).sum(axis=1))
    dists = np.sort(dists)
    med = float(dists[(dists.size - 1) // 2])
    if not med > 0:
        if dists[-1] == 0:
            raise ValueError("degenerate data: all sampled pairwise distances are zero")
        # more than half the pairs coincide; a zero bandwidth is unusable
        raise ValueError("degenerate data: median pairwise distance is zero")
    return med


def _pair_from_index(k: np.ndarray, n: int):
    """Map condensed (pdist-order) indices to (i, j) with i < j."""
    k = np.asarray(k, dtype=np.int64)
    # row i starts at offset i*n - i*(i+1)/2
    i = (n - 2 - np.floor(np.sqrt(-8 * k + 4 * n * (n - 1) - 7) / 2.0 - 0.5)).astype(np.int64)
    start = i * n - i * (i + 1) // 2
    j = k - start + i + 1
    return i, j
