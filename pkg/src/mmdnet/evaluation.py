"""Parzen-window scoring of generated samples and learning-curve summaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .core import DimensionError, Rng, as_matrix

DEFAULT_GRID = tuple(np.logspace(-2, 0, 10))


@dataclass
class KdeConfig:
    bandwidth: float | str = "select"
    bandwidth_grid: tuple[float, ...] = DEFAULT_GRID
    validation_fraction: float = 0.5

    def __post_init__(self):
        if self.bandwidth == "select":
            if not self.bandwidth_grid:
                raise ValueError("bandwidth_grid must be nonempty when selecting")
        elif not float(self.bandwidth) > 0:
            raise ValueError("bandwidth must be positive or 'select'")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in (0, 1)")


def kde_log_densities(generated, test, sigma: float) -> np.ndarray:
    """Log density of each test row under an isotropic Gaussian mixture
    centred on the generated rows."""
    Y = as_matrix(generated, "generated")
    T = as_matrix(test, "test")
    if Y.shape[0] < 1:
        raise ValueError("need at least one generated point")
    if T.shape[0] < 1:
        raise ValueError("test set is empty")
    if Y.shape[1] != T.shape[1]:
        raise DimensionError(f"generated dimension {Y.shape[1]} != test dimension {T.shape[1]}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d = Y.shape[1]
    sq = cdist(T, Y, "sqeuclidean")
    log_norm = -0.5 * d * np.log(2 * np.pi * sigma**2)
    return logsumexp(-sq / (2 * sigma**2), axis=1) - np.log(Y.shape[0]) + log_norm


def kde_mean_log_density(generated, test, sigma: float) -> float:
    return float(kde_log_densities(generated, test, sigma).mean())


def kde_select_bandwidth(generated, validation, grid) -> float:
    """Grid bandwidth with the highest validation score; ties go to the smallest."""
    grid = sorted(set(float(s) for s in grid))
    if not grid:
        raise ValueError("bandwidth grid is empty")
    scores = np.array([kde_mean_log_density(generated, validation, s) for s in grid])
    if not np.any(np.isfinite(scores)):
        raise ValueError("every candidate bandwidth gives a score of -inf")
    scores[~np.isfinite(scores)] = -np.inf
    return grid[int(np.argmax(scores))]


def bootstrap_se(values, rng: Rng, n_boot: int = 1000) -> float:
    values = np.asarray(values, dtype=np.float64)
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    return float(values[idx].mean(axis=1).std(ddof=1))


@dataclass
class ScoreReport:
    score: float
    stderr: float
    bandwidth: float
    m_generated: int
    n_test: int
    extra: dict = field(default_factory=dict)

    def format(self) -> str:
        lines = [
            f"score: {self.score:.6f}",
            f"stderr: {self.stderr:.6f}",
            f"bandwidth: {self.bandwidth!r}",
            f"m_generated: {self.m_generated}",
            f"n_test: {self.n_test}",
        ]
        lines += [f"{k}: {v}" for k, v in self.extra.items()]
        return "\n".join(lines) + "\n"


def score_samples(generated, validation, test, cfg: KdeConfig, rng: Rng, n_boot: int = 1000) -> ScoreReport:
    """Select a bandwidth on ``validation`` (unless fixed), then score ``test``."""
    if cfg.bandwidth == "select":
        sigma = kde_select_bandwidth(generated, validation, cfg.bandwidth_grid)
    else:
        sigma = float(cfg.bandwidth)
    logp = kde_log_densities(generated, test, sigma)
    return ScoreReport(
        float(logp.mean()), bootstrap_se(logp, rng, n_boot), sigma,
        as_matrix(generated).shape[0], logp.size,
    )


@dataclass(frozen=True)
class CurveSummary:
    iterations: np.ndarray
    smoothed: np.ndarray
    minimum: float
    argmin: int
    final: float


def moving_average(values, window: int) -> np.ndarray:
    """Trailing means over full windows (length ``len(values) - window + 1``)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    v = np.asarray(values, dtype=np.float64)
    if v.size < window:
        return np.array([])
    return np.lib.stride_tricks.sliding_window_view(v, window).mean(axis=1)


def curve_summarize(report, window: int) -> CurveSummary:
    costs = report.costs
    its = report.iterations
    sm = moving_average(costs, window)
    if costs.size == 0:
        return CurveSummary(its, sm, float("nan"), -1, float("nan"))
    k = int(np.argmin(costs))
    return CurveSummary(its[window - 1:], sm, float(costs[k]), int(its[k]), float(costs[-1]))
