"""Estimation-error bounds for empirical MMD minimization.

The absolute constants ``C_p`` in the rate are unknown; they default to 1,
so these calculators expose scaling in M, delta and the fat-shattering
parameters rather than certified numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Rng
from .kernels import Family, KernelSpec
from .mmd import mmd_u_squared, population_mmd_gaussian_oracle


@dataclass(frozen=True)
class BoundInputs:
    p1: int
    gamma1: float
    p2: int
    gamma2: float
    delta: float
    M: int
    K: float = 1.0
    C_p1: float = 1.0
    C_p2: float = 1.0

    def __post_init__(self):
        if self.p1 < 1 or self.p2 < 1:
            raise ValueError("p1, p2 must be positive integers")
        if self.gamma1 < 1 or self.gamma2 < 1:
            raise ValueError("gamma1, gamma2 must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if not (self.K > 0 and self.C_p1 > 0 and self.C_p2 > 0):
            raise ValueError("K and the rate constants must be positive")


def rate(p: int, gamma: float, M: float, C_p: float = 1.0) -> float:
    """``C_p sqrt(gamma)`` times M^-1/2 (p<2), M^-1/2 log^{3/2} M (p=2), M^-1/p (p>2)."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if M < 1:
        raise ValueError("M must be >= 1")
    scale = C_p * math.sqrt(gamma)
    if p < 2:
        return scale * M**-0.5
    if p == 2:
        if M < 2:
            raise ValueError("the p = 2 rate needs M >= 2")
        return scale * M**-0.5 * math.log(M) ** 1.5
    return scale * M ** (-1.0 / p)


def epsilon_bound(b: BoundInputs) -> float:
    """Excess population MMD^2 that holds with probability at least 1 - delta.

    The second rate term is evaluated at M - 1.
    """
    return (
        rate(b.p1, b.gamma1, b.M, b.C_p1)
        + rate(b.p2, b.gamma2, b.M - 1, b.C_p2)
        + 12.0 * b.M**-0.5 * math.sqrt(math.log(2.0 / b.delta))
    )


def theorem3_tail(eps: float, M: int, K: float = 1.0) -> float:
    """``min(1, 2 exp(-eps^2 M / (16 K^2)))``: tail of |MMD_u^2 - MMD^2| > eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if M < 2 or not K > 0:
        raise ValueError("need M >= 2 and K > 0")
    return min(1.0, 2.0 * math.exp(-(eps**2) * M / (16.0 * K**2)))


def finite_theta_bound(T: int, eps: float, M: int, K: float = 1.0) -> float:
    """Failure probability ``(T+1) * tail`` for a parameter set of size T."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return min(1.0, (T + 1) * theorem3_tail(eps, M, K))


def finite_theta_epsilon(T: int, delta: float, M: int, K: float = 1.0) -> float:
    """Published corollary: ``8K sqrt(log(2(T+1)/delta) / M)``.

    Conservative: the failure probability at this eps is well below delta.
    """
    _check_inverse_args(T, delta, M, K)
    return 8.0 * K * math.sqrt(math.log(2.0 * (T + 1) / delta) / M)


def finite_theta_epsilon_exact(T: int, delta: float, M: int, K: float = 1.0) -> float:
    """The eps at which ``finite_theta_bound`` equals delta exactly."""
    _check_inverse_args(T, delta, M, K)
    return 4.0 * K * math.sqrt(math.log(2.0 * (T + 1) / delta) / M)


def _check_inverse_args(T, delta, M, K):
    if T < 1 or M < 1 or not K > 0:
        raise ValueError("need T >= 1, M >= 1, K > 0")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class GaussianPair:
    """Two isotropic Gaussians with per-coordinate mean and variance."""
    mean1: float = 0.0
    var1: float = 1.0
    mean2: float = 0.0
    var2: float = 1.0
    dim: int = 1

    def population_mmd(self, kspec: KernelSpec) -> float:
        return population_mmd_gaussian_oracle(kspec, self.mean1, self.var1, self.mean2, self.var2, self.dim)

    def sample(self, rng: Rng, n: int, m: int):
        X = self.mean1 + math.sqrt(self.var1) * rng.standard_normal((n, self.dim))
        Y = self.mean2 + math.sqrt(self.var2) * rng.standard_normal((m, self.dim))
        return X, Y


@dataclass(frozen=True)
class ValidationRow:
    M: int
    eps: float
    analytic: float
    frequency: float
    trials: int

    @property
    def allowance(self) -> float:
        """Analytic tail plus three binomial standard errors."""
        d = self.analytic
        return d + 3.0 * math.sqrt(d * (1.0 - d) / self.trials)

    @property
    def ok(self) -> bool:
        return self.frequency <= self.allowance


def validate_theorem3(
    pair: GaussianPair,
    kspec: KernelSpec,
    M: int,
    eps: float | Sequence[float],
    trials: int,
    rng: Rng,
) -> list[ValidationRow]:
    """Empirical frequency of ``|MMD_u^2 - MMD^2| > eps`` with N = M.

    The same draws are reused for every eps, so frequencies are
    nonincreasing in eps. Each trial has its own child stream.
    """
    if kspec.family is not Family.RBF or not isinstance(pair, GaussianPair):
        raise NotImplementedError("validation needs an RBF kernel and a Gaussian pair")
    if trials < 100:
        raise ValueError("trials must be >= 100")
    eps_list = [float(eps)] if np.isscalar(eps) else [float(e) for e in eps]
    truth = pair.population_mmd(kspec)
    dev = np.empty(trials)
    for t, child in enumerate(rng.spawn(trials)):
        X, Y = pair.sample(child, M, M)
        dev[t] = abs(mmd_u_squared(kspec, X, Y).value - truth)
    return [
        ValidationRow(M, e, theorem3_tail(e, M, 1.0), float(np.mean(dev > e)), trials)
        for e in eps_list
    ]
