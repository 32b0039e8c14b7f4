"""Closed-form error-rate bounds and benchmark efficiencies.

All *_bound functions evaluate proven upper bounds, not exact rates; names
carry the _bound suffix wherever only an inequality holds.  Underflowing
powers are left to flush to 0, which is the correct clamp for these
non-negative products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .loads import INF, _check_precision

__all__ = [
    "NumericError",
    "RateBounds",
    "DorfmanResult",
    "pool_max_cdf",
    "fn_bound",
    "fp_bound",
    "fnr_bound",
    "fpr_bound",
    "np_zero_equivalents",
    "poisson_fnr",
    "poisson_fpr_bound",
    "dorfman_efficiency",
]


class NumericError(RuntimeError):
    """Raised when a numerical routine cannot reach its accuracy target."""


@dataclass(frozen=True)
class RateBounds:
    """A pair of rate bounds with the regime they were computed in."""

    fnr_bound: float
    fpr_bound: float
    regime: str  # "exact" | "np_to_zero" | "poisson"
    inputs: dict


@dataclass(frozen=True)
class DorfmanResult:
    """Optimal two-stage pool size and the efficiency it achieves."""

    optimal_pool_size: int
    efficiency: float
    bracketed: bool  # False when the objective is still decreasing at n_max


def _check_domain(n: int, p: float, x: float | np.ndarray) -> None:
    if n < 1:
        raise ValueError(f"pool size n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"prevalence must lie in [0, 1], got {p}")
    if np.any((np.asarray(x) < 0) | (np.asarray(x) > 1)):
        raise ValueError("load level x must lie in [0, 1]")


def pool_max_cdf(n: int, p: float, x):
    """P(no other member of an n-item pool has load above x): (1 - p(1-x))^(n-1).

    Increasing in x, decreasing in p; equals 1 at x = 1.
    """
    _check_domain(n, p, x)
    return (1.0 - p * (1.0 - np.asarray(x, dtype=float))) ** (n - 1)


def fn_bound(x, n: int, L: int, p: float):
    """Upper bound on the miss probability of a defective item with load x."""
    g = pool_max_cdf(n, p, x)
    return L * (1.0 - g) ** (L - 1)


def fp_bound(x, n: int, L: int, p: float, K) -> float:
    """Upper bound on the probability a healthy item is flagged at level x = k/K.

    Zero for infinite precision: with continuous loads two pools tie with
    probability zero.
    """
    _check_precision(K)
    if K == INF:
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
    g = pool_max_cdf(n, p, x)
    return 0.5 * L * (L - 1) * (n * p / K) ** 2 * g**2 * (1.0 - g) ** (L - 2)


def fnr_bound(n: int, L: int, p: float, K) -> float:
    """Bound on the false-negative rate per item: p * E[miss bound at a uniform level].

    Finite K averages the per-level bound over the K levels; infinite K
    integrates it over (0, 1] by adaptive quadrature (abs tol 1e-10).
    """
    _check_precision(K)
    if p == 0.0:
        return 0.0
    if K == INF:
        val, err = quad(lambda x: fn_bound(x, n, L, p), 0.0, 1.0,
                        epsabs=1e-10, epsrel=1e-12, limit=200)
        if err > 1e-8 * max(abs(val), 1.0):
            raise NumericError(
                f"miss-rate quadrature did not converge: value={val!r}, abserr={err!r}"
            )
        return p * val
    k = np.arange(1, K + 1, dtype=float)
    return p * float(np.mean(fn_bound(k / K, n, L, p)))


def fpr_bound(n: int, L: int, p: float, K) -> float:
    """Bound on the false-positive rate per item: (1-p) * sum of per-level bounds."""
    _check_precision(K)
    if p == 0.0 or K == INF:
        return 0.0
    k = np.arange(1, K + 1, dtype=float)
    return (1.0 - p) * float(np.sum(fp_bound(k / K, n, L, p, K)))


def np_zero_equivalents(n: int, L: int, p: float, K) -> tuple[float, float]:
    """Leading-order rate equivalents in the sparse regime np -> 0.

    Returns (L*p*(np)^(L-1), (L(L-1)/2K)*(np)^L); these are equivalents of
    the worst-case (level-0) bounds, so their exact ratio is 2K/((L-1)n).
    The caller is responsible for np actually being small.
    """
    _check_precision(K)
    mean_load = n * p
    fnr_eq = L * p * mean_load ** (L - 1)
    fpr_eq = 0.0 if K == INF else 0.5 * L * (L - 1) / K * mean_load**L
    return fnr_eq, fpr_eq


def poisson_fnr(lam: float, L: int, K) -> float:
    """Limiting worst-case miss rate per defective when np -> lam > 0.

    Exact limit for K=INF: (1 + (L-1)e^-lam)(1 - e^-lam)^(L-1), the miss
    probability of a vanishing-load defective.  For finite K only the upper
    bound L(1 - e^-lam)^(L-1) is available and that bound is returned.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    _check_precision(K)
    q = np.exp(-lam)
    if K == INF:
        return float((1.0 + (L - 1) * q) * (1.0 - q) ** (L - 1))
    return float(L * (1.0 - q) ** (L - 1))


def poisson_fpr_bound(lam: float, L: int, K) -> float:
    """Limiting false-positive rate bound when np -> lam: L(L-1)/(2K) (1-e^-lam)^(L-2).

    Zero for K=INF, and zero for L < 2 where no pair of pools exists.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    _check_precision(K)
    if K == INF or L < 2:
        return 0.0
    return float(0.5 * L * (L - 1) / K * (1.0 - np.exp(-lam)) ** (L - 2))


def dorfman_efficiency(p: float, n_max: int = 1000) -> DorfmanResult:
    """Exhaustive minimization of the two-stage testing cost per item.

    Pool size n costs 1 test plus n retests when the pool is positive, so
    the per-item cost is 1/n + 1 - (1-p)^n; scan n = 1..n_max.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"prevalence must lie in (0, 1), got {p}")
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    sizes = np.arange(1, n_max + 1, dtype=float)
    objective = 1.0 / sizes + 1.0 - (1.0 - p) ** sizes
    best = int(np.argmin(objective))
    return DorfmanResult(
        optimal_pool_size=best + 1,
        efficiency=float(objective[best]),
        bracketed=best + 1 < n_max,
    )
