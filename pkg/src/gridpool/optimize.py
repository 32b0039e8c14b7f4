"""Selection of (n, L) under error-rate tolerances.

Three closed-form regimes are supported (fixed tolerances, vanishing
per-grid budgets, and the large-grid optimum at intensity log 2) plus an
empirical optimizer over Monte Carlo sweep results.  Closed-form targets
come from asymptotic equivalents, so they are calibrated for small
prevalence; the chosen integer is the nearest admissible grid side and the
caller can re-check the exact bounds afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from .design import smallest_prime_divisor, _is_prime
from .loads import INF, _check_precision

__all__ = [
    "Infeasible",
    "ToleranceSpec",
    "DesignChoice",
    "choose_n_fixed",
    "efficiency_fixed",
    "choose_n_vanishing",
    "efficiency_vanishing_formula",
    "optimal_design_asymptotic",
    "optimal_lambda",
    "empirical_optimize",
]

LOG2 = math.log(2.0)


class Infeasible(ValueError):
    """No admissible (n, L) satisfies the requested tolerances."""


@dataclass(frozen=True)
class ToleranceSpec:
    """Error tolerances; only the fields of the regime in use are consulted.

    epsilon: max miss fraction among defectives; eta: max flag fraction
    among healthy items; alpha / beta: expected per-grid counts of misses
    and false flags for the vanishing regime.
    """

    epsilon: float | None = None
    eta: float | None = None
    alpha: float | None = None
    beta: float | None = None

    def require(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value is None or not 0.0 < value < 1.0:
                raise ValueError(f"tolerance {name} must lie in (0, 1), got {value!r}")


@dataclass(frozen=True)
class DesignChoice:
    """A chosen admissible design and its efficiency L/n."""

    n: int
    L: int
    efficiency: float
    regime: str  # "fixed" | "vanishing" | "asymptotic" | "empirical"
    lam: float | None = None  # the product n*p where meaningful
    theoretical_efficiency: float | None = None
    two_stage_efficiency: float | None = None


def _admissible(n: int, L: int) -> bool:
    return n >= max(2, L - 1) and smallest_prime_divisor(n) > L - 2


def _prefer_prime(target: float, chosen: int, L: int, candidates) -> int:
    """Swap in a prime candidate when one lies within 10% of the real target."""
    primes = [c for c in candidates if _is_prime(c) and abs(c - target) <= 0.1 * target]
    if primes and not _is_prime(chosen):
        return min(primes, key=lambda c: (abs(c - target), c))
    return chosen


def _round_down_admissible(target: float, L: int) -> int:
    """Largest admissible integer <= target (upward scan as a fallback).

    Prefers a prime within 10% of the target: primes are admissible for
    every L and keep a margin for later changes of L.
    """
    lo = max(2, L - 1)
    if target < lo:
        raise Infeasible(
            f"target grid side {target:.3g} is below the minimum {lo} required for L={L}"
        )
    nf = math.floor(target)
    down = [m for m in range(nf, lo - 1, -1) if _admissible(m, L)]
    if down:
        return _prefer_prime(target, down[0], L, down)
    m = nf + 1
    while not _admissible(m, L):
        m += 1
    return m


def _nearest_admissible(target: float, L: int) -> int:
    lo = max(2, L - 1)
    if target < lo - 0.5:
        raise Infeasible(
            f"target grid side {target:.3g} is below the minimum {lo} required for L={L}"
        )
    width = 4
    while True:
        window = [m for m in range(max(lo, math.floor(target) - width),
                                   math.ceil(target) + width + 1)
                  if _admissible(m, L)]
        if window:
            nearest = min(window, key=lambda m: (abs(m - target), m))
            return _prefer_prime(target, nearest, L, window)
        width *= 2
        if width > 100 * (target + L + 2):
            raise Infeasible(f"no admissible grid side near {target:.3g} for L={L}")


def choose_n_fixed(p: float, K, L: int, spec: ToleranceSpec) -> DesignChoice:
    """Largest admissible grid side meeting fixed tolerances epsilon and eta.

    Target: n ~ p^-1 min((eps/L)^(1/(L-1)), (2K eta/L^2)^(1/L)); the flag
    term drops out at infinite precision.
    """
    _check_args(p, K, L)
    spec.require("epsilon") if K == INF else spec.require("epsilon", "eta")
    miss_term = (spec.epsilon / L) ** (1.0 / (L - 1))
    if K == INF:
        target = miss_term / p
    else:
        flag_term = (2.0 * K * spec.eta / L**2) ** (1.0 / L)
        target = min(miss_term, flag_term) / p
    n = _round_down_admissible(target, L)
    return DesignChoice(n=n, L=L, efficiency=L / n, regime="fixed", lam=n * p,
                        theoretical_efficiency=efficiency_fixed(p, K, L, spec))


def efficiency_fixed(p: float, K, L: int, spec: ToleranceSpec) -> float:
    """Closed-form efficiency of the fixed-tolerance choice; linear in p."""
    _check_args(p, K, L)
    spec.require("epsilon") if K == INF else spec.require("epsilon", "eta")
    miss = (L**L / spec.epsilon) ** (1.0 / (L - 1))
    if K == INF:
        return p * miss
    flag = (L ** (L + 2) / (2.0 * K * spec.eta)) ** (1.0 / L)
    return p * max(miss, flag)


def choose_n_vanishing(p: float, K, L: int, spec: ToleranceSpec) -> DesignChoice:
    """Grid side for per-grid budgets: about alpha expected misses and beta false flags.

    n = min((alpha/(L p^L))^(1/(L+1)), (2K beta/(L(L-1) p^L))^(1/(L+2))),
    rounded down to admissible.
    """
    _check_args(p, K, L)
    spec.require("alpha") if K == INF else spec.require("alpha", "beta")
    n1 = (spec.alpha / (L * p**L)) ** (1.0 / (L + 1))
    if K == INF:
        target = n1
    else:
        n2 = (2.0 * K * spec.beta / (L * (L - 1) * p**L)) ** (1.0 / (L + 2))
        target = min(n1, n2)
    n = _round_down_admissible(target, L)
    return DesignChoice(n=n, L=L, efficiency=L / n, regime="vanishing", lam=n * p,
                        theoretical_efficiency=efficiency_vanishing_formula(p, K, L, spec))


def efficiency_vanishing_formula(p: float, K, L: int, spec: ToleranceSpec) -> float:
    """Reference efficiency for the vanishing regime, a power of p as p -> 0."""
    _check_args(p, K, L)
    spec.require("alpha") if K == INF else spec.require("alpha", "beta")
    miss = p ** (L / (L + 1)) * (L ** (L + 2) / spec.alpha) ** (1.0 / (L + 1))
    if K == INF:
        return miss
    flag = p ** (L / (L + 2)) * (L * (L - 1) / (2.0 * K * spec.beta)) ** (1.0 / (L + 2))
    return max(miss, flag)


def optimal_lambda(upper: float = 5.0) -> tuple[float, float]:
    """Maximizer of lam * -log(1 - e^-lam) on (0, upper], by scan plus refinement.

    The maximum sits at log 2 with value (log 2)^2; this routine finds it
    numerically rather than assuming it.
    """
    h = lambda lam: -lam * math.log(1.0 - math.exp(-lam))
    grid = [upper * (k + 1) / 2000 for k in range(2000)]
    best = max(grid, key=h)
    lo, hi = max(best - upper / 2000, 1e-9), best + upper / 2000
    res = minimize_scalar(lambda lam: -h(lam), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x), float(h(res.x))


def optimal_design_asymptotic(p: float, epsilon: float) -> DesignChoice:
    """Jointly pick (n, L) for small p at infinite precision.

    Grid side targets log(2)/p; the directions count is ceil(-log eps/log 2).
    Reports the limiting efficiency p(-log eps)/(log 2)^2 and the two-stage
    variant where inconclusive items are retested individually, adding eps
    tests per item.
    """
    if not 0.0 < p < 0.5:
        raise ValueError(f"prevalence must lie in (0, 0.5), got {p}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    L = math.ceil(-math.log(epsilon) / LOG2)
    L = max(L, 2)
    target = LOG2 / p
    if L > math.floor(target + 0.5) + 1:
        raise Infeasible(
            f"requested miss tolerance needs L={L} directions but the grid side "
            f"target {target:.3g} supports at most L=n+1; prevalence too large"
        )
    n = _nearest_admissible(target, L)
    e_star = p * (-math.log(epsilon)) / LOG2**2
    return DesignChoice(n=n, L=L, efficiency=L / n, regime="asymptotic", lam=n * p,
                        theoretical_efficiency=e_star,
                        two_stage_efficiency=e_star + epsilon)


def empirical_optimize(cells, epsilon: float, eta: float) -> DesignChoice:
    """Pick the most efficient simulated cell meeting the empirical tolerances.

    cells is a sequence of CellSummary-like records sharing one (p, K):
    discard cells with mean false-flag count >= eta (1-p) n^2, then cells
    with mean miss count >= epsilon p n^2, then minimize L/n.  Ties break
    to smaller L, then larger n (invented; results rarely tie).
    """
    cells = list(cells)
    if not cells:
        raise Infeasible("empty results table")
    pk = {(c.p, c.K) for c in cells}
    if len(pk) != 1:
        raise ValueError(f"cells mix several (p, K) settings: {sorted(pk)}")
    (p, _K), = pk
    pass_fp = [c for c in cells if c.mean_fp < eta * (1.0 - p) * c.n**2]
    if not pass_fp:
        raise Infeasible(
            f"every cell exceeds the false-positive budget eta={eta:g}"
        )
    feasible = [c for c in pass_fp if c.mean_fn < epsilon * p * c.n**2]
    if not feasible:
        raise Infeasible(
            f"every cell within the eta budget exceeds the miss budget epsilon={epsilon:g}"
        )
    best = min(feasible, key=lambda c: (c.L / c.n, c.L, -c.n))
    return DesignChoice(n=best.n, L=best.L, efficiency=best.L / best.n,
                        regime="empirical", lam=best.n * p)


def _check_args(p: float, K, L: int) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"prevalence must lie in (0, 1), got {p}")
    _check_precision(K)
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
