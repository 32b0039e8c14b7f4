"""Sampling of defectiveness indicators and item loads.

Each grid cell is independently defective with probability p; a defective
cell carries a load drawn uniformly from {1/K, ..., 1} for finite precision
K, or from (0, 1] for infinite precision.  Healthy cells have load 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

__all__ = ["INF", "LoadParams", "LoadGrid", "quantize_load", "sample_load_grid"]

INF = math.inf  # sentinel for infinite precision (continuous loads)


def _check_precision(K) -> None:
    if K == INF:
        return
    if not (isinstance(K, (int, np.integer)) and K >= 1):
        raise ValueError(f"precision K must be a positive integer or INF, got {K!r}")


@dataclass(frozen=True)
class LoadParams:
    """Model parameters: prevalence p, precision K (int or INF), grid side n."""

    p: float
    K: int | float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"prevalence must lie in [0, 1], got {self.p}")
        _check_precision(self.K)
        if self.n < 1:
            raise ValueError(f"grid side must be >= 1, got {self.n}")


@dataclass
class LoadGrid:
    """An n x n array of loads; a cell is defective iff its load is > 0."""

    n: int
    loads: np.ndarray
    params: LoadParams | None = None
    seed: int | None = None

    def defectives(self) -> np.ndarray:
        return self.loads > 0

    def to_csv(self, path) -> None:
        """Nonzero entries as (row, col, load) with a metadata comment line."""
        p = self.params
        k_str = "inf" if p is not None and p.K == INF else ("" if p is None else str(p.K))
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(
                f"# n={self.n},p={'' if p is None else format(p.p, '.17g')},"
                f"K={k_str},seed={'' if self.seed is None else self.seed}\n"
            )
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "load"])
            for i, j in zip(*np.nonzero(self.loads)):
                w.writerow([int(i), int(j), format(self.loads[i, j], ".17g")])

    @classmethod
    def from_csv(cls, path) -> "LoadGrid":
        with open(path, newline="", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("# "):
                raise ValueError(f"missing metadata line in {path}")
            fields = dict(item.split("=", 1) for item in header[2:].split(","))
            n = int(fields["n"])
            params = None
            if fields.get("p") and fields.get("K"):
                K = INF if fields["K"] == "inf" else int(fields["K"])
                params = LoadParams(p=float(fields["p"]), K=K, n=n)
            seed = int(fields["seed"]) if fields.get("seed") else None
            loads = np.zeros((n, n))
            for row in csv.DictReader(fh):
                loads[int(row["row"]), int(row["col"])] = float(row["load"])
            return cls(n=n, loads=loads, params=params, seed=seed)


def quantize_load(u: float, K: int | float) -> float:
    """Map a uniform draw u in (0, 1] to the load scale: ceil(K*u)/K, or u itself for K=INF."""
    if not 0.0 < u <= 1.0:
        raise ValueError(f"uniform draw must lie in (0, 1], got {u}")
    _check_precision(K)
    if K == INF:
        return u
    return math.ceil(K * u) / K


def _rng_from(entropy) -> Generator:
    """Counter-based generator; cell (i, j) always reads word i*n+j of the stream."""
    return Generator(Philox(SeedSequence(entropy)))


def _loads_from_uniform(u: np.ndarray, p: float, K: int | float) -> np.ndarray:
    """One uniform word per cell: defective iff u < p, load quantize(1 - u/p).

    Conditionally on u < p, 1 - u/p is uniform on (0, 1], so finite and
    infinite precision share the quantization path.
    """
    if p == 0.0:
        return np.zeros_like(u)
    defective = u < p
    rescaled = np.where(defective, 1.0 - u / p, 1.0)
    if K != INF:
        rescaled = np.ceil(K * rescaled) / K
    return np.where(defective, rescaled, 0.0)


def sample_load_grid(params: LoadParams, seed) -> LoadGrid:
    """Sample an n x n load grid, reproducibly in (params, seed).

    seed may be an integer or any SeedSequence-compatible entropy (the
    simulation harness passes (cell_seed, replicate) tuples).  The grid is a
    pure function of its inputs: the Philox word at counter position i*n+j
    decides cell (i, j), independent of fill order.
    """
    n = params.n
    u = _rng_from(seed).random(n * n)
    loads = _loads_from_uniform(u, params.p, params.K).reshape(n, n)
    return LoadGrid(n=n, loads=loads, params=params,
                    seed=seed if isinstance(seed, int) else None)
