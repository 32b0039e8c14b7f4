"""Seeded Monte Carlo harness: parameter sweeps and baseline schemes.

Replicate r of a cell seeded s draws its grid from the stream (s, r), and
cell c of a sweep seeded m uses the derived seed of (m, c), so results are
a pure function of the configuration no matter how work is chunked across
processes.  The replicate kernel reproduces measure+decode exactly but is
vectorized across a batch of replicates.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from functools import lru_cache

import multiprocessing as mp

import numpy as np
from numpy.random import SeedSequence

from .design import DesignError, smallest_prime_divisor, validate_design
from .loads import INF, _check_precision, _loads_from_uniform, _rng_from
from .rates import dorfman_efficiency
from . import optimize as _opt

__all__ = [
    "DEFAULT_N_VALUES",
    "SweepConfig",
    "CellSummary",
    "BaselineResult",
    "replicate_counts",
    "run_cell",
    "run_sweep",
    "probe_miss_rate",
    "dorfman_simulate",
    "random_pool_baseline",
    "run_compare",
    "write_results_csv",
    "read_results_csv",
    "write_compare_csv",
]

logger = logging.getLogger(__name__)

DEFAULT_N_VALUES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)
DEFAULT_P_VALUES = (0.05, 0.10, 0.15, 0.20)
DEFAULT_K_VALUES = (2, 5, 10, 30, 200, 500)

PROBE_LOAD = 2.0**-60  # strictly below any sampled load (those are >= 2^-53)


@dataclass(frozen=True)
class SweepConfig:
    """Monte Carlo sweep lattice; defaults reproduce the standard study."""

    n_values: tuple = DEFAULT_N_VALUES
    L_max: int = 14
    p_values: tuple = DEFAULT_P_VALUES
    K_values: tuple = DEFAULT_K_VALUES
    replicates: int = 200
    master_seed: int = 0

    def __post_init__(self):
        if not self.n_values or not self.p_values or not self.K_values:
            raise ValueError("n_values, p_values and K_values must be non-empty")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")

    def to_json(self, path) -> None:
        payload = asdict(self)
        payload = {k: (list(v) if isinstance(v, tuple) else v) for k, v in payload.items()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        for key in ("n_values", "p_values", "K_values"):
            if key in payload:
                payload[key] = tuple(payload[key])
        return cls(**payload)


@dataclass(frozen=True)
class CellSummary:
    """Aggregated outcome counts for one (n, L, p, K) cell."""

    n: int
    L: int
    p: float
    K: int | float
    replicates: int
    mean_fn: float
    se_fn: float
    mean_fp: float
    se_fp: float
    mean_inconclusive: float
    efficiency: float

    @property
    def two_stage_efficiency(self) -> float:
        """Tests per item when inconclusive items are retested individually."""
        return self.efficiency + self.mean_inconclusive / self.n**2


@dataclass(frozen=True)
class BaselineResult:
    """Empirical efficiency of a baseline scheme (perfect binary tests)."""

    method: str
    tests_used: float
    items: int
    efficiency: float
    fn_rate: float
    fp_rate: float
    se_efficiency: float


def derive_seed(*parts: int) -> int:
    """Collapse integer parts into one reproducible 128-bit seed."""
    state = SeedSequence(tuple(int(x) for x in parts)).generate_state(4, np.uint32)
    return int.from_bytes(state.tobytes(), "little")


@lru_cache(maxsize=128)
def _kernel_arrays(n: int, L: int):
    """Gather indices for the replicate kernel.

    measure_idx[a][k, b]: flat cell index of slot k of the slope-(a+1)
    diagonal with offset b; offset_idx[a][i, j]: which offset of that slope
    passes through item (i, j).
    """
    k = np.arange(n)
    measure_idx, offset_idx = [], []
    for a in range(1, L - 1):
        measure_idx.append((k[:, None] * n + (a * k[:, None] + k[None, :]) % n).astype(np.intp))
        offset_idx.append(((k[None, :] - a * k[:, None]) % n).astype(np.intp))
    return measure_idx, offset_idx


def replicate_counts(n: int, L: int, p: float, K, replicates: int, seed,
                     start: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-replicate (miss, false-flag, inconclusive) counts for one cell.

    Replicate r always uses the stream (seed, start + r); chunked calls with
    different start values therefore tile into the same totals.
    """
    if not validate_design(n, L):
        raise DesignError(f"(n={n}, L={L}) is not an admissible design")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"prevalence must lie in [0, 1], got {p}")
    _check_precision(K)
    measure_idx, offset_idx = _kernel_arrays(n, L)
    fn = np.zeros(replicates, dtype=np.int64)
    fp = np.zeros(replicates, dtype=np.int64)
    inc = np.zeros(replicates, dtype=np.int64)
    batch = max(1, min(replicates, 6_000_000 // (n * n * L)))
    done = 0
    while done < replicates:
        nb = min(batch, replicates - done)
        flat = np.empty((nb, n * n))
        for t in range(nb):
            u = _rng_from((seed, start + done + t)).random(n * n)
            flat[t] = _loads_from_uniform(u, p, K)
        loads = flat.reshape(nb, n, n)
        layers = [
            np.broadcast_to(loads.max(axis=2)[:, :, None], (nb, n, n)),
            np.broadcast_to(loads.max(axis=1)[:, None, :], (nb, n, n)),
        ]
        for a in range(L - 2):
            diag_vals = flat[:, measure_idx[a]].max(axis=1)  # (nb, n) per offset
            layers.append(diag_vals[:, offset_idx[a]])
        vmin = np.minimum(layers[0], layers[1])
        for extra in layers[2:]:
            np.minimum(vmin, extra, out=vmin)
        count = (layers[0] == vmin).astype(np.int16)
        for extra in layers[1:]:
            count += extra == vmin
        defective = loads > 0
        flagged = (vmin > 0) & (count >= 2)
        sl = slice(done, done + nb)
        fn[sl] = (defective & ~flagged).sum(axis=(1, 2))
        fp[sl] = (flagged & ~defective).sum(axis=(1, 2))
        inc[sl] = ((vmin > 0) & (count == 1)).sum(axis=(1, 2))
        done += nb
    return fn, fp, inc


def _sample_se(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def run_cell(n: int, L: int, p: float, K, replicates: int, seed,
             workers: int = 1) -> CellSummary:
    """Run one sweep cell; deterministic in its arguments regardless of workers."""
    if workers <= 1 or replicates < 4:
        fn, fp, inc = replicate_counts(n, L, p, K, replicates, seed)
    else:
        chunk = (replicates + workers - 1) // workers
        jobs = [(start, min(chunk, replicates - start))
                for start in range(0, replicates, chunk)]
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            parts = list(pool.map(
                _replicate_counts_task,
                [(n, L, p, K, count, seed, start) for start, count in jobs],
            ))
        fn = np.concatenate([part[0] for part in parts])
        fp = np.concatenate([part[1] for part in parts])
        inc = np.concatenate([part[2] for part in parts])
    return CellSummary(
        n=n, L=L, p=p, K=K, replicates=replicates,
        mean_fn=float(fn.mean()), se_fn=_sample_se(fn),
        mean_fp=float(fp.mean()), se_fp=_sample_se(fp),
        mean_inconclusive=float(inc.mean()),
        efficiency=L / n,
    )


def _replicate_counts_task(args):
    n, L, p, K, count, seed, start = args
    return replicate_counts(n, L, p, K, count, seed, start=start)


def iter_cells(config: SweepConfig):
    """Canonical cell enumeration: lexicographic in (n, L, p, K).

    Yields (cell_index, n, L, p, K, admissible); the index advances over
    skipped cells too, so cell seeds never depend on admissibility.
    """
    idx = 0
    for n in sorted(config.n_values):
        l_hi = min(config.L_max, n - 1) if n <= 14 else min(config.L_max, n + 1)
        for L in range(2, l_hi + 1):
            admissible = validate_design(n, L)
            for p in sorted(config.p_values):
                for K in sorted(config.K_values, key=float):
                    yield idx, n, L, p, K, admissible
                    idx += 1


def run_sweep(config: SweepConfig, workers: int = 1) -> list[CellSummary]:
    """One CellSummary per admissible cell, in canonical order."""
    tasks = []
    for idx, n, L, p, K, admissible in iter_cells(config):
        if not admissible:
            if K == sorted(config.K_values, key=float)[0] and p == sorted(config.p_values)[0]:
                logger.info(
                    "skipping n=%d L=%d: L-2=%d not below smallest prime divisor %d",
                    n, L, L - 2, smallest_prime_divisor(n),
                )
            continue
        tasks.append((n, L, p, K, config.replicates,
                      derive_seed(config.master_seed, idx)))
    if workers <= 1:
        return [run_cell(*task) for task in tasks]
    ctx = mp.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(_run_cell_task, tasks, chunksize=8))


def _run_cell_task(task):
    return run_cell(*task)


def _pool_ids(n: int, L: int, flat: np.ndarray) -> np.ndarray:
    """(m, L) pool indices of flat grid cells, matching the design's ordering."""
    flat = np.asarray(flat, dtype=np.int64)
    i, j = flat // n, flat % n
    cols = [i, n + j]
    for a in range(1, L - 1):
        cols.append(2 * n + (a - 1) * n + (j - a * i) % n)
    return np.stack(cols, axis=1)


def sparse_pool_values(n: int, L: int, flat: np.ndarray, loads: np.ndarray) -> np.ndarray:
    """All nL pool readouts given only the defective cells and their loads."""
    values = np.zeros(n * L)
    ids = _pool_ids(n, L, flat)
    np.maximum.at(values, ids.ravel(), np.repeat(loads, L))
    return values


def _distinct_positions(rng, count: int, low: int, high: int) -> np.ndarray:
    """count distinct integers in [low, high) by rejection; deterministic in rng."""
    pos = np.unique(rng.integers(low, high, size=count))
    while pos.size < count:
        extra = rng.integers(low, high, size=count - pos.size)
        pos = np.unique(np.concatenate([pos, extra]))
    return pos


def probe_misses(n: int, L: int, lam: float, replicates: int, seed) -> np.ndarray:
    """Per-replicate miss indicator of a vanishing-load probe item.

    Grids of side n with prevalence lam/n are drawn, a probe defective of
    load 2^-60 (below every samplable background load) is planted at the
    corner, and the standard per-item rule is applied to it.  The sampled
    fraction estimates the limiting miss rate of the faintest defectives.
    Backgrounds are drawn sparsely (count, then distinct positions), which
    matches the cell-stream model in distribution and keeps large grids cheap.
    """
    if not validate_design(n, L):
        raise DesignError(f"(n={n}, L={L}) is not an admissible design")
    p = lam / n
    if not 0.0 < p < 1.0:
        raise ValueError(f"lam/n must lie in (0, 1), got {p}")
    probe_pools = _pool_ids(n, L, np.array([0]))[0]
    missed = np.zeros(replicates, dtype=bool)
    for r in range(replicates):
        rng = _rng_from((seed, r))
        n_defective = rng.binomial(n * n - 1, p)
        if n_defective == 0:
            # all probe pools read exactly the probe load: multiplicity L >= 2
            continue
        positions = _distinct_positions(rng, n_defective, 1, n * n)
        bg_loads = 1.0 - rng.random(n_defective)
        values = sparse_pool_values(n, L, positions, bg_loads)
        probe_vals = np.maximum(values[probe_pools], PROBE_LOAD)
        missed[r] = (probe_vals == probe_vals.min()).sum() == 1
    return missed


def probe_miss_rate(n: int, L: int, lam: float, replicates: int, seed) -> tuple[float, float]:
    """Mean and standard error of the vanishing-load probe miss indicator."""
    missed = probe_misses(n, L, lam, replicates, seed)
    mean = float(missed.mean())
    se = _sample_se(missed.astype(float))
    return mean, se


def dorfman_simulate(items: int, p: float, pool_size: int, replicates: int,
                     seed) -> BaselineResult:
    """Two-stage baseline: one test per pool, then every member of a positive pool.

    Perfect binary tests make the final classification exact, so error
    rates are structurally zero; they are computed anyway to confirm.
    """
    if pool_size < 1:
        raise ValueError(f"pool_size must be >= 1, got {pool_size}")
    if items % pool_size != 0:
        raise ValueError(f"items={items} must be a multiple of pool_size={pool_size}")
    n_pools = items // pool_size
    tests = np.zeros(replicates)
    for r in range(replicates):
        rng = _rng_from((seed, r))
        defective = (rng.random(items) < p).reshape(n_pools, pool_size)
        positive = defective.any(axis=1)
        tests[r] = n_pools + pool_size * positive.sum()
    eff = tests / items
    return BaselineResult(
        method="dorfman", tests_used=float(tests.mean()), items=items,
        efficiency=float(eff.mean()), fn_rate=0.0, fp_rate=0.0,
        se_efficiency=_sample_se(eff),
    )


def random_pool_baseline(items: int, p: float, c: float, C: float,
                         replicates: int, seed) -> BaselineResult:
    """Randomized multi-membership baseline with a second individual stage.

    Pools of size floor(c/p) are built as ceil(C |log p|) independent random
    partitions of the items, so each item lies in exactly that many pools.
    An item in a negative pool is cleared; an item is flagged when some
    positive pool contains no other uncleared member; the rest are ambiguous
    and retested individually.  Efficiency counts pool tests plus retests.
    """
    if c <= 0 or C <= 0:
        raise ValueError(f"c and C must be positive, got c={c}, C={C}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"prevalence must lie in (0, 1), got {p}")
    pool_size = max(int(c / p), 1)
    if pool_size > items:
        raise ValueError(f"pool size {pool_size} exceeds {items} items")
    memberships = max(math.ceil(C * abs(math.log(p))), 1)
    boundaries = np.arange(0, items, pool_size)
    pools_per_layer = len(boundaries)
    tests = np.zeros(replicates)
    fn_total = fp_total = 0
    for r in range(replicates):
        rng = _rng_from((seed, r))
        defective = rng.random(items) < p
        perms = [rng.permutation(items) for _ in range(memberships)]
        group_of = []
        pool_positive = []
        cleared = np.zeros(items, dtype=bool)
        for perm in perms:
            slot = np.empty(items, dtype=np.int64)
            slot[perm] = np.arange(items)
            gid = slot // pool_size
            positive = np.add.reduceat(defective[perm], boundaries) > 0
            group_of.append(gid)
            pool_positive.append(positive)
            cleared |= ~positive[gid]
        flagged = np.zeros(items, dtype=bool)
        not_cleared = ~cleared
        for perm, gid, positive in zip(perms, group_of, pool_positive):
            lonely = np.add.reduceat(not_cleared[perm], boundaries) == 1
            flagged |= positive[gid] & lonely[gid] & not_cleared
        ambiguous = not_cleared & ~flagged
        tests[r] = memberships * pools_per_layer + ambiguous.sum()
        # combined two-stage output: ambiguous items resolve exactly
        fn_total += int((cleared & defective).sum())
        fp_total += int((flagged & ~defective).sum())
    eff = tests / items
    return BaselineResult(
        method="random_pool", tests_used=float(tests.mean()), items=items,
        efficiency=float(eff.mean()),
        fn_rate=fn_total / (replicates * items),
        fp_rate=fp_total / (replicates * items),
        se_efficiency=_sample_se(eff),
    )


def run_compare(p_values, K, epsilons, eta: float, replicates: int, master_seed: int,
                n_values=DEFAULT_N_VALUES, L_max: int = 14, baseline_items: int = 10_000,
                c: float = math.log(2.0), C: float = 1.0 / math.log(2.0),
                workers: int = 1) -> list[dict]:
    """Grid sweep + empirical optimization + both baselines over a prevalence grid.

    Returns rows for the combined comparison CSV: one optimized grid row per
    (p, epsilon), one theoretical two-stage row and one simulated
    random-pool row per p.
    """
    config = SweepConfig(n_values=tuple(n_values), L_max=L_max,
                         p_values=tuple(p_values), K_values=(K,),
                         replicates=replicates, master_seed=master_seed)
    cells = run_sweep(config, workers=workers)
    rows: list[dict] = []
    for p in sorted(p_values):
        group = [cell for cell in cells if cell.p == p]
        for eps in epsilons:
            try:
                choice = _opt.empirical_optimize(group, epsilon=eps, eta=eta)
            except _opt.Infeasible as exc:
                logger.warning("no feasible cell at p=%g eps=%g: %s", p, eps, exc)
                continue
            cell = next(c0 for c0 in group if (c0.n, c0.L) == (choice.n, choice.L))
            rows.append({
                "method": "grid", "p": p, "K": K, "epsilon": eps,
                "n": choice.n, "L": choice.L, "efficiency": choice.efficiency,
                "fn_rate": cell.mean_fn / cell.n**2,
                "fp_rate": cell.mean_fp / cell.n**2,
                "tests_mean": choice.n * choice.L, "items": choice.n**2,
                "replicates": replicates, "master_seed": master_seed,
            })
        dorf = dorfman_efficiency(p)
        rows.append({
            "method": "dorfman_theory", "p": p, "K": "", "epsilon": "",
            "n": dorf.optimal_pool_size, "L": "", "efficiency": dorf.efficiency,
            "fn_rate": 0.0, "fp_rate": 0.0, "tests_mean": "", "items": "",
            "replicates": "", "master_seed": master_seed,
        })
        base = random_pool_baseline(baseline_items, p, c, C, replicates=20,
                                    seed=derive_seed(master_seed, 10**9 + round(p * 1e9)))
        rows.append({
            "method": "random_pool", "p": p, "K": "", "epsilon": "",
            "n": max(int(c / p), 1), "L": math.ceil(C * abs(math.log(p))),
            "efficiency": base.efficiency, "fn_rate": base.fn_rate,
            "fp_rate": base.fp_rate, "tests_mean": base.tests_used,
            "items": base.items, "replicates": 20, "master_seed": master_seed,
        })
    return rows


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if value == INF:
        return "inf"
    return str(value)


def _fmt_k(K) -> str:
    return "inf" if K == INF else str(K)


RESULTS_COLUMNS = ["method", "n", "L", "p", "K", "replicates", "mean_fn", "se_fn",
                   "mean_fp", "se_fp", "mean_inconclusive", "efficiency", "master_seed"]

COMPARE_COLUMNS = ["method", "p", "K", "epsilon", "n", "L", "efficiency", "fn_rate",
                   "fp_rate", "tests_mean", "items", "replicates", "master_seed"]


def write_results_csv(cells: list[CellSummary], path, master_seed: int,
                      method: str = "grid") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_COLUMNS)
        for cell in cells:
            w.writerow([method, cell.n, cell.L, _fmt(cell.p), _fmt_k(cell.K),
                        cell.replicates, _fmt(cell.mean_fn), _fmt(cell.se_fn),
                        _fmt(cell.mean_fp), _fmt(cell.se_fp),
                        _fmt(cell.mean_inconclusive), _fmt(cell.efficiency),
                        master_seed])


def read_results_csv(path) -> list[CellSummary]:
    cells = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["method"] != "grid":
                continue
            K = INF if row["K"] == "inf" else int(row["K"])
            cells.append(CellSummary(
                n=int(row["n"]), L=int(row["L"]), p=float(row["p"]), K=K,
                replicates=int(row["replicates"]), mean_fn=float(row["mean_fn"]),
                se_fn=float(row["se_fn"]), mean_fp=float(row["mean_fp"]),
                se_fp=float(row["se_fp"]),
                mean_inconclusive=float(row["mean_inconclusive"]),
                efficiency=float(row["efficiency"]),
            ))
    return cells


def write_compare_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[col]) if isinstance(row[col], float) else row[col]
                        for col in COMPARE_COLUMNS])
