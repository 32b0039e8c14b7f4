"""Construction and certification of grid multipools.

Items live on an n x n grid (0-based coordinates).  Pools are the n lines,
the n columns, and n wrapped diagonals per slope a = 1..L-2, so that every
item belongs to exactly L pools and any two pools share at most one item.
The family is a valid multipool exactly when L-2 is smaller than the
smallest prime divisor of n (columns behave as slope-0 diagonals, and two
diagonals of slopes a != a' meet once per offset pair iff gcd(a'-a, n) = 1).
"""

from __future__ import annotations

import csv
from functools import cached_property

import numpy as np

__all__ = [
    "DesignError",
    "GridDesign",
    "smallest_prime_divisor",
    "validate_design",
    "build_design",
    "certify_design",
    "double_crossing_pair",
]


class DesignError(ValueError):
    """Raised when a pool family violates the multipool requirements."""


def smallest_prime_divisor(n: int) -> int:
    """Least prime dividing n (n itself when n is prime). Requires n >= 2."""
    if n < 2:
        raise ValueError(f"smallest_prime_divisor requires n >= 2, got {n}")
    d = 2
    while d * d <= n:
        if n % d == 0:
            return d
        d += 1
    return n


def _is_prime(n: int) -> bool:
    return n >= 2 and smallest_prime_divisor(n) == n


def validate_design(n: int, L: int) -> bool:
    """True iff the line/column/diagonal family with parameters (n, L) is a multipool.

    Requires L-2 < smallest_prime_divisor(n); additionally only one line
    family, one column family and n-1 distinct slopes exist, so L <= n+1.
    """
    if n < 2 or L < 2:
        raise ValueError(f"need n >= 2 and L >= 2, got n={n}, L={L}")
    return (L - 2) < smallest_prime_divisor(n) and L <= n + 1


class GridDesign:
    """A family of nL pools of n items over the n x n grid.

    Pool order: indices 0..n-1 are the lines, n..2n-1 the columns, then one
    block of n offsets per diagonal slope a = 1..L-2 in increasing slope.
    The membership is stored as (nL, n) row/column index arrays; set views
    and per-item pool lists are derived lazily.
    """

    def __init__(self, n: int, L: int, row_idx: np.ndarray, col_idx: np.ndarray,
                 meta: list[tuple[str, int | None, int]]):
        self.n = int(n)
        self.L = int(L)
        self.row_idx = row_idx
        self.col_idx = col_idx
        self.meta = meta  # per pool: (kind, slope or None, offset)

    @property
    def n_pools(self) -> int:
        return self.n * self.L

    @cached_property
    def pools(self) -> list[frozenset[tuple[int, int]]]:
        """Pools as frozensets of (row, col) pairs, in pool-index order."""
        return [
            frozenset(zip(self.row_idx[k].tolist(), self.col_idx[k].tolist()))
            for k in range(self.n_pools)
        ]

    @cached_property
    def flat_item_pools(self) -> np.ndarray:
        """(n*n, L) array: sorted pool indices containing each flat item row*n+col."""
        n = self.n
        flat = (self.row_idx * n + self.col_idx).ravel()
        pool_of_entry = np.repeat(np.arange(self.n_pools, dtype=np.int32), n)
        counts = np.bincount(flat, minlength=n * n)
        if counts.min() != self.L or counts.max() != self.L:
            raise DesignError(
                f"items belong to between {counts.min()} and {counts.max()} pools, expected {self.L}"
            )
        order = np.argsort(flat, kind="stable")  # stable keeps pool index ascending
        return pool_of_entry[order].reshape(n * n, self.L)

    @cached_property
    def item_pools(self) -> np.ndarray:
        """(n, n, L) array of pool indices per item."""
        return self.flat_item_pools.reshape(self.n, self.n, self.L)

    def pools_of_item(self, i: int, j: int) -> list[int]:
        """Sorted indices of the L pools containing item (i, j); 0-based."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"coordinate ({i}, {j}) outside grid of side {self.n}")
        return self.item_pools[i, j].tolist()

    def to_csv(self, path) -> None:
        """One row per pool membership: pool_index,kind,slope,offset,item_row,item_col."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pool_index", "kind", "slope", "offset", "item_row", "item_col"])
            for k in range(self.n_pools):
                kind, slope, offset = self.meta[k]
                s = "" if slope is None else slope
                for r, c in zip(self.row_idx[k].tolist(), self.col_idx[k].tolist()):
                    w.writerow([k, kind, s, offset, r, c])

    @classmethod
    def from_csv(cls, path) -> "GridDesign":
        """Rebuild a design from its membership CSV (validates the structure)."""
        members: dict[int, list[tuple[int, int]]] = {}
        meta_map: dict[int, tuple[str, int | None, int]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            rd = csv.DictReader(fh)
            for row in rd:
                k = int(row["pool_index"])
                slope = int(row["slope"]) if row["slope"] != "" else None
                meta_map[k] = (row["kind"], slope, int(row["offset"]))
                members.setdefault(k, []).append((int(row["item_row"]), int(row["item_col"])))
        if not members:
            raise DesignError(f"no pool memberships found in {path}")
        sizes = {len(v) for v in members.values()}
        if len(sizes) != 1:
            raise DesignError(f"pools have mixed sizes {sorted(sizes)}")
        n = sizes.pop()
        n_pools = len(members)
        if n_pools % n != 0:
            raise DesignError(f"{n_pools} pools of size {n} do not form n*L pools")
        L = n_pools // n
        if sorted(members) != list(range(n_pools)):
            raise DesignError("pool indices are not contiguous from 0")
        row_idx = np.empty((n_pools, n), dtype=np.int32)
        col_idx = np.empty((n_pools, n), dtype=np.int32)
        for k in range(n_pools):
            rc = members[k]
            row_idx[k] = [r for r, _ in rc]
            col_idx[k] = [c for _, c in rc]
        if row_idx.min() < 0 or row_idx.max() >= n or col_idx.min() < 0 or col_idx.max() >= n:
            raise DesignError("item coordinates outside the n x n grid")
        design = cls(n, L, row_idx, col_idx, [meta_map[k] for k in range(n_pools)])
        design.flat_item_pools  # validates per-item membership count
        return design


def _pool_arrays(n: int, L: int) -> tuple[np.ndarray, np.ndarray, list[tuple[str, int | None, int]]]:
    k = np.arange(n, dtype=np.int32)
    rows, cols, meta = [], [], []
    for i in range(n):  # lines
        rows.append(np.full(n, i, dtype=np.int32))
        cols.append(k)
        meta.append(("line", None, i))
    for j in range(n):  # columns
        rows.append(k)
        cols.append(np.full(n, j, dtype=np.int32))
        meta.append(("column", None, j))
    for a in range(1, L - 1):  # diagonals, slope a: column (a*k + b) mod n
        for b in range(n):
            rows.append(k)
            cols.append((a * k + b) % n)
            meta.append(("diagonal", a, b))
    return np.stack(rows), np.stack(cols), meta


def build_design(n: int, L: int, check: bool = True) -> GridDesign:
    """Build the grid multipool for (n, L).

    With check=True (default) the parameters must satisfy validate_design;
    check=False builds the naive family regardless, which is useful to
    exhibit doubly-crossing diagonals for inadmissible parameters.
    """
    if n < 2 or L < 2:
        raise ValueError(f"need n >= 2 and L >= 2, got n={n}, L={L}")
    if L > n + 1:
        raise DesignError(
            f"L={L} exceeds the available pool directions: at most n+1={n + 1} for n={n}"
        )
    if check and not validate_design(n, L):
        p = smallest_prime_divisor(n)
        raise DesignError(
            f"(n={n}, L={L}) is not a multipool: L-2={L - 2} must be smaller than "
            f"the smallest prime divisor of n, which is {p}"
        )
    return GridDesign(n, L, *_pool_arrays(n, L))


def _membership_matrix(design: GridDesign) -> np.ndarray:
    """(n_pools, n*n) float32 incidence matrix (exact for counts up to n)."""
    n = design.n
    m = np.zeros((design.n_pools, n * n), dtype=np.float32)
    flat = design.row_idx * n + design.col_idx
    m[np.repeat(np.arange(design.n_pools), n), flat.ravel()] = 1.0
    return m


def certify_design(design: GridDesign) -> None:
    """Exhaustively verify the three multipool properties; raise DesignError on failure.

    Checks every pool has n distinct items, every item lies in exactly L
    pools, and every pair of distinct pools shares at most one item.
    """
    n = design.n
    m = _membership_matrix(design)
    if not np.all(m.sum(axis=1) == n):
        raise DesignError("a pool does not contain exactly n distinct items")
    if not np.all(m.sum(axis=0) == design.L):
        raise DesignError("an item does not belong to exactly L pools")
    inter = m @ m.T
    np.fill_diagonal(inter, 0.0)
    worst = inter.max()
    if worst > 1.0:
        k1, k2 = np.unravel_index(np.argmax(inter), inter.shape)
        raise DesignError(
            f"pools {int(k1)} {design.meta[int(k1)]} and {int(k2)} {design.meta[int(k2)]} "
            f"share {int(worst)} items"
        )


def double_crossing_pair(n: int, L: int) -> tuple[int, int, frozenset] | None:
    """Find two pools of the naive (n, L) family sharing >= 2 items, if any.

    Returns (pool_index_1, pool_index_2, shared_items) for the first such
    pair, or None when the family is a genuine multipool.  Brute force over
    all pool pairs; intended for exhibiting failures when L-2 >= spd(n).
    """
    design = build_design(n, L, check=False)
    m = _membership_matrix(design)
    inter = m @ m.T
    np.fill_diagonal(inter, 0.0)
    if inter.max() <= 1.0:
        return None
    k1, k2 = np.unravel_index(np.argmax(inter), inter.shape)
    shared = design.pools[int(k1)] & design.pools[int(k2)]
    return int(k1), int(k2), frozenset(shared)
