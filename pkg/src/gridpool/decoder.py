"""Pool measurement and per-item reconstruction.

A pool readout is the maximum load over its members.  Each item is judged
from its own L readouts only: take their minimum and count how many of the
L pools attain it.  A zero minimum clears the item; a positive minimum seen
at least twice flags it; a positive minimum seen exactly once is
inconclusive (and counts as a miss in the binary output).

Value comparisons are exact: every readout is a bitwise copy of some stored
load, and finite-precision loads with equal level quantize to identical
floats, so no tolerance is needed or wanted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .design import GridDesign
from .loads import LoadGrid

__all__ = [
    "Status",
    "Measurements",
    "DecodeResult",
    "ConfusionCounts",
    "measure",
    "decode",
    "classify_outcomes",
]


class Status(IntEnum):
    NEGATIVE = 0
    POSITIVE = 1
    INCONCLUSIVE = 2


_STATUS_NAMES = {Status.NEGATIVE: "negative", Status.POSITIVE: "positive",
                 Status.INCONCLUSIVE: "inconclusive"}
_STATUS_FROM_NAME = {v: k for k, v in _STATUS_NAMES.items()}


@dataclass
class Measurements:
    """The nL pool readouts for one grid, in pool-index order."""

    values: np.ndarray
    n: int
    L: int

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pool_index", "value"])
            for k, v in enumerate(self.values):
                w.writerow([k, format(v, ".17g")])

    @classmethod
    def from_csv(cls, path, n: int, L: int) -> "Measurements":
        values = np.zeros(n * L)
        seen = 0
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                values[int(row["pool_index"])] = float(row["value"])
                seen += 1
        if seen != n * L:
            raise ValueError(f"expected {n * L} pool readouts, found {seen}")
        return cls(values=values, n=n, L=L)


@dataclass
class DecodeResult:
    """Per-item reconstruction: status, minimal readout and its multiplicity."""

    statuses: np.ndarray   # (n, n) of Status values
    min_value: np.ndarray  # (n, n) minimal readout over the item's pools
    min_count: np.ndarray  # (n, n) number of its pools attaining that minimum

    @property
    def flagged(self) -> np.ndarray:
        """Binary output: True where the item is declared defective."""
        return self.statuses == Status.POSITIVE

    def to_csv(self, path) -> None:
        n = self.statuses.shape[0]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "status", "v_item", "i_count"])
            for i in range(n):
                for j in range(n):
                    w.writerow([i, j, _STATUS_NAMES[Status(self.statuses[i, j])],
                                format(self.min_value[i, j], ".17g"),
                                int(self.min_count[i, j])])

    @classmethod
    def from_csv(cls, path) -> "DecodeResult":
        rows = list(csv.DictReader(open(path, newline="", encoding="utf-8")))
        n = int(np.sqrt(len(rows)))
        if n * n != len(rows):
            raise ValueError(f"{len(rows)} rows do not form a square grid")
        statuses = np.zeros((n, n), dtype=np.int8)
        vmin = np.zeros((n, n))
        cnt = np.zeros((n, n), dtype=np.int32)
        for row in rows:
            i, j = int(row["row"]), int(row["col"])
            statuses[i, j] = _STATUS_FROM_NAME[row["status"]]
            vmin[i, j] = float(row["v_item"])
            cnt[i, j] = int(row["i_count"])
        return cls(statuses=statuses, min_value=vmin, min_count=cnt)


@dataclass(frozen=True)
class ConfusionCounts:
    """Three-way outcome tally against the truth grid.

    The six fields are disjoint and sum to n^2.  In the binary output of
    the one-stage algorithm an inconclusive defective is a miss and an
    inconclusive healthy item is a (correct) negative; the binary_* fields
    fold them in accordingly.
    """

    true_positive: int
    false_positive: int
    true_negative: int
    false_negative: int
    inconclusive_defective: int
    inconclusive_healthy: int

    @property
    def binary_false_negative(self) -> int:
        return self.false_negative + self.inconclusive_defective

    @property
    def binary_true_negative(self) -> int:
        return self.true_negative + self.inconclusive_healthy

    @property
    def total(self) -> int:
        return (self.true_positive + self.false_positive + self.true_negative
                + self.false_negative + self.inconclusive_defective
                + self.inconclusive_healthy)


def measure(design: GridDesign, grid: LoadGrid) -> Measurements:
    """Readout of every pool: the exact maximum of its members' stored loads."""
    if design.n != grid.n:
        raise ValueError(f"design side {design.n} != grid side {grid.n}")
    values = grid.loads[design.row_idx, design.col_idx].max(axis=1)
    return Measurements(values=values, n=design.n, L=design.L)


def decode(design: GridDesign, meas: Measurements) -> DecodeResult:
    """Classify every item from the pool readouts alone (never the truth grid)."""
    if meas.values.shape != (design.n_pools,):
        raise ValueError(
            f"expected {design.n_pools} readouts for this design, got {meas.values.shape}"
        )
    stack = meas.values[design.item_pools]          # (n, n, L)
    vmin = stack.min(axis=-1)
    cnt = (stack == vmin[..., None]).sum(axis=-1)
    statuses = np.zeros((design.n, design.n), dtype=np.int8)
    positive = (vmin > 0) & (cnt >= 2)
    inconclusive = (vmin > 0) & (cnt == 1)
    statuses[positive] = Status.POSITIVE
    statuses[inconclusive] = Status.INCONCLUSIVE
    return DecodeResult(statuses=statuses, min_value=vmin,
                        min_count=cnt.astype(np.int32))


def classify_outcomes(result: DecodeResult, truth: LoadGrid) -> ConfusionCounts:
    """Compare the reconstruction with the generating grid."""
    if result.statuses.shape != truth.loads.shape:
        raise ValueError(
            f"result shape {result.statuses.shape} != truth shape {truth.loads.shape}"
        )
    defective = truth.loads > 0
    pos = result.statuses == Status.POSITIVE
    neg = result.statuses == Status.NEGATIVE
    inc = result.statuses == Status.INCONCLUSIVE
    return ConfusionCounts(
        true_positive=int((pos & defective).sum()),
        false_positive=int((pos & ~defective).sum()),
        true_negative=int((neg & ~defective).sum()),
        false_negative=int((neg & defective).sum()),
        inconclusive_defective=int((inc & defective).sum()),
        inconclusive_healthy=int((inc & ~defective).sum()),
    )
