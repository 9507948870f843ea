"""Maximum-weight bipartite matching with threshold gating.

`hungarian_max` solves the gated partial-matching problem: among matchings
that use only entries >= min_weight, it returns one of maximum total weight.
Rows and columns may stay unmatched. Ties are broken deterministically in
favor of the matching whose sorted (row, col) pair list is lexicographically
smallest, with a shorter pair list preferred over any extension of it.

The solver core is scipy's Jonker-Volgenant assignment run on an augmented
square matrix: every real row/column gets a zero-weight dummy partner, which
turns the partial-matching problem into a full assignment. Gated-out entries
are replaced by a forbidden sentinel that the dummies make unreachable.
`brute_force_match` is an independent enumeration oracle for small matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["WeightMatrix", "Matching", "hungarian_max", "brute_force_match"]

_FORBIDDEN = -1e30
_TIE_TOL = 1e-12
_BRUTE_LIMIT = 8


class WeightMatrix:
    """Dense, finite, read-only weight table between two index sets."""

    __slots__ = ("array",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(arr.shape if arr.ndim == 2 else (0, 0))
        if arr.ndim != 2:
            raise ValueError(f"weights must form a 2-D matrix, got shape {arr.shape}")
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("weight entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    def __setattr__(self, name, value):
        raise AttributeError("WeightMatrix is immutable")

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    def __repr__(self) -> str:
        return f"WeightMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True)
class Matching:
    """A set of disjoint (row, col) pairs and the exact sum of their weights."""

    pairs: tuple[tuple[int, int], ...]
    total_weight: float


def _solve_partial_max(arr: np.ndarray, allowed: np.ndarray) -> float:
    """Best total over partial matchings restricted to allowed cells."""
    r, c = arr.shape
    if r == 0 or c == 0 or not allowed.any():
        return 0.0
    size = r + c
    aug = np.zeros((size, size))
    aug[:r, :c] = np.where(allowed, arr, _FORBIDDEN)
    rows, cols = linear_sum_assignment(aug, maximize=True)
    total = 0.0
    for i, j in zip(rows, cols):
        if i < r and j < c and allowed[i, j]:
            total += arr[i, j]
    return total


def hungarian_max(w: WeightMatrix, min_weight: float) -> Matching:
    """Max-weight gated partial matching with canonical tie-breaking.

    The canonical matching is built greedily: cells are scanned in row-major
    order and a cell is kept exactly when some optimal matching extends the
    kept set with it. The scan stops as soon as the kept set itself attains
    the optimum, which drops zero-gain extensions.
    """
    arr = w.array
    r, c = arr.shape
    allowed = arr >= min_weight if arr.size else np.zeros((r, c), dtype=bool)
    best = _solve_partial_max(arr, allowed)

    pairs: list[tuple[int, int]] = []
    total = 0.0
    row_free = np.ones(r, dtype=bool)
    col_free = np.ones(c, dtype=bool)
    for i in range(r):
        if total >= best - _TIE_TOL:
            break
        for j in range(c):
            if total >= best - _TIE_TOL:
                break
            if not (col_free[j] and allowed[i, j]):
                continue
            rsel = row_free.copy()
            rsel[i] = False
            csel = col_free.copy()
            csel[j] = False
            rest = _solve_partial_max(arr[np.ix_(rsel, csel)], allowed[np.ix_(rsel, csel)])
            if total + arr[i, j] + rest >= best - _TIE_TOL:
                pairs.append((i, j))
                total += arr[i, j]
                row_free[i] = False
                col_free[j] = False
                break  # row i is consumed

    if abs(total - best) > 1e-8 * max(1.0, abs(best)):
        raise AssertionError(f"canonical matching lost optimality: {total} vs {best}")
    return Matching(pairs=tuple(pairs), total_weight=float(total))


def brute_force_match(w: WeightMatrix, min_weight: float) -> Matching:
    """Exhaustive oracle over all gated partial matchings (rows, cols <= 8)."""
    r, c = w.rows, w.cols
    if r > _BRUTE_LIMIT or c > _BRUTE_LIMIT:
        raise ValueError(f"brute force limited to {_BRUTE_LIMIT}x{_BRUTE_LIMIT}, got {r}x{c}")
    arr = w.array
    allowed = arr >= min_weight if arr.size else np.zeros((r, c), dtype=bool)

    # Admissible bound on the value still collectable from rows >= i.
    row_best = [max(0.0, float(arr[i][allowed[i]].max())) if allowed[i].any() else 0.0 for i in range(r)]
    suffix = [0.0] * (r + 1)
    for i in range(r - 1, -1, -1):
        suffix[i] = suffix[i + 1] + row_best[i]

    best_total = 0.0
    best_pairs: tuple[tuple[int, int], ...] = ()

    def consider(total, pairs):
        nonlocal best_total, best_pairs
        if total > best_total + _TIE_TOL:
            best_total, best_pairs = total, pairs
        elif total >= best_total - _TIE_TOL and list(pairs) < list(best_pairs):
            best_total, best_pairs = total, pairs

    def explore(i, used_cols, total, pairs):
        if total + suffix[i] < best_total - _TIE_TOL:
            return
        if i == r:
            consider(total, pairs)
            return
        explore(i + 1, used_cols, total, pairs)  # leave row i unmatched
        for j in range(c):
            if used_cols & (1 << j) or not allowed[i, j]:
                continue
            explore(i + 1, used_cols | (1 << j), total + arr[i, j], pairs + ((i, j),))

    explore(0, 0, 0.0, ())
    return Matching(pairs=best_pairs, total_weight=float(best_total))
