"""Recovery metrics for an estimated partition against the ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidPartition, ShapeMismatch
from .hypergraph import Partition

BRUTE_FORCE_MAX_K = 6


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    permutation: tuple      # estimated label -> true label, 0-based
    error_fraction: float
    confusion: np.ndarray   # confusion[a, b] = #{i : phi(i) = a, psi(i) = b}

    @property
    def mismatches(self) -> int:
        n = int(self.confusion.sum())
        return n - int(sum(self.confusion[a, b] for a, b in enumerate(self.permutation)))


def _check(phi: Partition, psi: Partition):
    if phi.n != psi.n or phi.k != psi.k:
        raise ShapeMismatch(f"partitions differ: n={phi.n}/{psi.n}, k={phi.k}/{psi.k}")


def confusion_matrix(phi: Partition, psi: Partition) -> np.ndarray:
    _check(phi, psi)
    c = np.zeros((phi.k, phi.k), dtype=np.int64)
    np.add.at(c, (phi.labels, psi.labels), 1)
    return c


def _best_perm_brute(c: np.ndarray):
    k = c.shape[0]
    best, best_perm = -1, None
    for perm in permutations(range(k)):
        s = int(c[np.arange(k), perm].sum())
        if s > best:
            best, best_perm = s, perm
    return tuple(int(v) for v in best_perm), best


def _best_perm_assignment(c: np.ndarray):
    rows, cols = linear_sum_assignment(c, maximize=True)
    perm = tuple(int(v) for v in cols[np.argsort(rows)])
    return perm, int(c[rows, cols].sum())


def error_fraction(phi: Partition, psi: Partition, method: str = "auto") -> AlignmentResult:
    """Fraction of nodes misplaced by ``phi`` under the best relabelling.

    ``method`` is "brute" (all k! permutations), "assignment" (optimal
    assignment on the confusion matrix) or "auto" (brute force for k <= 6).
    """
    c = confusion_matrix(phi, psi)
    if method == "auto":
        method = "brute" if phi.k <= BRUTE_FORCE_MAX_K else "assignment"
    if method == "brute":
        perm, matched = _best_perm_brute(c)
    elif method == "assignment":
        perm, matched = _best_perm_assignment(c)
    else:
        raise ValueError(f"unknown method {method!r}")
    n = phi.n
    return AlignmentResult(perm, (n - matched) / n if n else 0.0, c)


def worst_cluster_error(phi: Partition, psi: Partition, method: str = "auto") -> float:
    """min over relabellings of the largest per-true-cluster error fraction."""
    c = confusion_matrix(phi, psi)
    sizes = c.sum(axis=0)
    if np.any(sizes == 0):
        raise InvalidPartition("every ground-truth cluster must be nonempty")
    # frac[a, j]: error in true cluster j if estimated label a is mapped to j
    frac = (sizes[None, :] - c) / sizes[None, :]
    k = c.shape[0]
    if method == "auto":
        method = "brute" if k <= BRUTE_FORCE_MAX_K else "bottleneck"
    if method == "brute":
        return float(min(frac[np.arange(k), perm].max() for perm in permutations(range(k))))
    if method != "bottleneck":
        raise ValueError(f"unknown method {method!r}")
    levels = np.unique(frac)
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        blocked = (frac > levels[mid]).astype(np.int64)
        rows, cols = linear_sum_assignment(blocked)
        if blocked[rows, cols].sum() == 0:
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])
