"""Slow reference implementations for cross-checking.

Everything here is quadratic and shares no code with the grid/union-find
path: adjacency is an explicit all-pairs distance matrix and components come
from ``scipy.sparse.csgraph``.  Inputs above ``max_points`` are refused so
an oracle call cannot silently end up on a production-sized input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist

from .localscore import make_window
from .pointproc import PointSet

__all__ = ["OraclePartition", "naive_clusters", "naive_largest", "naive_localized_total"]

DEFAULT_MAX_POINTS = 2000
_CONDENSED_LIMIT = 8000  # condensed distance vector stays under ~256 MB


@dataclass(frozen=True)
class OraclePartition:
    blocks: tuple[tuple[int, ...], ...]

    def as_sets(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(b) for b in self.blocks)

    def sizes(self) -> list[int]:
        return sorted((len(b) for b in self.blocks), reverse=True)


def _coords(points) -> np.ndarray:
    return points.points if isinstance(points, PointSet) else np.asarray(points, dtype=np.float64)


def _guard(count: int, max_points):
    if max_points is not None and count > max_points:
        raise ValueError(f"oracle refuses {count} points (limit {max_points})")


def _labels(pts: np.ndarray, r: float) -> np.ndarray:
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if n <= _CONDENSED_LIMIT:
        # condensed pair k belongs to row i when start[i] <= k < start[i + 1]
        k = np.flatnonzero(pdist(pts, "sqeuclidean") < r * r)
        i = np.arange(n)
        start = i * n - i * (i + 1) // 2
        rows = np.searchsorted(start, k, side="right") - 1
        cols = k - start[rows] + rows + 1
    else:
        # every pair is still compared; rows go in blocks to bound memory
        block = max(1, 2_000_000 // n)
        rows, cols = [], []
        for i0 in range(0, n, block):
            diff = pts[i0:i0 + block, None, :] - pts[None, :, :]
            i, j = np.nonzero(np.einsum("ijk,ijk->ij", diff, diff) < r * r)
            rows.append(i + i0)
            cols.append(j)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
    adjacency = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(adjacency, directed=False)
    return labels


def naive_clusters(points, r: float, max_points=DEFAULT_MAX_POINTS) -> OraclePartition:
    """Components of the all-pairs graph ``|x - y| < r``."""
    if not r > 0:
        raise ValueError(f"connection radius must be positive, got {r!r}")
    pts = _coords(points)
    _guard(len(pts), max_points)
    labels = _labels(pts, r)
    blocks: dict[int, list[int]] = {}
    for i, c in enumerate(labels.tolist()):
        blocks.setdefault(c, []).append(i)
    return OraclePartition(tuple(tuple(b) for b in sorted(blocks.values())))


def naive_largest(points, r: float, max_points=DEFAULT_MAX_POINTS) -> tuple[int, int]:
    """``(largest, second_largest)`` component sizes, ties counted twice."""
    sizes = naive_clusters(points, r, max_points).sizes() + [0, 0]
    return sizes[0], sizes[1]


def naive_localized_total(points: PointSet, theta: float, r: float = 1.0,
                          max_points=DEFAULT_MAX_POINTS) -> int:
    """Sum of localized scores, re-clustering every window from scratch.

    The guard applies to each window, not to the whole configuration.
    """
    pts = points.points
    total = 0
    for i in range(len(pts)):
        w = make_window(pts[i], theta, points.box)
        inside = np.flatnonzero(w.contains(pts))
        _guard(len(inside), max_points)
        labels = _labels(pts[inside], r)
        sizes = np.bincount(labels)
        top = sizes.max()
        if np.count_nonzero(sizes == top) > 1:
            continue
        own = labels[np.searchsorted(inside, i)]
        total += int(sizes[own] == top)
    return total
