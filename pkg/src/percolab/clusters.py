"""Radius-r clusters of a finite point set.

Two points are adjacent when their Euclidean distance is *strictly* below
``r``; clusters are the connected components of that graph.  Candidate
neighbours come from a uniform grid with cell size ``r`` (the 3^m block of
cells around a point is a complete candidate set), and components are
merged with union-find.  Distances are compared squared, with no slack, so
a pair at distance exactly ``r`` stays disconnected.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .pointproc import PointSet

__all__ = [
    "ClusterLabeling",
    "GridIndex",
    "TopClusters",
    "build_grid",
    "cluster_of",
    "find_clusters",
    "top_clusters",
    "write_labeling_csv",
]

_KEY_LIMIT = 2**62


def _as_array(points) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    if isinstance(points, PointSet):
        return points.points, np.asarray(points.box.lower), np.asarray(points.box.upper)
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError(f"dimension mismatch: expected an (N, m) array, got shape {pts.shape}")
    return pts, None, None


def _check_radius(r):
    if not (np.isfinite(r) and r > 0):
        raise ValueError(f"connection radius must be a finite positive number, got {r!r}")


@dataclass(frozen=True, eq=False)
class GridIndex:
    """Points bucketed into cubic cells of side ``cell_size``.

    Point ``i`` lives in cell ``floor((x_i - origin) / cell_size)``.  The
    buckets are stored flattened: ``order`` lists point indices sorted by
    row-major cell key, ``keys`` holds the matching sorted keys.
    """

    cell_size: float
    origin: np.ndarray
    shape: np.ndarray
    strides: np.ndarray
    order: np.ndarray
    keys: np.ndarray
    cells: np.ndarray

    @property
    def dim(self) -> int:
        return self.origin.shape[0]

    def __len__(self) -> int:
        return self.order.shape[0]

    @property
    def buckets(self) -> dict[tuple[int, ...], list[int]]:
        out: dict[tuple[int, ...], list[int]] = {}
        for idx, cell in zip(self.order.tolist(), map(tuple, self.cells.tolist())):
            out.setdefault(cell, []).append(idx)
        return out

    def candidate_pairs(self) -> set[tuple[int, int]]:
        """All pairs ``(i, j)``, ``i < j``, in the same or Chebyshev-adjacent buckets.

        Quadratic in bucket occupancy; meant for tests and debugging.
        """
        buckets = self.buckets
        offsets = np.array(np.meshgrid(*([[-1, 0, 1]] * self.dim), indexing="ij")).reshape(self.dim, -1).T
        pairs = set()
        for cell, members in buckets.items():
            for off in offsets:
                other = buckets.get(tuple(int(c + o) for c, o in zip(cell, off)))
                if not other:
                    continue
                for i in members:
                    for j in other:
                        if i < j:
                            pairs.add((i, j))
        return pairs


def build_grid(points, r: float, origin=None, upper=None) -> GridIndex:
    """Bucket ``points`` into a grid of cell size ``r``.

    The origin defaults to the box's lower corner for a :class:`PointSet`
    and to the coordinate-wise minimum for a raw array.
    """
    _check_radius(r)
    pts, box_lo, box_hi = _as_array(points)
    m = pts.shape[1]
    if origin is None:
        origin = box_lo if box_lo is not None else (pts.min(axis=0) if len(pts) else np.zeros(m))
    if upper is None:
        upper = box_hi if box_hi is not None else (pts.max(axis=0) if len(pts) else np.asarray(origin))
    origin = np.asarray(origin, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    shape = np.floor((upper - origin) / r).astype(np.int64) + 1
    if len(pts):
        cells = np.floor((pts - origin) / r).astype(np.int64)
        shape = np.maximum(shape, cells.max(axis=0) + 1)
        if np.any(cells < 0):
            raise ValueError("points lie below the grid origin")
    else:
        cells = np.zeros((0, m), dtype=np.int64)
    if float(np.prod(shape.astype(float))) >= _KEY_LIMIT:
        raise ValueError(f"grid of shape {shape.tolist()} is too fine for radius {r}")
    strides = np.ones(m, dtype=np.int64)
    for k in range(m - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    keys = cells @ strides
    order = np.argsort(keys, kind="stable")
    return GridIndex(
        cell_size=float(r),
        origin=origin,
        shape=shape,
        strides=strides,
        order=order,
        keys=np.ascontiguousarray(keys[order]),
        cells=np.ascontiguousarray(cells[order]),
    )


@dataclass(frozen=True, eq=False)
class _Graph:
    # the adjacency graph in grid order, kept for window rescoring
    grid: GridIndex
    pts: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    roots: np.ndarray
    rank: np.ndarray  # rank[i] = grid position of original point i


def _build_graph(pts: np.ndarray, r: float, box_lo, box_hi) -> _Graph:
    grid = build_grid(pts, r, origin=box_lo, upper=box_hi)
    gp = np.ascontiguousarray(pts[grid.order])
    counts = _kernels.neighbor_counts(gp, grid.keys, grid.cells, grid.shape, grid.strides, r * r)
    indptr = np.zeros(len(gp) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = _kernels.neighbor_fill(gp, grid.keys, grid.cells, grid.shape, grid.strides, r * r, indptr)
    roots = _kernels.component_roots(len(gp), indptr, indices)
    rank = np.empty_like(grid.order)
    rank[grid.order] = np.arange(len(grid.order))
    return _Graph(grid, gp, indptr, indices, roots, rank)


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """Component ids per point plus component sizes.

    Ids are assigned in order of each component's smallest point index, so
    component 0 contains point 0.  ``order`` lists ids by size, largest
    first, ties broken by smaller id (equivalently smaller minimal index).
    """

    component_of: np.ndarray
    sizes: np.ndarray
    order: np.ndarray
    radius: float = float("nan")
    _graph: Optional[_Graph] = field(default=None, repr=False, compare=False)

    @property
    def n_points(self) -> int:
        return self.component_of.shape[0]

    @property
    def n_components(self) -> int:
        return self.sizes.shape[0]

    def members(self, cid: int) -> np.ndarray:
        return np.flatnonzero(self.component_of == cid)

    def partition(self) -> frozenset[frozenset[int]]:
        """Label-free view for comparing labelings."""
        blocks: dict[int, list[int]] = {}
        for i, c in enumerate(self.component_of.tolist()):
            blocks.setdefault(c, []).append(i)
        return frozenset(frozenset(b) for b in blocks.values())


def _labeling_from_roots(roots: np.ndarray, radius: float, graph=None) -> ClusterLabeling:
    n = roots.shape[0]
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return ClusterLabeling(empty, empty.copy(), empty.copy(), radius, graph)
    uniq, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    # relabel so ids follow each component's smallest point index
    by_first = np.argsort(first, kind="stable")
    relabel = np.empty_like(by_first)
    relabel[by_first] = np.arange(len(by_first))
    component_of = relabel[inverse.reshape(-1)]
    sizes = np.bincount(component_of, minlength=len(uniq)).astype(np.int64)
    order = np.lexsort((np.arange(len(sizes)), -sizes))
    for a in (component_of, sizes, order):
        a.setflags(write=False)
    return ClusterLabeling(component_of, sizes, order, radius, graph)


def find_clusters(points, r: float) -> ClusterLabeling:
    """Label the radius-``r`` clusters of ``points`` (a PointSet or ``(N, m)`` array)."""
    _check_radius(r)
    pts, box_lo, box_hi = _as_array(points)
    graph = _build_graph(pts, float(r), box_lo, box_hi)
    roots_orig = graph.roots[graph.rank]
    return _labeling_from_roots(roots_orig, float(r), graph)


@dataclass(frozen=True)
class TopClusters:
    largest_size: int
    second_size: int
    largest_unique: bool
    largest_id: Optional[int]


def top_clusters(labeling: ClusterLabeling) -> TopClusters:
    """Largest and second-largest component sizes.

    ``second_size`` counts multiplicity, so it equals ``largest_size`` when
    the largest is tied; ``largest_unique`` flags that case.
    """
    if labeling.n_components == 0:
        return TopClusters(0, 0, False, None)
    first = int(labeling.order[0])
    largest = int(labeling.sizes[first])
    second = int(labeling.sizes[labeling.order[1]]) if labeling.n_components > 1 else 0
    return TopClusters(largest, second, second < largest, first)


def cluster_of(labeling: ClusterLabeling, point_index: int) -> int:
    if not 0 <= point_index < labeling.n_points:
        raise IndexError(f"point index {point_index} out of range for {labeling.n_points} points")
    return int(labeling.component_of[point_index])


def write_labeling_csv(points, labeling: ClusterLabeling, fh) -> None:
    """Debug dump: one row per point with its coordinates and component id."""
    pts, _, _ = _as_array(points)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["index"] + [f"x{k}" for k in range(pts.shape[1])] + ["component"])
    for i, (row, c) in enumerate(zip(pts.tolist(), labeling.component_of.tolist())):
        writer.writerow([i] + [repr(v) for v in row] + [c])
