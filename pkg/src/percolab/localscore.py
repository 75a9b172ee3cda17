"""Localized largest-cluster scores and their coupling with the global score.

For a point x of a configuration in the cube ``[-n/2, n/2]^m`` the window
is the cube centred at x with half-edge ``(theta * ln n) ** (1 / (m - 1))``,
clipped to the observation box.  The localized score of x is 1 when x's
cluster among the points inside its window is the unique largest cluster
there; the global score is 1 when x belongs to the unique largest cluster of
the whole configuration.

Per point, disagreements are classified as

* ``E0``: the window's largest cluster is tied (localized score forced to 0),
* ``E1``: global score 1, localized score 0,
* ``E2``: global score 0, localized score 1,

and, for points outside ``E0`` with a unique global largest, ``E3`` records
whether the window's largest cluster is disconnected from the global one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np

from . import _kernels
from .clusters import ClusterLabeling, find_clusters, top_clusters
from .pointproc import Box, PointSet

__all__ = [
    "CouplingReport",
    "Event",
    "LocalScores",
    "ScorePair",
    "Window",
    "classify_e3",
    "local_score",
    "local_scores",
    "localized_total",
    "make_window",
    "window_half_edge",
]


class Event(IntEnum):
    AGREE = _kernels.AGREE
    E0 = _kernels.E0
    E1 = _kernels.E1
    E2 = _kernels.E2


def window_half_edge(theta: float, n: float, m: int) -> float:
    """``(theta * ln n) ** (1 / (m - 1))``."""
    if m < 2:
        raise ValueError(f"windows need dimension m >= 2, got {m}")
    if not n > 1:
        raise ValueError(f"box side must exceed 1 so that ln n > 0, got {n!r}")
    if not (np.isfinite(theta) and theta > 0):
        raise ValueError(f"theta must be a finite positive number, got {theta!r}")
    return (theta * math.log(n)) ** (1.0 / (m - 1))


@dataclass(frozen=True)
class Window:
    center: tuple[float, ...]
    half_edge: float
    clipped: Box

    @property
    def edge_length(self) -> float:
        return 2.0 * self.half_edge

    @property
    def unclipped(self) -> Box:
        return Box(tuple(c - self.half_edge for c in self.center),
                   tuple(c + self.half_edge for c in self.center))

    def contains(self, points) -> np.ndarray:
        return self.clipped.contains(points)


def make_window(x, theta: float, box: Box) -> Window:
    """Window around ``x`` for a cubic observation box of side n."""
    x = tuple(float(v) for v in np.asarray(x, dtype=float).reshape(-1))
    if len(x) != box.dim:
        raise ValueError(f"dimension mismatch: point has {len(x)} coordinates, box has {box.dim}")
    if not box.contains(np.asarray(x))[0]:
        raise ValueError(f"window centre {x} lies outside the box")
    h = window_half_edge(theta, box.edge, box.dim)
    # same arithmetic as the compiled kernels, so membership agrees bit for bit
    lower = tuple(max(c - h, lo) for c, lo in zip(x, box.lower))
    upper = tuple(min(c + h, hi) for c, hi in zip(x, box.upper))
    return Window(x, h, Box(lower, upper))


@dataclass(frozen=True)
class ScorePair:
    xi: int
    xi_prime: int
    event: Event
    e3: Optional[int] = None  # None when unclassifiable


@dataclass(frozen=True, eq=False)
class LocalScores:
    """Per-point arrays in the caller's point order."""

    xi: np.ndarray
    xi_prime: np.ndarray
    event: np.ndarray
    e3: np.ndarray  # 1, 0, or -1 for unclassifiable
    local_size: np.ndarray
    local_max: np.ndarray


@dataclass(frozen=True)
class CouplingReport:
    n_global: int
    n_local: int
    mismatch_count: int
    e0_count: int
    e1_count: int
    e2_count: int
    e3_count: int
    inclusion_violations: int = 0  # E1/E2 points classified as not E3


def _prepare(points: PointSet, theta: float, r: float, labeling: Optional[ClusterLabeling]):
    if not isinstance(points, PointSet):
        raise TypeError("localized scores need a PointSet (the box fixes n and the clipping)")
    box = points.box
    h = window_half_edge(theta, box.edge, box.dim)
    if not (np.isfinite(r) and r > 0):
        raise ValueError(f"connection radius must be a finite positive number, got {r!r}")
    if labeling is None or labeling._graph is None or labeling.radius != r:
        labeling = find_clusters(points, r)
    elif labeling.n_points != len(points):
        raise ValueError("labeling does not belong to this point set")
    g = labeling._graph
    top = top_clusters(labeling)
    if top.largest_unique:
        member = int(np.argmax(labeling.component_of == top.largest_id))
        gbest = int(g.roots[g.rank[member]])
    else:
        gbest = -1
    return labeling, g, h, gbest


def _run(points, theta, r, labeling, targets, group_side):
    labeling, g, h, gbest = _prepare(points, theta, r, labeling)
    box = points.box
    lo = np.asarray(box.lower)
    hi = np.asarray(box.upper)
    targets = np.asarray(targets, dtype=np.int64)
    grid_targets = g.rank[targets]
    args = (g.pts, g.grid.keys, g.grid.shape, g.grid.strides, g.grid.origin, g.grid.cell_size,
            g.indptr, g.indices, g.roots, gbest, lo, hi, h)
    if len(targets) <= 1 or group_side == 0:
        out = _kernels.window_scores(*args, grid_targets)
    else:
        side = group_side if group_side is not None else max(r, h / 6.0)
        gcell = np.floor((g.pts[grid_targets] - lo) / side).astype(np.int64)
        _, group = np.unique(gcell, axis=0, return_inverse=True)
        group = group.reshape(-1)
        by_group = np.argsort(group, kind="stable")
        res = _kernels.window_scores_grouped(*args, grid_targets[by_group], group[by_group])
        out = []
        for a in res:
            b = np.empty_like(a)
            b[by_group] = a
            out.append(b)
    xi = (g.roots[grid_targets] == gbest).astype(np.int8) if gbest >= 0 else np.zeros(len(targets), np.int8)
    return xi, out


def local_scores(points: PointSet, theta: float, r: float = 1.0,
                 labeling: Optional[ClusterLabeling] = None, *, group_side=None) -> LocalScores:
    """Global and localized scores for every point.

    ``group_side`` sets the side of the blocks whose targets share window
    work (default ``max(r, half_edge / 6)``); 0 rescores every window from
    scratch.  The result does not depend on it.
    """
    targets = np.arange(len(points))
    xi, (xp, ev, e3, own, best) = _run(points, theta, r, labeling, targets, group_side)
    return LocalScores(xi, xp, ev, e3, own, best)


def local_score(x_index: int, points: PointSet, theta: float, r: float = 1.0,
                labeling: Optional[ClusterLabeling] = None) -> ScorePair:
    if not 0 <= x_index < len(points):
        raise IndexError(f"point index {x_index} out of range for {len(points)} points")
    xi, (xp, ev, e3, _, _) = _run(points, theta, r, labeling, [x_index], 0)
    return ScorePair(int(xi[0]), int(xp[0]), Event(int(ev[0])), None if e3[0] < 0 else int(e3[0]))


def classify_e3(x_index: int, points: PointSet, theta: float, r: float = 1.0,
                labeling: Optional[ClusterLabeling] = None) -> Optional[int]:
    """1 if the window's largest cluster is at distance >= r from the global largest.

    Returns None when either largest cluster is tied.
    """
    return local_score(x_index, points, theta, r, labeling).e3


def localized_total(points: PointSet, theta: float, r: float = 1.0,
                    labeling: Optional[ClusterLabeling] = None, *, group_side=None) -> CouplingReport:
    """Sum of localized scores together with the per-point event counts."""
    if len(points) == 0:
        window_half_edge(theta, points.box.edge, points.dim)
        return CouplingReport(0, 0, 0, 0, 0, 0, 0, 0)
    s = local_scores(points, theta, r, labeling, group_side=group_side)
    ev = s.event
    e1 = ev == Event.E1
    e2 = ev == Event.E2
    return CouplingReport(
        n_global=int(s.xi.sum(dtype=np.int64)),
        n_local=int(s.xi_prime.sum(dtype=np.int64)),
        mismatch_count=int(np.count_nonzero(s.xi != s.xi_prime)),
        e0_count=int(np.count_nonzero(ev == Event.E0)),
        e1_count=int(np.count_nonzero(e1)),
        e2_count=int(np.count_nonzero(e2)),
        e3_count=int(np.count_nonzero(s.e3 == 1)),
        inclusion_violations=int(np.count_nonzero((e1 | e2) & (s.e3 == 0))),
    )
