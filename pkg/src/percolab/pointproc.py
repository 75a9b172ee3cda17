"""Homogeneous Poisson point processes on axis-aligned boxes.

Randomness comes from counter-based streams: stream ``k`` of master seed
``s`` is a Philox generator keyed from ``SeedSequence(s, spawn_key=(k,))``,
so replication ``k`` draws the same numbers no matter which worker runs it
or in what order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Box",
    "PointSet",
    "RngStream",
    "derive_stream",
    "parse_seed",
    "sample_poisson",
]

SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``[lower[0], upper[0]] x ... x [lower[m-1], upper[m-1]]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) == 0 or len(lower) != len(upper):
            raise ValueError(f"box bounds must be non-empty and of equal length, got {lower} / {upper}")
        if not all(np.isfinite(lower)) or not all(np.isfinite(upper)):
            raise ValueError("box bounds must be finite")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise ValueError(f"degenerate box: lower {lower} must be < upper {upper} on every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def centered_cube(cls, m: int, n: float) -> "Box":
        """The observation window ``[-n/2, n/2]^m``."""
        if int(m) != m or m < 1:
            raise ValueError(f"dimension must be a positive integer, got {m!r}")
        if not n > 0:
            raise ValueError(f"box side must be positive, got {n!r}")
        h = float(n) / 2.0
        return cls((-h,) * int(m), (h,) * int(m))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    def volume(self) -> float:
        return float(np.prod(self.sides))

    @property
    def is_cube(self) -> bool:
        return len(set(self.sides)) == 1

    @property
    def edge(self) -> float:
        """Side length of a cubic box; raises for non-cubes."""
        if not self.is_cube:
            raise ValueError(f"box is not a cube: sides {self.sides}")
        return self.sides[0]

    def diameter(self) -> float:
        return float(np.sqrt(sum(s * s for s in self.sides)))

    def contains(self, points) -> np.ndarray:
        """Closed inclusion test for an ``(N, m)`` array; returns a bool mask."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def intersect(self, other: "Box") -> "Box":
        lower = tuple(max(a, b) for a, b in zip(self.lower, other.lower))
        upper = tuple(min(a, b) for a, b in zip(self.upper, other.upper))
        return Box(lower, upper)


@dataclass(frozen=True, eq=False)
class PointSet:
    """An immutable ``(N, m)`` coordinate array plus its provenance.

    ``seed`` is opaque provenance (typically ``(master_seed, stream_index)``);
    it is not used for anything but bookkeeping.
    """

    points: np.ndarray
    box: Box
    intensity: float
    seed: object = None
    _digest: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.size == 0:
            pts = pts.reshape(0, self.box.dim)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[1] != self.box.dim:
            raise ValueError(
                f"dimension mismatch: points have {pts.shape[1]} coordinates, box has {self.box.dim}")
        if not np.all(self.box.contains(pts)):
            raise ValueError("every point must lie inside the box")
        if not self.intensity > 0:
            raise ValueError(f"intensity must be positive, got {self.intensity!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.box.dim

    def __len__(self) -> int:
        return self.points.shape[0]

    def digest(self) -> str:
        """SHA-256 of the raw coordinate bytes (used to verify paired seeds)."""
        if not self._digest:
            h = hashlib.sha256()
            h.update(np.asarray(self.points.shape, dtype=np.int64).tobytes())
            h.update(np.ascontiguousarray(self.points).tobytes())
            self._digest.append(h.hexdigest())
        return self._digest[0]

    def scaled(self, factor: float, lam: float | None = None) -> "PointSet":
        """Coordinates and box multiplied by ``factor``."""
        box = Box(tuple(factor * v for v in self.box.lower), tuple(factor * v for v in self.box.upper))
        if lam is None:
            lam = self.intensity / factor**self.dim
        return PointSet(self.points * factor, box, lam, self.seed)

    def permuted(self, perm: Sequence[int]) -> "PointSet":
        return PointSet(self.points[np.asarray(perm)], self.box, self.intensity, self.seed)


class RngStream:
    """Deterministic generator for one ``(master_seed, index)`` pair.

    Wraps a :class:`numpy.random.Generator` over Philox.  A stream is
    single-owner: do not draw from one instance in several threads at once.
    """

    def __init__(self, master_seed: int, index: int):
        if index < 0:
            raise ValueError(f"stream index must be non-negative, got {index}")
        self.master_seed = int(master_seed)
        self.index = int(index)
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.index,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed:#x}, index={self.index})"

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def poisson(self, mean: float) -> int:
        return int(self.generator.poisson(mean))


def parse_seed(value) -> int:
    """Accept a 64-bit unsigned seed as int, decimal string or ``0x`` hex string."""
    if isinstance(value, (int, np.integer)):
        seed = int(value)
    else:
        text = str(value).strip().lower().replace("_", "")
        try:
            seed = int(text, 16) if text.startswith("0x") else int(text, 10)
        except ValueError:
            raise ValueError(f"seed must be a decimal or 0x-hex integer, got {value!r}") from None
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def derive_stream(master_seed, index: int) -> RngStream:
    return RngStream(parse_seed(master_seed), index)


def sample_poisson(box: Box, lam: float, rng: RngStream) -> PointSet:
    """Homogeneous Poisson process of intensity ``lam`` restricted to ``box``.

    Draws the count from Poisson(lam * volume), then places that many
    independent uniform points.
    """
    if not (isinstance(lam, (int, float, np.floating)) and np.isfinite(lam) and lam > 0):
        raise ValueError(f"intensity must be a finite positive number, got {lam!r}")
    count = rng.poisson(lam * box.volume())
    lo = np.asarray(box.lower)
    span = np.asarray(box.upper) - lo
    pts = lo + span * rng.uniform((count, box.dim))
    # lo + span*u can round up to exactly upper but never beyond
    np.minimum(pts, np.asarray(box.upper), out=pts)
    return PointSet(pts, box, float(lam), seed=(rng.master_seed, rng.index))
