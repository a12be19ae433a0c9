"""Cube tessellations, cubic sets, enlargements and connected components.

The tessellation partitions R^d into half-open cubes
``Q(idx) = spacing * idx + spacing * [-1/2, 1/2)^d`` with integer index
vectors ``idx``, so every point belongs to exactly one cube.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

CubeIndex = tuple[int, ...]


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class CubeLattice:
    """Axis-aligned cube tessellation with given spacing in dimension 2 or 3."""

    spacing: float
    dim: int = 2

    def __post_init__(self):
        if not (self.spacing > 0.0 and np.isfinite(self.spacing)):
            raise LatticeError(f"lattice spacing must be positive, got {self.spacing}")
        if self.dim not in (2, 3):
            raise LatticeError(f"dimension must be 2 or 3, got {self.dim}")

    def index_of(self, point):
        """Index of the unique half-open cube containing `point`.

        Accepts a single point (returns a tuple) or an (n,d) batch (returns
        an (n,d) integer array)."""
        p = np.asarray(point, dtype=float)
        idx = np.floor(p / self.spacing + 0.5).astype(int)
        if p.ndim == 2:
            return idx
        return tuple(int(i) for i in idx)

    def center(self, idx: CubeIndex) -> np.ndarray:
        return self.spacing * np.asarray(idx, dtype=float)

    def bounds(self, idx: CubeIndex, scale: int = 1):
        """(lo, hi) corners of the cube with the same center, sidelength scale*spacing."""
        c = self.center(idx)
        half = 0.5 * scale * self.spacing
        return c - half, c + half


def enlarge(lattice: CubeLattice, idx: CubeIndex, k: int):
    """Closed box with the same center as cube `idx` and sidelength k*spacing."""
    if k < 1:
        raise LatticeError(f"enlargement factor must be >= 1, got {k}")
    return lattice.bounds(idx, scale=k)


@dataclass
class CubicSet:
    """A finite set of lattice cubes with the face-neighbor adjacency graph."""

    lattice: CubeLattice
    cubes: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        self.cubes = frozenset(tuple(int(i) for i in c) for c in self.cubes)

    def __len__(self):
        return len(self.cubes)

    def __contains__(self, idx):
        return tuple(idx) in self.cubes

    def neighbors(self, idx: CubeIndex) -> list[CubeIndex]:
        """Face neighbors inside the set (index difference +-e_i)."""
        out = []
        idx = tuple(idx)
        for axis in range(self.lattice.dim):
            for step in (-1, 1):
                nb = tuple(idx[a] + (step if a == axis else 0) for a in range(len(idx)))
                if nb in self.cubes:
                    out.append(nb)
        return out

    def sorted_indices(self) -> list[CubeIndex]:
        return sorted(self.cubes)

    def centers(self) -> np.ndarray:
        idx = np.array(self.sorted_indices(), dtype=float)
        if idx.size == 0:
            return idx.reshape(0, self.lattice.dim)
        return self.lattice.spacing * idx

    def volume(self) -> float:
        return len(self.cubes) * self.lattice.spacing**self.lattice.dim


@dataclass(frozen=True)
class Box:
    """Axis-aligned open box, used for the domain and its compact subset."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or not np.all(hi > lo):
            raise LatticeError(f"degenerate box {self.lo}..{self.hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.asarray(self.lo) + margin
        hi = np.asarray(self.hi) - margin
        return np.all((p > lo) & (p < hi), axis=1)

    def contains_box(self, lo, hi) -> bool:
        return bool(np.all(np.asarray(lo) >= np.asarray(self.lo))
                    and np.all(np.asarray(hi) <= np.asarray(self.hi)))

    def margin_to(self, inner: "Box") -> float:
        """dist(boundary of self, inner); positive iff inner is compactly contained."""
        lo_gap = np.asarray(inner.lo) - np.asarray(self.lo)
        hi_gap = np.asarray(self.hi) - np.asarray(inner.hi)
        return float(min(lo_gap.min(), hi_gap.min()))

    def sample_grid(self, step: float) -> np.ndarray:
        axes = [np.arange(l + step / 2, h, step) for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def cubes_meeting(region: Callable[[np.ndarray], np.ndarray],
                  bbox: Box,
                  lattice: CubeLattice,
                  min_resolution_frac: int = 64) -> CubicSet:
    """Cubes of the tessellation whose intersection with the region is nonempty.

    `region` is a vectorized membership predicate (n,d)->(n,) bool. Intersection
    is decided by sampling each candidate cube adaptively: corners+center first,
    then dyadic refinement down to spacing/min_resolution_frac.
    """
    r = lattice.spacing
    d = lattice.dim
    lo_idx = np.floor(np.asarray(bbox.lo) / r + 0.5).astype(int)
    hi_idx = np.floor(np.asarray(bbox.hi) / r + 0.5).astype(int)
    found = set()
    ranges = [range(lo_idx[a], hi_idx[a] + 1) for a in range(d)]
    mesh = np.meshgrid(*[np.asarray(rg) for rg in ranges], indexing="ij")
    candidates = np.stack([m.ravel() for m in mesh], axis=1)
    if candidates.size == 0:
        return CubicSet(lattice, frozenset())

    # level-k samples: grid of (2^k+1)^d points covering the half-open cube
    max_level = max(1, int(np.ceil(np.log2(min_resolution_frac))))
    remaining = candidates
    for level in range(1, max_level + 1):
        if remaining.size == 0:
            break
        n1 = 2**level + 1
        # stay strictly inside the half-open cube: offsets in [-1/2, 1/2)
        offs_1d = -0.5 + np.arange(n1) / (n1 - 1) * (1.0 - 1e-9)
        offs = np.stack([m.ravel() for m in
                         np.meshgrid(*([offs_1d] * d), indexing="ij")], axis=1)
        centers = r * remaining.astype(float)
        pts = (centers[:, None, :] + r * offs[None, :, :]).reshape(-1, d)
        hit = region(pts).reshape(len(remaining), -1).any(axis=1)
        for c in remaining[hit]:
            found.add(tuple(int(i) for i in c))
        remaining = remaining[~hit]
    return CubicSet(lattice, frozenset(found))


def connected_components(s: CubicSet) -> list[CubicSet]:
    """Partition of the cubic set into face-connected components.

    Components are ordered by their lexicographically smallest cube index.
    """
    seen = set()
    comps = []
    for start in s.sorted_indices():
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nb in s.neighbors(cur):
                if nb not in seen:
                    seen.add(nb)
                    comp.add(nb)
                    queue.append(nb)
        comps.append(CubicSet(s.lattice, frozenset(comp)))
    return comps


def cubic_set_from_indices(lattice: CubeLattice, indices: Iterable[Sequence[int]]) -> CubicSet:
    return CubicSet(lattice, frozenset(tuple(int(i) for i in ix) for ix in indices))
