"""Point storage with stable ids and cached coordinates.

Ids are assigned sequentially and never reused.  Coordinates of deleted
points are kept around (alive=False) because late bookkeeping -- recourse
accounting and dirty-set pruning right after a deletion -- still needs them.
"""

from __future__ import annotations

import math

import numpy as np


class DuplicatePointError(ValueError):
    """Duplicate coordinates would make the aspect ratio infinite."""


class PointStore:
    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self._coords = np.empty((0, dim), dtype=np.float64)
        self._alive = np.zeros(0, dtype=bool)
        self._count = 0

    def __len__(self) -> int:
        return int(self._alive.sum())

    @property
    def next_id(self) -> int:
        return self._count

    def insert(self, coords) -> int:
        vec = np.asarray(coords, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise ValueError("coordinates must be finite")
        if len(self) > 0:
            alive = self._coords[self._alive]
            if np.any(np.all(alive == vec, axis=1)):
                raise DuplicatePointError(f"point {vec.tolist()} already present")
        if self._count == self._coords.shape[0]:
            grow = max(64, self._coords.shape[0])
            self._coords = np.vstack(
                [self._coords, np.empty((grow, self.dim), dtype=np.float64)]
            )
            self._alive = np.concatenate([self._alive, np.zeros(grow, dtype=bool)])
        pid = self._count
        self._coords[pid] = vec
        self._alive[pid] = True
        self._count += 1
        return pid

    def delete(self, pid: int) -> None:
        self._check_alive(pid)
        self._alive[pid] = False

    def is_alive(self, pid: int) -> bool:
        return 0 <= pid < self._count and bool(self._alive[pid])

    def alive_ids(self) -> list:
        return [int(i) for i in np.flatnonzero(self._alive[: self._count])]

    def coords(self, pid: int) -> np.ndarray:
        if not (0 <= pid < self._count):
            raise KeyError(pid)
        return self._coords[pid]

    def coords_of(self, ids) -> np.ndarray:
        return self._coords[np.asarray(ids, dtype=np.intp)]

    def distance(self, u: int, v: int) -> float:
        self._check_alive(u)
        self._check_alive(v)
        return float(np.linalg.norm(self._coords[u] - self._coords[v]))

    def distance_any(self, u: int, v: int) -> float:
        """Distance allowing retired ids (used during post-deletion cleanup)."""
        return float(np.linalg.norm(self._coords[u] - self._coords[v]))

    def distances_from(self, vec, ids) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.float64)
        return np.linalg.norm(self.coords_of(ids) - vec, axis=1)

    def _check_alive(self, pid: int) -> None:
        if not self.is_alive(pid):
            raise KeyError(f"point {pid} is not alive")


def aspect_ratio_of_coords(coords: np.ndarray) -> float:
    """max pairwise distance / min pairwise distance (n >= 2, distinct)."""
    n = coords.shape[0]
    if n < 2:
        raise ValueError("aspect ratio needs at least two points")
    diff = coords[:, None, :] - coords[None, :, :]
    dists = np.linalg.norm(diff, axis=2)
    iu = np.triu_indices(n, k=1)
    vals = dists[iu]
    dmin = vals.min()
    if dmin == 0.0:
        raise ValueError("duplicate points have infinite aspect ratio")
    return float(vals.max() / dmin)


def log2_aspect_ratio(coords: np.ndarray) -> float:
    if coords.shape[0] < 2:
        return 0.0
    return math.log2(aspect_ratio_of_coords(coords))
