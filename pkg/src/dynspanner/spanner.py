"""Facade: one object that routes point updates through the hierarchy, the
bounded-degree sparse layer, and the bucketed light spanner, and reports
per-operation recourse."""

from __future__ import annotations

from dataclasses import dataclass

from .config import Config
from .hierarchy import Hierarchy
from .light import LightSpanner
from .points import PointStore
from .sparse import SparseSpanner


@dataclass
class OpStats:
    kind: str
    pid: int
    sparse_events: int
    light_events: int
    iterations: int
    converged: bool


class DynamicSpanner:
    def __init__(self, config: Config):
        self.config = config
        self.store = PointStore(config.dim)
        self.hierarchy = Hierarchy(self.store, config.R)
        self.sparse = SparseSpanner(self.store, self.hierarchy, config)
        self.light = LightSpanner(self.store, self.sparse, config)

    def __len__(self) -> int:
        return len(self.store)

    def insert(self, coords) -> tuple:
        pid = self.store.insert(coords)
        self.hierarchy.insert(pid)
        delta = self.sparse.refresh()
        summary = self.light.on_point_inserted(delta, pid)
        return pid, OpStats(
            "insert",
            pid,
            delta.total_pair_events(),
            len(summary.events),
            summary.iterations,
            summary.converged,
        )

    def delete(self, pid: int) -> OpStats:
        self.store.delete(pid)
        self.hierarchy.delete(pid)
        delta = self.sparse.refresh()
        summary = self.light.on_point_deleted(delta, pid)
        return OpStats(
            "delete",
            pid,
            delta.total_pair_events(),
            len(summary.events),
            summary.iterations,
            summary.converged,
        )

    def edges(self) -> dict:
        """Current light-spanner edge set: {(idA, idB): length}."""
        return self.light.light_edges()
