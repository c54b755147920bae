"""Rooted cluster tree with levels, radii R^level, and the separation property.

Explicit clusters form the stored tree.  Every stored cluster (p, l)
additionally implies clusters (p, i) for all i < l ("implicit" clusters);
queries about "clusters at level j" therefore mean: every center p whose
chain reaches level j or above.  The explicit clusters of one center always
form a contiguous chain of levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import snapped_ceil_log
from .points import PointStore

COVER_SLACK = 1.0 + 1e-12


class Cluster:
    __slots__ = ("center", "level", "parent", "children")

    def __init__(self, center: int, level: int):
        self.center = center
        self.level = level
        self.parent = None
        self.children = set()

    def key(self):
        return (self.center, self.level)

    def __repr__(self):
        return f"Cluster({self.center}, {self.level})"


@dataclass
class HierarchyDelta:
    """Ordered event list; replaying it on the pre-state yields the post-state.

    Events:
      ("added", center, level, parent_center|None, parent_level|None)
      ("removed", center, level)
      ("reparent", center, level, parent_center, parent_level)
      ("root", center|None, level|None)
    """

    events: list = field(default_factory=list)

    def added(self, c, l, pc=None, pl=None):
        self.events.append(("added", c, l, pc, pl))

    def removed(self, c, l):
        self.events.append(("removed", c, l))

    def reparent(self, c, l, pc, pl):
        self.events.append(("reparent", c, l, pc, pl))

    def root(self, c, l):
        self.events.append(("root", c, l))


class Hierarchy:
    def __init__(self, store: PointStore, R: float):
        if R <= 1.0:
            raise ValueError("R must be > 1")
        self.store = store
        self.R = R
        self.clusters: dict = {}   # (center, level) -> Cluster
        self.chain: dict = {}      # center -> [low, top]
        self.root = None

    # ---- queries ----

    def __contains__(self, pid: int) -> bool:
        return pid in self.chain

    def centers(self) -> list:
        return sorted(self.chain)

    def chain_top_level(self, pid: int) -> int:
        return self.chain[pid][1]

    def chain_low_level(self, pid: int) -> int:
        return self.chain[pid][0]

    def levels_spanned(self) -> int:
        if not self.clusters:
            return 0
        levels = [l for (_, l) in self.clusters]
        return max(levels) - min(levels) + 1

    def covering_cluster(self, coords, level: int, exclude=()):
        """Center of an explicit-or-implicit cluster at `level` covering the
        query point, or None.  Tie-break: smallest center id."""
        best = None
        radius = self.R**level * COVER_SLACK
        for q, (_, top) in self.chain.items():
            if top < level or q in exclude:
                continue
            d = float(math.dist(coords, self.store.coords(q)))
            if d <= radius and (best is None or q < best):
                best = q
        return best

    # ---- mutation ----

    def insert(self, pid: int) -> HierarchyDelta:
        if pid in self.chain:
            raise ValueError(f"point {pid} already in hierarchy")
        delta = HierarchyDelta()
        vec = self.store.coords(pid)
        if self.root is None:
            c = self._add_cluster(pid, 0, parent=None, delta=delta)
            self.root = c
            delta.root(pid, 0)
            return delta

        # Lowest level at which some existing (possibly implicit) cluster
        # covers the new point.  For center q that is ceil(log_R d(p,q)),
        # valid only if q's chain reaches that high.
        best = None  # (level, center)
        for q, (_, top) in self.chain.items():
            d = self.store.distance_any(pid, q)
            a = snapped_ceil_log(d, self.R)
            if a <= top and (best is None or (a, q) < best):
                best = (a, q)

        if best is None:
            # Nobody covers p at any existing level: replicate the root
            # upward until it does.
            r = self.root.center
            a = snapped_ceil_log(self.store.distance_any(pid, r), self.R)
            old_top = self.chain[r][1]
            for j in range(old_top + 1, a + 1):
                new_root = self._add_cluster(r, j, parent=None, delta=delta)
                prev = self.clusters[(r, j - 1)]
                self._set_parent(prev, new_root, delta)
                self.root = new_root
                delta.root(r, j)
            parent = self.clusters[(r, a)]
        else:
            a, q = best
            parent = self._materialize_down_to(q, a, delta)

        self._add_cluster(pid, a - 1, parent=parent, delta=delta)
        return delta

    def delete(self, pid: int) -> HierarchyDelta:
        if pid not in self.chain:
            raise ValueError(f"point {pid} not in hierarchy")
        delta = HierarchyDelta()
        low, top = self.chain[pid]
        root_deleted = self.root is not None and self.root.center == pid

        marked = []
        for l in range(low, top + 1):
            c = self.clusters[(pid, l)]
            for child in sorted(c.children, key=lambda x: (x.center, x.level)):
                if child.center != pid:
                    child.parent = None
                    marked.append(child)
            c.children.clear()
            self._remove_cluster(c, delta)
        if root_deleted:
            self.root = None

        while marked:
            if self.root is not None and any(
                c.level >= self.root.level for c in marked
            ):
                # A replica has climbed to the root's level; the old root
                # joins the resolution as a parentless cluster.
                marked.append(self.root)
                self.root = None
            j = min(c.level for c in marked)
            for c in sorted(
                (c for c in marked if c.level == j), key=lambda x: x.center
            ):
                marked.remove(c)
                cover = self.covering_cluster(
                    self.store.coords(c.center), j + 1, exclude=(c.center,)
                )
                if cover is not None:
                    parent = self._materialize_down_to(cover, j + 1, delta)
                    self._set_parent(c, parent, delta)
                else:
                    replica = self._add_cluster(
                        c.center, j + 1, parent=None, delta=delta
                    )
                    self._set_parent(c, replica, delta)
                    marked.append(replica)
            if self.root is None and len(marked) == 1:
                # Minimal consistent completion: the lone parentless cluster
                # (necessarily above everything else) becomes the root.
                self.root = marked.pop()
                delta.root(self.root.center, self.root.level)

        if self.root is None and self.clusters:
            raise AssertionError("hierarchy left rootless")
        return delta

    # ---- internals ----

    def _add_cluster(self, center, level, parent, delta) -> Cluster:
        key = (center, level)
        if key in self.clusters:
            raise AssertionError(f"cluster {key} already exists")
        c = Cluster(center, level)
        if parent is not None:
            c.parent = parent
            parent.children.add(c)
        self.clusters[key] = c
        if center in self.chain:
            low, top = self.chain[center]
            if level == top + 1:
                self.chain[center] = [low, level]
            elif level == low - 1:
                self.chain[center] = [level, top]
            else:
                raise AssertionError("explicit chain must stay contiguous")
        else:
            self.chain[center] = [level, level]
        delta.added(
            center,
            level,
            parent.center if parent is not None else None,
            parent.level if parent is not None else None,
        )
        return c

    def _remove_cluster(self, c: Cluster, delta) -> None:
        if c.children:
            raise AssertionError("removing a cluster with attached children")
        if c.parent is not None:
            c.parent.children.discard(c)
            c.parent = None
        del self.clusters[c.key()]
        low, top = self.chain[c.center]
        if low == top:
            del self.chain[c.center]
        elif c.level == low:
            self.chain[c.center] = [low + 1, top]
        elif c.level == top:
            self.chain[c.center] = [low, top - 1]
        else:
            raise AssertionError("explicit chain must stay contiguous")
        delta.removed(c.center, c.level)

    def _set_parent(self, child: Cluster, parent: Cluster, delta) -> None:
        if parent.level != child.level + 1:
            raise AssertionError("parent must be exactly one level up")
        if child.parent is not None:
            child.parent.children.discard(child)
        child.parent = parent
        parent.children.add(child)
        delta.reparent(child.center, child.level, parent.center, parent.level)

    def _materialize_down_to(self, center, level, delta) -> Cluster:
        """Ensure (center, level) is explicit, creating same-center chain
        clusters below the current low end if the cover found was implicit."""
        low, top = self.chain[center]
        if level > top:
            raise AssertionError("cannot materialize above the chain top")
        for l in range(low - 1, level - 1, -1):
            parent = self.clusters[(center, l + 1)]
            self._add_cluster(center, l, parent=parent, delta=delta)
        return self.clusters[(center, level)]

    # ---- replay / clone / dump ----

    def clone(self) -> "Hierarchy":
        h = Hierarchy(self.store, self.R)
        for key in self.clusters:
            h.clusters[key] = Cluster(*key)
        for key, c in self.clusters.items():
            cc = h.clusters[key]
            if c.parent is not None:
                cc.parent = h.clusters[c.parent.key()]
                cc.parent.children.add(cc)
        h.chain = {p: list(rng) for p, rng in self.chain.items()}
        if self.root is not None:
            h.root = h.clusters[self.root.key()]
        return h

    def apply_delta(self, delta: HierarchyDelta) -> None:
        for ev in delta.events:
            kind = ev[0]
            if kind == "added":
                _, c, l, pc, pl = ev
                parent = self.clusters[(pc, pl)] if pc is not None else None
                d = HierarchyDelta()
                self._add_cluster(c, l, parent, d)
            elif kind == "removed":
                _, c, l = ev
                cl = self.clusters[(c, l)]
                for child in list(cl.children):
                    child.parent = None
                cl.children.clear()
                d = HierarchyDelta()
                self._remove_cluster(cl, d)
            elif kind == "reparent":
                _, c, l, pc, pl = ev
                d = HierarchyDelta()
                self._set_parent(self.clusters[(c, l)], self.clusters[(pc, pl)], d)
            elif kind == "root":
                _, c, l = ev
                self.root = self.clusters[(c, l)] if c is not None else None
            else:
                raise ValueError(f"unknown event {kind}")

    def dump(self) -> str:
        lines = []
        for (center, level), c in sorted(
            self.clusters.items(), key=lambda kv: (-kv[0][1], kv[0][0])
        ):
            if c.parent is None:
                p = "none"
            else:
                p = f"{c.parent.center}@{c.parent.level}"
            lines.append(f"cluster {center} {level} parent={p}")
        return "\n".join(lines)
