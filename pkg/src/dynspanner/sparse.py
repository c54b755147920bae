"""Cluster-level spanner, block structure, representatives, and the
bounded-degree point-level graph.

The cluster spanner has two edge classes: same-level pairs of (possibly
implicit) clusters whose centers are within lam * R^level, and parent-child
edges.  Chains are cut into blocks of block_len levels; each non-empty block
is represented by a neighbor center drawn from the next lower non-empty
same-parity block (the last block of each parity list, and every empty
block, falls back to the chain's own center).  Point-level edges connect
representatives; self-loops vanish, parallels are merged by refcount.

State is recomputed from the hierarchy after every update and diffed against
the previous state; correctness rests on this full-rebuild equivalence, not
on incremental minimality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config, LOG_SNAP


@dataclass
class S1Delta:
    """Potential-pair level diff plus raw point-edge churn."""

    added: list = field(default_factory=list)       # [(pair, level)]
    removed: list = field(default_factory=list)     # [pair]
    reassigned: list = field(default_factory=list)  # [(old_pair, new_pair)]
    raw_edge_events: int = 0

    def total_pair_events(self) -> int:
        return len(self.added) + len(self.removed) + len(self.reassigned)


def _ordered(a: int, b: int):
    return (a, b) if a < b else (b, a)


class SparseSpanner:
    def __init__(self, store, hierarchy, config: Config):
        self.store = store
        self.hierarchy = hierarchy
        self.config = config
        # (chain_pair, bucket_index) -> (level, point_pair)
        self.potential_map: dict = {}
        self.raw_counts: dict = {}      # point_pair -> refcount
        self.adjacency: dict = {}       # point -> set of neighbors
        self._assigned: dict = {}       # center -> {block: rep}
        self._blocks: dict = {}         # center -> {block: (level, witness)}

    # ---- queries ----

    def s1_degree(self, q: int) -> int:
        return len(self.adjacency.get(q, ()))

    def max_degree(self) -> int:
        return max((len(v) for v in self.adjacency.values()), default=0)

    def potential_pairs(self) -> set:
        """Deduplicated point pairs: one per (chain pair, bucket index)."""
        return {pair for (_, pair) in self.potential_map.values()}

    def representative(self, center: int, level: int) -> int:
        block = level // self.config.block_len
        return self._assigned.get(center, {}).get(block, center)

    def repetition_counts(self) -> dict:
        """How many (chain, block) elements each point represents.

        Cross-chain assignments plus the chain-own parity-list tails; the
        empty-block fallback to the own center is a bookkeeping convention
        and is not counted.
        """
        counts: dict = {}
        for center, assigned in self._assigned.items():
            for _, rep in assigned.items():
                counts[rep] = counts.get(rep, 0) + 1
        return counts

    def dump(self) -> str:
        lines = [
            f"s1 {a} {b} {cnt}"
            for (a, b), cnt in sorted(self.raw_counts.items())
        ]
        return "\n".join(lines)

    # ---- rebuild & diff ----

    def refresh(self) -> S1Delta:
        """Recompute everything from the hierarchy and diff the potential map."""
        old_map = self.potential_map
        old_edges = set(self.raw_counts)
        self._rebuild()
        delta = S1Delta()
        for key in sorted(set(old_map) | set(self.potential_map)):
            old = old_map.get(key)
            new = self.potential_map.get(key)
            if old is None:
                delta.added.append((new[1], new[0]))
            elif new is None:
                delta.removed.append(old[1])
            elif old[1] != new[1]:
                delta.reassigned.append((old[1], new[1]))
        new_edges = set(self.raw_counts)
        delta.raw_edge_events = len(old_edges ^ new_edges)
        return delta

    def _rebuild(self) -> None:
        cfg = self.config
        h = self.hierarchy
        centers = h.centers()
        n = len(centers)
        self._blocks = {c: {} for c in centers}
        self._assigned = {}
        self.potential_map = {}
        self.raw_counts = {}
        self.adjacency = {}
        if n == 0:
            return

        # Cached per-pair distance and bucket index over centers; every S1
        # endpoint is a center, so _record_edge can use table lookups.
        self._crow = {c: i for i, c in enumerate(centers)}
        coords = self.store.coords_of(centers)
        diff = coords[:, None, :] - coords[None, :, :]
        self._cdist = np.linalg.norm(diff, axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.log(self._cdist) / np.log(cfg.c)
            r = np.rint(x)
            snap = np.abs(x - r) <= LOG_SNAP * np.maximum(1.0, np.abs(x))
        m = np.where(snap, r, np.floor(x))
        m = np.where(self._cdist > 0.0, m, 0.0)
        self._cindex = np.mod(m.astype(np.int64), cfg.k)

        intervals = self._type1_intervals(centers)

        # Non-empty blocks with deterministic witnesses: the neighbor with
        # the smallest (level, id) among the block's type-I contacts.
        bl = cfg.block_len
        for (p, q), (lo, hi) in intervals.items():
            for b in range(lo // bl, hi // bl + 1):
                l = max(lo, b * bl)
                for me, other in ((p, q), (q, p)):
                    cur = self._blocks[me].get(b)
                    if cur is None or (l, other) < cur:
                        self._blocks[me][b] = (l, other)

        for p in centers:
            blocks = self._blocks[p]
            assigned = {}
            nonempty = sorted(blocks, reverse=True)
            for parity in (0, 1):
                lst = [b for b in nonempty if b % 2 == parity]
                for i, b in enumerate(lst):
                    if i + 1 < len(lst):
                        assigned[b] = blocks[lst[i + 1]][1]
                    else:
                        assigned[b] = p
            self._assigned[p] = assigned

        # Type I images; representatives are constant within a block, so one
        # record per block segment with the segment's level span as count.
        for (p, q), (lo, hi) in intervals.items():
            ap = self._assigned[p]
            aq = self._assigned[q]
            for b in range(lo // bl, hi // bl + 1):
                l1 = max(lo, b * bl)
                l2 = min(hi, (b + 1) * bl - 1)
                self._record_edge(
                    ap.get(b, p), aq.get(b, q), (p, q), l1, count=l2 - l1 + 1
                )

        # Cross-center parent-child images.
        for (center, level), cl in h.clusters.items():
            par = cl.parent
            if par is None or par.center == center:
                continue
            a = self.representative(par.center, par.level)
            b = self.representative(center, level)
            self._record_edge(a, b, _ordered(par.center, center), level)

        # Same-center chain links at block boundaries (explicit or implicit).
        for p in centers:
            blocks = self._blocks[p]
            if not blocks:
                continue
            top_block = h.chain_top_level(p) // bl
            for b in range(min(blocks) - 1, top_block):
                a = self.representative(p, (b + 1) * bl)
                c = self.representative(p, (b + 1) * bl - 1)
                self._record_edge(a, c, (p, p), (b + 1) * bl - 1)

    def _record_edge(self, a, b, chain_pair, level, count=1) -> None:
        if a == b:
            return  # self-loops carry no metric information
        pair = _ordered(a, b)
        self.raw_counts[pair] = self.raw_counts.get(pair, 0) + count
        self.adjacency.setdefault(a, set()).add(b)
        self.adjacency.setdefault(b, set()).add(a)
        ia, ib = self._crow[a], self._crow[b]
        key = (chain_pair, int(self._cindex[ia, ib]))
        cur = self.potential_map.get(key)
        if cur is None or level < cur[0]:
            self.potential_map[key] = (level, pair)

    def _type1_intervals(self, centers) -> dict:
        """Level intervals [lo, hi] of same-level contact per chain pair."""
        cfg = self.config
        h = self.hierarchy
        n = len(centers)
        if n < 2:
            return {}
        tops = np.array([h.chain_top_level(c) for c in centers])
        dists = self._cdist
        iu, ju = np.triu_indices(n, k=1)
        d = dists[iu, ju]
        x = np.log(d / cfg.lam) / np.log(cfg.R)
        r = np.rint(x)
        snap = np.abs(x - r) <= LOG_SNAP * np.maximum(1.0, np.abs(x))
        lo = np.where(snap, r, np.ceil(x)).astype(np.int64)
        hi = np.minimum(tops[iu], tops[ju])
        mask = lo <= hi
        return {
            (centers[i], centers[j]): (int(l), int(hh))
            for i, j, l, hh in zip(iu[mask], ju[mask], lo[mask], hi[mask])
        }
