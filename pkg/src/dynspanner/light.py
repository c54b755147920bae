"""Bucketed light spanner: membership maintenance over the potential pairs.

Edges are partitioned by index = floor(log_c len) mod k.  Within a bucket,
the extended-path distance d* between u and v is the shortest path in the
complete graph on alive points that uses only edges of strictly smaller
size, where bucket members cost their length and everything else costs
(1+eps) times its length.  The two invariants kept here:

  non-member with this index:  d* < (1+eps)  * d   (stretch side)
  member:                      d* > (1+eps') * d   (lightness side)

Violations are repaired by membership flips (plus, for a member removal, a
greedy re-add pass over same-index same-size pairs).  A dirty set tracks
which pairs may have changed classification; soundness of the pruning is
cross-checked by the independent full-scan verifier in the oracle module.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .config import Config, LOG_SNAP

REL_TOL = 1e-9           # tie tolerance: at-threshold pairs are non-violations
DIRTY_SLACK = 1.0 + 1e-6  # conservative margin for dirty-set pruning
INF = math.inf


@dataclass(frozen=True)
class Violation:
    kind: str          # "Inv1" | "Inv2"
    pair: tuple
    index: int
    dstar: float
    dist: float


@dataclass
class MaintenanceSummary:
    events: list
    iterations: int
    converged: bool


class Entry:
    __slots__ = ("coord", "length", "member", "refs")

    def __init__(self, coord, length):
        self.coord = coord
        self.length = length
        self.member = False
        self.refs = 0


class LightSpanner:
    def __init__(self, store, sparse, config: Config):
        self.store = store
        self.sparse = sparse
        self.config = config
        self.registry: dict = {}      # pair -> Entry
        self.buckets: dict = {}       # index -> set of member pairs
        self.member_adj: dict = {}    # index -> {node: {nb: length}}
        self._by_index: dict = {}     # index -> set of registered pairs
        self.dirty: set = set()
        self.events_since_converged = 0
        self.event_clock = 0
        self._geom_cache = None
        self._ids = []
        self._coords = None
        self._row = {}
        self._points_stale = True

    # ---- point-set sync ----

    def _sync_points(self):
        if not self._points_stale:
            return
        self._ids = self.store.alive_ids()
        self._coords = self.store.coords_of(self._ids)
        self._row = {pid: i for i, pid in enumerate(self._ids)}
        self._points_stale = False

    def mark_points_stale(self):
        self._points_stale = True

    # ---- extended-path distance ----

    def d_star(self, i: int, u: int, v: int, radius_cap: float) -> float:
        """Shortest extended path in bucket i between u and v, pruned at
        radius_cap; +inf if none within the cap."""
        if u == v:
            raise ValueError("identical endpoints")
        self._sync_points()
        cfg = self.config
        size = cfg.pair_size_of_length(self.store.distance_any(u, v))
        msize_limit = cfg.k * size  # usable edges have snapped log < this
        ru, rv = self._row[u], self._row[v]
        # Any point on a path of total weight <= cap lies in the ellipse
        # d(u,.) + d(.,v) <= cap, so restrict the search to those rows.
        all_coords = self._coords
        du = np.linalg.norm(all_coords - all_coords[ru], axis=1)
        dv = np.linalg.norm(all_coords - all_coords[rv], axis=1)
        cand = np.flatnonzero(du + dv <= radius_cap)
        sub_of_row = {int(r): j for j, r in enumerate(cand)}
        coords = all_coords[cand]
        n = len(cand)
        su, sv = sub_of_row[ru], sub_of_row[rv]
        dist = np.full(n, INF)
        dist[su] = 0.0
        done = np.zeros(n, dtype=bool)
        adj = self.member_adj.get(i, {})
        logc = math.log(cfg.c)
        heap = [(0.0, su)]
        while heap:
            d0, y = heapq.heappop(heap)
            if done[y] or d0 > dist[y]:
                continue
            if y == sv:
                return d0
            done[y] = True
            lens = np.linalg.norm(coords - coords[y], axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                x = np.log(lens) / logc
                r = np.rint(x)
                snap = np.abs(x - r) <= LOG_SNAP * np.maximum(1.0, np.abs(x))
            m = np.where(snap, r, np.floor(x))
            usable = (lens > 0.0) & (m < msize_limit) & ~done
            w = (1.0 + cfg.eps) * lens
            yid = self._ids[int(cand[y])]
            for nb, ln in adj.get(yid, {}).items():
                rn = sub_of_row.get(self._row.get(nb, -1))
                if rn is not None and usable[rn]:
                    w[rn] = ln
            nd = d0 + w
            improve = usable & (nd < dist) & (nd <= radius_cap)
            for z in np.flatnonzero(improve):
                dist[z] = nd[z]
                heapq.heappush(heap, (float(nd[z]), int(z)))
        return INF

    # ---- invariant checks ----

    def check_pair(self, pair):
        ent = self.registry[pair]
        d = ent.length
        i = ent.coord.index
        verdict = self._one_hop_verdict(pair, ent)
        if verdict is not None:
            return None  # bound already decides there is no violation
        cap = (1.0 + self.config.eps) * d * (1.0 + REL_TOL)
        ds = self.d_star(i, pair[0], pair[1], cap)
        if ent.member:
            thresh = (1.0 + self.config.eps_prime) * d
            if ds < thresh * (1.0 - REL_TOL):
                return Violation("Inv2", pair, i, ds, d)
        else:
            thresh = (1.0 + self.config.eps) * d
            if ds > thresh * (1.0 + REL_TOL):
                return Violation("Inv1", pair, i, ds, d)
        return None

    def _one_hop_verdict(self, pair, ent):
        """Cheap vectorized screen deciding most checks without a search.

        Every extended path has at least two edges (the pair's own edge has
        equal size and is never usable), so min over intermediates z of
        d(u,z)+d(z,v) lower-bounds d*.  If that already clears the Inv2
        threshold, a member cannot violate.  For a non-member, the best
        usable two-edge path at full (1+eps) weight upper-bounds d*; if it
        sits under the Inv1 threshold there is no violation.  Returns True
        when provably clean, None when the full search is needed.
        """
        self._sync_points()
        cfg = self.config
        d = ent.length
        u, v = pair
        coords = self._coords
        ru, rv = self._row[u], self._row[v]
        lu = np.linalg.norm(coords - coords[ru], axis=1)
        lv = np.linalg.norm(coords - coords[rv], axis=1)
        mid = lu + lv
        mid[ru] = INF
        mid[rv] = INF
        if ent.member:
            # d* >= min two-edge geometric length.
            if np.min(mid, initial=INF) >= (1.0 + cfg.eps_prime) * d * (
                1.0 - REL_TOL
            ):
                return True
            return None
        # Upper bound: both hops must individually be usable (smaller size).
        limit = cfg.size_lower_length(ent.coord.size) * (1.0 - LOG_SNAP)
        ok = (lu < limit) & (lv < limit)
        ok[ru] = False
        ok[rv] = False
        if not np.any(ok):
            return None
        best = float(np.min(mid[ok])) * (1.0 + cfg.eps)
        if best <= (1.0 + cfg.eps) * d * (1.0 + REL_TOL):
            return True
        return None

    def scan_violations(self):
        """Full scan, in maintenance order (diagnostic; oracle has its own)."""
        out = []
        for pair in self._scan_order(self.registry):
            v = self.check_pair(pair)
            if v is not None:
                out.append(v)
        return out

    def _scan_order(self, pairs):
        return sorted(
            pairs,
            key=lambda p: (
                self.registry[p].coord.size,
                self.registry[p].coord.index,
                p,
            ),
        )

    # ---- fixes ----

    def fix_inv1(self, pair) -> list:
        v = self.check_pair(pair)
        if v is None or v.kind != "Inv1":
            raise ValueError(f"pair {pair} does not violate Invariant 1")
        return self._fix_inv1_unchecked(pair)

    def _fix_inv1_unchecked(self, pair) -> list:
        self._set_member(pair, True)
        # Own d* is unaffected by own membership, so the pair is clean now.
        self.dirty.discard(pair)
        return [("add", pair)]

    def fix_inv2(self, pair) -> list:
        v = self.check_pair(pair)
        if v is None or v.kind != "Inv2":
            raise ValueError(f"pair {pair} does not violate Invariant 2")
        return self._fix_inv2_unchecked(pair)

    def _fix_inv2_unchecked(self, pair) -> list:
        ent = self.registry[pair]
        coord = ent.coord
        self._set_member(pair, False)
        self.dirty.discard(pair)
        events = [("remove", pair)]
        # Greedy re-add pass over same-index same-size pairs until no
        # Invariant 1 violation remains at this level.
        while True:
            cand = None
            for p in sorted(self._by_index.get(coord.index, ())):
                e = self.registry[p]
                if e.member or e.coord != coord:
                    continue
                v = self.check_pair(p)
                if v is not None and v.kind == "Inv1":
                    cand = p
                    break
            if cand is None:
                break
            events.extend(self._fix_inv1_unchecked(cand))
        return events

    def run_maintenance(self, cap=None) -> MaintenanceSummary:
        if cap is None:
            cap = 50 * self.events_since_converged + 1000
        iterations = 0
        events = []
        pending = {}  # pair -> (Violation, clock at check time)
        converged = False
        while iterations < cap:
            for pair in sorted(self.dirty):
                self.dirty.discard(pair)
                if pair not in self.registry:
                    pending.pop(pair, None)
                    continue
                v = self.check_pair(pair)
                if v is None:
                    pending.pop(pair, None)
                else:
                    pending[pair] = (v, self.event_clock)
            if not pending:
                converged = True
                break
            pair = min(
                pending,
                key=lambda p: (
                    self.registry[p].coord.size,
                    0 if pending[p][0].kind == "Inv2" else 1,
                    self.registry[p].coord.index,
                    p,
                ),
            )
            v, clock = pending.pop(pair)
            if clock < self.event_clock:
                # Stale check: events since may have resolved the violation.
                v = self.check_pair(pair)
                if v is None:
                    continue
            iterations += 1
            if v.kind == "Inv2":
                new_events = self._fix_inv2_unchecked(pair)
            else:
                new_events = self._fix_inv1_unchecked(pair)
            events.extend(new_events)
            for ev in new_events:
                for p in ev[1:]:
                    pending.pop(p, None)
        if converged:
            self.events_since_converged = 0
        return MaintenanceSummary(events, iterations, converged)

    # ---- point operations (Alg. driven by the sparse diff) ----

    def on_point_inserted(self, s1delta, new_pid: int) -> MaintenanceSummary:
        self.mark_points_stale()
        self._sync_points()
        events = []
        for old, new in s1delta.reassigned:
            events.extend(self._apply_reassign(old, new))
        for pair in sorted(s1delta.removed):
            events.extend(self._drop_pair(pair))
        fresh = []
        for pair, level in s1delta.added:
            if self._register(pair):
                fresh.append(pair)
        # Conditional additions, most constrained (smallest) first.
        for pair in self._scan_order(fresh):
            v = self.check_pair(pair)
            if v is not None and v.kind == "Inv1":
                events.extend(self._fix_inv1_unchecked(pair))
        self._mark_dirty_point(new_pid, shrinks=True)
        summary = self.run_maintenance()
        summary.events = events + summary.events
        return summary

    def on_point_deleted(self, s1delta, deleted_pid: int) -> MaintenanceSummary:
        self.mark_points_stale()
        self._sync_points()
        self._mark_dirty_point(deleted_pid, shrinks=False)
        events = []
        for pair in sorted(s1delta.removed):
            events.extend(self._drop_pair(pair))
        for pair, level in sorted(s1delta.added):
            if self._register(pair):
                # Unconditional add: unlike the insert path this is not
                # backed by a verified Inv1 violation, so the new member
                # stays dirty and gets its own Inv2 check in maintenance.
                self._set_member(pair, True)
                events.append(("add", pair))
        for old, new in s1delta.reassigned:
            events.extend(self._apply_reassign(old, new))
        summary = self.run_maintenance()
        summary.events = events + summary.events
        return summary

    # ---- registry / membership plumbing ----

    def _register(self, pair) -> bool:
        """Increment the key refcount; True if the pair is new to the registry."""
        ent = self.registry.get(pair)
        if ent is not None:
            ent.refs += 1
            return False
        length = self.store.distance_any(pair[0], pair[1])
        ent = Entry(self.config.pair_bucket_of_length(length), length)
        ent.refs = 1
        self.registry[pair] = ent
        self._geom_cache = None
        self._by_index.setdefault(ent.coord.index, set()).add(pair)
        self.dirty.add(pair)
        return True

    def _drop_pair(self, pair) -> list:
        ent = self.registry.get(pair)
        if ent is None:
            return []
        ent.refs -= 1
        if ent.refs > 0:
            return []
        events = []
        if ent.member:
            self._set_member(pair, False)
            events.append(("remove", pair))
        self._by_index[ent.coord.index].discard(pair)
        del self.registry[pair]
        self.dirty.discard(pair)
        self._geom_cache = None
        return events

    def _apply_reassign(self, old, new) -> list:
        was_member = old in self.registry and self.registry[old].member
        old_vanishes = old in self.registry and self.registry[old].refs == 1
        events = []
        if old_vanishes and was_member:
            self._set_member(old, False)
            fresh = self._register(new)
            self._finish_drop(old)
            if fresh:
                self._set_member(new, True)
                # Still dirty: the transferred membership has new endpoints
                # and must pass its own Inv2 check.
                events.append(("reassign", old, new))
            else:
                events.append(("remove", old))
        else:
            events.extend(self._drop_pair(old))
            self._register(new)
        return events

    def _finish_drop(self, pair):
        ent = self.registry[pair]
        ent.refs -= 1
        assert ent.refs == 0
        self._by_index[ent.coord.index].discard(pair)
        del self.registry[pair]
        self.dirty.discard(pair)
        self._geom_cache = None

    def _set_member(self, pair, member: bool) -> None:
        ent = self.registry[pair]
        if ent.member == member:
            return
        ent.member = member
        i = ent.coord.index
        bucket = self.buckets.setdefault(i, set())
        adj = self.member_adj.setdefault(i, {})
        a, b = pair
        if member:
            bucket.add(pair)
            adj.setdefault(a, {})[b] = ent.length
            adj.setdefault(b, {})[a] = ent.length
        else:
            bucket.discard(pair)
            adj.get(a, {}).pop(b, None)
            adj.get(b, {}).pop(a, None)
        self.events_since_converged += 1
        self.event_clock += 1
        self._mark_dirty_membership(pair, ent, shrinks=member)

    # ---- dirty-set pruning ----
    #
    # d* moves monotonically per event: additions (new member edge, new
    # point) can only shrink other pairs' d*, which can only flip a MEMBER
    # into an Inv2 violation, and only if the new path gets under
    # (1+eps')*d.  Removals can only grow d*, which can only flip a
    # NON-member into an Inv1 violation, and only if its old witness path
    # (within (1+eps)*d) could have crossed the removed element.

    def _geom(self):
        """Cached registry geometry for the vectorized dirty scans."""
        if self._geom_cache is None:
            pairs = list(self.registry)
            ents = [self.registry[p] for p in pairs]
            a = self.store.coords_of([p[0] for p in pairs]) if pairs else None
            b = self.store.coords_of([p[1] for p in pairs]) if pairs else None
            self._geom_cache = {
                "pairs": pairs,
                "A": a,
                "B": b,
                "len": np.array([e.length for e in ents]),
                "size": np.array([e.coord.size for e in ents]),
                "index": np.array([e.coord.index for e in ents]),
            }
        return self._geom_cache

    def _mark_dirty_membership(self, pair, ent, shrinks: bool) -> None:
        g = self._geom()
        if not g["pairs"]:
            return
        cy = self.store.coords(pair[0])
        cz = self.store.coords(pair[1])
        cfg = self.config
        budget = (1.0 + cfg.eps_prime) if shrinks else (1.0 + cfg.eps)
        ayz = np.linalg.norm(g["A"] - cy, axis=1) + np.linalg.norm(
            g["B"] - cz, axis=1
        )
        azy = np.linalg.norm(g["A"] - cz, axis=1) + np.linalg.norm(
            g["B"] - cy, axis=1
        )
        lb = np.minimum(ayz, azy) + ent.length
        hit = (
            (g["index"] == ent.coord.index)
            & (g["size"] > ent.coord.size)
            & (lb <= budget * g["len"] * DIRTY_SLACK)
        )
        for j in np.flatnonzero(hit):
            p = g["pairs"][j]
            if self.registry[p].member == shrinks:
                self.dirty.add(p)

    def _mark_dirty_point(self, x: int, shrinks: bool) -> None:
        g = self._geom()
        if not g["pairs"]:
            return
        cx = self.store.coords(x)
        cfg = self.config
        budget = (1.0 + cfg.eps_prime) if shrinks else (1.0 + cfg.eps)
        lb = np.linalg.norm(g["A"] - cx, axis=1) + np.linalg.norm(
            g["B"] - cx, axis=1
        )
        hit = lb <= budget * g["len"] * DIRTY_SLACK
        for j in np.flatnonzero(hit):
            p = g["pairs"][j]
            if self.registry[p].member == shrinks:
                self.dirty.add(p)

    # ---- reporting ----

    def member_adj_lengths(self, i: int):
        """(pair, length) for every member of bucket i."""
        for pair in self.buckets.get(i, ()):
            yield pair, self.registry[pair].length

    def light_edges(self) -> dict:
        """All bucket members with lengths (the spanner's edge set)."""
        return {
            pair: self.registry[pair].length
            for members in self.buckets.values()
            for pair in members
        }

    def potential_report(self, diag_factor: float = 4.0):
        cfg = self.config
        per_bucket: dict = {}
        clamped = []
        for pair, ent in self.registry.items():
            i = ent.coord.index
            cap = diag_factor * (1.0 + cfg.eps) * ent.length
            ds = self.d_star(i, pair[0], pair[1], cap)
            if ds > cap:
                ds = cap
                clamped.append(pair)
            ratio = ds / ent.length
            if ent.member:
                p = (1.0 + cfg.eps) - ratio
            else:
                p = cfg.Cphi * (ratio - (1.0 + cfg.eps_prime))
            per_bucket[i] = per_bucket.get(i, 0.0) + p
        phi = sum(per_bucket.values())
        slack = 0.5 * cfg.p_max * sum(
            cfg.Dmax - self.sparse.s1_degree(v) for v in self.store.alive_ids()
        )
        return PotentialReport(per_bucket, phi, slack, phi + slack, clamped)

    def dump(self) -> str:
        lines = []
        for i in sorted(self.buckets):
            for a, b in sorted(self.buckets[i]):
                lines.append(f"bucket {i} {a} {b} {self.registry[(a, b)].length!r}")
        return "\n".join(lines)


@dataclass
class PotentialReport:
    per_bucket: dict
    phi: float
    slack: float
    phi_star: float
    clamped: list = field(default_factory=list)
