"""Brute-force verifiers: exact stretch, MST/lightness, separation checks,
invariant scans, exhaustive d*, and a greedy-spanner baseline.

Everything here is deliberately quadratic-or-worse and shares no search code
with the maintained structures; the point is trust, not speed.  In
particular the invariant scan uses dense Floyd-Warshall matrices while the
maintained side runs a pruned Dijkstra.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra, floyd_warshall

from .config import Config, LOG_SNAP

INF = math.inf


# ---- metric basics ----


def pairwise_distances(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.linalg.norm(diff, axis=2)


def exact_stretch(edges, ids, coords):
    """Max over point pairs of (graph distance / Euclidean distance).

    `edges` maps (idA, idB) -> length; `ids` lists the alive point ids in
    the same order as the coordinate rows.  Returns (maxRatio, witnessPair);
    +inf ratio if the graph is disconnected.
    """
    n = len(ids)
    if n < 2:
        raise ValueError("stretch needs at least two points")
    row = {pid: i for i, pid in enumerate(ids)}
    if edges:
        us = [row[a] for (a, b) in edges]
        vs = [row[b] for (a, b) in edges]
        ws = list(edges.values())
        g = csr_matrix((ws, (us, vs)), shape=(n, n))
    else:
        g = csr_matrix((n, n))
    graph_d = dijkstra(g, directed=False)
    eu = pairwise_distances(coords)
    iu, ju = np.triu_indices(n, k=1)
    with np.errstate(invalid="ignore"):
        ratios = graph_d[iu, ju] / eu[iu, ju]
    worst = int(np.nanargmax(np.where(np.isnan(ratios), -1.0, ratios)))
    ratio = float(ratios[worst])
    pair = (ids[int(iu[worst])], ids[int(ju[worst])])
    return ratio, pair


def mst_weight(coords: np.ndarray) -> float:
    """Exact Euclidean MST weight by quadratic Prim growth."""
    n = coords.shape[0]
    if n < 1:
        raise ValueError("mst needs at least one point")
    if n == 1:
        return 0.0
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = np.linalg.norm(coords - coords[0], axis=1)
    best[0] = INF
    total = 0.0
    for _ in range(n - 1):
        j = int(np.argmin(np.where(in_tree, INF, best)))
        total += float(best[j])
        in_tree[j] = True
        d = np.linalg.norm(coords - coords[j], axis=1)
        best = np.minimum(best, d)
    return total


def aspect_ratio(coords: np.ndarray) -> float:
    n = coords.shape[0]
    if n < 2:
        raise ValueError("aspect ratio needs at least two points")
    dists = pairwise_distances(coords)
    iu = np.triu_indices(n, k=1)
    vals = dists[iu]
    if vals.min() == 0.0:
        raise ValueError("duplicate points")
    return float(vals.max() / vals.min())


# ---- structural checks ----


def verify_separation(hierarchy) -> list:
    """Same-level centers (explicit or implicit) must be > R^j apart."""
    violations = []
    chain = hierarchy.chain
    if not chain:
        return violations
    lowest = min(lo for lo, _ in chain.values())
    top = max(hi for _, hi in chain.values())
    store = hierarchy.store
    for j in range(lowest, top + 1):
        centers = sorted(p for p, (_, hi) in chain.items() if hi >= j)
        radius = hierarchy.R**j * (1.0 - 1e-12)
        for a in range(len(centers)):
            for b in range(a + 1, len(centers)):
                d = store.distance_any(centers[a], centers[b])
                if d <= radius:
                    violations.append((j, centers[a], centers[b], d))
    return violations


def _size_matrix(dists: np.ndarray, cfg: Config) -> np.ndarray:
    """Pair size per entry (diagonal and zeros get a sentinel of -2**62)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.log(dists) / math.log(cfg.c)
        r = np.rint(x)
        snap = np.abs(x - r) <= LOG_SNAP * np.maximum(1.0, np.abs(x))
    m = np.where(snap, r, np.floor(x))
    m = np.where(dists > 0.0, m, float(-(2**62)))
    return np.floor_divide(m.astype(np.int64), cfg.k)


def verify_invariants(light) -> list:
    """Re-derive every pair's classification from scratch.

    For each (index, size) stratum, builds the full extended-path weight
    matrix over alive points and runs dense Floyd-Warshall; independent of
    the maintained pruned search.  Returns Violation records in the same
    shape as light.check_pair.
    """
    from .light import Violation, REL_TOL

    cfg = light.config
    store = light.store
    ids = store.alive_ids()
    n = len(ids)
    if n == 0 or not light.registry:
        return []
    row = {pid: i for i, pid in enumerate(ids)}
    coords = store.coords_of(ids)
    dists = pairwise_distances(coords)
    sizes = _size_matrix(dists, cfg)

    strata: dict = {}
    for pair, ent in light.registry.items():
        strata.setdefault((ent.coord.index, ent.coord.size), []).append(pair)

    violations = []
    for (i, s), pairs in sorted(strata.items()):
        w = (1.0 + cfg.eps) * dists
        for (a, b), ln in light.member_adj_lengths(i):
            if a in row and b in row:
                w[row[a], row[b]] = ln
                w[row[b], row[a]] = ln
        w[sizes >= s] = INF
        np.fill_diagonal(w, 0.0)
        sp = floyd_warshall(w)
        for pair in sorted(pairs):
            ent = light.registry[pair]
            d = ent.length
            ds = float(sp[row[pair[0]], row[pair[1]]])
            if ent.member:
                if ds < (1.0 + cfg.eps_prime) * d * (1.0 - REL_TOL):
                    violations.append(Violation("Inv2", pair, i, ds, d))
            else:
                if ds > (1.0 + cfg.eps) * d * (1.0 + REL_TOL):
                    violations.append(Violation("Inv1", pair, i, ds, d))
    return violations


def brute_dstar(store, cfg: Config, members, i: int, u: int, v: int) -> float:
    """Exhaustive minimum extended path in bucket i (n <= 12).

    `members` is the set of member pairs of bucket i.
    """
    ids = store.alive_ids()
    if len(ids) > 12:
        raise ValueError("instance too large for exhaustive enumeration")
    size = cfg.pair_size_of_length(store.distance_any(u, v))
    member_set = {tuple(sorted(p)) for p in members}

    def weight(a, b):
        d = store.distance_any(a, b)
        if cfg.pair_size_of_length(d) >= size:
            return None
        if tuple(sorted((a, b))) in member_set:
            return d
        return (1.0 + cfg.eps) * d

    best = [INF]

    def dfs(node, used, acc):
        if acc >= best[0]:
            return
        if node == v:
            best[0] = acc
            return
        for nxt in ids:
            if nxt in used:
                continue
            w = weight(node, nxt)
            if w is not None:
                used.add(nxt)
                dfs(nxt, used, acc + w)
                used.discard(nxt)

    dfs(u, {u}, 0.0)
    return best[0]


def greedy_spanner(coords: np.ndarray, t: float) -> dict:
    """Classic greedy t-spanner: pairs ascending, keep iff current graph
    distance exceeds t * d.  Returns {(i, j): length} over row indices."""
    n = coords.shape[0]
    if n < 1:
        raise ValueError("need at least one point")
    if t <= 1.0:
        raise ValueError("t must be > 1")
    if n == 1:
        return {}
    dists = pairwise_distances(coords)
    iu, ju = np.triu_indices(n, k=1)
    order = np.argsort(dists[iu, ju], kind="stable")
    sp = np.full((n, n), INF)
    np.fill_diagonal(sp, 0.0)
    edges = {}
    for idx in order:
        a, b = int(iu[idx]), int(ju[idx])
        d = float(dists[a, b])
        if sp[a, b] <= t * d:
            continue
        edges[(a, b)] = d
        via = np.minimum(sp[:, a, None] + d + sp[None, b, :],
                         sp[:, b, None] + d + sp[None, a, :])
        np.minimum(sp, via, out=sp)
    return edges


# ---- aggregate report ----


@dataclass
class VerificationReport:
    op_seq: int
    max_stretch: float
    witness_pair: tuple
    mst_weight: float
    spanner_weight: float
    lightness: float
    max_degree: int
    max_repetition: int
    separation_violations: list = field(default_factory=list)
    invariant_violations: list = field(default_factory=list)

    def clean(self) -> bool:
        return not self.separation_violations and not self.invariant_violations

    def to_json_dict(self) -> dict:
        def enc(x):
            if isinstance(x, float) and math.isinf(x):
                return "inf"
            return x

        return {
            "opSeq": self.op_seq,
            "maxStretch": enc(self.max_stretch),
            "witnessPair": list(self.witness_pair),
            "mstWeight": enc(self.mst_weight),
            "spannerWeight": enc(self.spanner_weight),
            "lightness": enc(self.lightness),
            "maxDegree": self.max_degree,
            "maxRepetition": self.max_repetition,
            "separationViolations": [list(v) for v in self.separation_violations],
            "invariantViolations": [
                [v.kind, list(v.pair), v.index, enc(v.dstar), v.dist]
                for v in self.invariant_violations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def full_report(spanner, op_seq: int = 0) -> VerificationReport:
    """Run the complete oracle suite against a DynamicSpanner snapshot."""
    store = spanner.store
    ids = store.alive_ids()
    coords = store.coords_of(ids)
    edges = spanner.light.light_edges()
    weight = float(sum(edges.values()))
    if len(ids) >= 2:
        stretch, witness = exact_stretch(edges, ids, coords)
        mst = mst_weight(coords)
        lightness = weight / mst if mst > 0 else INF
    else:
        stretch, witness = 1.0, ()
        mst = mst_weight(coords) if len(ids) else 0.0
        lightness = 0.0
    reps = spanner.sparse.repetition_counts()
    return VerificationReport(
        op_seq=op_seq,
        max_stretch=stretch,
        witness_pair=witness,
        mst_weight=mst,
        spanner_weight=weight,
        lightness=lightness,
        max_degree=spanner.sparse.max_degree(),
        max_repetition=max(reps.values(), default=0),
        separation_violations=verify_separation(spanner.hierarchy),
        invariant_violations=verify_invariants(spanner.light),
    )
