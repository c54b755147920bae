"""Trace generation and (de)serialization.

Traces are plain text: first non-comment line `dim <d>`, then one op per
line -- `+ <x1> ... <xd>` (ids auto-assigned 0,1,2,... in insert order) or
`- <id>`.  `#` starts a comment.  Coordinates render as shortest
round-trip decimals (repr), so parse(render(t)) == t exactly.

Randomness comes from xorshift64*, a tiny documented 64-bit shift-register
generator, rather than a library RNG: the byte-exact trace for a given
(generator, seed, params) triple must be reproducible from the algorithm
description alone, in any language.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

MASK64 = (1 << 64) - 1


class XorShift64Star:
    """xorshift64*: x ^= x>>12; x ^= x<<25; x ^= x>>27; return x * M >> 32.

    M = 2685821657736338717.  State must be nonzero; seed 0 is remapped.
    """

    MULT = 2685821657736338717

    def __init__(self, seed: int):
        self.state = (seed & MASK64) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * self.MULT) & MASK64

    def next_float(self) -> float:
        """Uniform in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection on the top 53 bits."""
        if n <= 0:
            raise ValueError("n must be positive")
        span = 1 << 53
        limit = span - span % n
        while True:
            x = self.next_u64() >> 11
            if x < limit:
                return x % n


@dataclass(frozen=True)
class TraceOp:
    kind: str  # "insert" | "delete"
    coords: tuple = ()
    target: int = -1


@dataclass
class Trace:
    dim: int
    ops: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


class TraceError(ValueError):
    pass


def _draw_point(rng, dim, bbox, taken: set) -> tuple:
    lo, hi = bbox
    while True:
        pt = tuple(lo + (hi - lo) * rng.next_float() for _ in range(dim))
        if pt not in taken:
            taken.add(pt)
            return pt


def gen_uniform(n: int, d: int, seed: int, bbox=(0.0, 100.0)) -> Trace:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = XorShift64Star(seed)
    taken: set = set()
    ops = [TraceOp("insert", _draw_point(rng, d, bbox, taken)) for _ in range(n)]
    return Trace(d, ops, {"generator": "uniform", "seed": seed, "n": n, "bbox": bbox})


def gen_clustered(n, d, seed, num_clusters, spread, bbox=(0.0, 100.0)) -> Trace:
    """Mixture of balls: cluster centers uniform in bbox, offsets uniform in
    a cube of half-width `spread` around the chosen center."""
    if n < 1 or num_clusters < 1:
        raise ValueError("n and num_clusters must be >= 1")
    rng = XorShift64Star(seed)
    centers = [
        tuple(
            bbox[0] + (bbox[1] - bbox[0]) * rng.next_float() for _ in range(d)
        )
        for _ in range(num_clusters)
    ]
    taken: set = set()
    ops = []
    for _ in range(n):
        c = centers[rng.next_below(num_clusters)]
        while True:
            pt = tuple(
                c[j] + spread * (2.0 * rng.next_float() - 1.0) for j in range(d)
            )
            if pt not in taken:
                taken.add(pt)
                break
        ops.append(TraceOp("insert", pt))
    return Trace(
        d,
        ops,
        {
            "generator": "clustered",
            "seed": seed,
            "n": n,
            "numClusters": num_clusters,
            "spread": spread,
        },
    )


def gen_churn(n_base, n_ops, seed, delete_fraction, d=2, bbox=(0.0, 100.0)) -> Trace:
    if not 0.0 <= delete_fraction < 1.0:
        raise ValueError("delete_fraction must be in [0, 1)")
    rng = XorShift64Star(seed)
    taken: set = set()
    ops = [TraceOp("insert", _draw_point(rng, d, bbox, taken)) for _ in range(n_base)]
    alive = list(range(n_base))
    next_id = n_base
    for _ in range(n_ops):
        if len(alive) > 2 and rng.next_float() < delete_fraction:
            idx = rng.next_below(len(alive))
            ops.append(TraceOp("delete", target=alive.pop(idx)))
        else:
            ops.append(TraceOp("insert", _draw_point(rng, d, bbox, taken)))
            alive.append(next_id)
            next_id += 1
    return Trace(
        d,
        ops,
        {
            "generator": "churn",
            "seed": seed,
            "nBase": n_base,
            "nOps": n_ops,
            "deleteFraction": delete_fraction,
        },
    )


def parse_trace(text: str) -> Trace:
    dim = None
    ops = []
    next_id = 0
    alive: set = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if dim is None:
            if parts[0] != "dim" or len(parts) != 2:
                raise TraceError(f"line {lineno}: expected 'dim <d>'")
            try:
                dim = int(parts[1])
            except ValueError:
                raise TraceError(f"line {lineno}: bad dimension {parts[1]!r}")
            if dim < 1:
                raise TraceError(f"line {lineno}: dim must be >= 1")
            continue
        if parts[0] == "+":
            if len(parts) != dim + 1:
                raise TraceError(
                    f"line {lineno}: expected {dim} coordinates, got {len(parts) - 1}"
                )
            try:
                coords = tuple(float(x) for x in parts[1:])
            except ValueError:
                raise TraceError(f"line {lineno}: bad coordinate")
            if not all(math.isfinite(x) for x in coords):
                raise TraceError(f"line {lineno}: coordinates must be finite")
            ops.append(TraceOp("insert", coords))
            alive.add(next_id)
            next_id += 1
        elif parts[0] == "-":
            if len(parts) != 2:
                raise TraceError(f"line {lineno}: expected '- <id>'")
            try:
                target = int(parts[1])
            except ValueError:
                raise TraceError(f"line {lineno}: bad id {parts[1]!r}")
            if target not in alive:
                raise TraceError(f"line {lineno}: delete of dead id {target}")
            alive.discard(target)
            ops.append(TraceOp("delete", target=target))
        else:
            raise TraceError(f"line {lineno}: unknown op {parts[0]!r}")
    if dim is None:
        raise TraceError("missing 'dim <d>' header")
    return Trace(dim, ops)


def render_trace(trace: Trace) -> str:
    lines = [f"dim {trace.dim}"]
    for op in trace.ops:
        if op.kind == "insert":
            lines.append("+ " + " ".join(repr(float(x)) for x in op.coords))
        else:
            lines.append(f"- {op.target}")
    return "\n".join(lines) + "\n"
