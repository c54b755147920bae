import math

import pytest

from dynspanner import workload
from dynspanner.workload import (
    Trace,
    TraceError,
    TraceOp,
    XorShift64Star,
    gen_churn,
    gen_clustered,
    gen_uniform,
    parse_trace,
    render_trace,
)


def test_rng_determinism_and_zero_seed():
    a = XorShift64Star(42)
    b = XorShift64Star(42)
    assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]
    z = XorShift64Star(0)
    assert z.state != 0  # zero state would be a fixed point
    x = z.next_float()
    assert 0.0 <= x < 1.0


def test_rng_next_below_range():
    rng = XorShift64Star(9)
    vals = [rng.next_below(7) for _ in range(1000)]
    assert set(vals) <= set(range(7))
    with pytest.raises(ValueError):
        rng.next_below(0)


def test_gen_uniform_basics():
    t = gen_uniform(1, 2, seed=7)
    assert len(t.ops) == 1 and t.ops[0].kind == "insert"
    t1 = gen_uniform(100, 2, seed=7)
    t2 = gen_uniform(100, 2, seed=7)
    assert t1.ops == t2.ops
    assert render_trace(t1) == render_trace(t2)


def test_gen_uniform_prefix_property():
    # Sequential draws: a shorter trace is a strict prefix of a longer one
    # with the same seed (this is what lets experiments share runs).
    small = gen_uniform(250, 2, seed=3)
    big = gen_uniform(1000, 2, seed=3)
    assert big.ops[:250] == small.ops


def test_gen_uniform_chi_square():
    t = gen_uniform(10000, 2, seed=13)
    bins = 20
    crit = 43.82  # chi-square 0.999 quantile, 19 degrees of freedom
    for axis in range(2):
        counts = [0] * bins
        for op in t.ops:
            counts[min(int(op.coords[axis] / 100.0 * bins), bins - 1)] += 1
        expected = len(t.ops) / bins
        chi2 = sum((c - expected) ** 2 / expected for c in counts)
        assert chi2 < crit


def test_gen_clustered_variance():
    spread = 2.0
    t = gen_clustered(5000, 2, seed=5, num_clusters=1, spread=spread)
    center_x = sum(op.coords[0] for op in t.ops) / len(t.ops)
    var = sum((op.coords[0] - center_x) ** 2 for op in t.ops) / len(t.ops)
    # Offsets are uniform in [-spread, spread]: variance = spread^2 / 3.
    assert var == pytest.approx(spread**2 / 3.0, rel=0.1)


def test_gen_churn_alive_floor_and_fraction():
    t = gen_churn(60, 10000, seed=2, delete_fraction=0.3)
    alive = set()
    next_id = 0
    for seq, op in enumerate(t.ops):
        if op.kind == "insert":
            alive.add(next_id)
            next_id += 1
        else:
            assert op.target in alive
            alive.discard(op.target)
        if seq >= 2:  # the floor necessarily starts after two inserts
            assert len(alive) >= 2
    deletes = sum(1 for op in t.ops[60:] if op.kind == "delete")
    freq = deletes / 10000
    sigma = math.sqrt(0.3 * 0.7 / 10000)
    assert abs(freq - 0.3) <= 3 * sigma


def test_gen_churn_zero_fraction_is_insert_only():
    t = gen_churn(10, 50, seed=4, delete_fraction=0.0)
    assert all(op.kind == "insert" for op in t.ops)


def test_parse_example():
    t = parse_trace("dim 2\n+ 0 0\n+ 10 0\n- 0\n")
    assert t.dim == 2
    assert t.ops == [
        TraceOp("insert", (0.0, 0.0)),
        TraceOp("insert", (10.0, 0.0)),
        TraceOp("delete", target=0),
    ]


def test_parse_comments_and_whitespace():
    t = parse_trace("# header\n\ndim 2  # inline\n+ 1.5 2.5\n")
    assert t.dim == 2 and len(t.ops) == 1


def test_roundtrip_identity():
    for t in (
        gen_uniform(50, 2, seed=1),
        gen_clustered(50, 3, seed=2, num_clusters=3, spread=1.0),
        gen_churn(20, 40, seed=3, delete_fraction=0.4),
    ):
        again = parse_trace(render_trace(t))
        assert again.dim == t.dim
        assert again.ops == t.ops


def test_parse_errors_carry_line_numbers():
    with pytest.raises(TraceError, match="line 1"):
        parse_trace("+ 1 2\n")  # missing dim header
    with pytest.raises(TraceError, match="line 2"):
        parse_trace("dim 2\n+ 1\n")  # wrong arity
    with pytest.raises(TraceError, match="line 2"):
        parse_trace("dim 2\n- 5\n")  # dead-id delete
    with pytest.raises(TraceError, match="line 3"):
        parse_trace("dim 2\n+ 0 0\n* 1\n")  # unknown op
    with pytest.raises(TraceError):
        parse_trace("dim 2\n+ inf 0\n")  # non-finite coordinate
    with pytest.raises(TraceError):
        parse_trace("")  # empty


def test_trace_meta_round():
    t = Trace(2, [], {"generator": "x"})
    assert t.meta["generator"] == "x"
    assert workload.MASK64 == (1 << 64) - 1
