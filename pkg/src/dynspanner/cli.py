"""Command-line harness: generate traces, replay them through the full
stack with periodic verification, and aggregate recourse metrics.

Exit codes: 0 clean, 1 I/O or parse error, 2 verification failure,
3 maintenance non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from . import oracle, workload
from .config import config_from_json, derive_config
from .points import log2_aspect_ratio
from .spanner import DynamicSpanner

OPS_COLUMNS = [
    "opSeq",
    "opKind",
    "n",
    "logAspectRatio",
    "sparseEdgeEvents",
    "lightEdgeEvents",
    "maintenanceIterations",
    "converged",
    "cumSparseEdgeEvents",
    "cumLightEdgeEvents",
    "cumMaintenanceIterations",
]

VERIFY_SKIP_N = 400


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.17g}"
    return str(x)


def _load_config(path, dim=None):
    if path is None:
        return derive_config(
            dim=dim or 2,
            eps_target=0.5,
            R=2.0,
            mode="practical",
            overrides={"lambda": 8.0, "c": 1.05, "k": 8, "epsPrime": 0.01},
        )
    with open(path, encoding="utf-8") as fh:
        return config_from_json(fh.read())


def replay(trace, config, verify_every=25, ops_writer=None, on_checkpoint=None):
    """Run every trace op through the stack.

    Returns (records, checkpoint_reports, failure, spanner) where failure
    is None, ("verify", report), or ("converge", op_seq).
    """
    spanner = DynamicSpanner(config)
    records = []
    checkpoints = []
    cum = {"sparse": 0, "light": 0, "iters": 0}
    warned_skip = False
    for seq, op in enumerate(trace.ops, start=1):
        if op.kind == "insert":
            _, stats = spanner.insert(op.coords)
        else:
            stats = spanner.delete(op.target)
        n = len(spanner)
        ids = spanner.store.alive_ids()
        log_ar = (
            log2_aspect_ratio(spanner.store.coords_of(ids)) if n >= 2 else 0.0
        )
        cum["sparse"] += stats.sparse_events
        cum["light"] += stats.light_events
        cum["iters"] += stats.iterations
        rec = {
            "opSeq": seq,
            "opKind": op.kind,
            "n": n,
            "logAspectRatio": log_ar,
            "sparseEdgeEvents": stats.sparse_events,
            "lightEdgeEvents": stats.light_events,
            "maintenanceIterations": stats.iterations,
            "converged": stats.converged,
            "cumSparseEdgeEvents": cum["sparse"],
            "cumLightEdgeEvents": cum["light"],
            "cumMaintenanceIterations": cum["iters"],
        }
        records.append(rec)
        if ops_writer is not None:
            ops_writer.writerow([_fmt(rec[c]) for c in OPS_COLUMNS])
        if not stats.converged:
            return records, checkpoints, ("converge", seq), spanner
        if verify_every and seq % verify_every == 0:
            if n > VERIFY_SKIP_N:
                if not warned_skip:
                    print(
                        f"warning: n={n} > {VERIFY_SKIP_N}, skipping verification",
                        file=sys.stderr,
                    )
                    warned_skip = True
            else:
                report = oracle.full_report(spanner, op_seq=seq)
                checkpoints.append(report)
                if on_checkpoint is not None:
                    on_checkpoint(report)
                if not report.clean():
                    return records, checkpoints, ("verify", report), spanner
    return records, checkpoints, None, spanner


def _summarize(trace, config, records, checkpoints, spanner):
    ins = [r for r in records if r["opKind"] == "insert"]
    dels = [r for r in records if r["opKind"] == "delete"]
    am_ins = (
        sum(r["lightEdgeEvents"] for r in ins) / len(ins) if ins else 0.0
    )
    am_del = (
        sum(r["lightEdgeEvents"] for r in dels) / len(dels) if dels else 0.0
    )
    log_ar = records[-1]["logAspectRatio"] if records else 0.0
    final = None
    if spanner is not None and len(spanner) >= 2 and len(spanner) <= VERIFY_SKIP_N:
        final = oracle.full_report(spanner, op_seq=len(records))
    return {
        "config": config.to_json_dict(),
        "trace": dict(trace.meta, dim=trace.dim, ops=len(trace.ops)),
        "amortizedInsertionRecourse": am_ins,
        "amortizedDeletionRecourse": am_del,
        "amortizedDeletionRecoursePerLogAspect": (
            am_del / log_ar if log_ar > 0 else 0.0
        ),
        "finalReport": final.to_json_dict() if final else None,
        "checkpointReports": [r.to_json_dict() for r in checkpoints],
    }


def _json_default(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    raise TypeError(x)


def _json_floats(obj):
    """Render with 17 significant digits on floats."""

    def walk(x):
        if isinstance(x, float):
            return float(f"{x:.17g}") if math.isfinite(x) else "inf"
        if isinstance(x, dict):
            return {k: walk(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [walk(v) for v in x]
        return x

    return json.dumps(walk(obj), indent=2, default=_json_default)


def cmd_run(args) -> int:
    try:
        with open(args.trace, encoding="utf-8") as fh:
            trace = workload.parse_trace(fh.read())
    except (OSError, workload.TraceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        config = _load_config(args.config, dim=trace.dim)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if config.dim != trace.dim:
        print(
            f"error: trace dim {trace.dim} != config dim {config.dim}",
            file=sys.stderr,
        )
        return 1
    prefix = args.out or os.path.join(
        os.environ.get("DYNSPANNER_OUT", "."), "run"
    )
    ops_path = prefix + ".ops.csv"
    with open(ops_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema=1"])
        writer.writerow(OPS_COLUMNS)
        out = replay(trace, config, args.verify_every, ops_writer=writer)
    if out[2] is not None:
        kind, detail = out[2]
        if kind == "verify":
            with open(prefix + ".failure.json", "w", encoding="utf-8") as fh:
                fh.write(detail.to_json())
            print("verification failure; report retained", file=sys.stderr)
            return 2
        print(f"maintenance did not converge at op {detail}", file=sys.stderr)
        return 3
    records, checkpoints, _, spanner = out
    summary = _summarize(trace, config, records, checkpoints, spanner)
    with open(prefix + ".summary.json", "w", encoding="utf-8") as fh:
        fh.write(_json_floats(summary))
    return 0


def cmd_gen(args) -> int:
    try:
        if args.generator == "uniform":
            trace = workload.gen_uniform(args.n, args.dim, args.seed)
        elif args.generator == "clustered":
            trace = workload.gen_clustered(
                args.n, args.dim, args.seed, args.clusters, args.spread
            )
        elif args.generator == "churn":
            trace = workload.gen_churn(
                args.n, args.ops, args.seed, args.delete_fraction, d=args.dim
            )
        else:
            print(f"error: unknown generator {args.generator!r}", file=sys.stderr)
            return 1
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(workload.render_trace(trace))
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    try:
        with open(args.trace, encoding="utf-8") as fh:
            trace = workload.parse_trace(fh.read())
        config = _load_config(args.config, dim=trace.dim)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out = replay(trace, config, verify_every=0)
    if out[2] is not None:
        print(f"error: replay failed ({out[2][0]})", file=sys.stderr)
        return 3
    spanner = out[3]
    report = oracle.full_report(spanner, op_seq=len(trace.ops))
    print(report.to_json())
    return 0 if report.clean() else 2


def cmd_report(args) -> int:
    rows = []
    for path in args.csvs:
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header != ["schema=1"]:
                    print(f"error: {path}: schema mismatch", file=sys.stderr)
                    return 1
                cols = next(reader, None)
                if cols != OPS_COLUMNS:
                    print(f"error: {path}: column mismatch", file=sys.stderr)
                    return 1
                recs = [dict(zip(cols, r)) for r in reader]
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        if not recs:
            continue
        ins = [r for r in recs if r["opKind"] == "insert"]
        dels = [r for r in recs if r["opKind"] == "delete"]
        am_ins = (
            sum(int(r["lightEdgeEvents"]) for r in ins) / len(ins) if ins else 0.0
        )
        am_del = (
            sum(int(r["lightEdgeEvents"]) for r in dels) / len(dels) if dels else 0.0
        )
        last = recs[-1]
        log_ar = float(last["logAspectRatio"])
        rows.append(
            [
                int(last["n"]),
                am_ins,
                am_del,
                am_del / log_ar if log_ar > 0 else 0.0,
            ]
        )
    writer = csv.writer(sys.stdout)
    writer.writerow(["n", "amortizedIns", "amortizedDel", "amortizedDelPerLogAspect"])
    for row in sorted(rows):
        writer.writerow([_fmt(x) for x in row])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dynspanner",
        description="Dynamic lightweight Euclidean spanner harness",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="replay a trace with verification")
    run.add_argument("trace")
    run.add_argument("--config")
    run.add_argument("--verify-every", type=int, default=25)
    run.add_argument("--out", help="output prefix for .ops.csv / .summary.json")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen", help="generate a trace")
    gen.add_argument("generator", choices=["uniform", "clustered", "churn"])
    gen.add_argument("--n", type=int, default=100)
    gen.add_argument("--dim", type=int, default=2)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--clusters", type=int, default=4)
    gen.add_argument("--spread", type=float, default=1.0)
    gen.add_argument("--ops", type=int, default=100)
    gen.add_argument("--delete-fraction", type=float, default=0.3)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    ver = sub.add_parser("verify", help="replay then run the oracle suite once")
    ver.add_argument("trace")
    ver.add_argument("--config")
    ver.set_defaults(func=cmd_verify)

    rep = sub.add_parser("report", help="aggregate ops CSVs")
    rep.add_argument("csvs", nargs="+")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
