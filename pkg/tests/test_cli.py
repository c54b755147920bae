import csv
import json

import pytest

from dynspanner import cli, oracle
from dynspanner.cli import main
from dynspanner.light import LightSpanner, MaintenanceSummary


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_run_empty_trace(tmp_path):
    trace = _write(tmp_path / "t.txt", "dim 2\n")
    out = str(tmp_path / "run")
    assert main(["run", trace, "--out", out]) == 0
    rows = _read_csv(out + ".ops.csv")
    assert rows[0] == ["schema=1"]
    assert rows[1] == cli.OPS_COLUMNS
    assert rows[2:] == []  # zero data rows
    summary = json.loads((tmp_path / "run.summary.json").read_text())
    assert summary["amortizedInsertionRecourse"] == 0


def test_run_two_insert_trace(tmp_path):
    trace = _write(tmp_path / "t.txt", "dim 2\n+ 0 0\n+ 10 0\n")
    out = str(tmp_path / "run")
    assert main(["run", trace, "--out", out, "--verify-every", "1"]) == 0
    rows = _read_csv(out + ".ops.csv")
    data = [dict(zip(cli.OPS_COLUMNS, r)) for r in rows[2:]]
    assert len(data) == 2
    # One edge added in total: the second insertion creates the single pair.
    assert data[-1]["cumLightEdgeEvents"] == "1"
    summary = json.loads((tmp_path / "run.summary.json").read_text())
    assert summary["amortizedInsertionRecourse"] == 0.5
    assert summary["finalReport"]["maxStretch"] == 1
    assert summary["checkpointReports"]  # verify-every 1 produced reports


def test_run_is_deterministic(tmp_path):
    trace = _write(
        tmp_path / "t.txt",
        "dim 2\n+ 0 0\n+ 10 0\n+ 3 4\n+ 7 1\n- 1\n+ 2 9\n",
    )
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["run", trace, "--out", out1]) == 0
    assert main(["run", trace, "--out", out2]) == 0
    assert (tmp_path / "a.ops.csv").read_bytes() == (
        tmp_path / "b.ops.csv"
    ).read_bytes()


def test_run_parse_error(tmp_path):
    trace = _write(tmp_path / "t.txt", "dim 2\n+ 1\n")
    assert main(["run", trace, "--out", str(tmp_path / "x")]) == 1


def test_run_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.txt")]) == 1


def test_run_dim_mismatch(tmp_path):
    trace = _write(tmp_path / "t.txt", "dim 3\n+ 0 0 0\n")
    cfgfile = _write(
        tmp_path / "c.json",
        '{"dim": 2, "eps": 0.5, "R": 2.0, "mode": "practical", '
        '"overrides": {"lambda": 8.0, "c": 1.05, "k": 8, "epsPrime": 0.01}}',
    )
    assert main(["run", trace, "--config", cfgfile, "--out", str(tmp_path / "x")]) == 1


def test_run_nonconvergence_exits_3(tmp_path, monkeypatch):
    trace = _write(tmp_path / "t.txt", "dim 2\n+ 0 0\n+ 10 0\n")
    monkeypatch.setattr(
        LightSpanner,
        "run_maintenance",
        lambda self, cap=None: MaintenanceSummary([], 0, False),
    )
    assert main(["run", trace, "--out", str(tmp_path / "x")]) == 3


def test_run_verification_failure_exits_2(tmp_path, monkeypatch):
    trace = _write(tmp_path / "t.txt", "dim 2\n+ 0 0\n+ 10 0\n")
    real_report = oracle.full_report

    def broken_report(spanner, op_seq=0):
        rep = real_report(spanner, op_seq)
        rep.separation_violations = [(0, 0, 1, 1.0)]
        return rep

    monkeypatch.setattr(oracle, "full_report", broken_report)
    out = str(tmp_path / "x")
    assert main(["run", trace, "--out", out, "--verify-every", "1"]) == 2
    failure = json.loads((tmp_path / "x.failure.json").read_text())
    assert failure["separationViolations"]


def test_gen_deterministic_and_verify_roundtrip(tmp_path):
    out1, out2 = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    args = ["gen", "uniform", "--n", "12", "--seed", "5", "--out"]
    assert main(args + [out1]) == 0
    assert main(args + [out2]) == 0
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert main(["verify", out1]) == 0


def test_gen_invalid_generator_rejected(tmp_path):
    import argparse

    args = argparse.Namespace(
        generator="bogus", n=1, dim=2, seed=1, clusters=1, spread=1.0,
        ops=1, delete_fraction=0.0, out=str(tmp_path / "x.txt"),
    )
    assert cli.cmd_gen(args) == 1
    with pytest.raises(SystemExit):
        main(["gen", "bogus", "--out", str(tmp_path / "x.txt")])


def test_verify_missing_file(tmp_path):
    assert main(["verify", str(tmp_path / "nope.txt")]) == 1


def test_verify_reports_violation_exit_2(tmp_path, monkeypatch, capsys):
    trace = _write(tmp_path / "t.txt", "dim 2\n+ 0 0\n+ 10 0\n")
    real_report = oracle.full_report

    def broken_report(spanner, op_seq=0):
        rep = real_report(spanner, op_seq)
        rep.separation_violations = [(0, 0, 1, 1.0)]
        return rep

    monkeypatch.setattr(oracle, "full_report", broken_report)
    assert main(["verify", trace]) == 2
    data = json.loads(capsys.readouterr().out)
    assert data["separationViolations"]


def test_report_constant_recourse_passthrough(tmp_path, capsys):
    # Synthetic run with constant per-op light recourse r=3.
    path = tmp_path / "r.ops.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["schema=1"])
        w.writerow(cli.OPS_COLUMNS)
        for seq in range(1, 5):
            w.writerow(
                [seq, "insert", seq, "2.0", 1, 3, 1, 1, seq, 3 * seq, seq]
            )
    assert main(["report", str(path)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    header = out[0].split(",")
    row = dict(zip(header, out[1].split(",")))
    assert float(row["amortizedIns"]) == 3.0
    # Two identical inputs aggregate to two identical rows.
    assert main(["report", str(path), str(path)]) == 0
    out2 = capsys.readouterr().out.strip().splitlines()
    assert out2[1] == out2[2]


def test_report_schema_mismatch(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("not,a,schema\n", encoding="utf-8")
    assert main(["report", str(path)]) == 1


def test_float_formatting():
    assert cli._fmt(True) == "1"
    assert cli._fmt(False) == "0"
    assert cli._fmt(float("inf")) == "inf"
    assert cli._fmt(0.1) == "0.10000000000000001"  # 17 significant digits
    assert cli._fmt(7) == "7"
