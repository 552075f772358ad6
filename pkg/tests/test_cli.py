import subprocess
import sys

import numpy as np
import pytest

from rpsattack import cli, curvefile
from rpsattack import exact_analysis as ea


def _rows(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "key,value"
    return dict(line.split(",", 1) for line in lines[1:])


def test_sweep_endpoints(tmp_path):
    out = tmp_path / "attack.csv"
    assert cli.main(["sweep", "--p0", "0.5", "--p-min", "0", "--p-max", "1", "--steps", "2", "--out", str(out)]) == 0
    assert out.read_text() == "p,ent\n0.0,0.0\n1.0,1.0\n"


def test_sweep_p0_one_is_all_zero(tmp_path):
    out = tmp_path / "a.csv"
    assert cli.main(["sweep", "--p0", "1.0", "--p-min", "0.1", "--p-max", "0.9", "--steps", "9", "--out", str(out)]) == 0
    assert all(e == 0.0 for _, e in curvefile.read_curve(out))


def test_sweep_roundtrip(tmp_path):
    out = tmp_path / "a.csv"
    cli.main(["sweep", "--steps", "201", "--out", str(out)])
    rows = curvefile.read_curve(out)
    mem = ea.sweep(0.5, ea.uniform_grid(0, 1, 201))
    assert len(rows) == 201
    for (p, e), pt in zip(rows, mem):
        assert abs(p - pt.p) <= 1e-12
        assert abs(e - pt.entropy_per_round) <= 1e-12
    ea.IidCurve(tuple(rows))
    np.loadtxt(out, delimiter=",", skiprows=1)


@pytest.mark.parametrize(
    "args",
    [
        ["--p-min", "0.6", "--p-max", "0.4"],
        ["--steps", "1"],
        ["--p-max", "1.5"],
        ["--p0", "-0.1"],
    ],
)
def test_sweep_invalid(tmp_path, args, capsys):
    assert cli.main(["sweep", *args, "--out", str(tmp_path / "x.csv")]) != 0
    assert "error" in capsys.readouterr().err


def test_sweep_unwritable(tmp_path, capsys):
    assert cli.main(["sweep", "--out", str(tmp_path / "missing" / "x.csv")]) != 0
    assert "cannot write" in capsys.readouterr().err


def test_simulate_small_run(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["simulate", "--seed", "1", "--pairs", "1", "--p", "0.5", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows["flag_tv"] == "insufficient sample"
    assert rows["flag_support"] == "pass"


def test_simulate_million_passes(tmp_path):
    out = tmp_path / "r.csv"
    cli.main(["simulate", "--seed", "0", "--pairs", "1000000", "--p0", "0.5", "--p", "0.5",
              "--test-fraction", "0.3333333333333333", "--out", str(out)])
    rows = _rows(out)
    flags = {k: v for k, v in rows.items() if k.startswith("flag_")}
    assert set(flags.values()) == {"pass"}, flags


def test_simulate_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        cli.main(["simulate", "--seed", "123", "--pairs", "5000", "--p", "0.3", "--out", str(out)])
    assert a.read_bytes() == b.read_bytes()


def test_simulate_invalid(tmp_path):
    assert cli.main(["simulate", "--pairs", "0", "--p", "0.5", "--out", str(tmp_path / "r.csv")]) != 0
    assert cli.main(["simulate", "--p", "0.5", "--test-fraction", "1", "--out", str(tmp_path / "r.csv")]) != 0


def _write(path, pts):
    curvefile.write_curve(path, pts)
    return str(path)


def test_compare_identical(tmp_path):
    pts = [(float(p), float(p * p)) for p in np.linspace(0, 1, 11)]
    a, b = _write(tmp_path / "a.csv", pts), _write(tmp_path / "b.csv", pts)
    out = tmp_path / "c.csv"
    assert cli.main(["compare", "--attack", a, "--iid", b, "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows["interval_count"] == "0"
    assert float(rows["max_gap"]) == 0.0


def test_compare_crossing(tmp_path):
    grid = np.linspace(0, 1, 201)
    a = _write(tmp_path / "a.csv", [(float(p), 0.5) for p in grid])
    b = _write(tmp_path / "b.csv", [(float(p), float(p)) for p in grid])
    out = tmp_path / "c.csv"
    assert cli.main(["compare", "--attack", a, "--iid", b, "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows["interval_count"] == "1"
    assert abs(float(rows["interval_1_p_low"]) - 0.5) <= 1 / 200
    assert abs(float(rows["interval_1_p_high"]) - 1.0) <= 1 / 200
    assert float(rows["max_gap"]) == pytest.approx(0.5)
    assert float(rows["max_gap_p"]) == pytest.approx(1.0)


def test_compare_bad_header(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("P,Ent\n0,0\n1,1\n")
    good = _write(tmp_path / "g.csv", [(0.0, 0.0), (1.0, 1.0)])
    assert cli.main(["compare", "--attack", good, "--iid", str(bad), "--out", str(tmp_path / "c.csv")]) != 0
    assert "bad.csv:1:" in capsys.readouterr().err


def test_compare_bad_row_line_number(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("p,ent\n0,0\n0.5,abc\n1,1\n")
    good = _write(tmp_path / "g.csv", [(0.0, 0.0), (1.0, 1.0)])
    assert cli.main(["compare", "--attack", str(bad), "--iid", good, "--out", str(tmp_path / "c.csv")]) != 0
    assert "bad.csv:3:" in capsys.readouterr().err


def test_compare_no_overlap(tmp_path, capsys):
    a = _write(tmp_path / "a.csv", [(0.0, 0.1), (0.3, 0.1)])
    b = _write(tmp_path / "b.csv", [(0.5, 0.2), (1.0, 0.2)])
    assert cli.main(["compare", "--attack", a, "--iid", b, "--out", str(tmp_path / "c.csv")]) != 0
    assert "overlap" in capsys.readouterr().err


def test_compare_missing_file(tmp_path):
    a = _write(tmp_path / "a.csv", [(0.0, 0.1), (1.0, 0.1)])
    assert cli.main(["compare", "--attack", a, "--iid", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "c.csv")]) != 0


@pytest.mark.parametrize(
    "text,line",
    [
        ("", 1),
        ("p,ent\n0,0\n", 2),
        ("p,ent\n0,0\n0,1\n", 3),
        ("p,ent\n0,0,1\n1,1\n", 2),
    ],
)
def test_parse_errors(text, line):
    with pytest.raises(curvefile.CurveParseError) as info:
        curvefile.parse_curve(text)
    assert info.value.line == line


def test_entry_point_exit_status(tmp_path):
    ok = subprocess.run([sys.executable, "-m", "rpsattack.cli", "sweep", "--steps", "3", "--out", str(tmp_path / "a.csv")])
    assert ok.returncode == 0
    bad = subprocess.run(
        [sys.executable, "-m", "rpsattack.cli", "sweep", "--steps", "1", "--out", str(tmp_path / "a.csv")],
        capture_output=True, text=True,
    )
    assert bad.returncode != 0
    assert "steps" in bad.stderr
