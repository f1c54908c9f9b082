"""Command-line interface: config plumbing, exit codes, CSV and field outputs."""

import csv
import math

import numpy as np
import pytest

from thermoporo.cli import (
    Config,
    ConfigError,
    _number,
    load_config_file,
    main,
    parse_overrides,
    parse_schedule,
)
from thermoporo.linalg import LinearSolveError
from thermoporo.vtkio import validate_vtk


def test_number_accepts_fractions():
    assert _number("1/256") == 1.0 / 256.0
    assert _number(" 0.25 ") == 0.25
    assert _number("3e-2") == 0.03
    for bad in ("abc", "1/0", "1/0/2"):
        with pytest.raises(ConfigError):
            _number(bad)


def test_parse_schedule():
    assert parse_schedule("4:1/4, 8:1/8") == [(4, 0.25), (8, 0.125)]
    for bad in ("4", "x:1/4", "4:0", "0:1/4", ""):
        with pytest.raises(ConfigError):
            parse_schedule(bad)


def test_load_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# heading\n  n = 8   # trailing comment\n\ndt=1/16\n")
    assert load_config_file(cfg) == {"n": "8", "dt": "1/16"}
    (tmp_path / "bad.cfg").write_text("n 8\n")
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "bad.cfg")
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "missing.cfg")


def test_config_layering_and_types():
    cfg = Config({"n": "4", "dt": "1/4"}, {"n": "8", "tau": "1"})
    assert cfg.get("n") == "8"  # later layers win
    assert cfg.number("dt") == 0.25
    assert cfg.integer("n") == 8
    assert cfg.flag("strict", "true") is True
    assert cfg.flag("strict", "off") is False
    with pytest.raises(ConfigError):
        cfg.get("schedule")
    with pytest.raises(ConfigError):
        cfg.integer("dt")
    with pytest.raises(ConfigError):
        cfg.flag("dt")
    with pytest.raises(ConfigError):
        Config({"frobnicate": "1"})
    assert parse_overrides(["n=4", "dt = 1/8"]) == {"n": "4", "dt": "1/8"}
    with pytest.raises(ConfigError):
        parse_overrides(["n4"])


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["convergence"])  # missing required --table
    assert exc.value.code == 1
    capsys.readouterr()


def test_config_errors_exit_one(tmp_path, capsys):
    assert main(["convergence", "--table", "T99", "--out", str(tmp_path / "x.csv")]) == 1
    assert main(["run", "scenario=nosuch", "--out", str(tmp_path / "out")]) == 1
    assert main(["bench", "reps=0", "--out", str(tmp_path / "b.csv")]) == 1
    capsys.readouterr()


def test_solver_failure_exits_two(tmp_path, monkeypatch, capsys):
    from thermoporo.steppers import Stepper

    def boom(self, *args, **kwargs):
        raise LinearSolveError("synthetic factorization failure")

    monkeypatch.setattr(Stepper, "run", boom)
    code = main(["run", "scenario=custom", "n=4", "dt=1/4",
                 "--out", str(tmp_path / "out")])
    assert code == 2
    assert "numerical failure" in capsys.readouterr().err


def test_run_custom_scenario_stays_zero(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "scenario=custom", "n=4", "dt=1/4", "--algo", "alg2",
                 "--out", str(out)])
    assert code == 0
    capsys.readouterr()
    summary = (out / "summary.txt").read_text()
    assert "scenario: custom" in summary
    assert "algorithm: alg2" in summary
    for name in ("u", "xi", "p", "T"):
        info = validate_vtk(out / f"{name}.vtk")
        assert np.all(info["data"] == 0.0)


def test_convergence_csv_roundtrip(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    argv = ["convergence", "--table", "T2", "--algo", "alg1",
            "schedule=4:1/4,8:1/8", "--out", str(out)]
    assert main(argv) == 0
    capsys.readouterr()
    raw = out.read_bytes()
    assert b"\r\n" in raw  # proper CSV line endings
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == [
        "algorithm", "h", "dt",
        "err_u_H1", "rate_u", "err_xi_L2", "rate_xi",
        "err_p_H1", "rate_p", "err_T_H1", "rate_T",
        "err_u_H1_full", "err_xi_L2_full", "err_p_H1_full", "err_T_H1_full",
    ]
    assert len(rows) == 3
    first, second = rows[1], rows[2]
    assert first[0] == second[0] == "alg1"
    assert [first[4], first[6], first[8], first[10]] == [""] * 4
    # printed rates agree with the full-precision error columns
    for rate_col, full_col in ((4, 11), (6, 12), (8, 13), (10, 14)):
        recomputed = math.log2(float(first[full_col]) / float(second[full_col]))
        assert abs(float(second[rate_col]) - recomputed) <= 0.005
        # and the display columns round the full-precision ones
        assert float(second[rate_col - 1]) == pytest.approx(
            float(second[full_col]), rel=1e-5
        )
    # reruns are byte-identical
    assert main(argv) == 0
    capsys.readouterr()
    assert out.read_bytes() == raw


def test_bench_errors_match_run(tmp_path, capsys):
    bench_out = tmp_path / "bench.csv"
    code = main(["bench", "n=4", "dt=1/4", "reps=1", "workers=2",
                 "--out", str(bench_out)])
    assert code == 0
    capsys.readouterr()
    rows = list(csv.reader(bench_out.read_text().splitlines()))
    assert [r[0] for r in rows[1:]] == ["coupled", "alg1", "alg2", "alg3"]
    by_algo = {r[0]: r for r in rows[1:]}
    for row in rows[1:]:
        assert float(row[7]) >= 0.0  # seconds column

    run_out = tmp_path / "run1"
    code = main(["run", "scenario=example1", "n=4", "dt=1/4", "--algo", "alg1",
                 "--out", str(run_out)])
    assert code == 0
    capsys.readouterr()
    summary = (run_out / "summary.txt").read_text()
    line = next(ln for ln in summary.splitlines() if ln.startswith("errors vs"))
    # identical arithmetic path: the printed 5-digit errors agree exactly
    want = (f"errors vs manufactured solution: u_H1={by_algo['alg1'][3]}, "
            f"xi_L2={by_algo['alg1'][4]}, p_H1={by_algo['alg1'][5]}, "
            f"T_H1={by_algo['alg1'][6]}")
    assert line == want


def test_validate_subcommand_passes(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "0 failures" in out
