import json

import pytest

from accel_kit.cli import main


def _write_config(tmp_path, name="cfg.json", **overrides):
    data = {
        "problem": {"id": "small_nonlinear"},
        "methods": [{"method": "rcrop", "m": 1}],
        "tol": 1e-10,
        "maxit": 100,
        "x0": [0.1, 0.1],
    }
    data.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_solve_converges_with_exit_zero(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "trace.csv"
    code = main(["solve", "--config", str(cfg), "--output", str(out), "--no-plot"])
    assert code == 0
    assert out.exists()
    stdout = capsys.readouterr().out
    assert "rcrop(m=1)" in stdout and "Converged" in stdout


def test_solve_nonconvergence_exits_one(tmp_path):
    cfg = _write_config(tmp_path, methods=[{"method": "fixed_point"}], maxit=3)
    code = main(["solve", "--config", str(cfg), "--output", str(tmp_path / "t.csv"),
                 "--no-plot", "--quiet"])
    assert code == 1


def test_solve_requires_exactly_one_method(tmp_path):
    cfg = _write_config(
        tmp_path, methods=[{"method": "anderson", "m": 1}, {"method": "crop", "m": 1}]
    )
    code = main(["solve", "--config", str(cfg), "--output", str(tmp_path / "t.csv"), "--no-plot"])
    assert code == 2


def test_compare_with_empty_methods_exits_two(tmp_path):
    cfg = _write_config(tmp_path, methods=[])
    code = main(["compare", "--config", str(cfg), "--output", str(tmp_path / "t.csv"),
                 "--no-plot"])
    assert code == 2


def test_compare_prints_ranking(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        methods=[
            {"method": "anderson", "m": 2},
            {"method": "rcrop", "m": 1},
            {"method": "crop", "m": "inf"},
        ],
    )
    code = main(["compare", "--config", str(cfg), "--output", str(tmp_path / "t.csv"),
                 "--no-plot"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "rank" in stdout
    assert stdout.index("rcrop(m=1)") < stdout.index("anderson(m=2)") < stdout.index("crop(m=inf)")
    assert "Breakdown" in stdout


def test_missing_config_file_exits_three(tmp_path):
    code = main(["solve", "--config", str(tmp_path / "nope.json"),
                 "--output", str(tmp_path / "t.csv")])
    assert code == 3


def test_invalid_json_exits_two(tmp_path):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    code = main(["solve", "--config", str(cfg), "--output", str(tmp_path / "t.csv")])
    assert code == 2


def test_missing_output_exits_two(tmp_path):
    cfg = _write_config(tmp_path)
    code = main(["solve", "--config", str(cfg)])
    assert code == 2


def test_seed_override_changes_random_start(tmp_path):
    cfg = _write_config(
        tmp_path,
        problem={"id": "linear_tridiag", "n": 20},
        methods=[{"method": "crop", "m": 2}],
        x0={"random": {"low": -0.5, "high": 0.5}},
    )
    out1, out2, out3 = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert main(["solve", "--config", str(cfg), "--output", str(out1), "--seed", "1",
                 "--no-plot", "--quiet"]) == 0
    assert main(["solve", "--config", str(cfg), "--output", str(out2), "--seed", "1",
                 "--no-plot", "--quiet"]) == 0
    assert main(["solve", "--config", str(cfg), "--output", str(out3), "--seed", "2",
                 "--no-plot", "--quiet"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_bytes() != out3.read_bytes()
    # without any seed the random start is rejected
    assert main(["solve", "--config", str(cfg), "--output", str(tmp_path / "d.csv"),
                 "--no-plot", "--quiet"]) == 2


def test_plot_rendered_by_default(tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "trace.csv"
    assert main(["solve", "--config", str(cfg), "--output", str(out), "--quiet"]) == 0
    assert (tmp_path / "trace.png").exists()


def test_rfactor_sweep_cli(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        problem={"id": "linear_small2x2"},
        methods=[{"method": "fixed_point"}, {"method": "anderson", "m": 1}],
        tol=1e-16,
        x0="zeros",
        angle_samples=8,
        seed=3,
    )
    out = tmp_path / "sweep.csv"
    code = main(["rfactor-sweep", "--config", str(cfg), "--output", str(out)])
    assert code == 0
    assert out.exists()
    assert (tmp_path / "sweep_gamma.csv").exists()
    assert (tmp_path / "sweep.png").exists()
    assert "swept 8 angles" in capsys.readouterr().out


def test_mm_info(tmp_path, capsys):
    mtx = tmp_path / "m.mtx"
    mtx.write_text("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n1 1 2.0\n3 1 1.0\n")
    assert main(["mm-info", str(mtx)]) == 0
    stdout = capsys.readouterr().out
    assert "3 x 3" in stdout and "symmetric" in stdout


def test_mm_info_missing_file_exits_three(tmp_path):
    assert main(["mm-info", str(tmp_path / "missing.mtx")]) == 3


def test_mm_info_unsupported_exits_two(tmp_path):
    mtx = tmp_path / "c.mtx"
    mtx.write_text("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1.0 0.0\n")
    assert main(["mm-info", str(mtx)]) == 2
