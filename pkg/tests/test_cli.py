import csv

import pytest

from biotlab import cli
from biotlab.bench import ConvergenceRow


def read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_emit_csv_schemas(tmp_path):
    out = tmp_path / "a.csv"
    cli.emit_csv([], "convergence", out)
    assert read(out) == [["dofs", "error", "eoc"]]
    r = ConvergenceRow(9, 1.42e-2)
    cli.emit_csv([(r.size, r.error, r.eoc)], "convergence", out)
    assert read(out) == [["dofs", "error", "eoc"], ["9", "1.420000e-02", ""]]
    cli.emit_csv([(0.26, 0.5, 1.0)], "profile", out)
    assert read(out)[0] == ["x", "y", "p"]
    with pytest.raises(ValueError):
        cli.emit_csv([(1, 2)], "profile", out)


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nlevels = 2\ntimesteps = 50  # inline\nerror-convention = squared\n")
    args = cli.build_parser().parse_args(["terzaghi-space", "--config", str(cfg), "--levels", "1"])
    opts = cli.resolve(args)
    assert opts["levels"] == "1" and opts["timesteps"] == "50"
    assert opts["error_convention"] == "squared"


def test_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("levels 2\n")
    assert cli.main(["terzaghi-space", "--config", str(cfg)]) == cli.EXIT_CONFIG
    cfg.write_text("nonsense = 1\n")
    assert cli.main(["terzaghi-space", "--config", str(cfg)]) == cli.EXIT_CONFIG
    assert cli.main(["terzaghi-space", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG


def test_usage_errors():
    assert cli.main([]) == cli.EXIT_CONFIG
    assert cli.main(["terzaghi-space", "--error-convention", "cubic"]) == cli.EXIT_CONFIG
    assert cli.main(["terzaghi-space", "--mu", "-1"]) == cli.EXIT_CONFIG
    assert cli.main(["assumptions", "--mesh", "hexagon:3"]) == cli.EXIT_CONFIG
    assert cli.main(["terzaghi-time", "--steps", "a,b"]) == cli.EXIT_CONFIG


def test_dense_limit_is_config_error():
    assert cli.main(["assumptions", "--mesh", "interval:64", "--dense-limit", "10"]) == cli.EXIT_CONFIG


def test_space_study_csv(tmp_path, capsys):
    out = tmp_path / "t1.csv"
    assert cli.main(["terzaghi-space", "--levels", "2", "--timesteps", "200", "--out", str(out)]) == 0
    rows = read(out)
    assert rows[0] == ["dofs", "error", "eoc"]
    assert [r[0] for r in rows[1:]] == ["9", "14", "24"]
    sq = tmp_path / "sq.csv"
    cli.main(["terzaghi-space", "--levels", "2", "--timesteps", "200", "--out", str(sq),
              "--error-convention", "squared"])
    a, b = read(out)[1:], read(sq)[1:]
    assert float(b[0][1]) == pytest.approx(float(a[0][1]) ** 2, rel=1e-6)
    assert float(b[2][2]) == pytest.approx(2 * float(a[2][2]), rel=1e-6)


def test_time_study_csv(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert cli.main(["terzaghi-time", "--level", "3", "--steps", "2,4", "--out", str(out)]) == 0
    assert read(out)[0] == ["J", "error", "eoc"]
    assert "mesh DOFs: 44" in capsys.readouterr().out


def test_cantilever_profile(tmp_path):
    out = tmp_path / "p.csv"
    assert cli.main(["cantilever", "--m", "4", "--timesteps", "2", "--out", str(out)]) == 0
    rows = read(out)
    assert rows[0] == ["x", "y", "p"] and len(rows) == 1 + 4 * 65


def test_assumptions_table(tmp_path):
    out = tmp_path / "a.csv"
    assert cli.main(["assumptions", "--mesh", "crisscross:2", "--out", str(out)]) == 0
    rows = read(out)
    assert rows[0] == ["name", "value", "status"]
    assert {r[0] for r in rows[1:]} >= {"h1_exact", "lbb_c", "eps_s", "inclusion_ok", "bst_infsup"}


def test_infsup_and_selftest_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["selftest", "--out", str(a), "--seed", "7"]) == 0
    assert cli.main(["selftest", "--out", str(b), "--seed", "7"]) == 0
    assert read(a) == read(b)
    assert cli.main(["infsup", "--n", "2", "--timesteps", "1", "--out", str(a)]) == 0
    assert read(a)[-1][0] == "ratio_decades"


def test_check_failure_exit_code(monkeypatch):
    monkeypatch.setattr(cli, "IBP_TOL", -1.0)
    assert cli.main(["terzaghi-space", "--levels", "0", "--timesteps", "10"]) == cli.EXIT_CHECK


def test_numerical_failure_exit_code(monkeypatch):
    from biotlab.errors import SingularMatrix

    def boom(*a, **k):
        raise SingularMatrix("zero pivot")

    monkeypatch.setattr(cli.bench, "run_terzaghi_space_study", boom)
    assert cli.main(["terzaghi-space"]) == cli.EXIT_NUMERICAL
