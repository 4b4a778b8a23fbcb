import pytest

from qrobust import __version__
from qrobust.app import main
from qrobust.qipfile import read_qlp, write_qlp


@pytest.fixture
def sel_file(tmp_path):
    path = tmp_path / "sel.qlp"
    assert main(["generate", "--family", "sel", "--model", "qippu", "--n", "2", "--p", "1",
                 "--T", "1", "--N", "2", "--seed", "3", "--out", str(path)]) == 0
    return path


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    assert "generate" in capsys.readouterr().err


def test_usage_error_exits_2():
    assert main(["solve"]) == 2
    assert main(["generate", "--family", "tsp", "--model", "qip"]) == 2


def test_generate_writes_a_document(sel_file):
    instance = read_qlp(sel_file)
    assert instance.name == "sel-n2-p1-T1-N2-s3-qippu"
    assert len(instance.universal_block_indices) == 1


def test_generate_to_stdout(capsys):
    assert main(["generate", "--family", "lot", "--model", "qip", "--B", "1", "--U", "1", "--T", "1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("\\Problem name: lot-B1-U1-T1-s0-qip\n")


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("QROBUST_SEED", "8")
    assert main(["generate", "--family", "kna", "--model", "qippu", "--n", "2", "--T", "1"]) == 0
    assert "kna-n2-T1-a2-b2-s8" in capsys.readouterr().out
    monkeypatch.setenv("QROBUST_SEED", "eight")
    assert main(["generate", "--family", "kna", "--model", "qippu", "--n", "2", "--T", "1"]) == 2


def test_params_file_and_flag_override(tmp_path, capsys):
    params = tmp_path / "ass.params"
    params.write_text("n=2\nT=2\nN=3\n", encoding="utf-8")
    assert main(["generate", "--family", "ass", "--model", "dep", "--params-file", str(params),
                 "--N", "2"]) == 0
    assert "ass-n2-T2-N2-s0-dep" in capsys.readouterr().out


def test_generate_rejects_foreign_parameters(capsys):
    assert main(["generate", "--family", "lot", "--model", "qip", "--B", "1", "--U", "1", "--T", "1",
                 "--alpha", "2"]) == 2
    assert "Error:" in capsys.readouterr().err


def test_generate_scenario_cap_exits_3():
    assert main(["generate", "--family", "lot", "--model", "dep", "--B", "1", "--U", "1", "--T", "5",
                 "--cap", "8"]) == 3


def test_solve_prints_result(sel_file, capsys):
    assert main(["solve", "--in", str(sel_file), "--oracle"]) == 0
    out = capsys.readouterr().out
    assert "status: Optimal" in out
    assert "oracle: agrees" in out
    assert "first stage: x_0_1=" in out


def test_solve_node_limit_exits_3(sel_file, capsys):
    assert main(["solve", "--in", str(sel_file), "--node-limit", "2"]) == 3
    assert "status: TimeLimit" in capsys.readouterr().out


def test_solve_infeasible(tmp_path, capsys):
    path = tmp_path / "none.qlp"
    path.write_text("MINIMIZE x\nSUBJECT TO\n x >= 2\nBOUNDS\n 0 <= x <= 1\nORDER\n E x\nEND\n", encoding="utf-8")
    assert main(["solve", "--in", str(path)]) == 0
    assert "value: INFEASIBLE" in capsys.readouterr().out


def test_solve_bad_document_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.qlp"
    path.write_text("MINIMIZE x +\n", encoding="utf-8")
    assert main(["solve", "--in", str(path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_flatten_then_solve_agrees(sel_file, tmp_path, capsys):
    out = tmp_path / "sel-dep.qlp"
    assert main(["flatten", "--in", str(sel_file), "--out", str(out)]) == 0
    report = capsys.readouterr().out
    assert "leaves: 2" in report
    assert main(["solve", "--in", str(sel_file)]) == 0
    qip_value = [line for line in capsys.readouterr().out.splitlines() if line.startswith("value:")]
    assert main(["solve", "--in", str(out)]) == 0
    dep_value = [line for line in capsys.readouterr().out.splitlines() if line.startswith("value:")]
    assert qip_value == dep_value


def test_flatten_to_stdout_reports_on_stderr(sel_file, capsys):
    assert main(["flatten", "--in", str(sel_file)]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("\\Problem name:")
    assert "variables:" in captured.err


def test_bench_and_profile(tmp_path, capsys):
    grid = tmp_path / "grid.yaml"
    grid.write_text("""
time_limit_ms: 20000
runs:
  - family: sel
    params: {n: 2, p: 1, T: 1, N: 2}
    seeds: [0, 1]
    models: [qippu, dep]
""", encoding="utf-8")
    records = tmp_path / "records.csv"
    assert main(["bench", "--grid", str(grid), "--out", str(records)]) == 0
    lines = records.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 4
    profile = tmp_path / "profile.csv"
    svg = tmp_path / "profile.svg"
    assert main(["profile", "--in", str(records), "--out", str(profile), "--svg", str(svg),
                 "--by", "model"]) == 0
    assert profile.read_text(encoding="utf-8").startswith("tau,dep,qippu\n")
    assert svg.read_text(encoding="utf-8").startswith("<svg")
    assert main(["profile", "--in", str(records), "--solvers", "qippu/search,dep/cplex"]) == 2


def test_bench_rejects_bad_overrides(tmp_path):
    grid = tmp_path / "grid.yaml"
    grid.write_text("runs:\n  - family: kna\n    params: {n: 2, T: 1}\n", encoding="utf-8")
    assert main(["bench", "--grid", str(grid), "--jobs", "0"]) == 2
    assert main(["bench", "--grid", str(grid), "--time-limit", "-5"]) == 2


def test_profile_missing_input(tmp_path):
    assert main(["profile", "--in", str(tmp_path / "none.csv")]) == 2


def test_oracle_disagreement_exits_4(sel_file, monkeypatch):
    from fractions import Fraction

    import qrobust.app as app_module
    from qrobust.search import SolveResult, SolveStatus

    monkeypatch.setattr(app_module, "oracle_solve",
                        lambda instance: SolveResult(SolveStatus.OPTIMAL, Fraction(-1)))
    assert main(["solve", "--in", str(sel_file), "--oracle"]) == 4


def test_written_documents_reload(tmp_path, coin_game):
    path = tmp_path / "coin.qlp"
    write_qlp(coin_game, path)
    assert main(["solve", "--in", str(path), "--no-bounds", "--ordering", "domain"]) == 0
