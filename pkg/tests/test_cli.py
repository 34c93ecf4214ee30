import json

import pytest

from ensemble_compiler.cli import _parse, main, read_config_file


def test_compile_benchmark_writes_json(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["compile", "--benchmark", "heisenberg:2:1", "--epsilon2", "1e-2", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "ensemble mean count" in text
    doc = json.loads((out / "ensemble.json").read_text())
    assert doc["epsilon"] == pytest.approx(0.1)


def test_compile_qasm_input(tmp_path, capsys):
    src = tmp_path / "c.qasm"
    src.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\ncx q[0],q[1];\ncx q[0],q[1];\n')
    assert main(["compile", "--input", str(src), "--epsilon", "0.1"]) == 0
    assert "change: -100.00%" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["compile", "--benchmark", "nope:2"],
        ["compile", "--benchmark", "heisenberg:2:1", "--epsilon", "1.5"],
        ["compile", "--benchmark", "heisenberg:2:1", "--epsilon2", "-1"],
        ["compile"],
        ["compile", "--input", "/nonexistent/file.qasm"],
    ],
)
def test_bad_input_exit_code(argv, capsys):
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_parse_error_exit_code(tmp_path):
    src = tmp_path / "bad.qasm"
    src.write_text("OPENQASM 2.0;\nqreg q[2];\nfoo q[0];\n")
    assert main(["compile", "--input", str(src)]) == 2


def test_capacity_exit_code():
    # the convergence study needs the exact channel, which is capped at 8 qubits
    assert main(["convergence", "--benchmark", "heisenberg:12:1", "--epsilon-grid", "0.5", "--T-grid", "1",
                 "--trials", "1", "--block-width", "2"]) == 3


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nblock-width = 3\nseed = 7\nprofile = ft\n")
    args = _parse(["compile", "--config", str(cfg), "--benchmark", "heisenberg:2:1", "--seed", "9"])
    assert args.block_width == 3 and args.seed == 9 and args.profile == "ft"


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["compile", "--config", str(bad), "--benchmark", "heisenberg:2:1"]) == 2
    bad.write_text("no equals sign\n")
    assert main(["compile", "--config", str(bad), "--benchmark", "heisenberg:2:1"]) == 2


def test_read_config_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("a-b = 1  # trailing\n\nc = 'x'\n")
    assert read_config_file(str(p)) == {"a_b": "1", "c": "x"}


def test_tables_and_inspect(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["tables", "--benchmarks", "heisenberg:2:1", "--epsilon2-grid", "1e-2", "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("benchmark,epsilon2,reference,ensemble_mean,percent_change")
    assert (out / "tables.csv").exists()
    assert main(["compile", "--benchmark", "heisenberg:3:1", "--block-width", "2", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["inspect", str(out / "ensemble.json"), "--block", "0", "--circuits"]) == 0
    text = capsys.readouterr().out
    assert "block 0 on qubits" in text and "block 1 " not in text
    assert "OPENQASM 2.0;" in text


def test_convergence_command(capsys):
    rc = main(["convergence", "--benchmark", "heisenberg:2:1", "--epsilon-grid", "0.3", "--T-grid", "1,10",
               "--trials", "2"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "epsilon,T,mean,lo,hi" and len(lines) == 3
