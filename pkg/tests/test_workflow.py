import csv
import io
import json
import math

import numpy as np
import pytest

from ensemble_compiler.benchmarks import heisenberg
from ensemble_compiler.channels import apply_ensemble_channel, ideal_output
from ensemble_compiler.circuit import CNOT, Circuit, unitary
from ensemble_compiler.ensemble import rewee_constant
from ensemble_compiler.errors import InputError
from ensemble_compiler.qasm import parse_qasm
from ensemble_compiler.workflow import (
    SCALING_HEADER, CompileConfig, compile_circuit, parse_benchmark_spec, report_scaling, report_tables,
)

from oracles import phase_free_distance

HEIS2 = CompileConfig(benchmark="heisenberg:2:1", eps=0.1)


@pytest.mark.parametrize(
    "kw",
    [
        dict(benchmark="heisenberg:2:1", eps=0.0),
        dict(benchmark="heisenberg:2:1", eps=1.0),
        dict(benchmark="heisenberg:2:1", block_width=1),
        dict(benchmark="heisenberg:2:1", block_width=6),
        dict(),
        dict(benchmark="heisenberg:2:1", input_path="x.qasm"),
        dict(benchmark="heisenberg:2:1", profile="cloud"),
        dict(benchmark="heisenberg:2:1", diversify_count=3),
    ],
)
def test_config_validation(kw):
    with pytest.raises(InputError):
        CompileConfig(**kw)


@pytest.mark.parametrize("spec, expected", [("heisenberg:4:2", ("heisenberg", 4, 2)),
                                            ("qaoa:4", ("qaoa_ring", 4, 1)),
                                            ("adder:4", ("qft_adder", 4, 1))])
def test_parse_benchmark_spec(spec, expected):
    assert parse_benchmark_spec(spec) == expected


@pytest.mark.parametrize("spec", ["heisenberg", "heisenberg:x", "a:1:2:3"])
def test_parse_benchmark_spec_errors(spec):
    with pytest.raises(InputError):
        parse_benchmark_spec(spec)


def test_identity_circuit_costs_nothing():
    res = compile_circuit(HEIS2, Circuit(2, [CNOT(0, 1), CNOT(0, 1)]))
    r = res.report
    assert r.reference_count == 2
    assert r.expected_count == 0
    assert r.sum_wee <= 1e-12
    assert r.percent_change == pytest.approx(-100.0)


def test_compile_is_deterministic(tmp_path):
    cfg = CompileConfig(benchmark="heisenberg:3:1", eps=0.1, block_width=2, out_dir=str(tmp_path / "a"))
    a = compile_circuit(cfg)
    b = compile_circuit(CompileConfig(benchmark="heisenberg:3:1", eps=0.1, block_width=2,
                                      out_dir=str(tmp_path / "b")))
    assert a.ensemble_json == b.ensemble_json
    assert (tmp_path / "a" / "ensemble.json").read_bytes() == (tmp_path / "b" / "ensemble.json").read_bytes()
    assert (tmp_path / "a" / "report.json").exists()


def test_ensemble_json_contents():
    res = compile_circuit(CompileConfig(benchmark="heisenberg:3:1", eps=0.1, block_width=2))
    doc = json.loads(res.ensemble_json)
    assert doc["width"] == 3 and doc["profile"] == "nisq"
    assert len(doc["blocks"]) == res.report.K
    expected = 0.0
    for blk in doc["blocks"]:
        assert math.fsum(blk["weights"]) == pytest.approx(1.0, abs=1e-9)
        assert blk["wee"] <= rewee_constant(0.1) * 0.01 + 1e-12 or not blk["accepted"]
        expected += float(np.dot(blk["weights"], blk["costs"]))
        for text in blk["members"]:
            parse_qasm(text)  # members are valid QASM
    assert expected == pytest.approx(res.report.expected_count, abs=1e-9)


def test_ensemble_channel_is_close_to_ideal():
    res = compile_circuit(CompileConfig(benchmark="heisenberg:3:1", eps=0.1, block_width=2))
    V = unitary(res.circuit)
    assert phase_free_distance(res.distribution.ideal_unitary(), V) < 1e-9
    r = res.report
    assert r.observable_error <= r.K * rewee_constant(0.1) * 0.01
    assert r.max_trace_distance <= r.K * rewee_constant(0.1) * 0.01


def test_tight_eps_falls_back_to_exact_circuit():
    circuit = Circuit(2, [CNOT(0, 1)]).compose(heisenberg(2, 1))
    res = compile_circuit(CompileConfig(benchmark="heisenberg:2:1", eps=1e-12), circuit)
    V = unitary(circuit)
    psi = np.zeros((4, 4), dtype=complex)
    psi[0, 0] = 1
    out = apply_ensemble_channel(res.distribution, psi)
    assert np.allclose(out, V @ psi @ V.conj().T, atol=1e-9)
    assert np.allclose(ideal_output(res.distribution, psi), out, atol=1e-9)


def test_ft_profile_runs_on_small_qaoa():
    r = compile_circuit(CompileConfig(benchmark="qaoa:2:1", eps=0.1, profile="ft")).report
    assert r.profile == "ft" and r.K == 1
    assert r.expected_count <= r.reference_count


def test_report_tables_row():
    text = report_tables(["heisenberg:2:1"], [1e-2], HEIS2)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["benchmark", "epsilon2", "reference", "ensemble_mean", "percent_change"]
    spec, eps2, ref, mean, pct = rows[1]
    assert spec == "heisenberg:2:1" and float(eps2) == 1e-2
    assert float(pct) == pytest.approx(100 * (float(mean) - float(ref)) / float(ref), rel=1e-5)


def test_report_scaling_bound_column():
    text = report_scaling(["heisenberg:2:1"], [0.1, 0.05], HEIS2)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == SCALING_HEADER
    for row in rows[1:]:
        eps, K, bound, filt = float(row[1]), int(row[2]), float(row[3]), float(row[4])
        assert bound == pytest.approx(K * eps**2, rel=1e-5)
        assert filt == pytest.approx(K * rewee_constant(eps) * eps**2, rel=1e-5)
