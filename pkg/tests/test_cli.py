import io
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from askey_lattice import cli, spectral
from askey_lattice.spin import SpinChainSpec
from askey_lattice.testbed import sample_instance

from test_families import finite_instances

KRAW = ["--family", "krawtchouk", "--p", "0.5"]


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def csv_rows(text):
    lines = text.strip().split("\n")
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def instance_args(inst):
    args = ["--family", inst.family.value]
    for k, v in inst.param_dict().items():
        args += [f"--{k}", repr(v)]
    if inst.finite:
        args += ["--N", inst.lattice.N]
    return args


# ---------------------------------------------------------------------------
# examples
# ---------------------------------------------------------------------------


def test_spectrum_example():
    code, out, _ = call("spectrum", *KRAW, "--N", 4)
    assert code == 0
    head, rows = csv_rows(out)
    assert head == ["n", "energy"]
    assert [(int(n), float(e)) for n, e in rows] == [(n, n) for n in range(5)]


def test_verify_example():
    q, d, N = 0.7, 0.5, 8
    a = 0.9 * q**N * d
    code, out, _ = call("verify", "--family", "q-racah", "--q", q, "--d", d, "--a", repr(a),
                        "--b", 0.8, "--N", N, "--tol", 1e-9)
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_correlation_example():
    code, out, _ = call("correlation", *KRAW, "--N", 1, "--mu", 0.5)
    assert code == 0
    head, rows = csv_rows(out)
    assert head == ["0", "1"]
    assert [float(v) for r in rows for v in r] == pytest.approx([0.5] * 4, rel=1e-15)


def test_list_families():
    code, out, _ = call("list-families")
    head, rows = csv_rows(out)
    assert code == 0 and head[0] == "family" and len(rows) == 15
    code, out, _ = call("list-families", "--format", "json")
    assert len(json.loads(out)["families"]) == 15


def test_eigvecs_and_entropy():
    _, out, _ = call("eigvecs", *KRAW, "--N", 1)
    head, rows = csv_rows(out)
    assert head == ["x", "n0", "n1"]
    assert float(rows[1][2]) == pytest.approx(-math.sqrt(0.5), rel=1e-15)
    _, out, _ = call("entropy", *KRAW, "--N", 1, "--mu", 0.5, "--format", "json")
    doc = json.loads(out)
    assert doc["columns"] == ["L", "S"] and doc["mu"] == 0.5
    assert doc["rows"][0][1] == pytest.approx(math.log(2), abs=1e-10)
    assert doc["rows"][1][1] <= 1e-10


def test_evolve_kinds():
    _, out, _ = call("evolve", *KRAW, "--N", 1, "--t", "0,1")
    head, rows = csv_rows(out)
    assert head == ["t", "x", "p"] and len(rows) == 4
    assert float(rows[2][2]) == pytest.approx(0.5 + 0.5 * math.exp(-1), rel=1e-14)
    for kind in ("walk", "magnon"):
        code, out, _ = call("evolve", *KRAW, "--N", 2, "--kind", kind, "--t", "0.5", "--start", 1)
        head, rows = csv_rows(out)
        assert code == 0 and head == ["t", "x", "re", "im", "abs2"]
        assert math.fsum(float(r[4]) for r in rows) == pytest.approx(1.0, abs=1e-12)
    code, _, err = call("evolve", *KRAW, "--N", 1, "--p0", "0.5,0.4")
    assert code == 1 and err.startswith("InvalidDistribution:")


def test_spin_export_round_trip(tmp_path):
    path = tmp_path / "chain.json"
    code, out, _ = call("spin-export", "--family", "hahn", "--a", 1.5, "--b", 0.7, "--N", 5,
                        "--mu", 2.5, "--variant", "alternative", "--output", path)
    assert code == 0 and out == ""
    chain = SpinChainSpec.from_json(path.read_text())
    assert chain.variant == "alternative" and chain.mu == 2.5 and chain.sites == 6
    assert chain.to_json() + "\n" == path.read_text()
    _, out, _ = call("spin-export", *KRAW, "--N", 1, "--format", "csv")
    assert out == "x,coupling,field\n0,0.5,0.5\n1,,0.5\n"


# ---------------------------------------------------------------------------
# errors and exit codes
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("argv,name", [
    (["spectrum", *KRAW[:2], "--p", "1.5", "--N", "4"], "ParameterOutOfRange"),
    (["correlation", *KRAW, "--N", "4", "--mu", "2"], "DegenerateFermiLevel"),
    (["correlation", *KRAW, "--N", "4", "--mu", "9"], "OutOfBand"),
    (["evolve", *KRAW, "--N", "2", "--start", "5"], "LatticeRangeError"),
    (["verify", "--family", "charlier", "--a", "2", "--M-max", "3"], "TruncationFailure"),
])
def test_domain_errors_exit_1(argv, name):
    code, out, err = call(*argv)
    assert code == 1 and out == ""
    assert err.split(":")[0] == name


@pytest.mark.parametrize("argv", [
    [],
    ["no-such-command"],
    ["spectrum", "--family", "krawtchouk", "--N", "four"],
    ["spectrum", "--bogus"],
    ["evolve", *KRAW, "--N", "2", "--kind", "teleport"],
])
def test_usage_errors_exit_2(argv):
    code, out, err = call(*argv)
    assert code == 2 and out == "" and err


def test_config_errors_exit_2(tmp_path):
    code, _, err = call("correlation", *KRAW, "--N", 4)
    assert code == 2 and err.startswith("ConfigError:") and "--mu" in err
    code, _, err = call("spectrum", "--family", "charlier", "--a", 1, "--N", 4)
    assert code == 2 and err.startswith("ConfigError:")
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "family": "krawtchouk",\n  "N": 4,\n}\n')
    code, _, err = call("spectrum", "--config", bad)
    assert code == 2 and "line 4" in err
    bad.write_text('{"family": "krawtchouk", "params": {"p": 0.5}, "N": 4, "colour": 1}')
    code, _, err = call("spectrum", "--config", bad)
    assert code == 2 and "'colour'" in err
    bad.write_text('{"family": "krawtchouk", "params": {"p": 0.5}, "N": 4.5}')
    code, _, err = call("spectrum", "--config", bad)
    assert code == 2 and "'N'" in err
    code, _, err = call("spectrum", "--config", tmp_path / "missing.json")
    assert code == 2


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"family": "krawtchouk", "params": {"p": 0.5}, "N": 2,
                               "format": "json"}))
    code, out, _ = call("spectrum", *KRAW, "--N", 6, "--config", cfg)
    assert code == 0
    doc = json.loads(out)
    assert doc["lattice"]["N"] == 2 and len(doc["rows"]) == 3
    cfg.write_text(json.dumps({"family": "charlier", "params": {"a": 1.0},
                               "truncation": {"eps_tail": 1e-10, "min_modes": 3}}))
    code, out, _ = call("spectrum", "--config", cfg)
    assert code == 0 and len(csv_rows(out)[1]) >= 3


# ---------------------------------------------------------------------------
# determinism and verify consistency
# ---------------------------------------------------------------------------


@given(finite_instances(max_N=8), st.sampled_from(["spectrum", "eigvecs", "verify", "spin-export"]))
def test_repeated_runs_are_identical(inst, command):
    argv = [command, *instance_args(inst)]
    assert call(*argv) == call(*argv)


@given(finite_instances(max_N=12))
def test_verify_exit_code_matches_report(inst):
    code, out, _ = call("verify", *instance_args(inst))
    report = json.loads(out)
    assert code == (0 if report["passed"] else 1)
    assert report["passed"] == spectral.verify(inst).passed
    assert report["passed"] == all(c["passed"] for c in report["checks"])


def test_verify_csv_layout():
    inst = sample_instance("hahn", N=4)
    code, out, _ = call("verify", *instance_args(inst), "--format", "csv")
    head, rows = csv_rows(out)
    assert code == 0 and head == ["check", "defect", "tol", "passed"]
    assert rows[-1][0] == "overall" and rows[-1][-1] == "true"
