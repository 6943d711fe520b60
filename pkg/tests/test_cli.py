import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ellcov.cli import main

from reference_values import EQUAL_VARIANCE_LEVELS

IDENTITY = ["--mu", "0,0", "--sigma", "1,0;0,1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def strict_json(text):
    def reject(token):
        raise ValueError(f"non-standard JSON token {token}")

    return json.loads(text, parse_constant=reject)


def csv_fields(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["field", "value"]
    assert all(len(r) == 2 for r in rows)
    return dict(rows[1:])


def test_k_invariant_gaussian(capsys):
    code, out, _ = run(capsys, "k-invariant", "--family", "gaussian", "--subset", "0:0.2")
    assert code == 0
    assert "k           1.000000" in out


def test_k_invariant_full_space_json(capsys):
    code, out, _ = run(capsys, "k-invariant", "--family", "t", "--nu", "5", "--subset", "0:1", "--format", "json")
    assert code == 0
    d = strict_json(out)
    assert f"{d['k']:.6f}" == "1.000000"
    assert d["family"] == {"name": "t", "nu": 5.0}


def test_k_invariant_mc_matches_quadrature(capsys):
    base = ["k-invariant", "--family", "t", "--nu", "3", "--subset", "0.045:0.955", "--format", "json"]
    _, out_q, _ = run(capsys, *base)
    code, out_mc, _ = run(capsys, *base, "--method", "mc", "--draws", "1000000", "--seed", "7")
    assert code == 0
    q, mc = strict_json(out_q), strict_json(out_mc)
    assert mc["method"] == "monte-carlo"
    assert abs(q["k"] - mc["k"]) < 4 * mc["err_estimate"]


def test_k_invariant_csv(capsys):
    code, out, _ = run(capsys, "k-invariant", "--family", "t", "--nu", "5", "--subset", "0:0.3", "--format", "csv")
    assert code == 0
    fields = csv_fields(out)
    assert float(fields["k"]) > 1.0
    assert fields["var_v1_err"] == ""


def test_cond_cov_half_normal(capsys):
    code, out, _ = run(capsys, "cond-cov", *IDENTITY, "--a", "1,0", "--subset", "0:0.5", "--format", "json")
    assert code == 0
    d = strict_json(out)
    np.testing.assert_allclose(d["cond_cov"], [[1 - 2 / math.pi, 0], [0, 1]], atol=1e-12)


def test_cond_cov_value_space_subset(capsys):
    _, out_p, _ = run(capsys, "cond-cov", *IDENTITY, "--a", "1,0", "--subset", "0:0.5", "--format", "json")
    _, out_v, _ = run(capsys, "cond-cov", *IDENTITY, "--a", "1,0", "--subset-values=-inf:0", "--format", "json")
    np.testing.assert_allclose(strict_json(out_v)["cond_cov"], strict_json(out_p)["cond_cov"], atol=1e-12)


def test_cond_cov_model_file_full_space(capsys, tmp_path):
    sigma = [[2.0, 0.3], [0.3, 1.0]]
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"schema": 1, "mu": [1.0, 2.0], "sigma": sigma, "family": {"name": "t", "nu": 6}}))
    code, out, _ = run(capsys, "cond-cov", "--model", str(path), "--a", "1,1", "--subset", "0:1", "--format", "json")
    assert code == 0
    np.testing.assert_allclose(strict_json(out)["cond_cov"], sigma, rtol=1e-10)


def test_cond_cov_mc_oracle(capsys):
    code, out, _ = run(
        capsys, "cond-cov", *IDENTITY, "--family", "t", "--nu", "5", "--a", "1,1",
        "--subset", "0.8:1", "--oracle", "mc", "--draws", "100000", "--seed", "3",
    )
    assert code == 0
    assert "Monte Carlo (100000 draws, seed 3" in out
    code, out, _ = run(
        capsys, "cond-cov", *IDENTITY, "--a", "1,1", "--subset", "0.8:1", "--oracle", "mc",
        "--draws", "100000", "--format", "csv",
    )
    assert code == 0
    csv_fields(out)


def test_partition_variance(capsys):
    code, out, _ = run(capsys, "partition", "--mode", "variance", "--k", "2")
    assert code == 0
    assert "0.198 0.802" in out


def test_partition_kprime(capsys):
    code, out, _ = run(capsys, "partition", "--mode", "kprime", "--family", "t", "--nu", "5", "--cells", "4", "--format", "json")
    assert code == 0
    np.testing.assert_allclose(strict_json(out)["levels"], (0.016, 0.5, 0.984), atol=1e-3)


def test_emit_table1(capsys):
    code, out, _ = run(capsys, "partition", "--emit", "table1")
    assert code == 0
    rows = out.strip().splitlines()[1:]
    assert len(rows) == 6
    for k, line in enumerate(rows, start=1):
        values = [float(t) for t in line.split()[1 : 1 + k]]
        np.testing.assert_allclose(values, EQUAL_VARIANCE_LEVELS[k], atol=1e-3)


def test_emit_table1_json(capsys):
    code, out, _ = run(capsys, "partition", "--emit", "table1", "--format", "json")
    assert code == 0
    assert len(strict_json(out)) == 6


def test_partition_out_of_range(capsys):
    code, _, err = run(capsys, "partition", "--mode", "variance", "--k", "13")
    assert code == 1
    assert "k must be" in err


def test_sample_three_rows(capsys):
    code, out, _ = run(capsys, "sample", *IDENTITY, "--count", "3", "--seed", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x1,x2"
    assert len(lines) == 4


def test_sample_deterministic(capsys, tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "sample", *IDENTITY, "--count", "50", "--seed", "9", "--out", str(p1))
    run(capsys, "sample", *IDENTITY, "--count", "50", "--seed", "9", "--out", str(p2))
    assert p1.read_text() == p2.read_text()


def test_sample_count_zero_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sample", *IDENTITY, "--count", "0"])
    assert info.value.code == 2


def test_seed_environment_variable(monkeypatch, capsys):
    monkeypatch.setenv("ELLCOV_SEED", "5")
    _, env_out, _ = run(capsys, "sample", *IDENTITY, "--count", "4")
    _, explicit, _ = run(capsys, "sample", *IDENTITY, "--count", "4", "--seed", "5")
    monkeypatch.delenv("ELLCOV_SEED")
    _, default, _ = run(capsys, "sample", *IDENTITY, "--count", "4")
    _, forty_two, _ = run(capsys, "sample", *IDENTITY, "--count", "4", "--seed", "42")
    assert env_out == explicit
    assert default == forty_two != env_out


def test_check_normality_malformed_csv(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n3,4\nfive,6\n")
    code, _, err = run(capsys, "check-normality", "--data", str(p))
    assert code == 1
    assert "line 4" in err


def test_check_normality_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "check-normality", "--data", str(tmp_path / "nope.csv"))
    assert code == 1
    assert err


def test_check_normality_json(capsys, tmp_path):
    p = tmp_path / "d.csv"
    run(capsys, "sample", *IDENTITY, "--count", "3000", "--seed", "2", "--out", str(p))
    code, out, _ = run(capsys, "check-normality", "--data", str(p), "--a", "1,1", "--format", "json")
    assert code == 0
    d = strict_json(out)
    assert sum(d["cell_counts"]) == 3000
    assert d["statistic"] >= 0


def test_invalid_model_is_reported(capsys):
    code, _, err = run(capsys, "cond-cov", "--mu", "0,0", "--sigma", "1,2;2,1", "--a", "1,0")
    assert code == 1
    assert err


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2


def test_pipe_sample_into_check_normality():
    cmd = [sys.executable, "-m", "ellcov"]
    produced = subprocess.run(
        cmd + ["sample", *IDENTITY, "--count", "20000", "--seed", "4"], capture_output=True, text=True, check=True
    )
    checked = subprocess.run(
        cmd + ["check-normality", "--data", "-", "--a", "1,1", "--bootstrap", "200", "--seed", "1", "--format", "json"],
        input=produced.stdout, capture_output=True, text=True,
    )
    assert checked.returncode == 0, checked.stderr
    d = strict_json(checked.stdout)
    q99 = {q["level"]: q["value"] for q in d["bootstrap_quantiles"]}[0.99]
    assert d["statistic"] < q99
