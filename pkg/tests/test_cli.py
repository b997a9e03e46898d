"""Command-line behaviour: outputs, exit codes, determinism."""

import json
import os
import subprocess
import sys

import pytest

from iwastat.cli import main


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_densities_prints_lower_bound(capsys):
    code, out, _ = run(["densities", "--p", "3", "--n", "2", "--no-header"], capsys)
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("lambda_ge_2_lower_bound="))
    value, bound = line.split("=", 1)[1].split(" ± ")
    assert abs(float(value) - 0.0197794) < 1e-6 and float(bound) < 1e-12
    assert "rank_ge_2_by_subtraction=" in out and "identity_residual" in out


def test_classgroup(capsys):
    code, out, _ = run(["classgroup", "--delta", "-23", "--no-header"], capsys)
    assert code == 0 and out == "delta=-23\nh=3\ndivisors=[3]\n"
    code, out, _ = run(["classgroup", "--delta", "-3299", "--primes", "3", "--check", "--no-header"], capsys)
    assert "divisors=[3,9]" in out and "r_3=2" in out and "h_analytic=27" in out


def test_lambda_inert(capsys):
    code, out, _ = run(["lambda", "--delta", "-7", "--p", "5", "--no-header"], capsys)
    assert code == 0 and "lambda=0" in out and "method=inert_trivial" in out


def test_json_mirrors_text(capsys):
    _, text, _ = run(["densities", "--p", "5", "--n", "3", "--no-header"], capsys)
    _, js, _ = run(["densities", "--p", "5", "--n", "3", "--no-header", "--json"], capsys)
    doc = json.loads(js)
    for line in text.splitlines():
        key, val = line.split("=", 1)
        entry = doc[key]
        if isinstance(entry, dict):
            v, b = val.split(" ± ")
            assert float(v) == entry["value"] and float(b) == entry["error_bound"]
        elif isinstance(entry, (int, float)):
            assert float(val) == entry
        else:
            assert val == entry


def test_header_carries_config(capsys):
    _, out, _ = run(["classgroup", "--delta", "-23"], capsys)
    head = out.splitlines()[0]
    assert head.startswith("# iwastat") and '"delta": -23' in head
    _, js, _ = run(["classgroup", "--delta", "-23", "--json"], capsys)
    assert json.loads(js)["header"]["config"]["delta"] == -23


def test_same_argv_same_output(capsys):
    args = ["sweep", "--x", "400", "--primes", "3,5", "--lambda-ceiling", "200", "--no-header"]
    _, a, _ = run(args, capsys)
    _, b, _ = run(args, capsys)
    assert a == b and "check.containment[p=3,n=1]=pass" in a


@pytest.mark.parametrize(
    "args",
    [["--bogus"], ["densities", "--p", "3"], ["densities", "--p", "4", "--n", "1"], ["classgroup", "--delta", "-12"], []],
)
def test_usage_errors_exit_1(args, capsys):
    code, out, err = run(args, capsys)
    assert code == 1 and out == "" and err


def test_io_error_exit_3(tmp_path, capsys):
    blocker = tmp_path / "f"
    blocker.write_text("")
    code, _, err = run(["sweep", "--x", "50", "--checkpoint", str(blocker / "c.jsonl")], capsys)
    assert code == 3 and "I/O error" in err


def test_corrupt_checkpoint_exit_3(tmp_path, capsys):
    ck = tmp_path / "c.jsonl"
    ck.write_text('{"type":"header"}\n{broken\n')
    code, _, err = run(["sweep", "--x", "50", "--checkpoint", str(ck)], capsys)
    assert code == 3


def test_cache_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("IWASTAT_CACHE", str(tmp_path))
    code, out, _ = run(["sweep", "--x", "60", "--primes", "3", "--no-header"], capsys)
    assert code == 0
    assert list(tmp_path.glob("sweep-*.jsonl"))


def test_sweep_writes_reports(tmp_path, capsys):
    code, out, _ = run(["sweep", "--x", "300", "--primes", "3", "--out", str(tmp_path), "--svg", "--no-header"], capsys)
    assert code == 0
    assert (tmp_path / "sweep.csv").exists() and (tmp_path / "sweep.json").exists() and (tmp_path / "rank_p3.svg").exists()


def test_matrix_sim(tmp_path, capsys):
    csv_path = tmp_path / "h.csv"
    code, out, _ = run(["matrix-sim", "--p", "3", "--size", "2", "--exhaustive", "--csv", str(csv_path), "--no-header"], capsys)
    assert code == 0 and "corank_0.count=48" in out and "corank_2.count=1" in out
    assert csv_path.read_text().startswith("corank,count,empirical,predicted,abs_error")


def test_hunt(capsys):
    code, out, _ = run(["hunt", "--x", "5000", "--criterion", "rank_ge:3:2", "--criterion", "rank_ge:3:3", "--no-header"], capsys)
    assert code == 0
    assert "rank_ge:3:2.smallest=-3299" in out and "rank_ge:3:3.smallest=none" in out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "iwastat", "classgroup", "--delta", "-23", "--no-header"],
        capture_output=True, text=True, env=dict(os.environ),
    )
    assert proc.returncode == 0 and "h=3" in proc.stdout
