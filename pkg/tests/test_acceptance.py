"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line (shown in the terminal summary) and
asserts with the stated tolerance.  Independent oracles live in this file so
that a criterion never grades the package with its own code path.
"""

import json
import math
import os
import signal
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from iwastat.arith import Splitting, enumerate_fundamental
from iwastat.classgroup import class_number, class_number_analytic, group_structure
from iwastat.cldensity import density_rank_exact, density_rank_ge, euler_expansion_coeffs, lambda_lower_bound, verify_sum_product_identity
from iwastat.iwasawa import Method, gold_criterion
from iwastat.randmatrix import exhaustive_corank_distribution, sample_corank_distribution
from iwastat.sweep import empirical_density, hunt_examples, run_sweep

LAMBDA_X = 2000
PRIMES = (3, 5)


@pytest.fixture(scope="module")
def lambda_records():
    return run_sweep(LAMBDA_X, PRIMES, lambda_ceiling=LAMBDA_X)


def _enclosure(p, n, terms=60):
    prod = Fraction(1)
    for k in range(1, terms + 1):
        prod *= 1 - Fraction(1, p**k)
    tail = Fraction(1, p**terms * (p - 1))
    bracket = Fraction(1)
    for j in range(1, n):
        w = Fraction(1, p ** (j * j))
        for k in range(1, j + 1):
            w /= (1 - Fraction(1, p**k)) ** 2
        bracket += w
    return 1 - prod * bracket, 1 - prod * (1 - tail) * bracket


def _lambda_cases(records, p):
    """(record, entry) pairs in criterion 5's range: p prime to D."""
    return [(r, r.entry(p)) for r in records if r.delta % p]


def test_criterion_01_density_formulas(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for p in (3, 5, 7):
        for n in (1, 2, 3, 4):
            a, b = density_rank_ge(p, n), lambda_lower_bound(p, n)
            lo, hi = _enclosure(p, n)
            ok &= abs(float(a.value) - float(b.value)) < 1e-12
            ok &= float(lo) - 1e-12 <= float(a.value) <= float(hi) + 1e-12
            worst = max(worst, abs(float(a.value) - float((lo + hi) / 2)))
    v = float(density_rank_ge(3, 2).value)
    ok &= abs(v - 0.0197794) < 1e-6
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    verdict(1, ok, f"d(r_3>=2)={v:.10g}; max deviation from rational enclosure {worst:.2e}; {elapsed:.3f}s")
    assert ok


def test_criterion_02_identity(verdict):
    t0 = time.perf_counter()
    seq = [verify_sum_product_identity(Fraction(1, 3), n) for n in (1, 2, 4, 8, 16)]
    decreasing = all(b < a for a, b in zip(seq, seq[1:]))
    r3 = verify_sum_product_identity(Fraction(1, 3), 10)
    r5 = verify_sum_product_identity(Fraction(1, 5), 8)
    elapsed = time.perf_counter() - t0
    ok = r3 < 1e-6 and r5 < 1e-8 and decreasing and elapsed < 1.0
    verdict(2, ok, f"q=1/3,N=10: {r3:.2e}; q=1/5,N=8: {r5:.2e}; decreasing under doubling={decreasing}; {elapsed:.3f}s")
    assert ok


def test_criterion_03_euler_expansion(verdict):
    t0 = time.perf_counter()
    n = 60
    brute = [1] + [0] * n
    for i in range(1, n + 1):
        brute = [brute[k] - (brute[k - i] if k >= i else 0) for k in range(n + 1)]
    got = euler_expansion_coeffs(n)
    prefix = got[:8] == [1, -1, -1, 0, 0, 1, 0, 1]
    elapsed = time.perf_counter() - t0
    ok = got == brute and prefix and elapsed < 1.0
    verdict(3, ok, f"degree {n} exact match={got == brute}; prefix 1-q-q^2+q^5+q^7={prefix}; {elapsed:.3f}s")
    assert ok


def test_criterion_04_class_number_dual_oracle(verdict):
    t0 = time.perf_counter()
    fields = enumerate_fundamental(10**4)
    bad = [int(d) for d in fields if class_number(d) != class_number_analytic(d)]
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 120
    verdict(4, ok, f"{len(fields)} fields, mismatches={bad[:5]}; {elapsed:.1f}s")
    assert ok


def test_criterion_05_lambda_at_least_rank(lambda_records, verdict):
    t0 = time.perf_counter()
    run_sweep(LAMBDA_X, PRIMES, lambda_ceiling=LAMBDA_X)
    elapsed = time.perf_counter() - t0
    checked = unstable = 0
    violations, trivial_bad = [], []
    for p in PRIMES:
        for r, e in _lambda_cases(lambda_records, p):
            if not e.lam.stable:
                unstable += 1
                continue
            checked += 1
            if e.lam.lam < e.r_p:
                violations.append((r.delta, p))
            if e.splitting != Splitting.SPLIT and r.h % p and e.lam.lam != 0:
                trivial_bad.append((r.delta, p))
    ok = not violations and not trivial_bad and unstable == 0 and elapsed < 1800
    verdict(5, ok, f"{checked} stable cases, violations={violations[:3]}, inert/ramified nonzero={trivial_bad[:3]}, unstable={unstable}; {elapsed:.1f}s")
    assert ok


def test_criterion_06_containment(lambda_records, verdict):
    details = []
    ok = True
    for p in PRIMES:
        cases = [(r, e) for r, e in _lambda_cases(lambda_records, p) if e.lam.stable]
        rank_set = {r.delta for r, e in cases if e.r_p >= 1}
        lam_set = {r.delta for r, e in cases if e.lam.lam >= 1}
        ok &= rank_set <= lam_set
        details.append(f"p={p}: |r>=1|={len(rank_set)} subset of |lambda>=1|={len(lam_set)}")
    verdict(6, ok, "; ".join(details))
    assert ok


def test_criterion_07_split_inert(lambda_records, verdict):
    split_bad = []
    inert_zero = {}
    for p in PRIMES:
        for r, e in _lambda_cases(lambda_records, p):
            if e.splitting == Splitting.SPLIT and e.lam.lam < 1:
                split_bad.append((r.delta, p))
            if e.splitting == Splitting.INERT and e.lam.lam == 0:
                inert_zero[p] = inert_zero.get(p, 0) + 1
    ok = not split_bad and all(inert_zero.get(p, 0) > 0 for p in PRIMES)
    verdict(7, ok, f"split with lambda<1: {split_bad[:3]}; inert lambda=0 counts {inert_zero}")
    assert ok


def test_criterion_08_gold(lambda_records, verdict):
    cases = [
        (r.delta, p, r.entry(p).lam.lam)
        for r in lambda_records
        for p in PRIMES
        if r.entry(p).splitting == Splitting.SPLIT and r.h % p and r.entry(p).lam.method == Method.STICKELBERGER
    ]
    bad = [(d, p) for d, p, lam in cases if gold_criterion(d, p) != (lam >= 2)]
    ge2 = sum(lam >= 2 for _, _, lam in cases)
    ok = len(cases) >= 50 and not bad
    verdict(8, ok, f"{len(cases)} split p-prime-to-h cases ({ge2} with lambda>=2), disagreements={bad[:5]}")
    assert ok


@pytest.mark.slow
def test_criterion_09_empirical_cohen_lenstra(verdict):
    workers = min(8, os.cpu_count() or 1)
    t0 = time.perf_counter()
    records = run_sweep(10**6, PRIMES, lambda_ceiling=0, workers=workers)
    elapsed = time.perf_counter() - t0
    e3 = empirical_density(records, "rank_ge:3:1")
    e5 = empirical_density(records, "rank_ge:5:1")
    d3, d5 = abs(e3.empirical - 0.4398739), abs(e5.empirical - 0.2396673)
    ok = d3 < 0.05 and d5 < 0.05 and elapsed < 1800
    verdict(
        9,
        ok,
        f"{e3.total_count} fields: r_3>=1 {e3.empirical:.6f} (|err| {d3:.4f}), r_5>=1 {e5.empirical:.6f} (|err| {d5:.4f}); "
        f"{elapsed:.0f}s on {workers} worker(s)",
    )
    assert ok


def test_criterion_10_hunts(verdict):
    records = run_sweep(10**4, (3,), lambda_ceiling=0)
    r3 = hunt_examples(records, "rank_ge:3:3")
    z33 = hunt_examples(records, "contains:3:2")
    confirmed = bool(r3) and class_number(r3[0]) == class_number_analytic(r3[0]) and group_structure(r3[0]).p_rank(3) >= 3
    z_ok = bool(z33) and class_number(z33[0]) == class_number_analytic(z33[0])
    ok = confirmed and z_ok
    verdict(
        10,
        ok,
        f"r_3>=3 over |D|<=10^4: {'smallest ' + str(r3[0]) if r3 else 'none found'}; "
        f"(Z/3)^2 over |D|<=10^4: smallest {z33[0] if z33 else None} ({len(z33)} fields)",
    )
    assert ok


def test_criterion_11_random_matrices(verdict):
    t0 = time.perf_counter()
    exact_ok = True
    for p in (3, 5):
        for n in (1, 2):
            want = {}
            for entries in np.ndindex(*(p,) * (n * n)):
                m = np.array(entries).reshape(n, n)
                if not m.any():
                    k = n
                elif n == 1:
                    k = 0
                else:
                    k = 0 if (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) % p else 1
                want[k] = want.get(k, 0) + 1
            exact_ok &= exhaustive_corank_distribution(p, n).counts == want
    hist = sample_corank_distribution(3, 60, 10**5, seed=20240601)
    f0 = hist.empirical(0)
    tv = hist.total_variation()
    elapsed = time.perf_counter() - t0
    ok = exact_ok and abs(f0 - 0.5601261) < 0.01 and tv < 0.015 and elapsed < 60
    verdict(11, ok, f"exhaustive N<=2 exact={exact_ok}; corank-0 {f0:.5f}; TV {tv:.5f}; {elapsed:.1f}s")
    assert ok


def _cli(args, **kw):
    return subprocess.run([sys.executable, "-m", "iwastat", *args], capture_output=True, **kw)


def test_criterion_12_determinism(tmp_path, verdict):
    runs = []
    for tag in ("a", "b"):
        proc = _cli(["verify", "--no-header", "--out", str(tmp_path / f"verify_{tag}")])
        runs.append((proc.returncode, proc.stdout, (tmp_path / f"verify_{tag}" / "verify.json").read_bytes()))
    verify_same = runs[0] == runs[1] and runs[0][0] == 0

    sweep_args = ["sweep", "--x", "10000", "--primes", "3,5", "--block-size", "256", "--no-header"]
    ck = tmp_path / "ck.jsonl"
    proc = subprocess.Popen(
        [sys.executable, "-m", "iwastat", *sweep_args, "--checkpoint", str(ck), "--out", str(tmp_path / "resumed")],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )
    deadline = time.monotonic() + 120
    lines = 0
    while time.monotonic() < deadline and proc.poll() is None:
        if ck.exists():
            lines = ck.read_bytes().count(b"\n")
            if lines > 50:
                break
        time.sleep(0.01)
    killed = proc.poll() is None
    if killed:
        proc.send_signal(signal.SIGKILL)
    proc.wait()
    partial = ck.read_bytes().count(b"\n")
    resume = _cli([*sweep_args, "--checkpoint", str(ck), "--out", str(tmp_path / "resumed")])
    fresh = _cli([*sweep_args, "--out", str(tmp_path / "fresh")])
    reports_same = all(
        (tmp_path / "resumed" / name).read_bytes() == (tmp_path / "fresh" / name).read_bytes()
        for name in ("sweep.csv", "sweep.json")
    )
    def _summary(out):
        # drop the lines that name output paths; they differ by construction
        return [l for l in out.splitlines() if not l.startswith((b"checkpoint=", b"written="))]

    stdout_same = _summary(resume.stdout) == _summary(fresh.stdout)
    ok = verify_same and killed and 1 < partial and resume.returncode == 0 and reports_same and stdout_same
    verdict(
        12,
        ok,
        f"verify runs identical={verify_same}; sweep killed after {partial - 1} records={killed}; "
        f"resumed reports identical to fresh={reports_same}; summaries identical={stdout_same}",
    )
    assert ok
