"""Invariant suite run by ``iwastat verify``.

Each check returns a :class:`~iwastat.sweep.CheckResult`; details are
deterministic strings so two runs produce identical reports.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .arith import Splitting, enumerate_fundamental
from .classgroup import class_number, class_number_analytic
from .cldensity import density_rank_ge, euler_expansion_coeffs, lambda_lower_bound, verify_sum_product_identity
from .iwasawa import Method, gold_criterion
from .randmatrix import exhaustive_corank_distribution, sample_corank_distribution
from .sweep import CheckResult, check_invariants, run_sweep


def _pentagonal(n: int) -> list[int]:
    out = [0] * (n + 1)
    k = 0
    while True:
        hit = False
        for m in ((k * (3 * k - 1)) // 2, (k * (3 * k + 1)) // 2) if k else (0,):
            if m <= n:
                out[m] = -1 if k % 2 else 1
                hit = True
        if not hit:
            return out
        k += 1


def check_densities() -> list[CheckResult]:
    worst = 0.0
    for p in (3, 5, 7):
        for n in (1, 2, 3, 4):
            fl = density_rank_ge(p, n)
            ex = density_rank_ge(p, n, exact=True)
            lb = lambda_lower_bound(p, n)
            gap = max(abs(float(fl.value) - float(ex.value)), abs(float(lb.value) - float(fl.value)))
            if gap > fl.error_bound + ex.error_bound:
                return [CheckResult("densities", False, f"p={p} n={n} float/exact gap {gap:.3e}")]
            worst = max(worst, gap)
    return [CheckResult("densities", True, f"float vs exact, p in 3,5,7, n in 1..4: max gap {worst:.3e}")]


def check_identity() -> list[CheckResult]:
    res = [verify_sum_product_identity(Fraction(1, 3), n) for n in (1, 2, 4, 8, 16)]
    decreasing = all(b < a for a, b in zip(res, res[1:]))
    r10 = verify_sum_product_identity(Fraction(1, 3), 10)
    r8 = verify_sum_product_identity(Fraction(1, 5), 8)
    ok = decreasing and r10 < 1e-6 and r8 < 1e-8
    return [CheckResult("identity", ok, f"q=1/3 N=10: {r10:.3e}; q=1/5 N=8: {r8:.3e}; decreasing={decreasing}")]


def check_euler(n: int = 60) -> list[CheckResult]:
    ok = euler_expansion_coeffs(n) == _pentagonal(n)
    return [CheckResult("euler_expansion", ok, f"degree {n} against pentagonal exponents")]


def check_class_numbers(x: int) -> list[CheckResult]:
    bad = [int(d) for d in enumerate_fundamental(x) if class_number(d) != class_number_analytic(d)]
    return [CheckResult("class_number_dual_oracle", not bad, f"|D| <= {x}: mismatches={bad[:5]}")]


def check_sweep(lambda_x: int, primes: Sequence[int]) -> list[CheckResult]:
    records = run_sweep(lambda_x, primes, lambda_ceiling=lambda_x)
    out = check_invariants(records, primes)
    for p in primes:
        inert_zero = any(
            r.entry(p).splitting == Splitting.INERT and r.entry(p).lam is not None and r.entry(p).lam.lam == 0
            for r in records
        )
        out.append(CheckResult(f"inert_zero_exists[p={p}]", inert_zero, "some inert field has lambda=0"))
    gold = [
        (r.delta, p, r.entry(p).lam.lam)
        for r in records
        for p in primes
        if r.entry(p).splitting == Splitting.SPLIT
        and r.h % p
        and r.entry(p).lam.stable
        and r.entry(p).lam.method == Method.STICKELBERGER
    ]
    bad = [(d, p) for d, p, lam in gold if gold_criterion(d, p) != (lam >= 2)]
    out.append(CheckResult("gold_cross_check", len(gold) >= 50 and not bad, f"{len(gold)} cases, disagreements={bad[:5]}"))
    return out


def check_matrices(trials: int, seed: int) -> list[CheckResult]:
    exact = {(3, 1): {0: 2, 1: 1}, (3, 2): {0: 48, 1: 32, 2: 1}, (5, 2): {0: 480, 1: 144, 2: 1}}
    out = []
    for (p, n), want in exact.items():
        got = exhaustive_corank_distribution(p, n).counts
        out.append(CheckResult(f"corank_exhaustive[p={p},N={n}]", got == want, f"{got}"))
    hist = sample_corank_distribution(3, 60, trials, seed)
    tv = hist.total_variation()
    out.append(CheckResult("corank_sampled[p=3,N=60]", tv < 0.015 + 1.0 / trials**0.5, f"T={trials} seed={seed} TV={tv:.4f}"))
    return out


def run_all(classgroup_x: int = 10000, lambda_x: int = 2000, primes: Sequence[int] = (3, 5), trials: int = 20000, seed: int = 0) -> list[CheckResult]:
    checks = []
    checks += check_densities()
    checks += check_identity()
    checks += check_euler()
    checks += check_class_numbers(classgroup_x)
    checks += check_sweep(lambda_x, primes)
    checks += check_matrices(trials, seed)
    return checks
