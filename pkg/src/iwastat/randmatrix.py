"""Coranks of uniform random square matrices over ``F_p``.

The ``p``-rank of the cokernel of a Haar-random ``N x N`` matrix over ``Z_p``
equals the corank of its reduction mod ``p``; as ``N`` grows its law tends to
the Cohen-Lenstra rank distribution.

Trial ``t`` draws its matrix from ``numpy.random.Philox`` keyed by ``seed``
with 256-bit counter ``(0, t, 0, 0)``: every trial owns a disjoint counter
range, so a histogram depends only on ``(p, N, T, seed)`` and never on how
trials are split between workers.
"""

from __future__ import annotations

import csv
import io
import itertools
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .arith import require_odd_prime
from .cldensity import density_rank_exact

BATCH = 2048


@dataclass(frozen=True)
class RankHistogram:
    p: int
    matrix_size: int
    trials: int
    counts: dict[int, int]
    seed: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.trials:
            raise ValueError("counts do not sum to trials")
        if any(not 0 <= k <= self.matrix_size for k in self.counts):
            raise ValueError("corank out of range")

    def empirical(self, corank: int) -> float:
        return self.counts.get(corank, 0) / self.trials

    def predicted(self, corank: int) -> float:
        return float(density_rank_exact(self.p, corank).value)

    def total_variation(self) -> float:
        """Distance to the limiting rank law over coranks ``0..N`` plus the tail mass beyond ``N``."""
        n = self.matrix_size
        tv = sum(abs(self.empirical(k) - self.predicted(k)) for k in range(n + 1))
        tail = 1.0 - sum(self.predicted(k) for k in range(n + 1))
        return 0.5 * (tv + max(tail, 0.0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["corank", "count", "empirical", "predicted", "abs_error"])
        for k in range(self.matrix_size + 1):
            emp = self.empirical(k)
            pred = self.predicted(k)
            w.writerow([k, self.counts.get(k, 0), f"{emp:.10g}", f"{pred:.10g}", f"{abs(emp - pred):.10g}"])
        return buf.getvalue()


def trial_matrix(p: int, n: int, seed: int, t: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, t, 0, 0]))
    return gen.integers(0, p, size=(n, n), dtype=np.uint8)


def _count_range(p: int, n: int, seed: int, start: int, stop: int) -> Counter:
    counts: Counter = Counter()
    for lo in range(start, stop, BATCH):
        hi = min(lo + BATCH, stop)
        mats = np.stack([trial_matrix(p, n, seed, t) for t in range(lo, hi)])
        counts.update(int(c) for c in kernels.corank_batch(mats, p))
    return counts


def sample_corank_distribution(p: int, n: int, trials: int, seed: int, workers: int = 1) -> RankHistogram:
    p = require_odd_prime(p)
    if n < 1 or trials < 1:
        raise ValueError("need N >= 1 and T >= 1")
    if workers <= 1:
        counts = _count_range(p, n, seed, 0, trials)
    else:
        step = -(-trials // workers)
        ranges = [(s, min(s + step, trials)) for s in range(0, trials, step)]
        counts = Counter()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_count_range, p, n, seed, a, b) for a, b in ranges]
            for f in futs:
                counts.update(f.result())
    return RankHistogram(p, n, trials, dict(sorted(counts.items())), seed)


def exhaustive_corank_distribution(p: int, n: int) -> RankHistogram:
    """Every one of the ``p^{N^2}`` matrices once (feasible for tiny ``N``)."""
    p = require_odd_prime(p)
    total = p ** (n * n)
    if total > 10**7:
        raise ValueError("too many matrices to enumerate")
    entries = np.array(list(itertools.product(range(p), repeat=n * n)), dtype=np.uint8)
    coranks = kernels.corank_batch(entries.reshape(total, n, n), p)
    counts = Counter(int(c) for c in coranks)
    return RankHistogram(p, n, total, dict(sorted(counts.items())), seed=-1)
