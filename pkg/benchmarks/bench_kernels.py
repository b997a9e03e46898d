"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each row reports the best of N runs for both backends and the speedup.
"""

import argparse
import time

import numpy as np

from iwastat import _pure
from iwastat.arith import fundamental_mask, kronecker_table
from iwastat.iwasawa import _s_table, default_twist

try:
    from iwastat import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    lo, hi = 1_000_001, 1_004_096
    mask = fundamental_mask(lo, hi)
    yield "block_class_groups |D| in 1e6+[0,4096)", lambda k: k.block_class_groups(lo, hi, mask)

    d = -1_000_003
    yield "class_group_relations D=-1000003", lambda k: k.class_group_relations(d)

    d, p, n = -1999, 3, 5
    args = (kronecker_table(d), _s_table(p, n), -d * p ** (n + 1), default_twist(d, p), p, p**n)
    yield "stickelberger_accumulate D=-1999 p=3 n=5", lambda k: k.stickelberger_accumulate(*args)

    mats = np.random.default_rng(0).integers(0, 3, size=(2048, 60, 60), dtype=np.uint8)
    yield "corank_batch 2048 x 60x60 mod 3", lambda k: k.corank_batch(mats, 3)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return
    print(f"{'kernel':44s} {'compiled':>10s} {'pure':>10s} {'speedup':>8s}")
    for name, fn in cases():
        tc = best_of(lambda: fn(_kernels), args.repeat)
        tp = best_of(lambda: fn(_pure), args.repeat)
        print(f"{name:44s} {tc * 1e3:8.1f}ms {tp * 1e3:8.1f}ms {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
