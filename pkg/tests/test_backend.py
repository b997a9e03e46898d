"""The compiled kernels and the pure-Python fallback agree."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iwastat import _pure
from iwastat.arith import enumerate_fundamental, fundamental_mask, kronecker_table
from iwastat.iwasawa import _s_table, default_twist

compiled = pytest.importorskip("iwastat._kernels")

FIELDS = [int(d) for d in enumerate_fundamental(20000)]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FIELDS))
def test_reduced_forms_and_relations(d):
    assert list(compiled.reduced_forms(d)) == list(_pure.reduced_forms(d))
    h1, rows1 = compiled.class_group_relations(d)
    h2, rows2 = _pure.class_group_relations(d)
    assert h1 == h2 and [list(r) for r in rows1] == [list(r) for r in rows2]


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 200000), st.integers(0, 600))
def test_block_class_groups(lo, width):
    hi = lo + width
    mask = fundamental_mask(lo, hi)
    a = [(m, h, [list(r) for r in rows]) for m, h, rows in compiled.block_class_groups(lo, hi, mask)]
    b = [(m, h, [list(r) for r in rows]) for m, h, rows in _pure.block_class_groups(lo, hi, mask)]
    assert a == b


@pytest.mark.parametrize("d, p, n", [(-23, 3, 2), (-47, 3, 3), (-11, 5, 2), (-1003, 7, 1)])
def test_stickelberger_accumulate(d, p, n):
    args = (kronecker_table(d), _s_table(p, n), -d * p ** (n + 1), default_twist(d, p), p, p**n)
    assert np.array_equal(np.asarray(compiled.stickelberger_accumulate(*args)), np.asarray(_pure.stickelberger_accumulate(*args)))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([3, 5, 7]), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_corank_batch(p, n, seed):
    mats = np.random.default_rng(seed).integers(0, p, size=(16, n, n), dtype=np.uint8)
    assert np.array_equal(np.asarray(compiled.corank_batch(mats, p)), np.asarray(_pure.corank_batch(mats, p)))


def test_environment_forces_pure_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, IWASTAT_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "import iwastat; print(iwastat.BACKEND, iwastat.class_number(-3299))"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split() == ["pure", "27"]
