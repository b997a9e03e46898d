"""Integer primitives: Kronecker symbol, fundamental discriminants, splitting.

Everything downstream orders imaginary quadratic fields by ``|D|`` and talks
about them through a negative fundamental discriminant ``D``.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from math import isqrt

import numpy as np

# Forms are composed in signed 64-bit arithmetic by the compiled kernels;
# b^2 with b < 2a <= 2|D|/3 stays below 2^63 for |D| < 2^31.
MAX_ABS_DISCRIMINANT = 2**31 - 1


class Splitting(str, enum.Enum):
    SPLIT = "split"
    INERT = "inert"
    RAMIFIED = "ramified"


def check_range(d: int) -> None:
    if abs(d) > MAX_ABS_DISCRIMINANT:
        raise OverflowError(
            f"|D| = {abs(d)} exceeds the supported bound {MAX_ABS_DISCRIMINANT}"
        )


def is_squarefree(n: int) -> bool:
    n = abs(n)
    if n == 0:
        return False
    if n % 4 == 0:
        return False
    if n % 2 == 0:
        n //= 2
    q = 3
    while q * q <= n:
        if n % q == 0:
            n //= q
            if n % q == 0:
                return False
        q += 2
    return True


def is_fundamental(d: int) -> bool:
    """True iff ``d`` is the discriminant of a quadratic field (either sign)."""
    if d in (0, 1):
        return False
    r = d % 4
    if r == 1:
        return is_squarefree(d)
    if r == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


class FundamentalDiscriminant(int):
    """A negative fundamental discriminant; behaves as a plain ``int``."""

    def __new__(cls, value: int):
        value = int(value)
        if value >= 0 or not is_fundamental(value):
            raise ValueError(f"{value} is not a negative fundamental discriminant")
        return super().__new__(cls, value)

    @property
    def value(self) -> int:
        return int(self)

    @property
    def abs(self) -> int:
        return -int(self)

    def __repr__(self) -> str:
        return f"FundamentalDiscriminant({int(self)})"


def as_discriminant(d) -> FundamentalDiscriminant:
    if isinstance(d, FundamentalDiscriminant):
        return d
    return FundamentalDiscriminant(d)


def squarefree_mask(lo: int, hi: int) -> np.ndarray:
    """Boolean array ``m`` with ``m[i]`` true iff ``lo + i`` is squarefree."""
    lo = max(lo, 1)
    mask = np.ones(hi - lo + 1, dtype=bool)
    for q in _primes_upto(isqrt(hi)):
        q2 = q * q
        start = (-lo) % q2
        mask[start::q2] = False
    return mask


def fundamental_mask(lo: int, hi: int) -> np.ndarray:
    """Boolean array over ``|D|`` in ``[lo, hi]`` marking negative fundamental D.

    ``-m`` is fundamental iff ``m = 3 (mod 4)`` is squarefree, or ``m = 4k``
    with ``k = 1, 2 (mod 4)`` squarefree.
    """
    if lo < 1:
        lo = 1
    if hi < lo:
        return np.zeros(0, dtype=bool)
    n = np.arange(lo, hi + 1, dtype=np.int64)
    sf = squarefree_mask(lo, hi)
    odd_case = (n % 4 == 3) & sf
    quarter_lo = (lo + 3) // 4
    quarter_hi = hi // 4
    even_case = np.zeros_like(odd_case)
    if quarter_hi >= max(quarter_lo, 1):
        quarter_lo = max(quarter_lo, 1)
        k = np.arange(quarter_lo, quarter_hi + 1, dtype=np.int64)
        ok = squarefree_mask(quarter_lo, quarter_hi) & ((k % 4 == 1) | (k % 4 == 2))
        even_case[4 * k - lo] = ok
    return odd_case | even_case


def enumerate_fundamental(x: float) -> list[FundamentalDiscriminant]:
    """All negative fundamental discriminants with ``|D| <= x``, ascending in ``|D|``."""
    if x < 3:
        raise ValueError("x must be at least 3")
    hi = int(x)
    idx = np.flatnonzero(fundamental_mask(1, hi)) + 1
    return [FundamentalDiscriminant(-int(m)) for m in idx]


def count_fundamental(x: float) -> int:
    return int(fundamental_mask(1, int(x)).sum())


_KRONECKER_2 = (0, 1, 0, -1, 0, -1, 0, 1)


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol ``(d / n)`` for arbitrary integers."""
    d, n = int(d), int(n)
    if n == 0:
        return 1 if abs(d) == 1 else 0
    if d % 2 == 0 and n % 2 == 0:
        return 0
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    k = _KRONECKER_2[d & 7] if v % 2 else 1
    if n < 0:
        n = -n
        if d < 0:
            k = -k
    # n is now odd and positive: Jacobi symbol with reciprocity
    a = d % n
    while a:
        v = 0
        while a % 2 == 0:
            a //= 2
            v += 1
        if v % 2:
            k *= _KRONECKER_2[n & 7]
        if a & n & 2:
            k = -k
        a, n = n % a, a
    return k if n == 1 else 0


def factorize(n: int) -> dict[int, int]:
    n = abs(n)
    out: dict[int, int] = {}
    q = 2
    while q * q <= n:
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
        q += 1 if q == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def kronecker_table(d: int) -> np.ndarray:
    """``chi[a] = (d / a)`` for ``0 <= a < |d|``, built from the prime-discriminant factors of ``d``.

    Independent of :func:`kronecker`; used by the analytic class number oracle
    and the Stickelberger sums.
    """
    d = int(as_discriminant(d))
    m = -d
    a = np.arange(m, dtype=np.int64)
    chi = np.ones(m, dtype=np.int8)
    rest = d
    for q in factorize(m):
        if q == 2:
            continue
        qstar = q if q % 4 == 1 else -q
        rest //= qstar
        leg = np.full(q, -1, dtype=np.int8)
        leg[0] = 0
        leg[(np.arange(1, q, dtype=np.int64) ** 2) % q] = 1
        chi *= leg[a % q]
    if rest == -4:
        chi *= np.where(a % 2 == 0, 0, np.where(a % 4 == 1, 1, -1)).astype(np.int8)
    elif rest == 8:
        chi *= np.where(a % 2 == 0, 0, np.where((a % 8 == 1) | (a % 8 == 7), 1, -1)).astype(np.int8)
    elif rest == -8:
        chi *= np.where(a % 2 == 0, 0, np.where((a % 8 == 1) | (a % 8 == 3), 1, -1)).astype(np.int8)
    elif rest != 1:
        raise AssertionError(f"unexpected 2-part {rest} for {d}")
    return chi


def splitting_type(d: int, p: int) -> Splitting:
    if p < 3 or p % 2 == 0:
        raise ValueError("p must be an odd prime")
    k = kronecker(d, p)
    if k == 1:
        return Splitting.SPLIT
    if k == -1:
        return Splitting.INERT
    return Splitting.RAMIFIED


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    q = 3
    while q * q <= n:
        if n % q == 0:
            return False
        q += 2
    return True


def require_odd_prime(p: int) -> int:
    p = int(p)
    if p < 3 or not is_prime(p):
        raise ValueError(f"{p} is not an odd prime")
    return p


@lru_cache(maxsize=64)
def _primes_upto_cached(n: int) -> tuple[int, ...]:
    if n < 2:
        return ()
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for q in range(2, isqrt(n) + 1):
        if sieve[q]:
            sieve[q * q :: q] = False
    return tuple(int(q) for q in np.flatnonzero(sieve))


def _primes_upto(n: int) -> tuple[int, ...]:
    return _primes_upto_cached(n)


def sqrt_mod_prime_power(d: int, p: int, k: int) -> int:
    """A square root of ``d`` modulo ``p**k`` (``p`` odd, ``d`` a nonzero square mod ``p``)."""
    r = next(x for x in range(1, p) if (x * x - d) % p == 0)
    mod = p
    for _ in range(1, k):
        mod *= p
        # Newton step; 2r is a unit because p is odd
        r = (r - (r * r - d) * pow(2 * r, -1, mod)) % mod
    return r
