"""Iwasawa lambda-invariants of imaginary quadratic fields.

``lambda_p(K)`` is read off the mod-``p`` reduction of the ``chi``-component
of a twisted Stickelberger element, ``chi`` the quadratic character of ``K``.
At level ``n`` the group ring ``F_p[Z/p^n]`` is ``F_p[T]/(T^{p^n})`` with
``1 + T`` the image of the topological generator ``1 + p``; since ``mu = 0``
the series is a unit times ``T^lambda`` and ``lambda`` is the index of the
first nonzero coefficient.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels
from .arith import (
    Splitting,
    as_discriminant,
    kronecker,
    kronecker_table,
    require_odd_prime,
    sqrt_mod_prime_power,
)
from .classgroup import class_number

DEFAULT_START_LEVEL = 2
DEFAULT_MAX_LEVEL = 6
COEFF_CAP = 64


class Method(str, enum.Enum):
    STICKELBERGER = "stickelberger"
    INERT_TRIVIAL = "inert_trivial"
    UNSUPPORTED = "unsupported"


def teichmuller(a: int, p: int, m: int) -> int:
    """``omega(a) mod p^m``: the (p-1)-st root of unity congruent to ``a`` mod ``p``."""
    if a % p == 0:
        raise ValueError(f"{p} divides {a}")
    mod = p**m
    w = a % mod
    # each Frobenius step a -> a^p gains one p-adic digit
    for _ in range(m - 1):
        w = pow(w, p, mod)
    return w


def one_units_index(a: int, p: int, n: int) -> int:
    """The ``s`` in ``[0, p^n)`` with ``a / omega(a) = (1+p)^s (mod p^{n+1})``."""
    if a % p == 0:
        raise ValueError(f"{p} divides {a}")
    mod = p ** (n + 1)
    u = a * pow(teichmuller(a, p, n + 1), -1, mod) % mod
    gen_inv = pow(1 + p, -1, mod)
    s = 0
    pk = 1
    # (1+p)^{p^k} = 1 + p^{k+1} (mod p^{k+2}) fixes digit k of s
    step = gen_inv
    for k in range(n):
        digit = ((u - 1) // p ** (k + 1)) % p
        s += digit * pk
        u = u * pow(step, digit, mod) % mod
        step = pow(step, p, mod)
        pk *= p
    return s


@lru_cache(maxsize=32)
def _s_table(p: int, n: int) -> np.ndarray:
    mod = p ** (n + 1)
    out = np.full(mod, -1, dtype=np.int32)
    for a in range(1, mod):
        if a % p:
            out[a] = one_units_index(a, p, n)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _binomials_mod_p(p: int, rows: int, cols: int) -> np.ndarray:
    """``C(s, i) mod p`` for ``s < rows``, ``i < cols``."""
    out = np.zeros((rows, cols), dtype=np.int64)
    row = np.zeros(cols, dtype=np.int64)
    row[0] = 1
    for s in range(rows):
        out[s] = row
        nxt = row.copy()
        nxt[1:] += row[:-1]
        row = nxt % p
    out.setflags(write=False)
    return out


def valid_twist(d: int, p: int, c: int) -> bool:
    """``c`` is a unit away from ``pD`` and ``c - chi(c)`` is a unit mod ``p``."""
    if c < 2 or c % p == 0 or gcd(c, d) != 1:
        return False
    return (c * kronecker(d, c) - 1) % p != 0


def default_twist(d: int, p: int, skip: int = 0) -> int:
    """Smallest valid twist ``c >= 2`` (``skip`` passes over that many valid candidates)."""
    c = 2
    while True:
        if valid_twist(d, p, c):
            if skip == 0:
                return c
            skip -= 1
        c += 1


@dataclass(frozen=True)
class IwasawaSeriesModP:
    p: int
    level: int
    coeffs: tuple[int, ...]
    twist: int

    def readout(self) -> Optional[int]:
        """Index of the first nonzero coefficient, or ``None`` if all tracked coefficients vanish."""
        for i, x in enumerate(self.coeffs):
            if x:
                return i
        return None


def stickelberger_series(d, p: int, n: int, c: Optional[int] = None, cap: int = COEFF_CAP) -> IwasawaSeriesModP:
    """Level-``n`` series ``sum chi(a) floor(c a / F) (1+T)^{s_n(a)} mod (p, T^{p^n})``, ``F = |D| p^{n+1}``.

    Only the first ``min(p^n, cap)`` coefficients are returned.
    """
    d = int(as_discriminant(d))
    p = require_odd_prime(p)
    if n < 1:
        raise ValueError("level must be >= 1")
    if d % p == 0:
        raise ValueError(f"{p} ramifies in Q(sqrt({d}))")
    if c is None:
        c = default_twist(d, p)
    elif not valid_twist(d, p, c):
        raise ValueError(f"invalid twist c={c} for D={d}, p={p}")
    pn = p**n
    F = -d * p ** (n + 1)
    x = kernels.stickelberger_accumulate(kronecker_table(d), _s_table(p, n), F, c, p, pn)
    width = min(pn, cap)
    binom = _binomials_mod_p(p, pn, width)
    coeffs = (np.asarray(x, dtype=np.int64) @ binom) % p
    return IwasawaSeriesModP(p, n, tuple(int(v) for v in coeffs), c)


@dataclass(frozen=True)
class LambdaResult:
    lam: Optional[int]
    level_used: int
    stable: bool
    method: Method

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "level_used": self.level_used,
            "stable": self.stable,
            "method": self.method.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LambdaResult":
        return cls(obj["lambda"], obj["level_used"], obj["stable"], Method(obj["method"]))


def lambda_invariant(
    d,
    p: int,
    max_level: int = DEFAULT_MAX_LEVEL,
    h: Optional[int] = None,
    twist: Optional[int] = None,
    start_level: int = DEFAULT_START_LEVEL,
) -> LambdaResult:
    """``lambda_p`` of ``Q(sqrt(D))``.

    Inert or ramified ``p`` not dividing ``h`` give ``lambda = 0`` outright.
    Otherwise Stickelberger readouts are taken at levels ``n, n+1, ...`` until
    two consecutive ones agree and sit below ``p^{n-1}``.
    """
    d = int(as_discriminant(d))
    p = require_odd_prime(p)
    if h is None:
        h = class_number(d)
    k = kronecker(d, p)
    if k != 1 and h % p:
        return LambdaResult(0, 0, True, Method.INERT_TRIVIAL)
    if k == 0:
        return LambdaResult(None, 0, False, Method.UNSUPPORTED)
    if twist is None:
        twist = default_twist(d, p)
    n = max(1, start_level)
    prev = stickelberger_series(d, p, n, twist).readout()
    last = prev
    while n < max_level:
        cur = stickelberger_series(d, p, n + 1, twist).readout()
        if cur is not None:
            last = cur
        if prev is not None and cur == prev and prev < p ** (n - 1):
            return LambdaResult(prev, n + 1, True, Method.STICKELBERGER)
        prev = cur
        n += 1
    return LambdaResult(last, n, False, Method.STICKELBERGER)


def splitting_of(d: int, p: int) -> Splitting:
    k = kronecker(d, p)
    return Splitting.SPLIT if k == 1 else Splitting.INERT if k == -1 else Splitting.RAMIFIED


def _reduce_tracking(a: int, b: int, c: int) -> tuple[tuple[int, int, int], tuple[int, int, int, int]]:
    """Reduce ``(a, b, c)`` and return the reduced form with ``M`` such that ``f o M`` is it."""
    d = b * b - 4 * a * c
    m11, m12, m21, m22 = 1, 0, 0, 1
    while True:
        if not (-a < b <= a):
            k = (b + a - 1) // (2 * a)
            # x -> x - k y
            b -= 2 * a * k
            c = (b * b - d) // (4 * a)
            m12 -= k * m11
            m22 -= k * m21
        if a > c:
            # (x, y) -> (-y, x)
            a, b, c = c, -b, a
            m11, m12, m21, m22 = m12, -m11, m22, -m21
            continue
        if a == c and b < 0:
            b = -b
            m11, m12, m21, m22 = m12, -m11, m22, -m21
        return (a, b, c), (m11, m12, m21, m22)


def _generator_of_power(d: int, p: int, h: int) -> tuple[int, int]:
    """``(x, y)`` with ``x^2 - d y^2 = 4 p^h`` and ``(x + y sqrt d)/2`` generating a prime above ``p`` to the ``h``."""
    ph = p**h
    r = sqrt_mod_prime_power(d, p, h)
    if (r - d) % 2:
        r += ph
    A, B, C = ph, r, (r * r - d) // (4 * ph)
    # elements of the ideal [A, (-B + sqrt d)/2] have norm A * (A u^2 - B u v + C v^2)
    red, (m11, _, m21, _) = _reduce_tracking(A, -B, C)
    if red[0] != 1:
        raise ArithmeticError(f"prime power ideal of norm {p}^{h} is not principal")
    u, v = m11, m21
    if A * u * u - B * u * v + C * v * v != 1:
        raise ArithmeticError("representation of 1 failed")
    x, y = 2 * u * A - v * B, v
    if x * x - d * y * y != 4 * ph:
        raise ArithmeticError("norm check failed")
    return x, y


def gold_criterion(d, p: int) -> bool:
    """For ``p`` split and prime to ``h``: true iff ``lambda_p >= 2``.

    With ``(alpha) = pi^h``, the test is ``alpha^{p-1} = 1 mod pibar^2``. In the
    embedding into ``Z_p`` attached to ``pibar`` exactly one of ``alpha``,
    ``alpha-bar`` is a unit, so the congruence is evaluated on whichever image
    of ``(x + y sqrt d)/2`` is prime to ``p``.
    """
    d = int(as_discriminant(d))
    p = require_odd_prime(p)
    if kronecker(d, p) != 1:
        raise ValueError(f"{p} does not split in Q(sqrt({d}))")
    h = class_number(d)
    if h % p == 0:
        raise ValueError(f"{p} divides h = {h}")
    x, y = _generator_of_power(d, p, h)
    mod = p * p
    root = sqrt_mod_prime_power(d, p, 2)
    inv2 = pow(2, -1, mod)
    units = [((x + s * y * root) * inv2) % mod for s in (1, -1)]
    units = [u for u in units if u % p]
    if len(units) != 1:
        raise ArithmeticError("expected exactly one unit embedding")
    return pow(units[0], p - 1, mod) == 1


@dataclass(frozen=True)
class LambdaNormalForm:
    """Elementary torsion Lambda-module ``(+) Lambda/(p^{mu_i}) (+) Lambda/(f_j^{lambda_j})``.

    Polynomials are integer coefficient tuples, constant term first, taken
    modulo ``p^precision``.
    """

    p: int
    mu_exponents: tuple[int, ...] = ()
    torsion_factors: tuple[tuple[tuple[int, ...], int], ...] = ()
    precision: int = 8

    def __post_init__(self):
        if any(m < 1 for m in self.mu_exponents):
            raise ValueError("mu exponents must be positive")
        for poly, mult in self.torsion_factors:
            if mult < 1:
                raise ValueError("multiplicities must be positive")
            if not is_distinguished(poly, self.p, self.precision):
                raise ValueError(f"{poly} is not a distinguished polynomial")


def is_distinguished(poly: Sequence[int], p: int, precision: int = 8) -> bool:
    """Monic of degree >= 1 with every lower coefficient divisible by ``p``."""
    if len(poly) < 2:
        return False
    mod = p**precision
    if poly[-1] % mod != 1:
        return False
    return all(x % p == 0 for x in poly[:-1])


def normal_form_invariants(x: LambdaNormalForm) -> tuple[int, int, int]:
    """``(mu, lambda, g)``; each cyclic summand has its generator outside ``(p, T)`` times it, so ``g`` counts summands."""
    mu = sum(x.mu_exponents)
    lam = sum((len(poly) - 1) * mult for poly, mult in x.torsion_factors)
    g = len(x.mu_exponents) + len(x.torsion_factors)
    return mu, lam, g
