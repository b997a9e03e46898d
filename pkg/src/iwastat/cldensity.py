"""Cohen-Lenstra densities and the lambda lower bound.

Every value is returned as a :class:`DensityValue` carrying a rigorous bound
on truncation plus floating-point error.  Pass ``exact=True`` to evaluate the
finite part in rational arithmetic; the result's ``value`` is then a
``Fraction`` and the bound covers truncation only.

Truncation of ``P(p) = prod_{k>=1} (1 - p^{-k})``: with ``x_k = p^{-k}`` and
``sum_{k>N} x_k = p^{-N}/(p-1) =: t <= 1/2``,

    1 >= prod_{k>N} (1 - x_k) >= 1 - t,

so ``0 <= P_N - P <= P_N * t <= t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import mpmath

from .arith import require_odd_prime

DEFAULT_TOL = 1e-15
_EPS = 2.0**-52

Number = Union[float, Fraction]


@dataclass(frozen=True)
class DensityValue:
    value: Number
    error_bound: float

    def __post_init__(self):
        if not (0 <= self.value <= 1):
            raise ValueError(f"density {self.value} outside [0, 1]")
        if self.error_bound < 0:
            raise ValueError("negative error bound")

    def __float__(self) -> float:
        return float(self.value)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return abs(float(self.value) - x) <= self.error_bound + slack


def _tail(p: int, n: int) -> float:
    return float(Fraction(1, p**n * (p - 1)))


def truncation_level(p: int, tol: float = DEFAULT_TOL) -> int:
    """Smallest ``N`` with ``p^{-N}/(p-1) <= tol/2``."""
    n = 1
    while _tail(p, n) > tol / 2:
        n += 1
    return n


def pochhammer(p: int, tol: float = DEFAULT_TOL, *, exact: bool = False, terms: int | None = None) -> DensityValue:
    """``prod_{k>=1} (1 - p^{-k})``.

    ``terms`` forces the truncation point, e.g. ``terms=1`` gives ``1 - 1/p``
    with its tail bound.
    """
    p = require_odd_prime(p)
    n = truncation_level(p, tol) if terms is None else terms
    tail = _tail(p, n)
    if exact:
        v = Fraction(1)
        for k in range(1, n + 1):
            v *= 1 - Fraction(1, p**k)
        return DensityValue(v, tail)
    v = 1.0
    for k in range(1, n + 1):
        v *= 1.0 - p**-k
    return DensityValue(v, tail + 2 * n * _EPS)


def euler_expansion_coeffs(n: int) -> list[int]:
    """Coefficients ``c_0..c_n`` of ``prod_{i>=1} (1 - q^i)`` by truncated multiplication."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    poly = [0] * (n + 1)
    poly[0] = 1
    for i in range(1, n + 1):
        # multiply by (1 - q^i) in place, high degrees first
        for k in range(n, i - 1, -1):
            poly[k] -= poly[k - i]
    return poly


def _rank_weight(p: int, j: int, exact: bool) -> Number:
    """``p^{-j^2} prod_{k<=j} (1 - p^{-k})^{-2}``."""
    if exact:
        w = Fraction(1, p ** (j * j))
        for k in range(1, j + 1):
            w /= (1 - Fraction(1, p**k)) ** 2
        return w
    w = float(p) ** -(j * j)
    for k in range(1, j + 1):
        w /= (1.0 - p**-k) ** 2
    return w


def density_rank_exact(p: int, n: int, tol: float = DEFAULT_TOL, *, exact: bool = False) -> DensityValue:
    """Predicted density of fields with ``r_p = n``."""
    p = require_odd_prime(p)
    if n < 0:
        raise ValueError("n must be >= 0")
    poch = pochhammer(p, tol, exact=exact)
    w = _rank_weight(p, n, exact)
    err = poch.error_bound * float(w)
    if not exact:
        err += 4 * (n + 1) * _EPS * float(w)
    return DensityValue(poch.value * w, err)


def density_rank_ge_1(p: int, tol: float = DEFAULT_TOL, *, exact: bool = False) -> DensityValue:
    poch = pochhammer(p, tol, exact=exact)
    return DensityValue(1 - poch.value, poch.error_bound + (0 if exact else _EPS))


def density_rank_ge(p: int, n: int, tol: float = DEFAULT_TOL, *, exact: bool = False) -> DensityValue:
    """Predicted density of fields with ``r_p >= n``: ``1 - P(p) (1 + sum_{j<n} w_j)``."""
    p = require_odd_prime(p)
    if n < 1:
        raise ValueError("n must be >= 1")
    poch = pochhammer(p, tol, exact=exact)
    bracket: Number = Fraction(1) if exact else 1.0
    for j in range(1, n):
        bracket += _rank_weight(p, j, exact)
    value = 1 - poch.value * bracket
    err = poch.error_bound * float(bracket)
    if not exact:
        err += 4 * (n + 1) * _EPS * float(bracket) + _EPS
    # rounding can push a tiny positive value below 0
    if not exact and value < 0:
        value = 0.0
    return DensityValue(value, err)


def lambda_lower_bound(p: int, n: int, tol: float = DEFAULT_TOL, *, exact: bool = False) -> DensityValue:
    """Lower bound for the lower density of ``{K : lambda_p(K) >= n}``.

    The bound is the predicted density of ``r_p >= n``, because
    ``lambda_p >= r_p`` for every imaginary quadratic field.
    """
    return density_rank_ge(p, n, tol, exact=exact)


def verify_sum_product_identity(q, n: int) -> float:
    """``|LHS_n - RHS|`` for ``1 + sum_{j>=1} q^{j^2} / prod_{k<=j} (1-q^k)^2 = prod_{i>=1} (1-q^i)^{-1}``.

    ``LHS_n`` stops the sum at ``j = n``; the product is evaluated with a
    working precision and truncation fine enough that the residual reflects
    only the truncation of the left side.
    """
    q = Fraction(q)
    if not (0 < q < 1):
        raise ValueError("need 0 < q < 1")
    if n < 1:
        raise ValueError("need n >= 1")
    # LHS_n misses about q^{(n+1)^2}; resolve well below that
    digits = int((n + 2) ** 2 * math.log10(q.denominator / q.numerator)) + 30
    with mpmath.workdps(digits):
        qq = mpmath.mpf(q.numerator) / q.denominator
        lhs = mpmath.mpf(1)
        denom = mpmath.mpf(1)
        for j in range(1, n + 1):
            denom *= (1 - qq**j) ** 2
            lhs += qq ** (j * j) / denom
        rhs = mpmath.mpf(1)
        eps = mpmath.mpf(10) ** (-digits + 5)
        i = 1
        # tail of sum q^i below eps bounds the product truncation
        while qq**i / (1 - qq) > eps:
            rhs /= 1 - qq**i
            i += 1
        return float(abs(lhs - rhs))


def aut_order(p: int, g) -> int:
    """``|Aut(B)|`` for a finite abelian ``p``-group ``B`` (Hillar-Rhea form of Hall's count)."""
    p = require_odd_prime(p)
    divisors: Sequence[int] = getattr(g, "divisors", g)
    exps = []
    for d in divisors:
        e = 0
        while d % p == 0:
            d //= p
            e += 1
        if d != 1 or e == 0:
            raise ValueError(f"{tuple(divisors)} is not a {p}-group")
        exps.append(e)
    exps.sort()
    r = len(exps)
    out = 1
    for k in range(1, r + 1):
        ek = exps[k - 1]
        dk = max(i for i in range(1, r + 1) if exps[i - 1] == ek)
        ck = min(i for i in range(1, r + 1) if exps[i - 1] == ek)
        out *= p**dk - p ** (k - 1)
        out *= (p**ek) ** (r - dk)
        out *= (p ** (ek - 1)) ** (r - ck + 1)
    return out


def cl_measure(p: int, g, tol: float = DEFAULT_TOL, *, exact: bool = False) -> DensityValue:
    """Predicted density of fields whose ``p``-class group is ``g``."""
    n_aut = aut_order(p, g)
    poch = pochhammer(p, tol, exact=exact)
    if exact:
        return DensityValue(poch.value / n_aut, poch.error_bound / n_aut)
    return DensityValue(poch.value / n_aut, (poch.error_bound + _EPS) / n_aut)
