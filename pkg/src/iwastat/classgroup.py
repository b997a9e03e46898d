"""Class groups of imaginary quadratic fields through reduced binary quadratic forms."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import NamedTuple, Sequence

import numpy as np

from . import _pure
from ._backend import kernels
from .arith import as_discriminant, check_range, factorize, kronecker_table


class QuadraticForm(NamedTuple):
    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_reduced(self) -> bool:
        a, b, c = self
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def reduced(self) -> "QuadraticForm":
        return QuadraticForm(*_pure.reduce_form(*self))

    def inverse(self) -> "QuadraticForm":
        return QuadraticForm(self.a, -self.b, self.c).reduced()

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c})"


def principal_form(d: int) -> QuadraticForm:
    b0 = d & 1
    return QuadraticForm(1, b0, (b0 - d) // 4)


@dataclass(frozen=True)
class AbelianGroupStructure:
    """Finite abelian group ``Z/d_1 x ... x Z/d_r`` with ``d_1 | d_2 | ... | d_r``."""

    divisors: tuple[int, ...] = ()

    def __post_init__(self):
        divs = tuple(int(x) for x in self.divisors)
        object.__setattr__(self, "divisors", divs)
        if any(x < 2 for x in divs):
            raise ValueError(f"invariant factors must be >= 2: {divs}")
        if any(divs[i + 1] % divs[i] for i in range(len(divs) - 1)):
            raise ValueError(f"not a divisibility chain: {divs}")

    @property
    def order(self) -> int:
        n = 1
        for x in self.divisors:
            n *= x
        return n

    def p_rank(self, p: int) -> int:
        return p_rank(self, p)

    def m_rank(self, m: int) -> int:
        return sum(1 for x in self.divisors if x % m == 0)

    def sylow(self, p: int) -> "AbelianGroupStructure":
        """The ``p``-primary part, as a structure of its own."""
        parts = []
        for x in self.divisors:
            q = 1
            while x % p == 0:
                x //= p
                q *= p
            if q > 1:
                parts.append(q)
        return AbelianGroupStructure(tuple(parts))

    def is_p_group(self, p: int) -> bool:
        return all(set(factorize(x)) == {p} for x in self.divisors)

    def __str__(self) -> str:
        return "[" + ",".join(str(x) for x in self.divisors) + "]"


def elementary_divisors(rows: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Invariant factors (> 1) of ``Z^k / rowspace(rows)`` for a full-rank square relation matrix."""
    k = len(rows)
    m = [list(r) + [0] * (k - len(r)) for r in rows]
    diag = []
    for t in range(k):
        while True:
            # pivot: smallest nonzero entry in the remaining block
            best = None
            for i in range(t, k):
                for j in range(t, k):
                    if m[i][j] and (best is None or abs(m[i][j]) < abs(m[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                raise ValueError("relation matrix is singular")
            i, j = best
            m[t], m[i] = m[i], m[t]
            for row in m:
                row[t], row[j] = row[j], row[t]
            piv = m[t][t]
            dirty = False
            for i in range(t + 1, k):
                q = m[i][t] // piv
                if q:
                    m[i] = [x - q * y for x, y in zip(m[i], m[t])]
                if m[i][t]:
                    dirty = True
            for j in range(t + 1, k):
                q = m[t][j] // piv
                if q:
                    for row in m:
                        row[j] -= q * row[t]
                if m[t][j]:
                    dirty = True
            if dirty:
                continue
            bad = next(
                ((i, j) for i in range(t + 1, k) for j in range(t + 1, k) if m[i][j] % piv),
                None,
            )
            if bad is None:
                break
            # fold a row carrying a non-multiple of the pivot into row t
            m[t] = [x + y for x, y in zip(m[t], m[bad[0]])]
        diag.append(abs(m[t][t]))
    return tuple(sorted(x for x in diag if x > 1))


def reduced_forms(d) -> list[QuadraticForm]:
    """One reduced form per ideal class, ordered by ``(a, b)``."""
    d = as_discriminant(d)
    check_range(d)
    return [QuadraticForm(*f) for f in kernels.reduced_forms(int(d))]


def class_number(d) -> int:
    d = as_discriminant(d)
    check_range(d)
    return len(kernels.reduced_forms(int(d)))


def class_number_analytic(d) -> int:
    """``h = -sum_{a<|D|} a (D/a) / |D|`` in exact integer arithmetic (``D < -4``)."""
    d = as_discriminant(d)
    if d in (-3, -4):
        return 1
    m = -int(d)
    chi = kronecker_table(int(d)).astype(np.int64)
    total = int(np.dot(np.arange(m, dtype=np.int64), chi)) if m < 3_000_000 else sum(
        int(x) * int(y) for x, y in zip(range(m), chi)
    )
    if total % m:
        raise ArithmeticError(f"character sum {total} not divisible by {m}")
    return abs(total) // m


def compose(f, g, d=None) -> QuadraticForm:
    f = QuadraticForm(*f)
    g = QuadraticForm(*g)
    if f.discriminant != g.discriminant:
        raise ValueError(f"discriminants differ: {f.discriminant} vs {g.discriminant}")
    if d is not None and f.discriminant != d:
        raise ValueError(f"forms have discriminant {f.discriminant}, expected {d}")
    if gcd(gcd(f.a, f.b), f.c) != 1 or gcd(gcd(g.a, g.b), g.c) != 1:
        raise ValueError("forms must be primitive")
    return QuadraticForm(*_pure.compose(tuple(f), tuple(g)))


def power(f, e: int) -> QuadraticForm:
    f = QuadraticForm(*f)
    result = principal_form(f.discriminant)
    base = f.reduced()
    while e:
        if e & 1:
            result = compose(result, base)
        base = compose(base, base)
        e >>= 1
    return result


def group_structure(d) -> AbelianGroupStructure:
    d = as_discriminant(d)
    check_range(d)
    h, rows = kernels.class_group_relations(int(d))
    g = AbelianGroupStructure(elementary_divisors(rows))
    if g.order != h:
        raise ArithmeticError(f"structure {g} has order {g.order}, expected h={h}")
    return g


def p_rank(g: AbelianGroupStructure, p: int) -> int:
    return sum(1 for x in g.divisors if x % p == 0)


def contains_power(g: AbelianGroupStructure, m: int, n: int) -> bool:
    """True iff ``(Z/m)^n`` embeds in ``g``, i.e. at least ``n`` invariant factors are divisible by ``m``."""
    if m < 2 or n < 1:
        raise ValueError("need m >= 2 and n >= 1")
    return g.m_rank(m) >= n
