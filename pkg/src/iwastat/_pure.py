"""Pure-Python kernels, used when the compiled extension is unavailable.

Same signatures and return values as ``_kernels.pyx``; ``IWASTAT_PURE=1``
forces this backend.
"""

from __future__ import annotations

from math import gcd, isqrt

import numpy as np


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def reduce_form(a: int, b: int, c: int) -> tuple[int, int, int]:
    d = b * b - 4 * a * c
    while True:
        if not (-a < b <= a):
            # b -> b - 2ak lands in (-a, a]
            k = (b + a - 1) // (2 * a)
            b -= 2 * a * k
            c = (b * b - d) // (4 * a)
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return a, b, c


def compose(f: tuple[int, int, int], g: tuple[int, int, int]) -> tuple[int, int, int]:
    """Dirichlet composition of two primitive forms of equal discriminant, reduced."""
    a1, b1, c1 = f
    a2, b2, c2 = g
    if a1 > a2:
        a1, b1, c1, a2, b2, c2 = a2, b2, c2, a1, b1, c1
    s = (b1 + b2) // 2
    n = b2 - s
    if a2 % a1 == 0:
        y1 = 0
        d = a1
    else:
        d, u, _ = _xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, x2, v = _xgcd(s, d)
        y2 = -v
    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    disc = b1 * b1 - 4 * a1 * c1
    c3 = (b3 * b3 - disc) // (4 * a3)
    return reduce_form(a3, b3, c3)


def reduced_forms(d: int) -> list[tuple[int, int, int]]:
    """Reduced forms of discriminant ``d < 0`` ordered by ``(a, b)``."""
    m = -d
    out = []
    for a in range(1, isqrt(m // 3) + 1):
        four_a = 4 * a
        for b in range(-a + 1, a + 1):
            num = b * b + m
            if num % four_a:
                continue
            c = num // four_a
            if c < a or (c == a and b < 0):
                continue
            if gcd(gcd(a, b), c) != 1:
                continue
            out.append((a, b, c))
    return out


def _relations(d: int, forms: list[tuple[int, int, int]]) -> list[list[int]]:
    """Presentation of the class group as ``Z^k / rows``.

    Generators are taken greedily in form order; row ``j`` reads
    ``e_j * g_j - sum_{i<j} v_i g_i = 0`` where ``g_j^{e_j}`` is the first
    power of ``g_j`` falling in the subgroup spanned by earlier generators.
    """
    h = len(forms)
    index = {f[:2]: i for i, f in enumerate(forms)}
    b0 = d & 1
    ident = (1, b0, (b0 - d) // 4)
    vec: dict[int, list[int]] = {index[ident[:2]]: []}
    members = [index[ident[:2]]]
    rows: list[list[int]] = []
    for gi in range(h):
        if len(members) == h:
            break
        if gi in vec:
            continue
        g = forms[gi]
        k = len(rows)
        cur = g
        e = 1
        while index[cur[:2]] not in vec:
            cur = compose(cur, g)
            e += 1
        rel = vec[index[cur[:2]]]
        rows.append([-x for x in rel] + [0] * (k - len(rel)) + [e])
        old = list(members)
        pw = g
        for i in range(1, e):
            for x in old:
                y = index[compose(pw, forms[x])[:2]]
                vx = vec[x]
                vec[y] = vx + [0] * (k - len(vx)) + [i]
                members.append(y)
            pw = compose(pw, g)
    return rows


def class_group_relations(d: int) -> tuple[int, list[list[int]]]:
    forms = reduced_forms(d)
    return len(forms), _relations(d, forms)


def block_class_groups(lo: int, hi: int, mask: np.ndarray) -> list[tuple[int, int, list[list[int]]]]:
    out = []
    for i in np.flatnonzero(mask):
        m = lo + int(i)
        h, rows = class_group_relations(-m)
        out.append((m, h, rows))
    return out


def stickelberger_accumulate(
    chi: np.ndarray, s_table: np.ndarray, F: int, c: int, p: int, pn: int
) -> np.ndarray:
    """Group-ring coefficients ``x_s = sum chi(a) floor(c a / F)`` over ``a`` with ``s(a) = s``, mod ``p``."""
    m = len(chi)
    out = np.zeros(pn, dtype=np.int64)
    step = 1 << 22
    for start in range(1, F, step):
        a = np.arange(start, min(start + step, F), dtype=np.int64)
        ch = chi[a % m].astype(np.int64)
        s = s_table[a % len(s_table)]
        keep = (ch != 0) & (s >= 0)
        w = (c * a[keep]) // F
        out += np.bincount(s[keep], weights=(ch[keep] * w), minlength=pn).astype(np.int64)
    return out % p


def _rank_mod_p(m: np.ndarray, p: int) -> int:
    m = m.astype(np.int64) % p
    rows, cols = m.shape
    rank = 0
    for col in range(cols):
        piv = np.flatnonzero(m[rank:, col])
        if piv.size == 0:
            continue
        r = rank + int(piv[0])
        if r != rank:
            m[[rank, r]] = m[[r, rank]]
        inv = pow(int(m[rank, col]), -1, p)
        m[rank] = (m[rank] * inv) % p
        below = m[rank + 1 :, col].copy()
        if below.any():
            m[rank + 1 :] = (m[rank + 1 :] - np.outer(below, m[rank])) % p
        rank += 1
        if rank == rows:
            break
    return rank


def corank_batch(mats: np.ndarray, p: int) -> np.ndarray:
    n = mats.shape[1]
    return np.array([n - _rank_mod_p(mats[t], p) for t in range(mats.shape[0])], dtype=np.int32)
