# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Mirrors ``_pure.py`` value for value."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free, calloc
from libc.string cimport memset
from libc.stdint cimport int64_t, uint64_t, int32_t, int8_t, uint8_t

cnp.import_array()

cdef enum:
    KMAX = 40


cdef inline int64_t fdiv(int64_t a, int64_t b) noexcept nogil:
    # floor division for b > 0
    cdef int64_t q = a / b
    if (a % b != 0) and (a < 0):
        q -= 1
    return q


cdef inline int64_t fmod(int64_t a, int64_t b) noexcept nogil:
    cdef int64_t r = a % b
    if r < 0:
        r += b
    return r


cdef inline int64_t xgcd(int64_t a, int64_t b, int64_t *x, int64_t *y) noexcept nogil:
    cdef int64_t x0 = 1, x1 = 0, y0 = 0, y1 = 1, q, t
    while b != 0:
        q = fdiv(a, b) if b > 0 else -fdiv(a, -b)
        t = a - q * b
        a = b
        b = t
        t = x0 - q * x1
        x0 = x1
        x1 = t
        t = y0 - q * y1
        y0 = y1
        y1 = t
    x[0] = x0
    y[0] = y0
    return a


cdef inline void reduce_form(int64_t *f, int64_t d) noexcept nogil:
    cdef int64_t a = f[0], b = f[1], c = f[2], k, t
    while True:
        if not (-a < b and b <= a):
            k = fdiv(b + a - 1, 2 * a)
            b -= 2 * a * k
            c = (b * b - d) / (4 * a)
        if a > c:
            t = a
            a = c
            c = t
            b = -b
            continue
        if a == c and b < 0:
            b = -b
        break
    f[0] = a
    f[1] = b
    f[2] = c


cdef inline void compose(int64_t *f, int64_t *g, int64_t *out, int64_t disc) noexcept nogil:
    cdef int64_t a1 = f[0], b1 = f[1], c1 = f[2]
    cdef int64_t a2 = g[0], b2 = g[1], c2 = g[2]
    cdef int64_t s, n, y1, d, u, v, y2, x2, d1, v1, v2, r, a3, b3, t
    if a1 > a2:
        t = a1; a1 = a2; a2 = t
        t = b1; b1 = b2; b2 = t
        t = c1; c1 = c2; c2 = t
    s = (b1 + b2) / 2
    n = b2 - s
    if a2 % a1 == 0:
        y1 = 0
        d = a1
    else:
        d = xgcd(a2, a1, &u, &v)
        y1 = u
    if fmod(s, d) == 0:
        y2 = -1
        x2 = 0
        d1 = d
    else:
        d1 = xgcd(s, d, &x2, &v)
        y2 = -v
    v1 = a1 / d1
    v2 = a2 / d1
    # y1*y2*n can exceed 64 bits; reduce factors mod v1 first
    r = fmod(fmod(fmod(y1, v1) * fmod(y2, v1), v1) * fmod(n, v1) - fmod(x2, v1) * fmod(c2, v1), v1)
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    # normalise before forming c to keep b3^2 in range
    t = fdiv(b3 + a3 - 1, 2 * a3)
    b3 -= 2 * a3 * t
    out[0] = a3
    out[1] = b3
    out[2] = (b3 * b3 - disc) / (4 * a3)
    reduce_form(out, disc)


cdef inline uint64_t hkey(int64_t a, int64_t b) noexcept nogil:
    return (<uint64_t>a << 32) ^ (<uint64_t>(b + 2147483648LL))


cdef struct Table:
    uint64_t *keys
    int32_t *vals
    int64_t mask


cdef inline void tinit(Table *t, int64_t h) noexcept nogil:
    cdef int64_t size = 4
    while size < 2 * h:
        size <<= 1
    t.mask = size - 1
    t.keys = <uint64_t *>calloc(size, sizeof(uint64_t))
    t.vals = <int32_t *>malloc(size * sizeof(int32_t))


cdef inline void tfree(Table *t) noexcept nogil:
    free(t.keys)
    free(t.vals)


cdef inline void tput(Table *t, uint64_t key, int32_t val) noexcept nogil:
    cdef uint64_t i = (key * 0x9E3779B97F4A7C15ULL) & t.mask
    while t.keys[i] != 0:
        i = (i + 1) & t.mask
    t.keys[i] = key
    t.vals[i] = val


cdef inline int32_t tget(Table *t, uint64_t key) noexcept nogil:
    cdef uint64_t i = (key * 0x9E3779B97F4A7C15ULL) & t.mask
    while t.keys[i] != 0:
        if t.keys[i] == key:
            return t.vals[i]
        i = (i + 1) & t.mask
    return -1


cdef int relations_c(int64_t disc, int64_t *fa, int64_t *fb, int64_t *fc, int64_t h,
                     int64_t *rows) noexcept nogil:
    """Fill ``rows`` (KMAX x KMAX, row-major) with the generator relations; return k or -1."""
    cdef Table tab
    cdef int64_t i, j, e, x, y, gi, gi2, oldsize, size, k = 0
    cdef int64_t g[3]
    cdef int64_t cur[3]
    cdef int64_t pw[3]
    cdef int64_t tmp[3]
    cdef int64_t xf[3]
    cdef int32_t *pos
    cdef int32_t *members
    cdef int32_t *vec
    cdef int64_t b0 = disc & 1
    tinit(&tab, h)
    pos = <int32_t *>malloc(h * sizeof(int32_t))
    members = <int32_t *>malloc(h * sizeof(int32_t))
    vec = <int32_t *>calloc(h * KMAX, sizeof(int32_t))
    for i in range(h):
        tput(&tab, hkey(fa[i], fb[i]), <int32_t>i)
        pos[i] = -1
    i = tget(&tab, hkey(1, b0))
    pos[i] = 0
    members[0] = <int32_t>i
    size = 1
    for gi in range(h):
        if size == h:
            break
        if pos[gi] >= 0:
            continue
        if k >= KMAX:
            k = -1
            break
        g[0] = fa[gi]; g[1] = fb[gi]; g[2] = fc[gi]
        cur[0] = g[0]; cur[1] = g[1]; cur[2] = g[2]
        e = 1
        while True:
            x = tget(&tab, hkey(cur[0], cur[1]))
            if pos[x] >= 0:
                break
            compose(cur, g, tmp, disc)
            cur[0] = tmp[0]; cur[1] = tmp[1]; cur[2] = tmp[2]
            e += 1
        for j in range(KMAX):
            rows[k * KMAX + j] = 0
        for j in range(k):
            rows[k * KMAX + j] = -vec[pos[x] * KMAX + j]
        rows[k * KMAX + k] = e
        oldsize = size
        pw[0] = g[0]; pw[1] = g[1]; pw[2] = g[2]
        for i in range(1, e):
            for j in range(oldsize):
                x = members[j]
                xf[0] = fa[x]; xf[1] = fb[x]; xf[2] = fc[x]
                compose(pw, xf, tmp, disc)
                y = tget(&tab, hkey(tmp[0], tmp[1]))
                pos[y] = <int32_t>size
                members[size] = <int32_t>y
                for gi2 in range(k):
                    vec[size * KMAX + gi2] = vec[j * KMAX + gi2]
                vec[size * KMAX + k] = <int32_t>i
                size += 1
            compose(pw, g, tmp, disc)
            pw[0] = tmp[0]; pw[1] = tmp[1]; pw[2] = tmp[2]
        k += 1
    free(pos)
    free(members)
    free(vec)
    tfree(&tab)
    return k


cdef list _rows_to_list(int64_t *rows, int k):
    cdef int i, j
    return [[rows[i * KMAX + j] for j in range(i + 1)] for i in range(k)]


def reduced_forms(long long d):
    cdef int64_t m = -d, a, b, c, num, four_a, amax = 0
    cdef list out = []
    while (amax + 1) * (amax + 1) * 3 <= m:
        amax += 1
    for a in range(1, amax + 1):
        four_a = 4 * a
        for b in range(-a + 1, a + 1):
            num = b * b + m
            if num % four_a:
                continue
            c = num / four_a
            if c < a or (c == a and b < 0):
                continue
            if _gcd(_gcd(a, b), c) != 1:
                continue
            out.append((a, b, c))
    return out


cdef inline int64_t _gcd(int64_t a, int64_t b) noexcept nogil:
    cdef int64_t t
    if a < 0:
        a = -a
    if b < 0:
        b = -b
    while b:
        t = a % b
        a = b
        b = t
    return a


def class_group_relations(long long d):
    forms = reduced_forms(d)
    cdef int64_t h = len(forms), i
    cdef cnp.ndarray[cnp.int64_t, ndim=2] arr = np.array(forms, dtype=np.int64).reshape(h, 3)
    cdef int64_t *fa = <int64_t *>malloc(h * sizeof(int64_t))
    cdef int64_t *fb = <int64_t *>malloc(h * sizeof(int64_t))
    cdef int64_t *fc = <int64_t *>malloc(h * sizeof(int64_t))
    cdef int64_t rows[KMAX * KMAX]
    for i in range(h):
        fa[i] = arr[i, 0]; fb[i] = arr[i, 1]; fc[i] = arr[i, 2]
    k = relations_c(d, fa, fb, fc, h, rows)
    free(fa); free(fb); free(fc)
    if k < 0:
        raise ArithmeticError("too many generators")
    return int(h), _rows_to_list(rows, k)


def block_class_groups(long long lo, long long hi, mask):
    """Class group presentations for every ``|D|`` in ``[lo, hi]`` flagged in ``mask``.

    Reduced forms are sieved for the whole block at once: loop over ``(a, b)``
    and step ``c``, which moves ``|D| = 4ac - b^2`` in strides of ``4a``.
    """
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] mk = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef int64_t nd = hi - lo + 1, a, b, c, cmin, cmax, dd, amax = 0, i, tot, h
    cdef int64_t *counts = <int64_t *>calloc(nd + 1, sizeof(int64_t))
    cdef int64_t *offs
    cdef int64_t *fa
    cdef int64_t *fb
    cdef int64_t *fc
    cdef int64_t rows[KMAX * KMAX]
    cdef int k
    cdef list out = []
    while (amax + 1) * (amax + 1) * 3 <= hi:
        amax += 1
    with nogil:
        for a in range(1, amax + 1):
            for b in range(-a + 1, a + 1):
                cmin = a + (1 if b < 0 else 0)
                c = (lo + b * b + 4 * a - 1) / (4 * a)
                if c > cmin:
                    cmin = c
                cmax = (hi + b * b) / (4 * a)
                for c in range(cmin, cmax + 1):
                    dd = 4 * a * c - b * b - lo
                    if mk[dd]:
                        counts[dd + 1] += 1
        for i in range(nd):
            counts[i + 1] += counts[i]
    tot = counts[nd]
    offs = <int64_t *>malloc((nd + 1) * sizeof(int64_t))
    fa = <int64_t *>malloc((tot + 1) * sizeof(int64_t))
    fb = <int64_t *>malloc((tot + 1) * sizeof(int64_t))
    fc = <int64_t *>malloc((tot + 1) * sizeof(int64_t))
    with nogil:
        for i in range(nd + 1):
            offs[i] = counts[i]
        for a in range(1, amax + 1):
            for b in range(-a + 1, a + 1):
                cmin = a + (1 if b < 0 else 0)
                c = (lo + b * b + 4 * a - 1) / (4 * a)
                if c > cmin:
                    cmin = c
                cmax = (hi + b * b) / (4 * a)
                for c in range(cmin, cmax + 1):
                    dd = 4 * a * c - b * b - lo
                    if mk[dd]:
                        i = offs[dd]
                        fa[i] = a; fb[i] = b; fc[i] = c
                        offs[dd] += 1
    try:
        for i in range(nd):
            if not mk[i]:
                continue
            h = counts[i + 1] - counts[i]
            # buckets fill in (a, b) order; c is forced by (a, b) for a fixed D
            k = relations_c(-(lo + i), fa + counts[i], fb + counts[i], fc + counts[i], h, rows)
            if k < 0:
                raise ArithmeticError("too many generators")
            out.append((int(lo + i), int(h), _rows_to_list(rows, k)))
    finally:
        free(counts); free(offs); free(fa); free(fb); free(fc)
    return out


def stickelberger_accumulate(chi, s_table, long long F, long long c, long long p, long long pn):
    cdef cnp.ndarray[cnp.int8_t, ndim=1] ch = np.ascontiguousarray(chi, dtype=np.int8)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] st = np.ascontiguousarray(s_table, dtype=np.int32)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] acc = np.zeros(pn, dtype=np.int64)
    cdef int64_t m = ch.shape[0], pk = st.shape[0]
    cdef int64_t a, r = 0, t = 0, w
    cdef int32_t s
    cdef int8_t x
    with nogil:
        for a in range(1, F):
            r += 1
            if r == m:
                r = 0
            t += 1
            if t == pk:
                t = 0
            x = ch[r]
            if x == 0:
                continue
            s = st[t]
            if s < 0:
                continue
            w = (c * a) / F
            if w:
                acc[s] += x * w
        for a in range(pn):
            acc[a] = fmod(acc[a], p)
    return acc


def corank_batch(mats, int p):
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] M = np.ascontiguousarray(mats, dtype=np.uint8)
    cdef int T = M.shape[0], N = M.shape[1], t, i, j, col, rank, piv
    cdef cnp.ndarray[cnp.int32_t, ndim=1] out = np.zeros(T, dtype=np.int32)
    cdef int *buf = <int *>malloc(N * N * sizeof(int))
    cdef int *inv = <int *>malloc(p * sizeof(int))
    cdef int f, tmp
    for i in range(1, p):
        for j in range(1, p):
            if (i * j) % p == 1:
                inv[i] = j
    with nogil:
        for t in range(T):
            for i in range(N):
                for j in range(N):
                    buf[i * N + j] = M[t, i, j] % p
            rank = 0
            for col in range(N):
                piv = -1
                for i in range(rank, N):
                    if buf[i * N + col]:
                        piv = i
                        break
                if piv < 0:
                    continue
                if piv != rank:
                    for j in range(col, N):
                        tmp = buf[piv * N + j]
                        buf[piv * N + j] = buf[rank * N + j]
                        buf[rank * N + j] = tmp
                f = inv[buf[rank * N + col]]
                for j in range(col, N):
                    buf[rank * N + j] = (buf[rank * N + j] * f) % p
                for i in range(rank + 1, N):
                    f = buf[i * N + col]
                    if f:
                        for j in range(col, N):
                            buf[i * N + j] = (buf[i * N + j] + (p - f) * buf[rank * N + j]) % p
                rank += 1
            out[t] = N - rank
    free(buf)
    free(inv)
    return out
