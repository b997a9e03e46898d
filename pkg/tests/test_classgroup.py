"""Class groups: counts, composition and structure against independent constructions."""

import itertools
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iwastat.arith import MAX_ABS_DISCRIMINANT, enumerate_fundamental, is_fundamental
from iwastat.classgroup import (
    AbelianGroupStructure,
    QuadraticForm,
    class_number,
    class_number_analytic,
    compose,
    contains_power,
    elementary_divisors,
    group_structure,
    power,
    principal_form,
    reduced_forms,
)

SMALL = [int(d) for d in enumerate_fundamental(4000)]


def _naive_reduce(a, b, c):
    while True:
        if b > a or b <= -a:
            k = (a - b) // (2 * a)
            b, c = b + 2 * a * k, a * k * k + b * k + c
        elif a > c:
            a, b, c = c, -b, a
        else:
            if (a == c or b == -a) and b < 0:
                b = -b
            return a, b, c


def _count_reduced_forms(d):
    """Triple loop over |b| <= a <= c with b = d mod 2."""
    n = 0
    a = 1
    while 3 * a * a <= -d:
        for b in range(-a + 1, a + 1):
            if (b * b - d) % (4 * a):
                continue
            c = (b * b - d) // (4 * a)
            if c < a or math.gcd(math.gcd(a, b), c) != 1:
                continue
            if a == c and b < 0:
                continue
            n += 1
        a += 1
    return n


def _ideal_product(d, f, g):
    """Compose through ideals [a, (-b + sqrt d)/2] multiplied in the Z-basis {1, w}."""
    delta = d & 1
    k = (d - delta) // 4  # w^2 = delta w + k

    def gens(a, b):
        return [(a, 0), ((-b - delta) // 2, 1)]

    def mul(u, v):
        x1, y1 = u
        x2, y2 = v
        return (x1 * x2 + k * y1 * y2, x1 * y2 + x2 * y1 + delta * y1 * y2)

    vecs = [mul(u, v) for u in gens(f[0], f[1]) for v in gens(g[0], g[1])]
    # Hermite form of the lattice spanned by vecs: basis (n1, 0), (t, n2)
    pivot = (0, 0)
    flat = []
    for v in vecs:
        while v[1]:
            q = pivot[1] // v[1]
            pivot, v = v, (pivot[0] - q * v[0], pivot[1] - q * v[1])
        flat.append(v[0])
    t, n2 = pivot
    if n2 < 0:
        t, n2 = -t, -n2
    n1 = math.gcd(*flat)
    assert n1 % n2 == 0 and t % n2 == 0
    a = n1 // n2
    b = -2 * (t // n2) - delta
    c = (b * b - d) // (4 * a)
    return _naive_reduce(a, b, c)


def _group_by_brute_force(d):
    forms = [tuple(f) for f in reduced_forms(d)]
    e = tuple(principal_form(d).reduced())
    orders = []
    for f in forms:
        x, n = f, 1
        while x != e:
            x = _ideal_product(d, x, f)
            n += 1
        orders.append(n)
    return Counter(orders)


def _orders_of_structure(divs):
    out = Counter()
    for elt in itertools.product(*(range(m) for m in divs)):
        o = 1
        for x, m in zip(elt, divs):
            o = math.lcm(o, m // math.gcd(x, m))
        out[o] += 1
    return out


@pytest.mark.parametrize(
    "d, h, divisors",
    [(-3, 1, ()), (-4, 1, ()), (-23, 3, (3,)), (-20, 2, (2,)), (-84, 4, (2, 2)), (-3299, 27, (3, 9)), (-3896, 36, (3, 12))],
)
def test_known_groups(d, h, divisors):
    assert class_number(d) == h
    assert group_structure(d).divisors == divisors


def test_form_count_matches_triple_loop_and_analytic_formula():
    for d in SMALL:
        h = class_number(d)
        assert h == _count_reduced_forms(d) == class_number_analytic(d), d


def test_reduced_forms_are_reduced_and_distinct():
    for d in (-23, -56, -3299):
        forms = reduced_forms(d)
        assert len(set(forms)) == len(forms)
        assert all(f.is_reduced() and f.discriminant == d for f in forms)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SMALL), st.data())
def test_composition_matches_ideal_multiplication(d, data):
    forms = reduced_forms(d)
    f = data.draw(st.sampled_from(forms))
    g = data.draw(st.sampled_from(forms))
    assert tuple(compose(f, g)) == _ideal_product(d, tuple(f), tuple(g))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SMALL), st.data())
def test_group_axioms(d, data):
    forms = reduced_forms(d)
    f, g, k = (data.draw(st.sampled_from(forms)) for _ in range(3))
    e = principal_form(d).reduced()
    assert compose(f, e) == f.reduced()
    assert compose(f, g) == compose(g, f)
    assert compose(compose(f, g), k) == compose(f, compose(g, k))
    assert compose(f, f.inverse()) == e
    assert power(f, class_number(d)) == e


def test_compose_rejects_mismatched_or_imprimitive_forms():
    with pytest.raises(ValueError):
        compose(QuadraticForm(1, 1, 6), QuadraticForm(1, 0, 5))
    with pytest.raises(ValueError):
        compose(QuadraticForm(2, 2, 6), QuadraticForm(2, 2, 6))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([d for d in SMALL if class_number(d) <= 60]))
def test_structure_matches_element_orders(d):
    g = group_structure(d)
    assert _orders_of_structure(g.divisors) == _group_by_brute_force(d)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.integers(-9, 9), min_size=3, max_size=3), min_size=3, max_size=3))
def test_elementary_divisors_match_determinantal_divisors(m):
    det = round(_det(m))
    if det == 0:
        with pytest.raises(ValueError):
            elementary_divisors(m)
        return
    divs = elementary_divisors(m)
    # d_k = gcd of k x k minors; invariant factors are d_k / d_{k-1}
    minors1 = [abs(x) for row in m for x in row]
    minors2 = [
        abs(m[i][k] * m[j][l] - m[i][l] * m[j][k])
        for i, j in itertools.combinations(range(3), 2)
        for k, l in itertools.combinations(range(3), 2)
    ]
    d1 = math.gcd(*minors1)
    d2 = math.gcd(*minors2)
    want = [x for x in (d1, d2 // d1, abs(det) // d2) if x > 1]
    assert list(divs) == want


def _det(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def test_structure_type_validation():
    with pytest.raises(ValueError):
        AbelianGroupStructure((3, 4))
    with pytest.raises(ValueError):
        AbelianGroupStructure((1, 3))
    g = AbelianGroupStructure((3, 9, 45))
    assert g.order == 1215 and g.p_rank(3) == 3 and g.p_rank(5) == 1
    assert g.sylow(3).divisors == (3, 9, 9)
    assert contains_power(g, 9, 2) and not contains_power(g, 9, 3)
    assert contains_power(g, 15, 1) and not contains_power(g, 15, 2)


def test_discriminant_beyond_bound_raises_overflow():
    m = MAX_ABS_DISCRIMINANT + 1
    while not is_fundamental(-m):
        m += 1
    with pytest.raises(OverflowError):
        class_number(-m)
    with pytest.raises(OverflowError):
        group_structure(-m)


def test_non_fundamental_rejected():
    with pytest.raises(ValueError):
        class_number(-12)
