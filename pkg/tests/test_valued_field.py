from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tausheaf.errors import DegenerateInput, DenominatorCapExceeded, ParseError
from tausheaf.valued_field import (ValuedField, artin_schreier, as_residual,
                                   format_literal, kummer_root, newton_polygon,
                                   parse_literal, principal_as_root)

FIELD = ValuedField(2, prec=32)
FIELD3 = ValuedField(3, prec=24)


def series(F, terms, prec="default"):
    return F.make(terms, prec=prec)


@st.composite
def exact_series(draw, F=FIELD, lo=-3, hi=6, min_terms=1):
    n = draw(st.integers(min_terms, 4))
    exps = draw(st.lists(st.integers(lo * 4, hi * 4), min_size=n, max_size=n,
                         unique=True))
    codes = draw(st.lists(st.integers(1, F.q - 1), min_size=n, max_size=n))
    return F.make([(Fraction(e, 4), c) for e, c in zip(exps, codes)], prec=None)


def test_char2_cancellation():
    F = FIELD
    x = series(F, [(1, 1)], prec=3) + F.monomial(1)
    assert x.terms == ()
    assert x.prec == F.units(3)
    assert x.is_zero() is not True and x.is_zero() is not False


def test_unit_times_inverse_is_exact_one():
    F = FIELD
    y = F.monomial(-1) * F.monomial(1)
    assert y.prec is None and y.terms == ((0, 1),)


def test_invert_one_plus_u():
    F = FIELD
    x = F.one() + F.monomial(1)
    inv = x.invert()
    # 1/(1+u) = 1 + u + u^2 + ... in characteristic 2
    assert [F.frac(e) for e, _ in inv.terms] == list(range(32))
    assert (inv * x - 1).is_zero() is not False


def test_invert_zero_raises():
    with pytest.raises(DegenerateInput):
        FIELD.zero().invert()


def test_frobenius_rule():
    F = FIELD
    x = F.monomial(1) + F.monomial(2)
    y = x.frobenius()
    assert y.terms == ((F.units(2), 1), (F.units(4), 1))


def test_inv_frobenius_of_square():
    F = FIELD
    assert F.monomial(2).inv_frobenius().terms == ((F.units(1), 1),)


def test_inv_frobenius_coefficient_root(F4):
    lv = F4.level(2)
    for c in range(1, 4):
        x = F4.monomial(1, c, m=2)
        y = x.inv_frobenius()
        assert y.terms[0] == (F4.units(Fraction(1, 2)), lv.mul(c, c))
        assert y.frobenius().same_as(x)


def test_inv_frobenius_denominator_cap():
    F = ValuedField(2, denom_cap=1, prec=8)
    with pytest.raises(DenominatorCapExceeded):
        F.monomial(1).inv_frobenius()


@given(exact_series(), exact_series())
@settings(max_examples=60, deadline=None)
def test_ultrametric(x, y):
    s = x + y
    vx, vy = x.val(), y.val()
    assert s.val() >= min(vx, vy)
    if vx != vy:
        assert s.val() == min(vx, vy)


@given(exact_series(), exact_series())
@settings(max_examples=40, deadline=None)
def test_frobenius_is_ring_map(x, y):
    assert (x * y).frobenius().same_as(x.frobenius() * y.frobenius())
    assert (x + y).frobenius().same_as(x.frobenius() + y.frobenius())
    assert x.frobenius().inv_frobenius().same_as(x)


@given(exact_series())
@settings(max_examples=40, deadline=None)
def test_valuation_multiplicative(x):
    assert (x * x).val() == 2 * x.val()


def test_principal_root_example():
    F = ValuedField(2, prec=5)
    x = principal_as_root(F.make([(1, 1)]))
    assert [F.frac(e) for e, _ in x.terms] == [1, 2, 4]
    assert as_residual(x, F.make([(1, 1)])).is_zero() is not False


def test_artin_schreier_zero_gives_fq():
    F = FIELD3
    rs = artin_schreier(F.zero(None))
    assert sorted(r.terms for r in rs) == sorted(
        (((0, c),) if c else ()) for c in range(3))


def test_artin_schreier_residue_example():
    F = FIELD
    rs = artin_schreier(F.one())
    assert rs.m == 2 and len(rs) == 2
    lv = F.level(2)
    brute = {c for c in lv.elements() if lv.sub(c, lv.frob(c, 2)) == 1}
    assert {r.terms[0][1] for r in rs} == brute
    assert all(r.prec is None for r in rs)


def test_artin_schreier_wild_example():
    F = FIELD
    alpha = F.monomial(-1)
    rs = artin_schreier(alpha, depth=2)
    x = rs.roots[0]
    assert rs.kind == "dominant" and x.dominant
    assert [(F.frac(e), c) for e, c in x.terms] == [(Fraction(-1, 2), 1),
                                                    (Fraction(-1, 4), 1)]
    res = x - x.frobenius() - alpha
    assert res.val_lower() >= Fraction(-1, 4)


def test_kummer_square_roots():
    F = FIELD3
    rs = kummer_root(F.monomial(2), 2)
    assert sorted(r.terms for r in rs) == [((F.units(1), 1),), ((F.units(1), 2),)]


def test_kummer_units_of_fq():
    F = ValuedField(5, prec=8)
    rs = kummer_root(F.one(), 4)
    assert sorted(r.terms[0][1] for r in rs) == [1, 2, 3, 4]


def test_kummer_degree_one_identity():
    F = FIELD
    a = F.monomial(-1)
    rs = kummer_root(a, 1)
    assert len(rs) == 1 and rs.roots[0].same_as(a)


@given(exact_series(FIELD3, lo=-2, hi=4))
@settings(max_examples=30, deadline=None)
def test_kummer_roots_reproduce(a):
    v = a.val()
    if (v * FIELD3.D) % 2:
        return
    try:
        rs = kummer_root(a, 2)
    except DenominatorCapExceeded:
        return
    for x in rs:
        assert (x * x - a).is_zero() is not False
        assert x.val() == v / 2


def test_newton_polygon_examples():
    p = newton_polygon([(1, Fraction(-1)), (2, Fraction(0))])
    assert p.segments == [(1, 1)]
    assert newton_polygon([(0, 0), (1, 0)]).segments == [(0, 1)]
    p = newton_polygon([(1, 0), (2, 2), (4, 8)])
    assert p.segments[0] == (2, 1)


@given(st.lists(st.tuples(st.integers(0, 12), st.integers(-6, 6)), min_size=2,
                max_size=8, unique_by=lambda t: t[0]))
@settings(max_examples=60, deadline=None)
def test_newton_slopes_increase(points):
    pts = sorted((x, Fraction(y)) for x, y in points)
    poly = newton_polygon(pts)
    slopes = poly.slopes()
    assert all(a < b for a, b in zip(slopes, slopes[1:]))
    assert sum(n for _, n in poly.segments) == pts[-1][0] - pts[0][0]


def test_newton_product_union():
    # (x - u)(x - u^-1)(x - u^2) over F_2((u)): root valuations 1, -1, 2
    F = FIELD
    roots = [F.monomial(1), F.monomial(-1), F.monomial(2)]
    coeffs = [F.one()]
    for r in roots:
        nxt = [F.zero(None)] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] = nxt[i + 1] + c
            nxt[i] = nxt[i] - c * r
        coeffs = nxt
    pts = [(i, c.val()) for i, c in enumerate(coeffs) if c.terms]
    vals = sorted(v for v, n in newton_polygon(pts).root_valuations() for _ in range(int(n)))
    assert vals == [-1, 1, 2]


@given(exact_series())
@settings(max_examples=40, deadline=None)
def test_literal_round_trip(x):
    text = format_literal(x)
    y = parse_literal(FIELD, text)
    assert y.same_as(x) and format_literal(y) == text


def test_literal_errors():
    with pytest.raises(ParseError):
        parse_literal(FIELD, "2^1 {1/x:1} prec:exact")
    with pytest.raises(ParseError):
        parse_literal(FIELD, "3^1 {1:1} prec:exact")
    with pytest.raises(ParseError):
        parse_literal(FIELD, "2^1 {1:1, 1:1} prec:4")
