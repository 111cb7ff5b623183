import pytest

from tausheaf import t_module as tm
from tausheaf.errors import MismatchDetected, TailNotDominated, UnsupportedShape
from tausheaf.tate_series import cmat_is_zero, cmat_sub
from tausheaf.valued_field import ValuedField

F = ValuedField(2, prec=32)
THETA = F.monomial(-1)
C = tm.carlitz(F, THETA)


def family_point(a_exp=1, b_exp=0):
    zeta = F.monomial(1)
    d1 = tm.family_delta1(F, F.monomial(a_exp), F.monomial(b_exp), zeta)
    return tm.family_module(F, d1, zeta), d1


def carlitz_coefficient(j):
    # e_j = prod_{i<j} (theta^(q^j) - theta^(q^i))^-1
    out = F.one()
    for i in range(j):
        out = out * (THETA.frobenius(j) - THETA.frobenius(i)).invert()
    return out


def test_carlitz_exp_matches_product_formula():
    ex = tm.exp_coefficients(C, 5)
    for j in range(6):
        assert (ex.e[j][0][0] - carlitz_coefficient(j)).is_zero() is not False
    assert ex.vals() == [j * 2 ** j for j in range(6)]
    assert ex.bound_ok()


def test_functional_equation_and_perturbation():
    ex = tm.exp_coefficients(C, 4)
    assert tm.functional_equation_check(C, ex)["ok"]
    ex.e[1] = [[ex.e[1][0][0] + F.monomial(3)]]
    rep = tm.functional_equation_check(C, ex)
    assert not rep["ok"] and 1 in rep["nonzero_at"]


def test_zero_module_has_identity_exponential():
    Z = tm.TModuleSpec(F, 1, [[[THETA]]], THETA)
    ex = tm.exp_coefficients(Z, 3)
    assert ex.vals()[0] == 0
    assert all(cmat_is_zero(E) is True for E in ex.e[1:])


def test_series_and_jacobi_agree_with_nilpotent_part():
    P, _ = family_point()
    a = tm.exp_coefficients(P, 3, order="jacobi")
    b = tm.exp_coefficients(P, 3, order="series")
    for x, y in zip(a.e, b.e):
        assert cmat_is_zero(cmat_sub(x, y)) is not False
    assert tm.functional_equation_check(P, a)["ok"]
    assert a.bound_ok()


def test_kernel_polygon_slopes():
    poly = tm.kernel_valuations(C, tm.exp_coefficients(C, 5))
    assert [s for s, _ in poly.segments] == [2, 3, 4, 5, 6]
    assert tm.kernel_rank_estimate(poly, 2) == 1
    one = tm.kernel_valuations(C, tm.exp_coefficients(C, 1))
    assert len(one.segments) == 1


def test_exp_apply():
    ex = tm.exp_coefficients(C, 6)
    assert all(x.is_zero() is True for x in tm.exp_apply(ex, [F.zero()], 8))
    z = F.monomial(1)
    val = tm.exp_apply(ex, [z], 8)[0]
    assert val.val() == 1
    with pytest.raises(TailNotDominated):
        tm.exp_apply(tm.exp_coefficients(C, 1), [F.monomial(-3)], 100)


def test_carlitz_torsion_points():
    pts = tm.torsion_points(C, 0)
    assert pts.log_counts == [1]
    assert pts.values[0].is_zero() is True
    assert (pts.values[1] - THETA).is_zero() is True
    # phi_(t^2)(x) = theta^2 x + (theta + theta^2) x^2 + x^4:
    # one nonzero root of valuation 0, two of valuation -1
    two = tm.torsion_points(C, 1)
    assert two.log_counts == [1, 2]
    assert sorted(two.root_valuations) == [(-1, 2), (0, 1)]


def test_carlitz_motive_is_t_minus_theta():
    m = tm.motive_of(C)
    assert (m.levels[0][0][0] - THETA).is_zero() is True
    assert (m.levels[1][0][0] - F.one()).is_zero() is True


def test_motive_unsupported_shapes():
    with pytest.raises(UnsupportedShape):
        tm.motive_of(tm.TModuleSpec(F, 1, [[[THETA]]], THETA))
    G0 = [[THETA, F.zero()], [F.zero(), THETA]]
    G1 = [[F.one(), F.zero()], [F.zero(), F.zero()]]
    with pytest.raises(UnsupportedShape):
        tm.motive_of(tm.TModuleSpec(F, 2, [G0, G1], THETA))


@pytest.mark.parametrize("N", [0, 1])
def test_torsion_comparison_drinfeld(N):
    assert tm.torsion_comparison(C, tm.motive_of(C), N)["shape"] == list(range(1, N + 2))
    R2 = tm.drinfeld(F, THETA, [F.one(), F.one()])
    rep = tm.torsion_comparison(R2, tm.motive_of(R2), N)
    assert rep["shape"] == [2 * k for k in range(1, N + 2)]


def test_carlitz_value_matching():
    rep = tm.torsion_comparison(C, tm.motive_of(C), 0)
    assert rep["value_mode"] and rep["pairing_codes"] == [1]


@pytest.mark.parametrize("a_exp,b_exp", [(1, 0), (2, 1)])
def test_family_motive_and_torsion(a_exp, b_exp):
    P, d1 = family_point(a_exp, b_exp)
    rec = tm.motive_basis_change(P, d1)
    assert rec["convention"] == "transpose"
    assert tm.torsion_comparison(P, tm.motive_of(P), 1)["shape"] == [2, 4]


def test_motive_basis_change_detects_wrong_delta():
    P, d1 = family_point()
    bad = [row[:] for row in d1]
    bad[0][1] = bad[0][1] + F.one()
    with pytest.raises(MismatchDetected):
        tm.motive_basis_change(P, bad)


def test_lie_quotient():
    rep = tm.lie_quotient_check(C)
    assert rep["ok"] and rep["dim"] == 1
    assert rep["t_action"] == [["2^1 {-1:1} prec:exact"]]
    P, _ = family_point()
    rep = tm.lie_quotient_check(P)
    assert rep["ok"] and rep["dim"] == 2
    # t acts as theta + nilpotent: equal diagonal, zero above it
    T = rep["t_action"]
    assert T[0][0] == T[1][1] == "2^1 {-1:1} prec:exact"
    assert T[0][1] == "2^1 {} prec:exact"
    rank0 = tm.lie_quotient_check(tm.TModuleSpec(F, 1, [[[THETA]]], THETA))
    assert rank0["ok"] and "rank 0" in rank0["note"]
