from fractions import Fraction

import pytest

from tausheaf import regions as R
from tausheaf.errors import HypothesisViolated
from tausheaf.valued_field import ValuedField

F = ValuedField(2, prec=32)
ZETA = F.monomial(1)

OUTSIDE = [(-1, -2), (-1, 0), (0, -1), (0, 2)]


def point(va, vb, field=F):
    return R.family_delta1(field, field.monomial(va), field.monomial(vb), ZETA)


def test_gl2_codes_count():
    codes = R.gl2_codes(F)
    assert len(codes) == 6 and codes[0] == [[1, 0], [0, 1]]
    assert len(R.gl2_codes(ValuedField(3, prec=8))) == 48


def test_example56_scan_matches_oracle():
    rm = R.scan(F, "example56", [("va", 0, 2), ("vb", 0, 2)], horizon=8)
    assert not rm.disagreements and not rm.undetermined
    got = {(c["axes"]["va"], c["axes"]["vb"]): c["verdict"] for c in rm.cells}
    assert got == {(a, b): "T" if b > a else "D" for a in range(3) for b in range(3)}


def test_family_scan_agrees_where_decided():
    rm = R.scan(F, "pink", [("va", 0, 1), ("vb", -1, 1)], horizon=8)
    assert not rm.disagreements
    for c in rm.cells:
        if c["verdict"] == "U":
            assert c["oracle"] is False


def test_custom_identity_template_is_trivial():
    one = F.one()
    template = [[[one, F.zero()], [F.zero(), one]], [["$x", F.zero()], [F.zero(), "$x"]]]
    rm = R.scan(F, "custom", [("x", 1, 2)], horizon=6, template=template)
    assert rm.verdicts() == ["T", "T"]
    assert rm.tsv().splitlines()[0].split("\t") == ["x", "verdict", "oracle", "agree"]


def test_infeasible_cell_for_odd_q():
    F3 = ValuedField(3, prec=16)
    rm = R.scan(F3, "pink", [("va", 2, 2), ("vb", 0, 0)], horizon=4, zeta=F3.monomial(1))
    assert rm.infeasible == [{"va": 2, "vb": 0}]


def test_orbit_oracle_examples():
    assert R.orbit_oracle(F, point(1, 0))
    assert not R.orbit_oracle(F, point(-1, -2))


@pytest.mark.parametrize("va,vb", OUTSIDE)
def test_norm_law_consistent_outside(va, vb):
    rep = R.verify_norm_law(F, point(va, vb), ZETA, 10)
    assert rep["consistent"] and rep["first_violation"] is None
    assert rep["checks"] > 0


def test_norm_law_values_at_a_point():
    rep = R.verify_norm_law(F, point(-1, -2), ZETA, 3)
    # beta = -2, delta = -1: x_n = -(1 - 2^-n), v_n = -1/2 + x_n, y_n = -2 + x_n
    laws = [(L["x"], L["v"], L["y"]) for L in rep["laws"]]
    assert laws == [("0", "inf", "-2"), ("-1/2", "-1", "-5/2"),
                    ("-3/4", "-5/4", "-11/4"), ("-7/8", "-11/8", "-23/8")]


def test_norm_law_units_with_distinct_leading_parts():
    F4 = ValuedField(2, m=2, prec=32)
    z = F4.monomial(1)
    d1 = R.family_delta1(F4, F4.one(), F4.monomial(0, 2, m=2), z)
    rep = R.verify_norm_law(F4, d1, z, 6)
    assert rep["consistent"]
    assert (rep["val_b_tilde"], rep["val_d_tilde"]) == ("0", "0")


def test_perturbed_law_is_rejected():
    rep = R.verify_norm_law(F, point(-1, -2), ZETA, 10, perturb=(2, Fraction(1, 2)))
    assert not rep["consistent"] and rep["first_violation"] == 2


def test_perturbation_invisible_when_delta_is_zero():
    rep = R.verify_norm_law(F, point(0, -1), ZETA, 10, perturb=(2, Fraction(1, 2)))
    assert rep["consistent"]


def test_norm_law_rejects_inside_point():
    with pytest.raises(HypothesisViolated):
        R.verify_norm_law(F, point(1, 0), ZETA, 6)


def test_tower_and_action():
    d1 = point(1, 0)
    rep = R.unipotent_tower(F, d1, ZETA, 1, Fraction(-1, 2), 8, g=[1])
    assert rep["N"] == 1 and rep["group_order"] == 2
    assert rep["generator_levels"] == [2]
    assert rep["invariant"] and rep["rank"] == 2 and rep["bounds_ok"]
    assert not rep["relation_failures"]
    act = rep["action"]
    assert act["solution"] and act["matches_tower"] and not act["fixes_solution"]
    idle = R.unipotent_tower(F, d1, ZETA, 1, Fraction(-1, 2), 8, g=[0])["action"]
    assert idle["fixes_solution"]


def test_tower_hypotheses():
    with pytest.raises(HypothesisViolated):
        R.unipotent_tower(F, point(1, 0), ZETA, 1, Fraction(1, 2), 4)
    with pytest.raises(HypothesisViolated):
        R.unipotent_tower(F, point(1, 0), ZETA, 1, Fraction(-1, 2), 4, g=[1, 0])
