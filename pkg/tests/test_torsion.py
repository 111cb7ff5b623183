import itertools

import pytest
from hypothesis import given, settings, strategies as st

from tausheaf.errors import DimensionMismatch, NotInvertible
from tausheaf.gf import gf_det
from tausheaf.t_module import carlitz, motive_of
from tausheaf.tate_series import cmat_identity
from tausheaf.tau_solver import make_spec
from tausheaf.torsion import (brute_force_count, conjugate_basis, is_free_shape,
                              pairing_check, torsion_invariants, torsor_twist_check)
from tausheaf.valued_field import ValuedField

F2 = ValuedField(2, prec=16)
F3 = ValuedField(3, prec=16)


def const_spec(F, codes, extra=None):
    levels = [[[F.const(c) for c in row] for row in codes]]
    if extra is not None:
        levels.append([[F.const(c) for c in row] for row in extra])
    return make_spec(F, levels)


def gl_codes(F, r):
    lv = F.level(1)
    out = []
    for entries in itertools.product(range(F.q), repeat=r * r):
        g = [list(entries[i * r:(i + 1) * r]) for i in range(r)]
        if gf_det(lv, g):
            out.append(g)
    return out


def test_rank_one_constant_kummer():
    spec = const_spec(F3, [[2]])
    basis = torsion_invariants(spec, 0)
    phi0 = basis.phi.rows[0][0].coeffs[0]
    # phi0 = 2 sigma(phi0)  =>  phi0^2 = 2^-1 = 2
    assert (phi0 * phi0 - 2).is_zero() is not False
    assert basis.kernel_dims == [1]


def test_rank_one_conjugate_twist_is_scalar():
    basis = torsion_invariants(const_spec(F3, [[2]]), 0)
    M = torsor_twist_check(basis, conjugate_basis(basis))
    assert M == [[[2]]]
    assert torsor_twist_check(basis, basis) == [[[1]]]


def test_carlitz_motive_level_zero():
    motive = motive_of(carlitz(F2, F2.monomial(-1)))
    basis = torsion_invariants(motive, 0)
    phi0 = basis.phi.rows[0][0].coeffs[0]
    assert phi0.val() == 1
    theta = F2.monomial(-1)
    # phi0^(q-1) = -theta^-1
    assert (phi0 * theta + 1).is_zero() is not False


def test_identity_is_free_and_standard():
    for N in range(3):
        basis = torsion_invariants(make_spec(F3, [cmat_identity(F3, 2)]), N)
        assert is_free_shape(basis.kernel_dims, 2)
        pm = pairing_check(basis)
        assert pm.perfect and pm.fq_valued


def test_not_invertible_mod_t():
    spec = make_spec(F2, [[[F2.zero(None)]], [[F2.one()]]])
    with pytest.raises(NotInvertible):
        torsion_invariants(spec, 1)


def test_pairing_rank_one_unit():
    pm = pairing_check(torsion_invariants(const_spec(F3, [[2]]), 0))
    assert pm.perfect and pm.gram[0][0][0] != 0


def test_pairing_detects_injected_column():
    basis = torsion_invariants(const_spec(F3, [[2]]), 1)
    bad = [[F3.monomial(1), F3.zero(None)]]
    pm = pairing_check(basis, columns=bad)
    assert not pm.perfect


def test_pairing_dimension_mismatch():
    basis = torsion_invariants(const_spec(F3, [[2]]), 1)
    with pytest.raises(DimensionMismatch):
        pairing_check(basis, columns=[[F3.one()]])


def test_rank_two_twist_invertible():
    spec = const_spec(F3, [[0, 1], [1, 1]])
    b1 = torsion_invariants(spec, 1)
    M = torsor_twist_check(b1, conjugate_basis(b1))
    assert len(M) == 2 and all(len(c) == 2 for row in M for c in row)


def test_unit_identity_holds_to_precision():
    basis = torsion_invariants(const_spec(F2, [[1, 1], [1, 0]]), 1)
    assert basis.unit_identity_val > 0


@given(st.sampled_from(gl_codes(F2, 2) + gl_codes(F3, 1)), st.integers(0, 2))
@settings(max_examples=15, deadline=None)
def test_free_and_perfect_on_constants(g, N):
    F = F2 if len(g) == 2 else F3
    spec = const_spec(F, g)
    basis = torsion_invariants(spec, N)
    assert is_free_shape(basis.kernel_dims, spec.r)
    assert pairing_check(basis).perfect
    k = basis.trace[-1]["level"]
    if F.q ** (k * spec.r) <= 256:
        assert brute_force_count(spec, N, k) == F.q ** (spec.r * (N + 1))


def test_brute_force_with_t_term():
    spec = const_spec(F2, [[1, 1], [0, 1]], extra=[[0, 1], [1, 0]])
    basis = torsion_invariants(spec, 1)
    k = basis.trace[-1]["level"]
    assert brute_force_count(spec, 1, k) == 2 ** 4
