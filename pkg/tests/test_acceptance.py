"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import contextlib
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from tausheaf import regions as R
from tausheaf import t_module as tm
from tausheaf.cli import dumps, run
from tausheaf.gf import gf_det
from tausheaf.problem import OPS, load_problem
from tausheaf.tate_series import (TateElem, TateMatrix, cmat_is_zero,
                                  entire_growth_check)
from tausheaf.tau_solver import (make_spec, residual, solve_inhomogeneous,
                                 solve_invariants, normalize_basis,
                                 split_nilpotent_extension, triviality_verdict)
from tausheaf.torsion import (brute_force_count, conjugate_basis, is_free_shape,
                              pairing_check, torsion_invariants, torsor_twist_check)
from tausheaf.valued_field import ValuedField, artin_schreier, as_residual

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"
TITLES = {
    1: "example grid oracle and level norms",
    2: "2x2 family region scan and norm laws",
    3: "Artin-Schreier suite",
    4: "Carlitz battery",
    5: "torsion, pairing and twists",
    6: "inhomogeneous solve and splitting",
    7: "motive cross-check",
    8: "growth check",
    9: "determinism",
}


# filled as criteria run; printed by the terminal-summary hook in conftest.py
RESULTS = {}


@contextlib.contextmanager
def criterion(n):
    RESULTS[n] = "FAIL"
    yield
    RESULTS[n] = "PASS"


def summary_lines():
    return [f"criterion {n} ({TITLES[n]}): {RESULTS[n]}" for n in sorted(RESULTS)]


def mono(F, v, code=1, m=1):
    return F.monomial(v, code, m)


# 1 -------------------------------------------------------------------------

def test_criterion_1_example_grid():
    with criterion(1):
        F = ValuedField(2, prec=64)
        rm = R.scan(F, "example56", [("va", 0, 3), ("vb", 0, 3)], horizon=10)
        assert len(rm.cells) == 16
        assert not rm.undetermined and not rm.disagreements
        for cell in rm.cells:
            va, vb = cell["axes"]["va"], cell["axes"]["vb"]
            assert cell["verdict"] == ("T" if vb > va else "D")
        for va in range(4):
            for vb in range(va + 1, 4):
                spec = make_spec(F, [[[mono(F, va)]], [[mono(F, vb)]]])
                rep = triviality_verdict(spec, 8)
                # |c|^(1 + q + ... + q^(n-1)) with c = b/a
                assert rep.level_vals[:9] == [(vb - va) * (2 ** n - 1) for n in range(9)]


# 2 -------------------------------------------------------------------------

def test_criterion_2_region_scan():
    with criterion(2):
        F = ValuedField(2, prec=32)
        zeta = mono(F, 1)
        rm = R.scan(F, "pink", [("va", -1, 3), ("vb", -2, 3)], horizon=10, zeta=zeta)
        assert not rm.disagreements
        for cell in rm.cells:
            if cell["oracle"]:
                assert cell["verdict"] == "T"
            else:
                assert cell["verdict"] in ("D", "U")
        for va, vb in [(-1, -2), (0, -1), (-1, 2)]:
            d1 = R.family_delta1(F, mono(F, va), mono(F, vb), zeta)
            assert not R.orbit_oracle(F, d1)
            rep = R.verify_norm_law(F, d1, zeta, 10)
            assert rep["consistent"] and rep["violations"] == []


# 3 -------------------------------------------------------------------------

def _random_series(F, rng, lo, hi, m=1):
    terms = {}
    for _ in range(rng.randint(1, 4)):
        e = Fraction(rng.randint(lo * 4, hi * 4), 4)
        terms[e] = rng.randint(1, F.q ** m - 1)
    terms[Fraction(lo)] = rng.randint(1, F.q ** m - 1)
    return F.make(sorted(terms.items()), m=m)


def _as_brute(F, c, m):
    """Residues r in F_(q^k) with r - r^q = c, and the least such k."""
    q = F.q
    for k in range(1, 9):
        if k % m or q ** k > 256:
            continue
        lv = F.level(k)
        cc = F.embed(c, m, k)
        sols = {x for x in lv.elements() if lv.sub(x, lv.frob(x, q)) == cc}
        if sols:
            return k, sols
    return None, None


def _residue(x):
    return next((c for e, c in x.terms if e == 0), 0)


def test_criterion_3_artin_schreier():
    with criterion(3):
        rng = random.Random(3)
        fields = {2: ValuedField(2, prec=24), 3: ValuedField(3, prec=12)}
        counts = {"principal": 0, "residue": 0, "dominant": 0}
        for i in range(200):
            F = fields[rng.choice((2, 3))]
            kind = ("principal", "residue", "dominant")[i % 3]
            if kind == "principal":
                alpha = _random_series(F, rng, rng.randint(1, 3), 5)
                rs = artin_schreier(alpha)
                x = rs.roots[0]
                assert (x - x.frobenius() - alpha).is_zero() is not False
                assert x.val() == alpha.val()
            elif kind == "residue":
                alpha = _random_series(F, rng, 0, 4)
                rs = artin_schreier(alpha)
                assert len(rs) == F.q
                k, brute = _as_brute(F, alpha.terms[0][1], alpha.m)
                assert k == rs.m
                assert {_residue(x) for x in rs} == brute
                for x in rs:
                    assert (x - x.frobenius() - alpha.lift(x.m)).is_zero() is not False
            else:
                alpha = _random_series(F, rng, -rng.randint(1, 3), 2)
                rs = artin_schreier(alpha, depth=2)
                bound = alpha.val() / F.q ** 2
                for x in rs:
                    assert as_residual(x, alpha).val_lower() >= bound
            counts[kind] += 1
        assert sum(counts.values()) == 200
        # u^-1 over q = 2: dominant root u^(-1/2) + u^(-1/4)
        F = fields[2]
        x = artin_schreier(mono(F, -1), depth=2).roots[0]
        assert [F.frac(e) for e, _ in x.terms[:2]] == [Fraction(-1, 2), Fraction(-1, 4)]


# 4 -------------------------------------------------------------------------

def test_criterion_4_carlitz():
    with criterion(4):
        for q, vtheta in [(2, -1), (3, -1), (2, -2)]:
            F = ValuedField(q, prec=48)
            C = tm.carlitz(F, mono(F, vtheta))
            a = -vtheta
            ex = tm.exp_coefficients(C, 4)
            assert ex.vals() == [j * q ** j * a for j in range(5)]
            assert tm.functional_equation_check(C, ex)["ok"]
            poly = tm.kernel_valuations(C, ex)
            assert poly.segments[0][0] == Fraction(q, q - 1) * a
            assert tm.kernel_rank_estimate(poly, q) == 1
            pts = tm.torsion_points(C, 0)
            assert q ** pts.count_log == q
            assert pts.root_valuations == [(Fraction(vtheta, q - 1), q - 1)]
            assert all(x.val() == Fraction(vtheta, q - 1) for x in pts.values[1:])


# 5 -------------------------------------------------------------------------

def test_criterion_5_torsion_pairing():
    with criterion(5):
        rng = random.Random(5)
        fields = {2: ValuedField(2, prec=16), 3: ValuedField(3, prec=16)}
        done = brute = 0
        while done < 20:
            q = rng.choice((2, 3))
            F = fields[q]
            r = rng.choice((1, 2))
            N = rng.randint(0, 2)
            codes = [[rng.randrange(q) for _ in range(r)] for _ in range(r)]
            if gf_det(F.level(1), codes) == 0:
                continue
            spec = make_spec(F, [[[F.const(c) for c in row] for row in codes]])
            basis = torsion_invariants(spec, N)
            assert is_free_shape(basis.kernel_dims, r)
            k = basis.trace[-1]["level"]
            if q ** (k * r) <= 4096:
                assert brute_force_count(spec, N, k) == q ** (r * (N + 1))
                brute += 1
            pm = pairing_check(basis)
            assert pm.perfect and pm.fq_valued
            M = torsor_twist_check(basis, conjugate_basis(basis))
            const = [[M[i][j][0] for j in range(r)] for i in range(r)]
            assert gf_det(F.level(1), const) != 0
            done += 1
        assert brute >= 10


# 6 -------------------------------------------------------------------------

def test_criterion_6_surjectivity_and_splitting():
    with criterion(6):
        F = ValuedField(2, prec=32)
        rng = random.Random(6)
        Z = F.zero(None)

        def rnd(lo, hi):
            return mono(F, rng.randint(lo, hi))

        for _ in range(20):
            vg = rng.randint(-1, 1)
            vb = vg + rng.randint(1, 3)
            quotient = make_spec(F, [[[mono(F, vg)]], [[mono(F, vb)]]])
            assert triviality_verdict(quotient, 8).verdict == "T"
            # nilpotent part f1 t on top, certified-trivial part below
            L0 = [[Z, rnd(-1, 2)], [Z, mono(F, vg)]]
            L1 = [[rnd(-1, 2), rnd(-1, 2)], [Z, mono(F, vb)]]
            spec = make_spec(F, [L0, L1])
            for _ in range(10):
                omega = [[[rnd(-2, 3)], [rnd(-2, 3)]] for _ in range(rng.randint(1, 3))]
                rep = solve_inhomogeneous(spec, omega, 4)
                padded = omega + [[[Z], [Z]]] * (5 - len(omega))
                assert all(cmat_is_zero(Rn) is not False
                           for Rn in residual(spec, rep.phi, padded))
            s = split_nilpotent_extension(spec, 6)
            N = spec.degree
            levels = spec.padded(N)
            DG = TateMatrix.from_levels(F, [[row[1:] for row in L[1:]] for L in levels], N)
            diff = (spec.matrix(N) @ s.sigma()) - (s @ DG)
            assert all(cmat_is_zero(L) is not False for L in diff.levels())


# 7 -------------------------------------------------------------------------

def test_criterion_7_motive():
    with criterion(7):
        F = ValuedField(2, prec=32)
        zeta = mono(F, 1)
        for va, vb in [(1, 0), (2, 1), (-1, -2), (0, 2)]:
            d1 = tm.family_delta1(F, mono(F, va), mono(F, vb), zeta)
            rec = tm.motive_basis_change(tm.family_module(F, d1, zeta), d1)
            assert rec["levels"] == 2
        theta = mono(F, -1)
        for E in (tm.carlitz(F, theta), tm.drinfeld(F, theta, [F.one(), F.one()])):
            mot = tm.motive_of(E)
            for N in (0, 1):
                rep = tm.torsion_comparison(E, mot, N)
                assert rep["invariant_shape"] == rep["shape"]


# 8 -------------------------------------------------------------------------

def test_criterion_8_growth():
    with criterion(8):
        F = ValuedField(2, prec=64)
        spec = make_spec(F, [[[F.one()]], [[mono(F, 1)]]])
        verdict = triviality_verdict(spec, 8)
        assert verdict.verdict == "T"
        l = verdict.certificate.l
        rep = solve_invariants(normalize_basis(spec), [[F.one()]], 12)
        x = TateElem(F, [P[0][0] for P in rep.phi])
        for rho in [Fraction(k, 2) for k in range(5)]:
            g = entire_growth_check(x, rho)
            assert g["eventually_non_increasing"]
            tail = [s for s in g["sequence"][l + 1:] if s is not None]
            assert all(b <= a for a, b in zip(tail, tail[1:]))


# 9 -------------------------------------------------------------------------

def test_criterion_9_determinism():
    with criterion(9):
        for path in sorted(PROBLEMS.glob("*.json")):
            pf = load_problem(path)
            verbs = sorted({c.op for c in pf.commands} | {"trivial", "torsion"})
            for verb in verbs:
                if verb not in OPS:
                    continue
                a = dumps(run(verb, load_problem(path))[0])
                b = dumps(run(verb, load_problem(path))[0])
                assert a == b
                json.loads(a)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
