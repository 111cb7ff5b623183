"""Valuation-grid scans, the divergent-side norm-law verifier and the
finite Galois tower on the convergent side of the 2x2 family.

The 2x2 family is tau = (Id + t Delta_1) sigma with

    Delta_1 = [[a, b], [c, d]],   a + d + 2 zeta = 0,   ad - bc = zeta^2,

so Delta_1 + zeta Id is nilpotent.  Its trivial locus is the GL_2(F_q)-orbit
of {|a|, |c|, |d| < 1}; ``orbit_oracle`` evaluates that closed form at a point.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (HypothesisViolated, InfeasibleCell, TauSheafError)
from .gf import gf_det, gf_inverse
from .tate_series import cmat_identity, cmat_is_zero, cmat_mul, cmat_val
from .t_module import family_delta1
from .tau_solver import make_spec, residual, triviality_verdict
from .valued_field import INF, artin_schreier, principal_as_root


def _fmt(v):
    return "inf" if v == INF else str(v)


def gl2_codes(F):
    """GL_2(F_q) as code matrices, identity first."""
    lv = F.level(1)
    ident = [[1, 0], [0, 1]]
    out = [ident]
    for a, b, c, d in itertools.product(range(F.q), repeat=4):
        g = [[a, b], [c, d]]
        if g != ident and gf_det(lv, g):
            out.append(g)
    return out


def _cmat(F, codes):
    return [[F.const(c) for c in row] for row in codes]


def conjugate(F, g, M):
    """g M g^-1 for g in GL_2(F_q) given by codes."""
    ginv = gf_inverse(F.level(1), g)
    return cmat_mul(cmat_mul(_cmat(F, g), M), _cmat(F, ginv))


def family_spec(F, delta1):
    return make_spec(F, [cmat_identity(F, 2), delta1])


def orbit_oracle(F, delta1):
    """True iff some g Delta_1 g^-1 has |a|, |c|, |d| < 1."""
    for g in gl2_codes(F):
        M = conjugate(F, g, delta1)
        if all(M[i][j].val_lower() > 0 for i, j in ((0, 0), (1, 0), (1, 1))):
            if all(M[i][j].terms or M[i][j].prec is None
                   for i, j in ((0, 0), (1, 0), (1, 1))):
                return True
    return False


# -- scans ------------------------------------------------------------------

@dataclass
class RegionMap:
    preset: str
    axes: list                      # [(name, lo, hi)]
    cells: list = field(default_factory=list)
    disagreements: list = field(default_factory=list)
    undetermined: list = field(default_factory=list)
    infeasible: list = field(default_factory=list)

    def as_dict(self):
        return {"preset": self.preset,
                "axes": [{"name": n, "lo": lo, "hi": hi} for n, lo, hi in self.axes],
                "cells": self.cells, "disagreements": self.disagreements,
                "undetermined": self.undetermined, "infeasible": self.infeasible}

    def tsv(self):
        names = [n for n, _, _ in self.axes]
        lines = ["\t".join(names + ["verdict", "oracle", "agree"])]
        for cell in self.cells:
            row = [str(cell["axes"][n]) for n in names]
            oracle = cell["oracle"]
            agree = cell["agree"]
            row.append(cell["verdict"])
            row.append("" if oracle is None else ("T" if oracle else "D"))
            row.append("" if agree is None else ("yes" if agree else "no"))
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"

    def verdicts(self):
        return [c["verdict"] for c in self.cells if c["verdict"] in "TDU"]


def _scalar_cell(F, vals, horizon, leads):
    a = F.monomial(vals["va"], leads.get("a", 1))
    b = F.monomial(vals["vb"], leads.get("b", 1))
    spec = make_spec(F, [[[a]], [[b]]])
    return spec, vals["vb"] > vals["va"]


def _family_cell(F, vals, horizon, leads, zeta):
    a = F.monomial(vals["va"], leads.get("a", 1))
    b = F.monomial(vals["vb"], leads.get("b", 1))
    delta1 = family_delta1(F, a, b, zeta)
    if delta1[1][1].val() != Fraction(vals["va"]):
        raise InfeasibleCell("val(d) = val(a) is incompatible with a + d = -2 zeta",
                             va=vals["va"])
    return family_spec(F, delta1), orbit_oracle(F, delta1)


def _custom_cell(F, vals, template):
    def entry(x):
        if isinstance(x, str) and x.startswith("$"):
            name = x[1:]
            if name not in vals:
                raise InfeasibleCell(f"unbound grid variable {x}")
            return F.monomial(vals[name])
        return x
    levels = [[[entry(x) for x in row] for row in L] for L in template]
    return make_spec(F, levels), None


def scan(F, preset, axes, horizon=12, zeta=None, leads=None, template=None):
    """Run triviality_verdict on every grid cell; compare with the oracle."""
    leads = leads or {}
    rm = RegionMap(preset, [(n, lo, hi) for n, lo, hi in axes])
    ranges = [range(lo, hi + 1) for _, lo, hi in axes]
    names = [n for n, _, _ in axes]
    for point in itertools.product(*ranges):
        vals = dict(zip(names, point))
        cell = {"axes": vals, "verdict": None, "oracle": None, "agree": None}
        try:
            if preset == "example56":
                spec, oracle = _scalar_cell(F, vals, horizon, leads)
            elif preset == "pink":
                spec, oracle = _family_cell(F, vals, horizon, leads,
                                          zeta if zeta is not None else F.monomial(1))
            elif preset == "custom":
                spec, oracle = _custom_cell(F, vals, template)
            else:
                raise ValueError(f"unknown preset {preset!r}")
        except InfeasibleCell as exc:
            cell["verdict"] = "infeasible"
            cell["note"] = str(exc)
            rm.infeasible.append(vals)
            rm.cells.append(cell)
            continue
        try:
            rep = triviality_verdict(spec, horizon)
            verdict = rep.verdict
        except TauSheafError as exc:
            verdict = "U"
            cell["note"] = exc.code
        cell["verdict"] = verdict
        cell["oracle"] = oracle
        if verdict == "U":
            rm.undetermined.append(vals)
        elif oracle is not None:
            cell["agree"] = (verdict == "T") == oracle
            if not cell["agree"]:
                rm.disagreements.append(vals)
        rm.cells.append(cell)
    return rm


# -- norm laws on the divergent side -----------------------------------------

def _sum_interval(vals):
    """Valuation interval of a sum of terms with exact valuations."""
    vals = [v for v in vals if v != INF]
    if not vals:
        return (INF, INF)
    lo = min(vals)
    if vals.count(lo) == 1:
        return (lo, lo)
    return (lo, INF)


def _as_interval(V, q):
    """Valuation interval of x^q - x given val(x) = V."""
    if V == INF:
        return (INF, INF)
    if V < 0:
        return (q * V, q * V)
    if V > 0:
        return (V, V)
    return (Fraction(0), INF)


def _meet(I, J):
    return max(I[0], J[0]) <= min(I[1], J[1])


def _iv(I):
    return [_fmt(I[0]), _fmt(I[1])]


def normalize_point(F, delta1, zeta):
    """Move Delta_1 within its GL_2(F_q)-orbit so that |d~| is minimal and |b~| >= |c~|."""
    best = None
    for g in gl2_codes(F):
        M = conjugate(F, g, delta1)
        tl = [[-zeta - M[0][0], -M[0][1]], [-M[1][0], -zeta - M[1][1]]]
        key = (-tl[1][1].val(), tl[0][1].val() > tl[1][0].val())
        if best is None or key < best[0]:
            best = (key, g, M, tl)
    _, g, M, tl = best
    if tl[0][1].val() > tl[1][0].val():
        raise HypothesisViolated("no orbit representative with |b~| >= |c~| at minimal |d~|")
    return g, M, tl


def verify_norm_law(F, delta1, zeta, horizon, perturb=None):
    """Check the claimed |x_n|, |v_n|, |y_n| laws against every recursion.

    ``perturb = (n0, shift)`` adds ``shift * val(d~)`` to the claimed
    valuation of x_n for n >= n0 (a deliberate wrong law, for testing).
    """
    q = F.q
    g, M, tl = normalize_point(F, delta1, zeta)
    a, b, c, d = M[0][0], M[0][1], M[1][0], M[1][1]
    bt, dt = tl[0][1], tl[1][1]
    va, vd = a.val(), d.val()
    if va != vd or va > 0:
        raise HypothesisViolated("need |a| = |d| >= 1", val_a=str(va), val_d=str(vd))
    beta, delta, z = bt.val(), dt.val(), zeta.val()
    if not (beta <= delta <= 0 < z):
        raise HypothesisViolated("need |b~| >= |d~| >= 1 > |zeta|",
                                 val_b=str(beta), val_d=str(delta))
    vals = {"a": va, "b": b.val(), "c": c.val(), "d": vd}

    def X(n):
        base = delta * (1 - Fraction(1, q ** n)) / (q - 1)
        if perturb is not None and n >= perturb[0]:
            base += Fraction(perturb[1]) * delta
        return base

    def V(n):
        return INF if n == 0 else (beta - delta) / q + delta * (1 - Fraction(1, q ** n)) / (q - 1)

    def Y(n):
        return beta + delta * (1 - Fraction(1, q ** n)) / (q - 1)

    checks, violations = [], []

    def record(n, name, ok, **detail):
        item = {"n": n, "constraint": name, "ok": bool(ok)}
        item.update(detail)
        checks.append(item)
        if not ok:
            violations.append(item)

    # identity on leading data: val(b~^(q-1) - d~^(q-1)) = (q-1) val(b~)
    ident = bt ** (q - 1) - dt ** (q - 1)
    record(0, "identity b~^(q-1) - d~^(q-1)", ident.val() == (q - 1) * beta,
           lhs=_fmt(ident.val()), rhs=_fmt((q - 1) * beta))
    # base case x_0 = 1, v_0 = 0, y_0 = b~
    record(0, "base x_0 = 1", X(0) == 0, law=_fmt(X(0)))
    record(0, "base v_0 = 0", V(0) == INF, law=_fmt(V(0)))
    record(0, "base y_0 = b~", Y(0) == beta, law=_fmt(Y(0)))

    for n in range(1, horizon + 1):
        record(n, "monotone |x_n| >= |x_{n-1}| >= 1", X(n) <= X(n - 1) <= 0,
               law=_fmt(X(n)))
        record(n, "bound |v_n| <= |b~||x_n|", V(n) >= beta + X(n), law=_fmt(V(n)))
        # first line of the unfolded recursion against the remaining terms
        for comp, lead, prev, own in (
                ("v", Y(n - 1), V, V(n)),
                ("x", delta - beta + Y(n - 1), X, X(n))):
            rest = [z + prev(n - 1)]
            for j in range(2, n + 1):
                if j % F.p:
                    rest.append((j - 1) * z + (lead - Y(n - 1)) + Y(n - j))
                rest.append(j * z + prev(n - j))
            record(n, f"dominance in the {comp}-recursion", lead < min(rest, default=INF),
                   lead=_fmt(lead), rest=_fmt(min(rest, default=INF)))
            rhs = _sum_interval([lead] + rest)
            lhs = _as_interval(own, q)
            record(n, f"unfolded {comp}_n^q - {comp}_n", _meet(lhs, rhs),
                   lhs=_iv(lhs), rhs=_iv(rhs))
        # the recursions in the original coordinates
        for comp, (k1, k2), own in (("v", ("a", "b"), V(n)), ("x", ("c", "d"), X(n))):
            rhs = _sum_interval([vals[k1] + q * V(n - 1), vals[k2] + q * X(n - 1)])
            lhs = _as_interval(own, q)
            record(n, f"recursion {comp}_n - {comp}_n^q", _meet(lhs, rhs),
                   lhs=_iv(lhs), rhs=_iv(rhs))
        # y_n = b~ x_n - d~ v_n and its q-th power
        rhs = _sum_interval([beta + X(n), delta + V(n)])
        record(n, "y_n = b~ x_n - d~ v_n", _meet((Y(n), Y(n)), rhs),
               lhs=_fmt(Y(n)), rhs=_iv(rhs))
        rhs = _sum_interval([q * beta + q * X(n), q * delta + q * V(n)])
        record(n, "y_n^q = b~^q x_n^q - d~^q v_n^q", _meet((q * Y(n), q * Y(n)), rhs),
               lhs=_fmt(q * Y(n)), rhs=_iv(rhs))
        lhs = _sum_interval([beta + q * X(n), delta + q * V(n)])
        rhs = _sum_interval([j * z + Y(n - j) for j in range(n + 1)])
        record(n, "b~ x_n^q - d~ v_n^q = sum zeta^j y_{n-j}", _meet(lhs, rhs),
               lhs=_iv(lhs), rhs=_iv(rhs))

    first = min((v["n"] for v in violations), default=None)
    return {"normalizing_g": g, "val_b_tilde": str(beta), "val_d_tilde": str(delta),
            "val_zeta": str(z), "horizon": horizon,
            "perturb": None if perturb is None else [perturb[0], str(perturb[1])],
            "laws": [{"n": n, "x": _fmt(X(n)), "v": _fmt(V(n)), "y": _fmt(Y(n))}
                     for n in range(horizon + 1)],
            "checks": len(checks), "violations": violations,
            "first_violation": first, "consistent": not violations}


# -- the finite tower on the convergent side -------------------------------

def _root(alpha, principal_only):
    if alpha.is_zero() is True and alpha.prec is None:
        return alpha.F.zero(m=alpha.m)
    if alpha.val_lower() > 0:
        return principal_as_root(alpha)
    if principal_only:
        raise HypothesisViolated("right-hand side is not small where the tower is closed")
    rs = artin_schreier(alpha)
    if rs.kind == "dominant":
        raise HypothesisViolated("tower generator lies above the residue field")
    return rs.roots[0]


def _tower_columns(F, delta1, H, N, gens=None):
    """(u_n, w_n) and (v_n, x_n) for n <= H; gens overrides v_1..v_N."""
    a, b = delta1[0]
    c, d = delta1[1]
    u, w, v, x = [F.one()], [F.zero(None)], [F.zero(None)], [F.one()]
    for n in range(1, H + 1):
        u.append(_root(a * u[-1].frobenius() + b * w[-1].frobenius(), True))
        w.append(_root(c * u[-2].frobenius() + d * w[-1].frobenius(), True))
        rhs_v = a * v[-1].frobenius() + b * x[-1].frobenius()
        if gens is not None and n <= N:
            v.append(gens[n - 1])
        else:
            v.append(_root(rhs_v, n > N))
        x.append(_root(c * v[-2].frobenius() + d * x[-1].frobenius(), True))
    return u, w, v, x


def _relation_defect(F, delta1, u, w, v, x):
    """Max-norm check of the level relations for both columns."""
    a, b = delta1[0]
    c, d = delta1[1]
    bad = []
    for n in range(1, len(u)):
        for name, lhs, rhs in (
                ("u", u[n] - u[n].frobenius(), a * u[n - 1].frobenius() + b * w[n - 1].frobenius()),
                ("w", w[n] - w[n].frobenius(), c * u[n - 1].frobenius() + d * w[n - 1].frobenius()),
                ("v", v[n] - v[n].frobenius(), a * v[n - 1].frobenius() + b * x[n - 1].frobenius()),
                ("x", x[n] - x[n].frobenius(), c * v[n - 1].frobenius() + d * x[n - 1].frobenius())):
            if (lhs - rhs).is_zero() is False:
                bad.append({"n": n, "entry": name})
    return bad


def unipotent_tower(F, delta1, zeta, r_val, s_val, horizon, g=None):
    """Adjoin v_1..v_N, sum the x_n series, and check the unipotent action.

    ``g`` is [g_1, ..., g_N] with g_i in F_q (codes); it acts by
    (v_n, x_n) -> (v_n, x_n) + sum_i g_i (u_{n-i}, w_{n-i}).
    """
    r_val, s_val = Fraction(r_val), Fraction(s_val)
    a, b = delta1[0]
    c, d = delta1[1]
    if not (0 < r_val and s_val < 0):
        raise HypothesisViolated("need |r| < 1 < |s|")
    small = [("a", a), ("c", c), ("d", d), ("zeta", zeta)]
    for name, e in small:
        if e.val_lower() < r_val:
            raise HypothesisViolated(f"|{name}| exceeds |r|", val=_fmt(e.val_lower()))
    if not s_val <= b.val() <= r_val:
        raise HypothesisViolated("need |r| <= |b| <= |s|", val_b=_fmt(b.val()))
    N = 1
    while N * r_val + s_val <= 0:
        N += 1
    H = max(horizon, N)
    u, w, v, x = _tower_columns(F, delta1, H, N)
    bad = _relation_defect(F, delta1, u, w, v, x)
    phi = [[[u[n], v[n]], [w[n], x[n]]] for n in range(H + 1)]
    spec = family_spec(F, delta1)
    res = residual(spec, phi)
    invariant = all(cmat_is_zero(R) is not False for R in res)
    det0 = phi[0][0][0] * phi[0][1][1] - phi[0][0][1] * phi[0][1][0]
    rank = 2 if invariant and det0.val() == 0 else None
    # decay bounds: |u_n|, |w_n|, |x_n| <= |r|^(n/q), |v_n| <= (|s| |r|^(n-1))^(1/q)
    bounds = []
    for n in range(1, H + 1):
        lim = r_val * n / F.q
        limv = (s_val + r_val * (n - 1)) / F.q
        ok = (min(u[n].val_lower(), w[n].val_lower(), x[n].val_lower()) >= lim
              and v[n].val_lower() >= limv)
        bounds.append({"n": n, "ok": ok, "level_val": _fmt(cmat_val(phi[n]))})
    out = {"N": N, "horizon": H, "group_order": F.q ** N,
           "generator_levels": sorted({v[n].m for n in range(1, N + 1)}),
           "level_vals": [_fmt(cmat_val(P)) for P in phi],
           "relation_failures": bad, "invariant": invariant, "rank": rank,
           "bounds": bounds, "bounds_ok": all(bd["ok"] for bd in bounds)}
    if g is not None:
        out["action"] = _check_action(F, delta1, u, w, v, x, N, H, g)
    return out


def _check_action(F, delta1, u, w, v, x, N, H, g):
    if len(g) != N:
        raise HypothesisViolated(f"group element needs {N} entries", got=len(g))
    gi = [F.const(c) for c in g]
    v2 = [v[n] + _sum(F, [gi[i - 1] * u[n - i] for i in range(1, min(n, N) + 1)])
          for n in range(H + 1)]
    x2 = [x[n] + _sum(F, [gi[i - 1] * w[n - i] for i in range(1, min(n, N) + 1)])
          for n in range(H + 1)]
    bad = _relation_defect(F, delta1, u, w, v2, x2)
    # the same element reached by re-running the tower from the moved generators
    _, _, v3, x3 = _tower_columns(F, delta1, H, N, gens=v2[1:N + 1])
    same = all((p - r).is_zero() is not False for p, r in zip(v2 + x2, v3 + x3))
    fixed = all((p - r).is_zero() is not False for p, r in zip(v2 + x2, v + x))
    return {"g": list(g), "solution": not bad, "matches_tower": same,
            "fixes_solution": fixed}


def _sum(F, items):
    acc = F.zero(None)
    for it in items:
        acc = acc + it
    return acc
