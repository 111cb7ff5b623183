"""tau-sheaves at a point: tau = Delta * sigma on K<t>^r.

The level equations for an invariant Phi = sum Phi_n t^n of tau read

    Phi_n - Delta_0 sigma(Phi_n) = Psi_n,
    Psi_n = Omega_n + sum_{1 <= nu <= n} Delta_nu sigma(Phi_{n - nu}),

with Omega = 0 for invariants.  Each level is an etale (Artin-Schreier type)
equation.  Small right-hand sides have a unique small solution given by a
convergent series; large ones are solved after moving to coordinates in
which Delta_0 becomes the identity (the Lang step below) and picking roots
by a deterministic policy.

Verdicts:
  T  a contraction certificate shows every later level stays small;
  D  a choice-independent valuation recursion shows some column can never
     decay (or Delta_0 is singular);
  U  neither within the horizon.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import (DegenerateInput, DenominatorCapExceeded,
                     ExtensionCapExceeded, HypothesisViolated,
                     LangSearchExhausted, MismatchDetected,
                     NilpotencyBoundExceeded, NotBlockTriangular,
                     NotInvertible, RootChoiceAmbiguous, SingularMatrix,
                     TauSheafError)
from .gf import fp_nullspace, gf_det, gf_inverse, gf_rank
from .tate_series import (TateMatrix, cmat_add, cmat_det, cmat_identity,
                          cmat_inverse, cmat_is_zero, cmat_level, cmat_lift,
                          cmat_mul, cmat_sigma, cmat_sub, cmat_val,
                          cmat_zero, matinv)
from .valued_field import (INF, ValSeries, ValuedField, artin_schreier,
                           principal_as_root)


@dataclass
class TauSpec:
    """Rank r and Delta = sum Delta_n t^n (levels[n] is an r x r matrix)."""

    F: ValuedField
    r: int
    levels: list
    norm_scale: Optional[Fraction] = None
    delta0_reduced: bool = False
    # True when Delta is an exact polynomial: levels beyond the list vanish
    polynomial: bool = True

    @property
    def degree(self):
        for n in range(len(self.levels) - 1, -1, -1):
            if cmat_is_zero(self.levels[n]) is not True:
                return n
        return 0

    def level(self, n):
        if n < len(self.levels):
            return self.levels[n]
        return cmat_zero(self.F, self.r)

    def padded(self, N):
        return [self.level(n) for n in range(N + 1)]

    def matrix(self, N):
        return TateMatrix.from_levels(self.F, self.padded(N), N)

    def sup_val(self):
        return min(cmat_val(L) for L in self.levels)


def make_spec(F, levels, **kw):
    r = len(levels[0])
    for L in levels:
        if len(L) != r or any(len(row) != r for row in L):
            raise ValueError("every Delta_n must be r x r")
    return TauSpec(F, r, [list(map(list, L)) for L in levels], **kw)


# -- normalization ---------------------------------------------------------

def normalize_basis(spec: TauSpec) -> TauSpec:
    """Rescale so that sup_n |Delta_n| = 1.

    A basis change f -> alpha f turns Delta into alpha^(1-q) Delta; the
    recorded ``norm_scale`` is val(alpha) = v/(q-1) where v = min val Delta_n.
    """
    F = spec.F
    v = spec.sup_val()
    if v == INF:
        raise DegenerateInput("Delta vanishes to precision")
    if v == 0:
        return spec
    F.units(v / (F.q - 1))  # the rescaling itself must be representable
    shift = -F.units(v)
    levels = [[[a.scale(shift) for a in row] for row in L] for L in spec.levels]
    prior = spec.norm_scale or Fraction(0)
    return TauSpec(F, spec.r, levels, prior + v / (F.q - 1), spec.delta0_reduced,
                   spec.polynomial)


def conjugate_const(spec: TauSpec, g, ginv) -> TauSpec:
    """Delta -> g^{-1} Delta g for g in GL_r(F_q) (sigma-fixed, isometric)."""
    levels = [cmat_mul(cmat_mul(ginv, L), g) for L in spec.levels]
    return TauSpec(spec.F, spec.r, levels, spec.norm_scale, False, spec.polynomial)


# -- Lang step: X = M sigma(X) for constant invertible M ---------------------

@dataclass
class LangResult:
    X: list            # r x r solution, X = M sigma(X)
    weights: list      # diagonal balancing exponents (units of 1/D)
    residue: list      # residue-field solution (codes)
    m: int             # coefficient level of X
    trace: list = field(default_factory=list)


def _balance(M, F):
    """Find w with val M_ij + q w_j - w_i >= 0 and invertible residue."""
    r = len(M)
    q = F.q
    vals = [[M[i][j].val_units() for j in range(r)] for i in range(r)]
    for perm in itertools.permutations(range(r)):
        if any(vals[i][perm[i]] is None for i in range(r)):
            continue
        w = [None] * r
        ok = True
        for start in range(r):
            if w[start] is not None:
                continue
            cyc = [start]
            while perm[cyc[-1]] != start:
                cyc.append(perm[cyc[-1]])
            L = len(cyc)
            num = sum(q ** j * vals[cyc[j]][perm[cyc[j]]] for j in range(L))
            w0 = Fraction(-num, q ** L - 1)
            if w0.denominator != 1:
                ok = False
                break
            w[cyc[0]] = int(w0)
            # w_i = v_i + q w_{perm(i)} walking the cycle backwards
            for j in range(L - 1, 0, -1):
                i = cyc[j]
                w[i] = vals[i][perm[i]] + q * w[perm[i]]
        if not ok:
            continue
        scaled = [[M[i][j].scale(q * w[j] - w[i]) for j in range(r)] for i in range(r)]
        good = True
        for row in scaled:
            for a in row:
                lo = a.val_lower_units()
                if lo is not None and lo < 0:
                    good = False
                if a.prec is not None and a.prec <= 0:
                    good = False
        if not good:
            continue
        m = cmat_level(scaled)
        lv = F.level(m)
        C = [[_res(a.lift(m)) for a in row] for row in scaled]
        if gf_det(lv, C) == 0:
            continue
        return w, scaled, C, m
    return None


def _res(a: ValSeries):
    if a.terms and a.terms[0][0] == 0:
        return a.terms[0][1]
    return 0


def residue_lang(F, C, m):
    """Invertible Y over F_{q^k} with Y = C sigma(Y); returns (Y, k)."""
    r = len(C)
    k = m
    tried = []
    while True:
        if F.q ** k > F.max_field_size:
            raise LangSearchExhausted(
                "residue Lang equation unsolved within the field cap",
                levels_tried=tried)
        tried.append(k)
        lv = F.level(k)
        Ck = [[F.embed(c, m, k) for c in row] for row in C]
        dim = lv.k
        p = F.p
        cols = []
        for i in range(r):
            for j in range(dim):
                b = p ** j
                bq = lv.frob(b, F.q)
                img = []
                for i2 in range(r):
                    val = b if i2 == i else 0
                    val = lv.sub(val, lv.mul(Ck[i2][i], bq))
                    img.extend(lv.digits(val))
                cols.append(img)
        rows = [[cols[c][rr] for c in range(len(cols))] for rr in range(r * dim)]
        basis = fp_nullspace(rows, p)
        if len(basis) == r * F.e:
            vecs = []
            for vec in basis:
                vecs.append([lv.from_digits(vec[i * dim:(i + 1) * dim]) for i in range(r)])
            chosen = []
            for v in vecs:
                if gf_rank(lv, chosen + [v]) > len(chosen):
                    chosen.append(v)
                if len(chosen) == r:
                    break
            if len(chosen) == r:
                Y = [[chosen[j][i] for j in range(r)] for i in range(r)]
                return Y, k
        k += m


def lang_solve(M) -> LangResult:
    """Solve X = M sigma(X) with X invertible, for a constant matrix M."""
    F = M[0][0].F
    r = len(M)
    bal = _balance(M, F)
    if bal is None:
        raise LangSearchExhausted("no diagonal balancing makes the residue invertible")
    w, M1, C, m = bal
    Y, k = residue_lang(F, C, m)
    lv = F.level(k)
    Yinv = gf_inverse(lv, Y)
    Ys = [[F.const(c, k) for c in row] for row in Y]
    Yis = [[F.const(c, k) for c in row] for row in Yinv]
    M1k = cmat_lift(M1, k)
    M2 = cmat_mul(cmat_mul(Yis, M1k), cmat_sigma(Ys))
    E = cmat_sub(M2, cmat_identity(F, r))
    ev = cmat_val(E)
    if ev <= 0:
        raise LangSearchExhausted("unit part is not close to the identity")
    target = min((a.prec for row in M2 for a in row if a.prec is not None),
                 default=F.prec_units)
    P = cmat_identity(F, r)
    j = 0
    while ev != INF and F.units(ev) * F.q ** j < target:
        P = cmat_mul(P, cmat_sigma(M2, j))
        P = [[a.with_prec(target) for a in row] for row in P]
        j += 1
    P = [[a.with_prec(target) for a in row] for row in P]
    X1 = cmat_mul(Ys, P)
    X = [[X1[i][j].scale(w[i]) for j in range(r)] for i in range(r)]
    trace = [{"step": "balance", "weights": [str(F.frac(x)) for x in w]},
             {"step": "residue", "level": k}]
    return LangResult(X, w, Y, k, trace)


def reduce_delta0(spec: TauSpec):
    """Return (spec', D) with D = Delta_0 sigma(D) and Delta' = D^-1 Delta sigma(D)."""
    L0 = spec.level(0)
    det0 = cmat_det(L0)
    if det0.is_zero() is not False:
        raise NotInvertible("Delta_0 is not invertible")
    lang = lang_solve(L0)
    D = lang.X
    Dinv = cmat_inverse(D)
    sD = cmat_sigma(D)
    levels = [cmat_mul(cmat_mul(Dinv, L), sD) for L in spec.levels]
    out = TauSpec(spec.F, spec.r, levels, spec.norm_scale, True, spec.polynomial)
    return out, D, lang


# -- level solving -----------------------------------------------------------

def _sigma_series(A, R):
    """Unique small solution of X - A sigma(X) = R for |R| < 1, |A| <= 1."""
    F = R[0][0].F
    rv = cmat_val(R)
    if rv == INF:
        return [row[:] for row in R]
    target = min((a.prec for row in R for a in row if a.prec is not None),
                 default=None)
    if target is None:
        rvu = F.units(rv)
        target = F.prec_units if rvu < F.prec_units else rvu + F.prec_units
    total = [[a.with_prec(target) for a in row] for row in R]
    prod = None
    term = R
    nu = 0
    while True:
        nu += 1
        prod = A if prod is None else cmat_mul(prod, cmat_sigma(A, nu - 1))
        prod = [[a.with_prec(target) for a in row] for row in prod]
        sR = cmat_sigma(R, nu)
        if cmat_val(sR) == INF or F.units(cmat_val(sR)) >= target:
            break
        term = cmat_mul(prod, sR)
        total = cmat_add(total, [[a.with_prec(target) for a in row] for row in term])
    return total


def _pick_root(alpha: ValSeries, policy, depth):
    F = alpha.F
    if alpha.is_zero() is True:
        return F.zero(m=alpha.m), "zero"
    if not alpha.terms:
        # zero to precision: the small solution is zero to that precision
        return alpha, "small"
    v = alpha.val_units()
    if v > 0:
        return principal_as_root(alpha), "principal"
    rs = artin_schreier(alpha, depth)
    roots = sorted(rs.roots, key=lambda s: s.sort_key())
    if policy == "strict" and len(roots) > 1:
        best = min(x.val_lower() for x in roots)
        if sum(1 for x in roots if x.val_lower() == best) > 1:
            raise RootChoiceAmbiguous("several roots of minimal norm")
    best = min(x.val_lower() for x in roots)
    pick = next(x for x in roots if x.val_lower() == best)
    return pick, rs.kind


@dataclass
class _LevelContext:
    A: list
    lang: Optional[LangResult] = None
    Dinv: Optional[list] = None
    nilpotent: Optional[int] = None
    block: Optional[int] = None


def _sigma_nilpotency(A, bound):
    """Smallest k <= bound with A sigma(A) ... sigma^{k-1}(A) = 0, else None."""
    prod = None
    for k in range(1, bound + 1):
        prod = A if prod is None else cmat_mul(prod, cmat_sigma(A, k - 1))
        if cmat_is_zero(prod) is True:
            return k
    return None


def _solve_level(ctx: _LevelContext, R, policy="minimal", depth=2, notes=None):
    """One solution of X - A sigma(X) = R (A = Delta_0)."""
    A = ctx.A
    r = len(A)
    if ctx.nilpotent is None:
        ctx.nilpotent = _sigma_nilpotency(A, r + 1) or 0
    if ctx.nilpotent:
        # finite geometric sum, the homogeneous equation has only X = 0
        total = [row[:] for row in R]
        prod = None
        for nu in range(1, ctx.nilpotent):
            prod = A if prod is None else cmat_mul(prod, cmat_sigma(A, nu - 1))
            total = cmat_add(total, cmat_mul(prod, cmat_sigma(R, nu)))
        return total
    rv = cmat_val(R)
    if rv > 0 and cmat_val(A) >= 0:
        return _sigma_series(A, R)
    if ctx.lang is None and ctx.block is None:
        try:
            ctx.lang = lang_solve(A)
            ctx.Dinv = cmat_inverse(ctx.lang.X)
        except (LangSearchExhausted, SingularMatrix):
            ctx.block = _find_block(A)
            if ctx.block is None:
                raise
    if ctx.lang is not None:
        D = ctx.lang.X
        Y = cmat_mul(ctx.Dinv, R)
        cols = len(R[0])
        out = [[None] * cols for _ in range(r)]
        for j in range(cols):
            for i in range(r):
                root, kind = _pick_root(Y[i][j], policy, depth)
                out[i][j] = root
                if notes is not None and kind not in ("principal", "zero", "small"):
                    notes.append(kind)
        return cmat_mul(D, out)
    # block upper triangular: [[A_F, B], [0, A_G]] with A_F sigma-nilpotent
    k = ctx.block
    AG = [row[k:] for row in A[k:]]
    AF = [row[:k] for row in A[:k]]
    B = [row[k:] for row in A[:k]]
    RG = R[k:]
    XG = _solve_level(_LevelContext(AG), RG, policy, depth, notes)
    RF = cmat_add([row[:] for row in R[:k]], cmat_mul(B, cmat_sigma(XG)))
    XF = _solve_level(_LevelContext(AF), RF, policy, depth, notes)
    return XF + XG


def _find_block(A):
    r = len(A)
    for k in range(1, r):
        lower_left = [row[:k] for row in A[k:]]
        if cmat_is_zero(lower_left) is not True:
            continue
        AF = [row[:k] for row in A[:k]]
        if _sigma_nilpotency(AF, k + 1):
            return k
    return None


# -- reports ------------------------------------------------------------------

@dataclass
class ContractionCert:
    l: int
    theta: Fraction        # valuation of Theta (|Theta| = e^-theta < 1/2)
    eps: Fraction          # valuation of epsilon
    prefix_vals: list

    def as_dict(self):
        return {"l": self.l, "N": 2 * self.l, "theta_val": str(self.theta),
                "eps_val": str(self.eps),
                "prefix_vals": [_fmt(v) for v in self.prefix_vals]}


@dataclass
class InvariantReport:
    phi: list                      # Phi_0..Phi_N (r x c constant matrices)
    level_vals: list
    verdict: str = "U"
    certificate: Optional[ContractionCert] = None
    witness: Optional[dict] = None
    rank: Optional[int] = None
    horizon: int = 0
    notes: list = field(default_factory=list)
    basis_change: Optional[list] = None
    residual_vals: list = field(default_factory=list)

    def matrix(self, F):
        return TateMatrix.from_levels(F, self.phi)

    def as_dict(self):
        out = {"verdict": self.verdict, "horizon": self.horizon,
               "level_vals": [_fmt(v) for v in self.level_vals],
               "rank": self.rank, "notes": list(self.notes)}
        if self.certificate is not None:
            out["certificate"] = self.certificate.as_dict()
        if self.witness is not None:
            out["witness"] = self.witness
        if self.basis_change is not None:
            out["basis_change"] = self.basis_change
        return out


def _fmt(v):
    if v == INF:
        return "inf"
    return str(v)


def theta_units(F):
    """Smallest valuation (multiple of 1/D) with |u|^val < 1/2, |u| = e^-1."""
    return math.floor(F.D * math.log(2)) + 1


def residual(spec: TauSpec, phi, omega=None):
    """Levels of Phi - Delta sigma(Phi) - Omega."""
    out = []
    for n in range(len(phi)):
        acc = phi[n]
        for nu in range(0, n + 1):
            L = spec.level(nu)
            if cmat_is_zero(L) is True:
                continue
            acc = cmat_sub(acc, cmat_mul(L, cmat_sigma(phi[n - nu])))
        if omega is not None:
            acc = cmat_sub(acc, omega[n])
        out.append(acc)
    return out


def _check_residual(spec, phi, omega=None):
    res = residual(spec, phi, omega)
    for n, R in enumerate(res):
        if cmat_is_zero(R) is False:
            raise MismatchDetected(f"level {n} residual is nonzero", level=n)
    return [cmat_val(R) for R in res]


def solve_levels(spec: TauSpec, seed, horizon, omega=None, policy="minimal",
                 depth=2, notes=None):
    """Phi_0..Phi_horizon for Phi - Delta sigma(Phi) = Omega."""
    F = spec.F
    ctx = _LevelContext(spec.level(0))
    phi = []
    cols = len(seed[0]) if seed is not None else len(omega[0][0])
    for n in range(horizon + 1):
        if n == 0 and seed is not None and omega is None:
            phi.append([row[:] for row in seed])
            continue
        psi = omega[n] if omega is not None else cmat_zero(F, spec.r, cols)
        psi = [row[:] for row in psi]
        for nu in range(1, n + 1):
            L = spec.level(nu)
            if cmat_is_zero(L) is True:
                continue
            psi = cmat_add(psi, cmat_mul(L, cmat_sigma(phi[n - nu])))
        if n == 0 and seed is not None:
            sol = _solve_level(ctx, psi, policy, depth, notes)
            phi.append(cmat_add(sol, seed))
            continue
        phi.append(_solve_level(ctx, psi, policy, depth, notes))
    return phi


def solve_invariants(spec: TauSpec, seed, horizon, policy="minimal",
                     depth=2) -> InvariantReport:
    """Level-by-level invariant columns starting from ``seed`` = Phi_0."""
    r0 = cmat_sub(seed, cmat_mul(spec.level(0), cmat_sigma(seed)))
    if cmat_is_zero(r0) is False:
        raise HypothesisViolated("seed does not satisfy Phi_0 = Delta_0 sigma(Phi_0)")
    notes = []
    phi = solve_levels(spec, seed, horizon, policy=policy, depth=depth, notes=notes)
    rv = _check_residual(spec, phi)
    rep = InvariantReport(phi, [cmat_val(P) for P in phi], horizon=horizon,
                          notes=sorted(set(notes)), residual_vals=rv)
    return rep


def contraction_certificate(spec: TauSpec, phi, l):
    """Check the contraction conditions at level l (needs Phi_0..Phi_2l)."""
    F = spec.F
    if 2 * l >= len(phi):
        return None
    if spec.sup_val() != 0:
        return None
    theta = F.frac(theta_units(F))
    prefix = [cmat_val(phi[n]) for n in range(l + 1)]
    low = min(prefix)
    if low == INF:
        low = Fraction(0)
    eps = max(theta, theta - F.q * low)
    last = len(spec.levels) if spec.polynomial else None
    if last is None:
        return None
    for n in range(l + 1, last):
        if cmat_val(spec.level(n)) < eps:
            return None
    for n in range(l + 1, 2 * l + 1):
        if cmat_val(phi[n]) < theta:
            return None
    return ContractionCert(l, theta, eps, prefix)


def _gl_elements(F, r):
    """GL_r(F_q) as code matrices, identity first."""
    ident = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    out = [ident]
    if r > 2:
        return out
    lv = F.level(1)
    for entries in itertools.product(range(F.q), repeat=r * r):
        g = [list(entries[i * r:(i + 1) * r]) for i in range(r)]
        if g == ident or gf_det(lv, g) == 0:
            continue
        out.append(g)
    return out


def _codes_to_cmat(F, g):
    return [[F.const(c, 1) for c in row] for row in g]


def triviality_verdict(spec: TauSpec, horizon, policy="minimal", depth=2,
                       search_basis=True) -> InvariantReport:
    """Try to certify triviality, else divergence, else report U."""
    F = spec.F
    norm = normalize_basis(spec)
    L0 = norm.level(0)
    det0 = cmat_det(L0)
    z = det0.is_zero()
    if z is True:
        return InvariantReport([], [], "D", witness={"reason": "singular Delta_0"},
                               rank=None, horizon=horizon)
    if not det0.terms:
        return InvariantReport([], [], "U", horizon=horizon,
                               notes=["det Delta_0 vanishes to precision"])
    lv1 = F.level(1)
    gs = _gl_elements(F, spec.r) if search_basis else _gl_elements(F, spec.r)[:1]
    first = None
    errors = []
    for g in gs:
        ginv = gf_inverse(lv1, g)
        conj = conjugate_const(norm, _codes_to_cmat(F, g), _codes_to_cmat(F, ginv))
        try:
            lang = lang_solve(conj.level(0))
        except TauSheafError as exc:
            errors.append(exc.code)
            break
        try:
            rep = solve_invariants(conj, lang.X, horizon, policy, depth)
        except (DenominatorCapExceeded, ExtensionCapExceeded, DegenerateInput) as exc:
            errors.append(exc.code)
            continue
        if first is None:
            first = rep
        for l in range(0, horizon // 2 + 1):
            cert = contraction_certificate(conj, rep.phi, l)
            if cert is not None:
                rep.verdict = "T"
                rep.certificate = cert
                rep.rank = spec.r
                rep.basis_change = g
                return rep
    div = divergence_check(norm, horizon)
    if div is not None:
        rep = first or InvariantReport([], [], horizon=horizon)
        rep.verdict = "D"
        rep.witness = div
        return rep
    rep = first or InvariantReport([], [], horizon=horizon)
    rep.verdict = "U"
    if errors:
        rep.notes = sorted(set(rep.notes + errors))
    return rep


# -- divergence: interval valuation propagation ------------------------------

def _ival(a: ValSeries):
    if a.terms:
        v = a.val()
        return (v, v)
    if a.prec is None:
        return (INF, INF)
    return (a.F.frac(a.prec), INF)


def _isum(items):
    """Interval for the valuation of a sum of terms with given intervals."""
    items = [it for it in items if it[0] != INF]
    if not items:
        return (INF, INF), True
    lo = min(it[0] for it in items)
    for k, (l, h) in enumerate(items):
        others = [it[0] for j, it in enumerate(items) if j != k]
        if h < min(others, default=INF):
            return (l, h), True
    return (lo, INF), False


def _iroot(iv, q):
    lo, hi = iv
    if hi <= 0:
        return (lo / q, hi / q)
    return (min(lo / q, Fraction(0)) if lo != INF else Fraction(0), INF)


def divergence_check(norm: TauSpec, horizon):
    """Certify that no invariant column can decay, if the valuations say so."""
    F = norm.F
    try:
        red, D, lang = reduce_delta0(norm)
    except TauSheafError:
        return None
    s = max(red.degree, 1)
    r, q = norm.r, F.q
    dI = [[[_ival(a) for a in row] for row in red.level(nu)]
          for nu in range(s + 1)]
    seeds = []
    for vec in itertools.product(range(q), repeat=r):
        nz = [c for c in vec if c]
        if nz and nz[0] == 1:
            seeds.append(vec)
    for seed in seeds:
        levels = [[(Fraction(0), Fraction(0)) if c else (INF, INF) for c in seed]]
        strict = [True]
        for n in range(1, horizon + 1):
            col, ok_all = [], True
            for i in range(r):
                terms = []
                for nu in range(1, min(n, s) + 1):
                    for j in range(r):
                        dl, dh = dI[nu][i][j]
                        pl, ph = levels[n - nu][j]
                        terms.append((dl + q * pl, dh + q * ph))
                iv, ok = _isum(terms)
                ok_all = ok_all and ok
                col.append(_iroot(iv, q))
            levels.append(col)
            strict.append(ok_all)
            # window W = levels n-2s+1..n-s, next = n-s+1..n
            if n >= 2 * s:
                W = levels[n - 2 * s + 1:n - s + 1]
                W2 = levels[n - s + 1:n + 1]
                if not all(strict[n - s + 1:n + 1]):
                    continue
                flat = [x for lvl in W for x in lvl]
                flat2 = [x for lvl in W2 for x in lvl]
                if any(lo != hi or lo == INF or lo > 0 for lo, hi in flat + flat2):
                    continue
                kappas = {b[0] - a[0] for a, b in zip(flat, flat2)}
                if len(kappas) == 1:
                    kappa = kappas.pop()
                    if kappa <= 0:
                        return {"reason": "self-similar valuation recursion",
                                "seed": list(seed), "window_start": n - 2 * s + 1,
                                "window": [[_fmt(x[0]) for x in lvl] for lvl in W],
                                "shift": str(kappa)}
    return None


# -- inhomogeneous, nilpotency, splitting ------------------------------------

def solve_inhomogeneous(spec: TauSpec, omega, horizon, seed=None,
                        policy="minimal", depth=2) -> InvariantReport:
    """Columns f with f - Delta sigma(f) = Omega mod t^(horizon+1)."""
    F = spec.F
    omega = [omega[n] if n < len(omega) else cmat_zero(F, spec.r, len(omega[0][0]))
             for n in range(horizon + 1)]
    notes = []
    phi = solve_levels(spec, seed, horizon, omega=omega, policy=policy,
                       depth=depth, notes=notes)
    rv = _check_residual(spec, phi, omega)
    return InvariantReport(phi, [cmat_val(P) for P in phi], "U", horizon=horizon,
                           notes=sorted(set(notes)), residual_vals=rv)


def tau_power_product(spec: TauSpec, k, N):
    """Delta sigma(Delta) ... sigma^{k-1}(Delta) mod t^(N+1)."""
    M = spec.matrix(N)
    prod = M
    cur = M
    for _ in range(1, k):
        cur = cur.sigma()
        prod = prod @ cur
    return prod


def nilpotency_test(spec: TauSpec, bound, N=None):
    """(True, k) if tau^k = 0 mod t^(N+1) for some k <= bound."""
    N = spec.degree if N is None else N
    M = spec.matrix(N)
    prod, cur = M, M
    for k in range(1, bound + 1):
        if k > 1:
            cur = cur.sigma()
            prod = prod @ cur
        if all(cmat_is_zero(L) is not False for L in prod.levels()):
            return True, k
    return False, None


def split_nilpotent_extension(spec: TauSpec, n, f_size=None, N=None):
    """Section s = (X; Id) with Delta sigma(s) = s Delta_G (Delta block triangular)."""
    F = spec.F
    N = spec.degree if N is None else N
    r = spec.r
    k = f_size
    if k is None:
        k = next((kk for kk in range(1, r)
                  if all(cmat_is_zero([row[:kk] for row in L[kk:]]) is True
                         for L in spec.levels)), None)
    if k is None or not 0 < k < r:
        raise NotBlockTriangular("no zero lower-left block")
    for L in spec.levels:
        if cmat_is_zero([row[:k] for row in L[k:]]) is not True:
            raise NotBlockTriangular("lower-left block is nonzero")
    levels = spec.padded(N)
    DF = TateMatrix.from_levels(F, [[row[:k] for row in L[:k]] for L in levels], N)
    B = TateMatrix.from_levels(F, [[row[k:] for row in L[:k]] for L in levels], N)
    DG = TateMatrix.from_levels(F, [[row[k:] for row in L[k:]] for L in levels], N)
    fspec = make_spec(F, [[row[:k] for row in L[:k]] for L in levels])
    nil, _ = nilpotency_test(fspec, n, N)
    if not nil:
        raise NilpotencyBoundExceeded(f"Delta_F not nilpotent within {n} steps")
    DGinv = matinv(DG)
    base = B @ DGinv
    X = base
    for _ in range(n):
        X = base + (DF @ X.sigma()) @ DGinv
    lower = TateMatrix.identity(F, r - k, N)
    s = TateMatrix(X.rows + lower.rows)
    # verify Delta sigma(s) = s Delta_G
    lhs = spec.matrix(N) @ s.sigma()
    rhs = s @ DG
    diff = lhs - rhs
    if any(cmat_is_zero(L) is False for L in diff.levels()):
        raise MismatchDetected("section fails the equivariance check")
    return s
