"""Anderson t-modules at a point.

A t-module of dimension d is given by phi_t = G_0 + G_1 sigma + ... + G_s sigma^s
acting on column vectors z in K^d, with sigma the coordinate-wise q-power
and G_0 = theta Id + N, N nilpotent.  Twisted polynomials are stored as
lists of d x d constant matrices, index k being the coefficient of sigma^k.

The exponential exp = sum e_j sigma^j is the unique twisted series with
e_0 = Id and exp G_0 = phi_t exp.  Comparing sigma^j coefficients gives

    e_j G_0^(j) - G_0 e_j = sum_{1 <= k <= min(s, j)} G_k e_{j-k}^(k),

solved below by a Neumann iteration whose correction term is nilpotent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (MismatchDetected, NotNilpotent, TailNotDominated,
                     UnsupportedShape)
from .tate_series import (cmat_add, cmat_identity, cmat_inverse, cmat_is_zero,
                          cmat_mul, cmat_neg, cmat_scale, cmat_sigma, cmat_sub,
                          cmat_transpose, cmat_val, cmat_zero)
from .tau_solver import TauSpec, make_spec
from .valued_field import INF, ValSeries, ValuedField, kummer_root, newton_polygon


@dataclass
class TModuleSpec:
    F: ValuedField
    d: int
    G: list              # G_0..G_s, d x d constant matrices
    theta: ValSeries
    name: str = ""

    @property
    def s(self):
        for k in range(len(self.G) - 1, 0, -1):
            if cmat_is_zero(self.G[k]) is not True:
                return k
        return 0

    def nilpotent_part(self):
        return cmat_sub(self.G[0], cmat_scale(cmat_identity(self.F, self.d), self.theta))

    def nilpotency(self):
        """m with N^(m+1) = 0 (m <= d - 1); raises NotNilpotent."""
        Nm = self.nilpotent_part()
        P = Nm
        for m in range(self.d):
            if cmat_is_zero(P) is not False:
                return m
            P = cmat_mul(P, Nm)
        raise NotNilpotent("G_0 - theta Id is not nilpotent", d=self.d)


def drinfeld(F, theta, coeffs, name="drinfeld"):
    """phi_t = theta + g_1 sigma + ... + g_r sigma^r (d = 1)."""
    G = [[[theta]]] + [[[g]] for g in coeffs]
    return TModuleSpec(F, 1, G, theta, name)


def carlitz(F, theta):
    return drinfeld(F, theta, [F.one()], "carlitz")


def family_delta1(F, a, b, zeta):
    """Delta_1 = [[a, b], [c, d]] on the family a + d + 2 zeta = 0, ad - bc = zeta^2."""
    two = F.const(2 % F.p) if F.p != 2 else F.zero()
    d = -(a + two * zeta)
    c = (a * d - zeta * zeta) / b
    return [[a, b], [c, d]]


def family_module(F, delta1, zeta):
    """phi_t = -Delta_1^-1 + Delta_1^-1 sigma, with zeta^-1 as the image of t."""
    inv = cmat_inverse(delta1)
    return TModuleSpec(F, 2, [cmat_neg(inv), inv], zeta.invert(), "family")


# -- twisted polynomials ----------------------------------------------------

def twisted_compose(A, B):
    """(sum A_i sigma^i)(sum B_j sigma^j) = sum A_i B_j^(i) sigma^(i+j)."""
    F = A[0][0][0].F
    d = len(A[0])
    out = [cmat_zero(F, d) for _ in range(len(A) + len(B) - 1)]
    for i, Ai in enumerate(A):
        if cmat_is_zero(Ai) is True:
            continue
        for j, Bj in enumerate(B):
            if cmat_is_zero(Bj) is True:
                continue
            out[i + j] = cmat_add(out[i + j], cmat_mul(Ai, cmat_sigma(Bj, i)))
    return out


def phi_power(spec: TModuleSpec, k):
    P = spec.G
    for _ in range(k - 1):
        P = twisted_compose(spec.G, P)
    return P


def apply_twisted(P, z):
    """sum_k P_k z^(k) for a column z (list of ValSeries)."""
    col = [[x] for x in z]
    F = z[0].F
    acc = cmat_zero(F, len(P[0]), 1)
    for k, Pk in enumerate(P):
        if cmat_is_zero(Pk) is True:
            continue
        acc = cmat_add(acc, cmat_mul(Pk, cmat_sigma(col, k)))
    return [row[0] for row in acc]


# -- motive ------------------------------------------------------------------

def motive_of(spec: TModuleSpec) -> TauSpec:
    """tau-matrix of Hom(E, G_a) in column coordinates.

    Scalars act on the G_a side and t by right composition with phi_t; tau
    is left composition with sigma.  For d = 1 the basis is 1, sigma, ...,
    sigma^(r-1); for the d = 2, s = 1 shape it is the two coordinate
    projections.
    """
    F = spec.F
    t_len = 2
    if spec.d == 1:
        r = spec.s
        if r == 0:
            raise UnsupportedShape("phi_t = theta has rank 0; no finite motive")
        g = [spec.G[k][0][0] for k in range(r + 1)]
        ginv = g[r].invert()
        L0 = cmat_zero(F, r)
        L1 = cmat_zero(F, r)
        for j in range(r - 1):
            L0[j + 1][j] = F.one()
        # tau(sigma^(r-1)) = sigma^r = g_r^-1 (t - theta) - sum g_r^-1 g_k sigma^k
        L0[0][r - 1] = -(g[0] * ginv)
        L1[0][r - 1] = ginv
        for k in range(1, r):
            L0[k][r - 1] = -(g[k] * ginv)
        return make_spec(F, [L0, L1][:t_len])
    if spec.d == 2 and spec.s == 1:
        try:
            R = cmat_inverse(spec.G[1])
        except Exception as exc:
            raise UnsupportedShape("G_1 is not invertible") from exc
        # tau(e_i) = sum_l (t R - R G_0)[i][l] e_l; columns need the transpose
        L0 = cmat_transpose(cmat_neg(cmat_mul(R, spec.G[0])))
        L1 = cmat_transpose(R)
        return make_spec(F, [L0, L1])
    raise UnsupportedShape("only Drinfeld modules and the d = 2, s = 1 shape "
                           "have a motive basis here", d=spec.d, s=spec.s)


def motive_basis_change(spec: TModuleSpec, delta1):
    """Check motive_of(spec) against Id + t Delta_1 for the 2x2 family.

    Column coordinates give Id + t Delta_1^T; row coordinates give
    Id + t Delta_1.  Returns the verification record.
    """
    mot = motive_of(spec)
    F = spec.F
    target = [cmat_identity(F, 2), delta1]
    rec = {"levels": len(mot.levels), "convention": "transpose"}
    for n, L in enumerate(mot.levels):
        diff = cmat_sub(cmat_transpose(L), target[n])
        if cmat_is_zero(diff) is False:
            raise MismatchDetected("motive differs from Id + t Delta_1", level=n)
        rec[f"defect_val_{n}"] = str(cmat_val(diff)) if cmat_val(diff) != INF else "inf"
    return rec


# -- exponential -----------------------------------------------------------

@dataclass
class ExpCoeffs:
    spec: TModuleSpec
    e: list                       # e_0..e_J
    log_norms: list               # q^-j log|e_j| (None for e_j = 0)
    bounds: list                  # the explicit upper bound at each j
    passes: list                  # Neumann passes used at each level
    m: int = 0

    @property
    def J(self):
        return len(self.e) - 1

    def vals(self):
        return [cmat_val(E) for E in self.e]

    def bound_ok(self):
        return all(x is None or x <= b for x, b in zip(self.log_norms, self.bounds))

    def as_dict(self):
        return {"J": self.J, "vals": [_fmt(v) for v in self.vals()],
                "log_norms": [None if x is None else str(x) for x in self.log_norms],
                "bounds": [str(b) for b in self.bounds],
                "bound_ok": self.bound_ok(), "passes": self.passes}


def _fmt(v):
    return "inf" if v == INF else str(v)


def _log_norm_bound(spec: TModuleSpec, m):
    """log M with M >= 1 bounding |G_k| (k >= 1) and |N|, ..., |N^m|."""
    vals = [cmat_val(G) for G in spec.G[1:]]
    Nm = spec.nilpotent_part()
    P = Nm
    for _ in range(max(m, 1)):
        vals.append(cmat_val(P))
        P = cmat_mul(P, Nm)
    low = min((v for v in vals if v != INF), default=Fraction(0))
    return max(Fraction(0), -low)


def exp_coefficients(spec: TModuleSpec, J, order="jacobi") -> ExpCoeffs:
    """e_0..e_J; ``order`` is "jacobi" (fixed-point passes) or "series"."""
    F, d, q = spec.F, spec.d, spec.F.q
    m = spec.nilpotency()
    s = spec.s
    Nm = spec.nilpotent_part()
    theta = spec.theta
    e = [cmat_identity(F, d)]
    passes = [0]
    for j in range(1, J + 1):
        rhs = cmat_zero(F, d)
        for k in range(1, min(s, j) + 1):
            rhs = cmat_add(rhs, cmat_mul(spec.G[k], cmat_sigma(e[j - k], k)))
        cinv = (theta.frobenius(j) - theta).invert()
        Nj = cmat_sigma(Nm, j)

        def corr(x):
            return cmat_sub(cmat_mul(Nm, x), cmat_mul(x, Nj))

        if order == "series":
            term = cmat_scale(rhs, cinv)
            total = term
            used = 0
            for _ in range(2 * m):
                term = cmat_scale(corr(term), cinv)
                if cmat_is_zero(term) is True:
                    break
                total = cmat_add(total, term)
                used += 1
            e.append(total)
            passes.append(used + 1)
            continue
        x = cmat_scale(rhs, cinv)
        used = 1
        for _ in range(2 * m):
            nxt = cmat_scale(cmat_add(rhs, corr(x)), cinv)
            used += 1
            if cmat_is_zero(cmat_sub(nxt, x)) is True:
                x = nxt
                break
            x = nxt
        e.append(x)
        passes.append(used)
    logM = _log_norm_bound(spec, m)
    ltheta = -theta.val()
    logs, bounds = [], []
    for j, E in enumerate(e):
        v = cmat_val(E)
        logs.append(None if v == INF else -v / q ** j)
        sj = max(s, 1)
        bounds.append(-Fraction(j, sj) * ltheta
                      + Fraction(q ** j - 1, q ** j * (q - 1)) * 2 * logM + logM)
    return ExpCoeffs(spec, e, logs, bounds, passes, m)


def exp_apply(coeffs: ExpCoeffs, z, target):
    """sum_j e_j z^(j) modulo u^target, with a certified tail beyond J."""
    spec = coeffs.spec
    F, q = spec.F, spec.F.q
    vz = min(x.val_lower() for x in z)
    if vz == INF:
        return [F.zero() for _ in z]
    target = Fraction(target)
    # beyond J: val(e_j z^(j)) >= q^j (j L / s - C + val z), increasing once positive
    L = -spec.theta.val()
    logM = _log_norm_bound(spec, coeffs.m)
    C = 2 * logM / (q - 1) + logM
    j1 = coeffs.J + 1
    slope = Fraction(j1, max(spec.s, 1)) * L - C + vz
    if slope <= 0 or q ** j1 * slope < target:
        raise TailNotDominated("tail beyond the computed coefficients is not "
                               "below the target precision",
                               J=coeffs.J, target=str(target))
    col = [[x] for x in z]
    acc = cmat_zero(F, spec.d, 1)
    for j, E in enumerate(coeffs.e):
        if cmat_is_zero(E) is True:
            continue
        acc = cmat_add(acc, cmat_mul(E, cmat_sigma(col, j)))
    tu = F.units(target)
    return [row[0].with_prec(tu) if row[0].prec is None or row[0].prec > tu else row[0]
            for row in acc]


def functional_equation_check(spec: TModuleSpec, coeffs: ExpCoeffs):
    """Defects e_j G_0^(j) - sum_k G_k e_(j-k)^(k) for j <= J.

    A level counts as resolved when its defect is zero to a precision
    strictly beyond the size of the terms being compared.
    """
    defects = []
    for j in range(coeffs.J + 1):
        lhs = cmat_mul(coeffs.e[j], cmat_sigma(spec.G[0], j))
        rhs = cmat_zero(spec.F, spec.d)
        for k in range(0, min(len(spec.G) - 1, j) + 1):
            rhs = cmat_add(rhs, cmat_mul(spec.G[k], cmat_sigma(coeffs.e[j - k], k)))
        D = cmat_sub(lhs, rhs)
        scale = min(cmat_val(lhs), cmat_val(rhs))
        defects.append((cmat_is_zero(D), cmat_val(D), scale))
    nonzero = [j for j, (z, _, _) in enumerate(defects) if z is False]
    unresolved = [j for j, (z, v, sc) in enumerate(defects)
                  if z is not False and z is not True and sc != INF and v <= sc]
    return {"ok": not nonzero and not unresolved,
            "defect_vals": [_fmt(v) for _, v, _ in defects],
            "nonzero_at": nonzero, "unresolved_at": unresolved}


def kernel_valuations(spec: TModuleSpec, coeffs: ExpCoeffs):
    """Newton polygon of sum e_j z^(q^j); roots of valuation -slope."""
    if spec.d != 1:
        raise UnsupportedShape("kernel valuations need d = 1")
    q = spec.F.q
    pts = [(q ** j, cmat_val(E)) for j, E in enumerate(coeffs.e)
           if cmat_val(E) != INF]
    if len(pts) < 2:
        from .valued_field import NewtonPolygon
        return NewtonPolygon([], pts)
    return newton_polygon(pts)


def kernel_rank_estimate(poly, q):
    """log_q(1 + length of the first segment) when it is an integer."""
    if not poly.segments:
        return 0
    n = int(poly.segments[0][1]) + 1
    r = round(math.log(n, q))
    return r if q ** r == n else None


# -- torsion points -------------------------------------------------------

@dataclass
class TorsionPointData:
    N: int
    log_counts: list              # log_q |E[t^k]| for k = 1..N+1
    polygon: object = None        # Newton polygon of phi_{t^(N+1)} (d = 1)
    root_valuations: list = field(default_factory=list)
    values: list = None

    @property
    def count_log(self):
        return self.log_counts[-1]

    def as_dict(self, q):
        out = {"N": self.N, "log_counts": self.log_counts,
               "count": q ** self.count_log,
               "root_valuations": [[str(v), str(n)] for v, n in self.root_valuations]}
        if self.values is not None:
            from .valued_field import format_literal
            out["values"] = [format_literal(x) for x in self.values]
        return out


def _log_count(spec: TModuleSpec, P):
    q = spec.F.q
    top = max(k for k, Pk in enumerate(P) if cmat_is_zero(Pk) is not True)
    if spec.d == 1:
        pts = [(q ** k, P[k][0][0].val()) for k in range(top + 1) if P[k][0][0].terms]
        return top, (newton_polygon(pts) if len(pts) > 1 else None)
    from .tate_series import cmat_det
    if cmat_det(P[top]).is_zero() is not False or cmat_det(P[0]).is_zero() is not False:
        raise UnsupportedShape("count mode needs invertible top and constant terms")
    return spec.d * top, None


def torsion_points(spec: TModuleSpec, N, values=True) -> TorsionPointData:
    """Roots of phi_(t^(N+1)); counts from the sigma-degree, valuations from
    the Newton polygon (d = 1), values for the binomial case r = 1, N = 0."""
    if spec.d not in (1, 2):
        raise UnsupportedShape("torsion points need d <= 2")
    logs, poly = [], None
    P = None
    for k in range(1, N + 2):
        P = spec.G if P is None else twisted_compose(spec.G, P)
        lc, poly = _log_count(spec, P)
        logs.append(lc)
    out = TorsionPointData(N, logs, poly)
    if poly is not None:
        out.root_valuations = poly.root_valuations()
    if values and spec.d == 1 and spec.s == 1 and N == 0:
        g1 = spec.G[1][0][0]
        rs = kummer_root(-(spec.theta / g1), spec.F.q - 1)
        out.values = [spec.F.zero(m=rs.m)] + list(rs.roots)
    return out


def torsion_comparison(spec: TModuleSpec, motive: TauSpec, N):
    """Compare E[t^(N+1)] with the invariants of the motive mod t^(N+1)."""
    from .torsion import torsion_invariants
    pts = torsion_points(spec, N)
    basis = torsion_invariants(motive, N)
    q = spec.F.q
    if pts.log_counts != basis.kernel_dims:
        raise MismatchDetected("module shapes differ",
                               points=pts.log_counts, invariants=basis.kernel_dims)
    rep = {"N": N, "count": q ** pts.count_log, "shape": pts.log_counts,
           "invariant_shape": basis.kernel_dims, "value_mode": False}
    if pts.values is not None:
        # h_s(f) = f(s): f = c * 1 with c the generator's constant term
        c = basis.phi.rows[0][0].coeffs[0]
        pairings = []
        for x in pts.values[1:]:
            val = c * x
            if any(ex != 0 for ex, _ in val.terms) or not val.terms:
                raise MismatchDetected("h_s(f) is not a nonzero constant", s=repr(x))
            code = spec.F.restrict(val.terms[0][1], val.m, 1)
            if code is None:
                raise MismatchDetected("h_s(f) is not in F_q", s=repr(x))
            pairings.append(code)
        if len(set(pairings)) != len(pairings):
            raise MismatchDetected("matching is not injective")
        rep["value_mode"] = True
        rep["pairing_codes"] = pairings
    return rep


# -- Lie quotient ---------------------------------------------------------

def _poly_mul(a, b, F):
    out = [F.zero() for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _det_poly(mot: TauSpec):
    """det Delta as a list of t-coefficients (r <= 2)."""
    F = mot.F
    L = mot.levels

    def entry(i, j):
        return [lv[i][j] for lv in L]

    if mot.r == 1:
        return entry(0, 0)
    if mot.r == 2:
        a = _poly_mul(entry(0, 0), entry(1, 1), F)
        b = _poly_mul(entry(0, 1), entry(1, 0), F)
        return [x - y for x, y in zip(a, b)]
    raise UnsupportedShape("determinant polynomial only for rank <= 2")


def _rref(rows):
    """Reduced row echelon form over K; entries with no terms count as zero."""
    A = [list(r) for r in rows]
    pivots = []
    rk = 0
    ncols = len(A[0]) if A else 0
    for c in range(ncols):
        piv = min((i for i in range(rk, len(A)) if A[i][c].terms),
                  key=lambda i: A[i][c].val(), default=None)
        if piv is None:
            continue
        A[rk], A[piv] = A[piv], A[rk]
        iv = A[rk][c].invert()
        A[rk] = [x * iv for x in A[rk]]
        for i in range(len(A)):
            if i != rk and A[i][c].terms:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[rk])]
        pivots.append(c)
        rk += 1
    return A[:rk], pivots


def _k_rank(M):
    return len(_rref(M)[1]) if M else 0


def lie_quotient_check(spec: TModuleSpec, motive: TauSpec = None):
    """t-action on M/tau M versus G_0 (same Jordan type at theta)."""
    F, d = spec.F, spec.d
    theta = spec.theta
    if motive is None:
        if spec.d == 1 and spec.s == 0:
            return {"dim": 1, "t_action": [["" + _lit(spec.G[0][0][0])]],
                    "ok": True, "note": "rank 0: quotient is K with t acting by theta"}
        motive = motive_of(spec)
    dp = _det_poly(motive)
    while len(dp) > 1 and not dp[-1].terms:
        dp.pop()
    delta = len(dp) - 1
    r = motive.r
    lead_inv = dp[-1].invert()
    monic = [x * lead_inv for x in dp]

    def reduce(poly):
        poly = list(poly) + [F.zero()] * max(0, delta - len(poly))
        for k in range(len(poly) - 1, delta - 1, -1):
            c = poly[k]
            if not c.terms:
                continue
            for i in range(delta + 1):
                poly[k - delta + i] = poly[k - delta + i] - c * monic[i]
        return poly[:delta]

    def vec_of(cols):
        """cols[i] = t-polynomial of coordinate i -> coordinate vector."""
        out = []
        for i in range(r):
            out.extend(reduce(cols[i]))
        return out

    Lc = motive.levels
    image = []
    for j in range(r):
        base = [[lv[i][j] for lv in Lc] for i in range(r)]
        for a in range(delta):
            shifted = [[F.zero()] * a + col for col in base]
            image.append(vec_of(shifted))
    R, piv = _rref(image)
    free = [c for c in range(r * delta) if c not in piv]
    if len(free) != d:
        raise MismatchDetected("quotient dimension differs from d",
                               dim=len(free), d=d)

    def coords(vec):
        v = list(vec)
        for row, p in zip(R, piv):
            if v[p].terms:
                f = v[p]
                v = [x - f * y for x, y in zip(v, row)]
        return [v[c] for c in free]

    T = []
    for c in free:
        i, a = divmod(c, delta)
        cols = [[F.zero()] for _ in range(r)]
        cols[i] = [F.zero()] * (a + 1) + [F.one()]
        T.append(coords(vec_of(cols)))
    T = cmat_transpose(T)              # column k = image of basis vector k
    shift = cmat_sub(T, cmat_scale(cmat_identity(F, d), theta))
    Nm = spec.nilpotent_part()
    ranks_T, ranks_N = [], []
    PT, PN = shift, Nm
    for _ in range(d):
        ranks_T.append(_k_rank(PT))
        ranks_N.append(_k_rank(PN))
        PT, PN = cmat_mul(PT, shift), cmat_mul(PN, Nm)
    ok = ranks_T == ranks_N
    if not ok:
        raise MismatchDetected("t on M/tau M is not of the Jordan type of G_0",
                               quotient=ranks_T, lie=ranks_N)
    return {"dim": d, "t_action": [[_lit(x) for x in row] for row in T],
            "ranks_quotient": ranks_T, "ranks_lie": ranks_N, "ok": ok}


def _lit(x):
    from .valued_field import format_literal
    return format_literal(x)
