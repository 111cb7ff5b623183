"""Torsion modulo t^(N+1): invariants, the duality pairing, torsor twists.

Modulo t^(N+1) a section f = f_0 + ... + f_N t^N is a stacked vector of
length s = r(N+1), and tau acts by the block lower-triangular matrix whose
(n, k) block is Delta_{n-k}.  The invariants are then the F_q-span of the
columns of one invertible solution X of X = Delta_s sigma(X) (a Lang
equation of size s), and multiplication by t is the block shift S.  Since
S maps invariants to invariants, S X = X T for a nilpotent T over F_q,
which carries the whole F_q[t]/t^(N+1)-module structure.

Torsion points are F_q-linear maps h with h(tau f) = h(f)^q; in
coordinates these are rows eta with eta Delta_s = sigma(eta), again a Lang
equation, solved independently of X.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (BasesInequivalent, DimensionMismatch,
                     ExtensionCapExceeded, HypothesisViolated,
                     LangSearchExhausted, MismatchDetected, NotInvertible,
                     SingularMatrix)
from .gf import gf_det, gf_inverse, gf_rank
from .tate_series import (TateElem, TateMatrix, cmat_det, cmat_inverse,
                          cmat_is_zero, cmat_level, cmat_lift, cmat_mul,
                          cmat_transpose, det)
from .tau_solver import TauSpec, lang_solve, residual


@dataclass
class TorsionBasis:
    """Generators of the invariants of F/t^(N+1)F and the data behind them."""

    spec: TauSpec
    N: int
    phi: TateMatrix          # r x r, column j is the j-th generator
    full: list               # s x s invertible solution, columns span over F_q
    tmat: list               # action of t on the columns of ``full`` (F_q codes)
    gens: list               # indices of the generating columns of ``full``
    kernel_dims: list        # dim ker T^k for k = 1..N+1
    trace: list = field(default_factory=list)
    unit_identity_val: object = None

    @property
    def r(self):
        return self.spec.r

    def generator_vector(self, j):
        """Stacked s-vector of the j-th generator."""
        return [self.phi.rows[i][j].coeffs[n]
                for n in range(self.N + 1) for i in range(self.r)]

    def as_dict(self):
        return {"N": self.N, "rank": self.r, "kernel_dims": self.kernel_dims,
                "generators": self.gens, "tower": self.trace,
                "free": is_free_shape(self.kernel_dims, self.r)}


@dataclass
class PairingMatrix:
    """Gram matrix over F_q[t]/t^(N+1), entries as coefficient lists."""

    gram: list               # gram[i][j] = [c_0, ..., c_N] (F_q codes or None)
    det: list                # coefficients of the determinant
    fq_valued: bool
    perfect: bool

    def as_dict(self):
        return {"gram": self.gram, "det": self.det,
                "fq_valued": self.fq_valued, "perfect": self.perfect}


def is_free_shape(kernel_dims, r):
    return kernel_dims == [r * k for k in range(1, len(kernel_dims) + 1)]


# -- stacked matrices --------------------------------------------------------

def stacked_delta(spec: TauSpec, N):
    """The s x s matrix of tau on F/t^(N+1)F, s = r(N+1)."""
    F, r = spec.F, spec.r
    s = r * (N + 1)
    out = [[F.zero() for _ in range(s)] for _ in range(s)]
    for n in range(N + 1):
        for k in range(n + 1):
            L = spec.level(n - k)
            for i in range(r):
                for j in range(r):
                    out[n * r + i][k * r + j] = L[i][j]
    return out


def shift_matrix(F, r, N, transpose=False):
    s = r * (N + 1)
    out = [[F.zero() for _ in range(s)] for _ in range(s)]
    for idx in range(r, s):
        i, j = (idx, idx - r) if not transpose else (idx - r, idx)
        out[i][j] = F.one()
    return out


def _const_codes(A, where):
    """F_q codes of a matrix whose entries must be exact F_q constants."""
    F = A[0][0].F
    out = []
    for row in A:
        new = []
        for a in row:
            if any(ex != 0 for ex, _ in a.terms):
                raise MismatchDetected(f"{where}: entry is not a constant", entry=repr(a))
            c = a.terms[0][1] if a.terms else 0
            c1 = F.restrict(c, a.m, 1)
            if c1 is None:
                raise MismatchDetected(f"{where}: entry is not in F_q", code=c)
            new.append(c1)
        out.append(new)
    return out


def _fq_or_none(a):
    """Code in F_q if ``a`` is an exact-to-precision F_q constant, else None."""
    if any(ex != 0 for ex, _ in a.terms):
        return None
    c = a.terms[0][1] if a.terms else 0
    return a.F.restrict(c, a.m, 1)


def _kernel_dims(lv, T, N):
    s = len(T)
    dims = []
    P = [[1 if i == j else 0 for j in range(s)] for i in range(s)]
    for _ in range(N + 1):
        P = _gf_mul(lv, P, T)
        dims.append(s - gf_rank(lv, P))
    return dims


def _gf_mul(lv, A, B):
    n, m = len(A), len(B[0])
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        for k in range(len(B)):
            a = A[i][k]
            if not a:
                continue
            for j in range(m):
                if B[k][j]:
                    out[i][j] = lv.add(out[i][j], lv.mul(a, B[k][j]))
    return out


def _complement(lv, T, r):
    """r standard basis indices completing the image of T to F_q^s."""
    s = len(T)
    image = [[T[i][j] for i in range(s)] for j in range(s)]  # columns as rows
    base = gf_rank(lv, image)
    chosen, rows = [], list(image)
    for idx in range(s):
        e = [1 if i == idx else 0 for i in range(s)]
        if gf_rank(lv, rows + [e]) > base + len(chosen):
            rows.append(e)
            chosen.append(idx)
        if len(chosen) == r:
            break
    return chosen


def _lang(M):
    try:
        return lang_solve(M)
    except LangSearchExhausted as exc:
        if "levels_tried" in exc.context:
            raise ExtensionCapExceeded(str(exc), **exc.context) from exc
        raise


# -- invariants ---------------------------------------------------------------

def torsion_invariants(spec: TauSpec, N) -> TorsionBasis:
    """Basis of (F/t^(N+1)F)^tau as a module over F_q[t]/t^(N+1)."""
    F, r = spec.F, spec.r
    if cmat_det(spec.level(0)).is_zero() is not False:
        raise NotInvertible("tau is not bijective modulo t")
    Ds = stacked_delta(spec, N)
    lang = _lang(Ds)
    X = lang.X
    try:
        Xinv = cmat_inverse(X)
    except SingularMatrix as exc:
        raise MismatchDetected("Lang solution is not invertible") from exc
    S = shift_matrix(F, r, N)
    T = _const_codes(cmat_mul(Xinv, cmat_mul(S, X)), "t-action")
    lv1 = F.level(1)
    kdims = _kernel_dims(lv1, T, N)
    gens = _complement(lv1, T, r)
    if len(gens) != r:
        raise MismatchDetected("invariants need more than r generators", gens=gens)
    levels = []
    for n in range(N + 1):
        levels.append([[X[n * r + i][g] for g in gens] for i in range(r)])
    phi = TateMatrix.from_levels(F, levels, N)
    res = residual(spec, levels)
    if any(cmat_is_zero(R) is False for R in res):
        raise MismatchDetected("generator columns are not invariant")
    trace = list(lang.trace) + [{"step": "stacked", "size": len(Ds), "level": lang.m}]
    basis = TorsionBasis(spec, N, phi, X, T, gens, kdims, trace)
    basis.unit_identity_val = unit_identity(basis)
    return basis


def unit_identity(basis: TorsionBasis):
    """Valuation of det(Delta_s) det(X)^(q-1) - 1 for the stacked solution X."""
    F = basis.spec.F
    d0 = cmat_det(basis.spec.level(0))
    dD = d0 ** (basis.N + 1)          # Delta_s is block triangular
    dX = elim_det(basis.full)
    diff = dD * dX ** (F.q - 1) - F.one()
    return diff.val_lower()


def elim_det(A):
    """Determinant by elimination with smallest-valuation pivots."""
    F = A[0][0].F
    M = [list(r) for r in A]
    n = len(M)
    out = F.one()
    for c in range(n):
        piv = min((i for i in range(c, n) if M[i][c].terms),
                  key=lambda i: M[i][c].val(), default=None)
        if piv is None:
            return F.zero(prec=min((F.frac(a.prec) for r in M for a in r
                                    if a.prec is not None), default=None))
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            out = -out
        out = out * M[c][c]
        iv = M[c][c].invert()
        for i in range(c + 1, n):
            if M[i][c].terms:
                f = M[i][c] * iv
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return out


def stacked_column(col_levels):
    """[[f_0 entries], [f_1 entries], ...] -> stacked vector."""
    return [a for lvl in col_levels for a in lvl]


# -- torsion points and the pairing -------------------------------------------

@dataclass
class TorsionPoints:
    full: list          # s x s, column i is eta_i^T with eta Delta_s = sigma(eta)
    tmat: list          # action of t on the columns (F_q codes)
    gens: list
    m: int

    def row(self, i):
        return [r[i] for r in self.full]


def torsion_points_dual(spec: TauSpec, N) -> TorsionPoints:
    """Solve eta Delta_s = sigma(eta), i.e. eta^T = (Delta_s^-1)^T sigma(eta^T)."""
    F, r = spec.F, spec.r
    Ds = stacked_delta(spec, N)
    M = cmat_transpose(cmat_inverse(Ds))
    lang = _lang(M)
    H = lang.X
    St = shift_matrix(F, r, N, transpose=True)
    T = _const_codes(cmat_mul(cmat_inverse(H), cmat_mul(St, H)), "dual t-action")
    gens = _complement(F.level(1), T, r)
    return TorsionPoints(H, T, gens, lang.m)


def _dot(u, v):
    F = u[0].F
    acc = F.zero()
    for a, b in zip(u, v):
        if a.is_zero() is True or b.is_zero() is True:
            continue
        acc = acc + a * b
    return acc


def _shift_vec(v, r, a):
    F = v[0].F
    return [F.zero()] * (r * a) + v[:len(v) - r * a]


def pairing_check(basis: TorsionBasis, points: TorsionPoints = None,
                  columns=None) -> PairingMatrix:
    """Gram matrix of (h, f) -> (a -> h(a f)) on generators.

    The functional a -> h(af) on F_q[t]/t^(N+1) is identified with
    g = sum_k h(t^(N-k) f) t^k.  ``columns`` overrides the invariant
    generators (stacked vectors), for probing degenerate inputs.
    """
    spec, N, r = basis.spec, basis.N, basis.r
    F = spec.F
    if points is None:
        points = torsion_points_dual(spec, N)
    s = r * (N + 1)
    if len(points.full) != s:
        raise DimensionMismatch("torsion points and invariants disagree in size")
    fvecs = columns if columns is not None else [basis.generator_vector(j)
                                                  for j in range(r)]
    if len(fvecs) != r or any(len(v) != s for v in fvecs):
        raise DimensionMismatch("need r stacked columns of length r(N+1)")
    hvecs = [points.row(i) for i in points.gens]
    gram_vals = []
    fq_ok = True
    for h in hvecs:
        row = []
        for f in fvecs:
            coeffs = []
            for k in range(N + 1):
                coeffs.append(_dot(h, _shift_vec(f, r, N - k)))
            row.append(coeffs)
        gram_vals.append(row)
    gram = []
    for row in gram_vals:
        new = []
        for coeffs in row:
            codes = [_fq_or_none(c) for c in coeffs]
            if any(c is None for c in codes):
                fq_ok = False
            new.append(codes)
        gram.append(new)
    # determinant over K[t]/t^(N+1); a unit iff the constant term is nonzero
    G = TateMatrix([[TateElem(F, coeffs, N) for coeffs in row] for row in gram_vals])
    d = det(G)
    dcodes = [_fq_or_none(c) for c in d.coeffs]
    const_nonzero = d.coeffs[0].is_zero() is False
    return PairingMatrix(gram, dcodes, fq_ok, fq_ok and const_nonzero)


# -- torsor twists ----------------------------------------------------------

def conjugate_basis(basis: TorsionBasis, times=1) -> TorsionBasis:
    """Apply the coefficient Galois action c -> c^(q^times) to a basis."""
    spec = basis.spec
    for L in spec.levels:
        for row in L:
            for a in row:
                if (a.coeff_frobenius(times) - a).is_zero() is False:
                    raise HypothesisViolated("Delta is not fixed by the Galois action")
    phi = TateMatrix([[TateElem(e.F, [c.coeff_frobenius(times) for c in e.coeffs], e.N)
                       for e in row] for row in basis.phi.rows])
    full = [[a.coeff_frobenius(times) for a in row] for row in basis.full]
    out = TorsionBasis(spec, basis.N, phi, full, basis.tmat, basis.gens,
                       basis.kernel_dims, basis.trace + [{"step": "galois", "times": times}])
    out.unit_identity_val = basis.unit_identity_val
    return out


def torsor_twist_check(b1: TorsionBasis, b2: TorsionBasis):
    """Matrix M over F_q[t]/t^(N+1) with Phi_2 = Phi_1 M; M must be invertible.

    Returned as M[i][j] = [c_0, ..., c_N] (F_q codes).
    """
    if b1.N != b2.N or b1.r != b2.r:
        raise DimensionMismatch("bases at different levels or ranks")
    F, N, r = b1.spec.F, b1.N, b1.r
    lv = F.level(1)
    X1inv = cmat_inverse(b1.full)
    s = r * (N + 1)
    # F_q coordinates (w.r.t. columns of full) of t^a g_j for the first basis
    T = b1.tmat
    cols = []
    for a in range(N + 1):
        for j in range(r):
            v = [1 if i == b1.gens[j] else 0 for i in range(s)]
            for _ in range(a):
                v = [sum_codes(lv, [lv.mul(T[i][k], v[k]) for k in range(s)])
                     for i in range(s)]
            cols.append(v)
    C1 = [[cols[c][i] for c in range(s)] for i in range(s)]
    if gf_det(lv, C1) == 0:
        raise BasesInequivalent("first basis does not generate")
    C1inv = gf_inverse(lv, C1)
    M = [[[0] * (N + 1) for _ in range(r)] for _ in range(r)]
    for j in range(r):
        v = [[a] for a in b2.generator_vector(j)]
        m = max(cmat_level(X1inv), cmat_level(v))
        coords = cmat_mul(cmat_lift(X1inv, m), cmat_lift(v, m))
        codes = [_fq_or_none(c[0]) for c in coords]
        if any(c is None for c in codes):
            raise BasesInequivalent("a generator of the second basis is not an "
                                    "F_q-combination of invariants of the first")
        y = [sum_codes(lv, [lv.mul(C1inv[i][k], codes[k]) for k in range(s)])
             for i in range(s)]
        for a in range(N + 1):
            for i in range(r):
                M[i][j][a] = y[a * r + i]
    M0 = [[M[i][j][0] for j in range(r)] for i in range(r)]
    if gf_det(lv, M0) == 0:
        raise BasesInequivalent("change of basis is not invertible mod t")
    return M


def sum_codes(lv, items):
    acc = 0
    for x in items:
        if x:
            acc = lv.add(acc, x)
    return acc


# -- brute force oracle -------------------------------------------------------

def brute_force_count(spec: TauSpec, N, k):
    """Count solutions mod t^(N+1) with entries in F_{q^k} by enumeration.

    Only for Delta with constant coefficients (no u-terms).  Level n is
    solved by trying every vector of F_{q^k}^r against
    x - Delta_0 sigma(x) = sum_{nu >= 1} Delta_nu sigma(x_{n-nu}).
    """
    F, r = spec.F, spec.r
    lv = F.level(k)
    q = F.q
    levels = []
    for n in range(N + 1):
        L = spec.level(n)
        codes = []
        for row in L:
            new = []
            for a in row:
                if any(ex != 0 for ex, _ in a.terms):
                    raise HypothesisViolated("brute force needs constant Delta")
                c = a.terms[0][1] if a.terms else 0
                new.append(F.embed(c, a.m, k) if c else 0)
            codes.append(new)
        levels.append(codes)

    def apply(A, x):
        return [sum_codes(lv, [lv.mul(A[i][j], lv.frob(x[j], q)) for j in range(r)])
                for i in range(r)]

    vectors = list(itertools.product(range(lv.size), repeat=r))
    partial = [[]]
    for n in range(N + 1):
        nxt = []
        for prev in partial:
            rhs = [0] * r
            for nu in range(1, n + 1):
                term = apply(levels[nu], prev[n - nu])
                rhs = [lv.add(a, b) for a, b in zip(rhs, term)]
            for x in vectors:
                lhs = apply(levels[0], list(x))
                lhs = [lv.sub(a, b) for a, b in zip(x, lhs)]
                if lhs == rhs:
                    nxt.append(prev + [list(x)])
        partial = nxt
    return len(partial)
