"""Truncated Tate-algebra elements sum a_n t^n and matrices over them.

Everything is graded by powers of t and truncated at a hard t-precision N:
results hold modulo t^(N+1).  Coefficients are :class:`ValSeries`.  Norms are
reported additively: ``gauss_val`` is min_n val(a_n), so |x| = exp(-gauss_val).

Constant matrices (lists of lists of ValSeries) get their own helpers at the
bottom; the solvers use them for the per-level equations.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import permutations

from .errors import DimensionMismatch, SingularMatrix
from .valued_field import INF, ValSeries, ValuedField


class TateElem:
    """a_0 + a_1 t + ... + a_N t^N  mod t^(N+1)."""

    __slots__ = ("F", "coeffs", "N", "asserted")

    def __init__(self, F: ValuedField, coeffs, N=None, asserted=False):
        self.F = F
        coeffs = list(coeffs)
        if N is None:
            N = max(len(coeffs) - 1, 0)
        coeffs = coeffs[:N + 1]
        while len(coeffs) < N + 1:
            coeffs.append(F.zero())
        self.coeffs = coeffs
        self.N = N
        # True when the caller vouches that |a_n| -> 0 beyond the stored range
        self.asserted = asserted

    @classmethod
    def const(cls, x: ValSeries, N):
        return cls(x.F, [x], N)

    def __getitem__(self, n):
        return self.coeffs[n]

    def gauss_val(self):
        """(min valuation, first index attaining it)."""
        best, idx = INF, None
        for n, a in enumerate(self.coeffs):
            v = a.val_lower()
            if v < best:
                best, idx = v, n
        return best, idx

    def _align(self, other):
        return min(self.N, other.N)

    def __add__(self, other):
        N = self._align(other)
        return TateElem(self.F, [a + b for a, b in zip(self.coeffs, other.coeffs)], N)

    def __neg__(self):
        return TateElem(self.F, [-a for a in self.coeffs], self.N)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ValSeries):
            return TateElem(self.F, [a * other for a in self.coeffs], self.N)
        N = self._align(other)
        out = []
        for n in range(N + 1):
            acc = self.F.zero()
            for i in range(n + 1):
                a, b = self.coeffs[i], other.coeffs[n - i]
                if a.is_zero() is True or b.is_zero() is True:
                    continue
                acc = acc + a * b
            out.append(acc)
        return TateElem(self.F, out, N)

    def sigma(self):
        return TateElem(self.F, [a.frobenius() for a in self.coeffs], self.N,
                        self.asserted)

    def shift(self, k):
        """Multiply by t^k (k >= 0)."""
        return TateElem(self.F, [self.F.zero()] * k + self.coeffs, self.N)

    def is_zero(self):
        flags = [a.is_zero() for a in self.coeffs]
        if any(f is False for f in flags):
            return False
        return flags[0] if all(f is True for f in flags) else flags[-1]

    def __repr__(self):
        parts = [f"({a!r})t^{n}" for n, a in enumerate(self.coeffs) if a.terms]
        return "TateElem(" + (" + ".join(parts) or "0") + f"; N={self.N})"


def entire_growth_check(x: TateElem, rho_log):
    """Finite-range test that |a_n| rho^n is eventually non-increasing.

    ``rho_log`` is log(rho) in valuation units (rho = |u|^(-rho_log)).  The
    sequence reported is log|a_n| + n*rho_log = -val(a_n) + n*rho_log.
    """
    rho_log = Fraction(rho_log)
    if x.N < 4:
        raise ValueError("growth check needs t-precision at least 4")
    seq = []
    for n, a in enumerate(x.coeffs):
        v = a.val_lower()
        seq.append(None if v == INF else -v + n * rho_log)
    # smallest tail start from which the finite values never increase
    tail = len(seq)
    for start in range(len(seq) - 1, -1, -1):
        vals = [s for s in seq[start:] if s is not None]
        if all(b <= a for a, b in zip(vals, vals[1:])):
            tail = start
        else:
            break
    ok = tail < len(seq) - 2
    return {"sequence": seq, "tail_start": tail,
            "eventually_non_increasing": ok, "rho_log": rho_log}


class TateMatrix:
    """Matrix of TateElem with a common t-precision."""

    def __init__(self, rows):
        self.rows = [list(r) for r in rows]
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else 0
        if any(len(r) != self.ncols for r in self.rows):
            raise DimensionMismatch("ragged matrix")
        self.F = self.rows[0][0].F
        self.N = min(e.N for r in self.rows for e in r)

    @classmethod
    def from_levels(cls, F, levels, N=None):
        """Build from [M_0, M_1, ...] constant matrices (M_n the t^n part)."""
        if N is None:
            N = len(levels) - 1
        r, c = len(levels[0]), len(levels[0][0])
        rows = []
        for i in range(r):
            rows.append([TateElem(F, [lv[i][j] for lv in levels], N)
                         for j in range(c)])
        return cls(rows)

    @classmethod
    def identity(cls, F, r, N):
        return cls.from_levels(F, [cmat_identity(F, r)], N)

    def level(self, n):
        """The t^n coefficient as a constant matrix."""
        return [[e.coeffs[n] if n <= e.N else self.F.zero() for e in row]
                for row in self.rows]

    def levels(self):
        return [self.level(n) for n in range(self.N + 1)]

    def __matmul__(self, other):
        if self.ncols != other.nrows:
            raise DimensionMismatch("matrix shapes do not compose")
        N = min(self.N, other.N)
        A, B = self.levels(), other.levels()
        out = []
        for n in range(N + 1):
            acc = None
            for i in range(n + 1):
                term = cmat_mul(A[i], B[n - i])
                acc = term if acc is None else cmat_add(acc, term)
            out.append(acc)
        return TateMatrix.from_levels(self.F, out, N)

    def __add__(self, other):
        return TateMatrix([[a + b for a, b in zip(r1, r2)]
                           for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return TateMatrix([[a - b for a, b in zip(r1, r2)]
                           for r1, r2 in zip(self.rows, other.rows)])

    def sigma(self):
        return TateMatrix([[e.sigma() for e in r] for r in self.rows])

    def gauss_val(self):
        return min(e.gauss_val()[0] for r in self.rows for e in r)

    def transpose(self):
        return TateMatrix([list(c) for c in zip(*self.rows)])

    def column(self, j):
        return [r[j] for r in self.rows]

    def __repr__(self):
        return f"TateMatrix({self.nrows}x{self.ncols}, N={self.N})"


def det(M: TateMatrix) -> TateElem:
    """Leibniz expansion; fine for the small ranks used here."""
    if M.nrows != M.ncols:
        raise DimensionMismatch("determinant of a non-square matrix")
    n = M.nrows
    total = TateElem(M.F, [M.F.zero()], M.N)
    for perm in permutations(range(n)):
        sign = _perm_sign(perm)
        term = TateElem(M.F, [M.F.one()], M.N)
        for i, j in enumerate(perm):
            term = term * M.rows[i][j]
        total = total + term if sign > 0 else total - term
    return total


def _perm_sign(perm):
    sign, seen = 1, set()
    for i in range(len(perm)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def matinv(M: TateMatrix) -> TateMatrix:
    """Inverse mod t^(N+1) via the Neumann series in the t-divisible part."""
    if M.nrows != M.ncols:
        raise DimensionMismatch("inverse of a non-square matrix")
    F, N = M.F, M.N
    levels = M.levels()
    inv0 = cmat_inverse(levels[0])
    # M = M0 (Id + X) with X = M0^{-1}(M - M0), X divisible by t
    X = [cmat_identity(F, M.nrows, zero=True)] + [cmat_mul(inv0, L) for L in levels[1:]]
    negX = TateMatrix.from_levels(F, [cmat_neg(L) for L in X], N)
    total = TateMatrix.identity(F, M.nrows, N)
    power = TateMatrix.identity(F, M.nrows, N)
    for _ in range(N):
        power = power @ negX
        total = total + power
    return total @ TateMatrix.from_levels(F, [inv0], N)


# -- constant matrices over ValSeries --------------------------------------

def cmat_identity(F, r, zero=False):
    return [[F.one() if (i == j and not zero) else F.zero() for j in range(r)]
            for i in range(r)]


def cmat_zero(F, r, c=None):
    c = r if c is None else c
    return [[F.zero() for _ in range(c)] for _ in range(r)]


def cmat_mul(A, B):
    F = A[0][0].F
    out = []
    for row in A:
        new = []
        for j in range(len(B[0])):
            acc = F.zero()
            for k, a in enumerate(row):
                b = B[k][j]
                if a.is_zero() is True or b.is_zero() is True:
                    continue
                acc = acc + a * b
            new.append(acc)
        out.append(new)
    return out


def cmat_add(A, B):
    return [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(A, B)]


def cmat_sub(A, B):
    return [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(A, B)]


def cmat_neg(A):
    return [[-a for a in r] for r in A]


def cmat_sigma(A, times=1):
    return [[a.frobenius(times) for a in r] for r in A]


def cmat_scale(A, x):
    return [[a * x for a in r] for r in A]


def cmat_transpose(A):
    return [list(c) for c in zip(*A)]


def cmat_val(A):
    """min val_lower over entries (INF for the exact zero matrix)."""
    return min((a.val_lower() for r in A for a in r), default=INF)


def cmat_with_prec(A, prec):
    return [[a.with_prec(prec) for a in r] for r in A]


def cmat_is_zero(A):
    flags = [a.is_zero() for r in A for a in r]
    if any(f is False for f in flags):
        return False
    if all(f is True for f in flags):
        return True
    return next(f for f in flags if f is not True)


def cmat_det(A):
    n = len(A)
    F = A[0][0].F
    total = F.zero()
    for perm in permutations(range(n)):
        term = F.one()
        for i, j in enumerate(perm):
            term = term * A[i][j]
        total = total + term if _perm_sign(perm) > 0 else total - term
    return total


def cmat_inverse(A):
    """Gauss-Jordan with largest-norm pivots."""
    n = len(A)
    F = A[0][0].F
    M = [list(r) + [F.one() if i == j else F.zero() for j in range(n)]
         for i, r in enumerate(A)]
    for c in range(n):
        best, piv = INF, None
        for i in range(c, n):
            if M[i][c].terms and M[i][c].val() < best:
                best, piv = M[i][c].val(), i
        if piv is None:
            raise SingularMatrix("constant matrix is singular to precision")
        M[c], M[piv] = M[piv], M[c]
        iv = M[c][c].invert()
        M[c] = [x * iv for x in M[c]]
        for i in range(n):
            if i != c and M[i][c].terms:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [r[n:] for r in M]


def cmat_lift(A, m):
    return [[a.lift(m) for a in r] for r in A]


def cmat_level(A):
    from math import lcm
    m = 1
    for r in A:
        for a in r:
            m = lcm(m, a.m)
    return m
