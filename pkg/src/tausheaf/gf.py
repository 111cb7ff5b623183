"""Finite fields F_{p^k} as a compatible tower.

Elements are plain ints ("codes"): the base-p digits of a code are the
coordinates in the polynomial basis 1, x, x^2, ... of the level.  The
generator of every level is chosen so that its norm down to each subfield
is the generator of that subfield (the Conway compatibility condition),
which makes the embedding F_{p^j} -> F_{p^k} a pure rescaling of discrete
logarithms.  The F_p constants therefore carry the same code at every
level.

Arithmetic uses exp/log tables; odd characteristic adds through Zech
logarithms.  Fields above ``MAX_FIELD_SIZE`` elements are refused.
"""
from __future__ import annotations

import itertools
from math import gcd

from sympy import factorint
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_irreducible_p, gf_pow_mod
from sympy.polys.matrices import DomainMatrix
from sympy import GF as SymGF

from .errors import ExtensionCapExceeded, SingularMatrix

MAX_FIELD_SIZE = 1 << 16


def _prime_factors(n):
    return sorted(factorint(n))


class GFLevel:
    """The field with p^k elements."""

    def __init__(self, p, k, exp_table, minpoly):
        self.p = p
        self.k = k
        self.size = p ** k
        self.order = self.size - 1
        self.exp = exp_table
        self.log = [-1] * self.size
        for i, c in enumerate(exp_table):
            self.log[c] = i
        # coefficients of the minimal polynomial of the generator, leading first
        self.minpoly = minpoly
        self.neg_one_log = 0 if p == 2 else self.order // 2
        self.zech = None
        if p != 2:
            self.zech = [-1] * self.order
            for i in range(self.order):
                s = _digit_add(exp_table[i], 1, p)
                self.zech[i] = self.log[s] if s else -1

    def __repr__(self):
        return f"GF({self.p}^{self.k})"

    # -- ring operations ---------------------------------------------------
    def add(self, a, b):
        if self.p == 2:
            return a ^ b
        if a == 0:
            return b
        if b == 0:
            return a
        la, lb = self.log[a], self.log[b]
        z = self.zech[(lb - la) % self.order]
        if z < 0:
            return 0
        return self.exp[(la + z) % self.order]

    def neg(self, a):
        if a == 0 or self.p == 2:
            return a
        return self.exp[(self.log[a] + self.neg_one_log) % self.order]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if a == 0 or b == 0:
            return 0
        return self.exp[(self.log[a] + self.log[b]) % self.order]

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero in " + repr(self))
        return self.exp[(-self.log[a]) % self.order]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, n):
        if a == 0:
            if n < 0:
                raise ZeroDivisionError("0 to a negative power")
            return 1 if n == 0 else 0
        return self.exp[(self.log[a] * n) % self.order]

    def frob(self, a, power):
        """a -> a^power for ``power`` a power of p."""
        if a == 0:
            return 0
        return self.exp[(self.log[a] * power) % self.order]

    def root(self, a, power):
        """Inverse of :meth:`frob`."""
        if a == 0:
            return 0
        inv = pow(power, -1, self.order) if self.order > 1 else 0
        return self.exp[(self.log[a] * inv) % self.order]

    def from_fp(self, n):
        return n % self.p

    def elements(self):
        return range(self.size)

    # -- coordinates ------------------------------------------------------
    def digits(self, a):
        out = []
        for _ in range(self.k):
            a, d = divmod(a, self.p)
            out.append(d)
        return out

    def from_digits(self, ds):
        c = 0
        for d in reversed(ds):
            c = c * self.p + (d % self.p)
        return c

    # -- polynomial helpers ----------------------------------------------
    def poly_eval(self, coeffs, x):
        """Horner evaluation, coefficients leading first."""
        acc = 0
        for c in coeffs:
            acc = self.add(self.mul(acc, x), c)
        return acc


def _digit_add(a, b, p):
    out, place = 0, 1
    while a or b:
        a, da = divmod(a, p)
        b, db = divmod(b, p)
        out += ((da + db) % p) * place
        place *= p
    return out


def _find_primitive_poly(p, k):
    order = p ** k - 1
    primes = _prime_factors(order)
    for tail in itertools.product(range(p), repeat=k):
        if tail[-1] == 0:
            continue
        f = [1] + list(tail)
        if not gf_irreducible_p(f, p, ZZ):
            continue
        if all(gf_pow_mod([1, 0], order // ell, f, p, ZZ) != [1] for ell in primes):
            return f
    raise RuntimeError(f"no primitive polynomial of degree {k} over F_{p}")


def _exp_table(p, f):
    """Powers of x modulo the monic polynomial f (leading first)."""
    k = len(f) - 1
    size = p ** k
    order = size - 1
    # x^k = -(f[1] x^{k-1} + ... + f[k])
    low = [(-c) % p for c in reversed(f[1:])]  # coefficient of x^0 first
    table = [0] * order
    cur = [0] * k
    cur[0] = 1
    for i in range(order):
        c = 0
        for d in reversed(cur):
            c = c * p + d
        table[i] = c
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [(cur[j] + top * low[j]) % p for j in range(k)]
    return table


class GFTower:
    """Lazily built compatible family of levels F_{p^k}."""

    def __init__(self, p, max_size=MAX_FIELD_SIZE):
        self.p = p
        self.max_size = max_size
        self._levels = {}

    def level(self, k) -> GFLevel:
        lv = self._levels.get(k)
        if lv is None:
            if self.p ** k > self.max_size:
                raise ExtensionCapExceeded(
                    f"F_{self.p}^{k} exceeds the field size cap {self.max_size}",
                    level=k)
            lv = self._build(k)
            self._levels[k] = lv
        return lv

    def _build(self, k):
        p = self.p
        if k == 1:
            g = next(a for a in range(1, p)
                     if p == 2 or all(pow(a, (p - 1) // ell, p) != 1
                                      for ell in _prime_factors(p - 1)))
            table = [pow(g, i, p) for i in range(p - 1)] if p > 2 else [1]
            return GFLevel(p, 1, table, [1, (-g) % p])
        f = _find_primitive_poly(p, k)
        base = GFLevel(p, k, _exp_table(p, f), f)
        order = base.order
        subs = [(k // ell, self.level(k // ell)) for ell in _prime_factors(k)]
        for j in range(1, order):
            if gcd(j, order) != 1:
                continue
            ok = True
            for k0, sub in subs:
                norm_exp = (order // (p ** k0 - 1)) * j % order
                y = base.exp[norm_exp]
                if base.poly_eval(sub.minpoly, y) != 0:
                    ok = False
                    break
            if ok:
                table = [base.exp[(i * j) % order] for i in range(order)]
                beta = table[1]
                minpoly = _minpoly(base, beta)
                return GFLevel(p, k, table, minpoly)
        raise RuntimeError(f"no compatible generator for F_{p}^{k}")

    # -- maps between levels ---------------------------------------------
    def embed(self, c, k0, k):
        if k0 == k or c == 0:
            return c
        if k % k0:
            raise ValueError(f"level {k0} does not divide {k}")
        src, dst = self.level(k0), self.level(k)
        scale = dst.order // src.order
        return dst.exp[src.log[c] * scale % dst.order]

    def restrict(self, c, k, k0):
        """Code of c at level k0, or None if c is not in that subfield."""
        if k0 == k or c == 0:
            return c
        src, dst = self.level(k), self.level(k0)
        scale = src.order // dst.order
        lg = src.log[c]
        if lg % scale:
            return None
        return dst.exp[lg // scale]

    def min_level(self, c, k):
        """Smallest divisor k0 of k with c in F_{p^{k0}}."""
        if c == 0:
            return 1
        for k0 in range(1, k + 1):
            if k % k0 == 0 and self.restrict(c, k, k0) is not None:
                return k0
        return k


def _minpoly(lv, beta):
    """Minimal polynomial of beta over F_p, leading first, as F_p ints."""
    poly = [1]
    conj = beta
    seen = []
    while conj not in seen:
        seen.append(conj)
        # poly *= (X - conj)
        nxt = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i] = lv.add(nxt[i], c)
            nxt[i + 1] = lv.sub(nxt[i + 1], lv.mul(c, conj))
        poly = nxt
        conj = lv.frob(conj, lv.p)
    for c in poly:
        if c >= lv.p:
            raise RuntimeError("minimal polynomial not over the prime field")
    return poly


_TOWERS = {}


def tower(p) -> GFTower:
    t = _TOWERS.get(p)
    if t is None:
        t = _TOWERS[p] = GFTower(p)
    return t


# -- linear algebra over F_p (via sympy) ------------------------------------

def fp_nullspace(rows, p):
    """Basis of {v : A v = 0} for an integer matrix A over F_p."""
    if not rows:
        return []
    F = SymGF(p)
    ncols = len(rows[0])
    M = DomainMatrix([[F(x) for x in row] for row in rows], (len(rows), ncols), F)
    ns = M.nullspace()
    out = []
    for row in ns.to_list():
        out.append([int(x) % p for x in row])
    return out


def fp_solve(rows, rhs, p):
    """One solution of A v = b over F_p, or None."""
    F = SymGF(p)
    n, ncols = len(rows), len(rows[0])
    aug = [[F(x) for x in row] + [F(b)] for row, b in zip(rows, rhs)]
    R, pivots = DomainMatrix(aug, (n, ncols + 1), F).rref()
    if ncols in pivots:
        return None
    R = R.to_list()
    sol = [0] * ncols
    for i, c in enumerate(pivots):
        sol[c] = int(R[i][ncols]) % p
    return sol


# -- linear algebra over a level --------------------------------------------

def gf_row_reduce(lv: GFLevel, rows):
    """Row echelon form; returns (rows, pivot columns)."""
    A = [list(r) for r in rows]
    nr = len(A)
    nc = len(A[0]) if A else 0
    pivots = []
    r = 0
    for c in range(nc):
        piv = next((i for i in range(r, nr) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        iv = lv.inv(A[r][c])
        A[r] = [lv.mul(iv, x) for x in A[r]]
        for i in range(nr):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [lv.sub(x, lv.mul(f, y)) for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == nr:
            break
    return A, pivots


def gf_rank(lv, rows):
    if not rows:
        return 0
    return len(gf_row_reduce(lv, rows)[1])


def gf_inverse(lv, M):
    n = len(M)
    aug = [list(M[i]) + [1 if i == j else 0 for j in range(n)] for i in range(n)]
    R, piv = gf_row_reduce(lv, aug)
    if piv[:n] != list(range(n)):
        raise SingularMatrix("matrix over the residue field is singular")
    return [row[n:] for row in R]


def gf_matmul(lv, A, B):
    n, m = len(A), len(B[0])
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            acc = 0
            for k in range(len(B)):
                if A[i][k] and B[k][j]:
                    acc = lv.add(acc, lv.mul(A[i][k], B[k][j]))
            out[i][j] = acc
    return out


def gf_det(lv, M):
    n = len(M)
    A = [list(r) for r in M]
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = lv.neg(det)
        det = lv.mul(det, A[c][c])
        iv = lv.inv(A[c][c])
        for i in range(c + 1, n):
            if A[i][c]:
                f = lv.mul(A[i][c], iv)
                A[i] = [lv.sub(x, lv.mul(f, y)) for x, y in zip(A[i], A[c])]
    return det
