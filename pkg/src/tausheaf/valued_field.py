"""Truncated generalized Laurent series over a finite-field tower.

A :class:`ValuedField` fixes the characteristic p, q = p^e, the exponent
denominator cap D and the default absolute precision.  Its elements are
:class:`ValSeries`: finite sums  sum c_i u^{e_i}  with rational exponents of
denominator dividing D, coefficients in F_{q^m}, and an absolute cutoff
(terms with exponent >= prec are unknown) or the exact marker ``None``.

Exponents and cutoffs are stored as integers counted in units of 1/D, so
all exponent arithmetic is exact integer arithmetic.  ``val`` is the
additive valuation (|u| < 1 means val(u) = 1 > 0).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import lcm
from typing import Optional

from .errors import (DegenerateInput, DenominatorCapExceeded,
                     ExtensionCapExceeded, ParseError)
from .gf import MAX_FIELD_SIZE, fp_solve, tower

INF = math.inf


class _Indeterminate:
    """Third truth value for comparisons that precision cannot decide."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __bool__(self):
        raise DegenerateInput("comparison undecidable at the stored precision")

    def __repr__(self):
        return "Indeterminate"


Indeterminate = _Indeterminate()


def _pmin(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class ValuedField:
    """Session parameters shared by every series built from it."""

    def __init__(self, p, e=1, m=1, denom_cap=None, prec=64,
                 max_field_size=MAX_FIELD_SIZE):
        if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
            raise ValueError(f"p={p} is not prime")
        if e < 1 or m < 1:
            raise ValueError("e and m must be positive")
        self.p = p
        self.e = e
        self.q = p ** e
        self.m = m
        q = self.q
        self.D = denom_cap if denom_cap is not None else (q * q - 1) * q ** 6
        if self.D < 1:
            raise ValueError("denominator cap must be positive")
        self.prec = Fraction(prec)
        self.prec_units = math.ceil(self.prec * self.D)
        self.max_field_size = max_field_size
        self.tower = tower(p)
        if self.q ** m > max_field_size:
            raise ExtensionCapExceeded(f"F_{q}^{m} exceeds the field size cap")

    def __repr__(self):
        return (f"ValuedField(p={self.p}, e={self.e}, m={self.m}, "
                f"D={self.D}, prec={self.prec})")

    def config(self):
        return {"p": self.p, "e": self.e, "m": self.m,
                "denom_cap": self.D, "prec": str(self.prec)}

    # -- levels -----------------------------------------------------------
    def level(self, m):
        if self.q ** m > self.max_field_size:
            raise ExtensionCapExceeded(
                f"coefficient field F_{self.q}^{m} exceeds the cap", m=m)
        return self.tower.level(self.e * m)

    def embed(self, code, m0, m):
        return self.tower.embed(code, self.e * m0, self.e * m)

    def restrict(self, code, m, m0):
        return self.tower.restrict(code, self.e * m, self.e * m0)

    def fq_codes(self, m):
        """Codes of the q elements of F_q inside F_{q^m}."""
        return [self.embed(c, 1, m) for c in range(self.q)]

    # -- exponent units -----------------------------------------------------
    def units(self, r) -> int:
        r = Fraction(r)
        n = r * self.D
        if n.denominator != 1:
            raise DenominatorCapExceeded(
                f"exponent {r} needs a denominator beyond the cap {self.D}")
        return int(n)

    def frac(self, n) -> Fraction:
        return Fraction(n, self.D)

    # -- constructors -------------------------------------------------------
    def make(self, terms, prec="default", m=None, dominant=False):
        """Series from (rational exponent, code) pairs."""
        m = self.m if m is None else m
        pr = self._prec_arg(prec)
        return ValSeries(self, [(self.units(x), c) for x, c in terms], pr, m,
                         dominant)

    def _prec_arg(self, prec):
        if prec is None:
            return None
        if isinstance(prec, str) and prec == "default":
            return self.prec_units
        return self.units(prec)

    def zero(self, prec=None, m=1):
        return ValSeries(self, [], None if prec is None else self.units(prec), m)

    def one(self, m=1):
        return ValSeries(self, [(0, 1)], None, m)

    def const(self, code, m=1):
        return ValSeries(self, [(0, code)] if code else [], None, m)

    def monomial(self, exponent, code=1, m=1):
        return ValSeries(self, [(self.units(exponent), code)] if code else [],
                         None, m)

    def from_fq(self, n):
        """F_q element with code ``n`` at level m = 1."""
        return self.const(n % self.q, 1)


@dataclass
class RootSet:
    """All roots of a one-variable equation found by a solver."""

    roots: list
    kind: str
    m: int
    note: str = ""

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


class ValSeries:
    __slots__ = ("F", "terms", "prec", "m", "dominant")

    def __init__(self, F: ValuedField, terms, prec: Optional[int], m=1,
                 dominant=False):
        self.F = F
        self.m = m
        self.prec = prec
        self.dominant = dominant
        clean = {}
        lv = F.level(m)
        for ex, c in terms:
            if prec is not None and ex >= prec:
                continue
            if not 0 <= c < lv.size:
                raise ValueError(f"coefficient code {c} outside F_{F.q}^{m}")
            if ex in clean:
                c = lv.add(clean[ex], c)
            clean[ex] = c
        self.terms = tuple(sorted((ex, c) for ex, c in clean.items() if c))

    # -- inspection ---------------------------------------------------------
    @property
    def exact(self):
        return self.prec is None

    def val_units(self):
        return self.terms[0][0] if self.terms else None

    def val(self):
        if not self.terms:
            return INF
        return self.F.frac(self.terms[0][0])

    def val_lower(self):
        """A lower bound for the true valuation."""
        if self.terms:
            return self.F.frac(self.terms[0][0])
        return INF if self.prec is None else self.F.frac(self.prec)

    def val_lower_units(self):
        if self.terms:
            return self.terms[0][0]
        return None if self.prec is None else self.prec

    def lead(self):
        if not self.terms:
            raise DegenerateInput("leading term of a zero series")
        return self.terms[0]

    def is_zero(self):
        if self.terms:
            return False
        return True if self.prec is None else Indeterminate

    def prec_frac(self):
        return None if self.prec is None else self.F.frac(self.prec)

    def coeff(self, exponent):
        ex = self.F.units(exponent)
        for e0, c in self.terms:
            if e0 == ex:
                return c
        return 0

    def same_as(self, other):
        return (self.terms == other.terms and self.prec == other.prec
                and self.m == other.m and self.dominant == other.dominant)

    def __eq__(self, other):
        if not isinstance(other, ValSeries):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        return f"ValSeries({format_literal(self)})"

    # -- levels -------------------------------------------------------------
    def lift(self, m):
        if m == self.m:
            return self
        if m % self.m:
            raise ValueError(f"level {self.m} does not divide {m}")
        F = self.F
        return ValSeries(F, [(ex, F.embed(c, self.m, m)) for ex, c in self.terms],
                         self.prec, m, self.dominant)

    def descend(self):
        """Re-express at the smallest level containing every coefficient."""
        F = self.F
        best = 1
        for _, c in self.terms:
            k = F.tower.min_level(c, F.e * self.m)
            best = lcm(best, k)
        m0 = next(d for d in range(1, self.m + 1)
                  if self.m % d == 0 and (F.e * d) % best == 0)
        if m0 == self.m:
            return self
        return ValSeries(F, [(ex, F.restrict(c, self.m, m0)) for ex, c in self.terms],
                         self.prec, m0, self.dominant)

    def _common(self, other):
        m = lcm(self.m, other.m)
        return self.lift(m), other.lift(m), m

    def with_prec(self, prec):
        """Truncate to a (smaller) cutoff in units."""
        pr = _pmin(self.prec, prec)
        return ValSeries(self.F, self.terms, pr, self.m, self.dominant)

    def with_dominant(self, flag=True):
        return ValSeries(self.F, self.terms, self.prec, self.m, flag)

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        other = _coerce(self.F, other)
        a, b, m = self._common(other)
        pr = _pmin(a.prec, b.prec)
        return ValSeries(self.F, a.terms + b.terms, pr, m,
                         a.dominant or b.dominant)

    __radd__ = __add__

    def __neg__(self):
        lv = self.F.level(self.m)
        return ValSeries(self.F, [(ex, lv.neg(c)) for ex, c in self.terms],
                         self.prec, self.m, self.dominant)

    def __sub__(self, other):
        return self + (-_coerce(self.F, other))

    def __rsub__(self, other):
        return _coerce(self.F, other) - self

    def __mul__(self, other):
        other = _coerce(self.F, other)
        a, b, m = self._common(other)
        F = self.F
        pr = None
        if a.prec is not None:
            vb = b.val_lower_units()
            pr = a.prec + vb if vb is not None else None
        if b.prec is not None:
            va = a.val_lower_units()
            cand = b.prec + va if va is not None else None
            pr = _pmin(pr, cand)
        lv = F.level(m)
        exp, log, order = lv.exp, lv.log, lv.order
        acc = {}
        two = F.p == 2
        for ea, ca in a.terms:
            la = log[ca]
            for eb, cb in b.terms:
                ex = ea + eb
                if pr is not None and ex >= pr:
                    break
                c = exp[(la + log[cb]) % order]
                old = acc.get(ex)
                if old is None:
                    acc[ex] = c
                else:
                    acc[ex] = (old ^ c) if two else lv.add(old, c)
        return ValSeries(F, acc.items(), pr, m, a.dominant or b.dominant)

    __rmul__ = __mul__

    def scale(self, exponent_units, code=1):
        """Multiply by code * u^(exponent_units / D); exact monomial."""
        lv = self.F.level(self.m)
        pr = None if self.prec is None else self.prec + exponent_units
        return ValSeries(self.F, [(ex + exponent_units, lv.mul(c, code))
                                  for ex, c in self.terms], pr, self.m,
                         self.dominant)

    def invert(self):
        F = self.F
        if not self.terms:
            raise DegenerateInput("inversion of a zero-to-precision series")
        v, c = self.terms[0]
        lv = F.level(self.m)
        ci = lv.inv(c)
        # self = c u^v (1 + h),  val h > 0
        h = self.scale(-v, ci) - 1
        if self.prec is None:
            rel = F.prec_units
        else:
            rel = self.prec - v
        if h.exact and not h.terms:
            res = F.one(self.m)
        else:
            h = h.with_prec(rel)
            res = _neumann_inverse(h, rel)
        return res.scale(-v, ci)

    def __truediv__(self, other):
        other = _coerce(self.F, other)
        return self * other.invert()

    def __rtruediv__(self, other):
        return _coerce(self.F, other) * self.invert()

    def __pow__(self, n):
        if n < 0:
            return self.invert() ** (-n)
        result = self.F.one(self.m)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- Frobenius ----------------------------------------------------------
    def frobenius(self, times=1):
        """x -> x^(q^times)."""
        F = self.F
        power = F.q ** times
        lv = F.level(self.m)
        pr = None if self.prec is None else self.prec * power
        return ValSeries(F, [(ex * power, lv.frob(c, power)) for ex, c in self.terms],
                         pr, self.m, self.dominant)

    def inv_frobenius(self, times=1):
        F = self.F
        power = F.q ** times
        lv = F.level(self.m)
        out = []
        for ex, c in self.terms:
            if ex % power:
                raise DenominatorCapExceeded(
                    f"q-th root of u^{F.frac(ex)} leaves the denominator cap {F.D}")
            out.append((ex // power, lv.root(c, power)))
        pr = None if self.prec is None else self.prec // power
        return ValSeries(F, out, pr, self.m, self.dominant)

    def coeff_frobenius(self, times=1):
        """Galois action c -> c^(q^times) on coefficients; u is fixed."""
        lv = self.F.level(self.m)
        power = self.F.q ** times
        return ValSeries(self.F, [(ex, lv.frob(c, power)) for ex, c in self.terms],
                         self.prec, self.m, self.dominant)

    # -- pieces -------------------------------------------------------------
    def part(self, lo=None, hi=None):
        """Terms with lo <= exponent < hi (units); keeps the cutoff."""
        keep = [(ex, c) for ex, c in self.terms
                if (lo is None or ex >= lo) and (hi is None or ex < hi)]
        pr = self.prec
        if hi is not None:
            pr = None if self.prec is None or self.prec >= hi else self.prec
            # a piece strictly below the cutoff is itself exact
        return ValSeries(self.F, keep, pr, self.m, self.dominant)

    def sort_key(self):
        return (self.terms, -1 if self.prec is None else self.prec)


def _coerce(F, x):
    if isinstance(x, ValSeries):
        return x
    if isinstance(x, int):
        return F.const(x % F.p)
    raise TypeError(f"cannot use {type(x).__name__} as a series")


def _neumann_inverse(h, rel):
    """1/(1+h) modulo u^rel for val h > 0."""
    F = h.F
    total = F.one(h.m).with_prec(rel)
    power = F.one(h.m)
    mh = -h
    while True:
        power = (power * mh).with_prec(rel)
        if not power.terms:
            break
        total = total + power
    return total.with_prec(rel)


# -- Artin-Schreier -------------------------------------------------------

def principal_as_root(alpha: ValSeries, target=None) -> ValSeries:
    """sum_{nu>=0} alpha^(q^nu) for val(alpha) > 0 (or alpha zero)."""
    F = alpha.F
    if alpha.prec is not None:
        target = alpha.prec
    elif target is None:
        v = alpha.val_units()
        if v is None:
            return alpha
        target = F.prec_units if v < F.prec_units else v + F.prec_units
    total = alpha.with_prec(target)
    y = alpha
    while True:
        y = y.frobenius()
        lo = y.val_lower_units()
        if lo is None or lo >= target:
            break
        total = total + y.with_prec(target)
    return total.with_prec(target)


def _residue_as(F, c, m):
    """Solve x - x^q = c in F_{q^m} or F_{q^{mp}}; returns (code, level)."""
    for mm in (m, m * F.p):
        lv = F.level(mm)
        cc = F.embed(c, m, mm)
        k = lv.k
        cols = []
        for i in range(k):
            b = F.p ** i
            cols.append(lv.digits(lv.sub(b, lv.frob(b, F.q))))
        rows = [[cols[j][i] for j in range(k)] for i in range(k)]
        sol = fp_solve(rows, lv.digits(cc), F.p)
        if sol is not None:
            return lv.from_digits(sol), mm
    raise ExtensionCapExceeded("Artin-Schreier residue equation unsolved")


def artin_schreier(alpha: ValSeries, depth=2) -> RootSet:
    """All solutions of x - x^q = alpha."""
    F = alpha.F
    if not alpha.terms:
        if alpha.prec is not None:
            raise DegenerateInput("Artin-Schreier data known only to be small")
        m = alpha.m
        return RootSet([F.const(c, m) for c in F.fq_codes(m)], "constant", m)
    v = alpha.val_units()
    if v > 0:
        x = principal_as_root(alpha)
        return RootSet(_shifts(x), "principal", x.m)
    if v == 0:
        c0 = alpha.terms[0][1]
        code, mm = _residue_as(F, c0, alpha.m)
        rest = alpha.part(lo=1).lift(mm)
        base = ValSeries(F, [(0, code)], None, mm)
        if rest.terms or rest.prec is not None:
            y = principal_as_root(rest)
            x = base + y
        else:
            x = base
        return RootSet(_shifts(x), "residue", mm)
    # wild case: leading-term semantics only
    x = F.zero(m=alpha.m)
    for _ in range(max(depth, 1)):
        x = (x - alpha).with_prec(0).inv_frobenius()
    cut = Fraction(v, F.q ** (max(depth, 1) + 1))
    cut_units = math.floor(cut)
    x = ValSeries(F, x.terms, cut_units, x.m, True)
    return RootSet(_shifts(x), "dominant", x.m,
                   note=f"residual valuation {F.frac(v) / F.q ** max(depth, 1)}")


def _shifts(x):
    F = x.F
    return [x + F.const(c, x.m) if c else x for c in F.fq_codes(x.m)]


def as_residual(x: ValSeries, alpha: ValSeries) -> ValSeries:
    return x - x.frobenius() - alpha


# -- Kummer ---------------------------------------------------------------

def _binomial_coeffs_mod_p(n, count, p):
    """binom(1/n, k) mod p for k < count."""
    out = []
    r = Fraction(1, n)
    cur = Fraction(1)
    for k in range(count):
        if k:
            cur = cur * (r - (k - 1)) / k
        num, den = cur.numerator, cur.denominator
        if den % p == 0:
            raise ValueError("binomial coefficient not p-integral")
        out.append(num * pow(den, -1, p) % p)
    return out


def kummer_root(a: ValSeries, n: int) -> RootSet:
    """All x with x^n = a, for n prime to p."""
    F = a.F
    if n < 1 or n % F.p == 0:
        raise ValueError("Kummer degree must be positive and prime to p")
    if not a.terms:
        raise DegenerateInput("Kummer root of a zero-to-precision series")
    va, c = a.terms[0]
    if va % n:
        raise DenominatorCapExceeded(
            f"valuation {F.frac(va)}/{n} not representable with cap {F.D}")
    v = va // n
    # leading coefficient: smallest level holding all n-th roots of c
    mm = a.m
    while True:
        lv = F.level(mm)
        cc = F.embed(c, a.m, mm)
        if lv.order % n == 0 and lv.log[cc] % n == 0:
            break
        mm += a.m
        if F.q ** mm > F.max_field_size:
            raise ExtensionCapExceeded(f"no {n}-th root of the leading coefficient")
    a = a.lift(mm)
    lv = F.level(mm)
    cc = a.terms[0][1]
    r0 = lv.exp[lv.log[cc] // n]
    ci = lv.inv(cc)
    h = a.scale(-va, ci) - 1
    if a.prec is None:
        rel = F.prec_units
    else:
        rel = a.prec - va
    if not h.terms and h.prec is None:
        unit = F.one(mm)
    else:
        h = h.with_prec(rel)
        hv = h.val_lower_units()
        count = rel // hv + 2 if hv else 2
        coeffs = _binomial_coeffs_mod_p(n, count, F.p)
        unit = F.zero(m=mm)
        power = F.one(mm)
        for k, b in enumerate(coeffs):
            if k:
                power = (power * h).with_prec(rel)
                if not power.terms:
                    break
            if b:
                unit = unit + power * F.const(b, mm)
        unit = unit.with_prec(rel)
    step = lv.order // n
    roots = []
    for j in range(n):
        lead = lv.mul(r0, lv.exp[(j * step) % lv.order])
        roots.append(unit.scale(v, lead))
    roots.sort(key=lambda s: s.sort_key())
    return RootSet(roots, "kummer", mm)


# -- Newton polygons ------------------------------------------------------

@dataclass
class NewtonPolygon:
    """Lower convex hull, as (slope, horizontal length) segments."""

    segments: list = dc_field(default_factory=list)
    vertices: list = dc_field(default_factory=list)

    def root_valuations(self):
        """(valuation, multiplicity) pairs, valuation = -slope."""
        return [(-s, ln) for s, ln in self.segments]

    def slopes(self):
        return [s for s, _ in self.segments]


def newton_polygon(points) -> NewtonPolygon:
    pts = sorted((Fraction(i), Fraction(v)) for i, v in points if v != INF)
    if len(pts) < 2:
        raise ValueError("a Newton polygon needs at least two finite points")
    dedup = []
    for x, y in pts:
        if dedup and dedup[-1][0] == x:
            if y < dedup[-1][1]:
                dedup[-1] = (x, y)
            continue
        dedup.append((x, y))
    hull = []
    for pt in dedup:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly below the chord
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    segs = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        segs.append(((y2 - y1) / (x2 - x1), x2 - x1))
    return NewtonPolygon(segs, hull)


# -- literals -------------------------------------------------------------

_LIT = re.compile(
    r"^\s*(\d+)\^(\d+)\s*\{([^}]*)\}\s*prec:\s*(exact|-?\d+(?:/\d+)?)"
    r"(\s+dominant)?\s*$")
_PAIR = re.compile(r"^\s*(-?\d+(?:/\d+)?)\s*:\s*(\d+)\s*$")


def parse_literal(F: ValuedField, text: str) -> ValSeries:
    """Parse ``q^m {exp:code, ...} prec:P`` (P a fraction or ``exact``)."""
    mt = _LIT.match(text)
    if not mt:
        raise ParseError(f"malformed element literal {text!r}")
    q, m = int(mt.group(1)), int(mt.group(2))
    if q != F.q:
        raise ParseError(f"literal over F_{q} in a session with q={F.q}")
    terms = []
    body = mt.group(3).strip()
    seen = set()
    if body:
        for chunk in body.split(","):
            pm = _PAIR.match(chunk)
            if not pm:
                raise ParseError(f"malformed term {chunk.strip()!r} in {text!r}")
            ex = F.units(Fraction(pm.group(1)))
            code = int(pm.group(2))
            if ex in seen:
                raise ParseError(f"repeated exponent {pm.group(1)} in {text!r}")
            if code == 0:
                raise ParseError(f"zero coefficient in {text!r}")
            seen.add(ex)
            terms.append((ex, code))
    pr = None if mt.group(4) == "exact" else F.units(Fraction(mt.group(4)))
    if pr is not None and any(ex >= pr for ex, _ in terms):
        raise ParseError(f"term at or beyond the cutoff in {text!r}")
    try:
        return ValSeries(F, terms, pr, m, bool(mt.group(5)))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def format_literal(x: ValSeries) -> str:
    F = x.F
    body = ", ".join(f"{F.frac(ex)}:{c}" for ex, c in x.terms)
    pr = "exact" if x.prec is None else str(F.frac(x.prec))
    tail = " dominant" if x.dominant else ""
    return f"{F.q}^{x.m} {{{body}}} prec:{pr}{tail}"
