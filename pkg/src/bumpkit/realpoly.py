"""Exact polynomials in z, zbar, w, wbar with complex-rational coefficients.

A monomial is a tuple (a, b, c, d) standing for z^a zbar^b w^c wbar^d.
Coefficients are exact ``CQ`` values; once a float slope has been
substituted they become python complex numbers and the polynomial is only
used numerically.
"""
from collections import namedtuple
from fractions import Fraction
from math import comb

import numpy as np

from .errors import ParseError, RealityViolation


class CQ:
    """Complex rational number re + i*im with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def coerce(x):
        if isinstance(x, CQ):
            return x
        if isinstance(x, (int, Fraction)):
            return CQ(x)
        return None

    def __add__(self, other):
        o = CQ.coerce(other)
        if o is None:
            return complex(self) + other
        return CQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return CQ(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = CQ.coerce(other)
        if o is None:
            return complex(self) * other
        return CQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = CQ.coerce(other)
        if o is None:
            return complex(self) / other
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("CQ division by zero")
        return self * CQ(o.re / n, -o.im / n)

    def __pow__(self, n):
        out = CQ(1)
        base = self
        if n < 0:
            base = CQ(1) / base
            n = -n
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self):
        return CQ(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = CQ.coerce(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) == other
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"CQ({self.re}, {self.im})"


ComplexRational = CQ


def to_coef(x):
    """Exact coefficient when possible, complex otherwise."""
    c = CQ.coerce(x)
    if c is not None:
        return c
    return complex(x)


def is_exact(c):
    return isinstance(c, CQ)


def _conj(c):
    return c.conjugate()


def _iszero(c):
    if isinstance(c, CQ):
        return not c
    return c == 0


def _fmt_fraction(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _parse_fraction(tok, line, col):
    try:
        if "/" in tok:
            n, d = tok.split("/")
            if int(d) == 0:
                raise ParseError("zero denominator", line, col)
            return Fraction(int(n), int(d))
        return Fraction(int(tok))
    except ValueError:
        raise ParseError(f"bad rational '{tok}'", line, col)


class MixedPoly:
    """Polynomial in z, zbar, w, wbar stored as {(a,b,c,d): coefficient}."""

    __slots__ = ("terms", "_cache")

    def __init__(self, terms=None):
        t = {}
        if terms:
            for m, c in terms.items():
                m = tuple(int(e) for e in m)
                if len(m) != 4 or min(m) < 0:
                    raise ValueError(f"bad monomial {m}")
                c = to_coef(c)
                if not _iszero(c):
                    t[m] = c
        self.terms = t
        self._cache = None

    # construction
    @classmethod
    def const(cls, c):
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def var(cls, name):
        idx = {"z": 0, "zbar": 1, "w": 2, "wbar": 3}[name]
        m = [0, 0, 0, 0]
        m[idx] = 1
        return cls({tuple(m): 1})

    @classmethod
    def _raw(cls, t):
        p = cls.__new__(cls)
        p.terms = {m: c for m, c in t.items() if not _iszero(c)}
        p._cache = None
        return p

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, MixedPoly):
            other = MixedPoly.const(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t[m] + c if m in t else c
        return MixedPoly._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return MixedPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MixedPoly):
            c0 = to_coef(other)
            return MixedPoly._raw({m: c * c0 for m, c in self.terms.items()})
        t = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2], m1[3] + m2[3])
                v = c1 * c2
                t[m] = t[m] + v if m in t else v
        return MixedPoly._raw(t)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power")
        out = MixedPoly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, MixedPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"MixedPoly({len(self.terms)} terms, deg {self.degree()})"

    # structure
    def conj(self):
        return MixedPoly._raw({(b, a, d, c): _conj(v) for (a, b, c, d), v in self.terms.items()})

    def modsq(self):
        return self * self.conj()

    def is_zero(self):
        return not self.terms

    def is_exact(self):
        return all(isinstance(c, CQ) for c in self.terms.values())

    def degree(self):
        return max((sum(m) for m in self.terms), default=-1)

    def lowdeg(self):
        return min((sum(m) for m in self.terms), default=-1)

    def is_real(self, tol=0.0):
        for (a, b, c, d), v in self.terms.items():
            u = self.terms.get((b, a, d, c))
            if u is None:
                if abs(complex(v)) > tol:
                    return False
                continue
            if is_exact(v) and is_exact(u):
                if u != v.conjugate():
                    return False
            else:
                diff = abs(complex(u) - complex(v).conjugate())
                if diff > tol * max(1.0, abs(complex(v))):
                    return False
        return True

    def reality_defect(self):
        """First monomial pair that breaks conjugate symmetry, or None."""
        for (a, b, c, d), v in sorted(self.terms.items()):
            u = self.terms.get((b, a, d, c))
            if u is None or u != _conj(v):
                return (a, b, c, d), (b, a, d, c)
        return None

    def prune(self, tol):
        return MixedPoly._raw({m: c for m, c in self.terms.items() if abs(complex(c)) > tol})

    def to_complex(self):
        return MixedPoly._raw({m: complex(c) for m, c in self.terms.items()})

    # numerics
    def _compiled(self):
        if self._cache is None:
            mons = sorted(self.terms)
            exps = np.array(mons, dtype=int).reshape(-1, 4)
            coefs = np.array([complex(self.terms[m]) for m in mons], dtype=complex)
            self._cache = (exps, coefs)
        return self._cache

    def evaluate(self, z, w):
        """Evaluate at complex points (scalars or arrays)."""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        exps, coefs = self._compiled()
        out = np.zeros(np.broadcast(z, w).shape, dtype=complex)
        if len(coefs) == 0:
            return out
        vals = (z, np.conj(z), w, np.conj(w))
        pw = [{} for _ in range(4)]
        for i in range(4):
            for e in np.unique(exps[:, i]):
                pw[i][e] = vals[i] ** int(e)
        for row, c in zip(exps, coefs):
            out = out + c * pw[0][row[0]] * pw[1][row[1]] * pw[2][row[2]] * pw[3][row[3]]
        return out

    # text format
    def to_text(self):
        lines = []
        for m in sorted(self.terms):
            c = self.terms[m]
            if isinstance(c, CQ):
                re, im = c.re, c.im
            else:
                re, im = Fraction(c.real), Fraction(c.imag)
            lines.append(f"({m[0]},{m[1]},{m[2]},{m[3]}) {_fmt_fraction(re)} {_fmt_fraction(im)}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text, first_line=1, check_real=False):
        t = {}
        for k, raw in enumerate(text.splitlines()):
            line = first_line + k
            s = raw.split("#", 1)[0].strip()
            if not s:
                continue
            if not s.startswith("(") or ")" not in s:
                raise ParseError("expected '(a,b,c,d) re im'", line, 1)
            close = s.index(")")
            try:
                mono = tuple(int(x) for x in s[1:close].split(","))
            except ValueError:
                raise ParseError("bad exponent tuple", line, 2)
            if len(mono) != 4 or min(mono) < 0:
                raise ParseError("monomial needs four non-negative exponents", line, 2)
            rest = s[close + 1:].split()
            if len(rest) != 2:
                raise ParseError("expected two rational parts", line, close + 2)
            col = raw.find(rest[0]) + 1
            re = _parse_fraction(rest[0], line, col)
            im = _parse_fraction(rest[1], line, raw.rfind(rest[1]) + 1)
            if mono in t:
                raise ParseError(f"duplicate monomial {mono}", line, 1)
            t[mono] = CQ(re, im)
        p = cls(t)
        if check_real:
            bad = p.reality_defect()
            if bad is not None:
                raise RealityViolation(
                    f"coefficient of {bad[0]} is not the conjugate of the coefficient of {bad[1]}")
        return p


RealMixedPoly = MixedPoly

Z = MixedPoly.var("z")
ZB = MixedPoly.var("zbar")
W = MixedPoly.var("w")
WB = MixedPoly.var("wbar")


class LinePoly:
    """Polynomial in w, wbar: {(w-power, wbar-power): coefficient}."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {m: c for m, c in (terms or {}).items() if not _iszero(c)}

    def is_real(self, tol=0.0):
        for (a, b), v in self.terms.items():
            u = self.terms.get((b, a), 0)
            if abs(complex(u) - complex(v).conjugate()) > tol * max(1.0, abs(complex(v))):
                return False
        return True

    def harmonic_defect(self):
        return sum(abs(complex(c)) ** 2 for (a, b), c in self.terms.items() if a >= 1 and b >= 1)

    def __eq__(self, other):
        return isinstance(other, LinePoly) and self.terms == other.terms

    def __repr__(self):
        return f"LinePoly({self.terms})"


CoordChange = namedtuple("CoordChange", "k l tau")


def homogeneous_parts(p):
    parts = {}
    for m, c in p.terms.items():
        parts.setdefault(sum(m), {})[m] = c
    return {deg: MixedPoly._raw(t) for deg, t in sorted(parts.items())}


def lowest_part(p):
    parts = homogeneous_parts(p)
    return parts[min(parts)] if parts else MixedPoly()


def is_pluriharmonic_free(p):
    for (a, b, c, d) in p.terms:
        if (b == 0 and d == 0) or (a == 0 and c == 0):
            return False
    return True


def _powers(x, n):
    out = [to_coef(1)]
    for _ in range(n):
        out.append(out[-1] * x)
    return out


def restrict_to_line(p, tau):
    """Substitute z = tau*w, zbar = conj(tau)*wbar."""
    tau = to_coef(tau)
    tb = _conj(tau)
    na = max((m[0] for m in p.terms), default=0)
    nb = max((m[1] for m in p.terms), default=0)
    tp, tbp = _powers(tau, na), _powers(tb, nb)
    t = {}
    for (a, b, c, d), v in p.terms.items():
        key = (a + c, b + d)
        val = v * tp[a] * tbp[b]
        t[key] = t[key] + val if key in t else val
    return LinePoly(t)


def substitute_coordinates(p, psi):
    """Expand p(u^k + tau v^l, v^l) with the conjugate variables transformed alike."""
    k, l, tau = psi
    tau = to_coef(tau)
    tb = _conj(tau)
    na = max((m[0] for m in p.terms), default=0)
    nb = max((m[1] for m in p.terms), default=0)
    tp, tbp = _powers(tau, na), _powers(tb, nb)
    t = {}
    for (a, b, c, d), v in p.terms.items():
        for i in range(a + 1):
            ci = comb(a, i) * tp[a - i]
            for j in range(b + 1):
                cj = comb(b, j) * tbp[b - j]
                m = (k * i, k * j, l * (a - i + c), l * (b - j + d))
                val = v * ci * cj
                t[m] = t[m] + val if m in t else val
    return MixedPoly._raw(t)


def linear_substitute(p, U):
    """p(U00 z + U01 w, U10 z + U11 w) with conjugates transformed by conj(U)."""
    u = [[to_coef(U[i][j]) for j in range(2)] for i in range(2)]
    zn = Z * u[0][0] + W * u[0][1]
    wn = Z * u[1][0] + W * u[1][1]
    znb, wnb = zn.conj(), wn.conj()
    cache = {}

    def pw(base, key, n):
        if (key, n) not in cache:
            cache[(key, n)] = base ** n
        return cache[(key, n)]

    out = MixedPoly()
    for (a, b, c, d), v in p.terms.items():
        out = out + pw(zn, 0, a) * pw(znb, 1, b) * pw(wn, 2, c) * pw(wnb, 3, d) * v
    return out


def wirtinger_derivative(p, var):
    """Formal partial derivative in one of z, zbar, w, wbar."""
    idx = {"z": 0, "zbar": 1, "w": 2, "wbar": 3}[var]
    t = {}
    for m, c in p.terms.items():
        e = m[idx]
        if e == 0:
            continue
        mm = list(m)
        mm[idx] = e - 1
        t[tuple(mm)] = c * e
    return MixedPoly._raw(t)


def random_real_poly(rng, n_terms=6, max_deg=8, max_coef=5):
    """Random real polynomial without pluriharmonic terms (tests and demos)."""
    t = {}
    for _ in range(n_terms):
        while True:
            m = tuple(int(x) for x in rng.integers(0, max_deg // 2 + 1, size=4))
            if sum(m) == 0 or sum(m) > max_deg:
                continue
            a, b, c, d = m
            if (b == 0 and d == 0) or (a == 0 and c == 0):
                continue
            break
        re = Fraction(int(rng.integers(-max_coef, max_coef + 1)), int(rng.integers(1, 4)))
        im = Fraction(int(rng.integers(-max_coef, max_coef + 1)), int(rng.integers(1, 4)))
        cm = (b, a, d, c)
        if cm == m:
            im = Fraction(0)
        c0 = CQ(re, im)
        t[m] = t.get(m, CQ(0)) + c0
        t[cm] = t.get(cm, CQ(0)) + c0.conjugate() if cm != m else t[m]
    return MixedPoly(t)
