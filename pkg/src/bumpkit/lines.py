"""Complex lines through 0 along which a homogeneous real polynomial is harmonic.

A line {z = tau*w} is harmonic for p when the restriction p(tau*w, w) has no
mixed w^a wbar^b terms with a, b >= 1.  The defect is the sum of squared
moduli of those coefficients; its zeros are found by a grid scan followed by
Gauss-Newton on the coefficient residuals and a high precision polish.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np

from .errors import NonFiniteLineSet, NotHomogeneous, RotationFailed
from .realpoly import CQ, homogeneous_parts, is_exact, linear_substitute, restrict_to_line


@dataclass
class SolverConfig:
    tol: float = 1e-10
    grid: int = 161
    dedup: float = 1e-8
    max_iter: int = 50
    mp_dps: int = 50
    snap_denominator: int = 1000
    seed: int = 0
    rotation_retries: int = 8


@dataclass
class HarmonicLine:
    tau: complex
    residual: float
    multiplicity_hint: int = 1
    exact: object = None   # CQ when the slope is rational

    @property
    def value(self):
        return self.exact if self.exact is not None else self.tau


class LineSearch(NamedTuple):
    lines: list
    w_zero_harmonic: bool


@dataclass
class RotationRecord:
    matrix: tuple
    applied: bool = False
    seed: int = -1

    def as_complex(self):
        return np.array([[complex(x) for x in row] for row in self.matrix], dtype=complex)


IDENTITY = ((CQ(1), CQ(0)), (CQ(0), CQ(1)))


def _check_homog(p):
    degs = {sum(m) for m in p.terms}
    if len(degs) > 1:
        raise NotHomogeneous(f"polynomial has degrees {sorted(degs)}")


class _MixedCoefs:
    """The mixed restriction coefficients c_AB(tau), A, B >= 1, as tau polynomials."""

    def __init__(self, p):
        groups = {}
        for (a, b, c, d), v in p.terms.items():
            A, B = a + c, b + d
            if A >= 1 and B >= 1:
                groups.setdefault((A, B), []).append((a, b, v))
        self.keys = sorted(groups)
        self.groups = [groups[k] for k in self.keys]
        self.na = max((a for g in self.groups for a, _, _ in g), default=0)
        self.nb = max((b for g in self.groups for _, b, _ in g), default=0)

    def values(self, tau):
        tau = np.asarray(tau, dtype=complex)
        tb = np.conj(tau)
        tp = [np.ones_like(tau)]
        for _ in range(self.na):
            tp.append(tp[-1] * tau)
        tbp = [np.ones_like(tau)]
        for _ in range(self.nb):
            tbp.append(tbp[-1] * tb)
        out = np.zeros((len(self.groups),) + tau.shape, dtype=complex)
        for i, g in enumerate(self.groups):
            for a, b, v in g:
                out[i] += complex(v) * tp[a] * tbp[b]
        return out

    def defect(self, tau):
        c = self.values(tau)
        return np.sum(np.abs(c) ** 2, axis=0)

    def jac(self, tau):
        """d c / d x and d c / d y at tau = x + i y."""
        tau = complex(tau)
        dx = np.zeros(len(self.groups), dtype=complex)
        dy = np.zeros(len(self.groups), dtype=complex)
        tb = tau.conjugate()
        for i, g in enumerate(self.groups):
            for a, b, v in g:
                v = complex(v)
                dt = a * tau ** (a - 1) * tb ** b if a else 0.0
                dtb = b * tau ** a * tb ** (b - 1) if b else 0.0
                dx[i] += v * (dt + dtb)
                dy[i] += v * 1j * (dt - dtb)
        return dx, dy

    def root_bound(self):
        r = 1.0
        for g in self.groups:
            top = max(a + b for a, b, _ in g)
            if top == 0:
                continue
            lead = max(abs(complex(v)) for a, b, v in g if a + b == top)
            if lead == 0:
                continue
            big = max(abs(complex(v)) for a, b, v in g)
            r = max(r, 1.0 + big / lead)
        return min(max(r, 2.0), 1e3)

    # high precision versions
    def _mp_groups(self):
        out = []
        for g in self.groups:
            gg = []
            for a, b, v in g:
                if is_exact(v):
                    c = mpmath.mpc(mpmath.mpf(v.re.numerator) / v.re.denominator,
                                   mpmath.mpf(v.im.numerator) / v.im.denominator)
                else:
                    c = mpmath.mpc(v.real, v.imag)
                gg.append((a, b, c))
            out.append(gg)
        return out

    def mp_residual(self, groups, tau):
        tb = mpmath.conj(tau)
        res, jx, jy = [], [], []
        for g in groups:
            c = mpmath.mpc(0)
            dx = mpmath.mpc(0)
            dy = mpmath.mpc(0)
            for a, b, v in g:
                c += v * tau ** a * tb ** b
                dt = a * tau ** (a - 1) * tb ** b if a else 0
                dtb = b * tau ** a * tb ** (b - 1) if b else 0
                dx += v * (dt + dtb)
                dy += v * 1j * (dt - dtb)
            res.append(c)
            jx.append(dx)
            jy.append(dy)
        return res, jx, jy


def harmonicity_defect(p_homog, tau):
    _check_homog(p_homog)
    return float(_MixedCoefs(p_homog).defect(complex(tau)))


def _gn_step(r, dx, dy):
    """Least squares step for the real system [Re r, Im r] with columns dx, dy."""
    a11 = np.sum(np.abs(dx) ** 2)
    a22 = np.sum(np.abs(dy) ** 2)
    a12 = np.sum((np.conj(dx) * dy).real)
    b1 = np.sum((np.conj(dx) * r).real)
    b2 = np.sum((np.conj(dy) * r).real)
    det = a11 * a22 - a12 * a12
    tr = a11 + a22
    if tr == 0:
        return 0.0
    if abs(det) <= 1e-10 * tr * tr:
        # rank one normal matrix: minimum norm step
        return -(b1 + 1j * b2) / tr
    sx = (a22 * b1 - a12 * b2) / det
    sy = (a11 * b2 - a12 * b1) / det
    return -(sx + 1j * sy)


_MULTIPLIERS = (1.0, 2.0, 0.5, 3.0, 4.0)


def _refine(mc, tau, cfg):
    f = float(mc.defect(tau))
    for _ in range(cfg.max_iter):
        if f == 0.0:
            break
        r = mc.values(tau)
        dx, dy = mc.jac(tau)
        step = _gn_step(r, dx, dy)
        best, bf = None, f
        for m in _MULTIPLIERS:
            t = tau + m * step
            ft = float(mc.defect(t))
            if ft < bf:
                best, bf = t, ft
        if best is None:
            # damped retry
            t = tau + 0.5 * 0.5 * step
            ft = float(mc.defect(t))
            if ft >= f:
                break
            best, bf = t, ft
        if abs(best - tau) < 1e-16 * (1 + abs(tau)):
            tau, f = best, bf
            break
        tau, f = best, bf
    return tau, f


def _polish(mc, tau, cfg):
    groups = mc._mp_groups()
    with mpmath.workdps(cfg.mp_dps):
        t = mpmath.mpc(tau.real, tau.imag)

        def dsum(res):
            return sum(abs(x) ** 2 for x in res)

        res, jx, jy = mc.mp_residual(groups, t)
        f = dsum(res)
        for _ in range(200):
            if f == 0:
                break
            a11 = sum(abs(x) ** 2 for x in jx)
            a22 = sum(abs(x) ** 2 for x in jy)
            a12 = sum((mpmath.conj(x) * y).real for x, y in zip(jx, jy))
            b1 = sum((mpmath.conj(x) * r).real for x, r in zip(jx, res))
            b2 = sum((mpmath.conj(y) * r).real for y, r in zip(jy, res))
            det = a11 * a22 - a12 * a12
            tr = a11 + a22
            if tr == 0:
                break
            if abs(det) <= mpmath.mpf(10) ** (-cfg.mp_dps // 3) * tr * tr:
                step = -(b1 + 1j * b2) / tr
            else:
                step = -((a22 * b1 - a12 * b2) + 1j * (a11 * b2 - a12 * b1)) / det
            best, bf = None, f
            for m in _MULTIPLIERS:
                tt = t + m * step
                rr = mc.mp_residual(groups, tt)[0]
                ff = dsum(rr)
                if ff < bf:
                    best, bf = tt, ff
            if best is None:
                break
            t = best
            res, jx, jy = mc.mp_residual(groups, t)
            f = bf
        return complex(t)


def _snap(p, tau, cfg):
    if not p.is_exact():
        return None
    re = Fraction(tau.real).limit_denominator(cfg.snap_denominator)
    im = Fraction(tau.imag).limit_denominator(cfg.snap_denominator)
    # multiple roots are only accurate to ~1e-9; the exact restriction test below decides
    if abs(complex(float(re), float(im)) - tau) > 1e-7:
        return None
    q = CQ(re, im)
    lp = restrict_to_line(p, q)
    if any(a >= 1 and b >= 1 for (a, b) in lp.terms):
        return None
    return q


def w_zero_harmonic(p_homog, tol=0.0):
    """True when the restriction to {w = 0} has no mixed z^a zbar^b term."""
    for (a, b, c, d), v in p_homog.terms.items():
        if c == 0 and d == 0 and a >= 1 and b >= 1 and abs(complex(v)) > tol:
            return False
    return True


def find_harmonic_lines(p_homog, cfg=None):
    cfg = cfg or SolverConfig()
    _check_homog(p_homog)
    if not p_homog.terms:
        raise NonFiniteLineSet("zero polynomial is harmonic along every line")
    deg = p_homog.degree()
    mc = _MixedCoefs(p_homog)
    flag = w_zero_harmonic(p_homog)
    if not mc.groups:
        raise NonFiniteLineSet("restriction is harmonic for every slope")
    R = mc.root_bound()
    n = cfg.grid
    xs = np.linspace(-R, R, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    T = X + 1j * Y
    D = mc.defect(T)
    L = np.log(D + 1e-300)
    pad = np.pad(L, 1, constant_values=np.inf)
    is_min = np.ones_like(L, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            is_min &= L <= pad[1 + dx:1 + dx + n, 1 + dy:1 + dy + n]
    seeds = T[is_min]
    found = []
    for s in seeds:
        t, f = _refine(mc, complex(s), cfg)
        if f < cfg.tol * 1e2:
            found.append(t)
    # coarse merge before the expensive polish
    clusters = []
    for t in found:
        for c in clusters:
            if abs(c[0] - t) < 1e-5:
                c[1] += 1
                break
        else:
            clusters.append([t, 1])
    limit = max(deg * deg, 4)
    if len(clusters) > limit:
        raise NonFiniteLineSet(
            f"{len(clusters)} separate near-harmonic slopes found (limit {limit}); "
            "the defect vanishes along a curve")
    lines = []
    for t, mult in clusters:
        t = _polish(mc, t, cfg)
        exact = _snap(p_homog, t, cfg)
        if exact is not None:
            t = complex(exact)
        res = float(mc.defect(t))
        if res >= cfg.tol:
            continue
        for ln in lines:
            if abs(ln.tau - t) < cfg.dedup:
                ln.multiplicity_hint += mult
                break
        else:
            lines.append(HarmonicLine(t, res, mult, exact))
    lines.sort(key=lambda ln: (round(ln.tau.real, 9), round(ln.tau.imag, 9)))
    return LineSearch(lines, flag)


def random_unitary(seed, denom=7):
    """Exact unitary with Gaussian rational entries via the Cayley transform."""
    rng = np.random.default_rng(seed)

    def rnd():
        return Fraction(int(rng.integers(-denom, denom + 1)), denom)

    a, b = rnd(), rnd()
    c = CQ(rnd(), rnd())
    # S skew-Hermitian: [[i a, c], [-conj(c), i b]]
    S = [[CQ(0, a), c], [-c.conjugate(), CQ(0, b)]]
    I = [[CQ(1), CQ(0)], [CQ(0), CQ(1)]]
    M = [[I[i][j] - S[i][j] for j in range(2)] for i in range(2)]
    N = [[I[i][j] + S[i][j] for j in range(2)] for i in range(2)]
    det = N[0][0] * N[1][1] - N[0][1] * N[1][0]
    Ninv = [[N[1][1] / det, -N[0][1] / det], [-N[1][0] / det, N[0][0] / det]]
    U = [[M[i][0] * Ninv[0][j] + M[i][1] * Ninv[1][j] for j in range(2)] for i in range(2)]
    return tuple(tuple(row) for row in U)


def apply_rotation(p, lines_include_w_zero, cfg=None):
    cfg = cfg or SolverConfig()
    if not lines_include_w_zero:
        return p, RotationRecord(IDENTITY, False)
    for attempt in range(cfg.rotation_retries):
        seed = cfg.seed * 1000 + attempt + 1
        U = random_unitary(seed)
        q = linear_substitute(p, U)
        parts = homogeneous_parts(q)
        low = parts[min(parts)]
        if not w_zero_harmonic(low, tol=1e-12):
            return q, RotationRecord(U, True, seed)
    raise RotationFailed(f"no rotation within {cfg.rotation_retries} attempts moves every line off the w=0 axis")


def unitarity_defect(U):
    M = np.array([[complex(x) for x in row] for row in U])
    return float(np.max(np.abs(M.conj().T @ M - np.eye(2))))
