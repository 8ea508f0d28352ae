"""Koszul descent for the division (g1, g2, g3) = (1/Phi, P2/Phi, P3/Phi).

Forms live in the local coordinates (xi, z, w) = eta - z.  A (0,1)-form is
the triple of dxi~, dz~, dw~ coefficients; a (0,2)-form is the triple of
dz~^dw~, dxi~^dw~, dxi~^dz~ coefficients.
"""
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import DivisionIdentityViolated, SingularPoint

COORDS = ("xi", "z", "w")
PAIRS = ((1, 2), (0, 2), (0, 1))


@dataclass(frozen=True)
class Form01:
    c: tuple

    def __add__(self, o):
        return Form01(tuple(ex.add(a, b) for a, b in zip(self.c, o.c)))

    def __sub__(self, o):
        return Form01(tuple(ex.sub(a, b) for a, b in zip(self.c, o.c)))

    def scale(self, f):
        return Form01(tuple(ex.mul(f, a) for a in self.c))

    def evaluate(self, env, check=True):
        out = np.array([np.broadcast_to(ex.evaluate(a, env), _shape(env)) for a in self.c])
        if check and not np.isfinite(out).all():
            raise SingularPoint("non-finite form component")
        return out


@dataclass(frozen=True)
class Form02:
    c: tuple

    def __add__(self, o):
        return Form02(tuple(ex.add(a, b) for a, b in zip(self.c, o.c)))

    def __sub__(self, o):
        return Form02(tuple(ex.sub(a, b) for a, b in zip(self.c, o.c)))

    def scale(self, f):
        return Form02(tuple(ex.mul(f, a) for a in self.c))

    def evaluate(self, env, check=True):
        out = np.array([np.broadcast_to(ex.evaluate(a, env), _shape(env)) for a in self.c])
        if check and not np.isfinite(out).all():
            raise SingularPoint("non-finite form component")
        return out


ZERO01 = Form01((ex.ZERO,) * 3)
ZERO02 = Form02((ex.ZERO,) * 3)


def _shape(env):
    return np.broadcast(*[np.asarray(v) for v in env.values()]).shape


def dbar(f):
    """Symbolic d-bar of a function."""
    return Form01(tuple(ex.diff(f, n, True) for n in COORDS))


def dbar1(a):
    """d-bar of a (0,1)-form."""
    return Form02(tuple(ex.sub(ex.diff(a.c[j], COORDS[i], True), ex.diff(a.c[i], COORDS[j], True))
                        for i, j in PAIRS))


def wedge(a, b):
    return Form02(tuple(ex.sub(ex.mul(a.c[i], b.c[j]), ex.mul(a.c[j], b.c[i])) for i, j in PAIRS))


# ------------------------------------------------------------------ numeric d-bar

def _shift(env, name, dz):
    e = dict(env)
    e[name] = np.asarray(env[name]) + dz
    return e


def dbar_fd(fn, env, h=1e-5):
    """d-bar of a numeric evaluator by Richardson-extrapolated central differences."""
    out = []
    for n in COORDS:
        def cd(s):
            dx = (fn(_shift(env, n, s)) - fn(_shift(env, n, -s))) / (2 * s)
            dy = (fn(_shift(env, n, 1j * s)) - fn(_shift(env, n, -1j * s))) / (2 * s)
            return 0.5 * (dx + 1j * dy)
        out.append((4 * cd(h / 2) - cd(h)) / 3)
    return np.array(out)


def dbar1_fd(fns, env, h=1e-5):
    """d-bar of a (0,1)-form given as three numeric evaluators; returns (0,2) components."""
    d = [dbar_fd(f, env, h) for f in fns]
    return np.array([d[j][i] - d[i][j] for i, j in PAIRS])


def dbar2_fd(fns, env, h=1e-5):
    """The single (0,3) component of d-bar of a (0,2)-form."""
    d = [dbar_fd(f, env, h) for f in fns]
    # basis (z~w~, xi~w~, xi~z~): d = d_xi c0 - d_z c1 + d_w c2
    return d[0][0] - d[1][1] + d[2][2]


# ------------------------------------------------------------------ division data

@dataclass
class Division:
    phi: object
    P2: object
    P3: object

    @property
    def g(self):
        inv = ex.pow_(self.phi, -1)
        return inv, ex.mul(self.P2, inv), ex.mul(self.P3, inv)


def division_residual(g, env):
    xi, z, w = [ex.var(n) for n in COORDS]
    s = ex.add(ex.mul(g[0], xi), ex.mul(g[1], z), ex.mul(g[2], w))
    return np.abs(ex.evaluate(s, env) - 1)


def check_division(g, env, tol=1e-10):
    r = division_residual(g, env)
    if not np.all(r < tol):
        raise DivisionIdentityViolated(f"sampled residual {np.nanmax(r):.3g} above {tol:.3g}")
    return float(np.max(r)) if r.size else 0.0


@dataclass
class KoszulH:
    h12: Form01
    h13: Form01
    h23: Form01


def koszul_h(g1, g2, g3, env=None, tol=1e-10):
    """h_ij = g_j dbar g_i - g_i dbar g_j."""
    if env is not None:
        check_division((g1, g2, g3), env, tol)
    d = [dbar(g1), dbar(g2), dbar(g3)]
    g = (g1, g2, g3)

    def h(i, j):
        return d[i].scale(g[j]) - d[j].scale(g[i])
    return KoszulH(h(0, 1), h(0, 2), h(1, 2))


def koszul_h_closed(div):
    """Closed forms of h in terms of Phi, P2, P3."""
    m2 = ex.pow_(div.phi, -2)
    dP2, dP3 = dbar(div.P2), dbar(div.P3)
    return KoszulH(dP2.scale(ex.neg(m2)), dP3.scale(ex.neg(m2)),
                   (dP2.scale(div.P3) - dP3.scale(div.P2)).scale(m2))


def koszul_omega(g1, g2, g3, H=None):
    """omega = g1 dbar h23 - g2 dbar h13 + g3 dbar h12."""
    H = H or koszul_h(g1, g2, g3)
    return dbar1(H.h23).scale(g1) - dbar1(H.h13).scale(g2) + dbar1(H.h12).scale(g3)


def koszul_omega_closed(div):
    return wedge(dbar(div.P3), dbar(div.P2)).scale(ex.mul(2, ex.pow_(div.phi, -3)))


def dbar_g_identities(g, H):
    """Residual forms of the three displayed dbar g identities (all should vanish)."""
    xi, z, w = [ex.var(n) for n in COORDS]
    d1, d2, d3 = dbar(g[0]), dbar(g[1]), dbar(g[2])
    r1 = d1 - H.h12.scale(z) - H.h13.scale(w)
    r2 = d2 + H.h12.scale(xi) - H.h23.scale(w)
    r3 = d3 + H.h13.scale(xi) + H.h23.scale(z)
    return r1, r2, r3


def dbar_h_identities(H, omega):
    """dbar h12 = omega w, dbar h13 = -omega z, dbar h23 = omega xi; returns the residuals."""
    xi, z, w = [ex.var(n) for n in COORDS]
    return (dbar1(H.h12) - omega.scale(w), dbar1(H.h13) + omega.scale(z),
            dbar1(H.h23) - omega.scale(xi))


# ------------------------------------------------------------------ s forms and final h

def assemble_s(H, u=None):
    """Right-hand sides as displayed with the closed h forms: s1 = h12 - w u, s2 = h13 - z u, s3 = h23 - xi u."""
    u = u or ZERO01
    xi, z, w = [ex.var(n) for n in COORDS]
    return (H.h12 - u.scale(w), H.h13 - u.scale(z), H.h23 - u.scale(xi))


def assemble_s_combination(H, u=None):
    """Right-hand sides forced by the final combination rule: s2 carries +z u."""
    u = u or ZERO01
    xi, z, w = [ex.var(n) for n in COORDS]
    return (H.h12 - u.scale(w), H.h13 + u.scale(z), H.h23 - u.scale(xi))


def s_sign_consistency(H, u, env):
    """Largest difference between the two s2 conventions; zero only when z u vanishes."""
    a = assemble_s(H, u)[1].evaluate(env)
    b = assemble_s_combination(H, u)[1].evaluate(env)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def assemble_h_final(g, v1, v2, v3):
    """h1 = g1 - v1 z - v2 w, h2 = g2 + v1 xi - v3 w, h3 = g3 + v2 xi + v3 z."""
    xi, z, w = [ex.var(n) for n in COORDS]
    v1, v2, v3 = [ex._wrap(v) for v in (v1, v2, v3)]
    h1 = ex.sub(ex.sub(g[0], ex.mul(v1, z)), ex.mul(v2, w))
    h2 = ex.sub(ex.add(g[1], ex.mul(v1, xi)), ex.mul(v3, w))
    h3 = ex.add(g[2], ex.mul(v2, xi), ex.mul(v3, z))
    return h1, h2, h3


def final_h_dbar_residual(g, H, u, v, env):
    """dbar h_j when dbar v_j are replaced by the combination-rule s forms (identically zero)."""
    xi, z, w = [ex.var(n) for n in COORDS]
    s1, s2, s3 = assemble_s_combination(H, u)
    d = [dbar(x) for x in g]
    r1 = d[0] - s1.scale(z) - s2.scale(w)
    r2 = d[1] + s1.scale(xi) - s3.scale(w)
    r3 = d[2] + s2.scale(xi) + s3.scale(z)
    return [r.evaluate(env) for r in (r1, r2, r3)]


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = np.maximum(np.abs(a), np.abs(b)).max(axis=0) if a.ndim > 1 else np.maximum(np.abs(a), np.abs(b))
    return np.abs(a - b) / np.maximum(scale, 1e-300)


def generic_points(rng, n, phi, min_phi=1e-3, min_norm=1e-2, radius=1.0):
    """Sample (xi, z, w) with |Phi| > min_phi and ||(z, w)|| > min_norm."""
    from .synth import sample_points
    chunks, got = [], 0
    for _ in range(50):
        env = sample_points(rng, 2 * n, radius=radius, min_norm=min_norm)
        f = np.abs(ex.evaluate(phi, env))
        keep = f > min_phi
        chunks.append({k: v[keep] for k, v in env.items()})
        got += keep.sum()
        if got >= n:
            break
    out = {k: np.concatenate([c[k] for c in chunks])[:n] for k in chunks[0]}
    return out
