"""Support function, division functions and weights built from a bump graph.

For every node the builder returns a triple (D, Zc, Wc) of expressions in
the node's coordinates with D = Zc*z + Wc*w identically, where z, w are the
level-0 coordinates.  Phi = xi - A*D_root, P2 = -A*Zc_root, P3 = -A*Wc_root,
so xi + P2 z + P3 w = Phi holds term by term.
"""
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .bumpgraph import ROOT, transform_chain
from .errors import ExponentNotGreaterThanOne
from .params import BumpParams

XI = ex.var("xi")
Z0 = ex.var("z")
W0 = ex.var("w")


@dataclass
class CutoffSpec:
    node: tuple
    directions: list
    half_widths: list
    order: int = 0


@dataclass
class Synthesis:
    phi: object
    P2: object
    P3: object
    D: dict = field(default_factory=dict)
    cutoffs: dict = field(default_factory=dict)


def chordal(t1, t2):
    """Sine of the angle between the lines z = t1 w and z = t2 w."""
    t1, t2 = complex(t1), complex(t2)
    return abs(t1 - t2) / (np.sqrt(1 + abs(t1) ** 2) * np.sqrt(1 + abs(t2) ** 2))


def cone_widths(taus, fraction=0.4):
    if len(taus) < 2:
        return [fraction] * len(taus)
    sep = min(chordal(a, b) for i, a in enumerate(taus) for b in taus[i + 1:])
    return [fraction * sep] * len(taus)


def angle_to_line(u, v, tau):
    """Expression for |u - tau v| / (||(u, v)|| sqrt(1 + |tau|^2))."""
    tau = complex(tau)
    return ex.mul(1.0 / np.sqrt(1 + abs(tau) ** 2), ex.modpow(u - tau * v, 1),
                  ex.norm_pow([u, v], -1))


def cutoff(u, v, tau, width):
    return ex.smooth(1 - angle_to_line(u, v, tau) * (1.0 / width))


class _Builder:
    def __init__(self, g, params):
        self.g = g
        self.p = params
        self.cache = {}
        self.cutoffs = {}

    def chain(self, nid):
        return transform_chain(self.g, nid).steps

    # splitting of c*|u_j|^e and c*|v_j|^e along the chain of nid
    def split_v(self, steps, j, c, e):
        prod = 1
        for _, _, b in steps[:j]:
            prod *= b
        r = e / prod
        if not r > 1:
            raise ExponentNotGreaterThanOne(f"w exponent {r} at level {j}")
        return ex.ZERO, ex.mul(c, ex.modpow(W0, r - 2), ex.conj(W0))

    def split_u(self, steps, j, c, e):
        if j == 0:
            if not e > 1:
                raise ExponentNotGreaterThanOne(f"z exponent {e}")
            return ex.mul(c, ex.modpow(Z0, e - 2), ex.conj(Z0)), ex.ZERO
        tau, a, _ = steps[j - 1]
        e2 = e / a
        u, v = [ex.var(n) for n in ex.coord_names(j - 1)]
        f = ex.modpow(u - complex(tau) * v, e2) / (ex.modpow(u, e2) + ex.modpow(v, e2))
        cf = ex.mul(c, f)
        z1, w1 = self.split_u(steps, j - 1, cf, e2)
        z2, w2 = self.split_v(steps, j - 1, cf, e2)
        return ex.add(z1, z2), ex.add(w1, w2)

    def split_term(self, steps, m, c, T, e):
        u, v = [ex.var(n) for n in ex.coord_names(m)]
        f = T / (ex.modpow(u, e) + ex.modpow(v, e))
        cf = ex.mul(c, f)
        z1, w1 = self.split_u(steps, m, cf, e)
        z2, w2 = self.split_v(steps, m, cf, e)
        return ex.add(z1, z2), ex.add(w1, w2)

    def node(self, nid):
        if nid in self.cache:
            return self.cache[nid]
        g, p = self.g, self.p
        n = g[nid]
        m = nid[0]
        steps = self.chain(nid)
        u, v = [ex.var(s) for s in ex.coord_names(m)]
        e = n.d2
        if not n.children:
            if n.affine_only:
                prod = 1
                for _, _, b in steps[:-1]:
                    prod *= b
                D = ex.modpow(v, 2 * p.L * prod)
                Zc = ex.ZERO
                Wc = ex.mul(ex.pow_(v, (p.L - 1) * prod), ex.pow_(ex.conj(v), p.L * prod))
            else:
                D = ex.norm_pow([u, v], e)
                Zc, Wc = self.split_term(steps, m, ex.ONE, D, e)
            out = (D, Zc, Wc)
            self.cache[nid] = out
            return out
        kids = [g[c] for c in n.children]
        taus = [complex(k.tau) for k in kids]
        widths = cone_widths(taus, p.cone_fraction)
        self.cutoffs[nid] = CutoffSpec(nid, taus, widths)
        Dt, Zt, Wt = [], [], []
        chis = []
        for kid, tau, width in zip(kids, taus, widths):
            chi = cutoff(u, v, tau, width)
            chis.append(chi)
            lin = u - tau * v
            T = ex.add(ex.modpow(lin, e), ex.mul(ex.modpow(lin, e - n.q2), ex.modpow(v, n.q2)))
            zc, wc = self.split_term(steps, m, chi, T, e)
            Dc, Zcc, Wcc = self.node(kid.id)
            kt = kid.tau_value
            Dt.append(ex.mul(chi, ex.add(T, ex.pa(Dc, m + 1, kid.k, kid.l, kt))))
            Zt.append(ex.add(zc, ex.mul(chi, ex.pa(Zcc, m + 1, kid.k, kid.l, kt))))
            Wt.append(ex.add(wc, ex.mul(chi, ex.pa(Wcc, m + 1, kid.k, kid.l, kt))))
        bulk = 1 - ex.add(*chis)
        N = ex.norm_pow([u, v], e)
        zb, wb = self.split_term(steps, m, bulk, N, e)
        out = (ex.add(*Dt, ex.mul(bulk, N)), ex.add(*Zt, zb), ex.add(*Wt, wb))
        self.cache[nid] = out
        return out


def synth_D(g, nid, params=None):
    return _Builder(g, params or BumpParams()).node(nid)[0]


def synth_all(g, params=None):
    params = params or BumpParams()
    b = _Builder(g, params)
    D, Zc, Wc = b.node(ROOT)
    A = params.A
    phi = XI - A * D
    return Synthesis(phi, ex.mul(-A, Zc), ex.mul(-A, Wc),
                     {nid: b.cache[nid][0] for nid in b.cache}, b.cutoffs)


def synth_phi(g, params=None):
    return synth_all(g, params).phi


def synth_P(g, phi=None, params=None):
    s = synth_all(g, params)
    return s.P2, s.P3


def cf_residual(phi, P2, P3, env):
    """|(xi + P2 z + P3 w)/Phi - 1| at the given points."""
    lhs = ex.evaluate(XI + P2 * Z0 + P3 * W0, env)
    f = ex.evaluate(phi, env)
    return np.abs(lhs / f - 1)


# ------------------------------------------------------------------ line models

@dataclass
class LineModel:
    """Glued support function for lines z = tau_i w with data (j_i, K_i)."""
    k: int
    lines: list          # (tau, j, K)
    A: float = 10.0
    cone_fraction: float = 0.4


def synth_line_model(model):
    k, A = model.k, model.A
    z, w = Z0, W0
    zb, wb = ex.conj(z), ex.conj(w)
    taus = [complex(t) for t, _, _ in model.lines]
    widths = cone_widths(taus, model.cone_fraction)
    F, P2, P3, chis = [], [], [], []
    for (tau, j, K), width in zip(model.lines, widths):
        tau = complex(tau)
        chi = cutoff(z, w, tau, width)
        chis.append(chi)
        lin = z - tau * w
        linb = ex.conj(lin)
        F.append(chi * (ex.modpow(lin, 2 * k) + ex.modpow(lin, 2 * j) * ex.modpow(w, 2 * k - 2 * j)
                        + ex.modpow(w, 2 * K)))
        p2 = ex.pow_(lin, k - 1) * ex.pow_(linb, k)
        p3 = (-tau) * p2 + ex.modpow(lin, 2 * j) * ex.pow_(w, k - j - 1) * ex.pow_(wb, k - j) \
            + ex.pow_(w, K - 1) * ex.pow_(wb, K)
        P2.append(chi * p2)
        P3.append(chi * p3)
    bulk = 1 - ex.add(*chis)
    F.append(bulk * (ex.modpow(z, 2 * k) + ex.modpow(w, 2 * k)))
    P2.append(bulk * ex.pow_(z, k - 1) * ex.pow_(zb, k))
    P3.append(bulk * ex.pow_(w, k - 1) * ex.pow_(wb, k))
    phi = XI - A * ex.add(*F)
    return Synthesis(phi, ex.mul(-A, ex.add(*P2)), ex.mul(-A, ex.add(*P3)))


# ------------------------------------------------------------------ weights

@dataclass
class WeightSet:
    H: dict
    rho: dict
    kappa: object
    Psi0: object
    psi0t: object
    psi1: object
    psi2: object
    psi3: object
    k: object
    J: int

    def named(self):
        out = {}
        for nid in sorted(self.H):
            out[f"H_{nid[0]}_{nid[1]}"] = self.H[nid]
            out[f"rho_{nid[0]}_{nid[1]}"] = self.rho[nid]
        out.update(kappa=self.kappa, Psi0=self.Psi0, psi0t=self.psi0t,
                   psi1=self.psi1, psi2=self.psi2, psi3=self.psi3)
        return out


def leaf_H(g, leaf, params):
    """The path function H for a leaf: cutoffs replaced by 1 on the path, preimages averaged."""
    b = _Builder(g, params)
    path = g.path(leaf)
    E = b.node(leaf)[0]
    for child_id, par_id in zip(reversed(path[1:]), reversed(path[:-1])):
        par, kid = g[par_id], g[child_id]
        m = par_id[0]
        u, v = [ex.var(s) for s in ex.coord_names(m)]
        lin = u - complex(kid.tau) * v
        E = ex.add(ex.modpow(lin, par.d2), ex.mul(ex.modpow(lin, par.d2 - par.q2), ex.modpow(v, par.q2)),
                   ex.pa(E, m + 1, kid.k, kid.l, kid.tau_value))
    return E


def h_of(H):
    return ex.add(ex.modpow(XI, 1), ex.modpow(XI, 2), H)


def synth_weights(g, params=None, phi=None):
    params = params or BumpParams()
    if phi is None:
        phi = synth_phi(g, params)
    leaves = g.leaves()
    J = len(leaves)
    k = g[ROOT].d2 / 2
    params.J = J
    params.validate(k, J)
    eps, et, L, M = params.eps, params.eps_t, params.L, params.M
    H = {}
    rho = {}
    if g[ROOT].children:
        for lf in leaves:
            H[lf] = leaf_H(g, lf, params)
    else:
        H[ROOT] = _Builder(g, params).node(ROOT)[0]
    for nid, h in H.items():
        rho[nid] = ex.log(h_of(h))
    n2 = ex.add(ex.modpow(XI, 2), ex.modpow(Z0, 2), ex.modpow(W0, 2))
    kappa = ex.log(ex.add(ex.modpow(XI, 1), ex.modpow(XI, 2), ex.modpow(Z0, 2 * M), ex.modpow(W0, 2 * M)))
    logphi = ex.log(ex.modpow(phi, 1))
    Psi0 = ex.add(ex.mul(-(1.0 / k + eps * J), logphi), ex.mul(params.d, n2),
                  *[ex.mul(eps, r) for r in rho.values()])
    psi0t = ex.add(Psi0, ex.mul(-et, logphi), ex.mul(et, kappa))
    n4L = ex.rpow(n2, 2 * L)
    lg = ex.log(n2)
    psi1 = ex.add(psi0t, ex.log(ex.add(ex.modpow(W0, 2), n4L)), lg)
    psi2 = ex.add(psi0t, ex.log(ex.add(ex.modpow(Z0, 2), n4L)), lg)
    psi3 = ex.add(psi0t, ex.log(ex.add(ex.modpow(XI, 2), n4L)), lg)
    return WeightSet(H, rho, kappa, Psi0, psi0t, psi1, psi2, psi3, k, J)


# ------------------------------------------------------------------ text io

def dump_exprs(named):
    parts = []
    for name in named:
        parts.append(f"== {name}\n{ex.to_sexpr(named[name])}\n")
    return "".join(parts)


def load_exprs(text):
    out = {}
    name, buf = None, []
    for line in text.splitlines():
        if line.startswith("== "):
            if name is not None:
                out[name] = ex.from_sexpr("\n".join(buf))
            name, buf = line[3:].strip(), []
        else:
            buf.append(line)
    if name is not None:
        out[name] = ex.from_sexpr("\n".join(buf))
    return out


# ------------------------------------------------------------------ sampling

def sample_points(rng, n, radius=1.0, min_norm=0.05, xi_scale=1.0):
    """Random (xi, z, w) with radius*min_norm <= ||(z, w)|| <= radius."""
    g = rng.normal(size=(n, 4))
    d = g / np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * (min_norm + (1 - min_norm) * rng.random(n) ** 0.25)
    z = (d[:, 0] + 1j * d[:, 1]) * r
    w = (d[:, 2] + 1j * d[:, 3]) * r
    xi = xi_scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
    return {"xi": xi, "z": z, "w": w}
