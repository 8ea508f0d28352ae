"""Bochner-Martinelli and Henkin kernel pieces in C^3, with sphere quadrature.

Points are arrays of shape (..., 3).  The kernel pieces eta1 and eta2 are the
coefficients of dlambda ^ dzeta~_n (n = 1, 2, 3) in eta(w) for
w = lambda b + (1 - lambda) h, b_i = conj(zeta_i - z_i) / |zeta - z|^2.
"""
import math
from functools import lru_cache
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentPoints, QuadratureDiverged

N = 3
BM_CONST = math.factorial(N - 1) / (2 * math.pi ** N)


def _diff(zeta, z, tol=1e-14):
    d = np.asarray(zeta, dtype=complex) - np.asarray(z, dtype=complex)
    r2 = np.sum(np.abs(d) ** 2, axis=-1)
    if np.any(r2 <= tol ** 2):
        raise CoincidentPoints("zeta coincides with z")
    return d, r2


def bm_vector(zeta, z):
    """b_i = conj(zeta_i - z_i) / |zeta - z|^2, so that sum b_i (zeta_i - z_i) = 1."""
    d, r2 = _diff(zeta, z)
    return np.conj(d) / r2[..., None]


def bm_vector_dbar(zeta, z):
    """db_j / dzeta~_n = delta_jn / r^2 - conj(d_j) d_n / r^4, indexed [..., j, n]."""
    d, r2 = _diff(zeta, z)
    eye = np.eye(N)
    return eye / r2[..., None, None] - np.conj(d)[..., :, None] * d[..., None, :] / (r2 ** 2)[..., None, None]


def bm_kernel(zeta, z):
    """Coefficients K_i with surface density sum_i K_i nu_i for the outward unit normal nu."""
    d, r2 = _diff(zeta, z)
    return BM_CONST * np.conj(d) / (r2 ** N)[..., None]


def _cyc(b, h, X):
    """b1 (h2 X3 - h3 X2) - b2 (h1 X3 - h3 X1) + b3 (h1 X2 - h2 X1), over the last axis."""
    return (b[..., 0] * (h[..., 1] * X[..., 2] - h[..., 2] * X[..., 1])
            - b[..., 1] * (h[..., 0] * X[..., 2] - h[..., 2] * X[..., 0])
            + b[..., 2] * (h[..., 0] * X[..., 1] - h[..., 1] * X[..., 0]))


def eta1(zeta, z, h):
    """Coefficients of dlambda ^ dzeta~_n of the first kernel piece; shape (..., 3)."""
    b = bm_vector(zeta, z)
    db = bm_vector_dbar(zeta, z)
    h = np.broadcast_to(np.asarray(h, dtype=complex), b.shape)
    return np.stack([_cyc(b, h, db[..., :, n]) for n in range(N)], axis=-1)


def eta2(zeta, z, h, dh):
    """Second kernel piece; dh[..., j, n] = dh_j / dzeta~_n."""
    b = bm_vector(zeta, z)
    h = np.broadcast_to(np.asarray(h, dtype=complex), b.shape)
    dh = np.broadcast_to(np.asarray(dh, dtype=complex), b.shape + (N,))
    return np.stack([_cyc(b, h, dh[..., :, n]) for n in range(N)], axis=-1)


def eta_supported(zeta, z, lam, h, dh):
    """Supported part of eta(w): -lambda eta1 - (1 - lambda) eta2."""
    lam = np.asarray(lam, dtype=float)[..., None]
    return -lam * eta1(zeta, z, h) - (1 - lam) * eta2(zeta, z, h, dh)


# ------------------------------------------------------------------ ball support

def ball_h(zeta, z):
    """h_j = conj(zeta_j) / sum_i conj(zeta_i)(zeta_i - z_i), the support solution for the unit ball."""
    zeta = np.asarray(zeta, dtype=complex)
    S = np.sum(np.conj(zeta) * (zeta - z), axis=-1)
    return np.conj(zeta) / S[..., None]


def ball_h_dbar(zeta, z):
    zeta = np.asarray(zeta, dtype=complex)
    S = np.sum(np.conj(zeta) * (zeta - z), axis=-1)
    d = zeta - z
    return np.eye(N) / S[..., None, None] - np.conj(zeta)[..., :, None] * d[..., None, :] / (S ** 2)[..., None, None]


# ------------------------------------------------------------------ sphere quadrature

@dataclass
class BoundaryPatch:
    """Nodes on the unit sphere of C^3 with positive weights and outward normals."""
    nodes: np.ndarray        # (N, 3) complex
    weights: np.ndarray      # (N,)
    level: int = 0

    @property
    def normals(self):
        return self.nodes

    def to_bytes(self):
        rows = np.column_stack([self.nodes.real[:, 0], self.nodes.imag[:, 0],
                                self.nodes.real[:, 1], self.nodes.imag[:, 1],
                                self.nodes.real[:, 2], self.nodes.imag[:, 2], self.weights])
        return np.ascontiguousarray(rows, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, buf, level=0):
        rows = np.frombuffer(buf, dtype="<f8").reshape(-1, 7)
        nodes = rows[:, 0:6:2] + 1j * rows[:, 1:6:2]
        return cls(nodes, rows[:, 6].copy(), level)


def _cross_polytope_facets():
    out = []
    for mask in range(64):
        s = np.array([1.0 if (mask >> i) & 1 == 0 else -1.0 for i in range(6)])
        out.append(np.diag(s))
    return np.array(out)          # (64, 6 vertices, 6 coords)


def _bisect(simp):
    """Split every simplex along its longest edge; the midpoint is pushed onto the sphere."""
    n = simp.shape[1]
    ii, jj = np.triu_indices(n, 1)
    lens = np.sum((simp[:, ii] - simp[:, jj]) ** 2, axis=-1)
    e = np.argmax(lens, axis=1)
    a, b = ii[e], jj[e]
    idx = np.arange(len(simp))
    mid = simp[idx, a] + simp[idx, b]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    s1 = simp.copy()
    s2 = simp.copy()
    s1[idx, a] = mid
    s2[idx, b] = mid
    return np.concatenate([s1, s2])


SPHERE_AREA = math.pi ** 3


def _projected_area(simp):
    """Area of the radial projection of flat cells with vertices on the sphere.

    The Jacobian of the projection is d / |x|^6 with d the distance from 0 to the
    cell's hyperplane; it is integrated with the symmetric degree-2 simplex rule.
    """
    E = simp[:, 1:] - simp[:, :1]
    gram = np.sqrt(np.abs(np.linalg.det(np.einsum("nik,njk->nij", E, E))))
    dist = np.abs(np.linalg.det(simp)) / gram
    m = 5
    beta = (m + 2 - math.sqrt(m + 2)) / ((m + 1) * (m + 2))
    alpha = 1 - m * beta
    pts = (alpha - beta) * simp + beta * simp.sum(axis=1, keepdims=True)
    return gram / math.factorial(m) * (dist[:, None] / np.sum(pts ** 2, axis=-1) ** 3).mean(axis=1)


WEIGHT_REFINE = 3


@lru_cache(maxsize=8)
def _patch_arrays(level, refine=WEIGHT_REFINE, chunk=8192):
    simp = _cross_polytope_facets()
    for _ in range(level):
        simp = _bisect(simp)
    # children of cell i after bisection sit at i, i + n, i + 2n, ...
    w = []
    for i in range(0, len(simp), chunk):
        c = simp[i:i + chunk]
        f = c
        for _ in range(refine):
            f = _bisect(f)
        w.append(_projected_area(f).reshape(2 ** refine, len(c)).sum(axis=0))
    c = simp.mean(axis=1)
    x = c / np.linalg.norm(c, axis=1, keepdims=True)
    return x[:, 0::2] + 1j * x[:, 1::2], np.concatenate(w)


def sphere_patch(level):
    """Centroid rule on the geodesically bisected cross-polytope; 64 * 2^level nodes.

    Weights are the spherical areas of the cells, each computed from a further
    WEIGHT_REFINE bisections of the cell.
    """
    nodes, w = _patch_arrays(int(level))
    return BoundaryPatch(nodes.copy(), w.copy(), level)


def level_for_nodes(n):
    return max(0, int(math.ceil(math.log2(n / 64))))


def bm_reproduce(g, z, patch):
    """Quadrature of g against the Bochner-Martinelli kernel over the sphere."""
    K = bm_kernel(patch.nodes, z)
    dens = np.sum(K * patch.normals, axis=-1)
    return np.sum(patch.weights * g(patch.nodes) * dens)


def _det3(a, b, c):
    return (a[..., 0] * (b[..., 1] * c[..., 2] - b[..., 2] * c[..., 1])
            - a[..., 1] * (b[..., 0] * c[..., 2] - b[..., 2] * c[..., 0])
            + a[..., 2] * (b[..., 0] * c[..., 1] - b[..., 1] * c[..., 0]))


TANGENTIAL_CONST = -1.0 / math.pi ** 3


def _integrate_once(f, kernel, patch, z, n_lambda):
    x, wl = np.polynomial.legendre.leggauss(n_lambda)
    lam = 0.5 * (x + 1)
    wl = 0.5 * wl
    F = f(patch.nodes)
    total = 0j
    for l, wt in zip(lam, wl):
        C = kernel(patch.nodes, z, l)
        # only the complex tangential part of C survives: det[f, C, nu]
        total += wt * np.sum(patch.weights * _det3(F, C, patch.normals))
    return TANGENTIAL_CONST * total


def boundary_integrate(f, kernel, level, z, n_lambda=32, rtol=0.5):
    """Integral of f ^ kernel ^ dzeta over sphere x [0, 1]; returns (value, change under doubling)."""
    coarse = _integrate_once(f, kernel, sphere_patch(max(level - 1, 0)), z, n_lambda)
    fine = _integrate_once(f, kernel, sphere_patch(level), z, n_lambda)
    change = abs(fine - coarse)
    if change > rtol * max(abs(fine), 1e-300) and abs(fine) > 1e-14:
        raise QuadratureDiverged(f"node doubling changed the value by {change:.3g}")
    return fine, change


def ball_kernel(which="full"):
    """Kernel callables built from the ball support solution."""
    def k(zeta, z, lam):
        h = ball_h(zeta, z)
        dh = ball_h_dbar(zeta, z)
        if which == "eta1":
            return -lam * eta1(zeta, z, h)
        if which == "eta2":
            return -(1 - lam) * eta2(zeta, z, h, dh)
        return eta_supported(zeta, z, lam, h, dh)
    return k


# ------------------------------------------------------------------ neighborhood of a frozen point

def psi_value(h0, eta, z):
    """Psi(eta, z) = sum_j h_j(eta0, z)(eta_j - z_j)."""
    return np.sum(h0 * (np.asarray(eta) - np.asarray(z)), axis=-1)


def psi_neighborhood(eta0=(1, 0, 0), eps=0.05, radii=None, n_dirs=400, n_z=300, seed=0):
    """Largest sampled radius r with |Psi| >= 1/2 for |eta - eta0| <= r on the sphere, z in the shrunk ball."""
    rng = np.random.default_rng(seed)
    eta0 = np.asarray(eta0, dtype=complex)
    eta0 = eta0 / np.linalg.norm(eta0)
    if radii is None:
        radii = np.linspace(0.005, 1.0, 200)
    g = rng.normal(size=(n_z, 6))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    zs = (g[:, 0::2] + 1j * g[:, 1::2]) * ((1 - eps) * rng.random(n_z) ** (1 / 6))[:, None]
    zs = np.concatenate([zs, [(1 - eps) * eta0]])
    h0 = ball_h(eta0[None, :], zs)                      # (n_z, 3)
    t = rng.normal(size=(n_dirs, 6))
    t = t[:, 0::2] + 1j * t[:, 1::2]
    t -= np.sum(np.conj(eta0) * t, axis=1, keepdims=True).real * eta0   # tangent to the sphere at eta0
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    best = 0.0
    for r in radii:
        # point on the sphere at chordal distance r along each direction
        th = 2 * np.arcsin(min(r / 2, 1.0))
        eta = np.cos(th) * eta0 + np.sin(th) * t             # (n_dirs, 3)
        vals = np.abs(psi_value(h0[:, None, :], eta[None, :, :], zs[:, None, :]))
        if vals.min() < 0.5:
            break
        best = float(r)
    return best


# ------------------------------------------------------------------ checks

def eta_from_definition(zeta, z, lam, h, dh):
    """dlambda ^ dzeta~_m coefficients of w1 dw2^dw3 - w2 dw1^dw3 + w3 dw1^dw2, expanded term by term."""
    b = bm_vector(zeta, z)
    db = bm_vector_dbar(zeta, z)
    lam = np.asarray(lam, dtype=float)[..., None]
    h = np.broadcast_to(np.asarray(h, dtype=complex), b.shape)
    dh = np.broadcast_to(np.asarray(dh, dtype=complex), b.shape + (N,))
    w = lam * b + (1 - lam) * h
    wl = b - h
    out = []
    for m in range(N):
        wm = lam * db[..., :, m] + (1 - lam[..., 0])[..., None] * dh[..., :, m]

        def pair(j, k):
            return wl[..., j] * wm[..., k] - wm[..., j] * wl[..., k]
        out.append(w[..., 0] * pair(1, 2) - w[..., 1] * pair(0, 2) + w[..., 2] * pair(0, 1))
    return np.stack(out, axis=-1)


def random_pairs(rng, n, radius=0.9):
    """Random zeta on the unit sphere and z inside the ball of the given radius."""
    g = rng.normal(size=(n, 6))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    zeta = g[:, 0::2] + 1j * g[:, 1::2]
    g = rng.normal(size=(n, 6))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    z = (g[:, 0::2] + 1j * g[:, 1::2]) * (radius * rng.random(n) ** (1 / 6))[:, None]
    return zeta, z


def decomposition_residual(rng, n=1000):
    zeta, z = random_pairs(rng, n)
    lam = rng.random(n)
    h = ball_h(zeta, z)
    dh = ball_h_dbar(zeta, z)
    a = eta_supported(zeta, z, lam, h, dh)
    b = eta_from_definition(zeta, z, lam, h, dh)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def eta1_ray_exponent(rng, n_rays=20, ts=None):
    """Log-log slopes of |eta1(z + t e, z)| with h held fixed."""
    if ts is None:
        ts = np.logspace(-5, -2, 10)
    slopes = []
    for _ in range(n_rays):
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        e = rng.normal(size=3) + 1j * rng.normal(size=3)
        e /= np.linalg.norm(e)
        h = rng.normal(size=3) + 1j * rng.normal(size=3)
        vals = np.linalg.norm(eta1(z + ts[:, None] * e, z, h), axis=-1)
        slopes.append(np.polyfit(np.log(ts), np.log(vals), 1)[0])
    return np.array(slopes)
