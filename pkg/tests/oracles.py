"""Independent reference computations used only by the tests."""
import numpy as np
from scipy.optimize import minimize

from bumpkit.newton import cross


def brute_force_hull(points):
    """O(n^3) oracle: the set of lower-left hull edges as frozensets of endpoints."""
    pts = sorted(set(points))
    out = set()
    for i, p in enumerate(pts):
        for q in pts[i + 1:]:
            if not (q[0] > p[0] and q[1] < p[1]) and not (p[0] > q[0] and p[1] < q[1]):
                continue
            a, b = (p, q) if p[0] < q[0] else (q, p)
            ok = True
            for r in pts:
                c = cross(a, b, r)
                if c < 0:
                    ok = False
                    break
                if c == 0 and (r[0] < a[0] or r[0] > b[0]):
                    ok = False
                    break
            if ok:
                out.add(frozenset((a, b)))
    # an edge with r on the segment interior is not maximal unless endpoints are extreme;
    # the extremes test above already forces a, b to be the collinear ends
    return out



# ------------------------------------------------------------------ harmonic lines on a grid

def _mixed_coefs(p, tau, swap=False):
    """Coefficients of w^a wbar^b (a, b >= 1) in p(tau w, w), or of z^a zbar^b in p(z, sigma z) when swapped."""
    tau = np.asarray(tau, dtype=complex)
    acc = {}
    for (a, b, c, d), v in p.terms.items():
        v = complex(v)
        if swap:
            key = (a + c, b + d)
            val = v * tau ** c * np.conj(tau) ** d
        else:
            key = (a + c, b + d)
            val = v * tau ** a * np.conj(tau) ** b
        acc[key] = acc.get(key, 0) + val
    return [val for (i, j), val in acc.items() if i >= 1 and j >= 1]


def line_defect(p, tau, swap=False):
    cs = _mixed_coefs(p, tau, swap)
    if not cs:
        return np.zeros(np.shape(tau))
    return sum(np.abs(c) ** 2 for c in cs)


def grid_line_minima(p, n=400, tol=1e-10):
    """Slopes tau (or infinity) where a refined grid minimum of the defect drops below tol/10.

    Two charts cover the Riemann sphere: |tau| <= 1.05 and |sigma| <= 1.05 with sigma = 1/tau.
    """
    out = []
    scale = sum(abs(complex(v)) ** 2 for v in p.terms.values())
    for swap in (False, True):
        xs = np.linspace(-1.05, 1.05, n)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        T = X + 1j * Y
        D = np.log(line_defect(p, T, swap) / scale + 1e-300)
        pad = np.pad(D, 1, constant_values=np.inf)
        m = np.ones_like(D, dtype=bool)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx or dy:
                    m &= D <= pad[1 + dx:1 + dx + n, 1 + dy:1 + dy + n]
        # keep plausible minima only, one per cluster of nearby grid points
        cand = sorted(zip(D[m], T[m]), key=lambda x: x[0])
        cand = [(d, t) for d, t in cand if d < np.log(1e-3)]
        picked = []
        for d, t in cand:
            if all(abs(t - u) > 4 * (xs[1] - xs[0]) for u in picked):
                picked.append(t)
        for t0 in picked:
            def f(x):
                return line_defect(p, complex(x[0], x[1]), swap) / scale
            r = minimize(f, [t0.real, t0.imag], method="Nelder-Mead",
                         options={"xatol": 1e-13, "fatol": 1e-32, "maxiter": 4000})
            if r.fun < tol / 10:
                t = complex(r.x[0], r.x[1])
                if swap:
                    out.append(np.inf if abs(t) < 1e-6 else 1 / t)
                else:
                    out.append(t)
    return out


# ------------------------------------------------------------------ kernel wedge by finite differences

def eta_by_finite_differences(zeta, z, lam, h_fn, bm_fn, step=1e-6):
    """dlambda ^ dzeta~_m coefficients of eta(w) with every derivative of w taken numerically."""
    def w(zt, lm):
        return lm[:, None] * bm_fn(zt, z) + (1 - lm[:, None]) * h_fn(zt, z)
    W = w(zeta, lam)
    wl = (w(zeta, lam + step) - w(zeta, lam - step)) / (2 * step)
    out = []
    for m in range(3):
        e = np.zeros(3, dtype=complex)
        e[m] = step
        dx = (w(zeta + e, lam) - w(zeta - e, lam)) / (2 * step)
        dy = (w(zeta + 1j * e, lam) - w(zeta - 1j * e, lam)) / (2 * step)
        wm = 0.5 * (dx + 1j * dy)

        def pair(j, k):
            return wl[:, j] * wm[:, k] - wm[:, j] * wl[:, k]
        out.append(W[:, 0] * pair(1, 2) - W[:, 1] * pair(0, 2) + W[:, 2] * pair(0, 1))
    return np.stack(out, -1)


# ------------------------------------------------------------------ Levi form by polarization of a numeric function

def levi_matrix_fd(f, x, h=1e-4):
    """Complex Hessian [d^2 f / dz_i dzbar_j] of a real function of C^n at the point x (1-D complex array)."""
    n = len(x)
    M = np.zeros((n, n), dtype=complex)

    def lap(v):
        # (1/4) Laplacian along the complex line x + t v, by a 5 point stencil in Re t and Im t
        s = 0.0
        for d in (1, 1j):
            s += (-f(x + 2 * h * d * v) + 16 * f(x + h * d * v) - 30 * f(x)
                  + 16 * f(x - h * d * v) - f(x - 2 * h * d * v)) / (12 * h * h)
        return s / 4
    E = np.eye(n)
    for i in range(n):
        M[i, i] = lap(E[i])
    for i in range(n):
        for j in range(i + 1, n):
            a = lap(E[i] + E[j]) - lap(E[i] - E[j])
            b = lap(E[i] + 1j * E[j]) - lap(E[i] - 1j * E[j])
            M[i, j] = (a + 1j * b) / 4
            M[j, i] = np.conj(M[i, j])
    return M


# ------------------------------------------------------------------ polynomial evaluation straight from the monomials

def eval_monomials(p, z, w):
    out = 0
    for (a, b, c, d), v in p.terms.items():
        out = out + complex(v) * z ** a * np.conj(z) ** b * w ** c * np.conj(w) ** d
    return out
