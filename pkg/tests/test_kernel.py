import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bumpkit import kernel as K
from bumpkit.errors import CoincidentPoints, QuadratureDiverged
from oracles import eta_by_finite_differences


def test_bm_vector_solves_division():
    rng = np.random.default_rng(0)
    zeta, z = K.random_pairs(rng, 100)
    b = K.bm_vector(zeta, z)
    assert np.allclose(np.sum(b * (zeta - z), axis=-1), 1, atol=1e-13)


def test_ball_h_solves_division():
    rng = np.random.default_rng(1)
    zeta, z = K.random_pairs(rng, 100)
    h = K.ball_h(zeta, z)
    assert np.allclose(np.sum(h * (zeta - z), axis=-1), 1, atol=1e-12)


def test_decomposition_against_finite_differences():
    rng = np.random.default_rng(2)
    zeta, z = K.random_pairs(rng, 1)
    zeta, z = zeta[0], z[0]
    zs = np.tile(zeta, (8, 1)) * (1 + 0.1 * rng.random((8, 1)))
    lam = rng.random(8)
    ref = eta_by_finite_differences(zs, z, lam, K.ball_h, K.bm_vector)
    got = K.eta_supported(zs, z, lam, K.ball_h(zs, z), K.ball_h_dbar(zs, z))
    assert np.abs(got - ref).max() < 1e-8 * np.abs(ref).max()


def test_decomposition_identity():
    assert K.decomposition_residual(np.random.default_rng(3)) < 1e-8


def test_eta1_exponent():
    s = K.eta1_ray_exponent(np.random.default_rng(4))
    assert np.abs(s + 3).max() < 0.05


def test_coincident_points():
    with pytest.raises(CoincidentPoints):
        K.bm_vector(np.ones(3), np.ones(3))


def test_sphere_weights():
    errs = []
    for level in (0, 3, 6, 9):
        p = K.sphere_patch(level)
        assert len(p.weights) == 64 * 2 ** level
        assert np.all(p.weights > 0)
        assert np.abs(np.linalg.norm(p.nodes, axis=1) - 1).max() < 1e-10
        errs.append(abs(p.weights.sum() - np.pi ** 3))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-2 * np.pi ** 3


def test_patch_bytes_round_trip():
    p = K.sphere_patch(2)
    q = K.BoundaryPatch.from_bytes(p.to_bytes(), 2)
    assert np.array_equal(p.nodes, q.nodes) and np.array_equal(p.weights, q.weights)
    assert len(p.to_bytes()) == 7 * 8 * len(p.weights)


def test_bm_reproduces_at_origin():
    patch = K.sphere_patch(K.level_for_nodes(100_000))
    assert len(patch.weights) >= 100_000
    for g, g0 in ((lambda zt: np.ones(len(zt)), 1), (lambda zt: zt[:, 0], 0),
                  (lambda zt: zt[:, 0] * zt[:, 1] ** 2, 0)):
        assert abs(K.bm_reproduce(g, np.zeros(3), patch) - g0) < 1e-2


def test_bm_reproduction_converges():
    errs = []
    for level in (4, 7, 10):
        patch = K.sphere_patch(level)
        errs.append(abs(K.bm_reproduce(lambda zt: np.ones(len(zt)), np.zeros(3), patch) - 1))
    assert errs[2] < errs[0]


def test_boundary_integrate_reports_change():
    val, change = K.boundary_integrate(lambda zt: np.ones(len(zt)), K.ball_kernel(), 5, np.zeros(3), n_lambda=8)
    assert np.isfinite(val) and change >= 0


def test_boundary_integrate_divergence_detected():
    def wild(zt):
        return np.exp(40 * np.real(zt[:, 0]))
    with pytest.raises(QuadratureDiverged):
        K.boundary_integrate(wild, K.ball_kernel(), 1, np.array([0.95, 0, 0]), n_lambda=4, rtol=1e-6)


def test_psi_neighbourhood_positive():
    assert K.psi_neighborhood(n_dirs=100, n_z=100) > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_eta_linear_in_lambda(seed):
    rng = np.random.default_rng(seed)
    zeta, z = K.random_pairs(rng, 4)
    h, dh = K.ball_h(zeta, z), K.ball_h_dbar(zeta, z)
    lam = rng.random(4)
    e0 = K.eta_supported(zeta, z, np.zeros(4), h, dh)
    e1 = K.eta_supported(zeta, z, np.ones(4), h, dh)
    e = K.eta_supported(zeta, z, lam, h, dh)
    assert np.allclose(e, (1 - lam)[:, None] * e0 + lam[:, None] * e1, atol=1e-10 * np.abs(e).max())
