import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bumpkit import expr as ex
from bumpkit import synth as S
from bumpkit import verify as V
from bumpkit.bumpgraph import ROOT
from bumpkit.errors import DegreeMismatch, ParameterConstraintViolated
from bumpkit.realpoly import W, Z
from oracles import levi_matrix_fd

from corpus_util import synthesized


def modsq(p):
    return p * p.conj()


def test_levi_fd_matches_polarization_oracle():
    rng = np.random.default_rng(0)
    f = ex.log(ex.add(1, ex.modpow(ex.var("z"), 4), ex.modpow(ex.var("w"), 2), ex.modpow(ex.var("xi"), 2)))
    env = {k: 0.5 * (rng.normal(size=3) + 1j * rng.normal(size=3)) for k in ("xi", "z", "w")}
    got = V.levi_min_eig(f, env)
    for i in range(3):
        x = np.array([env[k][i] for k in ("xi", "z", "w")])

        def fn(p):
            return float(np.real(ex.evaluate(f, {"xi": p[0], "z": p[1], "w": p[2]})))
        M = levi_matrix_fd(fn, x)
        assert abs(np.linalg.eigvalsh(M).min() - got[i]) < 1e-5


def test_levi_symbolic_matches_fd():
    rng = np.random.default_rng(1)
    f = ex.modpow(ex.sub(ex.var("z"), ex.var("w")), 4)
    env = {k: rng.normal(size=2) + 1j * rng.normal(size=2) for k in ("xi", "z", "w")}
    S_ = V.complex_hessian_sym(f)
    M = np.array([[np.broadcast_to(ex.evaluate(S_[i][j], env), (2,)) for j in range(3)] for i in range(3)])
    fd = V.complex_hessian_fd(lambda e: np.real(ex.evaluate(f, e)), env)
    assert np.allclose(np.moveaxis(M, -1, 0), fd, atol=1e-5)


def test_bumpability_examples():
    rng = np.random.default_rng(2)
    env = S.sample_points(rng, 300)
    eps = 1e-3
    P = modsq(Z) ** 2 + modsq(W) ** 2
    res = V.check_bumpability(P, P * (1 - 2 * eps), eps, env)
    assert all(r.passed for r in res)
    # H = P itself violates the strict inequality
    res = V.check_bumpability(P, P, eps, env)
    assert not res[0].passed


def test_lemma81():
    r = V.lemma81_check(np.random.default_rng(3), n=2000)
    assert r.passed


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5))
def test_lemma81_property(seed, m):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    R = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    T = G.conj().T @ G + 1e-2 * np.eye(m)
    Sm = R.conj().T @ R
    v = rng.normal(size=m) + 1j * rng.normal(size=m)
    lhs = np.real(v.conj() @ np.linalg.solve(T + Sm, v))
    rhs = np.real(v.conj() @ np.linalg.solve(T, v))
    assert lhs <= rhs * (1 + 1e-9) + 1e-12


@pytest.mark.parametrize("name", ["noell_k2", "line_one", "cusp"])
def test_weights_and_estimates(name):
    spec, g, s, ws = synthesized(name)
    env = S.sample_points(np.random.default_rng(4), 150)
    for r in V.weight_checks(ws, spec.params.eps, env):
        assert r.passed, r.to_json_obj()
    for H in ws.H.values():
        for r in V.estimate_checks(H, spec.params.eps, env):
            assert r.passed or not r.hard, r.to_json_obj()


def test_first_step_exponents():
    m = S.LineModel(2, [(1, 1, 3)])
    ls = S.synth_line_model(m)
    lin = S.Z0 - S.W0
    H = ex.add(ex.modpow(lin, 4), ex.mul(ex.modpow(lin, 2), ex.modpow(S.W0, 2)))
    res = V.first_step_checks(ls.P2, H, 2, 1, S.cone_widths([1], 0.4)[0], np.random.default_rng(5))
    assert all(r.passed for r in res)
    targets = sorted(r.info["target"] for r in res)
    assert targets == [4.0, 6.0, 6.0]


def test_degenerate_pure_power_is_reported():
    m = S.LineModel(2, [(1, 1, 3)])
    ls = S.synth_line_model(m)
    f = V.first_step_asymptotics(ls.P2, ex.modpow(S.Z0, 4), 1, 0.4, np.random.default_rng(6), n_rays=2)
    assert f["degenerate"]["DZ"] == 2


def test_lemma91_constraint():
    spec, g, s, ws = synthesized("noell_k2")
    env = S.sample_points(np.random.default_rng(7), 5)
    with pytest.raises(ParameterConstraintViolated):
        V.lemma91_bounds(env, s.phi, g, s.cutoffs, 2, 2, 0.3)


@pytest.mark.parametrize("name", ["noell_k2", "cusp"])
def test_lemma91_exponents(name):
    spec, g, s, ws = synthesized(name)
    p = spec.params
    res = V.lemma91_checks(s.phi, p.A, s.D[ROOT], g, s.cutoffs, spec.k, p.L, p.delta, np.random.default_rng(8))
    assert all(r.passed for r in res)


@pytest.mark.parametrize("name", ["noell_k2", "line_one"])
def test_theorem_a_properties(name):
    spec, g, s, ws = synthesized(name)
    dom = V.ModelDomain(spec.R, s.D[ROOT], spec.params.A)
    res = V.phi_theoremA_properties(dom, s.phi, np.random.default_rng(9), n=300, grid=10)
    assert all(r.passed for r in res)


def test_distance_oracle_on_flat_piece():
    # with R = 0 and D = 0 the boundary is Re xi = 0, so the distance is |Re xi|
    dom = V.ModelDomain(0 * modsq(Z), ex.ZERO, 1.0)
    env = {"xi": np.array([-0.3 + 1j, -0.1]), "z": np.array([0.1j, 0.2]), "w": np.array([0.3, 0.1])}
    d = V.distance_to_bumped(dom, env, 1.0)
    assert np.allclose(d, [0.3, 0.1], atol=1e-6)


def test_appendix_bump():
    g = Z * Z - W ** 3
    res, Pp = V.appendix_bump(modsq(g), g, 1e-2, 10, 0, np.random.default_rng(10), n=300)
    assert all(r.passed or not r.hard for r in res)
    with pytest.raises(DegreeMismatch):
        V.appendix_bump(modsq(g), g, 1e-2, 10, 1, np.random.default_rng(10))


def test_report_json_is_deterministic():
    r = [V.CheckResult("a", "x", 3, 0.1 + 0.2, 1e-3, True), V.CheckResult("b", "y", 1, float("nan"), 1, False)]
    assert V.report_json(r) == V.report_json(r)
    assert "0.30000000000000004" in V.report_json(r)
