import numpy as np
import pytest

from bumpkit import expr as ex
from bumpkit import koszul as KZ
from bumpkit.errors import DivisionIdentityViolated

from corpus_util import synthesized


@pytest.fixture(scope="module", params=["noell_k2", "line_one"])
def setup(request):
    spec, g, s, ws = synthesized(request.param)
    div = KZ.Division(s.phi, s.P2, s.P3)
    env = KZ.generic_points(np.random.default_rng(5), 300, s.phi)
    H = KZ.koszul_h(*div.g, env=env)
    return div, H, env


def test_h_closed_forms(setup):
    div, H, env = setup
    Hc = KZ.koszul_h_closed(div)
    for a, b in ((H.h12, Hc.h12), (H.h13, Hc.h13), (H.h23, Hc.h23)):
        assert np.max(KZ.rel_err(a.evaluate(env), b.evaluate(env))) < 1e-6


def test_omega_closed_form(setup):
    div, H, env = setup
    om = KZ.koszul_omega(*div.g, H)
    assert np.max(KZ.rel_err(om.evaluate(env), KZ.koszul_omega_closed(div).evaluate(env))) < 1e-6


def test_identities(setup):
    div, H, env = setup
    om = KZ.koszul_omega_closed(div)
    scale = max(np.abs(h.evaluate(env)).max() for h in (H.h12, H.h13, H.h23))
    for r in KZ.dbar_g_identities(div.g, H) + KZ.dbar_h_identities(H, om):
        assert np.abs(r.evaluate(env)).max() < 1e-7 * scale


def test_omega_dbar_closed_numerically(setup):
    div, H, env = setup
    om = KZ.koszul_omega_closed(div)
    sub = {k: v[:20] for k, v in env.items()}
    fns = [lambda e, c=c: ex.evaluate(c, e) for c in om.c]
    d = KZ.dbar2_fd(fns, sub)
    assert np.abs(d).max() < 1e-5 * np.abs(om.evaluate(sub)).max()


def test_h_closure_fd_matches_symbolic(setup):
    div, H, env = setup
    sub = {k: v[:10] for k, v in env.items()}
    fns = [lambda e, c=c: ex.evaluate(c, e) for c in H.h12.c]
    num = KZ.dbar1_fd(fns, sub)
    sym = KZ.dbar1(H.h12).evaluate(sub)
    assert np.abs(num - sym).max() < 1e-6 * np.abs(sym).max()


def test_final_h_is_holomorphic(setup):
    div, H, env = setup
    z, w = ex.var("z"), ex.var("w")
    u = KZ.Form01((ex.ZERO, ex.conj(z), ex.mul(w, ex.conj(w))))
    rs = KZ.final_h_dbar_residual(div.g, H, u, None, env)
    assert max(np.abs(r).max() for r in rs) < 1e-8


def test_sign_conventions_differ_only_through_z_u(setup):
    div, H, env = setup
    assert KZ.s_sign_consistency(H, None, env) == 0
    u = KZ.Form01((ex.ONE, ex.ZERO, ex.ZERO))
    assert KZ.s_sign_consistency(H, u, env) > 0


def test_division_violation_raises():
    xi = ex.var("xi")
    g = (ex.ONE, ex.ZERO, ex.ZERO)
    env = {"xi": np.array([2.0 + 0j]), "z": np.array([0j]), "w": np.array([0j])}
    with pytest.raises(DivisionIdentityViolated):
        KZ.check_division(g, env)
