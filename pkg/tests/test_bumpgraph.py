import json
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bumpkit.bumpgraph import (ROOT, build_graph, check_invariants, degree_inequality, to_dot, to_json,
                               transform_chain)
from bumpkit.errors import NonFiniteLineSet, ParamError, RealityViolation, UnknownNode
from bumpkit.params import BumpParams
from bumpkit.realpoly import CQ, W, Z, random_real_poly

from corpus_util import corpus_specs


def modsq(p):
    return p * p.conj()


@pytest.fixture(scope="module")
def cusp():
    return build_graph(modsq(Z * Z - W ** 3) + modsq(W) ** 4)


def test_cusp_golden(cusp):
    t = time.time()
    g = build_graph(modsq(Z * Z - W ** 3) + modsq(W) ** 4)
    assert time.time() - t < 60
    assert sorted(g.nodes) == [ROOT, (1, 1)] + [(2, j) for j in range(1, 7)]
    n = g[(1, 1)]
    assert (n.k, n.l) == (3, 2)
    assert complex(n.tau_value) == 0
    taus = np.array([complex(g[(2, j)].tau_value) for j in range(1, 7)])
    assert np.all(np.abs(taus ** 6 - 1) < 1e-8)
    assert len(set(np.round(np.angle(taus), 6))) == 6
    assert check_invariants(g) == []


def test_invariants_hold_on_corpus():
    for name, spec in corpus_specs():
        g = build_graph(spec.R, spec.params)
        assert check_invariants(g) == [], name
        assert g.dealt_with == set(g.nodes)
        for nid in g.nodes:
            d2, prod = degree_inequality(g, nid)
            assert d2 > prod
            n = g[nid]
            assert n.k >= n.l >= 1


def test_chain_forward_inverts_preimages(cusp):
    rng = np.random.default_rng(2)
    ch = transform_chain(cusp, (2, 3))
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    w = rng.normal(size=4) + 1j * rng.normal(size=4)
    U, V = ch.preimages(z, w)
    assert U.shape[-1] == 3 * 2 * 3 * 1
    zz, ww = ch.forward(U, V)
    assert np.allclose(zz, z[:, None], atol=1e-9)
    assert np.allclose(ww, w[:, None], atol=1e-9)


def test_unknown_node(cusp):
    with pytest.raises(UnknownNode):
        cusp[(5, 5)]


def test_rejects_bad_input():
    with pytest.raises(RealityViolation):
        build_graph(Z * W.conj() + modsq(W))
    with pytest.raises(ParamError):
        build_graph(Z * Z + Z.conj() ** 2 + modsq(W))
    with pytest.raises(NonFiniteLineSet):
        build_graph(Z * W.conj() + Z.conj() * W)


def test_exports(cusp):
    dot = to_dot(cusp)
    assert dot.startswith("digraph") and dot.count("->") == 7
    obj = json.loads(to_json(cusp))
    assert len(obj["nodes"]) == 8
    assert to_json(cusp) == to_json(build_graph(modsq(Z * Z - W ** 3) + modsq(W) ** 4))


def test_w_zero_line_triggers_rotation():
    g = build_graph(modsq(W) ** 2 + modsq(Z * W) + modsq(Z) ** 3)
    assert g.rotation.applied
    assert check_invariants(g) == []


@settings(max_examples=12, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(3, 4))
def test_one_line_models(a, b, K):
    tau = CQ(a, b)
    L = Z - W * tau
    g = build_graph(modsq(L) ** 2 + modsq(L) * modsq(W) + modsq(W) ** K)
    assert check_invariants(g) == []
    assert [complex(g[c].tau_value) for c in g[ROOT].children] == [complex(tau)]
