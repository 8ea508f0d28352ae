from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bumpkit.errors import ParseError, RealityViolation
from bumpkit.realpoly import (CQ, MixedPoly, W, Z, homogeneous_parts, is_pluriharmonic_free, lowest_part,
                              random_real_poly, restrict_to_line, substitute_coordinates, wirtinger_derivative)
from oracles import eval_monomials


def modsq(p):
    return p * p.conj()


def test_text_round_trip_exact():
    p = modsq(Z * Z - W ** 3) + modsq(W) ** 4 * Fraction(3, 7)
    q = MixedPoly.from_text(p.to_text())
    assert q == p
    assert q.to_text() == p.to_text()


def test_parse_error_position():
    with pytest.raises(ParseError) as e:
        MixedPoly.from_text("(1,1,0,0) 1/1 0/1\n(1,1,0) 1/1 0/1\n")
    assert e.value.line == 2


def test_lone_holomorphic_monomial_is_not_real():
    with pytest.raises(RealityViolation):
        MixedPoly.from_text("(1,0,0,0) 1/1 0/1", check_real=True)


def test_pluriharmonic_detection():
    assert is_pluriharmonic_free(modsq(Z) + modsq(W))
    assert not is_pluriharmonic_free(Z * Z + Z.conj() ** 2 + modsq(W))


def test_homogeneous_parts_and_lowest():
    p = modsq(Z) ** 2 + modsq(W) ** 3
    parts = homogeneous_parts(p)
    assert sorted(parts) == [4, 6]
    assert lowest_part(p) == modsq(Z) ** 2


def test_restrict_to_line_known():
    # |z - w|^2 vanishes on z = w
    p = modsq(Z - W)
    assert not restrict_to_line(p, CQ(1)).terms


def test_substitution_matches_pointwise():
    rng = np.random.default_rng(1)
    p = modsq(Z * Z - W ** 3) + modsq(W) ** 4
    q = substitute_coordinates(p, (3, 2, CQ(1, 2)))
    u = rng.normal(size=5) + 1j * rng.normal(size=5)
    v = rng.normal(size=5) + 1j * rng.normal(size=5)
    tau = 1 + 2j
    lhs = q.evaluate(u, v)
    rhs = p.evaluate(u ** 3 + tau * v ** 2, v ** 2)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_wirtinger_derivative_fd():
    p = modsq(Z * Z - W ** 3)
    z0, w0, h = 0.3 + 0.2j, -0.4 + 0.1j, 1e-6
    d = wirtinger_derivative(p, "zbar").evaluate(z0, w0)
    fd = 0.5 * ((p.evaluate(z0 + h, w0) - p.evaluate(z0 - h, w0)) / (2 * h)
                + 1j * (p.evaluate(z0 + 1j * h, w0) - p.evaluate(z0 - 1j * h, w0)) / (2 * h))
    assert abs(d - fd) < 1e-8


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_real_poly_is_real_and_evaluates_real(seed):
    rng = np.random.default_rng(seed)
    p = random_real_poly(rng)
    assert p.is_real()
    assert is_pluriharmonic_free(p)
    z = rng.normal() + 1j * rng.normal()
    w = rng.normal() + 1j * rng.normal()
    v = p.evaluate(z, w)
    assert abs(v.imag) <= 1e-9 * (1 + abs(v))
    assert abs(v - eval_monomials(p, z, w)) <= 1e-9 * (1 + abs(v))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_text_round_trip_property(seed):
    p = random_real_poly(np.random.default_rng(seed))
    assert MixedPoly.from_text(p.to_text(), check_real=True) == p


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_product_evaluates_as_product(seed):
    rng = np.random.default_rng(seed)
    p, q = random_real_poly(rng, n_terms=3, max_deg=4), random_real_poly(rng, n_terms=3, max_deg=4)
    z = rng.normal() + 1j * rng.normal()
    w = rng.normal() + 1j * rng.normal()
    a = (p * q).evaluate(z, w)
    b = p.evaluate(z, w) * q.evaluate(z, w)
    assert abs(a - b) <= 1e-9 * (1 + abs(b))
