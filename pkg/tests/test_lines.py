import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bumpkit.errors import NonFiniteLineSet, NotHomogeneous
from bumpkit.lines import (apply_rotation, find_harmonic_lines, harmonicity_defect, random_unitary,
                           unitarity_defect, w_zero_harmonic)
from bumpkit.realpoly import CQ, W, Z, linear_substitute, lowest_part
from oracles import grid_line_minima, line_defect

from corpus_util import corpus_specs


def modsq(p):
    return p * p.conj()


def test_one_line():
    ls = find_harmonic_lines(modsq(Z - W) ** 2 + modsq(Z - W) * modsq(W))
    assert [complex(ln.value) for ln in ls.lines] == [1]
    assert ls.lines[0].exact == CQ(1)


def test_two_lines_exact():
    ls = find_harmonic_lines(modsq(Z * Z - W * W))
    assert sorted(complex(ln.value).real for ln in ls.lines) == [-1, 1]


def test_no_lines():
    assert find_harmonic_lines(modsq(Z) ** 2 + modsq(Z) * modsq(W) + modsq(W) ** 2).lines == []


def test_w_zero_flag():
    p = modsq(W) ** 2 + modsq(Z * W)
    assert w_zero_harmonic(p)
    assert find_harmonic_lines(p).w_zero_harmonic


def test_continuum_raises():
    with pytest.raises(NonFiniteLineSet):
        find_harmonic_lines(Z * W.conj() + Z.conj() * W)


def test_not_homogeneous():
    with pytest.raises(NotHomogeneous):
        find_harmonic_lines(modsq(Z) + modsq(W) ** 2)


def test_soundness_and_completeness_on_corpus():
    t = time.time()
    for name, spec in corpus_specs(include_failures=False):
        low = lowest_part(spec.R)
        ls = find_harmonic_lines(low)
        for ln in ls.lines:
            assert harmonicity_defect(low, ln.tau) < 1e-10, name
        taus = [ln.tau for ln in ls.lines]
        for t0 in grid_line_minima(low, n=400, tol=1e-10):
            if np.isinf(t0):
                assert ls.w_zero_harmonic, name
            else:
                assert min((abs(t0 - t1) for t1 in taus), default=np.inf) < 1e-6, (name, t0)
    assert time.time() - t < 120


def test_rotation_is_unitary_and_preserves_line_count():
    p = modsq(Z * Z - W * W) + modsq(Z * W)
    n0 = len(find_harmonic_lines(p).lines) + int(find_harmonic_lines(p).w_zero_harmonic)
    U = random_unitary(3)
    assert unitarity_defect(U) < 1e-15
    for i in range(2):
        for j in range(2):
            v = U[i][0] * U[j][0].conjugate() + U[i][1] * U[j][1].conjugate()
            assert v == CQ(int(i == j))
    q = linear_substitute(p, U)
    ls = find_harmonic_lines(q)
    assert len(ls.lines) + int(ls.w_zero_harmonic) == n0


def test_apply_rotation_clears_w_zero():
    p = modsq(W) ** 2 + modsq(Z * W)
    q, rec = apply_rotation(p, True)
    assert rec.applied
    assert not w_zero_harmonic(q)
    assert len(find_harmonic_lines(q).lines) == 1


@settings(max_examples=15, deadline=None)
@given(st.integers(-200, 200), st.integers(-200, 200))
def test_planted_line_is_found(a, b):
    tau = CQ(Fraction(a, 100), Fraction(b, 100))
    L = Z - W * tau
    p = modsq(L) ** 2 + modsq(L) * modsq(W)
    ls = find_harmonic_lines(p)
    assert len(ls.lines) == 1
    assert ls.lines[0].exact == tau
    assert line_defect(p, complex(ls.lines[0].value)) < 1e-18


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_rotation_invariance_of_counts(seed):
    p = modsq(Z * Z - W * W) + modsq(Z * W)
    base = find_harmonic_lines(p)
    q = linear_substitute(p, random_unitary(seed))
    ls = find_harmonic_lines(q)
    assert len(ls.lines) + int(ls.w_zero_harmonic) == len(base.lines) + int(base.w_zero_harmonic)
