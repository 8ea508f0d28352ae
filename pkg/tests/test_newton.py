import time
from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st

from bumpkit.newton import (build_diagram, diagram_from_points, hull_edge_set, lowest_degree,
                            select_extreme_edge, slope_minus_one_degree)
from bumpkit.realpoly import W, Z, random_real_poly
from oracles import brute_force_hull


def modsq(p):
    return p * p.conj()


def test_cusp_diagram():
    d = build_diagram(modsq(Z * Z - W ** 3) + modsq(W) ** 4)
    assert d.hull == [(4, 0), (0, 6)]
    sel = select_extreme_edge(d)
    assert (sel.k, sel.l) == (3, 2)


def test_slope_minus_one_not_selected():
    d = build_diagram(modsq(Z) ** 2 + modsq(Z) * modsq(W) + modsq(W) ** 2)
    sel = select_extreme_edge(d)
    assert sel.empty and sel.has_minus_one_edge


def test_edges_sorted_by_slope():
    d = diagram_from_points([(10, 0), (6, 1), (3, 3), (1, 6), (0, 10), (5, 5)])
    slopes = [e.slope for e in d.edges]
    assert slopes == sorted(slopes)


def test_degrees():
    p = modsq(Z) * modsq(W) + modsq(W) ** 3
    assert lowest_degree(p) == 4
    assert slope_minus_one_degree(build_diagram(p)) == 2


def test_hull_matches_oracle_500_random():
    rng = np.random.default_rng(11)
    t = time.time()
    for _ in range(500):
        p = random_real_poly(rng, n_terms=int(rng.integers(1, 9)), max_deg=12)
        d = build_diagram(p)
        assert hull_edge_set(d) == brute_force_hull(d.support)
    assert time.time() - t < 30


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), min_size=1, max_size=15))
def test_hull_oracle_property(pts):
    d = diagram_from_points(pts)
    assert hull_edge_set(d) == brute_force_hull(pts)
    # every support point is on or above every hull edge line
    for e in d.edges:
        (x1, y1), (x2, y2) = e.p1, e.p2
        for x, y in pts:
            assert (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) >= 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), min_size=1, max_size=15))
def test_extreme_edge_soundness(pts):
    d = diagram_from_points(pts)
    sel = select_extreme_edge(d)
    if sel.empty:
        assert all(e.slope >= -1 for e in d.edges)
    else:
        assert -sel.edge.slope == Fraction(sel.k, sel.l)
        assert sel.k > sel.l >= 1
        assert all(e.slope >= -1 or e.slope <= sel.edge.slope for e in d.edges)
