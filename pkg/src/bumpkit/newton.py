"""Newton diagrams of mixed polynomials over the (z-degree, w-degree) lattice.

Everything here is integer arithmetic.  The hull is the lower-left convex
boundary seen from the origin, i.e. the part of the lower convex hull made
of edges with negative slope.
"""
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .errors import ZeroPolynomial


@dataclass(frozen=True)
class Edge:
    p1: tuple
    p2: tuple

    @property
    def slope(self):
        return Fraction(self.p2[1] - self.p1[1], self.p2[0] - self.p1[0])


@dataclass
class NewtonDiagram:
    support: frozenset
    hull: list = field(default_factory=list)    # x decreasing
    edges: list = field(default_factory=list)   # slope increasing

    def to_json(self):
        return {
            "support": sorted([list(p) for p in self.support]),
            "hull": [list(p) for p in self.hull],
            "edges": [{"p1": list(e.p1), "p2": list(e.p2), "slope": _fmt(e.slope)} for e in self.edges],
        }

    def to_dot(self, name="newton"):
        lines = [f"digraph {name} {{"]
        for p in sorted(self.support):
            style = ",style=filled" if p in self.hull else ""
            lines.append(f'  "{p[0]},{p[1]}" [pos="{p[0]},{p[1]}!"{style}];')
        for e in self.edges:
            lines.append(f'  "{e.p1[0]},{e.p1[1]}" -> "{e.p2[0]},{e.p2[1]}" [label="{_fmt(e.slope)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EdgeSelection:
    edge: object = None
    k: int = 0
    l: int = 0
    has_minus_one_edge: bool = False

    @property
    def empty(self):
        return self.edge is None


def _fmt(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def support_of(p, tol=None):
    """Lattice points (a+b, c+d); with tol, drop coefficients of magnitude <= tol."""
    pts = set()
    for (a, b, c, d), coef in p.terms.items():
        if tol is not None and abs(complex(coef)) <= tol:
            continue
        pts.add((a + b, c + d))
    return frozenset(pts)


def lower_left_hull(points):
    """Vertices of the lower-left boundary, x decreasing."""
    pts = sorted(set(points))
    # keep lowest y per x
    best = {}
    for x, y in pts:
        if x not in best or y < best[x]:
            best[x] = y
    pts = sorted(best.items())
    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    # lower hull runs x increasing; keep the prefix whose edges descend
    ymin_idx = 0
    for i in range(1, len(lower)):
        if lower[i][1] < lower[i - 1][1]:
            ymin_idx = i
        else:
            break
    chain = lower[: ymin_idx + 1]
    return chain[::-1]


def build_diagram(p, tol=None):
    support = support_of(p, tol)
    if not support:
        raise ZeroPolynomial("Newton diagram of the zero polynomial")
    return diagram_from_points(support)


def diagram_from_points(points):
    support = frozenset(points)
    hull = lower_left_hull(support)
    edges = [Edge(hull[i + 1], hull[i]) for i in range(len(hull) - 1)]
    # hull runs x decreasing and slopes decrease along it; store increasing
    edges.reverse()
    for e1, e2 in zip(edges, edges[1:]):
        assert e1.slope < e2.slope
    return NewtonDiagram(support, hull, edges)


def hull_edge_set(d):
    return {frozenset((e.p1, e.p2)) for e in d.edges}


def select_extreme_edge(d):
    flag = any(e.slope == -1 for e in d.edges)
    cands = [e for e in d.edges if e.slope < -1]
    if not cands:
        return EdgeSelection(has_minus_one_edge=flag)
    e = max(cands, key=lambda e: e.slope)
    s = -e.slope
    k, l = s.numerator, s.denominator
    assert gcd(k, l) == 1 and k >= l >= 1
    return EdgeSelection(e, k, l, flag)


def slope_minus_one_degree(d):
    """2q: the largest y on the supporting line of slope -1."""
    m = min(x + y for x, y in d.support)
    return max(y for x, y in d.support if x + y == m)


def lowest_degree(p):
    if not p.terms:
        raise ZeroPolynomial("lowest degree of the zero polynomial")
    return min(sum(m) for m in p.terms)


def edge_terms(p, edge):
    """Monomials of p whose lattice point lies on the segment of `edge`."""
    a, b = edge.p1, edge.p2
    out = {}
    for m, c in p.terms.items():
        pt = (m[0] + m[1], m[2] + m[3])
        if cross(a, b, pt) == 0 and min(a[0], b[0]) <= pt[0] <= max(a[0], b[0]):
            out[m] = c
    return out


def dump_json(d):
    return json.dumps(d.to_json(), sort_keys=True)
