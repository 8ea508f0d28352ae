"""The rooted tree of harmonic lines and singular coordinate changes.

Nodes are named (m, n): m is the level, n the index within the level.  Each
non-root node carries the slope tau of its line in the ancestor's
coordinates; if its shifted polynomial has a Newton edge steeper than -1 it
also carries the exponents (k, l) of Psi(u, v) = (u^k + tau v^l, v^l),
otherwise it is an affine leaf with Psi(u, v) = (u + tau v, v).
"""
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ParamError, RealityViolation, RootHasNoAncestor, UnknownNode, NodeBudgetExceeded
from .lines import apply_rotation, find_harmonic_lines, RotationRecord, IDENTITY
from .newton import build_diagram, lowest_degree, select_extreme_edge, slope_minus_one_degree
from .params import BumpParams
from .realpoly import CoordChange, is_pluriharmonic_free, lowest_part, substitute_coordinates

ROOT = (0, 0)


@dataclass
class NodeRecord:
    id: tuple
    tau: complex = None
    tau_exact: object = None
    k: int = 1
    l: int = 1
    affine_only: bool = False
    d2: int = 0           # lowest degree 2d
    q2: int = 0           # 2q from the slope -1 support line
    R_node: object = None
    parent: tuple = None
    children: list = field(default_factory=list)
    minus_one_edge: bool = False

    @property
    def d(self):
        return Fraction(self.d2, 2)

    @property
    def q(self):
        return Fraction(self.q2, 2)

    @property
    def is_leaf(self):
        return not self.children

    @property
    def tau_value(self):
        return self.tau_exact if self.tau_exact is not None else self.tau


@dataclass
class BumpGraph:
    nodes: dict
    dealt_with: set
    rotation: RotationRecord
    R: object = None          # input after rotation

    def leaves(self):
        return sorted(i for i, n in self.nodes.items() if not n.children)

    def __getitem__(self, nid):
        if nid not in self.nodes:
            raise UnknownNode(f"no node {nid}")
        return self.nodes[nid]

    def path(self, nid):
        """Node ids from the root down to nid."""
        out = [nid]
        while nid != ROOT:
            nid = ancestor(self, nid)
            out.append(nid)
        return out[::-1]


def ancestor(g, nid):
    if nid == ROOT:
        raise RootHasNoAncestor("the root has no ancestor")
    return g[nid].parent


def children(g, nid):
    return set(g[nid].children)


def _prune(p, rel):
    if p.is_exact():
        return p
    big = max((abs(complex(c)) for c in p.terms.values()), default=0.0)
    return p.prune(rel * max(1.0, big))


def _tau_arg(node):
    return node.tau_exact if node.tau_exact is not None else node.tau


def build_graph(R, params=None):
    params = params or BumpParams()
    cfg = params.solver
    if not R.is_real():
        bad = R.reality_defect()
        raise RealityViolation(f"input is not real valued at monomials {bad}")
    if not is_pluriharmonic_free(R):
        raise ParamError("input has pluriharmonic terms")
    low = lowest_part(R)
    search = find_harmonic_lines(low, cfg)
    rotation = RotationRecord(IDENTITY, False)
    if search.w_zero_harmonic:
        R, rotation = apply_rotation(R, True, cfg)
        low = lowest_part(R)
        search = find_harmonic_lines(low, cfg)
    root = NodeRecord(ROOT, R_node=R, d2=lowest_degree(R),
                      q2=slope_minus_one_degree(build_diagram(R)))
    nodes = {ROOT: root}
    g = BumpGraph(nodes, set(), rotation, R)
    _add_children(g, root, search.lines)
    g.dealt_with.add(ROOT)

    while True:
        pending = sorted(set(nodes) - g.dealt_with)
        if not pending:
            break
        nid = pending[0]
        node = nodes[nid]
        anc = nodes[node.parent]
        tau = _tau_arg(node)
        Rt = _prune(substitute_coordinates(anc.R_node, CoordChange(1, 1, tau)), params.prune)
        diag = build_diagram(Rt)
        sel = select_extreme_edge(diag)
        node.minus_one_edge = sel.has_minus_one_edge
        if sel.empty:
            node.affine_only = True
            node.R_node = Rt
            node.d2 = lowest_degree(Rt)
            node.q2 = slope_minus_one_degree(diag)
            g.dealt_with.add(nid)
            continue
        node.k, node.l = sel.k, sel.l
        Rn = _prune(substitute_coordinates(anc.R_node, CoordChange(sel.k, sel.l, tau)), params.prune)
        node.R_node = Rn
        node.d2 = lowest_degree(Rn)
        node.q2 = slope_minus_one_degree(build_diagram(Rn))
        # the {v = 0} direction is the exceptional curve of Psi, not a line of the tree
        found = find_harmonic_lines(lowest_part(Rn), cfg).lines
        _add_children(g, node, found)
        g.dealt_with.add(nid)
        if len(nodes) > params.node_budget:
            raise NodeBudgetExceeded(f"more than {params.node_budget} nodes")
    return g


def _add_children(g, node, found):
    if not found:
        return
    m = node.id[0]
    level = [j for (mm, j) in g.nodes if mm == m + 1]
    b = max(level) if (m + 1, 1) in g.nodes else 0
    for i, ln in enumerate(found):
        cid = (m + 1, b + 1 + i)
        g.nodes[cid] = NodeRecord(cid, tau=complex(ln.tau), tau_exact=ln.exact, parent=node.id)
        node.children.append(cid)


@dataclass
class Chain:
    """Coordinate changes from the root down to a node: list of (tau, alpha, beta)."""
    steps: list

    def forward(self, u, v):
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        for tau, a, b in reversed(self.steps):
            vb = v ** b
            u, v = u ** a + complex(tau) * vb, vb
        return u, v

    def preimages(self, z, w):
        """All points mapping to (z, w); returns arrays with a trailing branch axis."""
        us = np.atleast_1d(np.asarray(z, dtype=complex))[..., None]
        vs = np.atleast_1d(np.asarray(w, dtype=complex))[..., None]
        for tau, a, b in self.steps:
            s = us - complex(tau) * vs
            ru = root_set(s, a)
            rv = root_set(vs, b)
            us = (ru[..., :, None] * np.ones(b)).reshape(ru.shape[:-2] + (-1,))
            vs = (rv[..., None, :] * np.ones((a, 1))).reshape(rv.shape[:-2] + (-1,))
        return us, vs

    @property
    def alphas(self):
        return [a for _, a, _ in self.steps]

    @property
    def betas(self):
        return [b for _, _, b in self.steps]


def root_set(x, n):
    """All n-th roots of x, stacked on a new last axis."""
    x = np.asarray(x, dtype=complex)
    base = np.abs(x) ** (1.0 / n) * np.exp(1j * np.angle(x) / n)
    w = np.exp(2j * np.pi * np.arange(n) / n)
    return base[..., None] * w


def transform_chain(g, nid):
    steps = []
    for pid in g.path(nid)[1:]:
        n = g[pid]
        steps.append((n.tau_value, n.k, n.l))
    return Chain(steps)


def degree_inequality(g, nid):
    """(2d, alpha_m ... alpha_1) for the node."""
    prod = 1
    for a in transform_chain(g, nid).alphas:
        prod *= a
    return g[nid].d2, prod


def check_invariants(g):
    """Tree shape, exponent ordering and the degree inequality at every node."""
    problems = []
    edges = sum(len(n.children) for n in g.nodes.values())
    if edges != len(g.nodes) - 1:
        problems.append("edge count")
    for nid, n in g.nodes.items():
        for c in n.children:
            if g.nodes[c].parent != nid or c[0] != nid[0] + 1:
                problems.append(f"bad child link {nid}->{c}")
        if not n.k >= n.l >= 1:
            problems.append(f"alpha < beta at {nid}")
        d2, prod = degree_inequality(g, nid)
        if not d2 > prod:
            problems.append(f"2d={d2} not above alpha product {prod} at {nid}")
    if set(g.nodes) != g.dealt_with:
        problems.append("construction incomplete")
    return problems


def _fmt_tau(t):
    if t is None:
        return "-"
    t = complex(t)
    return f"{t.real:.4g}{t.imag:+.4g}i"


def to_dot(g):
    out = ["digraph bumpgraph {"]
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        kl = "affine" if n.affine_only else f"k={n.k},l={n.l}"
        label = f"({nid[0]},{nid[1]})\\ntau={_fmt_tau(n.tau)}\\n{kl}\\nd={n.d},q={n.q}"
        out.append(f'  "{nid[0]},{nid[1]}" [label="{label}"];')
    for nid in sorted(g.nodes):
        for c in g.nodes[nid].children:
            out.append(f'  "{nid[0]},{nid[1]}" -> "{c[0]},{c[1]}";')
    out.append("}")
    return "\n".join(out) + "\n"


def to_json_obj(g):
    recs = []
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        recs.append({
            "id": list(nid),
            "tau": None if n.tau is None else [complex(n.tau).real, complex(n.tau).imag],
            "tau_exact": None if n.tau_exact is None else [str(n.tau_exact.re), str(n.tau_exact.im)],
            "k": n.k, "l": n.l, "affine_only": n.affine_only,
            "d": str(n.d), "q": str(n.q),
            "q_used": bool(n.children) or nid == ROOT,
            "minus_one_edge": n.minus_one_edge,
            "parent": None if n.parent is None else list(n.parent),
            "children": [list(c) for c in n.children],
            "R_terms": len(n.R_node.terms), "R_lowdeg": n.R_node.lowdeg(),
        })
    return {
        "nodes": recs,
        "dealt_with": sorted([list(x) for x in g.dealt_with]),
        "rotation": {"applied": g.rotation.applied, "seed": g.rotation.seed,
                     "matrix": [[[str(x.re), str(x.im)] for x in row] for row in g.rotation.matrix]},
    }


def to_json(g):
    return json.dumps(to_json_obj(g), sort_keys=True, indent=1)
