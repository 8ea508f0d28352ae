"""Expression trees over complex coordinates with Wirtinger derivatives.

Variables are named coordinates; a variable node also records whether it is
the conjugate.  Level-0 coordinates are xi, z, w; the coordinates attached to
level j of a coordinate-change chain are u{j}, v{j}.  A preimage-average node
binds u{j}, v{j} to every preimage of (u{j-1}, v{j-1}) under
(u, v) -> (u^k + tau v^l, v^l) and averages its argument over them.

Nodes are interned, so equal subtrees are shared and derivative and
evaluation caches work across the whole DAG.
"""
import math
import re as _re

import numpy as np

from .errors import ParseError


def coord_names(level):
    return ("z", "w") if level == 0 else (f"u{level}", f"v{level}")


_INTERN = {}


class Node:
    __slots__ = ("kind", "args", "params", "free", "real", "_d", "__weakref__")

    def __add__(self, o):
        return add(self, o)

    def __radd__(self, o):
        return add(o, self)

    def __sub__(self, o):
        return add(self, neg(o))

    def __rsub__(self, o):
        return add(o, neg(self))

    def __mul__(self, o):
        return mul(self, o)

    def __rmul__(self, o):
        return mul(o, self)

    def __truediv__(self, o):
        return mul(self, pow_(o, -1))

    def __rtruediv__(self, o):
        return mul(o, pow_(self, -1))

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return pow_(self, n)

    def __repr__(self):
        s = to_sexpr(self)
        return s if len(s) < 200 else s[:200] + "..."

    def is_const(self, val=None):
        if self.kind != "const":
            return False
        return val is None or self.params[0] == val


def _make(kind, args, params, free, real):
    key = (kind, tuple(id(a) for a in args), params)
    n = _INTERN.get(key)
    if n is not None:
        return n
    n = Node()
    n.kind, n.args, n.params, n.free, n.real = kind, tuple(args), params, free, real
    n._d = {}
    _INTERN[key] = n
    return n


def _wrap(x):
    if isinstance(x, Node):
        return x
    return const(x)


def const(c):
    c = complex(c)
    return _make("const", (), (c,), frozenset(), c.imag == 0)


ZERO = const(0)
ONE = const(1)


def var(name, bar=False):
    return _make("var", (), (name, bool(bar)), frozenset([name]), False)


def _free(args):
    f = frozenset()
    for a in args:
        f = f | a.free
    return f


def add(*terms):
    flat = []
    c = 0j
    for t in terms:
        t = _wrap(t)
        if t.kind == "add":
            for s in t.args:
                if s.kind == "const":
                    c += s.params[0]
                else:
                    flat.append(s)
        elif t.kind == "const":
            c += t.params[0]
        else:
            flat.append(t)
    if c != 0:
        flat.append(const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return _make("add", flat, (), _free(flat), all(a.real for a in flat))


def mul(*factors):
    flat = []
    c = 1 + 0j
    for f in factors:
        f = _wrap(f)
        if f.kind == "mul":
            for s in f.args:
                if s.kind == "const":
                    c *= s.params[0]
                else:
                    flat.append(s)
        elif f.kind == "const":
            c *= f.params[0]
        else:
            flat.append(f)
    if c == 0:
        return ZERO
    if c != 1:
        flat.insert(0, const(c))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return _make("mul", flat, (), _free(flat), all(a.real for a in flat))


def neg(e):
    return mul(-1, e)


def sub(a, b):
    return add(a, neg(b))


def div(a, b):
    return mul(a, pow_(b, -1))


def pow_(e, n):
    e = _wrap(e)
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return e
    if e.kind == "const":
        return const(e.params[0] ** n)
    if e.kind == "pow":
        return pow_(e.args[0], e.params[0] * n)
    return _make("pow", (e,), (n,), e.free, e.real)


def rpow(e, s):
    """e**s for a real positive e and real s."""
    e = _wrap(e)
    s = float(s)
    if s == 0:
        return ONE
    if s == 1:
        return e
    if e.kind == "const":
        return const(e.params[0].real ** s)
    if e.kind == "rpow":
        return rpow(e.args[0], e.params[0] * s)
    return _make("rpow", (e,), (s,), e.free, True)


def modpow(e, r):
    """|e|**r."""
    e = _wrap(e)
    r = float(r)
    if r == 0:
        return ONE
    if e.kind == "const":
        return const(abs(e.params[0]) ** r)
    if e.kind == "conj":
        return modpow(e.args[0], r)
    if e.kind == "modpow":
        return modpow(e.args[0], e.params[0] * r)
    return _make("modpow", (e,), (r,), e.free, True)


def log(e):
    e = _wrap(e)
    if e.kind == "const":
        return const(np.log(e.params[0]))
    return _make("log", (e,), (), e.free, e.real)


def re(e):
    e = _wrap(e)
    if e.real:
        return e
    if e.kind == "const":
        return const(e.params[0].real)
    return _make("re", (e,), (), e.free, True)


def smooth(e, order=0):
    e = _wrap(e)
    if e.kind == "const":
        return const(smoothstep(np.array(e.params[0].real), order))
    return _make("smooth", (e,), (int(order),), e.free, True)


def conj(e):
    e = _wrap(e)
    if e.real:
        return e
    k = e.kind
    if k == "const":
        return const(e.params[0].conjugate())
    if k == "var":
        return var(e.params[0], not e.params[1])
    if k == "conj":
        return e.args[0]
    if k == "add":
        return add(*[conj(a) for a in e.args])
    if k == "mul":
        return mul(*[conj(a) for a in e.args])
    if k == "pow":
        return pow_(conj(e.args[0]), e.params[0])
    if k == "pa":
        return pa(conj(e.args[0]), *e.params)
    return _make("conj", (e,), (), e.free, False)


def pa(e, level, k, l, tau):
    """Average of e over the preimages of (u{level-1}, v{level-1})."""
    e = _wrap(e)
    tau = complex(tau)
    u, v = coord_names(level)
    if u not in e.free and v not in e.free:
        return e
    free = (e.free - {u, v}) | frozenset(coord_names(level - 1))
    return _make("pa", (e,), (int(level), int(k), int(l), tau), free, e.real)


def norm_pow(items, r):
    """||(e1, e2, ...)||**r."""
    return rpow(add(*[modpow(x, 2) for x in items]), r / 2.0)


# ---------------------------------------------------------------- derivatives

def diff(e, name, bar=False):
    """Wirtinger derivative d/d name (bar=False) or d/d conj(name) (bar=True)."""
    if name not in e.free:
        return ZERO
    key = (name, bar)
    hit = e._d.get(key)
    if hit is not None:
        return hit
    out = _diff(e, name, bar)
    e._d[key] = out
    return out


def _dconj(a, name, bar):
    """Derivative of conj(a)."""
    return conj(diff(a, name, not bar))


def _diff(e, name, bar):
    k = e.kind
    if k == "var":
        return ONE if e.params == (name, bar) else ZERO
    if k == "add":
        return add(*[diff(a, name, bar) for a in e.args])
    if k == "mul":
        terms = []
        for i, a in enumerate(e.args):
            da = diff(a, name, bar)
            if da is ZERO:
                continue
            terms.append(mul(*(e.args[:i] + (da,) + e.args[i + 1:])))
        return add(*terms)
    if k == "pow":
        a, n = e.args[0], e.params[0]
        return mul(n, pow_(a, n - 1), diff(a, name, bar))
    if k == "rpow":
        a, s = e.args[0], e.params[0]
        return mul(s, rpow(a, s - 1), diff(a, name, bar))
    if k == "modpow":
        a, r = e.args[0], e.params[0]
        inner = add(mul(conj(a), diff(a, name, bar)), mul(a, _dconj(a, name, bar)))
        return mul(r / 2.0, modpow(a, r - 2), inner)
    if k == "log":
        a = e.args[0]
        return div(diff(a, name, bar), a)
    if k == "re":
        a = e.args[0]
        return mul(0.5, add(diff(a, name, bar), _dconj(a, name, bar)))
    if k == "conj":
        return _dconj(e.args[0], name, bar)
    if k == "smooth":
        a, o = e.args[0], e.params[0]
        return mul(smooth(a, o + 1), diff(a, name, bar))
    if k == "pa":
        return _diff_pa(e, name, bar)
    raise ValueError(f"cannot differentiate {k}")


def _diff_pa(e, name, bar):
    E = e.args[0]
    level, kk, ll, tau = e.params
    u0, v0 = coord_names(level - 1)
    u1, v1 = coord_names(level)
    if name not in (u0, v0):
        return pa(diff(E, name, bar), *e.params)
    U1 = var(u1, bar)
    V1 = var(v1, bar)
    t = tau.conjugate() if bar else tau
    du = mul(1.0 / kk, pow_(U1, 1 - kk))      # d u1 / d u0 along a branch
    terms = [diff(E, name, bar)]
    if name == u0:
        terms.append(mul(diff(E, u1, bar), du))
    else:
        terms.append(mul(-t, diff(E, u1, bar), du))
        terms.append(mul(diff(E, v1, bar), 1.0 / ll, pow_(V1, 1 - ll)))
    return pa(add(*terms), *e.params)


def dbar(e, names):
    return [diff(e, n, True) for n in names]


def grad(e, names):
    return [diff(e, n, False) for n in names]


# ---------------------------------------------------------------- evaluation

_S = [
    np.poly1d([6, -15, 10, 0, 0, 0]),
]
for _i in range(5):
    _S.append(np.polyder(_S[-1]))


def smoothstep(x, order=0):
    """Quintic smoothstep 10x^3 - 15x^4 + 6x^5 clipped to [0, 1], and its derivatives."""
    x = np.real(np.asarray(x))
    xc = np.clip(x, 0.0, 1.0)
    val = _S[order](xc) if order < len(_S) else np.zeros_like(xc)
    if order == 0:
        return np.where(x >= 1.0, 1.0, np.where(x <= 0.0, 0.0, val))
    return np.where((x > 0.0) & (x < 1.0), val, 0.0)


def root_stack(x, n):
    x = np.asarray(x, dtype=complex)
    base = np.abs(x) ** (1.0 / n) * np.exp(1j * np.angle(x) / n)
    return base[..., None] * np.exp(2j * np.pi * np.arange(n) / n)


def evaluate(e, env):
    """Evaluate at numpy-broadcastable point arrays given by env {name: values}."""
    env = {k: np.asarray(v, dtype=complex) for k, v in env.items()}
    with np.errstate(all="ignore"):
        return _eval(e, env, {})


def _eval(e, env, memo):
    key = id(e)
    hit = memo.get(key)
    if hit is not None:
        return hit
    k = e.kind
    if k == "const":
        val = np.asarray(e.params[0])
    elif k == "var":
        name, bar = e.params
        try:
            x = env[name]
        except KeyError:
            raise KeyError(f"no value bound for coordinate '{name}'")
        val = np.conj(x) if bar else x
    elif k == "add":
        val = _eval(e.args[0], env, memo)
        for a in e.args[1:]:
            val = val + _eval(a, env, memo)
    elif k == "mul":
        val = _eval(e.args[0], env, memo)
        for a in e.args[1:]:
            val = val * _eval(a, env, memo)
    elif k == "pow":
        a = _eval(e.args[0], env, memo)
        n = e.params[0]
        val = a ** n if n > 0 else 1.0 / a ** (-n)
    elif k == "rpow":
        a = np.real(_eval(e.args[0], env, memo))
        val = np.power(a, e.params[0]) + 0j
    elif k == "modpow":
        a = _eval(e.args[0], env, memo)
        val = np.abs(a) ** e.params[0] + 0j
    elif k == "log":
        a = _eval(e.args[0], env, memo)
        val = np.log(np.real(a)) + 0j if e.real else np.log(a)
    elif k == "re":
        val = np.real(_eval(e.args[0], env, memo)) + 0j
    elif k == "conj":
        val = np.conj(_eval(e.args[0], env, memo))
    elif k == "smooth":
        val = smoothstep(_eval(e.args[0], env, memo), e.params[0]) + 0j
    elif k == "pa":
        val = _eval_pa(e, env)
    else:
        raise ValueError(k)
    memo[key] = val
    return val


def _eval_pa(e, env):
    level, kk, ll, tau = e.params
    u0, v0 = coord_names(level - 1)
    u1, v1 = coord_names(level)
    U0, V0 = env[u0], env[v0]
    ru = root_stack(U0 - tau * V0, kk)
    rv = root_stack(V0, ll)
    shape = np.broadcast_shapes(ru.shape[:-1], rv.shape[:-1])
    ru = np.broadcast_to(ru, shape + (kk,))
    rv = np.broadcast_to(rv, shape + (ll,))
    uu = np.repeat(ru, ll, axis=-1)
    vv = np.tile(rv, (1,) * len(shape) + (kk,))
    inner = {n: x[..., None] for n, x in env.items()}
    inner[u1] = uu
    inner[v1] = vv
    val = _eval(e.args[0], inner, {})
    val = np.broadcast_to(val, np.broadcast_shapes(np.shape(val), uu.shape))
    return val.mean(axis=-1)


def compile_fn(e, names=("xi", "z", "w")):
    def f(*vals):
        return evaluate(e, dict(zip(names, vals)))
    return f


# ---------------------------------------------------------------- size and text

def count_nodes(e):
    seen = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.extend(n.args)
    return len(seen)


def _fnum(x):
    return format(float(x), ".17g")


def _fc(c):
    return f"{_fnum(c.real)} {_fnum(c.imag)}"


def to_sexpr(e):
    """Canonical text.  Shared subtrees are written once and referenced as (ref i)."""
    uses = {}
    order = []

    def visit(n):
        uses[id(n)] = uses.get(id(n), 0) + 1
        if uses[id(n)] > 1:
            return
        for a in n.args:
            visit(a)
        order.append(n)

    visit(e)
    shared = [n for n in order if uses[id(n)] > 1 and n.args]
    index = {id(n): i for i, n in enumerate(shared)}
    memo = {}

    def body(n):
        k = n.kind
        if k == "const":
            return f"(const {_fc(n.params[0])})"
        if k == "var":
            return f"(var {n.params[0]}{'~' if n.params[1] else ''})"
        parts = [ref(a) for a in n.args]
        if k in ("add", "mul", "log", "re", "conj"):
            return f"({k} {' '.join(parts)})"
        if k == "pow":
            return f"(pow {n.params[0]} {parts[0]})"
        if k in ("rpow", "modpow"):
            return f"({k} {_fnum(n.params[0])} {parts[0]})"
        if k == "smooth":
            return f"(smooth {n.params[0]} {parts[0]})"
        if k == "pa":
            lv, kk, ll, t = n.params
            return f"(pa {lv} {kk} {ll} {_fc(t)} {parts[0]})"
        raise ValueError(k)

    def ref(n):
        if id(n) in index:
            return f"(ref {index[id(n)]})"
        if id(n) not in memo:
            memo[id(n)] = body(n)
        return memo[id(n)]

    lines = []
    for i, n in enumerate(shared):
        lines.append(f"(let {i} {body(n)})")
    lines.append(ref(e))
    return "\n".join(lines)


_TOK = _re.compile(r"\(|\)|[^\s()]+")


def from_sexpr(text):
    toks = []
    for lineno, line in enumerate(text.splitlines(), 1):
        for m in _TOK.finditer(line):
            toks.append((m.group(), lineno, m.start() + 1))
    pos = [0]
    lets = {}

    def nxt():
        if pos[0] >= len(toks):
            raise ParseError("unexpected end of expression")
        t = toks[pos[0]]
        pos[0] += 1
        return t

    def num():
        t, ln, col = nxt()
        try:
            return float(t)
        except ValueError:
            raise ParseError(f"expected a number, got '{t}'", ln, col)

    def integer():
        t, ln, col = nxt()
        try:
            return int(t)
        except ValueError:
            raise ParseError(f"expected an integer, got '{t}'", ln, col)

    def close():
        t, ln, col = nxt()
        if t != ")":
            raise ParseError(f"expected ')', got '{t}'", ln, col)

    def node():
        t, ln, col = nxt()
        if t != "(":
            raise ParseError(f"expected '(', got '{t}'", ln, col)
        head, ln, col = nxt()
        if head == "const":
            a, b = num(), num()
            close()
            return const(complex(a, b))
        if head == "var":
            t2, _, _ = nxt()
            close()
            return var(t2.rstrip("~"), t2.endswith("~"))
        if head == "ref":
            i = integer()
            close()
            if i not in lets:
                raise ParseError(f"undefined ref {i}", ln, col)
            return lets[i]
        if head in ("add", "mul"):
            items = []
            while toks[pos[0]][0] != ")":
                items.append(node())
            close()
            return add(*items) if head == "add" else mul(*items)
        if head in ("log", "re", "conj"):
            a = node()
            close()
            return {"log": log, "re": re, "conj": conj}[head](a)
        if head == "pow":
            n = integer()
            a = node()
            close()
            return pow_(a, n)
        if head in ("rpow", "modpow"):
            r = num()
            a = node()
            close()
            return (rpow if head == "rpow" else modpow)(a, r)
        if head == "smooth":
            o = integer()
            a = node()
            close()
            return smooth(a, o)
        if head == "pa":
            lv, kk, ll = integer(), integer(), integer()
            t = complex(num(), num())
            a = node()
            close()
            return pa(a, lv, kk, ll, t)
        raise ParseError(f"unknown node kind '{head}'", ln, col)

    while pos[0] < len(toks) and pos[0] + 1 < len(toks) and toks[pos[0] + 1][0] == "let":
        nxt()
        nxt()
        i = integer()
        lets[i] = node()
        close()
    out = node()
    if pos[0] != len(toks):
        t, ln, col = toks[pos[0]]
        raise ParseError(f"trailing input '{t}'", ln, col)
    return out
