"""Batch front end: parse a domain spec, run the pipeline, write reports."""
import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import expr as ex
from . import kernel as K
from . import koszul as KZ
from . import synth as S
from . import verify as V
from .bumpgraph import ROOT, build_graph, check_invariants, to_dot, to_json
from .errors import BumpError, NonFiniteLineSet, ParamError, ParseError, RealityViolation
from .lines import SolverConfig
from .params import BumpParams
from .realpoly import MixedPoly, is_pluriharmonic_free

STAGES = ("graph", "synth", "weights", "koszul", "verify", "kernel")
VERBS = {
    "analyze": ("graph",),
    "graph": ("graph",),
    "synth": ("graph", "synth", "weights"),
    "verify": ("graph", "synth", "weights", "koszul", "verify"),
    "kernel": ("kernel",),
    "all": STAGES,
}
EXIT_OK, EXIT_HARD, EXIT_SOFT, EXIT_INPUT = 0, 1, 2, 3

_FLOAT_KEYS = {"A", "eps", "delta", "d", "eps_t", "prune", "cone_fraction"}
_INT_KEYS = {"L", "M", "node_budget"}


@dataclass
class DomainSpec:
    R: MixedPoly
    params: BumpParams
    seed: int = 0
    name: str = ""
    lines: list = field(default_factory=list)     # (tau, j, K) of an optional glued line model
    text: str = ""

    @property
    def k(self):
        return self.R.lowdeg() / 2

    @property
    def digest(self):
        return hashlib.sha256(self.text.encode()).hexdigest()

    def line_model(self):
        if not self.lines:
            return None
        return S.LineModel(int(self.k), list(self.lines), self.params.A, self.params.cone_fraction)


@dataclass
class RunManifest:
    input_hash: str
    seed: int
    versions: dict
    artifacts: list
    status: str = "ok"
    exit_code: int = 0

    def to_json(self):
        return json.dumps({"input_hash": self.input_hash, "seed": self.seed, "versions": self.versions,
                           "artifacts": self.artifacts, "status": self.status, "exit_code": self.exit_code},
                          sort_keys=True, indent=1)


class StageError(BumpError):
    def __init__(self, stage, err):
        self.stage = stage
        self.err = err
        super().__init__(f"stage {stage}: {type(err).__name__}: {err}")


# ------------------------------------------------------------------ parsing

def _value(raw, key, line, col):
    try:
        if key in _INT_KEYS or key == "seed":
            return int(raw)
        return float(raw)
    except ValueError:
        raise ParseError(f"bad value {raw!r} for {key}", line, col)


def parse_spec(text, name=""):
    params = BumpParams()
    solver = SolverConfig()
    seed = 0
    lines = []
    terms = []
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].rstrip()
        if not s.strip():
            continue
        if s.lstrip().startswith("("):
            terms.append(MixedPoly.from_text(s, first_line=n))
            continue
        if "=" not in s:
            raise ParseError("expected a monomial line or key = value", n, len(s) - len(s.lstrip()) + 1)
        key, val = s.split("=", 1)
        col = s.index("=") + 2 + len(val) - len(val.lstrip())
        key, val = key.strip(), val.strip()
        if key == "line":
            parts = val.split()
            if len(parts) != 4:
                raise ParseError("line needs 'tau_re tau_im j K'", n, col)
            try:
                tau = complex(float(parts[0]), float(parts[1]))
                j, Kd = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError("bad line data", n, col)
            lines.append((tau, j, Kd))
        elif key == "seed":
            seed = _value(val, key, n, col)
        elif key in _FLOAT_KEYS or key in _INT_KEYS:
            setattr(params, key, _value(val, key, n, col))
        elif key.startswith("solver."):
            attr = key[7:]
            if attr not in {f.name for f in fields(SolverConfig)}:
                raise ParseError(f"unknown solver option {attr!r}", n, 1)
            cur = getattr(solver, attr)
            try:
                setattr(solver, attr, type(cur)(val))
            except ValueError:
                raise ParseError(f"bad value {val!r} for {key}", n, col)
        else:
            raise ParseError(f"unknown key {key!r}", n, len(s) - len(s.lstrip()) + 1)
    if not terms:
        raise ParseError("no polynomial terms", None, None)
    R = MixedPoly({})
    seen = set()
    for t in terms:
        (m,) = t.terms
        if m in seen:
            raise ParseError(f"duplicate monomial {m}")
        seen.add(m)
        R = R + t
    bad = R.reality_defect()
    if bad is not None:
        raise RealityViolation(f"coefficient of {bad[0]} is not the conjugate of the coefficient of {bad[1]}")
    if not is_pluriharmonic_free(R):
        raise ParamError("polynomial has pluriharmonic terms")
    params.solver = solver
    params.validate()
    k = R.lowdeg() / 2
    if not params.delta < 1 / (2 * k):
        raise ParamError(f"delta = {params.delta} is not below 1/(2k) = {1 / (2 * k)}")
    if not params.delta < 1 / (2 * params.L):
        raise ParamError(f"delta = {params.delta} is not below 1/(2L) = {1 / (2 * params.L)}")
    for tau, j, Kd in lines:
        if not (1 <= j < k and Kd > k):
            raise ParamError(f"line data j = {j}, K = {Kd} needs 1 <= j < k < K")
    return DomainSpec(R, params, seed, name, lines, text)


def load_spec(path):
    p = Path(path)
    if not p.exists():
        from importlib import resources
        cand = resources.files("bumpkit") / "corpus" / f"{path}.spec"
        if not cand.is_file():
            raise FileNotFoundError(path)
        return parse_spec(cand.read_text(), name=str(path))
    return parse_spec(p.read_text(), name=p.stem)


def corpus_names():
    from importlib import resources
    d = resources.files("bumpkit") / "corpus"
    return sorted(f.name[:-5] for f in d.iterdir() if f.name.endswith(".spec"))


# ------------------------------------------------------------------ stages

@dataclass
class RunConfig:
    samples: int = 1000
    tol: float = 1e-12
    kernel_nodes: int = 100_000


def _graph_checks(g):
    bad = check_invariants(g)
    return [V.CheckResult("graph_invariants", "graph invariants", len(g.nodes), float(len(bad)), 0, not bad,
                          info={"nodes": len(g.nodes), "leaves": len(g.leaves())})]


def _cf_check(name, syn, rng, n, tol):
    env = S.sample_points(rng, n)
    r = S.cf_residual(syn.phi, syn.P2, syn.P3, env)
    # residual of (xi + P2 z + P3 w) - Phi relative to 1 + |Phi|
    f = np.abs(ex.evaluate(syn.phi, env))
    worst = float(np.max(r * f / (1 + f)))
    return V.CheckResult(name, "division identity", n, worst, tol, worst < tol)


def _koszul_checks(syn, rng, n):
    div = KZ.Division(syn.phi, syn.P2, syn.P3)
    g = div.g
    env = KZ.generic_points(rng, n, syn.phi)
    H = KZ.koszul_h(*g)
    Hc = KZ.koszul_h_closed(div)
    om = KZ.koszul_omega(*g, H)
    omc = KZ.koszul_omega_closed(div)
    out = []
    for nm, a, b in (("h12", H.h12, Hc.h12), ("h13", H.h13, Hc.h13), ("h23", H.h23, Hc.h23), ("omega", om, omc)):
        e = float(np.max(KZ.rel_err(a.evaluate(env), b.evaluate(env))))
        out.append(V.CheckResult(f"koszul_{nm}_closed_form", "Koszul complex", n, e, 1e-6, e < 1e-6))
    for nm, rs in (("dbar_g", KZ.dbar_g_identities(g, H)), ("dbar_h", KZ.dbar_h_identities(H, om))):
        scale = max(float(np.max(np.abs(x.evaluate(env)))) for x in (H.h12, H.h13, H.h23))
        e = max(float(np.max(np.abs(r.evaluate(env)))) for r in rs) / scale
        out.append(V.CheckResult(f"koszul_{nm}_identities", "Koszul complex", n, e, 1e-7, e < 1e-7))
    # closure of omega by finite differences on a subsample
    m = min(n, 50)
    sub = {k: v[:m] for k, v in env.items()}
    fns = [lambda e, c=c: ex.evaluate(c, e) for c in omc.c]
    d = KZ.dbar2_fd(fns, sub)
    scale = float(np.max(np.abs(omc.evaluate(sub))))
    e = float(np.max(np.abs(d))) / scale
    out.append(V.CheckResult("koszul_omega_closed", "Koszul complex", m, e, 1e-5, e < 1e-5))
    return out


def _verify_checks(spec, g, syn, ws, rng, n):
    p = spec.params
    out = []
    env = S.sample_points(rng, max(n // 4, 50))
    out += V.weight_checks(ws, p.eps, env)
    for H in ws.H.values():
        out += V.estimate_checks(H, p.eps, env)
    out.append(V.lemma81_check(rng))
    D = syn.D[ROOT]
    dom = V.ModelDomain(spec.R, D, p.A)
    out += V.phi_theoremA_properties(dom, syn.phi, rng, n=n, grid=12)
    out.append(V.polydisc_volume(dom, syn.phi, g, syn.cutoffs, p.L, rng, n=30))
    out += V.lemma91_checks(syn.phi, p.A, D, g, syn.cutoffs, spec.k, p.L, p.delta, rng)
    lm = spec.line_model()
    if lm is not None:
        ls = S.synth_line_model(lm)
        out.append(_cf_check("cf_identity_line_model", ls, rng, 10_000, 1e-12))
        if len(lm.lines) == 1 and float(spec.k).is_integer():
            tau, j, _ = lm.lines[0]
            k = int(spec.k)
            lin = S.Z0 - complex(tau) * S.W0
            H = ex.add(ex.modpow(lin, 2 * k), ex.mul(ex.modpow(lin, 2 * j), ex.modpow(S.W0, 2 * k - 2 * j)))
            width = S.cone_widths([complex(tau)], lm.cone_fraction)[0]
            out += V.first_step_checks(ls.P2, H, k, tau, width, rng)
    return out


def _kernel_checks(rng, cfg):
    out = []
    e = K.decomposition_residual(rng)
    out.append(V.CheckResult("kernel_decomposition", "kernel decomposition", 1000, e, 1e-8, e < 1e-8))
    s = K.eta1_ray_exponent(rng)
    err = float(np.max(np.abs(s + 3)))
    out.append(V.CheckResult("eta1_exponent", "kernel decomposition", len(s), err, 0.05, err <= 0.05,
                             info={"target": -3.0, "mean_fit": float(np.mean(s))}))
    patch = K.sphere_patch(K.level_for_nodes(cfg.kernel_nodes))
    z0 = np.zeros(3, dtype=complex)

    tests = {"1": (lambda zt: np.ones(len(zt)), 1.0), "zeta1": (lambda zt: zt[:, 0], 0.0),
             "zeta1_zeta2sq": (lambda zt: zt[:, 0] * zt[:, 1] ** 2, 0.0)}
    for nm, (fn, g0) in tests.items():
        err = float(abs(K.bm_reproduce(fn, z0, patch) - g0))
        out.append(V.CheckResult(f"bm_reproducing_{nm}", "reproducing kernel", len(patch.weights), err, 1e-2,
                                 err < 1e-2))
    area = float(abs(patch.weights.sum() / K.SPHERE_AREA - 1))
    out.append(V.CheckResult("sphere_area", "reproducing kernel", len(patch.weights), area, 1e-2, area < 1e-2,
                             hard=False))
    r = K.psi_neighborhood()
    out.append(V.CheckResult("psi_neighborhood_radius", "frozen point neighbourhood", 400, r, 0.0, r > 0,
                             hard=False))
    return out, patch


# ------------------------------------------------------------------ pipeline

def _fmt_report(results, extra=None):
    return V.report_json(results, extra) + "\n"


def run_pipeline(spec, stages=STAGES, out_dir=None, cfg=None):
    """Run the requested stages in order; returns (manifest, results)."""
    cfg = cfg or RunConfig()
    stages = [s for s in STAGES if s in set(stages)]
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ParamError(f"unknown stages {sorted(unknown)}")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    artifacts = []
    results = []

    def write(name, data):
        if out is None:
            return
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(out / name, mode) as fh:
            fh.write(data)
        artifacts.append(name)

    g = syn = ws = None
    need_graph = any(s in stages for s in ("graph", "synth", "weights", "koszul", "verify"))
    if need_graph:
        try:
            g = build_graph(spec.R, spec.params)
        except NonFiniteLineSet as e:
            raise StageError("lines", e)
        except BumpError as e:
            raise StageError("graph", e)
        results += _graph_checks(g)
        if "graph" in stages:
            write("graph.dot", to_dot(g))
            write("graph.json", to_json(g) + "\n")
    try:
        if any(s in stages for s in ("synth", "weights", "koszul", "verify")):
            stage = "synth"
            syn = S.synth_all(g, spec.params)
            results.append(_cf_check("cf_identity", syn, rng, 10_000, cfg.tol))
            if "synth" in stages:
                write("phi.expr", S.dump_exprs({"phi": syn.phi}))
                write("p2.expr", S.dump_exprs({"P2": syn.P2}))
                write("p3.expr", S.dump_exprs({"P3": syn.P3}))
        if any(s in stages for s in ("weights", "verify")):
            stage = "weights"
            ws = S.synth_weights(g, spec.params, syn.phi)
            if "weights" in stages:
                write("weights.expr", S.dump_exprs(ws.named()))
        if "koszul" in stages:
            stage = "koszul"
            results += _koszul_checks(syn, rng, cfg.samples)
        if "verify" in stages:
            stage = "verify"
            results += _verify_checks(spec, g, syn, ws, rng, cfg.samples)
            write("verify.json", _fmt_report(results, {"spec": spec.name}))
        if "kernel" in stages:
            stage = "kernel"
            kres, patch = _kernel_checks(rng, cfg)
            results += kres
            write("kernel.json", _fmt_report(kres, {"quadrature_nodes": len(patch.weights)}))
            write("kernel_nodes.bin", patch.to_bytes())
    except ParamError:
        raise
    except BumpError as e:
        raise StageError(stage, e)
    code = exit_code(results)
    man = RunManifest(spec.digest, spec.seed, {"bumpkit": __version__}, list(artifacts),
                      {EXIT_OK: "ok", EXIT_SOFT: "soft", EXIT_HARD: "fail"}[code], code)
    write("manifest.json", man.to_json() + "\n")
    return man, results


def exit_code(results):
    hard = any(not r.passed for r in results if r.hard)
    soft = any(not r.passed for r in results if not r.hard)
    return EXIT_HARD if hard else (EXIT_SOFT if soft else EXIT_OK)


def _line(r):
    mark = "ok  " if r.passed else ("soft" if not r.hard else "FAIL")
    return f"{mark} {r.name:32s} worst={r.worst_value:.17g} tol={r.tolerance:.17g} n={r.n_samples}"


def main(argv=None):
    ap = argparse.ArgumentParser(prog="bumpkit", description="Support functions and kernels for bumped domains.")
    ap.add_argument("verb", choices=sorted(VERBS))
    ap.add_argument("spec", help="spec file path or corpus name")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out-dir", default=None)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--tol", type=float, default=1e-12)
    ap.add_argument("--stages", default=None, help="comma separated subset of " + ",".join(STAGES))
    a = ap.parse_args(argv)
    try:
        spec = load_spec(a.spec)
        if a.seed is not None:
            spec.seed = a.seed
        stages = VERBS[a.verb] if a.stages is None else tuple(s.strip() for s in a.stages.split(",") if s.strip())
        bad = set(stages) - set(STAGES)
        if bad:
            raise ParamError(f"unknown stages {sorted(bad)}")
    except (BumpError, FileNotFoundError) as e:
        print(f"input error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = a.out_dir
    if out_dir is None and a.verb != "analyze":
        out_dir = f"bumpkit_out/{spec.name or 'spec'}"
    t0 = time.time()
    try:
        man, results = run_pipeline(spec, stages, out_dir, RunConfig(samples=a.samples, tol=a.tol))
    except ParamError as e:
        print(f"input error: ParamError: {e}", file=sys.stderr)
        return EXIT_INPUT
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_HARD
    for r in results:
        print(_line(r))
    print(f"# {len(results)} checks, exit {man.exit_code}, {time.time() - t0:.1f}s", file=sys.stderr)
    return man.exit_code


if __name__ == "__main__":
    sys.exit(main())
