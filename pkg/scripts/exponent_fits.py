"""Ray-fit exponents for the one-line model and the pointwise bounds on the corpus."""
import numpy as np

from bumpkit import cli
from bumpkit import expr as ex
from bumpkit import synth as S
from bumpkit import verify as V
from bumpkit.bumpgraph import ROOT, build_graph


def main():
    rng = np.random.default_rng(0)
    for k, j in ((2, 1), (3, 1), (3, 2)):
        m = S.LineModel(k, [(1, j, k + 1)])
        ls = S.synth_line_model(m)
        lin = S.Z0 - S.W0
        H = ex.add(ex.modpow(lin, 2 * k), ex.mul(ex.modpow(lin, 2 * j), ex.modpow(S.W0, 2 * k - 2 * j)))
        f = V.first_step_asymptotics(ls.P2, H, 1, S.cone_widths([1], 0.4)[0], rng)
        print(f"k={k} j={j}: |dbar P2|^2 slope {np.nanmean(f['dbarP2']):.4f} (4k-4={4 * k - 4}), "
              f"DZ {np.nanmean(f['DZ']):.4f}, DW {np.nanmean(f['DW']):.4f} (4k-2={4 * k - 2})")
    for name in ("noell_k2", "line_one", "cusp"):
        spec = cli.load_spec(name)
        g = build_graph(spec.R, spec.params)
        s = S.synth_all(g, spec.params)
        p = spec.params
        res = V.lemma91_checks(s.phi, p.A, s.D[ROOT], g, s.cutoffs, spec.k, p.L, p.delta, rng)
        print(name, " ".join(f"{r.name}: target {r.info['target']:.4f} dev {r.worst_value:.2e}" for r in res))


if __name__ == "__main__":
    main()
