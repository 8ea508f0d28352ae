"""Run every stage on every corpus spec and print one summary line per model."""
import argparse
import time

from bumpkit import cli
from bumpkit.errors import BumpError


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out-dir", default="corpus_runs")
    ap.add_argument("--samples", type=int, default=1000)
    a = ap.parse_args()
    for name in cli.corpus_names():
        t = time.time()
        try:
            spec = cli.load_spec(name)
            spec.seed = a.seed
            man, res = cli.run_pipeline(spec, cli.STAGES, f"{a.out_dir}/{name}", cli.RunConfig(samples=a.samples))
            bad = [r.name for r in res if not r.passed]
            print(f"{name:20s} exit {man.exit_code}  {len(res)} checks  flagged {bad}  {time.time() - t:.1f}s")
        except cli.StageError as e:
            print(f"{name:20s} exit 1  {e}")
        except BumpError as e:
            print(f"{name:20s} exit 3  {type(e).__name__}: {e}")


if __name__ == "__main__":
    main()
