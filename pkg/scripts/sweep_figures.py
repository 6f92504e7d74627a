"""Write CSV data for the improvement-vs-alpha and epoch-length plots.

Files land in ``--out`` (default ``figures/``):
  policies_ell32.csv   every policy on the 0.01..0.45 grid
  ell_sweep.csv        optimal vs honest at ell in {16, 32, 64, 128}
  bounds_ell32.csv     takeover / reset-time bounds on the stable range
"""
import argparse
from pathlib import Path

from randao import cli


def emit(path: Path, rows):
    path.write_text(cli.to_csv(rows))
    print(f"wrote {path} ({len(rows)} rows)")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--ells", default="16,32,64,128")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = cli.parse_alpha("0.01:0.45:0.01")

    emit(out / "policies_ell32.csv",
         cli.run_sweep(cli.RunConfig("sweep", grid, policies=cli.POLICIES, jobs=args.jobs)))

    rows = []
    for ell in (int(x) for x in args.ells.split(",")):
        rows += cli.run_sweep(cli.RunConfig("sweep", grid, ell=ell, policies=("optimal", "honest"), jobs=args.jobs))
    emit(out / "ell_sweep.csv", rows)

    emit(out / "bounds_ell32.csv", cli.run_bounds(cli.RunConfig("bounds", cli.parse_alpha("0.01:0.25:0.01"))))


if __name__ == "__main__":
    main()
