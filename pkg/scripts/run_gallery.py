"""Run every gallery scenario and write per-scenario reports plus a summary table.

    python3 scripts/run_gallery.py --out results/gallery --grid-len 11
"""

import argparse
import csv
import json
import time
from pathlib import Path

from pretangent.cli import dumps
from pretangent.gallery import SCENARIOS, TARGETS, ScenarioOptions, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/gallery"))
    ap.add_argument("--t0", type=float, default=0.1)
    ap.add_argument("--grid-len", type=int, default=11)
    ap.add_argument("--n-sphere", type=int, default=512)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", default=None, help="subset of scenario ids")
    ap.add_argument("--alpha", type=float, nargs="*", default=[0.5, 1.0, 0.05],
                    help="rotation-body exponents to sweep")
    args = ap.parse_args()

    opts = ScenarioOptions(t0=args.t0, grid_len=args.grid_len, n_sphere=args.n_sphere,
                           seed=args.seed)
    runs = []
    for name in args.only or sorted(SCENARIOS):
        if name == "rotation-body":
            runs += [(f"rotation-body-{a:g}", name, {"alpha": a}) for a in args.alpha]
        else:
            runs.append((name, name, {}))

    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for tag, name, kw in runs:
        t = time.perf_counter()
        res = run_scenario(name, opts, **kw)
        dt = time.perf_counter() - t
        (args.out / f"{tag}.json").write_text(dumps(res.to_dict()))
        row = [tag, *res.summary_row()[1:], f"{dt:.1f}"]
        rows.append(row)
        print(",".join("" if v is None else str(v) for v in row), flush=True)

    with open(args.out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "verdict", "slope", *(f"{t}_defect" for t in TARGETS), "seconds"])
        w.writerows(rows)
    (args.out / "options.json").write_text(json.dumps(opts.to_dict(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
