"""Write eps profiles for the reference configurations as CSV, next to their oracles.

    python3 scripts/epsilon_profiles.py --out results/profiles
"""

import argparse
import json
from pathlib import Path

import numpy as np

from pretangent import charts
from pretangent.tangency import decide_strong_tangency, epsilon_profile, profile_csv

ORACLES = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def cases():
    p, o2 = np.array([1.0, 0.0]), np.zeros(2)
    yield "circle", p, charts.line(p, [0.0, 1.0]), charts.circle()
    yield "diagonal", o2, charts.line(o2, [1.0, 0.0]), charts.line(o2, [1.0, 1.0])
    yield "ellipse", np.array([0.0, 1.0]), charts.line([0.0, 1.0], [1.0, 0.0]), charts.ellipse()
    o3 = np.zeros(3)
    for alpha in (0.5, 1.0, 0.05):
        yield (f"rotation_{alpha}", o3, charts.half_line(o3, [1.0, 0.0, 0.0], 1.0),
               charts.rotation_body(alpha))
    plane = charts.plane(o3, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.5)
    yield "paraboloid", o3, plane, charts.surface("paraboloid")
    yield "cone", o3, plane, charts.surface("cone")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/profiles"))
    ap.add_argument("--grid-len", type=int, default=11)
    ap.add_argument("--n-sphere", type=int, default=512)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    oracle = json.loads(ORACLES.read_text())
    args.out.mkdir(parents=True, exist_ok=True)
    for name, a, Z, Y in cases():
        prof = epsilon_profile(a, Z, Y, t0=0.1, grid_len=args.grid_len, n_sphere=args.n_sphere,
                               seed=args.seed)
        (args.out / f"{name}.csv").write_text(profile_csv(prof))
        v = decide_strong_tangency(prof)
        line = f"{name:14s} {v.kind:26s} slope={v.slope if v.slope is None else round(v.slope, 4)}"
        if name in oracle:
            k = min(len(prof.t), len(oracle["t"]))
            exact = np.maximum(oracle[name]["zy"][:k], oracle[name]["yz"][:k])
            mask = exact > 0
            dev = np.max(np.abs(prof.eps[:k][mask] / exact[mask] - 1)) if mask.any() else 0.0
            line += f" max rel dev from oracle={dev:.2e}"
        print(line, flush=True)


if __name__ == "__main__":
    main()
