"""Freeze analytic eps values used by the test-suite.

Computed with mpmath at 50 digits, independently of the package's samplers
and projections.  Run once; the output is committed under tests/data.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50
T = [mp.mpf("0.1") / 2 ** k for k in range(11)]


def circle(t):
    # shell on the unit circle at chord t, distance to x = 1; and back
    return {"yz": t ** 2 / 2, "zy": mp.sqrt(1 + t ** 2) - 1}


def diagonal(t):
    return {"zy": t / mp.sqrt(2), "yz": t / mp.sqrt(2)}


def ellipse(t):
    # (2 cos th, sin th) near (0, 1) against y = 1
    th = mp.findroot(lambda s: (2 * mp.cos(s)) ** 2 + (mp.sin(s) - 1) ** 2 - t ** 2,
                     mp.pi / 2 - t / 2)
    to_line = 1 - mp.sin(th)
    # distance from (t, 1) to the ellipse: stationary point of the squared distance
    g = lambda s: (2 * mp.cos(s) - t) ** 2 + (mp.sin(s) - 1) ** 2
    s = mp.findroot(lambda s: mp.diff(g, s), mp.pi / 2 - t / 2)
    return {"yz": to_line, "zy": mp.sqrt(g(s))}


def rotation(alpha):
    def f(t):
        x = mp.findroot(lambda x: x ** 2 + x ** (2 + 2 * alpha) - t ** 2, t)
        return {"yz": x ** (1 + alpha), "zy": mp.mpf(0)}
    return f


def paraboloid(t):
    r2 = (mp.sqrt(1 + 4 * t ** 2) - 1) / 2
    g = lambda s: (s - t) ** 2 + s ** 4
    s = mp.findroot(lambda s: mp.diff(g, s), t)
    return {"yz": r2, "zy": mp.sqrt(g(s))}


def sphere_patch(t):
    return {"yz": t ** 2 / 2, "zy": mp.sqrt(1 + t ** 2) - 1}


def cone(t):
    return {"yz": t / mp.sqrt(2), "zy": t / mp.sqrt(2)}


def main():
    cases = {"circle": circle, "diagonal": diagonal, "ellipse": ellipse,
             "rotation_0.5": rotation(mp.mpf("0.5")), "rotation_1.0": rotation(mp.mpf(1)),
             "rotation_0.05": rotation(mp.mpf("0.05")), "paraboloid": paraboloid,
             "sphere_patch": sphere_patch, "cone": cone}
    out = {"t": [float(t) for t in T]}
    for name, fn in cases.items():
        vals = [fn(t) for t in T]
        out[name] = {k: [float(v[k]) for v in vals] for k in ("zy", "yz")}
    out["grid_half_mesh"] = 0.5e-4
    path = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"
    path.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
