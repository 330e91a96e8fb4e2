"""End-to-end scenarios: curves, graph unions, bands, a body of rotation and
surfaces, each compared with its model tangent object.

Every scenario runs the same pipeline:

1. eps profile of the model space ``Z`` against the subspace ``Y`` and a
   strong-tangency verdict;
2. a canonical family on ``Z`` (the base point plus sequences at distances
   1, 2, 3 times ``1/n`` along the model) and its quotient;
3. transfer of that family to ``Y``, an isometry check between the two
   quotients, and line / half-line / plane embeddability of the ``Y``
   quotient.

"Isometric to the line / half-line / plane" is operationalized as
embeddability of these finite quotients.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import charts
from .family import PretangentQuotient, build_family, metric_identification
from .limits import ProbeConfig
from .metric import Subspace, as_point, make_euclidean
from .sequences import PointSequence, power_norm, power_sequence
from .tangency import (EpsilonProfile, TangencyVerdict, Transfer, TransferFailure,
                       decide_strong_tangency, epsilon_profile, quotient_isometry_check,
                       transfer_family)

MAX_CLASSES = 64
EMBED_TOL = 1e-6
TARGETS = ("line", "half_line", "plane")


class SizeLimitError(ValueError):
    pass


@dataclass(frozen=True)
class Embeddability:
    flag: bool
    defect: float

    def to_dict(self) -> dict:
        return {"flag": self.flag, "defect": self.defect}


def _line_defect(D: np.ndarray, anchor: int) -> float:
    s = D[anchor]
    return float(np.max(np.abs(D - np.abs(s[:, None] - s[None, :]))))


def _triangle_defect(D: np.ndarray) -> float:
    n = len(D)
    if n < 3:
        return 0.0
    via = D[:, :, None] + D[None, :, :]
    return float(max(0.0, np.max(D[:, None, :] - via)))


def _heron16(a, b, c):
    """16 * area^2 from squared side lengths."""
    return np.maximum(4 * a * b - (a + b - c) ** 2, 0.0)


def _coplanarity_defect(D: np.ndarray, scale: float) -> float:
    n = len(D)
    if n < 4:
        return 0.0
    quads = np.array(list(itertools.combinations(range(n), 4)))
    D2 = D * D
    m = len(quads)
    cm = np.ones((m, 5, 5))
    cm[:, 0, 0] = 0.0
    sub = D2[quads[:, :, None], quads[:, None, :]]
    cm[:, 1:, 1:] = sub
    det = np.linalg.det(cm)  # 288 V^2
    faces = []
    for i, j, k in itertools.combinations(range(4), 3):
        faces.append(_heron16(sub[:, i, j], sub[:, j, k], sub[:, i, k]) / 16.0)
    area2 = np.max(np.stack(faces, axis=1), axis=1)
    tiny = (1e-12 * scale * scale) ** 2
    # squared height over the largest face: h^2 = 9 V^2 / A^2 = det / (32 A^2)
    h2 = np.where(area2 > tiny, np.abs(det) / (32.0 * np.where(area2 > tiny, area2, 1.0)), 0.0)
    return float(np.max(h2) / scale) if scale > 0 else 0.0


def embeddability_check(q: PretangentQuotient | np.ndarray, target: str = "line",
                        base: int = 0) -> Embeddability:
    """Whether the class metric embeds isometrically in a line, half-line or plane.

    line: farthest-pair anchoring, coordinate ``s = rho(anchor, .)``;
    half_line: the same with the base class as anchor;
    plane: triangle inequality plus vanishing Cayley-Menger volumes of all
    4-point subsets, the defect being the largest squared out-of-plane height
    over the scale (linear in distance errors).
    """
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")
    D = np.asarray(q.rho if isinstance(q, PretangentQuotient) else q, float)
    n = len(D)
    if n > MAX_CLASSES:
        raise SizeLimitError(f"{n} classes exceed the limit of {MAX_CLASSES}")
    if n <= 1:
        return Embeddability(True, 0.0)
    scale = float(D.max())
    if target == "line":
        p = int(np.unravel_index(int(np.argmax(D)), D.shape)[0])
        defect = _line_defect(D, p)
    elif target == "half_line":
        defect = _line_defect(D, base)
    else:
        defect = max(_triangle_defect(D), _coplanarity_defect(D, scale))
    return Embeddability(defect <= EMBED_TOL * scale, defect)


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    scenario: str
    params: dict
    verdict: TangencyVerdict
    profile: EpsilonProfile = field(repr=False)
    model_quotient: PretangentQuotient = field(repr=False)
    quotient: PretangentQuotient | None = field(repr=False)
    embeddability: dict
    isometry: tuple[bool, float] | None
    transfer: Transfer | None = field(repr=False)
    transfer_failure: dict | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "params": self.params,
            "verdict": self.verdict.to_dict(),
            "profile": self.profile.to_dict(),
            "model_quotient": self.model_quotient.to_dict(),
            "quotient": self.quotient.to_dict() if self.quotient else None,
            "embeddability": {k: v.to_dict() for k, v in self.embeddability.items()},
            "isometry": None if self.isometry is None else
            {"ok": self.isometry[0], "distortion": self.isometry[1]},
            "transfer": self.transfer.to_dict() if self.transfer else None,
            "transfer_failure": self.transfer_failure,
        }

    def summary_row(self) -> list:
        e = self.embeddability
        return [self.scenario, self.verdict.kind, self.verdict.slope,
                *(e[k].defect if k in e else None for k in TARGETS)]


@dataclass(frozen=True)
class ScenarioOptions:
    t0: float = 0.1
    grid_len: int = 11
    eta: float = 0.05
    n_sphere: int = 512
    n_target: int = 4096
    transfer_target: int = 1024
    seed: int = 0
    jobs: int = 1
    zero_tol: float = 1e-4
    probe: ProbeConfig = field(default_factory=ProbeConfig)

    def to_dict(self) -> dict:
        return {"t0": self.t0, "grid_len": self.grid_len, "eta": self.eta,
                "n_sphere": self.n_sphere, "n_target": self.n_target,
                "transfer_target": self.transfer_target, "seed": self.seed,
                "zero_tol": self.zero_tol, "probe": self.probe.to_dict()}


def model_pool(a, directions: Sequence) -> list[PointSequence]:
    """``a + (c/n) e_c`` for c = 1, 2, 3 with the given unit directions."""
    return [power_sequence(a, float(c), 1.0, d, f"{c}/n*e{c}")
            for c, d in zip((1, 2, 3), directions)]


def _orthonormal(J: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(J)
    return q


def run_pipeline(name: str, a, Z: Subspace, Y: Subspace, directions: Sequence,
                 opts: ScenarioOptions, params: dict | None = None) -> ScenarioResult:
    a = as_point(a)
    prof = epsilon_profile(a, Z, Y, opts.t0, opts.grid_len, 0.5, opts.eta, opts.n_sphere,
                           opts.n_target, opts.seed, opts.jobs)
    verdict = decide_strong_tangency(prof)
    space = make_euclidean(a.size)
    norm = power_norm(1.0, 1.0)
    fam, _ = build_family(model_pool(a, directions), a, norm, space, opts.probe, opts.jobs)
    qz = metric_identification(fam, opts.zero_tol)
    try:
        tr = transfer_family(fam, Y, (), Z, opts.zero_tol, opts.transfer_target, opts.seed,
                             opts.jobs)
    except TransferFailure as exc:
        return ScenarioResult(name, params or {}, verdict, prof, qz, None, {}, None, None,
                              {"member": exc.member, "floor": exc.floor})
    qy = metric_identification(tr.family, opts.zero_tol)
    iso = quotient_isometry_check(qz, qy, tr.pairing) if len(qz) == len(qy) else (False, float("inf"))
    emb = {t: embeddability_check(qy, t, qy.projection[0]) for t in TARGETS}
    return ScenarioResult(name, params or {}, verdict, prof, qz, qy, emb, iso, tr)


def _numeric_derivative(fn: Callable, x: float, h: float = 1e-6) -> float:
    return float((fn(np.array([x + h])) - fn(np.array([x - h])))[0] / (2 * h))


def scenario_simple_curve(curve: Subspace | None = None, param: float = 0.0, derivative=None,
                          opts: ScenarioOptions | None = None, name: str = "simple-curve"
                          ) -> ScenarioResult:
    """A curve against its tangent line at ``curve.chart(param)``.

    ``derivative`` defaults to a central difference of the chart.
    """
    opts = opts or ScenarioOptions()
    curve = curve or charts.circle()
    u = np.array([[param]])
    a = curve.chart(u)[0]
    if derivative is None:
        derivative = curve._jacobian(u)[0][:, 0]
    d = np.asarray(derivative, float)
    nrm = float(np.linalg.norm(d))
    if not nrm > 1e-12:
        raise ValueError("derivative vector vanishes at the base parameter")
    e = d / nrm
    Z = charts.line(a, e, label="tangent-line")
    return run_pipeline(name, a, Z, curve, [e, e, e], opts,
                        {"param": param, "derivative": d.tolist()})


def _common_value_slope(fns: Sequence[Callable], derivs=None) -> tuple[float, float]:
    vals = [float(f(np.array([0.0]))[0]) for f in fns]
    slopes = list(derivs) if derivs is not None else [_numeric_derivative(f, 0.0) for f in fns]
    if max(vals) - min(vals) > 1e-9:
        raise ValueError(f"functions disagree at 0: {vals}")
    if max(slopes) - min(slopes) > 1e-5:
        raise ValueError(f"derivatives disagree at 0: {slopes}")
    return vals[0], float(np.mean(slopes))


def scenario_graph_union(fns: Sequence[Callable], derivs=None, domain=(-1.0, 1.0),
                         opts: ScenarioOptions | None = None) -> ScenarioResult:
    """Union of graphs through ``(0, c)`` with common slope ``b`` against the line."""
    opts = opts or ScenarioOptions()
    if not fns:
        raise ValueError("need at least one function")
    c, b = _common_value_slope(fns, derivs)
    Y = charts.graph_union(fns, domain)
    a = np.array([0.0, c])
    e = np.array([1.0, b]) / np.hypot(1.0, b)
    Z = charts.line(a, e, label="tangent-line")
    return run_pipeline("graph-union", a, Z, Y, [e, e, e], opts,
                        {"functions": len(fns), "value": c, "slope": b})


def scenario_between_graphs(f1: Callable, f2: Callable, derivs=None, domain=(-1.0, 1.0),
                            opts: ScenarioOptions | None = None) -> ScenarioResult:
    """Region between two graphs meeting at ``x = 0`` against the tangent line of ``f1``.

    Values at 0 must agree; differing slopes are allowed and then give a
    band of width proportional to ``t``.
    """
    opts = opts or ScenarioOptions()
    v1, v2 = float(f1(np.array([0.0]))[0]), float(f2(np.array([0.0]))[0])
    if abs(v1 - v2) > 1e-9:
        raise ValueError(f"functions disagree at 0: {v1} vs {v2}")
    b = float(derivs[0]) if derivs is not None else _numeric_derivative(f1, 0.0)
    Y = charts.band(f1, f2, domain)
    a = np.array([0.0, v1])
    e = np.array([1.0, b]) / np.hypot(1.0, b)
    Z = charts.line(a, e, label="tangent-line")
    return run_pipeline("between-graphs", a, Z, Y, [e, e, e], opts, {"value": v1, "slope": b})


def scenario_rotation_body(alpha: float, length: float = 1.0,
                           opts: ScenarioOptions | None = None) -> ScenarioResult:
    """Body ``sqrt(y^2+z^2) <= x^(1+alpha)`` at the origin against the half-axis."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    opts = opts or ScenarioOptions()
    Y = charts.rotation_body(alpha, length)
    a = np.zeros(3)
    e = np.array([1.0, 0.0, 0.0])
    Z = charts.half_line(a, e, length, label="half-axis")
    return run_pipeline("rotation-body", a, Z, Y, [e, e, e], opts, {"alpha": alpha})


def scenario_surface(kind: str = "paraboloid", base=(0.0, 0.0), jacobian=None,
                     force_plane=None, extent: float = 0.5,
                     opts: ScenarioOptions | None = None) -> ScenarioResult:
    """Graph surface against its affine tangent plane.

    ``jacobian`` defaults to the analytic one of the built-in surface; when it
    is undefined (cone apex) the call fails unless ``force_plane`` supplies
    two spanning vectors of the comparison plane.
    """
    opts = opts or ScenarioOptions()
    Y = charts.surface(kind, extent)
    u0 = np.asarray(base, float)
    a = Y.chart(u0[None, :])[0]
    if force_plane is not None:
        J = np.asarray(force_plane, float).T
    else:
        J = charts.surface_jacobian(kind, *u0) if jacobian is None else np.asarray(jacobian, float)
        if J is None:
            raise ValueError(f"the Jacobian of {kind} is undefined at {u0.tolist()}")
    sv = np.linalg.svd(J, compute_uv=False)
    if len(sv) < 2 or not sv[-1] > 1e-9 * sv[0]:
        raise ValueError("Jacobian rank is below two")
    Q = _orthonormal(J)
    e1, e2 = Q[:, 0], Q[:, 1]
    Z = charts.plane(a, e1, e2, extent, label="tangent-plane")
    dirs = [e1, e2, (e1 + e2) / np.sqrt(2.0)]
    return run_pipeline(f"surface-{kind}", a, Z, Y, dirs, opts,
                        {"kind": kind, "base": u0.tolist(), "forced": force_plane is not None})


def _sq(x):
    return x * x


SCENARIOS: dict[str, Callable[[ScenarioOptions, dict], ScenarioResult]] = {
    "circle": lambda o, kw: scenario_simple_curve(charts.circle(), 0.0, None, o, "circle"),
    "ellipse": lambda o, kw: scenario_simple_curve(charts.ellipse(2.0, 1.0), np.pi / 2, None, o,
                                                   "ellipse"),
    "graph-union": lambda o, kw: scenario_graph_union([lambda x: x, lambda x: x + _sq(x)], None,
                                                      opts=o),
    "between-graphs": lambda o, kw: scenario_between_graphs(lambda x: x + _sq(x),
                                                            lambda x: x - _sq(x), opts=o),
    "rotation-body": lambda o, kw: scenario_rotation_body(kw.get("alpha", 0.5), opts=o),
    "paraboloid": lambda o, kw: scenario_surface("paraboloid", opts=o),
    "sphere-patch": lambda o, kw: scenario_surface("sphere", opts=o),
    "cone": lambda o, kw: scenario_surface("cone", force_plane=[[1, 0, 0], [0, 1, 0]], opts=o),
}


def run_scenario(name: str, opts: ScenarioOptions | None = None, **kw) -> ScenarioResult:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[name](opts or ScenarioOptions(), kw)
