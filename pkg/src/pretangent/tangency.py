"""Tangency of subspaces through the sup-inf functional eps_a(t, Z, Y).

``eps_a(t, Z, Y)`` is the largest distance from a point of the sphere of
radius ``t`` about ``a`` in ``Z`` to the subspace ``Y``.  Strong tangent
equivalence at ``a`` is decided from how the two directed values scale as
``t -> 0``.

The directed values are combined with ``max`` by default.  The decision
needs both ``eps(Z->Y)/t`` and ``eps(Y->Z)/t`` to vanish; with ``min`` a
subspace containing the other (an axis inside a body of rotation, say)
would look tangent whatever its shape.  ``combine="min"`` is available.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import linregress

from ._parallel import pmap
from .family import (StableFamily, assemble_family, metric_identification, mutual_stability,
                     PretangentQuotient)
from .limits import TAIL, LimitVerdict, ratio_sequence
from .metric import Subspace, as_point
from .sequences import PointSequence, constant_at

log = logging.getLogger(__name__)

BOOTSTRAP = 200
ZERO_RATIO = 1e-9  # eps/t below this counts as identically zero


class InsufficientGeometry(ValueError):
    pass


class TransferFailure(RuntimeError):
    def __init__(self, member: str, floor: float, verdict: LimitVerdict | None = None):
        super().__init__(f"no sequence in Y shadows {member}; ratio floor {floor:.6g}")
        self.member = member
        self.floor = floor
        self.verdict = verdict


@dataclass(frozen=True)
class EpsilonEstimate:
    value: float
    error: float
    n_shell: int
    empty: bool
    witness: np.ndarray | None = None  # shell point attaining the sup


def _check_member(S: Subspace, a, name: str) -> None:
    if not S.contains(a):
        raise ValueError(f"base point is not in {name} ({S.label or 'unnamed'})")


def epsilon(a, t: float, Z: Subspace, Y: Subspace, eta: float = 0.05, n_sphere: int = 512,
            n_target: int = 4096, seed: int = 0, check: bool = True) -> EpsilonEstimate:
    """sup over the ``t``-shell of ``Z`` of the distance to ``Y``.

    The inner infimum is localized to the ball of radius ``3t`` about ``a``.
    An empty shell gives value 0 with ``empty`` set.  The error bar is the
    bootstrap standard deviation of the sample maximum.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    a = as_point(a)
    if check:
        _check_member(Y, a, "Y")
        _check_member(Z, a, "Z")
    ss = np.random.SeedSequence(seed)
    s_shell, s_target, s_boot = (int(x) for x in ss.generate_state(3))
    shell = Z.sphere_sampler(a, t, eta, n_sphere, s_shell)
    if len(shell) == 0:
        return EpsilonEstimate(0.0, 0.0, 0, True)
    d = Y.distance_to(shell, a, t, n_target, s_target)
    i = int(np.argmax(d))
    rng = np.random.default_rng(s_boot)
    boot = d[rng.integers(0, len(d), (BOOTSTRAP, len(d)))].max(axis=1)
    return EpsilonEstimate(float(d[i]), float(boot.std()), len(shell), False, shell[i].copy())


@dataclass(frozen=True, eq=False)
class EpsilonProfile:
    t: np.ndarray
    eps_zy: np.ndarray
    err_zy: np.ndarray
    eps_yz: np.ndarray
    err_yz: np.ndarray
    empty_zy: np.ndarray
    empty_yz: np.ndarray
    witness_zy: tuple = field(repr=False)
    witness_yz: tuple = field(repr=False)
    combine: str = "max"
    n_sphere: int = 512
    n_target: int = 4096
    eta: float = 0.05
    seed: int = 0

    @property
    def eps(self) -> np.ndarray:
        op = np.maximum if self.combine == "max" else np.minimum
        return op(self.eps_zy, self.eps_yz)

    @property
    def err(self) -> np.ndarray:
        return np.maximum(self.err_zy, self.err_yz)

    @property
    def ratio(self) -> np.ndarray:
        return self.eps / self.t

    @property
    def usable(self) -> np.ndarray:
        return ~(self.empty_zy | self.empty_yz)

    @property
    def empty_flag(self) -> np.ndarray:
        """Bit 1: Z-shell empty; bit 2: Y-shell empty."""
        return self.empty_zy.astype(int) + 2 * self.empty_yz.astype(int)

    def to_dict(self) -> dict:
        return {"t": self.t.tolist(), "eps_zy": self.eps_zy.tolist(),
                "err_zy": self.err_zy.tolist(), "eps_yz": self.eps_yz.tolist(),
                "err_yz": self.err_yz.tolist(), "eps": self.eps.tolist(),
                "ratio": self.ratio.tolist(), "empty_flag": self.empty_flag.tolist(),
                "combine": self.combine, "n_sphere": self.n_sphere,
                "n_target": self.n_target, "eta": self.eta, "seed": self.seed}


def t_grid(t0: float, grid_len: int = 20, factor: float = 0.5) -> np.ndarray:
    if not t0 > 0 or grid_len < 1 or not 0 < factor < 1:
        raise ValueError("need t0 > 0, grid_len >= 1 and 0 < factor < 1")
    return t0 * factor ** np.arange(grid_len)


def epsilon_profile(a, Z: Subspace, Y: Subspace, t0: float | None = None, grid_len: int = 20,
                    factor: float = 0.5, eta: float = 0.05, n_sphere: int = 512,
                    n_target: int = 4096, seed: int = 0, jobs: int = 1,
                    combine: str = "max") -> EpsilonProfile:
    """Both directed eps values on ``t_k = t0 * factor**k``.

    ``t0`` defaults to a tenth of the smaller subspace scale around ``a``.
    Each (grid index, direction) gets its own seed derived from ``seed``.
    """
    if combine not in ("max", "min"):
        raise ValueError("combine must be 'max' or 'min'")
    a = as_point(a)
    _check_member(Y, a, "Y")
    _check_member(Z, a, "Z")
    if t0 is None:
        t0 = 0.1 * min(Y.scale(a), Z.scale(a))
    ts = t_grid(t0, grid_len, factor)

    def job(item):
        k, direction = item
        src, dst = (Z, Y) if direction == 0 else (Y, Z)
        s = int(np.random.SeedSequence([seed, k, direction]).generate_state(1)[0])
        return epsilon(a, ts[k], src, dst, eta, n_sphere, n_target, s, check=False)

    items = [(k, d) for k in range(grid_len) for d in (0, 1)]
    res = pmap(job, items, jobs)
    zy, yz = res[0::2], res[1::2]
    empty_zy = np.array([r.empty for r in zy])
    empty_yz = np.array([r.empty for r in yz])
    if np.sum(empty_zy & empty_yz) > grid_len / 2:
        raise InsufficientGeometry("more than half of the t-grid has empty shells in both directions")
    return EpsilonProfile(
        ts, np.array([r.value for r in zy]), np.array([r.error for r in zy]),
        np.array([r.value for r in yz]), np.array([r.error for r in yz]),
        empty_zy, empty_yz, tuple(r.witness for r in zy), tuple(r.witness for r in yz),
        combine, n_sphere, n_target, eta, seed)


def profile_csv(profile: EpsilonProfile) -> str:
    """CSV with columns t, eps_zy, eps_yz, eps_min, ratio, empty_flag.

    ``eps_min`` holds the combined value (see ``profile.combine``).
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "eps_zy", "eps_yz", "eps_min", "ratio", "empty_flag"])
    for row in zip(profile.t, profile.eps_zy, profile.eps_yz, profile.eps, profile.ratio,
                   profile.empty_flag):
        w.writerow([repr(float(x)) for x in row[:5]] + [int(row[5])])
    return buf.getvalue()


STRONG = "StronglyTangentEquivalent"
NOT_TANGENT = "NotTangentEquivalent"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class TangencyVerdict:
    kind: str
    slope: float | None
    slope_se: float | None
    ratio_tail: tuple[float, ...]
    c: float | None = None  # lower bound of the ratio tail when refuting
    c_lower: float | None = None
    witness: np.ndarray | None = None
    note: str = ""

    @property
    def band(self) -> tuple[float, float] | None:
        if self.slope is None or self.slope_se is None:
            return None
        return (self.slope - 2 * self.slope_se, self.slope + 2 * self.slope_se)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "slope": self.slope, "slope_se": self.slope_se,
                "slope_band": list(self.band) if self.band else None,
                "ratio_tail": list(self.ratio_tail), "c": self.c, "c_lower": self.c_lower,
                "witness": None if self.witness is None else self.witness.tolist(),
                "note": self.note}


def decide_strong_tangency(profile: EpsilonProfile, slope_margin: float = 0.15,
                           ratio_floor: float = 1e-3, fit_points: int = 10) -> TangencyVerdict:
    """Slope of log eps against log t plus the trend of eps/t.

    Strong when the slope is at least ``1 + slope_margin`` and eps/t
    decreases over the tail.  Not tangent when eps/t stays above
    ``ratio_floor`` over the last six points with no significant downward
    trend.  Anything else is Inconclusive.
    """
    idx = np.flatnonzero(profile.usable)
    if len(idx) < 8:
        return TangencyVerdict(INCONCLUSIVE, None, None, (), note="fewer than 8 usable grid points")
    t, eps, err = profile.t[idx], profile.eps[idx], profile.err[idx]
    ratio = eps / t
    tail = ratio[-TAIL:]
    tail_t = tuple(float(x) for x in tail)
    win = slice(-fit_points, None)
    if np.all(ratio[win] <= ZERO_RATIO):
        return TangencyVerdict(STRONG, None, None, tail_t, note="eps vanishes on the fitted tail")
    pos = eps[win] > 0
    if pos.sum() < 3:
        return TangencyVerdict(INCONCLUSIVE, None, None, tail_t, note="too few positive eps values")
    fit = linregress(np.log(t[win][pos]), np.log(eps[win][pos]))
    slope, se = float(fit.slope), float(fit.stderr)
    decreasing = tail[-1] < tail[0]
    if slope >= 1 + slope_margin and decreasing:
        return TangencyVerdict(STRONG, slope, se, tail_t)
    c = float(tail.min())
    if c >= ratio_floor and slope - 1 <= max(0.01, 2 * se):
        c_lower = float(np.min(tail - 2 * err[-TAIL:] / t[-TAIL:]))
        if c_lower > 0:
            last = idx[-1]
            wz, wy = profile.witness_zy[last], profile.witness_yz[last]
            w = wz if profile.eps_zy[last] >= profile.eps_yz[last] else wy
            return TangencyVerdict(NOT_TANGENT, slope, se, tail_t, c, c_lower, w)
    return TangencyVerdict(INCONCLUSIVE, slope, se, tail_t,
                           note="slope and ratio trend do not separate")


@dataclass(frozen=True, eq=False)
class Transfer:
    family: StableFamily
    pairing: tuple[int, ...]  # Z-class -> Y-class
    member_pairing: tuple[int, ...]  # Z-member -> Y-member
    constructed: tuple[bool, ...]  # member shadow built by projection rather than taken from the pool
    back_consistent: bool

    def to_dict(self) -> dict:
        return {"members": self.family.labels, "pairing": list(self.pairing),
                "member_pairing": list(self.member_pairing),
                "constructed": list(self.constructed),
                "back_consistent": self.back_consistent}


def projected_sequence(z: PointSequence, Y: Subspace, a, n_target: int = 4096,
                       seed: int = 0) -> PointSequence:
    """Per-index nearest point of ``Y`` to ``z_n`` (searched near ``a``)."""
    a = as_point(a)
    cache: dict[int, np.ndarray] = {}

    def gen(n):
        if n not in cache:
            zn = as_point(z(n))
            radius = max(float(np.linalg.norm(zn - a)), 1e-300)
            p, _ = Y.nearest(zn[None, :], a=a, radius=radius, n_target=n_target, seed=seed)
            cache[n] = p[0]
        return cache[n]

    return PointSequence(gen, f"[{z.label}]_{Y.label or 'Y'}")


def _shadow(z: PointSequence, Y: Subspace, family: StableFamily, pool, tol: float,
            n_target: int, seed: int) -> tuple[PointSequence, bool]:
    for y in pool:
        v = mutual_stability(z, y, family.norm, family.space, family.probe)
        if v.converged and v.value <= tol:
            return y, False
    y = projected_sequence(z, Y, family.base_point, n_target, seed)
    v = mutual_stability(z, y, family.norm, family.space, family.probe)
    if v.converged and v.value <= tol:
        return y, True
    r = ratio_sequence(z, y, family.norm, family.probe.schedule, family.space)
    floor = float(v.value) if v.converged else float(np.min(r[-TAIL:]))
    raise TransferFailure(z.label, floor, v)


def transfer_family(family: StableFamily, Y: Subspace, search_pool: Sequence[PointSequence] = (),
                    Z: Subspace | None = None, zero_tol: float = 1e-4, n_target: int = 4096,
                    seed: int = 0, jobs: int = 1) -> Transfer:
    """Shadow every member of a family in ``Z`` by a sequence in ``Y``.

    Pool sequences are tried first, then per-index nearest projection.
    With ``Z`` given, the Y-family is transferred back and its classes
    compared with the original ones.
    """
    q = metric_identification(family, zero_tol)
    tol = q.zero_tol
    base = constant_at(family.base_point)
    shadows = [base]
    built = [False]
    for z in family.members[1:]:
        y, b = _shadow(z, Y, family, search_pool, tol, n_target, seed)
        shadows.append(y)
        built.append(b)
    fam_y = assemble_family(shadows, family.base_point, family.norm, family.space, family.probe,
                            jobs)
    qy = metric_identification(fam_y, zero_tol)
    pairing = tuple(qy.projection[r] for r in q.representatives)
    back = True
    if Z is not None:
        try:
            back_members = [base] + [_shadow(y, Z, fam_y, (), qy.zero_tol, n_target, seed)[0]
                                     for y in shadows[1:]]
            fam_back = assemble_family(back_members, family.base_point, family.norm,
                                       family.space, family.probe, jobs)
            back = metric_identification(fam_back, zero_tol).projection == q.projection
        except TransferFailure:
            back = False
    return Transfer(fam_y, pairing, tuple(range(len(shadows))), tuple(built), back)


def quotient_isometry_check(qz: PretangentQuotient, qy: PretangentQuotient,
                            pairing: Sequence[int]) -> tuple[bool, float]:
    """Whether the class pairing preserves rho within twice the zero tolerance."""
    pairing = list(pairing)
    if len(pairing) != len(qz) or sorted(pairing) != list(range(len(qy))):
        raise ValueError("pairing is not a bijection between the class sets")
    p = np.array(pairing)
    distortion = float(np.max(np.abs(qz.rho - qy.rho[np.ix_(p, p)]))) if len(p) else 0.0
    return distortion <= 2 * max(qz.zero_tol, qy.zero_tol), distortion


@dataclass(frozen=True)
class DenseReport:
    h: float
    t: tuple[float, ...]
    eps: tuple[float, ...]
    err: tuple[float, ...]
    within: tuple[bool, ...]
    resolution_floor: bool  # grid reaches below t = h
    tangent_at_resolution: bool

    def to_dict(self) -> dict:
        return {"h": self.h, "t": list(self.t), "eps": list(self.eps), "err": list(self.err),
                "within": list(self.within), "resolution_floor_warning": self.resolution_floor,
                "verdict": "TangentAtResolution" if self.tangent_at_resolution else "NotConfirmed"}


def dense_subspace_check(X: Subspace, Y: Subspace, h: float, a, t: Sequence[float],
                         eta: float = 0.05, n_sphere: int = 512, n_target: int = 4096,
                         seed: int = 0) -> DenseReport:
    """eps(X -> Y) against the half-mesh bound ``h/2`` of a dense sample ``Y``.

    Grid values at ``t >= h`` must satisfy the bound up to the sampling error;
    below ``h`` the sample cannot resolve the shell and a warning is raised.
    """
    if not h > 0:
        raise ValueError("mesh h must be positive")
    ts = np.asarray(t, float)
    res = [epsilon(a, float(tk), X, Y, eta, n_sphere, n_target,
                   int(np.random.SeedSequence([seed, k]).generate_state(1)[0]), check=(k == 0))
           for k, tk in enumerate(ts)]
    eps = tuple(r.value for r in res)
    err = tuple(r.error for r in res)
    within = tuple(bool(e <= h / 2 + s + 1e-12 * max(1.0, tk)) for e, s, tk in zip(eps, err, ts))
    floor = bool(np.any(ts < h))
    if floor:
        log.warning("t-grid reaches below the sample mesh h=%g; values there are resolution-bound", h)
    ok = all(w for w, tk in zip(within, ts) if tk >= h)
    return DenseReport(h, tuple(float(x) for x in ts), eps, err, within, floor, ok)
