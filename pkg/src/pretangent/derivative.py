"""Quotient-level derivatives of maps between pointed metric spaces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._parallel import pmap
from .family import (QuotientInconsistency, StableFamily, _ZERO, _matrix, metric_identification,
                     mutual_stability, PretangentQuotient)
from .limits import TAIL, IndexSchedule, LimitVerdict, ProbeConfig, Status, estimate_limit
from .sequences import (NormalizingSequence, PointSequence, constant_at, geometric_norm,
                        power_norm)


class NotDifferentiable(ValueError):
    def __init__(self, message: str, report: "DifferentiabilityReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True, eq=False)
class LiftedMap:
    """``f: X1 -> X2`` with ``f(a1) = a2``, acting on sequences pointwise."""

    f: Callable
    source: object
    target: object
    a1: object
    a2: object
    label: str = "f"

    def __post_init__(self):
        gap = self.target.dist(self.f(self.a1), self.a2)
        if not gap <= 1e-12:
            raise ValueError(f"{self.label}(a1) is {gap:.3g} away from a2")

    def __call__(self, x: PointSequence) -> PointSequence:
        f, gen = self.f, x.gen
        return PointSequence(lambda n: f(gen(n)), f"{self.label}({x.label})")

    def then(self, g: "LiftedMap") -> "LiftedMap":
        f, h = self.f, g.f
        return LiftedMap(lambda p: h(f(p)), self.source, g.target, self.a1, g.a2,
                         f"{g.label}.{self.label}")


@dataclass(frozen=True)
class Violation:
    condition: str  # "i" or "ii"
    source: tuple[int, ...]
    against: str
    status: str
    value: float | None = None

    def to_dict(self) -> dict:
        return {"condition": self.condition, "source": list(self.source),
                "against": self.against, "status": self.status, "value": self.value}


@dataclass(frozen=True, eq=False)
class DifferentiabilityReport:
    status: str  # Differentiable | NotDifferentiable | Inconclusive
    condition_i: bool
    condition_ii: bool
    violations: tuple[Violation, ...]
    augmented: StableFamily | None = field(repr=False)
    image_index: tuple[int, ...]  # source member -> member of the augmented family

    @property
    def differentiable(self) -> bool:
        return self.status == "Differentiable"

    def to_dict(self) -> dict:
        return {"status": self.status, "condition_i": self.condition_i,
                "condition_ii": self.condition_ii,
                "violations": [v.to_dict() for v in self.violations],
                "augmented_members": self.augmented.labels if self.augmented else None}


def check_differentiable(lift: LiftedMap, src: StableFamily, tgt: StableFamily,
                         zero_tol: float = 1e-4, jobs: int = 1) -> DifferentiabilityReport:
    """Both conditions of differentiability relative to the given families.

    Membership of each image in a maximal target family is tested as
    stability against ``tgt`` and against the other images, after which the
    images are adjoined to ``tgt`` (membership up to pool extension).
    """
    probe, norm, space = tgt.probe, tgt.norm, tgt.space
    # the base image is the target base sequence itself
    images = [tgt.members[0]] + [lift(x) for x in src.members[1:]]
    k0, m = len(tgt), len(images) - 1
    members = list(tgt.members) + images[1:]
    size = k0 + m
    pairs = [(i, j) for j in range(k0, size) for i in range(j)]
    verdicts = pmap(lambda p: mutual_stability(members[p[0]], members[p[1]], norm, space, probe),
                    pairs, jobs)
    rows = [[_ZERO] * size for _ in range(size)]
    for i in range(k0):
        for j in range(k0):
            rows[i][j] = tgt.dmat[i][j]
    violations: list[Violation] = []
    for (i, j), v in zip(pairs, verdicts):
        rows[i][j] = rows[j][i] = v
        if not v.converged:
            src_i = j - k0 + 1
            other = members[i].label
            violations.append(Violation("i", (src_i,), other, v.status.value))
    image_index = (0,) + tuple(range(k0, size))
    if violations:
        only_unsure = all(v.status == Status.INCONCLUSIVE.value for v in violations)
        return DifferentiabilityReport("Inconclusive" if only_unsure else "NotDifferentiable",
                                       False, True, tuple(violations), None, image_index)

    aug = StableFamily(tuple(members), tgt.base_point, norm, space, probe, _matrix(rows))
    q1 = metric_identification(src, zero_tol)
    q2 = metric_identification(aug, zero_tol)
    v1, v2 = src.values, aug.values
    for i in range(len(src)):
        for j in range(i + 1, len(src)):
            if v1[i, j] <= q1.zero_tol:
                d2 = v2[image_index[i], image_index[j]]
                if d2 > q2.zero_tol:
                    violations.append(Violation("ii", (i, j), "images", "Converged", float(d2)))
    status = "NotDifferentiable" if violations else "Differentiable"
    return DifferentiabilityReport(status, True, not violations, tuple(violations), aug,
                                   image_index)


@dataclass(frozen=True, eq=False)
class DerivativeMap:
    source_quotient: PretangentQuotient
    target_quotient: PretangentQuotient
    class_map: tuple[int, ...]
    target_family: StableFamily = field(repr=False)
    image_index: tuple[int, ...]
    degenerate: bool
    report: DifferentiabilityReport = field(repr=False)

    def __call__(self, cls: int) -> int:
        return self.class_map[cls]

    def to_dict(self) -> dict:
        return {"class_map": list(self.class_map), "degenerate": self.degenerate,
                "source_quotient": self.source_quotient.to_dict(),
                "target_quotient": self.target_quotient.to_dict(),
                "target_members": self.target_family.labels,
                "conditions": self.report.to_dict()}


def construct_derivative(lift: LiftedMap, src: StableFamily, tgt: StableFamily,
                         zero_tol: float = 1e-4, seed: int | None = None,
                         jobs: int = 1) -> DerivativeMap:
    """``D*f(p1(x)) = p2(f(x))`` using one representative per source class.

    ``seed`` picks random representatives (first member when None); the
    result does not depend on it once both conditions hold.
    """
    report = check_differentiable(lift, src, tgt, zero_tol, jobs)
    if not report.differentiable:
        raise NotDifferentiable(f"{lift.label} is {report.status} w.r.t. the given families", report)
    aug = report.augmented
    q1 = metric_identification(src, zero_tol)
    q2 = metric_identification(aug, zero_tol)
    qt = metric_identification(tgt, zero_tol)
    # images must not glue distinct target classes together
    for i in range(len(tgt)):
        for j in range(i + 1, len(tgt)):
            if (qt.projection[i] != qt.projection[j]) and q2.projection[i] == q2.projection[j]:
                raise QuotientInconsistency(
                    f"an image lies within zero_tol of two target classes ({i}, {j})", (i, -1, j))

    rng = None if seed is None else np.random.default_rng(seed)
    reps = [c[0] if rng is None else int(rng.choice(c)) for c in q1.classes]
    class_map = tuple(q2.projection[report.image_index[r]] for r in reps)
    for i in range(len(src)):
        if q2.projection[report.image_index[i]] != class_map[q1.projection[i]]:
            raise QuotientInconsistency(f"member {i} breaks commutativity", (i, reps[q1.projection[i]], -1))
    base = q2.projection[0]
    if class_map[q1.projection[0]] != base:
        raise QuotientInconsistency("base class is not preserved", (0, 0, -1))
    degenerate = len(q1) > 1 and all(c == base for c in class_map)
    return DerivativeMap(q1, q2, class_map, aug, report.image_index, degenerate, report)


@dataclass(frozen=True, eq=False)
class ChainRuleReport:
    holds: bool
    mismatches: tuple[int, ...]  # source classes where the two sides differ
    df: DerivativeMap = field(repr=False)
    dg: DerivativeMap = field(repr=False)
    dpsi: DerivativeMap = field(repr=False)
    composed: tuple[tuple[int, ...], ...]  # per source class: family-3 members of (D*g)(D*f)
    direct: tuple[tuple[int, ...], ...]  # per source class: family-3 members of D*psi

    def to_dict(self) -> dict:
        return {"holds": self.holds, "mismatches": list(self.mismatches),
                "composed": [list(c) for c in self.composed],
                "direct": [list(c) for c in self.direct],
                "df": list(self.df.class_map), "dg": list(self.dg.class_map),
                "dpsi": list(self.dpsi.class_map)}


def _family_members(d: DerivativeMap, target_cls: int, k: int) -> tuple[int, ...]:
    """Original target-family members (indices < k) in a target class."""
    return tuple(i for i in d.target_quotient.classes[target_cls] if i < k)


def verify_chain_rule(f: LiftedMap, g: LiftedMap, fam1: StableFamily, fam2: StableFamily,
                      fam3: StableFamily, zero_tol: float = 1e-4, jobs: int = 1) -> ChainRuleReport:
    """Compare ``D*(g.f)`` with ``D*g . D*f`` class by class.

    ``D*g`` is taken on ``fam2`` extended by the images of ``fam1`` so the
    composition is defined everywhere.  Target classes are compared through
    the ``fam3`` members they contain, or directly through d~ of
    representative images when they contain none.
    """
    df = construct_derivative(f, fam1, fam2, zero_tol, jobs=jobs)
    dg = construct_derivative(g, df.target_family, fam3, zero_tol, jobs=jobs)
    dpsi = construct_derivative(f.then(g), fam1, fam3, zero_tol, jobs=jobs)
    k3 = len(fam3)
    composed, direct, bad = [], [], []
    for alpha in range(len(df.source_quotient)):
        beta = df.class_map[alpha]
        left = _family_members(dg, dg.class_map[beta], k3)
        right = _family_members(dpsi, dpsi.class_map[alpha], k3)
        composed.append(left)
        direct.append(right)
        if left or right:
            ok = left == right
        else:
            y = dg.target_family.members[dg.image_index[dg.source_quotient.representatives[beta]]]
            x = dpsi.target_family.members[dpsi.image_index[df.source_quotient.representatives[alpha]]]
            v = mutual_stability(x, y, fam3.norm, fam3.space, fam3.probe)
            ok = v.converged and v.value <= dpsi.target_quotient.zero_tol
        if not ok:
            bad.append(alpha)
    return ChainRuleReport(not bad, tuple(bad), df, dg, dpsi, tuple(composed), tuple(direct))


def continuity_battery() -> list[NormalizingSequence]:
    return ([power_norm(1.0, p) for p in (0.25, 0.5, 1.0, 2.0, 3.0)]
            + [geometric_norm(1.0, q) for q in (0.5, 0.9)])


@dataclass(frozen=True)
class ContinuityReport:
    delta: float  # smallest d2(f(x_n), a2) over the probed tail
    discontinuous: bool
    stable_under: tuple[str, ...]
    verdicts: tuple[tuple[str, str], ...]

    @property
    def evidence(self) -> bool:
        """Evidence (not proof) that f is not differentiable w.r.t. any pair containing x."""
        return self.discontinuous and not self.stable_under

    def to_dict(self) -> dict:
        return {"delta": self.delta, "discontinuous": self.discontinuous,
                "stable_under": list(self.stable_under),
                "verdicts": [list(v) for v in self.verdicts],
                "non_differentiability_evidence": self.evidence}


def continuity_witness(lift: LiftedMap, x: PointSequence, schedule: IndexSchedule | None = None,
                       rel_tol: float = 1e-6, abs_tol: float = 1e-9,
                       battery: list[NormalizingSequence] | None = None) -> ContinuityReport:
    """Probe ``f(x_n)`` against ``a2`` under a battery of normalizing sequences."""
    schedule = schedule or IndexSchedule.linear()
    probe = ProbeConfig(schedule, rel_tol, abs_tol)
    fx, base = lift(x), constant_at(lift.a2)
    d = np.array([lift.target.dist(fx(n), lift.a2) for n in schedule])
    delta = float(d[-TAIL:].min())
    lim = estimate_limit(d, rel_tol, abs_tol, schedule.indices)
    to_zero = lim.converged and abs(lim.value) <= lim.error_estimate + abs_tol
    stable, verdicts = [], []
    for t in battery or continuity_battery():
        v: LimitVerdict = mutual_stability(fx, base, t, lift.target, probe)
        verdicts.append((t.label, v.status.value))
        if v.converged:
            stable.append(t.label)
    return ContinuityReport(delta, not to_zero, tuple(stable), tuple(verdicts))
