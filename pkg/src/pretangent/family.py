"""Self-stable families, their metric identification and subsequence probes.

Maximality is always relative to a finite candidate pool: :func:`build_family`
is greedy in input order, and :func:`tangency_probe` can refute tangency but
only ever support it.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._parallel import pmap
from .limits import LimitVerdict, ProbeConfig, Status, estimate_limit, ratio_sequence
from .sequences import (NormalizingSequence, PointSequence, Selector, check_selector,
                        constant_at, default_selectors)

log = logging.getLogger(__name__)

ZERO_FLOOR = 1e-9


class QuotientInconsistency(RuntimeError):
    def __init__(self, message: str, triple: tuple[int, int, int]):
        super().__init__(message)
        self.triple = triple


class NumericalAnomaly(RuntimeError):
    pass


class NotSelfStable(ValueError):
    def __init__(self, message: str, pair: tuple[int, int], verdict: LimitVerdict):
        super().__init__(message)
        self.pair = pair
        self.verdict = verdict


_ZERO = LimitVerdict(Status.CONVERGED, 0.0, 0.0, (), 0.0)


def mutual_stability(x: PointSequence, y: PointSequence, norm: NormalizingSequence, space,
                     probe: ProbeConfig | None = None) -> LimitVerdict:
    """Verdict on ``lim d(x_n, y_n) / r_n``; a Converged value is d~(x, y)."""
    probe = probe or ProbeConfig()
    if x is y:
        return _ZERO
    samples = ratio_sequence(x, y, norm, probe.schedule, space)
    return estimate_limit(samples, probe.rel_tol, probe.abs_tol, probe.positions)


@dataclass(frozen=True, eq=False)
class StableFamily:
    members: tuple[PointSequence, ...]
    base_point: object
    norm: NormalizingSequence
    space: object
    probe: ProbeConfig
    dmat: tuple[tuple[LimitVerdict, ...], ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([[v.value for v in row] for row in self.dmat], float)

    @property
    def errors(self) -> np.ndarray:
        return np.array([[v.error_estimate for v in row] for row in self.dmat], float)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.members]

    def triangle_defect(self) -> float:
        v = self.values
        if len(v) < 3:
            return 0.0
        via = v[:, :, None] + v[None, :, :]  # d(i,j) + d(j,k) indexed [i,j,k]
        return float(max(0.0, np.max(v[:, None, :] - via)))

    def to_dict(self) -> dict:
        return {
            "members": self.labels,
            "norm": self.norm.label,
            "dmat": [[v.to_dict() for v in row] for row in self.dmat],
            "values": self.values.tolist(),
        }


@dataclass(frozen=True)
class Rejection:
    candidate: PointSequence
    member: int  # index of the accepted member it failed against
    verdict: LimitVerdict

    @property
    def inconclusive(self) -> bool:
        return self.verdict.status is Status.INCONCLUSIVE

    def to_dict(self) -> dict:
        return {"candidate": self.candidate.label, "against": self.member,
                "kind": "Inconclusive" if self.inconclusive else "Unstable",
                "verdict": self.verdict.to_dict()}


def _matrix(rows: list[list[LimitVerdict]]) -> tuple[tuple[LimitVerdict, ...], ...]:
    return tuple(tuple(r) for r in rows)


def assemble_family(members: Sequence[PointSequence], a, norm: NormalizingSequence, space,
                    probe: ProbeConfig | None = None, jobs: int = 1) -> StableFamily:
    """Family from given members (first one should be the constant at ``a``).

    Raises :class:`NotSelfStable` naming the first non-converged pair.
    """
    probe = probe or ProbeConfig()
    members = tuple(members)
    k = len(members)
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    verdicts = pmap(lambda p: mutual_stability(members[p[0]], members[p[1]], norm, space, probe),
                    pairs, jobs)
    rows = [[_ZERO] * k for _ in range(k)]
    for (i, j), v in zip(pairs, verdicts):
        if not v.converged:
            raise NotSelfStable(f"{members[i].label} and {members[j].label}: {v.status.value}",
                                (i, j), v)
        rows[i][j] = rows[j][i] = v
    return StableFamily(members, a, norm, space, probe, _matrix(rows))


def build_family(candidates: Sequence[PointSequence], a, norm: NormalizingSequence, space,
                 probe: ProbeConfig | None = None, jobs: int = 1,
                 ) -> tuple[StableFamily, list[Rejection]]:
    """Greedy self-stable family starting from the constant sequence at ``a``.

    Candidates are tried in input order; one is accepted iff it is mutually
    stable with every member accepted so far.  Constant candidates sitting at
    ``a`` are skipped (they duplicate member 0).
    """
    probe = probe or ProbeConfig()
    norm.check(probe.schedule)
    base = constant_at(a)
    members: list[PointSequence] = [base]
    rows: list[list[LimitVerdict]] = [[_ZERO]]
    rejected: list[Rejection] = []
    for cand in candidates:
        if cand.constant is not None and space.dist(cand.constant, base.constant) == 0:
            continue
        verdicts = pmap(lambda m: mutual_stability(m, cand, norm, space, probe), members, jobs)
        bad = next((i for i, v in enumerate(verdicts) if not v.converged), None)
        if bad is not None:
            rejected.append(Rejection(cand, bad, verdicts[bad]))
            continue
        for row, v in zip(rows, verdicts):
            row.append(v)
        rows.append(list(verdicts) + [_ZERO])
        members.append(cand)
    return StableFamily(tuple(members), a, norm, space, probe, _matrix(rows)), rejected


@dataclass(frozen=True)
class PretangentQuotient:
    classes: tuple[tuple[int, ...], ...]
    rho: np.ndarray
    representatives: tuple[int, ...]
    projection: tuple[int, ...]  # member index -> class index
    zero_tol: float  # absolute
    spread: np.ndarray
    scale: float

    def __len__(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict:
        return {
            "classes": [list(c) for c in self.classes],
            "rho": self.rho.tolist(),
            "representatives": list(self.representatives),
            "projection": list(self.projection),
            "zero_tol": self.zero_tol,
            "max_spread": float(self.spread.max()) if self.spread.size else 0.0,
            "scale": self.scale,
        }


def zero_tolerance(values: np.ndarray, zero_tol: float = 1e-4) -> tuple[float, float]:
    """Absolute zero tolerance and scale for a matrix of d~ values."""
    finite = values[np.isfinite(values)]
    scale = float(finite.max()) if finite.size else 0.0
    return max(zero_tol * scale, ZERO_FLOOR), scale


def quotient_from_values(values: np.ndarray, zero_tol: float = 1e-4) -> PretangentQuotient:
    v = np.asarray(values, float)
    tol, scale = zero_tolerance(v, zero_tol)
    n = len(v)
    _, labels = connected_components(csr_matrix(v <= tol), directed=False)
    relabel: dict[int, int] = {}
    for lab in labels:
        relabel.setdefault(int(lab), len(relabel))
    proj = tuple(relabel[int(lab)] for lab in labels)
    k = len(relabel)
    classes = tuple(tuple(i for i in range(n) if proj[i] == c) for c in range(k))

    for cls in classes:
        sub = v[np.ix_(cls, cls)]
        if sub.max() > 3 * tol:
            i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
            i, j = cls[i], cls[j]
            m = min(cls, key=lambda q: max(v[i, q], v[q, j]))
            raise QuotientInconsistency(
                f"members {i} and {j} share a zero class but d~ = {v[i, j]:.3g} > 3*zero_tol",
                (i, m, j))

    rho = np.zeros((k, k))
    spread = np.zeros((k, k))
    for p in range(k):
        for q in range(p + 1, k):
            block = v[np.ix_(classes[p], classes[q])]
            rho[p, q] = rho[q, p] = float(block.mean())
            spread[p, q] = spread[q, p] = float(np.ptp(block))
    if spread.size and spread.max() > 2 * tol:
        p, q = np.unravel_index(int(np.argmax(spread)), spread.shape)
        raise QuotientInconsistency(
            f"classes {p} and {q}: representative spread {spread[p, q]:.3g} > 2*zero_tol",
            (classes[p][0], classes[q][0], classes[p][-1]))
    reps = tuple(c[0] for c in classes)
    return PretangentQuotient(classes, rho, reps, proj, tol, spread, scale)


def metric_identification(family: StableFamily, zero_tol: float = 1e-4) -> PretangentQuotient:
    """Quotient by the zero relation of d~; classes are connected components."""
    return quotient_from_values(family.values, zero_tol)


@dataclass(frozen=True)
class EmbeddingReport:
    selector: str
    class_map: tuple[int, ...]
    distance_preserving: bool
    max_deviation: float
    violations: tuple[tuple[int, int, float, float], ...]  # (i, j, original, restricted)
    restricted: StableFamily = field(repr=False)

    def to_dict(self) -> dict:
        return {"selector": self.selector, "class_map": list(self.class_map),
                "distance_preserving": self.distance_preserving,
                "max_deviation": self.max_deviation,
                "violations": [list(v) for v in self.violations]}


def _restricted_probe(probe: ProbeConfig, selector: Selector) -> ProbeConfig:
    """Same samples, extrapolated against the indices ``selector(k)`` of the parent sequence."""
    return replace(probe, abscissa=tuple(int(selector(int(k))) for k in probe.schedule.indices))


def restrict_family(family: StableFamily, selector: Selector, jobs: int = 1) -> StableFamily:
    check_selector(selector, family.probe.schedule)
    members = [m.restrict(selector) for m in family.members]
    probe = _restricted_probe(family.probe, selector)
    try:
        return assemble_family(members, family.base_point, family.norm.restrict(selector),
                               family.space, probe, jobs)
    except NotSelfStable as exc:
        raise NumericalAnomaly(f"restriction along {selector.name} lost stability: {exc}") from exc


def embed_subsequence(family: StableFamily, selector: Selector, zero_tol: float = 1e-4,
                      jobs: int = 1) -> EmbeddingReport:
    """Compare d~ on the family with d~ on its restriction along ``selector``."""
    sub = restrict_family(family, selector, jobs)
    v, v2 = family.values, sub.values
    slack = family.errors + sub.errors + family.probe.abs_tol
    dev = np.abs(v - v2)
    bad = np.argwhere(np.triu(dev > slack, 1))
    violations = tuple((int(i), int(j), float(v[i, j]), float(v2[i, j])) for i, j in bad)

    q, q2 = metric_identification(family, zero_tol), metric_identification(sub, zero_tol)
    class_map = tuple(q2.projection[r] for r in q.representatives)
    consistent = all(q2.projection[i] == class_map[q.projection[i]] for i in range(len(v)))
    return EmbeddingReport(selector.name, class_map, not violations and consistent,
                           float(dev.max()) if dev.size else 0.0, violations, sub)


@dataclass(frozen=True)
class SelectorResult:
    selector: str
    passed: bool
    witnesses: tuple[tuple[str, float], ...]  # (pool label, distance to nearest member)
    inconclusive: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"selector": self.selector, "passed": self.passed,
                "witnesses": [list(w) for w in self.witnesses],
                "inconclusive": list(self.inconclusive)}


@dataclass(frozen=True)
class TangencyReport:
    tangent_within_pool: bool
    results: tuple[SelectorResult, ...]

    @property
    def verdict(self) -> str:
        return "Tangent-within-pool" if self.tangent_within_pool else "Not-tangent"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "selectors": [r.to_dict() for r in self.results]}


def tangency_probe(family: StableFamily, pool: Sequence[PointSequence],
                   selectors: Sequence[Selector] | None = None, zero_tol: float = 1e-4,
                   seed: int = 0, jobs: int = 1) -> TangencyReport:
    """One-sided test that the family stays maximal along each selector.

    A pool sequence whose restriction is stable with every restricted member
    but lies farther than the zero tolerance from all of them is a witness
    against tangency.
    """
    selectors = list(selectors) if selectors is not None else default_selectors(seed)
    tol = metric_identification(family, zero_tol).zero_tol
    ids = {id(m) for m in family.members}
    outsiders = [p for p in pool if id(p) not in ids]
    results = []
    for sel in selectors:
        check_selector(sel, family.probe.schedule)
        members = [m.restrict(sel) for m in family.members]
        norm = family.norm.restrict(sel)

        probe = _restricted_probe(family.probe, sel)

        def probe_one(p, members=members, norm=norm, sel=sel, probe=probe):
            pr = p.restrict(sel)
            return [mutual_stability(m, pr, norm, family.space, probe) for m in members]

        witnesses, unsure = [], []
        for p, verdicts in zip(outsiders, pmap(probe_one, outsiders, jobs)):
            if any(v.status is Status.INCONCLUSIVE for v in verdicts):
                unsure.append(p.label)
                continue
            if not all(v.converged for v in verdicts):
                continue
            gap = min(v.value for v in verdicts)
            if gap > tol:
                witnesses.append((p.label, gap))
        results.append(SelectorResult(sel.name, not witnesses, tuple(witnesses), tuple(unsure)))
    return TangencyReport(all(r.passed for r in results), tuple(results))


@dataclass(frozen=True)
class Confluence:
    confluent: bool
    witness: PointSequence | None = None
    value: float | None = None


def is_confluent(norm: NormalizingSequence, a, space, pool: Sequence[PointSequence],
                 probe: ProbeConfig | None = None, zero_tol: float = 1e-6) -> Confluence:
    """False with a witness iff some pool sequence has converged d~(x, a) > zero_tol.

    True only relative to the pool.
    """
    base = constant_at(a)
    for x in pool:
        v = mutual_stability(x, base, norm, space, probe)
        if v.converged and v.value > zero_tol:
            return Confluence(False, x, v.value)
    return Confluence(True)


class PairKind(str, enum.Enum):
    RATIO_EQUIVALENT = "RatioEquivalent"
    CONFLUENT = "Confluent"
    NOT_EQUIVALENT = "NotEquivalent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class NormalizingPairVerdict:
    kind: PairKind
    c: float | None
    ratio: LimitVerdict
    witness: str | None = None
    note: str = ""

    def __post_init__(self):
        if self.kind is PairKind.RATIO_EQUIVALENT and not (self.c is not None and self.c > 0):
            raise ValueError("RatioEquivalent needs c > 0")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "c": self.c, "ratio": self.ratio.to_dict(),
                "witness": self.witness, "note": self.note}


def classify_normalizing_pair(r: NormalizingSequence, t: NormalizingSequence, a, space,
                              witness_pool: Sequence[PointSequence],
                              probe: ProbeConfig | None = None,
                              zero_tol: float = 1e-6) -> NormalizingPairVerdict:
    """Place ``(r, t)`` in the ratio / confluence dichotomy.

    Confluence of both sequences relative to a nonempty pool is checked
    first (at an isolated point every pair is confluent, whatever the
    ratio); otherwise a ratio converging to ``c > 0`` gives
    RatioEquivalent, and a non-convergent ratio together with a
    non-confluence witness gives NotEquivalent.
    """
    probe = probe or ProbeConfig()
    ratios = [float(r(n)) / float(t(n)) for n in probe.schedule]
    lv = estimate_limit(ratios, probe.rel_tol, probe.abs_tol, probe.positions)
    cr = ct = None
    if witness_pool:
        cr = is_confluent(r, a, space, witness_pool, probe, zero_tol)
        ct = is_confluent(t, a, space, witness_pool, probe, zero_tol)
        if cr.confluent and ct.confluent:
            return NormalizingPairVerdict(PairKind.CONFLUENT, None, lv,
                                          note="both sequences confluent relative to the pool")
    if lv.converged and lv.value > zero_tol:
        return NormalizingPairVerdict(PairKind.RATIO_EQUIVALENT, lv.value, lv,
                                      note="ratio converges to a positive constant")
    if not witness_pool:
        return NormalizingPairVerdict(PairKind.INCONCLUSIVE, None, lv,
                                      note="ratio does not converge to c > 0 and the witness pool is empty")
    if lv.status is not Status.INCONCLUSIVE:
        w = cr.witness or ct.witness
        who = "r" if cr.witness is not None else "t"
        return NormalizingPairVerdict(PairKind.NOT_EQUIVALENT, None, lv, w.label,
                                      f"ratio not convergent to c > 0 and {who} is not confluent")
    return NormalizingPairVerdict(PairKind.INCONCLUSIVE, None, lv, note="ratio tail inconclusive")
