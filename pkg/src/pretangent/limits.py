"""Numerical tail limits of real sequences sampled on an index schedule.

Every ``lim_{n -> inf}`` in the package goes through :func:`estimate_limit`,
which classifies a finite probe of the tail as converged, diverged,
oscillating or inconclusive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

TAIL = 6  # samples that must agree for convergence
MIN_SAMPLES = 8
DIVERGENCE_SLOPE = 0.05  # minimal log-log growth rate counted as divergence
DECAY_SLOPE = 0.1  # minimal log-log decay rate certifying a zero limit


class InsufficientDataError(ValueError):
    pass


class InvalidNormalizingSequence(ValueError):
    pass


@dataclass(frozen=True)
class IndexSchedule:
    """Strictly increasing probe indices standing in for ``n -> inf``."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if not idx:
            raise ValueError("schedule is empty")
        if idx[0] < 1:
            raise ValueError("schedule indices start at 1")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("schedule indices must be strictly increasing")

    @classmethod
    def geometric(cls, base: float = 4, growth: float = 1.6, length: int = 24) -> "IndexSchedule":
        """``n_j = ceil(base * growth**j)``, bumped where rounding collides."""
        if base < 1 or growth <= 1 or length < 1:
            raise ValueError("need base >= 1, growth > 1, length >= 1")
        b, g = Fraction(str(base)), Fraction(str(growth))
        out: list[int] = []
        for j in range(length):
            n = math.ceil(b * g**j)
            if out and n <= out[-1]:
                n = out[-1] + 1
            out.append(n)
        return cls(tuple(out))

    @classmethod
    def linear(cls, start: int = 4, step: int = 8, length: int = 24) -> "IndexSchedule":
        return cls(tuple(start + step * j for j in range(length)))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def to_dict(self) -> dict:
        return {"indices": list(self.indices)}


@dataclass(frozen=True)
class ProbeConfig:
    """Schedule and tolerances shared by every limit estimate."""

    schedule: IndexSchedule = field(default_factory=IndexSchedule.geometric)
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    # indices of the underlying sequence when the probed one is a subsequence;
    # extrapolation runs against these instead of the schedule
    abscissa: tuple[int, ...] | None = None

    def __post_init__(self):
        if not (0 < self.rel_tol < 1) or not (0 < self.abs_tol < 1):
            raise ValueError("tolerances must lie in (0, 1)")
        if self.abscissa is not None:
            a = self.abscissa
            if len(a) != len(self.schedule) or any(y <= x for x, y in zip(a, a[1:])) or a[0] < 1:
                raise ValueError("abscissa must be strictly increasing, positive and match the schedule")

    @property
    def positions(self) -> tuple[int, ...]:
        return self.abscissa if self.abscissa is not None else self.schedule.indices

    def to_dict(self) -> dict:
        return {"schedule": list(self.schedule.indices), "rel_tol": self.rel_tol,
                "abs_tol": self.abs_tol}


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    OSCILLATING = "Oscillating"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class LimitVerdict:
    status: Status
    value: float | None
    error_estimate: float
    tail_values: tuple[float, ...]
    tolerance: float
    accelerated: bool = False

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "value": self.value,
            "error_estimate": self.error_estimate,
            "tolerance": self.tolerance,
            "accelerated": self.accelerated,
            "tail_values": list(self.tail_values),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LimitVerdict":
        return cls(Status(d["status"]), d["value"], d["error_estimate"],
                   tuple(d["tail_values"]), d["tolerance"], d.get("accelerated", False))


def _power_extrapolate(w: np.ndarray, logn: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Fit ``L + c n^-p`` through each consecutive triple of ``w``.

    On exactly geometric indices this is Aitken's delta-squared process.
    Returns the extrapolated limits and a rounding bound, or None when some
    triple does not look like a decaying power law.
    """
    out = np.empty(len(w) - 2)
    bound = 0.0
    ulp = np.finfo(float).eps * float(np.max(np.abs(w)))
    for j in range(len(w) - 2):
        d1, d2 = w[j + 1] - w[j], w[j + 2] - w[j + 1]
        if d2 == 0:
            out[j] = w[j + 2]
            continue
        if d1 == 0 or (d1 > 0) != (d2 > 0):
            return None
        a, b = logn[j + 1] - logn[j], logn[j + 2] - logn[j + 1]
        ratio = d1 / d2

        def g(p):
            return math.expm1(p * a) / -math.expm1(-p * b) - ratio

        if ratio <= (a / b) * (1 + 1e-12):
            return None
        hi = 1.0
        while g(hi) < 0:
            hi *= 2
            if hi > 256:
                break
        if hi > 256:
            out[j] = w[j + 2]
            continue
        p = brentq(g, 1e-12, hi, xtol=1e-15, rtol=1e-14)
        gain = 1.0 / math.expm1(p * b)
        out[j] = w[j + 2] + d2 * gain
        bound = max(bound, 8 * ulp * (1 + abs(gain)))
    return out, bound


def _clusters(values: np.ndarray, gap: float) -> list[np.ndarray]:
    v = np.sort(values)
    cuts = np.flatnonzero(np.diff(v) > gap) + 1
    return np.split(v, cuts)


def _accelerate(v: np.ndarray, logn: np.ndarray, rel_tol: float, abs_tol: float,
                passes: int = 2) -> tuple[float, float, float] | None:
    """Up to ``passes`` rounds of power-law extrapolation on a monotone tail.

    Returns (value, error, tolerance) once the last six extrapolated values
    agree, else None.
    """
    width = TAIL + 2 * passes
    w, ln = v[-width:], logn[-width:]
    rounding = 0.0
    for _ in range(passes):
        if len(w) < TAIL + 2:
            return None
        steps = np.diff(w)
        if not (np.all(steps >= 0) or np.all(steps <= 0)) or not np.any(steps != 0):
            return None
        fit = _power_extrapolate(w, ln)
        if fit is None:
            return None
        w, ln = fit[0], ln[2:]
        rounding = max(rounding, fit[1])
        last = w[-TAIL:]
        amed = float(np.median(last))
        atol = max(rel_tol * abs(amed), abs_tol)
        adev = float(np.max(np.abs(last - amed)))
        if adev <= atol:
            return amed, min(max(adev, rounding), atol), atol
    return None


def estimate_limit(samples: Sequence[float], rel_tol: float = 1e-6, abs_tol: float = 1e-9,
                   indices: Sequence[int] | None = None) -> LimitVerdict:
    """Classify the tail of ``samples`` (taken at ``indices``, default ``1..N``).

    Converged when the last six samples agree with their median to within
    ``max(rel_tol * |median|, abs_tol)``, either after at most two rounds of
    power-law (Aitken-type) extrapolation, tried only on monotone tails, or
    raw.  Diverged when the tail contains ``+inf`` or increases strictly
    with a log-log growth rate of at least 0.05 (or beyond ``1/abs_tol``).
    Oscillating when the last twelve samples are non-monotone, split into at
    least two clusters more than four tolerances apart and the spread does not
    decay.  Anything else is Inconclusive.
    """
    v = np.asarray(samples, dtype=float)
    if v.ndim != 1 or len(v) < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {v.size}")
    if np.isnan(v).any():
        raise ValueError("samples contain NaN")
    n = np.arange(1, len(v) + 1) if indices is None else np.asarray(indices, float)
    if len(n) != len(v):
        raise ValueError("indices and samples differ in length")
    logn = np.log(n)
    tail = v[-TAIL:]
    tail_t = tuple(float(x) for x in v)

    if np.isneginf(v).any():
        raise ValueError("samples contain -inf")
    if np.isposinf(v).any():
        return LimitVerdict(Status.DIVERGED, None, math.inf, tail_t, abs_tol)

    med = float(np.median(tail))
    tol = max(rel_tol * abs(med), abs_tol)

    acc = _accelerate(v, logn, rel_tol, abs_tol)
    if acc is not None:
        return LimitVerdict(Status.CONVERGED, acc[0], acc[1], tail_t, acc[2], accelerated=True)

    dev = float(np.max(np.abs(tail - med)))
    if dev <= tol:
        return LimitVerdict(Status.CONVERGED, med, dev, tail_t, tol)

    spread = float(np.ptp(tail))
    tail_steps = np.diff(tail)
    mag = np.abs(tail)
    same_sign = bool(np.all(tail > 0) or np.all(tail < 0))
    if same_sign and np.all(np.diff(mag) < 0):
        rates = np.diff(np.log(mag)) / np.diff(logn[-TAIL:])
        if np.max(rates) <= -DECAY_SLOPE:
            # power-law decay to zero; the last magnitude bounds the limit
            bound = float(mag[-1])
            return LimitVerdict(Status.CONVERGED, 0.0, bound, tail_t, max(tol, bound))
    if np.all(tail_steps > 0):
        if tail[-1] > 1.0 / abs_tol:
            return LimitVerdict(Status.DIVERGED, None, spread, tail_t, tol)
        if np.all(tail > 0):
            rates = np.diff(np.log(tail)) / np.diff(logn[-TAIL:])
            if np.min(rates) >= DIVERGENCE_SLOPE:
                return LimitVerdict(Status.DIVERGED, None, spread, tail_t, tol)

    wide = v[-2 * TAIL:]
    wide_steps = np.diff(wide)
    wide_monotone = bool(np.all(wide_steps >= 0) or np.all(wide_steps <= 0))
    if not wide_monotone:
        otol = max(rel_tol * float(np.max(np.abs(wide))), abs_tol)
        if len(_clusters(wide, 4 * otol)) >= 2:
            earlier = float(np.ptp(wide[:TAIL]))
            if spread >= 0.25 * earlier and spread > 4 * otol:
                return LimitVerdict(Status.OSCILLATING, None, spread, tail_t, otol)
    return LimitVerdict(Status.INCONCLUSIVE, None, spread, tail_t, tol)


def ratio_sequence(x, y, r, schedule: IndexSchedule, space) -> np.ndarray:
    """``d(x_n, y_n) / r_n`` at each schedule index."""
    out = np.empty(len(schedule))
    for j, n in enumerate(schedule):
        rn = float(r(n))
        if not rn > 0:
            raise InvalidNormalizingSequence(f"r_{n} = {rn} is not positive")
        out[j] = space.dist(x(n), y(n)) / rn
    return out
