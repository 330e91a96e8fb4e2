"""Point sequences, normalizing sequences and subsequence selectors."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .limits import IndexSchedule, InvalidNormalizingSequence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Selector:
    """A strictly increasing map ``k -> n_k`` picking a subsequence."""

    fn: Callable[[int], int]
    name: str

    def __call__(self, k: int) -> int:
        return self.fn(k)


def _coin(seed: int, n: int) -> int:
    h = hashlib.blake2b(f"{seed}:{n}".encode(), digest_size=1).digest()
    return h[0] & 1


IDENTITY = Selector(lambda k: k, "identity")
EVENS = Selector(lambda k: 2 * k, "evens")
ODDS = Selector(lambda k: 2 * k - 1, "odds")
SQUARES = Selector(lambda k: k * k, "squares")


def random_selector(seed: int = 0) -> Selector:
    """``k -> 2k - coin(k)`` with seeded coins; strictly increasing."""
    return Selector(lambda k: 2 * k - _coin(seed, k), f"random[{seed}]")


def default_selectors(seed: int = 0) -> list[Selector]:
    return [IDENTITY, EVENS, ODDS, SQUARES, random_selector(seed)]


def check_selector(sel: Selector, schedule: IndexSchedule) -> None:
    picked = [sel(k) for k in schedule]
    if picked[0] < 1 or any(b <= a for a, b in zip(picked, picked[1:])):
        raise ValueError(f"selector {sel.name!r} is not strictly increasing on the schedule")


@dataclass(frozen=True, eq=False)
class PointSequence:
    gen: Callable[[int], Any]
    label: str = ""
    constant: Any = None  # set for constant sequences

    def __call__(self, n: int):
        return self.gen(n)

    def restrict(self, sel: Selector) -> "PointSequence":
        gen = self.gen
        return PointSequence(lambda k: gen(sel(k)), f"{self.label}'{sel.name}", self.constant)

    def __repr__(self) -> str:
        return f"PointSequence({self.label!r})"


@dataclass(frozen=True, eq=False)
class NormalizingSequence:
    gen: Callable[[int], float]
    label: str = ""

    def __call__(self, n: int) -> float:
        return self.gen(n)

    def restrict(self, sel: Selector) -> "NormalizingSequence":
        gen = self.gen
        return NormalizingSequence(lambda k: gen(sel(k)), f"{self.label}'{sel.name}")

    def check(self, schedule: IndexSchedule) -> None:
        """Positivity and a decreasing probed tail.

        Raises on nonpositive values or a last value not below the first; a
        tail that has not dropped below 1e-3 of the first value only logs a
        warning (slow sequences such as 1/sqrt(n) are legitimate).
        """
        vals = np.array([float(self.gen(n)) for n in schedule])
        bad = np.flatnonzero(~(vals > 0))
        if len(bad):
            n = schedule.indices[bad[0]]
            raise InvalidNormalizingSequence(f"{self.label}: r_{n} = {vals[bad[0]]} is not positive")
        if not vals[-1] < vals[0]:
            raise InvalidNormalizingSequence(f"{self.label}: probed tail does not decrease")
        if not vals[-1] < 1e-3 * vals[0]:
            log.warning("%s: probed tail only fell to %.3g of its first value",
                        self.label, vals[-1] / vals[0])

    def __repr__(self) -> str:
        return f"NormalizingSequence({self.label!r})"


def _vec(x):
    return np.atleast_1d(np.asarray(x, float))


def constant_at(a, label: str | None = None) -> PointSequence:
    pt = a if isinstance(a, (int, np.integer)) else _vec(a)
    return PointSequence(lambda n: pt, label or "a~", constant=pt)


def power_sequence(a, c: float = 1.0, p: float = 1.0, direction=None,
                   label: str | None = None) -> PointSequence:
    """``a + (c / n^p) * direction`` (direction defaults to the first axis)."""
    base = _vec(a)
    u = np.zeros_like(base) if direction is None else _vec(direction)
    if direction is None:
        u[0] = 1.0
    return PointSequence(lambda n: base + (c / float(n) ** p) * u,
                         label or f"{c:g}/n^{p:g}")


def geometric_sequence(a, c: float = 1.0, q: float = 0.5, direction=None,
                       label: str | None = None) -> PointSequence:
    """``a + c * q^n * direction``."""
    base = _vec(a)
    u = np.zeros_like(base) if direction is None else _vec(direction)
    if direction is None:
        u[0] = 1.0
    return PointSequence(lambda n: base + (c * q ** n) * u, label or f"{c:g}*{q:g}^n")


def interleave(odd: PointSequence, even: PointSequence, label: str | None = None) -> PointSequence:
    """Takes ``odd(n)`` at odd ``n`` and ``even(n)`` at even ``n``."""
    return PointSequence(lambda n: odd(n) if n % 2 else even(n),
                         label or f"interleave({odd.label},{even.label})")


def tabulated(values: Sequence, label: str = "table") -> PointSequence:
    """Sequence with explicit values for ``n = 1..len(values)``."""
    vals = list(values)

    def gen(n):
        if not 1 <= n <= len(vals):
            raise IndexError(f"{label}: index {n} outside tabulated range 1..{len(vals)}")
        v = vals[n - 1]
        return v if isinstance(v, (int, np.integer)) else _vec(v)

    return PointSequence(gen, label)


def mapped(seq: PointSequence, fn: Callable, label: str | None = None) -> PointSequence:
    gen = seq.gen
    return PointSequence(lambda n: fn(gen(n)), label or f"f({seq.label})")


def power_norm(c: float = 1.0, p: float = 1.0, label: str | None = None) -> NormalizingSequence:
    if c <= 0 or p <= 0:
        raise ValueError("power normalizing sequence needs c > 0 and p > 0")
    return NormalizingSequence(lambda n: c / float(n) ** p, label or f"{c:g}/n^{p:g}")


def geometric_norm(c: float = 1.0, q: float = 0.5, label: str | None = None) -> NormalizingSequence:
    if c <= 0 or not 0 < q < 1:
        raise ValueError("geometric normalizing sequence needs c > 0 and 0 < q < 1")
    return NormalizingSequence(lambda n: c * q ** n, label or f"{c:g}*{q:g}^n")


def tabulated_norm(values: Sequence[float], label: str = "table") -> NormalizingSequence:
    vals = [float(v) for v in values]

    def gen(n):
        if not 1 <= n <= len(vals):
            raise IndexError(f"{label}: index {n} outside tabulated range 1..{len(vals)}")
        return vals[n - 1]

    return NormalizingSequence(gen, label)
