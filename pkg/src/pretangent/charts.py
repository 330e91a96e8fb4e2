"""Built-in subspaces of Euclidean spaces used by the gallery and the CLI."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .metric import ChartSubspace, SampledSubspace, Subspace, UnionSubspace, make_euclidean

DEFAULT_DENSITY = 4096


def _param(u: np.ndarray, i: int) -> np.ndarray:
    return np.asarray(u, float)[:, i]


def _chart(fn, lo, hi, dim: int, label: str, density: int = DEFAULT_DENSITY) -> ChartSubspace:
    return ChartSubspace(fn, lo, hi, make_euclidean(dim), label, density)


def poly(coeffs: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    """Polynomial with coefficients in increasing degree."""
    c = np.asarray(coeffs, float)
    return lambda x: P.polyval(x, c)


def circle(center=(0.0, 0.0), radius: float = 1.0, label: str = "circle") -> ChartSubspace:
    c = np.asarray(center, float)

    def f(u):
        th = _param(u, 0)
        return c + radius * np.stack([np.cos(th), np.sin(th)], axis=1)

    return _chart(f, [-np.pi], [np.pi], 2, label)


def ellipse(ax: float = 2.0, by: float = 1.0, center=(0.0, 0.0),
            label: str = "ellipse") -> ChartSubspace:
    c = np.asarray(center, float)

    def f(u):
        th = _param(u, 0)
        return c + np.stack([ax * np.cos(th), by * np.sin(th)], axis=1)

    return _chart(f, [-np.pi], [np.pi], 2, label)


def curve(fn: Callable, lo: float, hi: float, dim: int, label: str = "curve") -> ChartSubspace:
    """Curve ``u -> fn(u)`` with ``fn`` mapping an (m,) array to (m, dim)."""
    return _chart(lambda u: np.asarray(fn(_param(u, 0)), float).reshape(-1, dim),
                  [lo], [hi], dim, label)


def line(point, direction, extent: float = 2.0, label: str = "line") -> ChartSubspace:
    p = np.asarray(point, float)
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    return _chart(lambda u: p + _param(u, 0)[:, None] * d, [-extent], [extent], p.size, label)


def half_line(point, direction, length: float = 2.0, label: str = "half-line") -> ChartSubspace:
    p = np.asarray(point, float)
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    return _chart(lambda u: p + _param(u, 0)[:, None] * d, [0.0], [length], p.size, label)


def interval(lo: float = 0.0, hi: float = 1.0, label: str = "interval") -> ChartSubspace:
    return _chart(lambda u: np.asarray(u, float)[:, :1], [lo], [hi], 1, label)


def grid(lo: float = 0.0, hi: float = 1.0, h: float = 1e-4, label: str = "grid") -> SampledSubspace:
    n = int(round((hi - lo) / h))
    return SampledSubspace(lo + h * np.arange(n + 1), make_euclidean(1), label)


def graph(fn: Callable, domain=(-1.0, 1.0), label: str = "graph") -> ChartSubspace:
    def f(u):
        x = _param(u, 0)
        return np.stack([x, fn(x)], axis=1)

    return _chart(f, [domain[0]], [domain[1]], 2, label)


def graph_union(fns: Sequence[Callable], domain=(-1.0, 1.0), label: str = "graph-union") -> Subspace:
    parts = [graph(fn, domain, f"{label}[{i}]") for i, fn in enumerate(fns)]
    return parts[0] if len(parts) == 1 else UnionSubspace(parts, label)


def band(f1: Callable, f2: Callable, domain=(-1.0, 1.0), label: str = "band") -> ChartSubspace:
    """Region between two graphs: ``(x, s) -> (x, lo(x) + s (hi(x) - lo(x)))``."""

    def f(u):
        x, s = _param(u, 0), _param(u, 1)
        a, b = f1(x), f2(x)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return np.stack([x, lo + s * (hi - lo)], axis=1)

    return _chart(f, [domain[0], 0.0], [domain[1], 1.0], 2, label)


def rotation_body(alpha: float, length: float = 1.0, label: str = "rotation-body") -> ChartSubspace:
    """``{(x, y, z): sqrt(y^2 + z^2) <= x^(1+alpha), 0 <= x <= length}``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")

    def f(u):
        x, s, phi = _param(u, 0), _param(u, 1), _param(u, 2)
        rad = s * x ** (1 + alpha)
        return np.stack([x, rad * np.cos(phi), rad * np.sin(phi)], axis=1)

    return _chart(f, [0.0, 0.0, -np.pi], [length, 1.0, np.pi], 3, label)


def plane(point, e1, e2, extent: float = 1.0, label: str = "plane") -> ChartSubspace:
    p = np.asarray(point, float)
    b1, b2 = np.asarray(e1, float), np.asarray(e2, float)

    def f(u):
        return p + _param(u, 0)[:, None] * b1 + _param(u, 1)[:, None] * b2

    return _chart(f, [-extent, -extent], [extent, extent], p.size, label)


SURFACES = ("paraboloid", "sphere", "cone", "plane")


def surface_map(kind: str) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    if kind == "paraboloid":
        return lambda u, v: u * u + v * v
    if kind == "sphere":
        return lambda u, v: np.sqrt(np.maximum(1.0 - u * u - v * v, 0.0))
    if kind == "cone":
        return lambda u, v: np.sqrt(u * u + v * v)
    if kind == "plane":
        return lambda u, v: np.zeros_like(u)
    raise ValueError(f"unknown surface {kind!r}; expected one of {SURFACES}")


def surface(kind: str = "paraboloid", extent: float = 0.5, label: str | None = None) -> ChartSubspace:
    """Graph surface ``(u, v) -> (u, v, h(u, v))`` over ``[-extent, extent]^2``."""
    h = surface_map(kind)

    def f(u):
        x, y = _param(u, 0), _param(u, 1)
        return np.stack([x, y, h(x, y)], axis=1)

    return _chart(f, [-extent, -extent], [extent, extent], 3, label or kind)


def surface_jacobian(kind: str, u: float = 0.0, v: float = 0.0) -> np.ndarray | None:
    """Analytic Jacobian (3x2) of a built-in surface, None where undefined."""
    if kind == "paraboloid":
        return np.array([[1.0, 0.0], [0.0, 1.0], [2 * u, 2 * v]])
    if kind == "sphere":
        w = np.sqrt(1.0 - u * u - v * v)
        return np.array([[1.0, 0.0], [0.0, 1.0], [-u / w, -v / w]])
    if kind == "plane":
        return np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    if kind == "cone":
        r = np.hypot(u, v)
        return None if r == 0 else np.array([[1.0, 0.0], [0.0, 1.0], [u / r, v / r]])
    raise ValueError(f"unknown surface {kind!r}")
