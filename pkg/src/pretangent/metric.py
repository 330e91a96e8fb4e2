"""Metric spaces, subspaces of Euclidean space, and their samplers.

Points of embedded spaces are 1-d float arrays (plain floats are accepted for
the real line); points of finite spaces are integer indices.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtri

# relative slack for the triangle inequality
TRIANGLE_RTOL = 1e-12


class MetricAxiomError(ValueError):
    """A distance matrix or oracle violates a metric axiom."""

    def __init__(self, message: str, triple: tuple[int, ...] | None = None):
        super().__init__(message)
        self.triple = triple


class CapabilityError(RuntimeError):
    """The space lacks a capability (e.g. a sampler) needed by an operation."""


@dataclass(frozen=True)
class MetricSpace:
    dist: Callable[[Any, Any], float]
    sampler: Callable[[Any, int, int], list] | None = None
    label: str = ""
    dimension: int | None = None  # ambient dimension for Euclidean spaces
    size: int | None = None  # number of points for finite spaces

    @property
    def is_euclidean(self) -> bool:
        return self.dimension is not None


def as_point(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def make_euclidean(dimension: int) -> MetricSpace:
    """Euclidean space E^dimension; the sampler draws uniformly from a box.

    The sampler region is ``(lo, hi)`` (scalars or vectors); ``None`` means the
    unit box.
    """
    if int(dimension) != dimension or dimension < 1:
        raise ValueError(f"dimension must be a positive integer, got {dimension!r}")
    dimension = int(dimension)

    def dist(x, y) -> float:
        return float(np.linalg.norm(as_point(x) - as_point(y)))

    def sampler(region, count: int, seed: int) -> list[np.ndarray]:
        lo, hi = (0.0, 1.0) if region is None else region
        lo = np.broadcast_to(np.asarray(lo, float), (dimension,))
        hi = np.broadcast_to(np.asarray(hi, float), (dimension,))
        rng = np.random.default_rng(seed)
        pts = lo + (hi - lo) * rng.random((count, dimension))
        return list(pts)

    return MetricSpace(dist=dist, sampler=sampler, label=f"E^{dimension}", dimension=dimension)


def make_finite(matrix) -> MetricSpace:
    """Finite metric space on indices ``0..n-1`` with the given distance matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError("distance matrix must be square and nonempty")
    if not np.all(np.isfinite(m)):
        raise MetricAxiomError("distance matrix has non-finite entries")
    if np.any(m < 0):
        i, j = map(int, np.argwhere(m < 0)[0])
        raise MetricAxiomError(f"negative distance d({i},{j}) = {m[i, j]}", (i, j))
    if np.any(np.diag(m) != 0):
        i = int(np.flatnonzero(np.diag(m))[0])
        raise MetricAxiomError(f"nonzero self-distance d({i},{i}) = {m[i, i]}", (i,))
    asym = np.argwhere(m != m.T)
    if len(asym):
        i, j = map(int, asym[0])
        raise MetricAxiomError(
            f"asymmetric distances d({i},{j}) = {m[i, j]} != d({j},{i}) = {m[j, i]}", (i, j)
        )
    defect, triple = _worst_triangle(m)
    if triple is not None and defect > 0:
        i, j, k = triple
        raise MetricAxiomError(
            f"triangle inequality fails on triple ({i},{j},{k}): "
            f"d({i},{k}) = {m[i, k]} > d({i},{j}) + d({j},{k}) = {m[i, j] + m[j, k]}",
            triple,
        )
    n = m.shape[0]

    def dist(x, y) -> float:
        return float(m[int(x), int(y)])

    def sampler(region, count: int, seed: int) -> list[int]:
        return list(range(n))

    return MetricSpace(dist=dist, sampler=sampler, label=f"finite[{n}]", size=n)


def _worst_triangle(m: np.ndarray) -> tuple[float, tuple[int, int, int] | None]:
    """Largest excess of d(i,k) over d(i,j) + d(j,k), beyond the relative slack."""
    if m.shape[0] < 3:
        return 0.0, None
    # excess[i, j, k] = d(i,k) - d(i,j) - d(j,k)
    excess = m[:, None, :] - m[:, :, None] - m[None, :, :]
    scale = np.maximum(np.maximum(m[:, None, :], m[:, :, None]), m[None, :, :])
    excess = excess - TRIANGLE_RTOL * scale
    i, j, k = np.unravel_index(int(np.argmax(excess)), excess.shape)
    return float(excess[i, j, k]), (int(i), int(j), int(k))


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    n_points: int
    worst_identity: float
    worst_symmetry: float
    worst_triangle: float  # excess over the allowed slack; <= 0 means fine
    worst_triple: tuple | None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_points": self.n_points,
            "worst_identity": self.worst_identity,
            "worst_symmetry": self.worst_symmetry,
            "worst_triangle": self.worst_triangle,
            "worst_triple": None if self.worst_triple is None else [
                p.tolist() if isinstance(p, np.ndarray) else p for p in self.worst_triple
            ],
        }


def validate_metric(space: MetricSpace, sample_count: int = 1000, seed: int = 0,
                    region=None) -> ValidationReport:
    """Check identity, symmetry and the triangle inequality on sampled points.

    Finite spaces with at most 64 points are checked exhaustively; otherwise
    ``sample_count`` random triples of sampled points are checked.
    """
    if space.sampler is None:
        if space.size is None:
            raise CapabilityError(f"space {space.label!r} has no sampler and is not finite")
        points = list(range(space.size))
    elif space.size is not None:
        points = list(range(space.size))
    else:
        points = space.sampler(region, sample_count, seed)
    n = len(points)
    if n == 0:
        return ValidationReport(True, 0, 0.0, 0.0, 0.0, None)

    worst_id = max(abs(space.dist(p, p)) for p in points)
    if space.size is not None and n <= 64:
        d = np.array([[space.dist(p, q) for q in points] for p in points])
        worst_sym = float(np.max(np.abs(d - d.T)))
        defect, triple = _worst_triangle(d)
        worst_tri = defect if triple is not None else 0.0
        worst_triple = triple
    else:
        rng = np.random.default_rng(seed + 1)
        idx = rng.integers(0, n, size=(sample_count, 3))
        worst_sym, worst_tri, worst_triple = 0.0, -math.inf, None
        for i, j, k in idx:
            x, y, z = points[i], points[j], points[k]
            dxy, dyx = space.dist(x, y), space.dist(y, x)
            dyz, dxz = space.dist(y, z), space.dist(x, z)
            worst_sym = max(worst_sym, abs(dxy - dyx))
            scale = max(dxy, dyz, dxz)
            excess = dxz - dxy - dyz - TRIANGLE_RTOL * scale
            if excess > worst_tri:
                worst_tri, worst_triple = excess, (x, y, z)
        if n < 3:
            worst_tri = 0.0
    passed = worst_id == 0 and worst_sym == 0 and worst_tri <= 0
    return ValidationReport(passed, n, float(worst_id), float(worst_sym), float(worst_tri),
                            worst_triple)


# ---------------------------------------------------------------------------
# subspaces of Euclidean space

class Subspace:
    """A subset of a Euclidean space that can sample spheres and balls around a
    point and answer nearest-point queries.

    Subclasses implement ``sphere_sampler``, ``ball_sampler`` and
    ``nearest``.  All randomness goes through the ``seed`` argument.
    """

    parent: MetricSpace
    label: str

    def sphere_sampler(self, a, t: float, eta: float, count: int, seed: int) -> np.ndarray:
        raise NotImplementedError

    def ball_sampler(self, a, radius: float, count: int, seed: int) -> np.ndarray:
        raise NotImplementedError

    def nearest(self, z: np.ndarray, a=None, radius: float | None = None,
                n_target: int = 4096, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Foot points in the subspace and distances for each row of ``z``."""
        raise NotImplementedError

    def contains(self, p, tol: float | None = None) -> bool:
        p = as_point(p)
        if tol is None:
            tol = 1e-9 * max(1.0, float(np.linalg.norm(p)))
        _, d = self.nearest(p[None, :])
        return bool(d[0] <= tol)

    def scale(self, a) -> float:
        """Largest distance from ``a`` over a coarse sample of the subspace."""
        raise NotImplementedError

    def distance_to(self, z: np.ndarray, a, t: float, n_target: int = 4096,
                    seed: int = 0) -> np.ndarray:
        """inf over the subspace of d(z_i, y), localized to the ball B(a, 3t)."""
        _, d = self.nearest(np.atleast_2d(z), a=a, radius=3.0 * t, n_target=n_target, seed=seed)
        return d


def _dist_rows(p: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((p - a) ** 2, axis=-1))


# log-spaced ray marching fractions (relative to the distance to the domain edge)
_MARCH = np.concatenate([[0.0], np.geomspace(1e-16, 1.0, 400)])


class ChartSubspace(Subspace):
    """Image of a box under a chart ``u -> chart(u)`` into E^n.

    The chart must accept an ``(m, k)`` array of parameters and return an
    ``(m, n)`` array (scalar charts are wrapped).  Spheres and balls around
    ``a`` are sampled along random parameter rays from the preimages of ``a``:
    the distance to ``a`` is marched on a log grid and the first crossing of
    the target radius is pinned by bisection.  Nearest points are found by
    KD-tree lookup over localized samples followed by Gauss-Newton descent in
    parameter space.
    """

    def __init__(self, chart: Callable, lo, hi, parent: MetricSpace, label: str = "",
                 grid_density: int = 4096):
        self.chart = chart
        self.lo = np.atleast_1d(np.asarray(lo, float))
        self.hi = np.atleast_1d(np.asarray(hi, float))
        if self.lo.shape != self.hi.shape or np.any(self.hi < self.lo):
            raise ValueError("chart domain must be a box with lo <= hi")
        self.k = self.lo.size
        self.parent = parent
        self.label = label
        self.grid_density = int(grid_density)
        per_dim = max(2, int(round(self.grid_density ** (1.0 / self.k))))
        axes = [np.linspace(l, h, per_dim) for l, h in zip(self.lo, self.hi)]
        self._grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.k)
        self._grid_pts = self.chart(self._grid)
        self._preimage_cache: dict = {}
        self.fd_step = 1e-7 * np.maximum(1.0, self.hi - self.lo)

    # -- basic evaluation

    def _jacobian(self, u: np.ndarray) -> np.ndarray:
        """Central differences, one-sided at the box faces: shape (m, n, k)."""
        cols = []
        for i in range(self.k):
            up, dn = u.copy(), u.copy()
            up[:, i] = np.minimum(u[:, i] + self.fd_step[i], self.hi[i])
            dn[:, i] = np.maximum(u[:, i] - self.fd_step[i], self.lo[i])
            span = (up[:, i] - dn[:, i])[:, None]
            cols.append((self.chart(up) - self.chart(dn)) / np.where(span > 0, span, 1.0))
        return np.stack(cols, axis=-1)

    def project_params(self, z: np.ndarray, u0: np.ndarray, iters: int = 60):
        """Gauss-Newton descent of |chart(u) - z| from ``u0``, clipped to the box."""
        u = np.clip(np.array(u0, float), self.lo, self.hi)
        r = self.chart(u) - z
        f = np.sum(r * r, axis=1)
        active = np.ones(len(u), bool)
        for _ in range(iters):
            if not active.any():
                break
            ia = np.flatnonzero(active)
            J = self._jacobian(u[ia])
            step = -np.einsum("mkn,mn->mk", np.linalg.pinv(J), r[ia])
            alpha = np.ones(len(ia))
            improved = np.zeros(len(ia), bool)
            u_new = u[ia].copy()
            f_new = f[ia].copy()
            r_new = r[ia].copy()
            todo = np.ones(len(ia), bool)
            for _ in range(30):
                if not todo.any():
                    break
                it = np.flatnonzero(todo)
                cand = np.clip(u[ia][it] + alpha[it, None] * step[it], self.lo, self.hi)
                rc = self.chart(cand) - z[ia][it]
                fc = np.sum(rc * rc, axis=1)
                ok = fc < f[ia][it]
                sel = it[ok]
                u_new[sel], f_new[sel], r_new[sel] = cand[ok], fc[ok], rc[ok]
                improved[sel] = True
                todo[sel] = False
                alpha[it[~ok]] *= 0.5
            moved = np.max(np.abs(u_new - u[ia]), axis=1)
            u[ia], f[ia], r[ia] = u_new, f_new, r_new
            done = ~improved | (moved <= 1e-15 * (1.0 + np.max(np.abs(u_new), axis=1)))
            active[ia[done]] = False
        return u, np.sqrt(f)

    def preimages(self, a) -> np.ndarray:
        """Parameters whose images coincide with ``a`` (within 1e-9 * scale)."""
        a = as_point(a)
        key = tuple(a.tolist())
        if key in self._preimage_cache:
            return self._preimage_cache[key]
        d = _dist_rows(self._grid_pts, a)
        kth = np.sort(d)[min(63, len(d) - 1)]
        cand = self._grid[d <= kth]
        u, dist = self.project_params(np.broadcast_to(a, (len(cand), a.size)).copy(), cand)
        tol = 1e-9 * max(1.0, float(np.linalg.norm(a)))
        good = u[dist <= tol]
        if len(good):
            # dedupe, keep deterministic order
            _, first = np.unique(np.round(good, 9), axis=0, return_index=True)
            good = good[np.sort(first)]
        self._preimage_cache[key] = good
        return good

    def scale(self, a) -> float:
        return float(np.max(_dist_rows(self._grid_pts, as_point(a))))

    # -- ray sampling

    def _rays(self, a: np.ndarray, n_rays: int, seed: int):
        base_set = self.preimages(a)
        if len(base_set) == 0:
            raise ValueError(f"point {a.tolist()} is not on subspace {self.label!r}")
        # one uniform draw per ray so larger counts extend smaller ones
        rng = np.random.default_rng(seed)
        U = rng.random((n_rays, self.k + 2))
        pick = np.minimum((U[:, 0] * len(base_set)).astype(int), len(base_set) - 1)
        base = base_set[pick]
        v = ndtri(np.clip(U[:, 2:], 1e-15, 1 - 1e-15))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        v = v / np.where(norms > 0, norms, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            to_hi = np.where(v > 0, (self.hi - base) / v, np.inf)
            to_lo = np.where(v < 0, (self.lo - base) / v, np.inf)
        s_max = np.min(np.minimum(to_hi, to_lo), axis=1)
        s_max = np.where(np.isfinite(s_max), s_max, 0.0)
        return base, v, s_max, U[:, 1]

    def _first_crossing(self, a, base, v, s_max, level):
        """Arc length of the first crossing of |chart - a| = level along each ray.

        Returns (s, hit) where rays that never reach ``level`` have hit False.
        """
        m = len(base)
        s_grid = s_max[:, None] * _MARCH[None, :]
        u = base[:, None, :] + s_grid[:, :, None] * v[:, None, :]
        d = _dist_rows(self.chart(u.reshape(-1, self.k)), a).reshape(m, -1)
        above = d >= level
        hit = above.any(axis=1) & (s_max > 0)
        first = np.argmax(above, axis=1)
        hi_s = s_grid[np.arange(m), first]
        lo_s = s_grid[np.arange(m), np.maximum(first - 1, 0)]
        for _ in range(64):
            mid = 0.5 * (lo_s + hi_s)
            dm = _dist_rows(self.chart(base + mid[:, None] * v), a)
            up = dm >= level
            hi_s = np.where(up, mid, hi_s)
            lo_s = np.where(up, lo_s, mid)
        # pick whichever bracket end is closer to the level
        d_hi = _dist_rows(self.chart(base + hi_s[:, None] * v), a)
        d_lo = _dist_rows(self.chart(base + lo_s[:, None] * v), a)
        s = np.where(np.abs(d_hi - level) <= np.abs(d_lo - level), hi_s, lo_s)
        return s, hit

    def sphere_params(self, a, t: float, eta: float, count: int, seed: int) -> np.ndarray:
        a = as_point(a)
        base, v, s_max, _ = self._rays(a, 4 * count, seed)
        s, hit = self._first_crossing(a, base, v, s_max, t)
        u = base + s[:, None] * v
        d = _dist_rows(self.chart(u), a)
        keep = hit & (np.abs(d - t) <= eta * t)
        return u[keep][:count]

    def sphere_sampler(self, a, t: float, eta: float = 0.05, count: int = 512,
                       seed: int = 0) -> np.ndarray:
        """Points z of the subspace with |d(a, z) - t| <= eta * t (possibly none)."""
        u = self.sphere_params(a, t, eta, count, seed)
        if len(u) == 0:
            return np.empty((0, self.parent.dimension))
        return self.chart(u)

    def ball_params(self, a, radius: float, count: int, seed: int) -> np.ndarray:
        a = as_point(a)
        base, v, s_max, frac = self._rays(a, count, seed)
        s_cross, hit = self._first_crossing(a, base, v, s_max, radius)
        s_end = np.where(hit, s_cross, s_max)
        u = base + (frac * s_end)[:, None] * v
        return np.vstack([self.preimages(a), u])

    def ball_sampler(self, a, radius: float, count: int = 4096, seed: int = 0) -> np.ndarray:
        return self.chart(self.ball_params(a, radius, count, seed))

    def nearest(self, z, a=None, radius=None, n_target: int = 4096, seed: int = 0):
        z = np.atleast_2d(np.asarray(z, float))
        if a is None or radius is None:
            params = self._grid
        else:
            params = self.ball_params(a, radius, n_target, seed)
        tree = cKDTree(self.chart(params))
        _, idx = tree.query(z)
        u, d = self.project_params(z, params[idx])
        return self.chart(u), d


class UnionSubspace(Subspace):
    """Finite union of subspaces sharing one ambient space."""

    def __init__(self, parts: Sequence[Subspace], label: str = ""):
        if not parts:
            raise ValueError("union needs at least one part")
        self.parts = list(parts)
        self.parent = parts[0].parent
        self.label = label

    def _through(self, a) -> list[Subspace]:
        return [p for p in self.parts if p.contains(a)] or self.parts

    def sphere_sampler(self, a, t, eta=0.05, count=512, seed=0):
        parts = self._through(a)
        per = max(1, -(-count // len(parts)))
        chunks = [p.sphere_sampler(a, t, eta, per, seed * 7919 + i) for i, p in enumerate(parts)]
        return np.vstack(chunks)[:count] if chunks else np.empty((0, self.parent.dimension))

    def ball_sampler(self, a, radius, count=4096, seed=0):
        parts = self._through(a)
        per = max(1, -(-count // len(parts)))
        return np.vstack([p.ball_sampler(a, radius, per, seed * 7919 + i)
                          for i, p in enumerate(parts)])

    def nearest(self, z, a=None, radius=None, n_target=4096, seed=0):
        z = np.atleast_2d(np.asarray(z, float))
        best_p, best_d = None, None
        for i, part in enumerate(self.parts):
            p, d = part.nearest(z, a, radius, n_target, seed * 7919 + i)
            if best_d is None:
                best_p, best_d = p.copy(), d.copy()
            else:
                better = d < best_d
                best_p[better], best_d[better] = p[better], d[better]
        return best_p, best_d

    def scale(self, a) -> float:
        return max(p.scale(a) for p in self.parts)


class SampledSubspace(Subspace):
    """An explicit finite point set in E^n."""

    def __init__(self, points, parent: MetricSpace, label: str = ""):
        pts = np.asarray(points, float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if parent.dimension is not None and pts.shape[1] != parent.dimension:
            raise ValueError("sample dimension does not match the ambient space")
        self.points = pts
        self.parent = parent
        self.label = label
        self._tree = cKDTree(pts)

    def sphere_sampler(self, a, t, eta=0.05, count=512, seed=0):
        d = _dist_rows(self.points, as_point(a))
        idx = np.flatnonzero(np.abs(d - t) <= eta * t)
        if len(idx) > count:
            idx = np.sort(np.random.default_rng(seed).choice(idx, count, replace=False))
        return self.points[idx]

    def ball_sampler(self, a, radius, count=4096, seed=0):
        idx = np.asarray(self._tree.query_ball_point(as_point(a), radius), int)
        if len(idx) > count:
            idx = np.random.default_rng(seed).choice(idx, count, replace=False)
        return self.points[np.sort(idx)]

    def nearest(self, z, a=None, radius=None, n_target=4096, seed=0):
        z = np.atleast_2d(np.asarray(z, float))
        d, idx = self._tree.query(z)
        return self.points[idx], d

    def scale(self, a) -> float:
        return float(np.max(_dist_rows(self.points, as_point(a))))


def _vectorize_chart(chart: Callable, k: int) -> Callable:
    """Wrap a chart so it maps (m, k) arrays to (m, n) arrays."""
    probe = np.zeros((2, k))
    try:
        out = np.asarray(chart(probe), float)
        if out.ndim == 2 and out.shape[0] == 2:
            return chart
    except Exception:
        pass

    @functools.wraps(chart)
    def wrapped(u):
        u = np.atleast_2d(u)
        return np.array([np.atleast_1d(np.asarray(chart(row if k > 1 else row[0]), float))
                         for row in u])

    return wrapped


def make_parametrized(chart: Callable, domain, ambient: MetricSpace, label: str = "",
                      grid_density: int = 4096) -> ChartSubspace:
    """Subspace of ``ambient`` given as the image of the box ``domain`` under ``chart``.

    ``domain`` is a sequence of ``(lo, hi)`` pairs, one per parameter.
    """
    if not ambient.is_euclidean:
        raise ValueError("parametrized subspaces need a Euclidean ambient space")
    box = np.asarray(domain, float).reshape(-1, 2)
    k = box.shape[0]
    vchart = _vectorize_chart(chart, k)
    centre = 0.5 * (box[:, 0] + box[:, 1])
    out = np.asarray(vchart(centre[None, :]), float)
    if out.ndim != 2 or out.shape[1] != ambient.dimension:
        raise ValueError(
            f"chart output dimension {out.shape[-1] if out.ndim else 0} does not match "
            f"ambient dimension {ambient.dimension}"
        )
    return ChartSubspace(vchart, box[:, 0], box[:, 1], ambient, label, grid_density)

