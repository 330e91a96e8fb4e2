"""JSON descriptions of spaces, subspaces, sequences, normalizing sequences and maps.

Every loader rejects unknown keys with a :class:`ConfigError` naming the
offending path, e.g. ``sequences[2].direction``.

Spaces::

    {"kind": "euclidean", "dimension": 2}
    {"kind": "finite", "matrix": [[0, 1], [1, 0]]}

Subspaces (always inside a Euclidean space)::

    {"kind": "parametrized", "chart": "circle", "params": {"radius": 1.0}}
    {"kind": "grid", "lo": 0.0, "hi": 1.0, "h": 1e-4}
    {"kind": "sampled", "points": [[0, 0], [1, 0]]}
    {"kind": "union", "parts": [<subspace>, ...]}

Sequences (relative to a base point ``a``)::

    {"kind": "power", "c": 1, "p": 1, "direction": [1, 0]}     # a + c/n^p * direction
    {"kind": "geometric", "c": 1, "q": 0.5}                    # a + c q^n * direction
    {"kind": "interleave", "odd": <seq>, "even": <seq>}
    {"kind": "constant", "point": [0, 0]}                      # point defaults to a
    {"kind": "tabulated", "values": [[...], ...]}

Normalizing sequences::

    {"kind": "power", "c": 1, "p": 1} | {"kind": "geometric", "c": 1, "q": 0.5}
    | {"kind": "tabulated", "values": [...]}

Maps::

    {"kind": "linear", "matrix": [[2]]}   or  {"kind": "linear", "slope": 2}
    {"kind": "power", "p": 2, "c": 1}                          # c * x**p componentwise
    {"kind": "indicator", "point": [0], "inside": [1], "outside": [0]}
    {"kind": "composition", "maps": [<map>, ...]}              # applied left to right
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import charts
from .limits import IndexSchedule, ProbeConfig
from .metric import MetricSpace, SampledSubspace, Subspace, UnionSubspace, make_euclidean, make_finite
from .sequences import (NormalizingSequence, PointSequence, constant_at, geometric_norm,
                        geometric_sequence, interleave, power_norm, power_sequence, tabulated,
                        tabulated_norm)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def read_json(path: str | Path) -> Any:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(str(p), f"cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(p), f"malformed JSON at line {exc.lineno}, column {exc.colno}") from exc


def _obj(doc: Any, path: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    for k in required:
        if k not in doc:
            raise ConfigError(f"{path}.{k}", "missing key")
    for k in doc:
        if k not in required and k not in optional:
            raise ConfigError(f"{path}.{k}", "unknown key")
    return doc


def _num(doc: dict, key: str, path: str, default=None, positive: bool = False) -> float:
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", "expected a number")
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}", "must be positive")
    return float(v)


def _vec(v: Any, path: str) -> np.ndarray:
    try:
        out = np.atleast_1d(np.asarray(v, float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, "expected a number or a list of numbers") from exc
    if out.ndim != 1 or not np.all(np.isfinite(out)):
        raise ConfigError(path, "expected a finite vector")
    return out


def _kind(doc: Any, path: str, kinds: tuple[str, ...]) -> str:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(path, "expected an object with a 'kind'")
    if doc["kind"] not in kinds:
        raise ConfigError(f"{path}.kind", f"unknown kind {doc['kind']!r}; expected one of {list(kinds)}")
    return doc["kind"]


def load_space(doc: Any, path: str = "space") -> MetricSpace:
    kind = _kind(doc, path, ("euclidean", "finite"))
    if kind == "euclidean":
        _obj(doc, path, {"kind", "dimension"}, {"label"})
        dim = doc["dimension"]
        if not isinstance(dim, int) or dim < 1:
            raise ConfigError(f"{path}.dimension", "expected a positive integer")
        return make_euclidean(dim)
    _obj(doc, path, {"kind", "matrix"}, {"label"})
    return make_finite(doc["matrix"])


def _coeffs(v: Any, path: str) -> Callable:
    return charts.poly(_vec(v, path))


CHARTS = ("circle", "ellipse", "line", "half-line", "interval", "graph", "graph-union", "band",
          "rotation-body", "surface", "plane")


def _chart(name: str, params: dict, path: str) -> Subspace:
    p = f"{path}.params"
    if name == "circle":
        _obj(params, p, set(), {"center", "radius"})
        return charts.circle(_vec(params.get("center", [0, 0]), f"{p}.center"),
                             _num(params, "radius", p, 1.0, positive=True))
    if name == "ellipse":
        _obj(params, p, set(), {"ax", "by", "center"})
        return charts.ellipse(_num(params, "ax", p, 2.0, True), _num(params, "by", p, 1.0, True),
                              _vec(params.get("center", [0, 0]), f"{p}.center"))
    if name in ("line", "half-line"):
        _obj(params, p, {"point", "direction"}, {"extent"})
        pt, d = _vec(params["point"], f"{p}.point"), _vec(params["direction"], f"{p}.direction")
        if pt.size != d.size or not np.linalg.norm(d) > 0:
            raise ConfigError(f"{p}.direction", "must be a nonzero vector of the point's dimension")
        ext = _num(params, "extent", p, 2.0, True)
        return charts.line(pt, d, ext) if name == "line" else charts.half_line(pt, d, ext)
    if name == "interval":
        _obj(params, p, set(), {"lo", "hi"})
        return charts.interval(_num(params, "lo", p, 0.0), _num(params, "hi", p, 1.0))
    if name == "graph":
        _obj(params, p, {"coeffs"}, {"domain"})
        return charts.graph(_coeffs(params["coeffs"], f"{p}.coeffs"),
                            tuple(_vec(params.get("domain", [-1, 1]), f"{p}.domain")))
    if name == "graph-union":
        _obj(params, p, {"functions"}, {"domain"})
        fns = [_coeffs(c, f"{p}.functions[{i}]") for i, c in enumerate(params["functions"])]
        if not fns:
            raise ConfigError(f"{p}.functions", "need at least one function")
        return charts.graph_union(fns, tuple(_vec(params.get("domain", [-1, 1]), f"{p}.domain")))
    if name == "band":
        _obj(params, p, {"lower", "upper"}, {"domain"})
        return charts.band(_coeffs(params["lower"], f"{p}.lower"),
                           _coeffs(params["upper"], f"{p}.upper"),
                           tuple(_vec(params.get("domain", [-1, 1]), f"{p}.domain")))
    if name == "rotation-body":
        _obj(params, p, {"alpha"}, {"length"})
        return charts.rotation_body(_num(params, "alpha", p, positive=True),
                                    _num(params, "length", p, 1.0, True))
    if name == "surface":
        _obj(params, p, set(), {"type", "extent"})
        kind = params.get("type", "paraboloid")
        if kind not in charts.SURFACES:
            raise ConfigError(f"{p}.type", f"expected one of {list(charts.SURFACES)}")
        return charts.surface(kind, _num(params, "extent", p, 0.5, True))
    _obj(params, p, {"point", "e1", "e2"}, {"extent"})
    return charts.plane(_vec(params["point"], f"{p}.point"), _vec(params["e1"], f"{p}.e1"),
                        _vec(params["e2"], f"{p}.e2"), _num(params, "extent", p, 1.0, True))


def load_subspace(doc: Any, path: str = "subspace") -> Subspace:
    kind = _kind(doc, path, ("parametrized", "grid", "sampled", "union"))
    if kind == "parametrized":
        _obj(doc, path, {"kind", "chart"}, {"params", "label"})
        if doc["chart"] not in CHARTS:
            raise ConfigError(f"{path}.chart", f"unknown chart {doc['chart']!r}; expected one of {list(CHARTS)}")
        try:
            sub = _chart(doc["chart"], doc.get("params", {}), path)
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{path}.params", str(exc)) from exc
    elif kind == "grid":
        _obj(doc, path, {"kind", "h"}, {"lo", "hi", "label"})
        sub = charts.grid(_num(doc, "lo", path, 0.0), _num(doc, "hi", path, 1.0),
                          _num(doc, "h", path, positive=True))
    elif kind == "sampled":
        _obj(doc, path, {"kind", "points"}, {"label"})
        pts = np.asarray(doc["points"], float)
        pts = pts[:, None] if pts.ndim == 1 else pts
        sub = SampledSubspace(pts, make_euclidean(pts.shape[1]))
    else:
        _obj(doc, path, {"kind", "parts"}, {"label"})
        sub = UnionSubspace([load_subspace(d, f"{path}.parts[{i}]")
                             for i, d in enumerate(doc["parts"])])
    sub.label = doc.get("label", sub.label or kind)
    return sub


def load_point(doc: Any, path: str = "point"):
    if isinstance(doc, dict):
        _obj(doc, path, {"point"})
        doc = doc["point"]
    if isinstance(doc, int) and not isinstance(doc, bool):
        return doc
    return _vec(doc, path)


SEQUENCE_KINDS = ("power", "geometric", "interleave", "constant", "tabulated")


def load_sequence(doc: Any, a, path: str = "sequence") -> PointSequence:
    kind = _kind(doc, path, SEQUENCE_KINDS)
    label = doc.get("label")
    if kind in ("power", "geometric"):
        extra = "p" if kind == "power" else "q"
        _obj(doc, path, {"kind"}, {"c", extra, "direction", "label"})
        d = _vec(doc["direction"], f"{path}.direction") if "direction" in doc else None
        if d is not None and d.size != np.atleast_1d(a).size:
            raise ConfigError(f"{path}.direction", "dimension differs from the base point")
        c = _num(doc, "c", path, 1.0)
        if kind == "power":
            return power_sequence(a, c, _num(doc, "p", path, 1.0, True), d, label)
        q = _num(doc, "q", path, 0.5)
        if not 0 < q < 1:
            raise ConfigError(f"{path}.q", "must lie in (0, 1)")
        return geometric_sequence(a, c, q, d, label)
    if kind == "interleave":
        _obj(doc, path, {"kind", "odd", "even"}, {"label"})
        return interleave(load_sequence(doc["odd"], a, f"{path}.odd"),
                          load_sequence(doc["even"], a, f"{path}.even"), label)
    if kind == "constant":
        _obj(doc, path, {"kind"}, {"point", "label"})
        pt = load_point(doc["point"], f"{path}.point") if "point" in doc else a
        return constant_at(pt, label or f"const{np.atleast_1d(pt).tolist()}")
    _obj(doc, path, {"kind", "values"}, {"label"})
    vals = doc["values"]
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"{path}.values", "expected a nonempty list")
    return tabulated(vals, label or "table")


def load_sequences(doc: Any, path: str = "sequences") -> tuple[Any, list[PointSequence], list[PointSequence]]:
    """``{"base_point": ..., "sequences": [...], "probe_pool": [...]}``."""
    _obj(doc, path, {"base_point", "sequences"}, {"probe_pool"})
    a = load_point(doc["base_point"], f"{path}.base_point")
    seqs = [load_sequence(d, a, f"{path}.sequences[{i}]") for i, d in enumerate(doc["sequences"])]
    extra = [load_sequence(d, a, f"{path}.probe_pool[{i}]")
             for i, d in enumerate(doc.get("probe_pool", []))]
    return a, seqs, extra


def load_norm(doc: Any, path: str = "norm") -> NormalizingSequence:
    kind = _kind(doc, path, ("power", "geometric", "tabulated"))
    label = doc.get("label")
    try:
        if kind == "power":
            _obj(doc, path, {"kind"}, {"c", "p", "label"})
            return power_norm(_num(doc, "c", path, 1.0), _num(doc, "p", path, 1.0), label)
        if kind == "geometric":
            _obj(doc, path, {"kind"}, {"c", "q", "label"})
            return geometric_norm(_num(doc, "c", path, 1.0), _num(doc, "q", path, 0.5), label)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc
    _obj(doc, path, {"kind", "values"}, {"label"})
    return tabulated_norm(doc["values"], label or "table")


def load_map(doc: Any, path: str = "map") -> Callable:
    kind = _kind(doc, path, ("linear", "power", "indicator", "composition"))
    if kind == "linear":
        _obj(doc, path, {"kind"}, {"matrix", "slope"})
        if ("matrix" in doc) == ("slope" in doc):
            raise ConfigError(path, "give exactly one of 'matrix' or 'slope'")
        if "slope" in doc:
            s = _num(doc, "slope", path)
            return lambda x: s * np.atleast_1d(np.asarray(x, float))
        m = np.asarray(doc["matrix"], float)
        if m.ndim != 2:
            raise ConfigError(f"{path}.matrix", "expected a 2-D list")
        return lambda x: m @ np.atleast_1d(np.asarray(x, float))
    if kind == "power":
        _obj(doc, path, {"kind", "p"}, {"c"})
        p, c = _num(doc, "p", path, positive=True), _num(doc, "c", path, 1.0)
        return lambda x: c * np.atleast_1d(np.asarray(x, float)) ** p
    if kind == "indicator":
        _obj(doc, path, {"kind", "point", "inside", "outside"})
        pt = _vec(doc["point"], f"{path}.point")
        inside, outside = _vec(doc["inside"], f"{path}.inside"), _vec(doc["outside"], f"{path}.outside")
        return lambda x: inside.copy() if np.array_equal(np.atleast_1d(x), pt) else outside.copy()
    _obj(doc, path, {"kind", "maps"})
    maps = [load_map(d, f"{path}.maps[{i}]") for i, d in enumerate(doc["maps"])]
    if not maps:
        raise ConfigError(f"{path}.maps", "need at least one map")

    def composed(x):
        for f in maps:
            x = f(x)
        return x

    return composed


def load_family_spec(doc: Any, path: str = "family"):
    """``{"space": ..., "base_point": ..., "sequences": [...], "norm": ...}``."""
    _obj(doc, path, {"space", "base_point", "sequences", "norm"})
    space = load_space(doc["space"], f"{path}.space")
    a = load_point(doc["base_point"], f"{path}.base_point")
    seqs = [load_sequence(d, a, f"{path}.sequences[{i}]") for i, d in enumerate(doc["sequences"])]
    return space, a, seqs, load_norm(doc["norm"], f"{path}.norm")


def probe_config(rel_tol: float, abs_tol: float, base: float, growth: float, length: int) -> ProbeConfig:
    try:
        return ProbeConfig(IndexSchedule.geometric(base, growth, length), rel_tol, abs_tol)
    except ValueError as exc:
        raise ConfigError("schedule", str(exc)) from exc
