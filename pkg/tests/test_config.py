import json

import numpy as np
import pytest

from pretangent import config as C
from pretangent.metric import ChartSubspace, SampledSubspace, UnionSubspace


def test_read_json_errors(tmp_path):
    with pytest.raises(C.ConfigError, match="cannot read"):
        C.read_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(C.ConfigError, match="line 1"):
        C.read_json(bad)


def test_spaces():
    assert C.load_space({"kind": "euclidean", "dimension": 3}).dimension == 3
    fin = C.load_space({"kind": "finite", "matrix": [[0, 1], [1, 0]]})
    assert fin.dist(0, 1) == 1
    with pytest.raises(C.ConfigError, match=r"space\.dimension"):
        C.load_space({"kind": "euclidean", "dimension": 0})
    with pytest.raises(C.ConfigError, match=r"space\.kind"):
        C.load_space({"kind": "hyperbolic"})


def test_unknown_key_is_pointed():
    doc = {"base_point": [0], "sequences": [{"kind": "power", "c": 1, "oops": 2}]}
    with pytest.raises(C.ConfigError) as e:
        C.load_sequences(doc)
    assert e.value.path == "sequences.sequences[0].oops"


@pytest.mark.parametrize("doc,cls", [
    ({"kind": "parametrized", "chart": "circle"}, ChartSubspace),
    ({"kind": "parametrized", "chart": "rotation-body", "params": {"alpha": 0.5}}, ChartSubspace),
    ({"kind": "parametrized", "chart": "surface", "params": {"type": "sphere"}}, ChartSubspace),
    ({"kind": "parametrized", "chart": "graph-union",
      "params": {"functions": [[0, 1], [0, 1, 1]]}}, UnionSubspace),
    ({"kind": "grid", "h": 0.25}, SampledSubspace),
    ({"kind": "sampled", "points": [0, 1, 2]}, SampledSubspace),
    ({"kind": "union", "parts": [{"kind": "grid", "h": 0.5},
                                 {"kind": "sampled", "points": [3.0]}]}, UnionSubspace),
])
def test_subspaces(doc, cls):
    assert isinstance(C.load_subspace(doc), cls)


def test_subspace_param_errors():
    with pytest.raises(C.ConfigError, match="params"):
        C.load_subspace({"kind": "parametrized", "chart": "rotation-body", "params": {"alpha": -1}})
    with pytest.raises(C.ConfigError, match="chart"):
        C.load_subspace({"kind": "parametrized", "chart": "torus"})
    with pytest.raises(C.ConfigError, match="direction"):
        C.load_subspace({"kind": "parametrized", "chart": "line",
                         "params": {"point": [0, 0], "direction": [0, 0]}})


def test_sequences():
    a, seqs, pool = C.load_sequences({
        "base_point": [0.0],
        "sequences": [{"kind": "power", "c": 2, "p": 1},
                      {"kind": "geometric", "q": 0.5},
                      {"kind": "interleave", "odd": {"kind": "power"}, "even": {"kind": "constant"}},
                      {"kind": "tabulated", "values": [[1.0], [0.5]]}],
        "probe_pool": [{"kind": "constant", "point": [1.0]}]})
    assert np.allclose(seqs[0](4), [0.5]) and np.allclose(seqs[1](2), [0.25])
    assert np.allclose(seqs[2](2), [0.0]) and np.allclose(seqs[3](2), [0.5])
    assert np.allclose(pool[0](9), [1.0])
    with pytest.raises(C.ConfigError, match="q"):
        C.load_sequence({"kind": "geometric", "q": 2}, np.zeros(1))


def test_point_forms():
    assert C.load_point(3) == 3
    assert np.allclose(C.load_point({"point": [1, 2]}), [1, 2])
    with pytest.raises(C.ConfigError):
        C.load_point([[1, 2], [3, 4]])


def test_norms_and_maps():
    assert C.load_norm({"kind": "power", "p": 2})(2) == pytest.approx(0.25)
    assert C.load_norm({"kind": "tabulated", "values": [1, 0.5]})(2) == 0.5
    assert np.allclose(C.load_map({"kind": "linear", "slope": 2})(1.5), [3.0])
    assert np.allclose(C.load_map({"kind": "linear", "matrix": [[0, 1], [1, 0]]})([1, 2]), [2, 1])
    assert np.allclose(C.load_map({"kind": "power", "p": 2})([3.0]), [9.0])
    ind = C.load_map({"kind": "indicator", "point": [0], "inside": [1], "outside": [0]})
    assert ind([0.0])[0] == 1 and ind([0.1])[0] == 0
    comp = C.load_map({"kind": "composition", "maps": [{"kind": "linear", "slope": 2},
                                                        {"kind": "power", "p": 2}]})
    assert np.allclose(comp([3.0]), [36.0])
    with pytest.raises(C.ConfigError):
        C.load_map({"kind": "linear", "slope": 1, "matrix": [[1]]})


def test_shipped_configs_load(tmp_path):
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    C.load_subspace(C.read_json(root / "circle.json"))
    C.load_subspace(C.read_json(root / "tangent_line.json"))
    C.load_sequences(C.read_json(root / "seqs_reals.json"))
    space, a, seqs, norm = C.load_family_spec(C.read_json(root / "family_reals.json"))
    assert len(seqs) == 3 and space.dimension == 1
    json.dumps(C.read_json(root / "point_10.json"))


def test_probe_config_error():
    with pytest.raises(C.ConfigError, match="schedule"):
        C.probe_config(1e-6, 1e-9, 4.0, 0.5, 24)
