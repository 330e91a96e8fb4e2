import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pretangent import charts
from pretangent.gallery import (SCENARIOS, ScenarioOptions, SizeLimitError, embeddability_check,
                                run_scenario, scenario_between_graphs, scenario_graph_union,
                                scenario_rotation_body, scenario_simple_curve, scenario_surface)
from pretangent.tangency import NOT_TANGENT, STRONG

FAST = ScenarioOptions(grid_len=8, n_sphere=128, n_target=1024, transfer_target=512)


def test_additive_triple_on_line():
    D = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float)
    e = embeddability_check(D, "line")
    assert e.flag and e.defect == 0.0
    assert embeddability_check(D, "half_line").flag


def test_equilateral_triangle():
    D = 1.0 - np.eye(3)
    line = embeddability_check(D, "line")
    assert not line.flag and line.defect == pytest.approx(1.0)
    plane = embeddability_check(D, "plane")
    assert plane.flag and plane.defect == 0.0


def test_single_class():
    for target in ("line", "half_line", "plane"):
        e = embeddability_check(np.zeros((1, 1)), target)
        assert e.flag and e.defect == 0.0


def test_half_line_needs_base_at_end():
    D = np.array([[0, 1, 1], [1, 0, 2], [1, 2, 0]], float)
    assert embeddability_check(D, "line").flag
    assert not embeddability_check(D, "half_line", base=0).flag
    assert embeddability_check(D, "half_line", base=1).flag


def test_tetrahedron_not_planar():
    D = 1.0 - np.eye(4)
    assert not embeddability_check(D, "plane").flag


def test_size_limit_and_target():
    with pytest.raises(SizeLimitError):
        embeddability_check(np.zeros((65, 65)), "line")
    with pytest.raises(ValueError):
        embeddability_check(np.zeros((2, 2)), "sphere")


@settings(max_examples=50)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=8))
def test_line_implies_plane(xs):
    x = np.array(xs)
    D = np.abs(x[:, None] - x[None, :])
    assert embeddability_check(D, "line").flag
    assert embeddability_check(D, "plane").flag


@settings(max_examples=30)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=7))
def test_planar_points_embed(pts):
    p = np.array(pts)
    D = np.linalg.norm(p[:, None] - p[None, :], axis=-1)
    e = embeddability_check(D, "plane")
    assert e.defect >= 0
    assert e.flag or D.max() == 0


def test_scenario_input_errors():
    with pytest.raises(ValueError):
        scenario_simple_curve(charts.circle(), 0.0, derivative=[0.0, 0.0], opts=FAST)
    with pytest.raises(ValueError):
        scenario_graph_union([lambda x: x, lambda x: -x], opts=FAST)
    with pytest.raises(ValueError):
        scenario_between_graphs(lambda x: x, lambda x: x + 1, opts=FAST)
    with pytest.raises(ValueError):
        scenario_rotation_body(0.0)
    with pytest.raises(ValueError):
        scenario_surface("cone", opts=FAST)
    with pytest.raises(ValueError):
        scenario_surface("paraboloid", jacobian=[[1, 2], [2, 4], [0, 0]], opts=FAST)
    with pytest.raises(KeyError):
        run_scenario("torus")


def test_scenario_registry():
    assert {"circle", "ellipse", "graph-union", "between-graphs", "rotation-body",
            "paraboloid", "sphere-patch", "cone"} <= set(SCENARIOS)


@pytest.fixture(scope="module")
def circle():
    return run_scenario("circle", FAST)


def test_circle_scenario(circle):
    r = circle
    assert r.verdict.kind == STRONG and r.verdict.slope == pytest.approx(2.0, abs=0.1)
    assert r.embeddability["line"].flag and r.isometry[0]
    assert r.transfer.back_consistent
    assert len(r.quotient) == 4


def test_single_graph_matches_curve():
    r = scenario_graph_union([lambda x: x * x], opts=FAST)
    assert r.verdict.kind == STRONG and r.embeddability["line"].flag


def test_wide_band_not_tangent():
    r = scenario_between_graphs(lambda x: x, lambda x: 2 * x, opts=FAST)
    assert r.verdict.kind == NOT_TANGENT and r.verdict.c > 0.1


def test_cone_forced_plane():
    r = run_scenario("cone", FAST)
    assert r.verdict.kind == NOT_TANGENT
    assert r.verdict.c == pytest.approx(1 / np.sqrt(2), abs=0.02)
    assert r.transfer_failure is not None and r.quotient is None


def test_deterministic_and_sampling_stable(circle):
    a = circle
    b = run_scenario("circle", FAST)
    assert a.to_dict() == b.to_dict()
    for n in (102, 154):
        opts = ScenarioOptions(grid_len=8, n_sphere=n, n_target=1024, transfer_target=512)
        assert run_scenario("circle", opts).verdict.kind == a.verdict.kind


def test_summary_row(circle):
    row = circle.summary_row()
    assert row[0] == "circle" and row[1] == STRONG and len(row) == 6
