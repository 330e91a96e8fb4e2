import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pretangent import charts
from pretangent.metric import (CapabilityError, MetricAxiomError, MetricSpace, SampledSubspace,
                               make_euclidean, make_finite, make_parametrized, validate_metric)


def test_finite_distance():
    assert make_finite([[0, 1], [1, 0]]).dist(0, 1) == 1.0


def test_finite_asymmetric_rejected():
    with pytest.raises(MetricAxiomError):
        make_finite([[0, 1], [2, 0]])


def test_finite_triangle_names_triple():
    with pytest.raises(MetricAxiomError) as exc:
        make_finite([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    assert set(exc.value.triple) == {0, 1, 2}


def test_euclidean_bad_dimension():
    with pytest.raises(ValueError):
        make_euclidean(0)


def test_validate_plane_passes():
    rep = validate_metric(make_euclidean(2), 1000, seed=0)
    assert rep.passed and rep.worst_triangle <= 1e-12


def test_validate_one_point():
    assert validate_metric(make_finite([[0]])).passed


def test_validate_without_sampler():
    space = MetricSpace(dist=lambda x, y: abs(x - y))
    with pytest.raises(CapabilityError):
        validate_metric(space)


def test_circle_shell_constraint():
    C = charts.circle()
    a = np.array([1.0, 0.0])
    pts = C.sphere_sampler(a, 0.1, 0.01, 256, seed=3)
    assert len(pts) > 0
    d = np.linalg.norm(pts - a, axis=1)
    assert np.all(np.abs(d - 0.1) <= 0.001)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


def test_diagonal_line_unit_shell():
    L = make_parametrized(lambda u: np.stack([u[:, 0], u[:, 0]], axis=1), [(-2, 2)],
                          make_euclidean(2))
    pts = L.sphere_sampler(np.zeros(2), 1.0, 0.05, 64, seed=0)
    assert np.allclose(np.abs(pts), 1 / np.sqrt(2), atol=1e-9)
    assert {np.sign(p[0]) for p in pts} == {-1.0, 1.0}


def test_empty_shell():
    C = charts.circle()
    assert len(C.sphere_sampler(np.array([1.0, 0.0]), 5.0, 0.05, 64, seed=0)) == 0


def test_chart_dimension_mismatch():
    with pytest.raises(ValueError):
        make_parametrized(lambda u: np.stack([u[:, 0]] * 3, axis=1), [(0, 1)], make_euclidean(2))


def test_scalar_chart_wrapped():
    S = make_parametrized(lambda th: [np.cos(th), np.sin(th)], [(-np.pi, np.pi)], make_euclidean(2))
    assert S.contains([0.0, 1.0])
    assert not S.contains([0.5, 0.0])


def test_sampled_subspace_nearest():
    G = SampledSubspace(np.linspace(0, 1, 11), make_euclidean(1))
    p, d = G.nearest(np.array([[0.33]]))
    assert p[0, 0] == pytest.approx(0.3) and d[0] == pytest.approx(0.03)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), dim=st.integers(1, 4))
def test_euclidean_axioms_property(seed, dim):
    rep = validate_metric(make_euclidean(dim), 200, seed=seed)
    assert rep.passed


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(st.lists(st.floats(-5, 5), min_size=2, max_size=2), min_size=1, max_size=8))
def test_finite_from_points_property(pts):
    P = np.array(pts)
    D = np.linalg.norm(P[:, None] - P[None], axis=-1)
    D = np.maximum(D, D.T)
    assert validate_metric(make_finite(D)).passed


@settings(max_examples=15, deadline=None)
@given(t=st.floats(1e-6, 0.5), eta=st.floats(0.001, 0.1), seed=st.integers(0, 1000))
def test_sphere_sampler_property(t, eta, seed):
    C = charts.circle()
    a = np.array([1.0, 0.0])
    pts = C.sphere_sampler(a, t, eta, 32, seed)
    d = np.linalg.norm(pts - a, axis=1)
    assert np.all(np.abs(d - t) <= eta * t)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
