from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pretangent.derivative import (LiftedMap, NotDifferentiable, check_differentiable,
                                   construct_derivative, continuity_witness, verify_chain_rule)
from pretangent.family import build_family
from pretangent.metric import make_euclidean
from pretangent.sequences import PointSequence, power_norm, power_sequence

R = make_euclidean(1)
A = np.zeros(1)
r = power_norm()


def fam(*cs):
    return build_family([power_sequence(A, c, 1, label=f"{c}/n") for c in cs], A, r, R)[0]


def lin(k, label=None):
    return LiftedMap(lambda p: k * np.asarray(p, float), R, R, A, A, label or f"{k}x")


def test_lift_requires_base_match():
    with pytest.raises(ValueError):
        LiftedMap(lambda p: p + 1, R, R, A, A)


def test_identity_is_differentiable():
    F = fam(1, 2)
    d = construct_derivative(lin(1), F, F)
    assert d.report.differentiable and d.class_map == (0, 1, 2) and not d.degenerate


def test_doubling_maps_classes():
    F = fam(1, 2)
    rep = check_differentiable(lin(2), F, F)
    assert rep.condition_i and rep.condition_ii
    d = construct_derivative(lin(2), F, F)
    # 1/n (class 1) goes to 2/n (class 2)
    assert d.class_map[1] == 2
    assert d.target_quotient.rho[0, d.class_map[1]] == pytest.approx(2.0, abs=1e-6)


def test_oscillating_map_not_differentiable():
    f = LiftedMap(lambda p: np.where(p == 0, 0.0, p * np.sin(1 / np.where(p == 0, 1, p))),
                  R, R, A, A, "xsin")
    src, tgt = fam(1), fam()
    rep = check_differentiable(f, src, tgt)
    assert rep.status == "NotDifferentiable"
    assert rep.violations[0].condition == "i" and rep.violations[0].status == "Oscillating"
    with pytest.raises(NotDifferentiable):
        construct_derivative(f, src, tgt)


def test_square_is_degenerate():
    sq = LiftedMap(lambda p: np.asarray(p, float) ** 2, R, R, A, A, "sq")
    d = construct_derivative(sq, fam(1), fam())
    assert d.degenerate and d.class_map == (0, 0)


def test_representative_choice_irrelevant():
    src = build_family([power_sequence(A, 1, 1),
                        PointSequence(lambda n: np.array([1 / n + 1 / n**2]), "y")], A, r, R)[0]
    maps = {construct_derivative(lin(2), src, fam(2), seed=s).class_map for s in range(6)}
    assert len(maps) == 1


def test_chain_rule_linear():
    F = fam(1, 2, 6)
    rep = verify_chain_rule(lin(2), lin(3), F, F, F)
    assert rep.holds
    assert rep.dpsi.class_map[1] == 3  # 1/n -> 6/n


def test_chain_rule_degenerate():
    sq = LiftedMap(lambda p: np.asarray(p, float) ** 2, R, R, A, A, "sq")
    rep = verify_chain_rule(sq, lin(1, "id"), fam(1), fam(), fam())
    assert rep.holds and rep.df.degenerate and rep.dpsi.degenerate


@settings(max_examples=12, deadline=None)
@given(p=st.integers(1, 4), q=st.integers(1, 4), s=st.integers(1, 4), t=st.integers(1, 4))
def test_chain_rule_rational_slopes(p, q, s, t):
    k1, k2 = Fraction(p, q), Fraction(s, t)
    F1 = fam(1.0)
    F2 = fam(float(k1))
    F3 = fam(float(k1 * k2))
    rep = verify_chain_rule(lin(float(k1)), lin(float(k2)), F1, F2, F3)
    assert rep.holds
    for d in (rep.df, rep.dg, rep.dpsi):
        assert d.class_map[0] == d.target_quotient.projection[0]


def test_continuity_indicator():
    ind = LiftedMap(lambda p: np.where(np.asarray(p) == 0, 1.0, 0.0), R, R, A, np.ones(1), "1_{0}")
    rep = continuity_witness(ind, power_sequence(A, 1, 1))
    assert rep.discontinuous and rep.evidence and rep.delta == pytest.approx(1.0)


def test_continuity_identity():
    rep = continuity_witness(lin(1, "id"), power_sequence(A, 1, 1))
    assert not rep.discontinuous and not rep.evidence
    assert "1/n^1" in rep.stable_under
