import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pretangent.family import (NotSelfStable, PairKind, QuotientInconsistency, assemble_family,
                               build_family, classify_normalizing_pair, embed_subsequence,
                               is_confluent, metric_identification, mutual_stability,
                               quotient_from_values, tangency_probe)
from pretangent.metric import make_euclidean, make_finite
from pretangent.sequences import (EVENS, IDENTITY, SQUARES, PointSequence, constant_at,
                                  default_selectors, interleave, power_norm, power_sequence)

R = make_euclidean(1)
A = [0.0]
a = constant_at(A)
r = power_norm()
x = power_sequence(A, 1, 1, label="1/n")
y = PointSequence(lambda n: np.array([1 / n + 1 / n**2]), "1/n+1/n^2")
osc = interleave(power_sequence(A, 3, 1), a, label="osc")


def test_mutual_stability_examples():
    assert mutual_stability(a, a, r, R).value == 0
    v = mutual_stability(x, a, r, R)
    assert v.converged and v.value == pytest.approx(1.0, abs=1e-9)
    assert mutual_stability(x, osc, r, R).status.value == "Oscillating"


def test_singleton_family():
    fam, rej = build_family([], A, r, R)
    assert len(fam) == 1 and fam.values.tolist() == [[0.0]] and rej == []
    q = metric_identification(fam)
    assert q.classes == ((0,),) and q.rho.tolist() == [[0.0]]


def test_two_candidates_collapse():
    fam, rej = build_family([x, y], A, r, R)
    assert len(fam) == 3 and not rej
    v = fam.values
    assert v[1, 2] == pytest.approx(0, abs=1e-9)
    assert v[0, 1] == pytest.approx(1, abs=1e-9) and v[0, 2] == pytest.approx(1, abs=1e-9)
    q = metric_identification(fam)
    assert q.classes == ((0,), (1, 2))
    assert q.rho[0, 1] == pytest.approx(1.0, abs=1e-6)


def test_oscillating_candidate_rejected():
    fam, rej = build_family([x, osc], A, r, R)
    assert len(fam) == 2 and len(rej) == 1
    assert rej[0].candidate is osc and rej[0].verdict.status.value == "Oscillating"
    assert rej[0].to_dict()["kind"] == "Unstable"


def test_three_classes():
    z = power_sequence(A, 2, 1, label="2/n")
    q = metric_identification(build_family([x, z], A, r, R)[0])
    assert len(q) == 3
    assert np.allclose(q.rho, [[0, 1, 2], [1, 0, 1], [2, 1, 0]], atol=1e-6)


def test_assemble_rejects_unstable():
    with pytest.raises(NotSelfStable) as e:
        assemble_family([a, x, osc], A, r, R)
    assert e.value.pair == (0, 2)


def test_quotient_inconsistency():
    # 0~1 and 1~2 chain but d(0,2) is far above the tolerance
    v = np.array([[0, 0, 1e-3], [0, 0, 0], [1e-3, 0, 0]], float)
    v = np.pad(v, ((0, 1), (0, 1)), constant_values=1.0)
    v[3, 3] = 0
    with pytest.raises(QuotientInconsistency):
        quotient_from_values(v, zero_tol=1e-4)


@pytest.mark.parametrize("sel", [IDENTITY, EVENS, SQUARES])
def test_embedding_preserves_distances(sel):
    fam, _ = build_family([x, y], A, r, R)
    rep = embed_subsequence(fam, sel)
    assert rep.distance_preserving and rep.class_map == (0, 1)


def test_all_default_selectors_embed():
    fam, _ = build_family([x, power_sequence(A, 2, 1)], A, r, R)
    for sel in default_selectors(3):
        assert embed_subsequence(fam, sel).distance_preserving, sel.name


def test_tangency_probe_pool_is_family():
    fam, _ = build_family([x], A, r, R)
    assert tangency_probe(fam, list(fam.members)).tangent_within_pool


def test_tangency_probe_witness():
    fam, _ = build_family([x], A, r, R)
    z = PointSequence(lambda n: np.array([(2 + (-1) ** n) / n]), "z")
    rep = tangency_probe(fam, [x, z])
    assert rep.verdict == "Not-tangent"
    evens = next(s for s in rep.results if s.selector == "evens")
    assert evens.witnesses[0][0] == "z"
    assert evens.witnesses[0][1] == pytest.approx(2.0, abs=1e-6)  # 3/n vs 1/n


def test_tangency_probe_collapsing_extension():
    fam, _ = build_family([x], A, r, R)
    assert tangency_probe(fam, [y]).tangent_within_pool


def test_classify_ratio_equivalent():
    v = classify_normalizing_pair(r, power_norm(2.0), A, R, [])
    assert v.kind is PairKind.RATIO_EQUIVALENT and v.c == pytest.approx(0.5, abs=1e-9)


def test_classify_not_equivalent():
    v = classify_normalizing_pair(r, power_norm(1, 2), A, R, [x])
    assert v.kind is PairKind.NOT_EQUIVALENT and v.witness == "1/n"


def test_classify_isolated_point():
    X = make_finite([[0, 1], [1, 0]])
    pool = [constant_at(1), PointSequence(lambda n: 0 if n > 3 else 1, "eventually a")]
    for t in (power_norm(1, 2), power_norm(5.0)):
        assert classify_normalizing_pair(r, t, 0, X, pool).kind is PairKind.CONFLUENT
    assert is_confluent(r, 0, X, pool).confluent


def test_confluence_examples():
    c = is_confluent(r, A, R, [x])
    assert not c.confluent and c.witness is x
    assert is_confluent(power_norm(1, 0.5), A, R, [x]).confluent


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.sampled_from([1.0, 2.0])), min_size=1, max_size=4))
def test_pseudometric_and_quotient_soundness(spec):
    cands = [PointSequence(lambda n, c=c, p=p: np.array([c / n + 1 / n**p]), f"{c}/n+n^-{p}")
             for c, p in spec]
    fam, _ = build_family(cands, A, r, R)
    v = fam.values
    assert np.array_equal(v, v.T)
    q = metric_identification(fam)
    assert fam.triangle_defect() <= 1e-6 * max(q.scale, 1.0)
    for i in range(len(v)):
        for j in range(len(v)):
            same = q.projection[i] == q.projection[j]
            assert (v[i, j] <= q.zero_tol) == same
    # representative independence
    for p, cp in enumerate(q.classes):
        for s, cs in enumerate(q.classes):
            block = v[np.ix_(cp, cs)]
            assert np.ptp(block) <= 2 * q.zero_tol * max(q.scale, 1.0)


@settings(max_examples=10, deadline=None)
@given(c=st.floats(0.1, 4), seed=st.integers(0, 1000))
def test_subsequence_invariance(c, seed):
    fam, _ = build_family([power_sequence(A, c, 1), y], A, r, R)
    for sel in default_selectors(seed):
        rep = embed_subsequence(fam, sel)
        slack = fam.errors + rep.restricted.errors + 1e-9
        assert np.all(np.abs(fam.values - rep.restricted.values) <= slack)
