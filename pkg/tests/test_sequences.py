import numpy as np
import pytest
from hypothesis import given, strategies as st

from pretangent.limits import IndexSchedule, InvalidNormalizingSequence
from pretangent.sequences import (EVENS, IDENTITY, ODDS, SQUARES, NormalizingSequence, Selector,
                                  check_selector, constant_at, default_selectors,
                                  geometric_norm, interleave, mapped, power_norm, power_sequence,
                                  random_selector, tabulated, tabulated_norm)

S = IndexSchedule.geometric()


def test_builtin_selectors():
    assert [s(3) for s in (IDENTITY, EVENS, ODDS, SQUARES)] == [3, 6, 5, 9]
    for s in default_selectors(7):
        check_selector(s, S)


def test_bad_selector_rejected():
    with pytest.raises(ValueError):
        check_selector(Selector(lambda k: 5, "const"), S)


@given(st.integers(0, 2**31), st.integers(1, 10**6))
def test_random_selector_increasing(seed, k):
    s = random_selector(seed)
    assert s(k + 1) > s(k) >= 1
    assert s(k) == random_selector(seed)(k)


def test_power_sequence_and_restrict():
    x = power_sequence([1.0, 0.0], 2.0, 1.0, direction=[0.0, 1.0])
    assert np.allclose(x(4), [1.0, 0.5])
    assert np.allclose(x.restrict(EVENS)(2), x(4))


def test_interleave_and_constant():
    a = constant_at([0.0])
    z = interleave(power_sequence([0.0], 3.0), a)
    assert np.allclose(z(3), [1.0]) and np.allclose(z(4), [0.0])
    assert a.constant is not None


def test_tabulated_and_mapped():
    t = tabulated([[1.0], [2.0]])
    assert np.allclose(t(2), [2.0])
    with pytest.raises(IndexError):
        t(3)
    m = mapped(power_sequence([0.0]), lambda p: 2 * p)
    assert np.allclose(m(4), [0.5])


def test_norm_builders():
    assert power_norm(2.0, 2.0)(2) == pytest.approx(0.5)
    assert geometric_norm(1.0, 0.5)(3) == pytest.approx(0.125)
    assert tabulated_norm([1.0, 0.5])(2) == 0.5


def test_norm_check():
    with pytest.raises(InvalidNormalizingSequence):
        NormalizingSequence(lambda n: -1.0).check(S)
    power_norm().check(S)
