import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectpp.categorical import (CategoricalDist, acceptance, effective_tv, exact_const, rejection_sample,
                                 truncated_const)
from spectpp.errors import ParameterError, UnboundedRatioError

PT = CategoricalDist([0.95, 0.05])
PP = CategoricalDist([0.99, 0.01])


def probs(d):
    return st.lists(st.floats(0.01, 1.0), min_size=d, max_size=d).map(lambda w: CategoricalDist.normalized(w))


def test_exact_const_examples():
    assert exact_const(PT, PP) == pytest.approx(5.0)
    assert exact_const(PP, PP) == 1.0
    assert exact_const(CategoricalDist([0.2, 0.3, 0.5]), CategoricalDist([0.5, 0.3, 0.2])) == pytest.approx(2.5)


def test_support_mismatch():
    t, p = CategoricalDist([0.5, 0.5]), CategoricalDist([1.0, 0.0])
    with pytest.raises(UnboundedRatioError):
        exact_const(t, p)
    assert exact_const(t, p, allow_unbounded=True) == np.inf
    # categories the target never emits do not count
    assert exact_const(p, t) == 2.0


def test_truncated_examples():
    r = truncated_const(PT, PP, 0.1)
    assert r.excluded == (1,)
    assert r.constant == pytest.approx(0.95 / 0.99)
    assert r.tv_bound == pytest.approx(0.05)
    assert r.effective_tv == pytest.approx(0.05 * (1 - (0.95 / 0.99) * 0.01 / 0.05))
    assert r.effective_tv == pytest.approx(0.04040, abs=1e-5)
    r = truncated_const(PT, PP, 0.01)
    assert r.excluded == () and r.constant == pytest.approx(5.0)


def test_effective_tv_edges():
    assert effective_tv(PT, PP, 5.0, []) == 0.0
    assert effective_tv(PT, PP, 5.0, [1]) == 0.0


def test_literal_rule_can_exceed_delta():
    t = CategoricalDist([0.5, 0.3, 0.2])
    p = CategoricalDist([0.8, 0.1, 0.1])
    lit = truncated_const(t, p, 0.25, literal=True)
    cor = truncated_const(t, p, 0.25)
    assert cor.tv_bound < 0.25
    assert lit.tv_bound > 0.25


def test_delta_validation():
    with pytest.raises(ValueError):
        truncated_const(PT, PP, 1.0)
    with pytest.raises(ParameterError):
        CategoricalDist([0.5, 0.6])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(lambda d: st.tuples(probs(d), probs(d))), st.floats(0.0, 0.9))
def test_truncation_properties(pair, delta):
    t, p = pair
    r = truncated_const(t, p, delta)
    assert r.tv_bound <= delta or (delta == 0 and r.tv_bound == 0)
    assert r.effective_tv <= r.tv_bound + 1e-15
    assert r.constant <= exact_const(t, p) + 1e-15
    if delta == 0:
        assert r.constant == exact_const(t, p) and r.excluded == ()


def test_rejection_sampling_exact(rng):
    n = 1_000_000
    x, ok = rejection_sample(PT, PP, 5.0, rng, n)
    acc = x[ok]
    freq = np.bincount(acc, minlength=2) / acc.size
    sigma = np.sqrt(PT.probs * (1 - PT.probs) / acc.size)
    assert np.all(np.abs(freq - PT.probs) <= 3 * sigma)
    assert ok.mean() == pytest.approx(1 / 5.0, abs=3e-3)


def test_rejection_sampling_truncated_tv(rng):
    r = truncated_const(PT, PP, 0.1)
    x, ok = rejection_sample(PT, PP, r.constant, rng, 1_000_000)
    acc = x[ok]
    freq = np.bincount(acc, minlength=2) / acc.size
    tv = 0.5 * np.abs(freq - PT.probs).sum()
    sigma = np.sqrt(0.05 * 0.95 / acc.size)
    assert tv <= r.effective_tv + 3 * sigma


def test_identical_always_accepted(rng):
    _, ok = rejection_sample(PP, PP, 1.0, rng, 1000)
    assert ok.all()
    x, ok1 = rejection_sample(PP, PP, 1.0, rng)
    assert isinstance(x, int) and ok1 is True


def test_infinite_constant_rejects():
    assert np.all(acceptance(PT, PP, np.inf, [0, 1]) == 0)
