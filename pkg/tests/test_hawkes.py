import math

import numpy as np
import pytest
from scipy import integrate, stats

from spectpp.errors import ParameterError
from spectpp.events import EventSeq
from spectpp.hawkes import (HawkesParams, HawkesProcess, _max_log_ratio, hawkes_constants, hawkes_intensity,
                            make_hawkes_config, spectral_radius, thinning_sample, time_constants)
from spectpp.models import sequence_log_likelihood
from spectpp.oracles import hawkes_dense_const
from spectpp.sampler import autoregressive_sample


def one_d(mu=0.5, a=0.3, w=1.0):
    return HawkesParams(np.array([mu]), np.array([[a]]), w)


def test_intensity_examples():
    p = one_d()
    assert hawkes_intensity(p, EventSeq.empty(), 3.0, 0) == 0.5
    # an event just after 0 stands in for one at 0
    h = EventSeq(np.array([1e-12]), np.array([0]), 1e-12)
    assert hawkes_intensity(p, h, 1.0, 0) == pytest.approx(0.5 + 0.3 * math.exp(-1), rel=1e-9)
    assert hawkes_intensity(p, h, 1.0, 0) == pytest.approx(0.61036, abs=1e-5)
    z = HawkesParams(np.array([0.2, 0.4]), np.zeros((2, 2)), 1.0)
    h2 = EventSeq(np.array([0.5, 1.0]), np.array([0, 1]), 1.0)
    assert hawkes_intensity(z, h2, 2.0, 1) == 0.4


def test_poisson_reduction():
    m = HawkesProcess(HawkesParams(np.array([0.2, 0.6]), np.zeros((2, 2)), 1.0))
    nxt = m.decode(m.initial_state())
    tau = np.linspace(0.01, 5, 20)
    np.testing.assert_allclose(nxt.time_pdf(tau), 0.8 * np.exp(-0.8 * tau), rtol=1e-12)
    np.testing.assert_allclose(nxt.mark_probs(tau)[0], [0.25, 0.75])


def test_density_normalizes():
    m = HawkesProcess(one_d(0.5, 0.6, 2.0))
    s = m.advance(m.advance(m.initial_state(), 0.1, 0), 0.2, 0)
    nxt = m.decode(s)
    total = integrate.quad(lambda t: float(nxt.time_pdf(t)), 0, np.inf)[0]
    assert total + nxt.time_survival_limit() == pytest.approx(1.0, abs=1e-6)
    lam0 = nxt.intensity(0.0).sum()
    assert float(nxt.time_pdf(0.0)) == pytest.approx(lam0)


def test_density_intensity_consistency(rng):
    params = make_hawkes_config(4, 0.3, 0.6, 1.3, rng)
    m = HawkesProcess(params)
    for _ in range(100):
        n = int(rng.integers(0, 6))
        h = EventSeq.from_deltas(rng.exponential(1, n), rng.integers(0, 4, n)) if n else EventSeq.empty()
        tau, x = float(rng.exponential(1.0)), int(rng.integers(4))
        nxt = m.decode(m.encode(h))
        lam = hawkes_intensity(params, h, h.last_time + tau, x)
        direct = math.log(lam) + float(nxt.log_survival(tau))
        assert float(nxt.log_prob(tau, x)) == pytest.approx(direct, rel=1e-8)


def test_incremental_matches_encode(rng):
    m = HawkesProcess(make_hawkes_config(5, 0.5, 0.5, 0.7, rng))
    taus, marks = rng.exponential(1, 30), rng.integers(0, 5, 30)
    s = m.initial_state()
    for t, x in zip(taus, marks):
        s = m.advance(s, t, x)
    full = m.encode(EventSeq.from_deltas(taus, marks))
    np.testing.assert_allclose(s.excitation, full.excitation, atol=1e-12)
    chain = m.advance_chain(m.initial_state(), taus, marks)
    np.testing.assert_allclose(chain[len(chain) - 1].excitation, full.excitation, atol=1e-12)


def test_stability_gate():
    with pytest.raises(ParameterError):
        one_d(a=1.0)
    with pytest.raises(ParameterError):
        HawkesParams(np.array([1.0, 1.0]), np.array([[0.5, 0.6], [0.6, 0.5]]), 1.0)


def test_make_config_examples(rng):
    assert np.all(make_hawkes_config(10, 1.0, 0.5, 1.0, rng).adjacency == 0)
    p = make_hawkes_config(10, 0.0, 0.05, 1.0, rng)
    assert np.count_nonzero(p.adjacency) == 100
    p = make_hawkes_config(40, 0.5, 1.0, 1.0, rng)
    assert spectral_radius(p.adjacency) <= 0.95 + 1e-12
    assert p.rescale < 1
    v = rng.random(40)
    for _ in range(500):
        v = p.adjacency @ v
        v /= np.linalg.norm(v)
    assert np.linalg.norm(p.adjacency @ v) <= 0.95 + 1e-9
    assert np.mean(make_hawkes_config(10, 0.9, 0.5, 1.0, rng).adjacency == 0) >= 0.9


def test_thinning_stationary_rate():
    m = HawkesProcess(HawkesParams(np.array([1.0]), np.array([[0.5]]), 1.0))
    rates = [len(thinning_sample(m, EventSeq.empty(), 1000.0, np.random.default_rng(s))) / 1000.0
             for s in range(50)]
    # burn-in from an empty history lowers the mean slightly; the 3 sigma band is wide enough
    se = np.std(rates, ddof=1) / math.sqrt(len(rates))
    assert abs(np.mean(rates) - 2.0) <= 3 * se + 0.01


def test_thinning_poisson_count():
    m = HawkesProcess(HawkesParams(np.array([2.0]), np.array([[0.0]]), 1.0))
    n = [len(thinning_sample(m, EventSeq.empty(), 100.0, np.random.default_rng(s))) for s in range(40)]
    assert abs(np.mean(n) - 200) <= 3 * math.sqrt(200 / 40)


def test_ancestral_matches_thinning():
    m = HawkesProcess(HawkesParams(np.array([0.4, 0.3]), np.array([[0.3, 0.1], [0.2, 0.4]]), 1.5))
    rng = np.random.default_rng(8)
    a = np.concatenate([autoregressive_sample(m, EventSeq.empty(), 200, r).taus for r in rng.spawn(100)])
    b = []
    for r in rng.spawn(200):
        s = thinning_sample(m, EventSeq.empty(), 200.0, r)
        b.append(s.taus[:200])
    b = np.concatenate(b)
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_likelihood_forms_agree(rng):
    params = make_hawkes_config(3, 0.3, 0.6, 1.0, rng)
    m = HawkesProcess(params)
    seq = autoregressive_sample(m, EventSeq.empty(), 40, rng)
    seq = EventSeq(seq.times, seq.marks, seq.last_time + 0.7)
    ll = sequence_log_likelihood(m, seq)
    logs = sum(math.log(hawkes_intensity(params, seq, t, x)) for t, x in zip(seq.times, seq.marks))
    comp = sum(integrate.quad(lambda t: sum(hawkes_intensity(params, seq, t, d) for d in range(3)), a, b)[0]
               for a, b in zip(np.r_[0, seq.times], np.r_[seq.times, seq.t_end]))
    assert ll == pytest.approx(logs - comp, rel=1e-5)


def test_poisson_likelihood():
    m = HawkesProcess(HawkesParams(np.array([1.5]), np.array([[0.0]]), 1.0))
    seq = EventSeq(np.array([0.5, 1.0, 2.5]), np.array([0, 0, 0]), 4.0)
    assert sequence_log_likelihood(m, seq) == pytest.approx(3 * math.log(1.5) - 1.5 * 4.0)
    assert sequence_log_likelihood(m, EventSeq.empty(4.0)) == pytest.approx(-6.0)


def test_max_log_ratio_brute_force(rng):
    u = np.linspace(0, 1, 200_001)
    for _ in range(200):
        a, b, c = rng.uniform(0.01, 2, 3) * (rng.random(3) > 0.1)
        k = rng.normal(0, 2)
        if a == 0 and (b == 0 or c == 0):
            continue
        with np.errstate(all="ignore"):
            f = np.log(a + b * u) - np.log(a + c * u) + k * (1 - u)
        f = f[np.isfinite(f)]
        if f.size == 0:
            continue
        got = float(_max_log_ratio(a, b, c, k))
        assert got >= float(f.max()) - 1e-12
        assert got <= float(f.max()) + 1e-4


def test_constants_match_dense_oracle(rng):
    m = HawkesProcess(make_hawkes_config(4, 0.3, 0.5, 1.0, rng, baseline=np.full(4, 0.3)))
    s0 = m.advance(m.initial_state(), 0.3, 1)
    targets = [m.advance(s0, float(t), int(x)) for t, x in zip(rng.exponential(1, 5), rng.integers(0, 4, 5))]
    p = m.decode(s0)
    t_c, j_c = hawkes_constants(p, [m.decode(s) for s in targets])
    for s, jc in zip(targets, j_c):
        o = hawkes_dense_const(p, m.decode(s), 60.0, 50_000).constant
        assert jc >= o * (1 - 1e-9)
        assert jc == pytest.approx(o, rel=1e-4)
    tc = time_constants(p.time, [m.decode(s).time for s in targets])
    np.testing.assert_allclose(tc, t_c, rtol=1e-12)
    assert np.all(j_c >= t_c * (1 - 1e-12))


def test_identical_states_constant_one():
    m = HawkesProcess(one_d())
    s = m.advance(m.initial_state(), 1.0, 0)
    t_c, j_c = hawkes_constants(m.decode(s), [m.decode(s)])
    assert t_c[0] == pytest.approx(1.0) and j_c[0] == pytest.approx(1.0)


def test_params_round_trip(rng):
    p = make_hawkes_config(3, 0.5, 0.5, 1.0, rng)
    q = HawkesParams.from_dict(p.to_dict())
    np.testing.assert_array_equal(p.adjacency, q.adjacency)
    assert q.rescale == p.rescale
