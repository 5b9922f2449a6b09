import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from spectpp.distributions import (Exponential, Gamma, LogNormal, Mixture, Weibull, density_from_dict)
from spectpp.errors import DomainError, ParameterError


def families():
    return st.one_of(
        st.builds(Exponential, st.floats(0.1, 10)),
        st.builds(Gamma, st.floats(0.3, 8), st.floats(0.2, 5)),
        st.builds(LogNormal, st.floats(-1.5, 1.5), st.floats(0.2, 1.5)),
        st.builds(Weibull, st.floats(0.5, 5), st.floats(0.2, 5)),
    )


def test_exponential_density_at_origin():
    assert float(Exponential(1.0).pdf(1e-12)) == pytest.approx(1.0, rel=1e-9)
    assert Exponential(1.0).origin_value() == 1.0


def test_lognormal_pdf_at_one():
    assert float(LogNormal(0.0, 1.0).pdf(1.0)) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)


def test_gamma_shape_one_is_exponential():
    x = np.linspace(0.01, 5, 50)
    assert float(Gamma(1.0, 2.0).pdf(0.5)) == pytest.approx(2 * math.exp(-1), rel=1e-12)
    np.testing.assert_allclose(Gamma(1.0, 2.0).pdf(x), Exponential(2.0).pdf(x), rtol=1e-12)
    np.testing.assert_allclose(Gamma(1.0, 2.0).pdf_derivative(x), Exponential(2.0).pdf_derivative(x), rtol=1e-12)


def test_derivatives():
    assert float(Exponential(1.0).pdf_derivative(0.3)) == pytest.approx(-math.exp(-0.3), rel=1e-12)
    x = np.linspace(0.1, 4, 20)
    np.testing.assert_allclose(Weibull(1.0, 1.0).pdf_derivative(x), Exponential(1.0).pdf_derivative(x), rtol=1e-12)
    d, h = LogNormal(0.0, 1.0), 1e-6
    fd = (d.pdf(2 + h) - d.pdf(2 - h)) / (2 * h)
    assert float(d.pdf_derivative(2.0)) == pytest.approx(float(fd), rel=1e-5)


def test_inflection_examples():
    assert Exponential(3.0).inflection_points() == []
    np.testing.assert_allclose(Gamma(3.0, 1.0).inflection_points(), [2 - math.sqrt(2), 2 + math.sqrt(2)], rtol=1e-12)
    np.testing.assert_allclose(LogNormal(0.0, 1.0).inflection_points(),
                               [math.exp(0.5 * (-3 - math.sqrt(5))), math.exp(0.5 * (-3 + math.sqrt(5)))], rtol=1e-12)
    assert Gamma(0.8, 1.0).inflection_points() == []


def test_weibull_inflections_filtered():
    # k in (0.2, 1): no real roots; k <= 0.2: roots exist but are negative
    assert Weibull(0.5, 1.0).inflection_points() == []
    assert Weibull(0.1, 1.0).inflection_points() == []
    assert len(Weibull(3.0, 1.0).inflection_points()) == 2


def test_quantile_examples():
    assert Exponential(1.0).quantile(1 - math.exp(-1)) == pytest.approx(1.0, rel=1e-12)
    for d in (Exponential(2.0), Gamma(2.0, 1.0), LogNormal(0, 1), Weibull(2, 1)):
        assert float(d.quantile(0.0)) == 0.0
    m = Mixture([Exponential(1.0), Exponential(2.0)], [0.5, 0.5])
    assert float(m.cdf(m.quantile(0.5))) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(DomainError):
        Exponential(1.0).quantile(1.0)
    with pytest.raises(DomainError):
        Exponential(1.0).quantile(-0.1)


def test_sampling(rng):
    assert Exponential(1.0).sample(rng, 0).size == 0
    n = 100_000
    x = Exponential(2.0).sample(rng, n)
    assert abs(x.mean() - 0.5) <= 3 * 0.5 / math.sqrt(n)
    y = LogNormal(0.0, 0.5).sample(rng, n)
    ks = stats.kstest(y, lambda t: LogNormal(0.0, 0.5).cdf(t))
    assert ks.pvalue > 0.01


def test_mixture_sampling_matches_cdf(rng):
    m = Mixture([Gamma(2.0, 1.0), Weibull(1.5, 3.0)], [0.3, 0.7])
    ks = stats.kstest(m.sample(rng, 50_000), m.cdf)
    assert ks.pvalue > 0.01


def test_domain_and_parameter_errors():
    with pytest.raises(DomainError):
        Exponential(1.0).pdf(0.0)
    with pytest.raises(DomainError):
        LogNormal(0.0, 1.0).pdf(-1.0)
    for bad in (lambda: Exponential(0.0), lambda: Gamma(-1, 1), lambda: LogNormal(0, 0), lambda: Weibull(1, -2),
                lambda: Mixture([], []), lambda: Mixture([Exponential(1)], [0.9])):
        with pytest.raises(ParameterError):
            bad()


@settings(max_examples=40, deadline=None)
@given(families())
def test_pdf_integrates_to_one(d):
    total = integrate.quad(lambda t: float(d.pdf(t)), 0, np.inf, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(families(), st.floats(0.01, 0.99))
def test_quantile_inverts_cdf(d, p):
    assert float(d.cdf(d.quantile(p))) == pytest.approx(p, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(families(), st.floats(0.05, 10))
def test_derivative_matches_finite_difference(d, x):
    h = 1e-6 * x
    fd = (d.pdf(x + h) - d.pdf(x - h)) / (2 * h)
    assert float(d.pdf_derivative(x)) == pytest.approx(float(fd), rel=1e-4, abs=1e-10)


def test_round_trip_dict():
    m = Mixture([Exponential(1.0), LogNormal(0.2, 0.7)], [0.25, 0.75])
    assert density_from_dict(m.to_dict()) == m
    assert density_from_dict(Weibull(2, 3).to_dict()) == Weibull(2, 3)
