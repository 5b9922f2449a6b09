"""Continuous inter-event time densities on (0, inf).

Four closed-form families (exponential, Gamma, log-normal, Weibull) and
weighted mixtures of them.  Every density exposes its pdf, the first
derivative of the pdf, the interior inflection points, the CDF, quantiles
and a sampler.  All pdf evaluation goes through ``log_pdf`` so that ratios
spanning many orders of magnitude stay accurate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _positive(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("density arguments must be strictly positive")
    return x


def _check_probability(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p >= 1)) or np.any(np.isnan(p)):
        raise DomainError("quantile level must lie in [0, 1)")
    return p


def _bisect_quantile(cdf, p: float, hi: float, tol: float = 1e-10) -> float:
    """Invert a monotone CDF by bisection, stopping on probability error."""
    if p == 0.0:
        return 0.0
    lo = 0.0
    while cdf(hi) < p:
        lo, hi = hi, 2.0 * hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        c = cdf(mid)
        if abs(c - p) <= tol:
            return mid
        if c < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * hi:
            break
    return 0.5 * (lo + hi)


class Density:
    """Shared interface of the catalog densities.

    Subclasses implement ``log_pdf``, ``log_pdf_slope`` (d/dx log f), ``cdf``,
    ``inflection_points`` and ``_sample``.
    """

    kind: str = ""

    def log_pdf(self, x):
        raise NotImplementedError

    def log_pdf_slope(self, x):
        raise NotImplementedError

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def pdf_derivative(self, x):
        x = _positive(x)
        return self.log_pdf_slope(x) * self.pdf(x)

    def cdf(self, x):
        raise NotImplementedError

    def survival(self, x):
        return 1.0 - self.cdf(x)

    def log_survival(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.survival(x))

    def quantile(self, p):
        p = _check_probability(p)
        out = np.vectorize(lambda q: _bisect_quantile(self._cdf_scalar, float(q), self._scale_hint()))(p)
        return float(out) if out.ndim == 0 else out

    def _cdf_scalar(self, x: float) -> float:
        return float(self.cdf(np.asarray(x)))

    def _scale_hint(self) -> float:
        return 1.0

    def inflection_points(self) -> list[float]:
        raise NotImplementedError

    def origin_value(self) -> float | None:
        """Finite positive limit of the pdf at 0+, or None."""
        return None

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("sample count must be non-negative")
        if n == 0:
            return np.empty(0)
        return self._sample(rng, n)

    def _sample(self, rng, n):
        raise NotImplementedError

    @property
    def components(self) -> tuple["Density", ...]:
        return (self,)

    @property
    def weights(self) -> tuple[float, ...]:
        return (1.0,)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(Density):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError(f"exponential rate must be > 0, got {self.rate}")

    def log_pdf(self, x):
        x = _positive(x)
        return math.log(self.rate) - self.rate * x

    def log_pdf_slope(self, x):
        return np.full_like(np.asarray(x, dtype=float), -self.rate)

    def cdf(self, x):
        return -np.expm1(-self.rate * np.asarray(x, dtype=float))

    def log_survival(self, x):
        return -self.rate * np.asarray(x, dtype=float)

    def quantile(self, p):
        p = _check_probability(p)
        out = -np.log1p(-p) / self.rate
        return float(out) if out.ndim == 0 else out

    def inflection_points(self) -> list[float]:
        return []

    def origin_value(self):
        return self.rate

    def _sample(self, rng, n):
        return rng.exponential(1.0 / self.rate, n)

    def to_dict(self):
        return {"kind": self.kind, "params": {"rate": self.rate}}


@dataclass(frozen=True)
class Gamma(Density):
    """Gamma density with shape ``alpha`` and rate ``beta``."""

    alpha: float
    beta: float
    kind = "gamma"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ParameterError(f"gamma needs alpha, beta > 0, got {self.alpha}, {self.beta}")

    def log_pdf(self, x):
        x = _positive(x)
        a, b = self.alpha, self.beta
        return a * math.log(b) - special.gammaln(a) + (a - 1.0) * np.log(x) - b * x

    def log_pdf_slope(self, x):
        return (self.alpha - 1.0) / np.asarray(x, dtype=float) - self.beta

    def cdf(self, x):
        return special.gammainc(self.alpha, self.beta * np.asarray(x, dtype=float))

    def survival(self, x):
        return special.gammaincc(self.alpha, self.beta * np.asarray(x, dtype=float))

    def _scale_hint(self):
        return max(self.alpha, 1.0) / self.beta

    def inflection_points(self) -> list[float]:
        a, b = self.alpha, self.beta
        if a <= 1.0:
            return []
        r = math.sqrt(a - 1.0)
        roots = [(a - 1.0 - r) / b, (a - 1.0 + r) / b]
        return [x for x in roots if x > 0]

    def origin_value(self):
        return self.beta if self.alpha == 1.0 else None

    def _sample(self, rng, n):
        return rng.gamma(self.alpha, 1.0 / self.beta, n)

    def to_dict(self):
        return {"kind": self.kind, "params": {"alpha": self.alpha, "beta": self.beta}}


@dataclass(frozen=True)
class LogNormal(Density):
    mu: float
    sigma: float
    kind = "lognormal"

    def __post_init__(self):
        if not self.sigma > 0 or not math.isfinite(self.mu):
            raise ParameterError(f"lognormal needs finite mu and sigma > 0, got {self.mu}, {self.sigma}")

    def log_pdf(self, x):
        x = _positive(x)
        z = (np.log(x) - self.mu) / self.sigma
        return -0.5 * z * z - np.log(x) - math.log(self.sigma) - _LOG_SQRT_2PI

    def log_pdf_slope(self, x):
        x = np.asarray(x, dtype=float)
        return -1.0 / x - (np.log(x) - self.mu) / (self.sigma**2 * x)

    def _z(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return (np.log(x) - self.mu) / (self.sigma * math.sqrt(2.0))

    def cdf(self, x):
        return 0.5 * special.erfc(-self._z(x))

    def survival(self, x):
        return 0.5 * special.erfc(self._z(x))

    def quantile(self, p):
        p = _check_probability(p)
        out = np.exp(self.mu + self.sigma * special.ndtri(p))
        return float(out) if out.ndim == 0 else out

    def inflection_points(self) -> list[float]:
        s2 = self.sigma**2
        r = math.sqrt(1.0 + 4.0 / s2)
        return [math.exp(self.mu + 0.5 * s2 * (-3.0 - r)), math.exp(self.mu + 0.5 * s2 * (-3.0 + r))]

    def _sample(self, rng, n):
        return rng.lognormal(self.mu, self.sigma, n)

    def to_dict(self):
        return {"kind": self.kind, "params": {"mu": self.mu, "sigma": self.sigma}}


@dataclass(frozen=True)
class Weibull(Density):
    """Weibull density with shape ``k`` and scale ``scale``."""

    k: float
    scale: float
    kind = "weibull"

    def __post_init__(self):
        if not (self.k > 0 and self.scale > 0):
            raise ParameterError(f"weibull needs k, scale > 0, got {self.k}, {self.scale}")

    def log_pdf(self, x):
        x = _positive(x)
        y = x / self.scale
        return math.log(self.k / self.scale) + (self.k - 1.0) * np.log(y) - y**self.k

    def log_pdf_slope(self, x):
        x = np.asarray(x, dtype=float)
        return (self.k - 1.0) / x - (self.k / self.scale) * (x / self.scale) ** (self.k - 1.0)

    def cdf(self, x):
        return -np.expm1(-((np.asarray(x, dtype=float) / self.scale) ** self.k))

    def log_survival(self, x):
        return -((np.asarray(x, dtype=float) / self.scale) ** self.k)

    def survival(self, x):
        return np.exp(self.log_survival(x))

    def quantile(self, p):
        p = _check_probability(p)
        out = self.scale * (-np.log1p(-p)) ** (1.0 / self.k)
        return float(out) if out.ndim == 0 else out

    def inflection_points(self) -> list[float]:
        # roots of k^2 z^2 - 3k(k-1) z + (k-1)(k-2) with z = (x/scale)^k;
        # real iff k <= 1/5 or k >= 1, positive only for k > 1
        k = self.k
        disc = (k - 1.0) * (5.0 * k - 1.0)
        if disc < 0:
            return []
        r = math.sqrt(disc)
        out = []
        for z in ((3.0 * (k - 1.0) - r) / (2.0 * k), (3.0 * (k - 1.0) + r) / (2.0 * k)):
            if z > 0:
                out.append(self.scale * z ** (1.0 / k))
        return sorted(set(out))

    def origin_value(self):
        return 1.0 / self.scale if self.k == 1.0 else None

    def _sample(self, rng, n):
        return self.scale * rng.weibull(self.k, n)

    def to_dict(self):
        return {"kind": self.kind, "params": {"k": self.k, "scale": self.scale}}


class Mixture(Density):
    """Weighted mixture of catalog densities."""

    kind = "mixture"

    def __init__(self, components: Sequence[Density], weights: Sequence[float]):
        components = tuple(components)
        weights = tuple(float(w) for w in weights)
        if not components:
            raise ParameterError("mixture needs at least one component")
        if len(components) != len(weights):
            raise ParameterError("mixture weights and components differ in length")
        if any(isinstance(c, Mixture) for c in components):
            raise ParameterError("nested mixtures are not supported")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ParameterError("mixture weights must be non-negative and sum to 1")
        self._components = components
        self._weights = weights
        self._w = np.array(weights)
        self._cw = np.cumsum(self._w)

    @property
    def components(self):
        return self._components

    @property
    def weights(self):
        return self._weights

    def __eq__(self, other):
        return (isinstance(other, Mixture) and self._components == other._components
                and self._weights == other._weights)

    def __hash__(self):
        return hash((self._components, self._weights))

    def __repr__(self):
        return f"Mixture(components={list(self._components)!r}, weights={list(self._weights)!r})"

    def pdf(self, x):
        x = _positive(x)
        out = np.zeros_like(x)
        for w, c in zip(self._weights, self._components):
            out = out + w * c.pdf(x)
        return out

    def log_pdf(self, x):
        x = _positive(x)
        logs = np.stack([math.log(w) + c.log_pdf(x) if w > 0 else np.full(x.shape, -np.inf)
                         for w, c in zip(self._weights, self._components)])
        return special.logsumexp(logs, axis=0)

    def pdf_derivative(self, x):
        x = _positive(x)
        out = np.zeros_like(x)
        for w, c in zip(self._weights, self._components):
            out = out + w * c.pdf_derivative(x)
        return out

    def log_pdf_slope(self, x):
        return self.pdf_derivative(x) / self.pdf(x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, c in zip(self._weights, self._components):
            out = out + w * c.cdf(x)
        return out

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, c in zip(self._weights, self._components):
            out = out + w * c.survival(x)
        return out

    def _scale_hint(self):
        return max(float(c.quantile(0.5)) for c in self._components) + 1e-12

    def inflection_points(self) -> list[float]:
        """Union of the component inflection points.

        These are the edges a shared grid must contain; they are not the
        roots of the mixture's own second derivative.
        """
        return sorted({x for c in self._components for x in c.inflection_points()})

    def origin_value(self):
        vals = [c.origin_value() for c in self._components]
        if any(v is None for v in vals):
            return None
        return float(sum(w * v for w, v in zip(self._weights, vals)))

    def _sample(self, rng, n):
        idx = np.searchsorted(self._cw, rng.random(n), side="right")
        idx = np.minimum(idx, len(self._components) - 1)
        out = np.empty(n)
        for i, c in enumerate(self._components):
            mask = idx == i
            m = int(mask.sum())
            if m:
                out[mask] = c.sample(rng, m)
        return out

    def to_dict(self):
        return {"weights": list(self._weights), "components": [c.to_dict() for c in self._components]}


AnyDensity = Union[Exponential, Gamma, LogNormal, Weibull, Mixture]

_KINDS = {"exponential": Exponential, "gamma": Gamma, "lognormal": LogNormal, "weibull": Weibull}


def density_from_dict(d: dict) -> Density:
    if "components" in d:
        return Mixture([density_from_dict(c) for c in d["components"]], d["weights"])
    try:
        cls = _KINDS[d["kind"]]
    except KeyError:
        raise ParameterError(f"unknown density kind {d.get('kind')!r}") from None
    return cls(**d["params"])
