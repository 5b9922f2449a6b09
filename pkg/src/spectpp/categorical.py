"""Rejection constants for categorical distributions.

Used for marks and for inter-event times quantized into bins.  Besides the
exact constant (the largest probability ratio) this module implements the
delta-truncated constant, which ignores the highest-ratio categories as long
as their combined target mass stays below ``delta``; the resulting sampler
is within total variation ``delta`` of the target.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UnboundedRatioError


class CategoricalDist:
    """Probability vector over ``D`` categories."""

    __slots__ = ("probs", "_cum")

    def __init__(self, probs):
        p = np.array(probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ParameterError("categorical probabilities must be a non-empty vector")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ParameterError("categorical probabilities must be non-negative and sum to 1")
        p.flags.writeable = False
        self.probs = p
        self._cum = np.cumsum(p)

    @classmethod
    def normalized(cls, weights) -> "CategoricalDist":
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum())

    def __len__(self):
        return self.probs.size

    def __eq__(self, other):
        return isinstance(other, CategoricalDist) and np.array_equal(self.probs, other.probs)

    __hash__ = None

    def __repr__(self):
        return f"CategoricalDist({self.probs.tolist()})"

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = np.searchsorted(self._cum, rng.random(n) * self._cum[-1], side="right")
        return np.minimum(idx, self.probs.size - 1)

    def log_pmf(self, x) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs[np.asarray(x, dtype=int)])

    def to_list(self) -> list[float]:
        return self.probs.tolist()


@dataclass(frozen=True)
class TruncatedConstResult:
    constant: float
    excluded: tuple[int, ...]
    tv_bound: float
    effective_tv: float


def _ratios(p_t: CategoricalDist, p_p: CategoricalDist) -> np.ndarray:
    if len(p_t) != len(p_p):
        raise ParameterError("categorical distributions differ in size")
    t, q = p_t.probs, p_p.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(t > 0, t / q, 0.0)
    return r


def exact_const(p_t: CategoricalDist, p_p: CategoricalDist, allow_unbounded: bool = False) -> float:
    """``max_x p_t(x) / p_p(x)``; categories the target never emits count as 0.

    With ``allow_unbounded`` a support mismatch yields ``inf`` instead of an
    error.  An infinite constant still defines a valid (always rejecting)
    rejection step, which the speculative sampler relies on.
    """
    m = float(np.max(_ratios(p_t, p_p)))
    if np.isinf(m) and not allow_unbounded:
        raise UnboundedRatioError("target puts mass on a category with zero proposal probability")
    return m


def effective_tv(p_t: CategoricalDist, p_p: CategoricalDist, constant: float, excluded) -> float:
    excluded = list(excluded)
    if not excluded:
        return 0.0
    t = p_t.probs[excluded]
    q = p_p.probs[excluded]
    cover = np.minimum(1.0, constant * q / t) if np.isfinite(constant) else np.ones_like(t)
    return float(np.sum(t * (1.0 - cover)))


def truncated_const(p_t: CategoricalDist, p_p: CategoricalDist, delta: float,
                    allow_unbounded: bool = False, literal: bool = False) -> TruncatedConstResult:
    """Delta-truncated rejection constant.

    Ratios are sorted descending (ties by ascending index) and the longest
    prefix whose cumulative target mass is strictly below ``delta`` is
    excluded.  ``literal=True`` instead applies the textbook rule "first
    prefix reaching delta, then take the next ratio", whose excluded mass can
    exceed ``delta``; it exists only for comparison.
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    r = _ratios(p_t, p_p)
    order = np.lexsort((np.arange(r.size), -r))
    cum = np.cumsum(p_t.probs[order])
    if literal and delta > 0:
        i_star = int(np.searchsorted(cum, delta, side="left"))
        pos = min(i_star + 1, r.size - 1)
    else:
        pos = int(np.searchsorted(cum, delta, side="left"))
    pos = min(pos, r.size - 1)
    m = float(r[order[pos]])
    if np.isinf(m) and not allow_unbounded:
        raise UnboundedRatioError("target puts mass on a category with zero proposal probability")
    excluded = tuple(sorted(int(i) for i in np.flatnonzero(r > m)))
    tv = float(p_t.probs[list(excluded)].sum()) if excluded else 0.0
    return TruncatedConstResult(m, excluded, tv, effective_tv(p_t, p_p, m, excluded))


def acceptance(p_t: CategoricalDist, p_p: CategoricalDist, constant: float, x) -> np.ndarray:
    """Per-draw acceptance probability ``min(1, p_t(x) / (M p_p(x)))``."""
    x = np.asarray(x, dtype=int)
    t = p_t.probs[x]
    q = p_p.probs[x]
    if np.any(q <= 0):
        raise UnboundedRatioError("acceptance requested for a category the proposal cannot emit")
    if np.isinf(constant):
        return np.zeros(x.shape)
    return np.minimum(1.0, t / (constant * q))


def rejection_sample(p_t: CategoricalDist, p_p: CategoricalDist, constant: float,
                     rng: np.random.Generator, n: int | None = None):
    """Draw from ``p_p`` and accept with ``min(1, p_t / (M p_p))``.

    Returns ``(category, accepted)``; with ``n`` given, arrays of that length.
    """
    if not constant > 0:
        raise ValueError("rejection constant must be positive")
    size = 1 if n is None else n
    x = p_p.sample(rng, size)
    ok = rng.random(size) < acceptance(p_t, p_p, constant, x)
    if n is None:
        return int(x[0]), bool(ok[0])
    return x, ok
