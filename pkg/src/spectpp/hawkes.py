"""Multivariate Hawkes process with exponential kernel.

Kernel convention: an event of mark ``j`` raises the intensity of mark ``i``
by ``A[i, j] * w * exp(-w s)`` after a lag ``s``, so ``A`` holds branching
weights and stability means spectral radius of ``A`` below one.

The model state is the per-mark excitation right after the last event,
``e_i = sum_j A[i, x_j] w exp(-w (t_last - t_j))``.  Between events the
intensity is ``mu + e * u`` with ``u = exp(-w s)``, which gives closed forms
for the next-event density, the survival function and the rejection
constant between two states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .categorical import CategoricalDist
from .events import EventSeq, FactorizedNext, TPPModel


def spectral_radius(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(a)))) if a.size else 0.0


@dataclass(frozen=True, eq=False)
class HawkesParams:
    baseline: np.ndarray
    adjacency: np.ndarray
    decay: float
    rescale: float = 1.0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.baseline, dtype=float))
        a = np.atleast_2d(np.asarray(self.adjacency, dtype=float))
        object.__setattr__(self, "baseline", mu)
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "decay", float(self.decay))
        if a.shape != (mu.size, mu.size):
            raise ParameterError(f"adjacency shape {a.shape} does not match {mu.size} marks")
        if np.any(mu < 0) or np.any(a < 0):
            raise ParameterError("baselines and adjacency entries must be non-negative")
        if not self.decay > 0:
            raise ParameterError("decay must be positive")
        rho = spectral_radius(a)
        if rho >= 1.0:
            raise ParameterError(f"adjacency spectral radius {rho:.4f} >= 1: process is unstable")

    @property
    def dim(self) -> int:
        return self.baseline.size

    def to_dict(self) -> dict:
        return {"kind": "hawkes", "baseline": self.baseline.tolist(),
                "adjacency": self.adjacency.tolist(), "decay": self.decay, "rescale": self.rescale}

    @classmethod
    def from_dict(cls, d: dict) -> "HawkesParams":
        return cls(np.asarray(d["baseline"]), np.asarray(d["adjacency"]), d["decay"], d.get("rescale", 1.0))


def make_hawkes_config(dim: int, sparsity: float, a_max: float, decay: float,
                       rng: np.random.Generator, baseline=None, max_radius: float = 0.95) -> HawkesParams:
    """Random adjacency with entries ~ U(0, a_max) and a ``sparsity`` fraction zeroed.

    The matrix is scaled down to spectral radius ``max_radius`` if needed;
    the applied factor is kept in ``rescale``.
    """
    if dim < 1 or not 0.0 <= sparsity <= 1.0:
        raise ParameterError("need dim >= 1 and sparsity in [0, 1]")
    a = rng.uniform(0.0, a_max, (dim, dim))
    n_zero = int(round(sparsity * dim * dim))
    if n_zero:
        a.flat[rng.choice(dim * dim, n_zero, replace=False)] = 0.0
    rho = spectral_radius(a)
    scale = 1.0
    if rho > max_radius:
        scale = max_radius / rho
        a = a * scale
    if baseline is None:
        baseline = rng.uniform(0.5, 1.0, dim) / dim
    return HawkesParams(np.broadcast_to(np.asarray(baseline, dtype=float), (dim,)).copy(), a, decay, scale)


def hawkes_intensity(params: HawkesParams, history: EventSeq, t: float, d: int) -> float:
    """Conditional intensity of mark ``d`` at time ``t`` by direct summation."""
    past = history.times < t
    lags = t - history.times[past]
    w = params.decay
    return float(params.baseline[d] + np.sum(params.adjacency[d, history.marks[past]] * w * np.exp(-w * lags)))


@dataclass(frozen=True, eq=False)
class HawkesState:
    excitation: np.ndarray
    t: float


@dataclass(frozen=True, eq=False)
class HawkesNext:
    """Joint law of the next (delay, mark) given a Hawkes state."""

    baseline: np.ndarray
    excitation: np.ndarray
    decay: float
    _mu_tot: float = field(init=False, repr=False)
    _e_tot: float = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_mu_tot", float(self.baseline.sum()))
        object.__setattr__(self, "_e_tot", float(self.excitation.sum()))

    def __eq__(self, other):
        return (isinstance(other, HawkesNext) and self.decay == other.decay
                and np.array_equal(self.baseline, other.baseline)
                and np.array_equal(self.excitation, other.excitation))

    __hash__ = None

    def intensity(self, tau) -> np.ndarray:
        """Per-mark intensity at delays ``tau``; shape ``tau.shape + (D,)``."""
        u = np.exp(-self.decay * np.asarray(tau, dtype=float))
        return self.baseline + self.excitation * u[..., None]

    def total_intensity(self, tau):
        return self._mu_tot + self._e_tot * np.exp(-self.decay * np.asarray(tau, dtype=float))

    def compensator(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self._mu_tot * tau - self._e_tot / self.decay * np.expm1(-self.decay * tau)

    def log_survival(self, tau):
        return -self.compensator(tau)

    def time_pdf(self, tau):
        return self.total_intensity(tau) * np.exp(-self.compensator(tau))

    def log_prob(self, tau, mark):
        tau = np.asarray(tau, dtype=float)
        mark = np.asarray(mark, dtype=int)
        lam = self.baseline[mark] + self.excitation[mark] * np.exp(-self.decay * tau)
        with np.errstate(divide="ignore"):
            return np.log(lam) - self.compensator(tau)

    def mark_probs(self, tau) -> np.ndarray:
        lam = self.intensity(tau)
        return lam / lam.sum(axis=-1, keepdims=True)

    @property
    def time(self) -> HawkesTime:
        return HawkesTime(self._mu_tot, self._e_tot, self.decay)

    def time_survival_limit(self) -> float:
        """Probability that no further event ever occurs."""
        return math.exp(-self._e_tot / self.decay) if self._mu_tot == 0 else 0.0

    def sample(self, rng: np.random.Generator, n: int):
        """Draw ``n`` independent (delay, mark) pairs by thinning.

        The total intensity only decays between events, so its value at the
        current candidate bounds it for the rest of the search.
        """
        tau = self.time.sample(rng, n)
        if self.baseline.size == 1:
            return tau, np.zeros(n, dtype=int)
        lam = self.intensity(tau)
        cum = np.cumsum(lam, axis=1)
        marks = (cum < rng.random(n)[:, None] * cum[:, -1:]).sum(axis=1)
        return tau, np.minimum(marks, self.baseline.size - 1)


@dataclass(frozen=True)
class HawkesTime:
    """Marginal law of the next delay: total intensity ``m + e * exp(-w tau)``."""

    mu_total: float
    e_total: float
    decay: float

    def total_intensity(self, tau):
        return self.mu_total + self.e_total * np.exp(-self.decay * np.asarray(tau, dtype=float))

    def compensator(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.mu_total * tau - self.e_total / self.decay * np.expm1(-self.decay * tau)

    def log_pdf(self, tau):
        with np.errstate(divide="ignore"):
            return np.log(self.total_intensity(tau)) - self.compensator(tau)

    def pdf(self, tau):
        return np.exp(self.log_pdf(tau))

    def log_survival(self, tau):
        return -self.compensator(tau)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.mu_total <= 0:
            raise ParameterError("sampling needs a positive total baseline")
        tau = np.zeros(n)
        pending = np.arange(n)
        while pending.size:
            cur = tau[pending]
            lam_max = self.total_intensity(cur)
            cand = cur + rng.exponential(1.0, pending.size) / lam_max
            u = rng.random(pending.size)
            tau[pending] = cand
            pending = pending[u * lam_max > self.total_intensity(cand)]
        return tau


def time_constants(proposal: HawkesTime, targets: list[HawkesTime]) -> np.ndarray:
    """Exact sup of the delay-density ratio for each target against the proposal."""
    e_t = np.array([t.e_total for t in targets])
    k = -(e_t - proposal.e_total) / proposal.decay
    return np.exp(_max_log_ratio(proposal.mu_total, e_t, proposal.e_total, k))


def _max_log_ratio(a, b, c, k):
    """Max over u in [0, 1] of ``log((a + b u) / (a + c u)) + k (1 - u)``, broadcast.

    Stationary points solve ``k b c u^2 + k a (b + c) u + k a^2 - a (b - c) = 0``;
    the maximum is taken over those in [0, 1] and both end points.
    """
    a, b, c, k = (np.asarray(v, dtype=float) for v in (a, b, c, k))
    with np.errstate(all="ignore"):
        q2 = k * b * c
        q1 = k * a * (b + c)
        q0 = k * a * a - a * (b - c)
        sq = np.sqrt(q1 * q1 - 4.0 * q2 * q0)
        quad = q2 != 0
        r1 = np.where(quad, (-q1 - sq) / (2.0 * q2), -q0 / q1)
        r2 = (-q1 + sq) / (2.0 * q2)
        # end points: u = 1 gives the value at tau = 0, u = 0 the limit tau -> inf
        at1 = np.log(a + b) - np.log(a + c)
        at0 = np.where(a > 0, 0.0, np.log(b) - np.log(c)) + k
        best = np.fmax(at0, at1)
        for r in (r1, r2):
            u = np.minimum(np.maximum(np.where(np.isfinite(r), r, 1.0), 0.0), 1.0)
            best = np.fmax(best, np.log(a + b * u) - np.log(a + c * u) + k * (1.0 - u))
    # nan survives only from 0/0: the mark is impossible under both laws
    return np.where(np.isnan(best), -np.inf, best)


def excitation_constants(proposal: HawkesNext, e_targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Delay-marginal and joint rejection constants for targets given as excitation rows.

    Both suprema come from one vectorized pass: the marginal is the same
    ratio with the totals ``sum(mu)``, ``sum(e)`` in an extra column.
    """
    e_t = np.atleast_2d(e_targets)
    e_p = proposal.excitation
    tot_t = e_t.sum(axis=1)
    k = (proposal._e_tot - tot_t)[:, None] / proposal.decay
    mu = proposal.baseline
    a = np.append(mu, proposal._mu_tot)[None, :]
    b = np.concatenate([e_t, tot_t[:, None]], axis=1)
    c = np.append(e_p, proposal._e_tot)[None, :]
    lr = _max_log_ratio(a, b, c, k)
    return np.exp(lr[:, -1]), np.exp(lr[:, :-1].max(axis=1))


def hawkes_constants(proposal: HawkesNext, targets) -> tuple[np.ndarray, np.ndarray]:
    """Exact rejection constants of each target against the proposal.

    Returns ``(time_constant, joint_constant)``: the supremum of the ratio of
    the marginal delay densities and of the joint (delay, mark) densities.
    """
    return excitation_constants(proposal, np.stack([t.excitation for t in targets]))


class HawkesChain:
    """States along a proposed chain, stored as one excitation matrix."""

    __slots__ = ("excitation", "t")

    def __init__(self, excitation: np.ndarray, t: np.ndarray):
        self.excitation = excitation
        self.t = t

    def __len__(self):
        return self.t.size

    def __getitem__(self, j):
        return HawkesState(self.excitation[j], float(self.t[j]))


class HawkesNextBatch:
    """Decoded laws for a :class:`HawkesChain`; indexing yields :class:`HawkesNext`."""

    __slots__ = ("baseline", "excitation", "decay")

    def __init__(self, baseline, excitation, decay):
        self.baseline = baseline
        self.excitation = excitation
        self.decay = decay

    def __len__(self):
        return self.excitation.shape[0]

    def __getitem__(self, j):
        return HawkesNext(self.baseline, self.excitation[j], self.decay)


class HawkesProcess(TPPModel):
    """Hawkes model in the encoder/decoder form.

    ``factorized=True`` decodes to the delay marginal times a mark law frozen
    at the start of the gap (``lambda_x(0+) / Lambda(0+)``), the structure a
    neural decoder with separate time and mark heads has.  It is a different
    (approximate) model; the default decodes the exact joint law.
    """

    def __init__(self, params: HawkesParams, factorized: bool = False):
        self.params = params
        self.factorized = factorized
        self.n_marks = params.dim
        self._cols = np.ascontiguousarray(params.adjacency.T * params.decay)

    def initial_state(self):
        return HawkesState(np.zeros(self.params.dim), 0.0)

    def advance(self, state: HawkesState, tau, mark):
        e = state.excitation * math.exp(-self.params.decay * tau) + self._cols[mark]
        return HawkesState(e, state.t + tau)

    def advance_chain(self, state: HawkesState, taus, marks):
        taus = np.asarray(taus, dtype=float)
        w = self.params.decay
        t = np.cumsum(taus)
        lag = t[:, None] - t[None, :]
        weights = np.where(lag >= 0, np.exp(-w * np.maximum(lag, 0.0)), 0.0)
        e = np.exp(-w * t)[:, None] * state.excitation[None, :] + weights @ self._cols[np.asarray(marks, dtype=int)]
        return HawkesChain(e, state.t + t)

    def decode(self, state: HawkesState):
        if self.factorized:
            p = self.params
            lam0 = p.baseline + state.excitation
            return FactorizedNext(HawkesTime(float(p.baseline.sum()), float(state.excitation.sum()), p.decay),
                                  CategoricalDist.normalized(lam0))
        return HawkesNext(self.params.baseline, state.excitation, self.params.decay)

    def decode_many(self, states):
        if isinstance(states, HawkesChain) and not self.factorized:
            return HawkesNextBatch(self.params.baseline, states.excitation, self.params.decay)
        return [self.decode(s) for s in states]

    def intensity(self, history: EventSeq, t: float, d: int) -> float:
        return hawkes_intensity(self.params, history, t, d)

    def to_dict(self):
        return {**self.params.to_dict(), "factorized": self.factorized}


def thinning_sample(model: HawkesProcess, history: EventSeq, T: float, rng: np.random.Generator) -> EventSeq:
    """Ogata thinning on ``(last event, T]``, continuing ``history``."""
    p = model.params
    state = model.encode(history)
    t = history.last_time
    times, marks = [], []
    excitation = state.excitation.copy()
    lag = 0.0
    mu_tot = float(p.baseline.sum())
    while True:
        e_now = excitation * math.exp(-p.decay * lag)
        lam_max = mu_tot + float(e_now.sum())
        if lam_max <= 0:
            break
        w = rng.exponential(1.0 / lam_max)
        if t + lag + w > T:
            break
        lag += w
        lam_d = p.baseline + excitation * math.exp(-p.decay * lag)
        lam = float(lam_d.sum())
        if rng.random() * lam_max <= lam:
            cum = np.cumsum(lam_d)
            d = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), p.dim - 1)
            t += lag
            times.append(t)
            marks.append(d)
            excitation = lam_d - p.baseline + model._cols[d]
            lag = 0.0
    return EventSeq(np.concatenate([history.times, times]),
                    np.concatenate([history.marks, np.asarray(marks, dtype=int)]), max(T, history.t_end))
