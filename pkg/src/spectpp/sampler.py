"""Autoregressive and speculative sampling from a :class:`TPPModel`.

A speculative round freezes the current next-event law ``p``, draws ``l``
events from it at once, advances the model state along the whole proposed
chain and decodes every intermediate target law ``p*_j``.  Event ``j`` is
then accepted with the rejection-sampling probability of ``p*_j`` against
``p``; everything before the first rejection is kept.  The law at the last
kept event becomes the next round's proposal, so the first event of every
round is drawn from its own target and accepted with probability one.

An accepted proposal is an exact draw from its target, and a rejected
position is redrawn from that same target as the next round's first event,
so with exact constants the output has the autoregressive law.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import categorical as cat
from .envelope import time_constant
from .errors import ParameterError, UnboundedRatioError
from .events import EventSeq, FactorizedNext, QuantizedTime, TPPModel
from .hawkes import (HawkesNext, HawkesNextBatch, HawkesTime, excitation_constants, hawkes_constants,
                     time_constants as hawkes_time_constants)


@dataclass(frozen=True)
class SpecConfig:
    step: int = 5
    top_k: int = 1
    delta: float = 0.0
    alpha: float = 0.995
    grid_n: int = 512
    seed: int = 0
    literal_truncation: bool = False

    def __post_init__(self):
        if self.step < 1:
            raise ParameterError(f"step must be >= 1, got {self.step}")
        if self.top_k < 1:
            raise ParameterError(f"top_k must be >= 1, got {self.top_k}")
        if not 0.0 <= self.delta < 1.0:
            raise ParameterError(f"delta must lie in [0, 1), got {self.delta}")
        if not 0.5 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0.5, 1), got {self.alpha}")
        if self.grid_n < 2:
            raise ParameterError(f"grid_n must be >= 2, got {self.grid_n}")

    @property
    def exact(self) -> bool:
        return self.top_k == 1 and self.delta == 0.0


@dataclass(frozen=True)
class RejectionConstants:
    """Constants of one target law against the frozen proposal.

    ``truncated_mass`` is target delay mass outside the bounded span and
    ``tv_bound`` the mark/bin mass dropped by delta-truncation; the pair is
    exact when both are zero.
    """

    time_constant: float
    mark_constant: float
    truncated_mass: float = 0.0
    tv_bound: float = 0.0

    @property
    def exact(self) -> bool:
        return self.truncated_mass == 0.0 and self.tv_bound == 0.0


IDENTITY = RejectionConstants(1.0, 1.0)


@dataclass
class RoundStats:
    proposals_made: int
    accepted_run_length: int
    time_constants: list[float]
    mark_constants: list[float]
    exact: bool
    timings: dict[str, float] = field(default_factory=dict)


def _categorical_pair(p_t, p_p, cfg: SpecConfig):
    """(constant, dropped mass, per-category acceptance) for two categoricals."""
    if p_t is p_p or p_t == p_p:
        return 1.0, 0.0, np.ones(len(p_p))
    if cfg.delta > 0:
        res = cat.truncated_const(p_t, p_p, cfg.delta, allow_unbounded=True, literal=cfg.literal_truncation)
        m, tv = res.constant, res.tv_bound
    else:
        m, tv = cat.exact_const(p_t, p_p, allow_unbounded=True), 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = np.where(p_p.probs > 0, np.minimum(1.0, p_t.probs / (m * p_p.probs)), 0.0)
    if math.isinf(m):
        acc = np.zeros(len(p_p))
    return m, tv, acc


class _PairEntry:
    __slots__ = ("proposal", "target", "consts", "time_acc", "mark_acc")

    def __init__(self, proposal, target, consts, time_acc, mark_acc):
        self.proposal = proposal
        self.target = target
        self.consts = consts
        self.time_acc = time_acc
        self.mark_acc = mark_acc


class ConstantCache:
    """Memo of constants for recurring (proposal, target) object pairs.

    Keys are object ids; entries keep both objects alive so an id cannot be
    reused by a different law while cached.
    """

    def __init__(self, max_size: int = 100_000):
        self._d: dict = {}
        self.max_size = max_size

    def get(self, proposal, target):
        e = self._d.get((id(proposal), id(target)))
        if e is not None and e.proposal is proposal and e.target is target:
            return e
        return None

    def put(self, entry: _PairEntry):
        if len(self._d) >= self.max_size:
            self._d.clear()
        self._d[(id(entry.proposal), id(entry.target))] = entry


def _factorized_entry(proposal: FactorizedNext, target: FactorizedNext, cfg: SpecConfig) -> _PairEntry:
    if target is proposal:
        return _PairEntry(proposal, target, IDENTITY, None, None)
    pt, tt = proposal.time, target.time
    time_acc = None
    if tt is pt or tt == pt:
        m_t, trunc, tv_t = 1.0, 0.0, 0.0
    elif isinstance(pt, QuantizedTime):
        if not np.array_equal(pt.values, tt.values):
            raise ParameterError("quantized delays use different bin values")
        m_t, tv_t, time_acc = _categorical_pair(tt.dist, pt.dist, cfg)
        trunc = 0.0
    elif isinstance(pt, HawkesTime):
        m_t, trunc, tv_t = float(hawkes_time_constants(pt, [tt])[0]), 0.0, 0.0
    else:
        m_t, trunc = time_constant(pt, tt, cfg.alpha, cfg.grid_n)
        tv_t = 0.0
    m_m, tv_m, mark_acc = _categorical_pair(target.marks, proposal.marks, cfg)
    return _PairEntry(proposal, target, RejectionConstants(m_t, m_m, trunc, tv_t + tv_m), time_acc, mark_acc)


def rejection_constants(proposal, target, cfg: SpecConfig = SpecConfig()) -> RejectionConstants:
    """Time and mark rejection constants of ``target`` against ``proposal``.

    For the exact Hawkes joint law the mark constant is the joint constant
    divided by the delay-marginal constant, so their product bounds the
    joint density ratio.
    """
    if isinstance(proposal, HawkesNext):
        m_t, m_j = hawkes_constants(proposal, [target])
        return RejectionConstants(float(m_t[0]), float(m_j[0] / m_t[0]))
    return _factorized_entry(proposal, target, cfg).consts


def acceptance_probability(target, proposal, m_time: float, m_mark: float, event) -> float:
    """Probability of keeping ``event = (tau, mark)`` drawn from ``proposal``.

    Factorized laws use ``min(1, time ratio / M_time) * min(1, mark ratio / M_mark)``;
    the exact Hawkes law uses the joint ratio against ``M_time * M_mark``.
    """
    if not (m_time > 0 and m_mark > 0):
        raise ValueError("rejection constants must be positive")
    tau, mark = float(event[0]), int(event[1])
    if isinstance(proposal, HawkesNext):
        lp = float(proposal.log_prob(tau, mark))
        if not np.isfinite(lp):
            raise UnboundedRatioError("proposal density vanishes at the sampled event")
        lr = float(target.log_prob(tau, mark)) - lp - math.log(m_time * m_mark)
        return min(1.0, math.exp(lr))
    p_time = float(np.asarray(proposal.time.pdf(tau)))
    p_mark = float(proposal.marks.probs[mark])
    if p_time <= 0 or p_mark <= 0:
        raise UnboundedRatioError("proposal density vanishes at the sampled event")
    if math.isinf(m_time) or math.isinf(m_mark):
        return 0.0
    a_t = min(1.0, float(np.asarray(target.time.pdf(tau))) / (m_time * p_time))
    a_m = min(1.0, float(target.marks.probs[mark]) / (m_mark * p_mark))
    return a_t * a_m


def _hawkes_round_acceptance(proposal: HawkesNext, decoded, taus, marks):
    n = taus.size
    acc = np.ones(n)
    m_t = np.ones(n)
    m_m = np.ones(n)
    if n == 1:
        return acc, m_t, m_m, True
    if isinstance(decoded, HawkesNextBatch):
        e = decoded.excitation[: n - 1]
    else:
        e = np.stack([decoded[j].excitation for j in range(n - 1)])
    ct, cj = excitation_constants(proposal, e)
    tau, x = taus[1:], marks[1:]
    mu = proposal.baseline
    w = proposal.decay
    u = np.exp(-w * tau)
    em1 = np.expm1(-w * tau)
    with np.errstate(divide="ignore"):
        lp_t = np.log(mu[x] + e[np.arange(n - 1), x] * u) + e.sum(axis=1) / w * em1
        lp_p = np.log(mu[x] + proposal.excitation[x] * u) + proposal._e_tot / w * em1
    # the -sum(mu) * tau terms cancel
    acc[1:] = np.minimum(1.0, np.exp(lp_t - lp_p - np.log(cj)))
    m_t[1:] = ct
    m_m[1:] = cj / ct
    return acc, m_t, m_m, True


def _factorized_round_acceptance(proposal: FactorizedNext, decoded, taus, marks, cfg, cache):
    n = taus.size
    acc = np.ones(n)
    m_t = np.ones(n)
    m_m = np.ones(n)
    exact = True
    bins = None
    for j in range(1, n):
        tgt = decoded[j - 1]
        if tgt is proposal:
            continue
        entry = cache.get(proposal, tgt)
        if entry is None:
            entry = _factorized_entry(proposal, tgt, cfg)
            cache.put(entry)
        c = entry.consts
        m_t[j], m_m[j] = c.time_constant, c.mark_constant
        if not c.exact:
            exact = False
        if entry.mark_acc is None:
            continue
        if math.isinf(c.time_constant) or math.isinf(c.mark_constant):
            acc[j] = 0.0
            continue
        if entry.time_acc is not None:
            if bins is None:
                bins = proposal.time.bin_index(taus)
            a = entry.time_acc[bins[j]]
        elif c.time_constant == 1.0 and (tgt.time is proposal.time or tgt.time == proposal.time):
            a = 1.0
        else:
            tau = taus[j]
            a = min(1.0, float(np.exp(tgt.time.log_pdf(tau) - proposal.time.log_pdf(tau))) / c.time_constant)
        acc[j] = a * entry.mark_acc[marks[j]]
    return acc, m_t, m_m, exact


def _round_acceptance(proposal, decoded, taus, marks, cfg, cache):
    """Acceptance of each proposed event; event ``j`` is checked against ``decoded[j - 1]``.

    The first event's target is the proposal itself, so it is always kept.
    """
    if isinstance(proposal, HawkesNext):
        return _hawkes_round_acceptance(proposal, decoded, taus, marks)
    if isinstance(proposal, FactorizedNext):
        return _factorized_round_acceptance(proposal, decoded, taus, marks, cfg, cache)
    raise ParameterError(f"unsupported next-event law {type(proposal).__name__}")


def _streams(rng):
    return rng.spawn(2)


class _Runner:
    """One sequence's speculative state, stepped a round at a time."""

    def __init__(self, model: TPPModel, history: EventSeq, n_events: int, cfg: SpecConfig,
                 rng: np.random.Generator, cache: ConstantCache):
        self.model = model
        self.cfg = cfg
        self.cache = cache
        self.history = history
        self.prop_rng, self.acc_rng = _streams(rng)
        t0 = time.perf_counter()
        self.state = model.encode(history)
        self.t_encode = time.perf_counter() - t0
        t0 = time.perf_counter()
        self.proposal = model.decode(self.state)
        self.t_first_decode = time.perf_counter() - t0
        self.n_events = n_events
        self.taus: list[np.ndarray] = []
        self.marks: list[np.ndarray] = []
        self.emitted = 0
        self.stats: list[RoundStats] = []

    @property
    def done(self) -> bool:
        return self.emitted >= self.n_events

    def round(self):
        cfg = self.cfg
        l = cfg.step
        t0 = time.perf_counter()
        taus, marks = self.proposal.sample(self.prop_rng, l)
        taus = np.asarray(taus, dtype=float)
        marks = np.asarray(marks, dtype=int)
        t1 = time.perf_counter()
        states = self.model.advance_chain(self.state, taus, marks)
        t2 = time.perf_counter()
        decoded = self.model.decode_many(states)
        t3 = time.perf_counter()
        try:
            acc, m_t, m_m, exact = _round_acceptance(self.proposal, decoded, taus, marks, cfg, self.cache)
        except UnboundedRatioError as e:
            raise UnboundedRatioError(f"round {len(self.stats)} after {self.emitted} events: {e}") from e
        t4 = time.perf_counter()
        u = self.acc_rng.random(l)
        rejected = np.flatnonzero(u >= acc)
        k = l if rejected.size < cfg.top_k else int(rejected[cfg.top_k - 1])
        self.taus.append(taus[:k])
        self.marks.append(marks[:k])
        self.emitted += k
        self.state = states[k - 1]
        self.proposal = decoded[k - 1]
        timings = {"sample": t1 - t0, "encoder": t2 - t1, "decoder": t3 - t2, "rejection_const": t4 - t3}
        if not self.stats:
            timings["encoder"] += self.t_encode
            timings["decoder"] += self.t_first_decode
        self.stats.append(RoundStats(l, k, m_t.tolist(), m_m.tolist(),
                                     bool(exact and cfg.exact), timings))

    def result(self) -> EventSeq:
        if not self.taus:
            return self.history
        taus = np.concatenate(self.taus)[: self.n_events]
        marks = np.concatenate(self.marks)[: self.n_events]
        return self.history.extended(taus, marks)


def _default_rng(rng, cfg):
    return np.random.default_rng(cfg.seed) if rng is None else rng


def speculative_sample(model: TPPModel, history: EventSeq, n_events: int, cfg: SpecConfig = SpecConfig(),
                       rng: np.random.Generator | None = None, cache: ConstantCache | None = None):
    """Extend ``history`` by ``n_events`` events in speculative rounds of ``cfg.step`` proposals.

    Returns the extended sequence and one :class:`RoundStats` per round.
    ``rng`` defaults to a generator seeded with ``cfg.seed``.
    """
    if n_events < 0:
        raise ValueError("n_events must be non-negative")
    rng = _default_rng(rng, cfg)
    run = _Runner(model, history, n_events, cfg, rng.spawn(1)[0], cache if cache is not None else ConstantCache())
    while not run.done:
        run.round()
    return run.result(), run.stats


def batched_speculative_sample(model: TPPModel, histories: list[EventSeq], n_events: int,
                               cfg: SpecConfig = SpecConfig(), rng: np.random.Generator | None = None,
                               return_stats: bool = False):
    """Run a batch in lockstep rounds until every member has ``n_events`` new events.

    Members that finish early idle; overshooting members are trimmed.  Member
    ``i`` uses child stream ``i`` of ``rng``, so a batch of one reproduces
    :func:`speculative_sample`.
    """
    if not histories:
        raise ValueError("batch must be non-empty")
    if n_events < 0:
        raise ValueError("n_events must be non-negative")
    rng = _default_rng(rng, cfg)
    cache = ConstantCache()
    runs = [_Runner(model, h, n_events, cfg, r, cache) for h, r in zip(histories, rng.spawn(len(histories)))]
    n_rounds = 0
    while True:
        active = [r for r in runs if not r.done]
        if not active:
            break
        for r in active:
            r.round()
        n_rounds += 1
    out = [r.result() for r in runs]
    if return_stats:
        return out, [r.stats for r in runs], n_rounds
    return out


def autoregressive_sample(model: TPPModel, history: EventSeq, n_events: int,
                          rng: np.random.Generator, timings: dict | None = None) -> EventSeq:
    """Sequential ground truth: decode, draw one event, advance, repeat.

    When ``timings`` is given, per-component seconds are accumulated into it.
    """
    if n_events < 0:
        raise ValueError("n_events must be non-negative")
    clock = time.perf_counter
    t0 = clock()
    state = model.encode(history)
    t_enc = clock() - t0
    t_dec = t_smp = 0.0
    taus = np.empty(n_events)
    marks = np.empty(n_events, dtype=int)
    for i in range(n_events):
        t0 = clock()
        d = model.decode(state)
        t1 = clock()
        tau, mark = d.sample(rng, 1)
        taus[i] = tau[0]
        marks[i] = mark[0]
        t2 = clock()
        state = model.advance(state, float(taus[i]), int(marks[i]))
        t3 = clock()
        t_dec += t1 - t0
        t_smp += t2 - t1
        t_enc += t3 - t2
    if timings is not None:
        for k, v in (("encoder", t_enc), ("decoder", t_dec), ("sample", t_smp)):
            timings[k] = timings.get(k, 0.0) + v
    return history.extended(taus, marks) if n_events else history


class CountingModel(TPPModel):
    """Wrapper counting model calls; a batched call counts once."""

    def __init__(self, model: TPPModel):
        self.model = model
        self.n_marks = model.n_marks
        self.calls = {"encode": 0, "advance": 0, "decode": 0}

    @property
    def decode_advance_calls(self) -> int:
        return self.calls["advance"] + self.calls["decode"]

    def initial_state(self):
        return self.model.initial_state()

    def encode(self, history):
        self.calls["encode"] += 1
        return self.model.encode(history)

    def advance(self, state, tau, mark):
        self.calls["advance"] += 1
        return self.model.advance(state, tau, mark)

    def advance_chain(self, state, taus, marks):
        self.calls["advance"] += 1
        return self.model.advance_chain(state, taus, marks)

    def decode(self, state):
        self.calls["decode"] += 1
        return self.model.decode(state)

    def decode_many(self, states):
        self.calls["decode"] += 1
        return self.model.decode_many(states)

    def to_dict(self):
        return self.model.to_dict()


def avg_accepted_step(stats: list[RoundStats]) -> float:
    if not stats:
        raise ValueError("no rounds to average")
    return float(np.mean([s.accepted_run_length for s in stats]))


def acceptance_rate(stats: list[RoundStats]) -> float:
    """Kept events over proposals drawn."""
    return sum(s.accepted_run_length for s in stats) / sum(s.proposals_made for s in stats)


def summarize_stats(stats: list[RoundStats]) -> dict:
    """JSON-ready aggregate of a run's rounds."""
    t_c = np.concatenate([s.time_constants for s in stats]) if stats else np.empty(0)
    m_c = np.concatenate([s.mark_constants for s in stats]) if stats else np.empty(0)

    def finite_mean(a):
        a = a[np.isfinite(a)]
        return float(a.mean()) if a.size else None

    timings: dict[str, float] = {}
    for s in stats:
        for k, v in s.timings.items():
            timings[k] = timings.get(k, 0.0) + v * 1e3
    return {
        "rounds": len(stats),
        "avg_step": avg_accepted_step(stats) if stats else None,
        "acceptance_rate": acceptance_rate(stats) if stats else None,
        "time_constant_mean": finite_mean(t_c),
        "mark_constant_mean": finite_mean(m_c),
        "infinite_constant_fraction": float(np.mean(~np.isfinite(m_c) | ~np.isfinite(t_c))) if m_c.size else 0.0,
        "exact": all(s.exact for s in stats),
        "timings_ms": timings,
    }
