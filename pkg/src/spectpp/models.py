"""Simple TPP models: renewal, alternating-mark, finite discrete, and the jump process.

Decoders return cached distribution objects wherever several states share a
next-event law, which lets the sampler skip constant computation for
identical proposal/target pairs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .categorical import CategoricalDist
from .distributions import Density, Exponential, density_from_dict
from .errors import ParameterError
from .events import EventSeq, FactorizedNext, QuantizedTime, TPPModel
from .hawkes import HawkesParams, HawkesProcess


class RenewalModel(TPPModel):
    """History-free: every state decodes to the same next-event law."""

    def __init__(self, time: Density, marks: CategoricalDist | None = None):
        self.marks = marks if marks is not None else CategoricalDist([1.0])
        self.n_marks = len(self.marks)
        self._next = FactorizedNext(time, self.marks)

    def initial_state(self):
        return 0

    def advance(self, state, tau, mark):
        return state + 1

    def advance_chain(self, state, taus, marks):
        return list(range(state + 1, state + 1 + len(taus)))

    def decode(self, state):
        return self._next

    def decode_many(self, states):
        return [self._next] * len(states)

    def to_dict(self):
        return {"kind": "renewal", "time": self._next.time.to_dict(), "marks": self.marks.to_list()}


class AlternatingMarkModel(TPPModel):
    """Two marks that strictly alternate; the first mark is a fair coin."""

    n_marks = 2

    def __init__(self, time: Density):
        self.time = time
        self._first = FactorizedNext(time, CategoricalDist([0.5, 0.5]))
        self._after = (FactorizedNext(time, CategoricalDist([0.0, 1.0])),
                       FactorizedNext(time, CategoricalDist([1.0, 0.0])))

    def initial_state(self):
        return -1

    def advance(self, state, tau, mark):
        return int(mark)

    def advance_chain(self, state, taus, marks):
        return [int(m) for m in marks]

    def decode(self, state):
        return self._first if state < 0 else self._after[state]

    def to_dict(self):
        return {"kind": "alternating", "time": self.time.to_dict()}


class DiscreteToyModel(TPPModel):
    """Finite model: delays take ``B`` bin values, marks ``D`` values.

    The state is the last (bin, mark) pair, encoded ``b * D + x``, with
    ``B * D`` for the empty history.  Each state has its own bin and mark
    probability table, and the two are independent given the state.
    """

    def __init__(self, bin_values, time_table, mark_table):
        self.values = np.asarray(bin_values, dtype=float)
        time_table = np.asarray(time_table, dtype=float)
        mark_table = np.asarray(mark_table, dtype=float)
        self.n_bins = self.values.size
        self.n_marks = mark_table.shape[1]
        n_states = self.n_bins * self.n_marks + 1
        if time_table.shape != (n_states, self.n_bins) or mark_table.shape[0] != n_states:
            raise ParameterError(f"tables must have {n_states} rows (one per state plus the initial state)")
        self.time_table = time_table
        self.mark_table = mark_table
        self._decoded = [FactorizedNext(QuantizedTime(self.values, CategoricalDist(t)), CategoricalDist(m))
                         for t, m in zip(time_table, mark_table)]

    @classmethod
    def random(cls, rng: np.random.Generator, n_bins: int = 3, n_marks: int = 2,
               bin_values=None, concentration: float = 1.0) -> "DiscreteToyModel":
        n_states = n_bins * n_marks + 1
        values = np.arange(1, n_bins + 1) / 2.0 if bin_values is None else bin_values
        t = rng.dirichlet(np.full(n_bins, concentration), n_states)
        m = rng.dirichlet(np.full(n_marks, concentration), n_states)
        return cls(values, t, m)

    @property
    def n_states(self) -> int:
        return self.n_bins * self.n_marks + 1

    def initial_state(self):
        return self.n_bins * self.n_marks

    def bin_of(self, tau) -> int:
        i = int(np.searchsorted(self.values, tau))
        if i >= self.n_bins or not np.isclose(self.values[i], tau, rtol=1e-12, atol=0):
            raise ParameterError(f"delay {tau} is not a bin value")
        return i

    def advance(self, state, tau, mark):
        return self.bin_of(tau) * self.n_marks + int(mark)

    def advance_chain(self, state, taus, marks):
        bins = np.searchsorted(self.values, np.asarray(taus, dtype=float))
        return (bins * self.n_marks + np.asarray(marks, dtype=int)).tolist()

    def decode(self, state):
        return self._decoded[state]

    def decode_many(self, states):
        d = self._decoded
        return [d[s] for s in states]

    def to_dict(self):
        return {"kind": "discrete", "values": self.values.tolist(),
                "time_table": self.time_table.tolist(), "mark_table": self.mark_table.tolist()}


def toy_models(rng: np.random.Generator | None = None) -> dict[str, TPPModel]:
    rng = np.random.default_rng(0) if rng is None else rng
    return {
        "renewal": RenewalModel(Exponential(1.0)),
        "alternating_mark": AlternatingMarkModel(Exponential(1.0)),
        "discrete": DiscreteToyModel.random(rng),
    }


@dataclass(frozen=True, eq=False)
class JumpRegimes:
    """Piecewise-constant rate: ``rates[i]`` holds on ``[starts[i], starts[i+1])``."""

    durations: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.durations, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if d.size != r.size or d.size < 1 or np.any(d <= 0) or np.any(r <= 0):
            raise ParameterError("need matching positive durations and rates")
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "rates", r)

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.durations)[:-1]])

    @property
    def t_end(self) -> float:
        return float(self.durations.sum())

    def regime_at(self, t) -> np.ndarray:
        """Regime index at time ``t``; the last regime extends past the horizon."""
        return np.clip(np.searchsorted(np.cumsum(self.durations), t, side="right"), 0, self.rates.size - 1)

    def to_dict(self):
        return {"durations": self.durations.tolist(), "rates": self.rates.tolist()}


def sample_regimes(n_regimes: int, duration_dist, rate_dist,
                   rng: np.random.Generator) -> JumpRegimes:
    if n_regimes < 1:
        raise ParameterError("need at least one regime")
    return JumpRegimes(duration_dist.sample(rng, n_regimes), rate_dist.sample(rng, n_regimes))


def stitch_poisson(regimes: JumpRegimes, rng: np.random.Generator) -> EventSeq:
    """Homogeneous Poisson events in each regime, concatenated in time."""
    chunks = []
    for start, dur, rate in zip(regimes.starts, regimes.durations, regimes.rates):
        k = rng.poisson(rate * dur)
        chunks.append(start + np.sort(rng.uniform(0.0, dur, k)))
    times = np.concatenate(chunks)
    times = times[times > 0]
    return EventSeq(times, np.zeros(times.size, dtype=int), regimes.t_end)


def generate_jump_process(n_regimes: int, duration_dist, rate_dist,
                          rng: np.random.Generator, return_regimes: bool = False):
    """Sample regime durations and rates, then stitch Poisson segments over them."""
    reg = sample_regimes(n_regimes, duration_dist, rate_dist, rng)
    seq = stitch_poisson(reg, rng)
    return (seq, reg) if return_regimes else seq


@dataclass(frozen=True)
class UniformRates:
    """Uniform law on ``[low, high]``; only sampling is needed for regime rates."""

    low: float
    high: float

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, n)


DEFAULT_JUMP_DURATION = Exponential(1.0 / 50.0)
DEFAULT_JUMP_RATE = UniformRates(0.1, 5.0)


class JumpProcessModel(TPPModel):
    """Exponential decoder whose rate is the regime rate at the last event time.

    Plays the role of a model trained on jump-process data: within a regime
    all states decode to one cached law, so proposals only get rejected
    around regime changes.
    """

    n_marks = 1

    def __init__(self, regimes: JumpRegimes):
        self.regimes = regimes
        marks = CategoricalDist([1.0])
        self._decoded = [FactorizedNext(Exponential(float(r)), marks) for r in regimes.rates]

    def initial_state(self):
        return 0.0

    def advance(self, state, tau, mark):
        return state + tau

    def advance_chain(self, state, taus, marks):
        return (state + np.cumsum(taus)).tolist()

    def decode(self, state):
        return self._decoded[int(self.regimes.regime_at(state))]

    def decode_many(self, states):
        idx = self.regimes.regime_at(np.asarray(states, dtype=float))
        return [self._decoded[i] for i in idx]

    def to_dict(self):
        return {"kind": "jump", **self.regimes.to_dict()}


def sequence_log_likelihood(model: TPPModel, seq: EventSeq) -> float:
    """Sum of next-event log densities plus the log survival up to ``t_end``.

    Returns ``-inf`` when some event has zero density under the model.
    """
    state = model.initial_state()
    total = 0.0
    for tau, mark in zip(seq.taus, seq.marks):
        d = model.decode(state)
        total += float(d.log_prob(float(tau), int(mark)))
        state = model.advance(state, float(tau), int(mark))
    gap = seq.t_end - seq.last_time
    if gap > 0:
        total += float(model.decode(state).log_survival(gap))
    return total


def model_from_dict(d: dict) -> TPPModel:
    kind = d.get("kind")
    if kind == "hawkes":
        return HawkesProcess(HawkesParams.from_dict(d), factorized=bool(d.get("factorized", False)))
    if kind == "renewal":
        return RenewalModel(density_from_dict(d["time"]), CategoricalDist(d.get("marks", [1.0])))
    if kind == "alternating":
        return AlternatingMarkModel(density_from_dict(d["time"]))
    if kind == "discrete":
        return DiscreteToyModel(d["values"], d["time_table"], d["mark_table"])
    if kind == "jump":
        return JumpProcessModel(JumpRegimes(d["durations"], d["rates"]))
    raise ParameterError(f"unknown model kind {kind!r}")
