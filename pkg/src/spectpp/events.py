"""Event sequences, next-event distributions and the autoregressive model contract."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Sequence, Union

import numpy as np

from .categorical import CategoricalDist
from .distributions import Density
from .errors import ParameterError


@dataclass(frozen=True, eq=False)
class EventSeq:
    """Arrival times with integer marks on ``(0, t_end]``."""

    times: np.ndarray
    marks: np.ndarray
    t_end: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        marks = np.asarray(self.marks, dtype=int).reshape(-1)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "t_end", float(self.t_end))
        if times.size != marks.size:
            raise ParameterError("times and marks differ in length")
        if times.size:
            if times[0] <= 0 or np.any(np.diff(times) <= 0):
                raise ParameterError("event times must be positive and strictly increasing")
            if times[-1] > self.t_end:
                raise ParameterError("events extend beyond the observation horizon")
        if np.any(marks < 0):
            raise ParameterError("marks must be non-negative")

    @classmethod
    def empty(cls, t_end: float = 0.0) -> "EventSeq":
        return cls(np.empty(0), np.empty(0, dtype=int), t_end)

    @classmethod
    def from_deltas(cls, taus, marks, t_end: float | None = None) -> "EventSeq":
        times = np.cumsum(np.asarray(taus, dtype=float))
        end = float(times[-1]) if t_end is None and times.size else (t_end or 0.0)
        return cls(times, marks, end)

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        return (isinstance(other, EventSeq) and np.array_equal(self.times, other.times)
                and np.array_equal(self.marks, other.marks) and self.t_end == other.t_end)

    @property
    def last_time(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0

    @property
    def taus(self) -> np.ndarray:
        """Inter-event times, measured from 0 for the first event."""
        return np.diff(self.times, prepend=0.0)

    def extended(self, taus, marks) -> "EventSeq":
        taus = np.asarray(taus, dtype=float)
        new_times = self.last_time + np.cumsum(taus)
        times = np.concatenate([self.times, new_times])
        end = max(self.t_end, float(new_times[-1])) if taus.size else self.t_end
        return EventSeq(times, np.concatenate([self.marks, np.asarray(marks, dtype=int)]), end)

    def head(self, n: int) -> "EventSeq":
        if n >= len(self):
            return self
        return EventSeq(self.times[:n], self.marks[:n], float(self.times[n - 1]) if n > 0 else 0.0)

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "marks": self.marks.tolist(), "t_end": self.t_end}

    @classmethod
    def from_dict(cls, d: dict) -> "EventSeq":
        return cls(np.asarray(d["times"], dtype=float), np.asarray(d["marks"], dtype=int), d["t_end"])


def write_jsonl(path, seqs: Iterable[EventSeq], extra: Sequence[dict] | None = None) -> None:
    with open(path, "w") as fh:
        for i, s in enumerate(seqs):
            d = s.to_dict()
            if extra is not None:
                d.update(extra[i])
            fh.write(json.dumps(d) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


@dataclass(frozen=True, eq=False)
class QuantizedTime:
    """Inter-event time restricted to a finite set of positive bin values."""

    values: np.ndarray
    dist: CategoricalDist

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != len(self.dist) or np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise ParameterError("bin values must be positive, increasing and match the distribution")
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        return (isinstance(other, QuantizedTime) and np.array_equal(self.values, other.values)
                and self.dist == other.dist)

    __hash__ = None

    def bin_index(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        i = np.clip(np.searchsorted(self.values, tau), 0, self.values.size - 1)
        return i

    def sample(self, rng, n):
        return self.values[self.dist.sample(rng, n)]

    def log_pdf(self, tau):
        tau = np.asarray(tau, dtype=float)
        i = self.bin_index(tau)
        out = self.dist.log_pmf(i)
        return np.where(np.isclose(self.values[i], tau, rtol=1e-12, atol=0), out, -np.inf)

    def pdf(self, tau):
        return np.exp(self.log_pdf(tau))

    def log_survival(self, tau):
        tau = np.asarray(tau, dtype=float)
        surv = np.array([self.dist.probs[self.values > t].sum() for t in np.atleast_1d(tau)])
        with np.errstate(divide="ignore"):
            out = np.log(surv)
        return out.reshape(tau.shape)

    def to_dict(self):
        return {"kind": "quantized", "values": self.values.tolist(), "probs": self.dist.to_list()}


TimeDist = Union[Density, QuantizedTime]


@dataclass(frozen=True, eq=False)
class FactorizedNext:
    """Next-event law ``p(tau) * p(mark)`` with independent time and mark."""

    time: Any
    marks: CategoricalDist

    def __eq__(self, other):
        return (isinstance(other, FactorizedNext) and self.time == other.time
                and self.marks == other.marks)

    __hash__ = None

    def sample(self, rng: np.random.Generator, n: int):
        return self.time.sample(rng, n), self.marks.sample(rng, n)

    def time_pdf(self, tau):
        return self.time.pdf(tau)

    def log_prob(self, tau, mark):
        return self.time.log_pdf(tau) + self.marks.log_pmf(mark)

    def log_survival(self, tau):
        return self.time.log_survival(tau)


class TPPModel:
    """Autoregressive TPP: ``encode`` a history, ``advance`` by one event, ``decode`` a state.

    ``advance_chain`` and ``decode_many`` are the batched calls the
    speculative sampler issues once per round; the defaults loop, models
    override them with vectorized versions where it pays.
    """

    n_marks: int = 1

    def initial_state(self):
        raise NotImplementedError

    def advance(self, state, tau: float, mark: int):
        raise NotImplementedError

    def decode(self, state):
        raise NotImplementedError

    def encode(self, history: EventSeq):
        state = self.initial_state()
        for tau, mark in zip(history.taus, history.marks):
            state = self.advance(state, float(tau), int(mark))
        return state

    def advance_chain(self, state, taus, marks) -> list:
        out = []
        for tau, mark in zip(taus, marks):
            state = self.advance(state, float(tau), int(mark))
            out.append(state)
        return out

    def decode_many(self, states) -> list:
        return [self.decode(s) for s in states]

    def to_dict(self) -> dict:
        raise NotImplementedError
