"""Sample-quality metrics comparing two sets of continuations.

A :class:`SampleSet` holds ``S`` sampled continuations of length ``L`` for
each of ``B`` starting histories.  Metrics are computed per (history,
position) cell across the ``S`` samples and averaged over the cells.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import EventSeq, TPPModel
from .sampler import avg_accepted_step  # noqa: F401  (re-exported)


@dataclass(frozen=True, eq=False)
class SampleSet:
    taus: np.ndarray
    marks: np.ndarray
    histories: tuple[EventSeq, ...]

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        marks = np.asarray(self.marks, dtype=int)
        if taus.ndim != 3 or taus.shape != marks.shape:
            raise ValueError(f"expected matching (B, S, L) arrays, got {taus.shape} and {marks.shape}")
        if len(self.histories) != taus.shape[0]:
            raise ValueError("one starting history per batch element is required")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "histories", tuple(self.histories))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.taus.shape

    @classmethod
    def from_sequences(cls, histories, samples) -> "SampleSet":
        """``samples[b][s]`` is a full sequence extending ``histories[b]``."""
        taus, marks = [], []
        for h, row in zip(histories, samples):
            n0 = len(h)
            taus.append([s.taus[n0:] for s in row])
            marks.append([s.marks[n0:] for s in row])
        return cls(np.array(taus), np.array(marks), tuple(histories))

    def split(self) -> tuple["SampleSet", "SampleSet"]:
        """First and second half of the samples for every history."""
        h = self.shape[1] // 2
        return (SampleSet(self.taus[:, :h], self.marks[:, :h], self.histories),
                SampleSet(self.taus[:, h:2 * h], self.marks[:, h:2 * h], self.histories))

    def sequences(self):
        for b, hist in enumerate(self.histories):
            for s in range(self.shape[1]):
                yield b, s, hist.extended(self.taus[b, s], self.marks[b, s])


def _check_match(a: SampleSet, b: SampleSet):
    if a.shape[0] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(f"sample sets differ in (B, L): {a.shape} vs {b.shape}")


def kl_per_event(a: SampleSet, b: SampleSet, n_marks: int, eps: float | None = None) -> float:
    """Mean KL between per-position empirical mark distributions of ``a`` and ``b``.

    Frequencies get ``eps`` added per category before normalization;
    the default is ``1 / (2 S)`` with ``S`` the smaller sample count.
    """
    _check_match(a, b)
    if eps is None:
        eps = 1.0 / (2 * min(a.shape[1], b.shape[1]))
    if not eps > 0:
        raise ValueError("smoothing must be positive")

    def freq(s: SampleSet):
        onehot = s.marks[..., None] == np.arange(n_marks)
        f = onehot.mean(axis=1) + eps
        return f / f.sum(axis=-1, keepdims=True)

    p, q = freq(a), freq(b)
    return float(np.mean(np.sum(p * np.log(p / q), axis=-1)))


def median_bandwidth(x: np.ndarray, y: np.ndarray, floor: float = 1e-12) -> float:
    z = np.concatenate([x, y])
    i, j = np.triu_indices(z.size, 1)
    return max(float(np.median(np.abs(z[i] - z[j]))) if i.size else 0.0, floor)


def mmd2_unbiased(x, y, bandwidth: float | None = None) -> float:
    """Unbiased squared MMD of two equal-size samples with a Gaussian kernel.

    Uses the paired U-statistic ``mean over i != j of
    k(x_i, x_j) + k(y_i, y_j) - k(x_i, y_j) - k(x_j, y_i)``, which is
    symmetric in the two samples and exactly zero when they coincide.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("samples must have equal size")
    m = x.size
    if m < 2:
        return 0.0
    s = median_bandwidth(x, y) if bandwidth is None else bandwidth
    g = -0.5 / (s * s)
    kxx = np.exp(g * (x[:, None] - x[None, :]) ** 2)
    kyy = np.exp(g * (y[:, None] - y[None, :]) ** 2)
    kxy = np.exp(g * (x[:, None] - y[None, :]) ** 2)
    h = kxx + kyy - kxy - kxy.T
    np.fill_diagonal(h, 0.0)
    return float(h.sum() / (m * (m - 1)))


def mmd_per_event(a: SampleSet, b: SampleSet) -> float:
    """Mean per-position MMD² on inter-event times."""
    _check_match(a, b)
    s = min(a.shape[1], b.shape[1])
    vals = [mmd2_unbiased(a.taus[i, :s, l], b.taus[i, :s, l])
            for i in range(a.shape[0]) for l in range(a.shape[2])]
    return float(np.mean(vals))


def event_log_probs(model: TPPModel, history: EventSeq, taus, marks) -> np.ndarray:
    """Log density of each appended event given everything before it."""
    state = model.encode(history)
    out = np.empty(len(taus))
    for i, (t, x) in enumerate(zip(taus, marks)):
        out[i] = float(model.decode(state).log_prob(float(t), int(x)))
        state = model.advance(state, float(t), int(x))
    return out


def mean_log_prob(model: TPPModel, s: SampleSet) -> float:
    vals = [event_log_probs(model, s.histories[b], s.taus[b, j], s.marks[b, j])
            for b in range(s.shape[0]) for j in range(s.shape[1])]
    return float(np.mean(np.concatenate(vals)))


def llr(model: TPPModel, new: SampleSet, old: SampleSet) -> float:
    """Mean per-event model log-likelihood of ``new`` minus that of ``old``.

    ``-inf`` or ``nan`` signals an event the model gives zero density.
    """
    if new is old:
        return 0.0
    return mean_log_prob(model, new) - mean_log_prob(model, old)
