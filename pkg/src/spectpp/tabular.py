"""Array-at-a-time sampling for :class:`DiscreteToyModel` batches.

Every batch member runs the same speculative round as
:func:`spectpp.sampler.speculative_sample`, but the whole batch advances
with array operations: the finite model has only ``B * D + 1`` states, so
all (proposal, target) acceptance tables can be built once up front.

Outputs are bin and mark index arrays of shape ``(n_runs, n_events)``.  The
random stream is shared across the batch, so individual members do not
reproduce the per-sequence engine draw for draw; the law is the same.
"""
from __future__ import annotations

import numpy as np

from .categorical import CategoricalDist
from .models import DiscreteToyModel
from .sampler import SpecConfig, _categorical_pair


def acceptance_tables(model: DiscreteToyModel, cfg: SpecConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-(proposal state, target state) acceptance of each bin and each mark."""
    s = model.n_states
    a_time = np.empty((s, s, model.n_bins))
    a_mark = np.empty((s, s, model.n_marks))
    t_dist = [CategoricalDist(r) for r in model.time_table]
    m_dist = [CategoricalDist(r) for r in model.mark_table]
    for p in range(s):
        for t in range(s):
            a_time[p, t] = _categorical_pair(t_dist[t], t_dist[p], cfg)[2]
            a_mark[p, t] = _categorical_pair(m_dist[t], m_dist[p], cfg)[2]
    return a_time, a_mark


def _inverse_cdf(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF category draws; ``cum_rows`` is ``(..., K)``, ``u`` is ``(...)``."""
    idx = (cum_rows < u[..., None] * cum_rows[..., -1:]).sum(axis=-1)
    return np.minimum(idx, cum_rows.shape[-1] - 1)


def tabular_autoregressive_sample(model: DiscreteToyModel, n_runs: int, n_events: int,
                                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    t_cum = np.cumsum(model.time_table, axis=1)
    m_cum = np.cumsum(model.mark_table, axis=1)
    state = np.full(n_runs, model.initial_state())
    bins = np.empty((n_runs, n_events), dtype=int)
    marks = np.empty((n_runs, n_events), dtype=int)
    for i in range(n_events):
        b = _inverse_cdf(t_cum[state], rng.random(n_runs))
        x = _inverse_cdf(m_cum[state], rng.random(n_runs))
        bins[:, i], marks[:, i] = b, x
        state = b * model.n_marks + x
    return bins, marks


def tabular_speculative_sample(model: DiscreteToyModel, n_runs: int, n_events: int, cfg: SpecConfig,
                               rng: np.random.Generator, return_steps: bool = False):
    """Speculative rounds for ``n_runs`` independent sequences from the empty history.

    With ``return_steps`` also returns the accepted run length of every
    round of every member, concatenated.
    """
    l, d = cfg.step, model.n_marks
    a_time, a_mark = acceptance_tables(model, cfg)
    t_cum = np.cumsum(model.time_table, axis=1)
    m_cum = np.cumsum(model.mark_table, axis=1)
    state = np.full(n_runs, model.initial_state())
    emitted = np.zeros(n_runs, dtype=int)
    bins = np.empty((n_runs, n_events), dtype=int)
    marks = np.empty((n_runs, n_events), dtype=int)
    steps = []
    cols = np.arange(l)
    while True:
        active = np.flatnonzero(emitted < n_events)
        if active.size == 0:
            break
        p = state[active]
        n = active.size
        b = _inverse_cdf(t_cum[p][:, None, :], rng.random((n, l)))
        x = _inverse_cdf(m_cum[p][:, None, :], rng.random((n, l)))
        chain = b * d + x
        tgt = np.concatenate([p[:, None], chain[:, :-1]], axis=1)
        pp = np.broadcast_to(p[:, None], (n, l))
        acc = a_time[pp, tgt, b] * a_mark[pp, tgt, x]
        rejected = rng.random((n, l)) >= acc
        n_rej = np.cumsum(rejected, axis=1)
        hit = n_rej >= cfg.top_k
        k = np.where(hit.any(axis=1), hit.argmax(axis=1), l)
        # k >= 1: the first target is the proposal itself
        steps.append(k)
        keep = (cols[None, :] < k[:, None]) & (emitted[active, None] + cols[None, :] < n_events)
        r, c = np.nonzero(keep)
        pos = emitted[active][r] + c
        bins[active[r], pos] = b[r, c]
        marks[active[r], pos] = x[r, c]
        emitted[active] += k
        state[active] = chain[np.arange(n), k - 1]
    if return_steps:
        return bins, marks, np.concatenate(steps) if steps else np.empty(0, dtype=int)
    return bins, marks


def encode_outcomes(model: DiscreteToyModel, bins: np.ndarray, marks: np.ndarray) -> np.ndarray:
    """Map each row of (bin, mark) pairs to one integer outcome code."""
    cell = bins * model.n_marks + marks
    base = model.n_bins * model.n_marks
    return (cell * base ** np.arange(cell.shape[1])[::-1]).sum(axis=1)
