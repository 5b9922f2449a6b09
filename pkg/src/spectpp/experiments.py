"""Experiment drivers shared by the CLI, the demos and the acceptance tests."""
from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .events import EventSeq, TPPModel
from .hawkes import HawkesParams, HawkesProcess, make_hawkes_config
from .metrics import SampleSet, kl_per_event, llr, mmd_per_event
from .models import (DEFAULT_JUMP_DURATION, DEFAULT_JUMP_RATE, JumpProcessModel, sample_regimes,
                     stitch_poisson)
from .sampler import (CountingModel, RoundStats, SpecConfig, acceptance_rate, autoregressive_sample,
                      avg_accepted_step, speculative_sample)


def sample_set(model: TPPModel, histories, n_samples: int, n_events: int, mode: str,
               cfg: SpecConfig, rng: np.random.Generator):
    """Draw ``n_samples`` continuations per history.

    Returns the :class:`SampleSet` and, for speculative mode, the round
    stats of every run (``[b][s]``).
    """
    if mode not in ("autoregressive", "speculative"):
        raise ValueError(f"unknown mode {mode!r}")
    children = rng.spawn(len(histories) * n_samples)
    seqs, stats = [], []
    for b, h in enumerate(histories):
        row, row_stats = [], []
        for s in range(n_samples):
            r = children[b * n_samples + s]
            if mode == "autoregressive":
                row.append(autoregressive_sample(model, h, n_events, r))
            else:
                out, st = speculative_sample(model, h, n_events, cfg, r)
                row.append(out)
                row_stats.append(st)
        seqs.append(row)
        stats.append(row_stats)
    return SampleSet.from_sequences(histories, seqs), stats


def flat_stats(stats) -> list[RoundStats]:
    return [r for row in stats for run in row for r in run]


@dataclass(frozen=True)
class EquivalenceTrial:
    seed: int
    baseline: dict
    speculative: dict
    avg_step: float


def equivalence_trial(model: TPPModel, seed: int, n_samples: int = 10, n_events: int = 100,
                      cfg: SpecConfig = SpecConfig(), histories=None) -> EquivalenceTrial:
    """Compare speculative samples and an autoregressive split against one reference half.

    Two autoregressive halves ``A1``, ``A2`` and a speculative set ``P`` are
    drawn; the baseline metrics compare ``A1`` with ``A2``, the speculative
    ones compare ``P`` with ``A2``.
    """
    histories = [EventSeq.empty()] if histories is None else histories
    rng = np.random.default_rng(seed)
    r_ar, r_sp = rng.spawn(2)
    ar, _ = sample_set(model, histories, 2 * n_samples, n_events, "autoregressive", cfg, r_ar)
    a1, a2 = ar.split()
    sp, stats = sample_set(model, histories, n_samples, n_events, "speculative", cfg, r_sp)

    def metrics(x, ref):
        return {"kl": kl_per_event(x, ref, model.n_marks), "mmd": mmd_per_event(x, ref),
                "llr": llr(model, x, ref)}

    return EquivalenceTrial(seed, metrics(a1, a2), metrics(sp, a2), avg_accepted_step(flat_stats(stats)))


def band_check(trials: list[EquivalenceTrial], width: float = 2.0) -> dict:
    """Is the mean speculative metric inside baseline mean +- ``width`` std over trials?"""
    out = {}
    for key in trials[0].baseline:
        base = np.array([t.baseline[key] for t in trials])
        spec = np.array([t.speculative[key] for t in trials])
        mu, sd = float(base.mean()), float(base.std(ddof=1)) if base.size > 1 else 0.0
        m = float(spec.mean())
        out[key] = {"baseline_mean": mu, "baseline_std": sd, "speculative_mean": m,
                    "inside": bool(abs(m - mu) <= width * sd)}
    return out


def default_hawkes_1d() -> HawkesProcess:
    return HawkesProcess(HawkesParams(np.array([0.5]), np.array([[0.5]]), 1.0))


def default_hawkes_5d(seed: int = 7) -> HawkesProcess:
    rng = np.random.default_rng(seed)
    return HawkesProcess(make_hawkes_config(5, 0.5, 0.5, 1.0, rng, baseline=np.full(5, 0.2)))


SWEEP_AXES = {"dim": (10, 40), "sparsity": (0.1, 0.5, 0.9), "a_max": (0.05, 0.5), "decay": (0.2, 1.0)}


@dataclass(frozen=True)
class SweepPoint:
    dim: int
    sparsity: float
    a_max: float
    decay: float
    avg_step: float
    acceptance_rate: float
    spectral_rescale: float


def _sweep_one(args) -> SweepPoint:
    (dim, sparsity, a_max, decay), seed_seq, n_samples, n_events, cfg, baseline = args
    rng = np.random.default_rng(seed_seq)
    r_model, r_run = rng.spawn(2)
    params = make_hawkes_config(dim, sparsity, a_max, decay, r_model,
                                baseline=None if baseline is None else np.full(dim, baseline))
    model = HawkesProcess(params)
    _, stats = sample_set(model, [EventSeq.empty()], n_samples, n_events, "speculative", cfg, r_run)
    st = flat_stats(stats)
    return SweepPoint(dim, sparsity, a_max, decay, avg_accepted_step(st), acceptance_rate(st), params.rescale)


def hawkes_sweep(axes: dict | None = None, n_samples: int = 4, n_events: int = 100,
                 cfg: SpecConfig = SpecConfig(), seed: int = 0, workers: int = 1,
                 baseline: float | None = None) -> list[SweepPoint]:
    """Average accepted step over a grid of random Hawkes configurations.

    Each configuration gets its own child seed, so results do not depend on
    ``workers``.  ``baseline`` fixes the per-mark background rate; ``None``
    draws each from ``U(0.5, 1) / dim`` so the total rate does not grow
    with dimension.
    """
    axes = {**SWEEP_AXES, **(axes or {})}
    grid = list(itertools.product(axes["dim"], axes["sparsity"], axes["a_max"], axes["decay"]))
    seeds = np.random.SeedSequence(seed).spawn(len(grid))
    jobs = [(g, s, n_samples, n_events, cfg, baseline) for g, s in zip(grid, seeds)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


def marginal_means(points: list[SweepPoint], axis: str) -> dict:
    vals = sorted({getattr(p, axis) for p in points})
    return {v: float(np.mean([p.avg_step for p in points if getattr(p, axis) == v])) for v in vals}


def sweep_trend(points: list[SweepPoint]) -> dict:
    """Aggregate avg-step trends: it should not grow with dimension or with density (1 - sparsity)."""
    by_dim = marginal_means(points, "dim")
    by_sparsity = marginal_means(points, "sparsity")
    d = list(by_dim.values())
    s = list(by_sparsity.values())  # ascending sparsity, i.e. descending density
    return {
        "by_dim": by_dim,
        "by_sparsity": by_sparsity,
        "non_increasing_in_dim": all(a >= b for a, b in zip(d, d[1:])),
        "non_increasing_in_density": all(a <= b for a, b in zip(s, s[1:])),
        "all_above_one": all(p.avg_step > 1 for p in points),
    }


@dataclass(frozen=True)
class JumpResult:
    acceptance_rate: float
    avg_step: float
    n_events: int
    n_regimes: int


def jump_experiment(seed: int = 0, n_regimes: int = 20, step: int = 15, n_sequences: int = 5,
                    n_events: int | None = None, cfg: SpecConfig | None = None) -> JumpResult:
    """Speculative sampling with the regime model on its own regimes.

    ``n_events`` defaults to the length of a stitched sample on the regimes.
    """
    rng = np.random.default_rng(seed)
    r_reg, r_data, r_run = rng.spawn(3)
    regimes = sample_regimes(n_regimes, DEFAULT_JUMP_DURATION, DEFAULT_JUMP_RATE, r_reg)
    if n_events is None:
        n_events = len(stitch_poisson(regimes, r_data))
    model = JumpProcessModel(regimes)
    cfg = SpecConfig(step=step) if cfg is None else replace(cfg, step=step)
    _, stats = sample_set(model, [EventSeq.empty()], n_sequences, n_events, "speculative", cfg, r_run)
    st = flat_stats(stats)
    return JumpResult(acceptance_rate(st), avg_accepted_step(st), n_events, n_regimes)


MODEL_COMPONENTS = ("encoder", "decoder", "sample")


@dataclass(frozen=True)
class SpeedupResult:
    """Call counts and per-component seconds of both samplers.

    ``*_model_seconds`` sums the encoder, decoder and sampling components;
    ``*_seconds`` is end-to-end wall-clock, which for the speculative
    sampler also covers constant computation and acceptance.
    """

    ar_calls: int
    spec_calls: int
    ar_seconds: float
    spec_seconds: float
    ar_components: dict
    spec_components: dict
    avg_step: float

    @property
    def call_ratio(self) -> float:
        return self.spec_calls / self.ar_calls

    @property
    def ar_model_seconds(self) -> float:
        return sum(self.ar_components.get(k, 0.0) for k in MODEL_COMPONENTS)

    @property
    def spec_model_seconds(self) -> float:
        return sum(self.spec_components.get(k, 0.0) for k in MODEL_COMPONENTS)

    def to_dict(self) -> dict:
        return {**asdict(self), "call_ratio": self.call_ratio, "ar_model_seconds": self.ar_model_seconds,
                "spec_model_seconds": self.spec_model_seconds}


def speedup_benchmark(model: TPPModel, n_events: int = 1000, cfg: SpecConfig = SpecConfig(),
                      n_sequences: int = 5, seed: int = 0) -> SpeedupResult:
    """Decode/advance call counts and timings of both samplers on the same model."""
    rng = np.random.default_rng(seed)
    r_ar, r_sp = rng.spawn(2)
    h = EventSeq.empty()
    cm = CountingModel(model)
    ar_t: dict = {}
    t0 = time.perf_counter()
    for r in r_ar.spawn(n_sequences):
        autoregressive_sample(cm, h, n_events, r, timings=ar_t)
    t_ar = time.perf_counter() - t0
    ar_calls = cm.decode_advance_calls
    cm = CountingModel(model)
    stats = []
    t0 = time.perf_counter()
    for r in r_sp.spawn(n_sequences):
        stats += speculative_sample(cm, h, n_events, cfg, r)[1]
    t_sp = time.perf_counter() - t0
    sp_t: dict = {}
    for s in stats:
        for k, v in s.timings.items():
            sp_t[k] = sp_t.get(k, 0.0) + v
    return SpeedupResult(ar_calls, cm.decode_advance_calls, t_ar, t_sp, ar_t, sp_t, avg_accepted_step(stats))


def default_benchmark_hawkes(seed: int = 3) -> HawkesProcess:
    rng = np.random.default_rng(seed)
    return HawkesProcess(make_hawkes_config(10, 0.5, 0.1, 1.0, rng, baseline=np.full(10, 0.1)))
