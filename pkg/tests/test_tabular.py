import numpy as np
import pytest

from spectpp.models import DiscreteToyModel
from spectpp.oracles import brute_force_sequence_dist
from spectpp.sampler import SpecConfig
from spectpp.tabular import (acceptance_tables, encode_outcomes, tabular_autoregressive_sample,
                             tabular_speculative_sample)


@pytest.fixture
def model():
    # no near-zero table entries, so every outcome count is well approximated by a normal
    return DiscreteToyModel.random(np.random.default_rng(77), concentration=5.0)


def test_tables_identity_on_diagonal(model):
    a_t, a_m = acceptance_tables(model, SpecConfig())
    for s in range(model.n_states):
        assert np.all(a_t[s, s] == 1) and np.all(a_m[s, s] == 1)
    assert np.all((a_t >= 0) & (a_t <= 1))


def test_shapes_and_values(model, rng):
    bins, marks = tabular_speculative_sample(model, 100, 7, SpecConfig(step=3), rng)
    assert bins.shape == marks.shape == (100, 7)
    assert bins.max() < model.n_bins and marks.max() < model.n_marks


def _z(model, bins, marks, horizon):
    exact = brute_force_sequence_dist(model, horizon)
    cells = model.n_bins * model.n_marks
    n = bins.shape[0]
    counts = np.bincount(encode_outcomes(model, bins, marks), minlength=cells ** horizon)
    z = []
    for key, p in exact.items():
        code = 0
        for b, x in key:
            code = code * cells + b * model.n_marks + x
        z.append(abs(counts[code] / n - p) / np.sqrt(p * (1 - p) / n))
    return max(z)


def test_autoregressive_control(model, rng):
    bins, marks = tabular_autoregressive_sample(model, 200_000, 2, rng)
    assert _z(model, bins, marks, 2) <= 4.5


@pytest.mark.parametrize("step", [1, 2, 5])
def test_speculative_exact(model, rng, step):
    bins, marks = tabular_speculative_sample(model, 200_000, 3, SpecConfig(step=step), rng)
    assert _z(model, bins, marks, 3) <= 4.5


def test_steps_reported(model, rng):
    _, _, steps = tabular_speculative_sample(model, 1000, 6, SpecConfig(step=3), rng, return_steps=True)
    steps = np.asarray(steps)
    assert steps.min() >= 1 and steps.max() <= 3


def test_top_k_is_not_exact():
    # with top_k > 1 later events are biased toward the frozen proposal
    model = DiscreteToyModel.random(np.random.default_rng(5), concentration=0.3)
    rng = np.random.default_rng(6)
    bins, marks = tabular_speculative_sample(model, 400_000, 3, SpecConfig(step=3, top_k=3), rng)
    assert _z(model, bins, marks, 3) > 6
