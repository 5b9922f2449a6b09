"""Reference computations used to certify the fast paths.

None of these are used by the samplers.  They evaluate raw densities on
dense grids, enumerate finite models outright, or locate inflection points
numerically, which makes them independent of the envelope and the closed
forms they check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .distributions import Density
from .errors import ParameterError
from .hawkes import HawkesNext
from .models import DiscreteToyModel


@dataclass(frozen=True)
class OracleReport:
    constant: float
    grid_points_used: int
    max_ratio_location: float

    def to_dict(self) -> dict:
        return {"constant": self.constant, "grid_points_used": self.grid_points_used,
                "max_ratio_location": self.max_ratio_location}


def mc_rejection_const(proposal: Density, target: Density, span: tuple[float, float],
                       points: int = 100_000) -> OracleReport:
    """Largest raw density ratio on a geometric grid over ``span``, in log space."""
    lo, hi = span
    if points < 1000:
        raise ParameterError("the oracle grid needs at least 1000 points")
    if not 0 < lo < hi:
        raise ParameterError(f"span must satisfy 0 < lo < hi, got {span}")
    x = np.geomspace(lo, hi, points)
    with np.errstate(invalid="ignore"):
        lr = target.log_pdf(x) - proposal.log_pdf(x)
    lr = np.where(np.isnan(lr), -np.inf, lr)
    i = int(np.argmax(lr))
    with np.errstate(over="ignore"):
        return OracleReport(float(np.exp(lr[i])), points, float(x[i]))


def hawkes_dense_const(proposal: HawkesNext, target: HawkesNext, tau_max: float,
                       points: int = 100_000) -> OracleReport:
    """Joint (delay, mark) ratio maximized over a delay grid on ``[0, tau_max]`` and all marks."""
    tau = np.concatenate([[0.0], np.geomspace(1e-9, tau_max, points - 1)])
    best, where = -np.inf, 0.0
    for x in range(proposal.baseline.size):
        lr = target.log_prob(tau, np.full(tau.size, x)) - proposal.log_prob(tau, np.full(tau.size, x))
        lr = np.where(np.isnan(lr), -np.inf, lr)
        i = int(np.argmax(lr))
        if lr[i] > best:
            best, where = float(lr[i]), float(tau[i])
    return OracleReport(math.exp(best) if best < 709.0 else math.inf, points, where)


MAX_CELLS = 16
MAX_HORIZON = 4


def brute_force_sequence_dist(model: DiscreteToyModel, horizon: int) -> dict[tuple, float]:
    """Exact probability of every length-``horizon`` sequence of (bin, mark) pairs.

    Keys are tuples ``((b_1, x_1), ..., (b_n, x_n))`` of bin and mark indices.
    """
    cells = model.n_bins * model.n_marks
    if cells > MAX_CELLS or horizon > MAX_HORIZON:
        raise ParameterError(f"enumeration budget exceeded: {cells} cells, horizon {horizon} "
                             f"(limits {MAX_CELLS}, {MAX_HORIZON})")
    if horizon < 0:
        raise ParameterError("horizon must be non-negative")
    pairs = [(b, x) for b in range(model.n_bins) for x in range(model.n_marks)]
    out = {}
    for seq in itertools.product(pairs, repeat=horizon):
        state = model.initial_state()
        p = 1.0
        for b, x in seq:
            p *= model.time_table[state, b] * model.mark_table[state, x]
            state = b * model.n_marks + x
        out[seq] = p
    return out


def second_derivative(d: Density, x, h: float | None = None) -> np.ndarray:
    """Central difference of ``pdf_derivative``."""
    x = np.asarray(x, dtype=float)
    h = 1e-5 * np.maximum(x, 1e-3) if h is None else h
    return (d.pdf_derivative(x + h) - d.pdf_derivative(x - h)) / (2 * h)


def numeric_inflections(d: Density, lo: float, hi: float, n: int = 20_000,
                        xtol: float = 1e-13) -> list[float]:
    """Sign changes of the numerical ``f''`` on ``[lo, hi]``, refined by Brent's method.

    ``f''`` is evaluated as ``f * ((log f)'' + ((log f)')^2)`` with the log
    slope differenced numerically, which stays accurate where ``f`` is tiny.
    """
    def g(x):
        x = np.asarray(x, dtype=float)
        h = 1e-6 * x
        s = d.log_pdf_slope(x)
        ds = (d.log_pdf_slope(x + h) - d.log_pdf_slope(x - h)) / (2 * h)
        return ds + s * s

    x = np.geomspace(lo, hi, n)
    v = g(x)
    roots = []
    for i in np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0):
        roots.append(brentq(lambda t: float(g(t)), x[i], x[i + 1], xtol=xtol, rtol=1e-14))
    return roots
