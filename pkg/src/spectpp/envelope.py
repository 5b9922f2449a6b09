"""Piecewise-linear density envelopes and the rejection constants built on them.

A density is bounded on a grid whose edges include every inflection point,
so each segment is either convex or concave.  On a convex segment the chord
through the edge values lies above the density and the tangent at the
midpoint lies below it; on a concave segment the roles swap.  Taking the
elementwise max (upper) or min (lower) of the two candidates at each edge
picks the right one without knowing the convexity.

The ratio of two linear functions is monotone on a segment, so the largest
ratio of the target's upper bound to the proposal's lower bound is attained
at a segment edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Density, Exponential
from .errors import DomainError, UnboundedRatioError

LOWER_FLOOR = 1e-300


@dataclass(frozen=True)
class Grid:
    """Contiguous segments ``[left[i], right[i]]`` covering ``span``.

    ``truncated_mass`` is the target probability outside the span, where no
    bound is available.
    """

    left: np.ndarray
    right: np.ndarray
    span: tuple[float, float]
    coverage: tuple[float, float]
    truncated_mass: float = 0.0

    @property
    def edges(self) -> np.ndarray:
        return np.append(self.left, self.right[-1])

    def __len__(self):
        return len(self.left)


@dataclass(frozen=True)
class EnvelopeBound:
    grid: Grid
    y_left: np.ndarray
    y_right: np.ndarray
    upper: bool

    def __call__(self, x) -> np.ndarray:
        """Evaluate the piecewise-linear bound at points inside the span."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.grid.span
        if np.any((x < lo) | (x > hi)):
            raise DomainError("bound evaluated outside the grid span")
        i = np.clip(np.searchsorted(self.grid.left, x, side="right") - 1, 0, len(self.grid) - 1)
        xl, xr = self.grid.left[i], self.grid.right[i]
        t = (x - xl) / (xr - xl)
        return self.y_left[i] + t * (self.y_right[i] - self.y_left[i])

    def to_dict(self) -> dict:
        return {
            "direction": "upper" if self.upper else "lower",
            "left": self.grid.left.tolist(),
            "right": self.grid.right.tolist(),
            "y_left": self.y_left.tolist(),
            "y_right": self.y_right.tolist(),
        }


def _edge_pdf(d: Density, x: np.ndarray) -> np.ndarray:
    # x == 0 only appears when the grid is anchored at the origin, which
    # build_grid does only for densities with a finite limit there.
    out = np.empty_like(x)
    zero = x == 0.0
    if np.any(zero):
        out[zero] = d.origin_value()
    if np.any(~zero):
        out[~zero] = d.pdf(x[~zero])
    return out


def _component_bounds(d: Density, left, right, upper):
    mid = 0.5 * (left + right)
    p_mid = d.pdf(mid)
    slope = d.pdf_derivative(mid)
    p_left = _edge_pdf(d, left)
    p_right = _edge_pdf(d, right)
    z_left = slope * (left - mid) + p_mid
    z_right = slope * (right - mid) + p_mid
    if upper:
        return np.maximum(p_left, z_left), np.maximum(p_right, z_right)
    return np.maximum(np.minimum(p_left, z_left), 0.0), np.maximum(np.minimum(p_right, z_right), 0.0)


def get_bounds(d: Density, grid: Grid, upper: bool) -> EnvelopeBound:
    """Upper or lower piecewise-linear bound of ``d`` on ``grid``.

    Mixtures are bounded per component on the shared grid and combined with
    the mixture weights.
    """
    if np.any(grid.left < 0) or np.any(grid.right <= 0):
        raise DomainError("grid edges must lie in (0, inf)")
    y_left = np.zeros(len(grid))
    y_right = np.zeros(len(grid))
    for w, c in zip(d.weights, d.components):
        cl, cr = _component_bounds(c, grid.left, grid.right, upper)
        y_left = y_left + w * cl
        y_right = y_right + w * cr
    return EnvelopeBound(grid, y_left, y_right, upper)


def _anchored_at_origin(*densities: Density) -> bool:
    return all(c.origin_value() is not None for d in densities for c in d.components)


def build_grid(proposal: Density, target: Density, alpha: float, n: int,
               include_origin: bool = True) -> Grid:
    """Grid for bounding ``target`` above and ``proposal`` below.

    The span runs from the smaller ``1 - alpha`` quantile to the larger
    ``alpha`` quantile of the two densities; ``n`` geometrically spaced
    points are merged with every component inflection point inside it.
    When ``include_origin`` is set and every component has a finite
    positive density at 0+ (exponential-like), the span starts at 0 instead.
    """
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0.5, 1), got {alpha}")
    if n < 2:
        raise ValueError(f"grid needs at least 2 points, got {n}")
    lo = min(proposal.quantile(1.0 - alpha), target.quantile(1.0 - alpha))
    hi = max(proposal.quantile(alpha), target.quantile(alpha))
    pts = np.geomspace(lo, hi, n)
    bends = [x for d in (proposal, target) for x in d.inflection_points() if lo < x < hi]
    edges = np.unique(np.concatenate([pts, bends]))
    start = lo
    if include_origin and _anchored_at_origin(proposal, target):
        edges = np.concatenate([[0.0], edges])
        start = 0.0
    truncated = float(target.cdf(start) + target.survival(hi)) if start > 0 else float(target.survival(hi))
    return Grid(edges[:-1], edges[1:], (float(start), float(hi)), (1.0 - alpha, alpha), truncated)


def bound_ratio(proposal: Density, target: Density, grid: Grid) -> float:
    """Largest edge ratio of the target's upper bound to the proposal's lower bound."""
    g = get_bounds(target, grid, upper=True)
    h = get_bounds(proposal, grid, upper=False)
    num = np.concatenate([g.y_left, g.y_right])
    den = np.concatenate([h.y_left, h.y_right])
    bad = (den < LOWER_FLOOR) & (num > 0)
    if np.any(bad):
        x = np.concatenate([grid.left, grid.right])[bad][0]
        raise UnboundedRatioError(
            f"proposal lower bound vanishes at x={x:.6g} where the target upper bound is positive")
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(num > 0, num / den, 0.0)
    return float(np.max(r))


def rejection_const(proposal: Density, target: Density, alpha: float = 0.995, n: int = 512,
                    include_origin: bool = True) -> float:
    """Upper bound on ``sup f_target / f_proposal`` over the grid span."""
    return bound_ratio(proposal, target, build_grid(proposal, target, alpha, n, include_origin))


def analytic_exponential_const(proposal_rate: float, target_rate: float, alpha: float = 0.995) -> float:
    if proposal_rate == target_rate:
        return 1.0
    if proposal_rate < target_rate:
        return target_rate / proposal_rate
    # ratio grows without bound; restrict to the target's alpha-quantile
    x = -math.log1p(-alpha) / target_rate
    return target_rate / proposal_rate * math.exp((proposal_rate - target_rate) * x)


def exponential_truncated_mass(proposal_rate: float, target_rate: float, alpha: float) -> float:
    """Target mass left unbounded by :func:`analytic_exponential_const`."""
    return 0.0 if proposal_rate <= target_rate else 1.0 - alpha


def time_constant(proposal: Density, target: Density, alpha: float, n: int) -> tuple[float, float]:
    """Rejection constant and truncated target mass for a pair of time densities."""
    if proposal == target:
        return 1.0, 0.0
    if isinstance(proposal, Exponential) and isinstance(target, Exponential):
        return (analytic_exponential_const(proposal.rate, target.rate, alpha),
                exponential_truncated_mass(proposal.rate, target.rate, alpha))
    grid = build_grid(proposal, target, alpha, n)
    return bound_ratio(proposal, target, grid), grid.truncated_mass
