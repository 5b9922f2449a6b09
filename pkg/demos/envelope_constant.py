"""Envelope rejection constant against a dense-grid oracle.

Bounds a log-normal mixture target above and a Gamma proposal below, then
shows how the constant approaches the oracle value as the grid grows.

Run:
    python demos/envelope_constant.py
"""
from spectpp.distributions import Gamma, LogNormal, Mixture
from spectpp.envelope import bound_ratio, build_grid
from spectpp.oracles import mc_rejection_const

proposal = Gamma(2.0, 1.5)
target = Mixture([LogNormal(-0.2, 0.5), LogNormal(0.6, 0.3)], [0.6, 0.4])

oracle = None
for n in (16, 64, 256, 1024, 4096):
    grid = build_grid(proposal, target, 0.995, n)
    if oracle is None:
        oracle = mc_rejection_const(proposal, target, grid.span)
        print(f"oracle constant {oracle.constant:.6f} at x={oracle.max_ratio_location:.4f}")
    c = bound_ratio(proposal, target, grid)
    print(f"n={n:>5}  edges={len(grid.edges):>5}  constant={c:.6f}  ratio to oracle={c / oracle.constant:.5f}")
