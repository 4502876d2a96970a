"""Tune game parameters so the equilibrium lands on a chosen point.

The game's linear costs depend affinely on a parameter vector p. We first
compute the equilibrium at a hidden p_true, then hand only that point to
the inverse solver and ask it to recover parameters reproducing it, under
both the infinity norm (linear objective) and the 2-norm (quadratic).
"""

import dataclasses

import numpy as np

from gnekit import milp
from gnekit.model import LQGame, ParamBox, PlayerLayout

rng = np.random.default_rng(4)
N, n_i, n_p = 3, 2, 2
n = N * n_i
Q = tuple(rng.standard_normal((n, n)) for _ in range(N))
Q = tuple(G @ G.T / n + np.eye(n) for G in Q)
game = LQGame(layout=PlayerLayout((n_i,) * N), Q=Q,
              c=tuple(rng.standard_normal(n) for _ in range(N)),
              F=tuple(rng.standard_normal((n, n_p)) for _ in range(N)),
              A=rng.standard_normal((4, n)), b=np.ones(4),
              params=ParamBox(np.full(n_p, -5.0), np.full(n_p, 5.0)))

p_true = rng.uniform(-1, 1, n_p)
fixed = dataclasses.replace(game, params=ParamBox.singleton(p_true))
target = milp.solve_mip(milp.build_mip(fixed))
print(f"hidden parameters p_true = {np.round(p_true, 4)}")
print(f"target equilibrium x_des = {np.round(target.x, 4)}\n")

for norm in ("inf", "two"):
    res = milp.solve_inverse_lq(game, target.x, norm=norm)
    err = np.max(np.abs(res.x - target.x))
    print(f"{norm}-norm inverse: status {res.status}")
    print(f"  recovered p = {np.round(res.p, 4)}")
    print(f"  ||x(p) - x_des||_inf = {err:.2e}")
