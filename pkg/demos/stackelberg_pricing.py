"""A leader prices energy for eight followers sharing one capacity.

Each follower chooses a nonnegative quantity; quadratic costs couple
neighboring followers and the total is capped at C = 1. The leader sets
per-follower base prices p1 and a common congestion coefficient p2
(price_i = p1_i + p2 * total^2), anticipating the followers' equilibrium.
The leader's loss trades demand tracking against price regularity and
collected revenue, and is minimized through the equilibrium system.
"""

import numpy as np

from gnekit import kkt, nls
from gnekit.model import DesignObjective, NonlinearGame, ParamBox, \
    PlayerLayout

N = 8
a = np.array([1.0, 1.5, 0.8, 1.2, 2.0, 0.9, 1.8, 1.1])
G = np.zeros((N, N))
for i, j, v in [(0, 1, 0.2), (1, 2, 0.1), (2, 3, 0.15), (3, 4, 0.1),
                (0, 4, 0.1), (4, 5, 0.2), (5, 6, 0.1), (6, 7, 0.2)]:
    G[i, j] = G[j, i] = v
cap, demand, eta, rho_p, pbar = 1.0, 0.9, 0.1, 0.3, -2.0


def total(x):
    s = x[0]
    for v in x[1:]:
        s = s + v
    return s


def price(i, x, p):
    return p[i] + p[N] * total(x) ** 2


def make_cost(i):
    def f(x, p):
        s = a[i] * x[i] * x[i]
        for j in range(N):
            if G[i, j]:
                s = s + G[i, j] * x[i] * x[j]
        return s + price(i, x, p) * x[i]
    return f


def ineq(x, p):
    out = np.empty(1, dtype=object)
    out[0] = total(x) - cap
    return out


def leader_loss(x, p):
    J = (total(x) - demand) ** 2
    for i in range(N):
        J = J + eta * (p[i] - pbar) ** 2 - rho_p * price(i, x, p) * x[i]
    return J


game = NonlinearGame(
    layout=PlayerLayout((1,) * N),
    costs=tuple(make_cost(i) for i in range(N)),
    ineq=ineq, n_g=1,
    boxes=tuple((np.zeros(1), np.full(1, np.inf)) for _ in range(N)),
    params=ParamBox(np.concatenate([np.full(N, -5.0), [0.0]]),
                    np.concatenate([np.zeros(N), [0.2]])))

p0 = np.concatenate([np.full(N, -2.5), [0.1]])
z0 = kkt.default_z0(kkt.make_layout(game), x0=np.full(N, cap / N))
res = nls.solve_design(game, DesignObjective(nonlinear=leader_loss),
                       cfg=nls.LMConfig(rho=1e8, max_iter=500),
                       init=(z0, p0))

print(f"status {res.status} after {res.iterations} iterations")
print(f"follower quantities x* = {np.round(res.x, 4)}")
print(f"  total {np.sum(res.x):.6f} (capacity {cap})")
print(f"base prices p1* = {np.round(res.p[:N], 4)}")
print(f"congestion coefficient p2* = {res.p[N]:.4f}")
print(f"leader loss {leader_loss(res.x, res.p):.4f}")
