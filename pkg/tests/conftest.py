import numpy as np
import pytest

from gnekit.model import LQGame, ParamBox, PlayerLayout


def three_player_game():
    """3 players, 2 variables each, 4 shared inequality rows; the game has
    three equilibria with active sets {1}, {1,4}, {1,2,4}."""
    n = 6
    A = np.array([[-0.4, -0.1, -2.1, 1.6, -1.8, -0.8],
                  [0.5, -1.2, -1.1, -0.9, 0.6, 2.3],
                  [0.0, -1.1, 0.5, -0.6, 0.0, 1.2],
                  [-0.7, 0.0, -0.9, -0.2, 0.3, -1.0]])
    return LQGame(layout=PlayerLayout((2, 2, 2)),
                  Q=tuple(np.eye(n) for _ in range(3)),
                  c=tuple(float(i) * np.ones(n) for i in range(3)),
                  A=A, b=np.ones(4))


# equilibria of the three-player game, rounded to 4 digits
KNOWN_POINTS = {
    (1,): np.array([11.0588, 2.7647, -1.0, -1.0, -2.0, -2.0]),
    (1, 4): np.array([0.0, 0.0, -0.3436, -1.5001, -1.1599, -0.7387]),
    (1, 2, 4): np.array([0.0, 0.0, -0.7966, -0.8336, -0.2783, -0.1998]),
}
KNOWN_VARIATIONAL = np.array([0.3553, 0.037, 0.0431, -1.5324, -1.4232, -1.408])


@pytest.fixture
def golden_game():
    return three_player_game()


def random_lq(rng, N=3, n_i=2, m=4, n_p=0, with_boxes=False, spd_scale=1.0):
    """Random convex LQ game: SPD costs, random shared rows, unit rhs."""
    n = N * n_i
    Q, c, F = [], [], []
    for _ in range(N):
        G = rng.standard_normal((n, n))
        Q.append(spd_scale * (G @ G.T / n) + np.eye(n))
        c.append(rng.standard_normal(n))
        F.append(rng.standard_normal((n, n_p)) if n_p else np.zeros((n, 0)))
    kw = {}
    if m:
        kw["A"] = rng.standard_normal((m, n))
        kw["b"] = np.ones(m)
        if n_p:
            kw["S"] = rng.standard_normal((m, n_p))
    if with_boxes:
        kw["boxes"] = tuple(
            (np.full(n_i, -10.0), np.full(n_i, 10.0)) for _ in range(N))
    params = ParamBox(-5 * np.ones(n_p), 5 * np.ones(n_p)) if n_p else ParamBox()
    return LQGame(layout=PlayerLayout((n_i,) * N), Q=tuple(Q), c=tuple(c),
                  F=tuple(F), params=params, **kw)
