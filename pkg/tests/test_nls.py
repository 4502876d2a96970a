import numpy as np
import pytest

from gnekit import kkt, nls
from gnekit.model import (DesignObjective, NonlinearGame, ParamBox,
                          PlayerLayout, build_inverse_objective)
from conftest import KNOWN_POINTS, random_lq, three_player_game


def test_converges_on_unconstrained_quadratic_duopoly():
    # two scalar players, analytic equilibrium from the stacked stationarity
    game = NonlinearGame(
        layout=PlayerLayout((1, 1)),
        costs=(lambda x, p=None: (x[0] - 1.0) ** 2 + 0.5 * x[0] * x[1],
               lambda x, p=None: (x[1] + 2.0) ** 2 - 0.25 * x[0] * x[1]))
    res = nls.solve_gne_nls(game)
    assert res.status == "Converged"
    # 2(x0-1)+0.5 x1 = 0, 2(x1+2)-0.25 x0 = 0
    M = np.array([[2.0, 0.5], [-0.25, 2.0]])
    x_star = np.linalg.solve(M, np.array([2.0, -4.0]))
    np.testing.assert_allclose(res.x, x_star, atol=1e-8)


def test_known_equilibrium_reached_from_zero(golden_game):
    res = nls.solve_gne_nls(golden_game, variational=True)
    assert res.status == "Converged"
    assert res.residual_norm <= 1e-8
    report = nls.best_response_certificate(golden_game, res.x, tol=1e-6)
    assert report.passed


def test_merit_is_monotone_along_accepted_steps():
    game = random_lq(np.random.default_rng(0), N=2, n_i=3, m=4)
    res = nls.solve_gne_nls(game)
    assert res.status == "Converged"
    merits = [row[1] for row in res.trace]
    assert all(b <= a + 1e-12 for a, b in zip(merits, merits[1:]))


def test_random_convex_games_converge_and_certify():
    rng = np.random.default_rng(1)
    for _ in range(8):
        N = int(rng.integers(2, 4))
        n_i = int(rng.integers(1, 3))
        game = random_lq(rng, N=N, n_i=n_i, m=int(rng.integers(0, 5)))
        res = nls.solve_gne_nls(game)
        assert res.status == "Converged"
        assert res.residual_norm <= 1e-8
        assert nls.best_response_certificate(game, res.x, tol=1e-4).passed


def test_certificate_rejects_non_equilibrium(golden_game):
    report = nls.best_response_certificate(golden_game, np.zeros(6), tol=1e-3)
    assert not report.passed
    assert report.max_improvement > 1.0


def test_certificate_accepts_printed_points(golden_game):
    for x in KNOWN_POINTS.values():
        assert nls.best_response_certificate(golden_game, x, tol=1e-3).passed


def test_design_trivial_objective_returns_feasible_parameter():
    rng = np.random.default_rng(2)
    game = random_lq(rng, N=2, n_i=2, m=3, n_p=2)
    res = nls.solve_design(game, DesignObjective())
    assert res.status == "Converged"
    assert np.all(res.p >= game.params.lower - 1e-9)
    assert np.all(res.p <= game.params.upper + 1e-9)
    assert res.residual_norm <= 1e-7


def test_design_inverse_recovers_reachable_target():
    rng = np.random.default_rng(3)
    game = random_lq(rng, N=2, n_i=2, m=0, n_p=4)
    # target chosen as the equilibrium at a known parameter
    p_true = rng.uniform(-1, 1, 4)
    base = nls.solve_gne_nls(game, p0=p_true)
    assert base.status == "Converged"
    design = build_inverse_objective(base.x, norm="two", n_p=4)
    res = nls.solve_design(game, design)
    assert res.status in ("Converged", "SmallStep")
    assert np.max(np.abs(res.x - base.x)) <= 1e-4


def test_sparse_falls_back_without_l1():
    game = random_lq(np.random.default_rng(4), N=2, n_i=2, m=2, n_p=1)
    design = DesignObjective(quad=(np.eye(5), np.zeros(5)))
    res = nls.solve_sparse(game, design)
    assert res.status in ("Converged", "SmallStep")


def test_sparse_soft_threshold_on_pair_game():
    # two scalar agents sharing the cost (x0 - x1)^2; design pulls the pair
    # toward 0.5 with an l1 penalty strong enough to zero it out
    game = NonlinearGame(layout=PlayerLayout((1, 1)),
                         costs=(lambda x, p=None: (x[0] - x[1]) ** 2,
                                lambda x, p=None: (x[0] - x[1]) ** 2))
    ref = np.array([0.4, 0.6])
    QJ, cJ = 2 * np.eye(2), -2 * ref
    weak = nls.solve_sparse(game, DesignObjective(quad=(QJ, cJ), alpha1=0.2),
                            cfg=nls.LMConfig(rho=1e4, max_iter=400))
    strong = nls.solve_sparse(game, DesignObjective(quad=(QJ, cJ), alpha1=2.0),
                              cfg=nls.LMConfig(rho=1e4, max_iter=400))
    # soft threshold of the pair mean 0.5: 0.5 - 0.1 = 0.4, then 0
    np.testing.assert_allclose(weak.x, [0.4, 0.4], atol=1e-3)
    assert np.max(np.abs(strong.x)) <= 1e-4


def test_variational_multipliers_expand_to_full_kkt(golden_game):
    res = nls.solve_gne_nls(golden_game, variational=True)
    z_full = kkt.expand_variational(res.z, golden_game.to_nonlinear())
    r = kkt.residual(golden_game.to_nonlinear(), z_full)
    assert np.max(np.abs(r)) <= 1e-7


def test_primal_only_start_accepted(golden_game):
    res = nls.solve_gne_nls(golden_game, z0=np.zeros(6), variational=True)
    assert res.status == "Converged"
