import numpy as np
import pytest

from gnekit.model import (DesignObjective, LQGame, ParamBox, PlayerLayout,
                          augment_bounds, build_inverse_objective,
                          validate_lq, validate_nonlinear)
from conftest import random_lq


def test_layout_partition():
    lay = PlayerLayout((2, 3, 1))
    assert lay.N == 3 and lay.n == 6
    assert lay.offsets == (0, 2, 5)


def test_layout_rejects_empty_players():
    with pytest.raises(ValueError):
        PlayerLayout((2, 0))
    with pytest.raises(ValueError):
        PlayerLayout(())


def test_param_box_singleton_and_free():
    pb = ParamBox.singleton([1.0, -2.0])
    assert pb.n_p == 2
    assert np.all(pb.lower == pb.upper)
    free = ParamBox.free(3)
    assert np.all(np.isinf(free.lower)) and np.all(np.isinf(free.upper))


def test_lq_defaults_fill_empty_blocks():
    game = random_lq(np.random.default_rng(0), N=2, n_i=2, m=0)
    assert game.A.shape == (0, 4)
    assert game.A_eq.shape == (0, 4)
    assert all(F.shape == (4, 0) for F in game.F)


def test_validate_lq_flags_shape_mismatch():
    game = random_lq(np.random.default_rng(1), N=2, n_i=2, m=3)
    assert validate_lq(game).ok
    bad = LQGame(layout=game.layout, Q=game.Q, c=game.c,
                 A=np.ones((3, 4)), b=np.ones(2))
    report = validate_lq(bad)
    assert not report.ok


def test_validate_nonlinear_runs_callbacks():
    from gnekit.model import NonlinearGame
    game = NonlinearGame(layout=PlayerLayout((1, 1)),
                         costs=(lambda x, p=None: x[0] ** 2,
                                lambda x, p=None: (x[1] - 1.0) ** 2))
    assert validate_nonlinear(game).ok


def test_augment_bounds_stacks_rows_and_boxes():
    rng = np.random.default_rng(2)
    game = random_lq(rng, N=2, n_i=2, m=3, with_boxes=True)
    aug = augment_bounds(game)
    # 3 shared rows + 4 upper + 4 lower finite box rows
    assert aug.A_bar.shape[0] == 3 + 8
    x = rng.uniform(-1, 1, 4)
    shared = game.b - game.A @ x
    np.testing.assert_allclose(aug.b_bar[:3] - aug.A_bar[:3] @ x, shared,
                               atol=1e-12)


def test_augment_bounds_idempotent_on_unbounded():
    game = random_lq(np.random.default_rng(3), N=2, n_i=2, m=4)
    aug = augment_bounds(game)
    assert aug.A_bar.shape[0] == 4  # infinite boxes add no rows


def test_inverse_objective_norms():
    x_des = np.array([1.0, -2.0])
    inf_obj = build_inverse_objective(x_des, norm="inf")
    assert inf_obj.n_J == 1 and len(inf_obj.pwa_terms[0]) == 4
    one_obj = build_inverse_objective(x_des, norm="one")
    assert one_obj.n_J == 2
    two_obj = build_inverse_objective(x_des, norm="two")
    assert two_obj.quad is not None
    # all three vanish exactly at the target
    p = np.zeros(0)
    assert abs(inf_obj.pwa_value(x_des, p)) <= 1e-12
    assert abs(one_obj.pwa_value(x_des, p)) <= 1e-12
    val = two_obj.quad_value(x_des, p) + 0.5 * x_des @ x_des
    assert abs(val) <= 1e-12


def test_design_objective_rejects_negative_weights():
    with pytest.raises(ValueError):
        DesignObjective(alpha1=-1.0)


def test_pwa_value_is_max_of_pieces():
    D1, D2 = np.array([1.0, 0.0]), np.array([-1.0, 0.0])
    E = np.zeros(0)
    obj = DesignObjective(pwa_terms=([(D1, E, 0.0), (D2, E, 0.0)],))
    assert obj.pwa_value(np.array([3.0, 5.0]), np.zeros(0)) == 3.0
    assert obj.pwa_value(np.array([-4.0, 5.0]), np.zeros(0)) == 4.0


def test_to_nonlinear_costs_match():
    rng = np.random.default_rng(4)
    game = random_lq(rng, N=2, n_i=3, m=2, n_p=2)
    nlg = game.to_nonlinear()
    x = rng.standard_normal(6)
    p = rng.standard_normal(2)
    for i in range(2):
        expect = 0.5 * x @ game.Q[i] @ x + (game.c[i] + game.F[i] @ p) @ x
        assert abs(nlg.costs[i](x, p) - expect) <= 1e-12
    np.testing.assert_allclose(nlg.ineq(x, p),
                               game.A @ x - game.b - game.S @ p, atol=1e-12)
