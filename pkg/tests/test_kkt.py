import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnekit import diff, kkt
from gnekit.model import DesignObjective, NonlinearGame, PlayerLayout
from conftest import random_lq, three_player_game

finite = st.floats(min_value=-50.0, max_value=50.0,
                   allow_nan=False, allow_infinity=False)
nonneg = st.floats(min_value=0.0, max_value=50.0,
                   allow_nan=False, allow_infinity=False)


@settings(max_examples=300, deadline=None)
@given(finite, finite)
def test_fb_zero_iff_complementary(a, b):
    phi = kkt.fischer_burmeister(a, b)
    complementary = a >= 0 and b >= 0 and abs(a * b) <= 1e-12
    if complementary:
        assert abs(phi) <= 1e-5  # smoothing floor
    elif a < -1e-6 or b < -1e-6 or a * b > 1e-6:
        assert abs(phi) > 1e-9


@settings(max_examples=200, deadline=None)
@given(nonneg)
def test_fb_axis_points_vanish(a):
    assert abs(kkt.fischer_burmeister(a, 0.0)) <= 2e-5
    assert abs(kkt.fischer_burmeister(0.0, a)) <= 2e-5


def test_fb_matches_closed_form():
    for a, b in [(1.0, 2.0), (-1.0, 3.0), (0.5, -0.5), (-2.0, -2.0)]:
        expect = np.hypot(a, b) - a - b
        assert abs(kkt.fischer_burmeister(a, b) - expect) <= 1e-14


def test_layout_row_ordering():
    game = random_lq(np.random.default_rng(0), N=2, n_i=2, m=3,
                     with_boxes=True).to_nonlinear()
    lay = kkt.make_layout(game)
    labels = kkt.layout_row_labels(lay)
    # stationarity rows per player, then inequality complementarity,
    # then lower/upper bound complementarity
    assert labels[0].startswith("stat")
    kinds = [lbl.split("[")[0] for lbl in labels]
    order = {"stationarity": 0, "equality": 1, "fb-lambda": 2,
             "fb-lower": 3, "fb-upper": 4}
    ranks = [order[k] for k in kinds]
    assert ranks == sorted(ranks)


def test_residual_zero_at_analytic_interior_point():
    # single player, unconstrained quadratic: optimum solves Qx = -c
    Q = np.array([[2.0, 0.0], [0.0, 4.0]])
    c = np.array([-2.0, -8.0])
    game = NonlinearGame(layout=PlayerLayout((2,)),
                         costs=(lambda x, p=None: 0.5 * x @ Q @ x + c @ x,))
    lay = kkt.make_layout(game)
    x_star = np.linalg.solve(Q, -c)
    z = kkt.KKTVector(kkt.default_z0(lay, x0=x_star), lay)
    r = kkt.residual(game, z)
    assert np.max(np.abs(r)) <= 1e-8


def test_residual_dimensions():
    game = three_player_game().to_nonlinear()
    lay = kkt.make_layout(game)
    # 6 stationarity rows + 3 players * 4 shared multiplier rows
    assert lay.dim_z == 6 + 12
    lay_v = kkt.make_layout(game, variational=True)
    assert lay_v.dim_z == 6 + 4


def test_jacobian_matches_fd_at_smooth_points():
    rng = np.random.default_rng(1)
    game = random_lq(rng, N=2, n_i=2, m=3).to_nonlinear()
    lay = kkt.make_layout(game)
    for _ in range(10):
        z = kkt.KKTVector(np.abs(rng.standard_normal(lay.dim_z)) + 0.5, lay)
        J = kkt.residual_jacobian(game, z)
        J_fd = diff.fd_jacobian(
            lambda w, p=None: kkt.residual(game, kkt.KKTVector(w, lay)),
            z.data)
        assert np.max(np.abs(J - J_fd)) <= 1e-5


def test_lq_shortcut_matches_callback_path():
    import dataclasses
    rng = np.random.default_rng(2)
    lq = random_lq(rng, N=3, n_i=2, m=4, n_p=2, with_boxes=True)
    fast = lq.to_nonlinear()
    slow = dataclasses.replace(fast, lq_source=None)
    lay = kkt.make_layout(fast)
    p = rng.standard_normal(2)
    for _ in range(5):
        z = kkt.KKTVector(rng.standard_normal(lay.dim_z), lay)
        r_fast = kkt.residual(fast, z, p)
        r_slow = kkt.residual(slow, z, p)
        np.testing.assert_allclose(r_fast, r_slow, atol=1e-9)
        J_fast = kkt.residual_jacobian(fast, z, p, wrt="z_and_p")
        J_slow = kkt.residual_jacobian(slow, z, p, wrt="z_and_p")
        np.testing.assert_allclose(J_fast, J_slow, atol=1e-7)


def test_expand_variational_replicates_multipliers():
    game = three_player_game().to_nonlinear()
    lay_v = kkt.make_layout(game, variational=True)
    rng = np.random.default_rng(3)
    z_v = kkt.KKTVector(rng.standard_normal(lay_v.dim_z), lay_v)
    z = kkt.expand_variational(z_v, game)
    np.testing.assert_allclose(z.x, z_v.x, atol=1e-14)
    lam_v = z_v.data[lay_v.n:lay_v.n + 4]
    for i in range(3):
        lam_i = z.data[z.layout.n + 4 * i: z.layout.n + 4 * (i + 1)]
        np.testing.assert_allclose(lam_i, lam_v, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=1, max_size=6))
def test_split_point_roundtrip(vals):
    x = np.asarray(vals)
    xp, xm = kkt.split_point(x)
    assert np.all(xp >= 0) and np.all(xm >= 0)
    np.testing.assert_allclose(xp - xm, x, atol=1e-12)
    assert np.max(np.abs(xp * xm), initial=0.0) <= 1e-12


def test_split_bounds_partition():
    lo = np.array([-2.0, 0.0, -np.inf])
    hi = np.array([3.0, np.inf, 1.0])
    (lp, up), (lm, um) = kkt.split_bounds(lo, hi)
    # x = xp - xm with xp, xm >= 0 reproduces the original interval
    assert np.all(lp >= 0) and np.all(lm >= 0)
    np.testing.assert_allclose(np.minimum(lp - um, 0.0), np.minimum(lo, 0.0))


def test_split_l1_requires_positive_alpha1():
    game = three_player_game().to_nonlinear()
    with pytest.raises(kkt.InvalidRegularization):
        kkt.split_l1(game, DesignObjective(alpha1=0.0), rho=1e4)


def test_default_z0_positive_dual_start():
    game = three_player_game().to_nonlinear()
    lay = kkt.make_layout(game)
    z0 = kkt.default_z0(lay)
    assert z0.size == lay.dim_z
    assert np.all(z0[lay.n:] >= 0)
