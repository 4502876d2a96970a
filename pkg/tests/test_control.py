import numpy as np
import pytest

from gnekit import control as ct
from gnekit import milp, nls


def stable_random_system(rng, n_x, n_u, n_y=None, radius=0.9):
    A = rng.standard_normal((n_x, n_x))
    A *= radius / np.max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal((n_x, n_u))
    C = rng.standard_normal((n_y or n_x, n_x))
    return A, B, C


def test_linear_system_partition_checked():
    with pytest.raises(ValueError):
        ct.LinearSystem(np.eye(2), np.ones((2, 2)), np.eye(2), (1,))


def test_riccati_zero_dynamics_gives_zero_gain():
    sysm = ct.LinearSystem(np.zeros((2, 2)), np.eye(2), np.eye(2), (2,))
    spec = ct.LQRGameSpec(system=sysm, Q=(np.eye(2),), R=(np.eye(2),),
                          horizon=30)
    K = ct.centralized_lqr_gain(spec)
    assert np.max(np.abs(K)) <= 1e-12


def test_riccati_cheap_control_deadbeats_scalar():
    # x+ = x + u, huge state weight, tiny input weight: K -> 1
    sysm = ct.LinearSystem(np.eye(1), np.eye(1), np.eye(1), (1,))
    spec = ct.LQRGameSpec(system=sysm, Q=(np.eye(1) * 1e6,),
                          R=(np.eye(1) * 1e-6,), horizon=60)
    K = ct.centralized_lqr_gain(spec)
    assert abs(K[0, 0] - 1.0) <= 1e-4


def test_riccati_matches_scalar_dare():
    # x+ = a x + u with unit weights; closed form from the scalar DARE
    a = 1.2
    sysm = ct.LinearSystem(np.array([[a]]), np.eye(1), np.eye(1), (1,))
    spec = ct.LQRGameSpec(system=sysm, Q=(np.eye(1),), R=(np.eye(1),),
                          horizon=300)
    K = ct.centralized_lqr_gain(spec)
    # P = 1 + a^2 P - a^2 P^2 / (1 + P)
    coeffs = [1.0, 1.0 - 1.0 - a * a, -1.0]   # P^2 + (1 - 1 - a^2) P - 1 = 0
    P = max(np.roots(coeffs))
    k_expect = a * P / (1.0 + P)
    assert abs(K[0, 0] - k_expect) <= 1e-8


def test_finite_horizon_cost_monotone_in_horizon():
    rng = np.random.default_rng(0)
    A, B, _ = stable_random_system(rng, 3, 2)
    sysm = ct.LinearSystem(A, B, np.eye(3), (2,))
    x0 = rng.standard_normal(3)
    prev = -np.inf
    for h in (1, 2, 5, 10, 20):
        spec = ct.LQRGameSpec(system=sysm, Q=(np.eye(3),), R=(np.eye(2),),
                              horizon=h)
        K = ct.centralized_lqr_gain(spec)
        # realized cost over h steps with the horizon-h policy
        x, cost = x0.copy(), 0.0
        for _ in range(h):
            u = -K @ x
            cost += x @ x + u @ u
            x = A @ x + B @ u
        assert cost >= prev - 1e-9
        prev = cost


def test_best_response_fixed_point_two_scalar_agents():
    rng = np.random.default_rng(1)
    A = np.array([[0.9, 0.1], [0.0, 0.8]])
    B = np.eye(2)
    sysm = ct.LinearSystem(A, B, np.eye(2), (1, 1))
    spec = ct.LQRGameSpec(system=sysm,
                          Q=(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])),
                          R=(np.eye(1), np.eye(1)), horizon=50)
    K, res = ct.solve_lqr_game(spec)
    assert res.status == "Converged"
    BR = ct.stacked_best_response(spec, K)
    assert np.max(np.abs(K - BR)) <= 1e-8
    assert ct.closed_loop_spectral_radius(sysm, K) < 1.0


def test_single_agent_lqr_game_equals_centralized():
    rng = np.random.default_rng(2)
    A, B, _ = stable_random_system(rng, 4, 2, radius=1.05)
    sysm = ct.LinearSystem(A, B, np.eye(4), (2,))
    spec = ct.LQRGameSpec(system=sysm, Q=(np.eye(4),), R=(np.eye(2),),
                          horizon=50)
    K, res = ct.solve_lqr_game(spec)
    assert res.status == "Converged"
    K_central = ct.centralized_lqr_gain(spec)
    assert np.max(np.abs(K - K_central)) <= 1e-8


def mpc_test_spec(rng, N=3, T=10, T_c=3):
    nx, nu, ny = 6, N, N
    A = rng.standard_normal((nx, nx))
    A *= 0.95 / np.max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal((nx, nu))
    C = rng.standard_normal((ny, nx))
    G = C @ np.linalg.solve(np.eye(nx) - A, B)
    C = np.linalg.solve(G, C)   # unit steady-state gain
    sysm = ct.LinearSystem(A, B, C, (1,) * N)
    return ct.MPCGameSpec(
        system=sysm,
        Q_y=tuple(np.outer(np.eye(ny)[i], np.eye(ny)[i]) for i in range(N)),
        Q_du=tuple(0.5 * np.eye(1) for _ in range(N)),
        q_eps=(1e3,) * N, T=T, T_c=T_c,
        u_min=np.zeros(nu), u_max=4 * np.ones(nu),
        y_min=np.zeros(ny), y_max=5 * np.ones(ny))


def test_prediction_matrices_match_simulation():
    rng = np.random.default_rng(3)
    spec = mpc_test_spec(rng)
    pm = ct.prediction_matrices(spec)
    sysm = spec.system
    x0 = rng.standard_normal(sysm.n_x)
    u_prev = rng.standard_normal(sysm.n_u)
    v = rng.standard_normal(pm["n"])
    # roll the system forward with the increments encoded in v
    x, u = x0.copy(), u_prev.copy()
    for k in range(spec.T):
        du = v[pm["du_cols"][k]]
        u = u + du
        x = sysm.A @ x + sysm.B @ u
        y_pred = pm["Yx"][k] @ x0 + pm["Yu"][k] @ u_prev + pm["Y"][k] @ v
        np.testing.assert_allclose(y_pred, sysm.C @ x, atol=1e-10)
        u_pred = pm["U"][k] @ v + u_prev
        np.testing.assert_allclose(u_pred, u, atol=1e-10)


def test_mpc_game_slack_columns_are_per_agent():
    rng = np.random.default_rng(4)
    spec = mpc_test_spec(rng)
    game = ct.build_mpc_game(spec, np.zeros(6), np.zeros(3), np.ones(3))
    assert game.layout.N == 3
    assert game.layout.dims == (spec.T + 1,) * 3
    # slack lower bounds are zero, increments bounded only over T_c
    for i in range(3):
        lo, _ = game.boxes[i]
        assert lo[-1] == 0.0


def test_closed_loop_matches_modes_for_single_agent():
    rng = np.random.default_rng(5)
    nx, nu = 4, 1
    A = rng.standard_normal((nx, nx))
    A *= 0.9 / np.max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal((nx, nu))
    C = rng.standard_normal((1, nx))
    G = C @ np.linalg.solve(np.eye(nx) - A, B)
    C = C / G[0, 0]
    sysm = ct.LinearSystem(A, B, C, (1,))
    spec = ct.MPCGameSpec(system=sysm, Q_y=(np.eye(1),),
                          Q_du=(0.5 * np.eye(1),), q_eps=(1e3,), T=8, T_c=3,
                          u_min=np.zeros(1), u_max=4 * np.ones(1),
                          y_min=np.zeros(1), y_max=5 * np.ones(1))
    r = np.ones(1)
    tr_nash = ct.simulate_mpc(spec, np.zeros(nx), 10, mode="nash", r=r)
    tr_cent = ct.simulate_mpc(spec, np.zeros(nx), 10, mode="centralized", r=r)
    assert np.max(np.abs(tr_nash.u - tr_cent.u)) <= 1e-8
    assert np.max(np.abs(tr_nash.y - tr_cent.y)) <= 1e-8


def test_zero_reference_zero_state_stays_at_rest():
    rng = np.random.default_rng(6)
    spec = mpc_test_spec(rng)
    tr = ct.simulate_mpc(spec, np.zeros(6), 3, mode="nash", r=np.zeros(3))
    assert np.max(np.abs(tr.u)) <= 1e-8
    assert np.max(np.abs(tr.y)) <= 1e-8


def test_slacks_stay_small_when_hard_feasible():
    rng = np.random.default_rng(7)
    spec = mpc_test_spec(rng)
    tr = ct.simulate_mpc(spec, np.zeros(6), 5, mode="nash", r=np.ones(3))
    assert np.max(tr.eps, initial=0.0) <= 1e-6
    assert all(s == "Optimal" for s in tr.statuses)


def test_trace_csv_row_count():
    rng = np.random.default_rng(8)
    spec = mpc_test_spec(rng)
    tr = ct.simulate_mpc(spec, np.zeros(6), 4, mode="centralized", r=np.ones(3))
    lines = tr.to_csv().strip().splitlines()
    assert len(lines) == 5  # header + 4 steps
    assert len(tr.decisions) == 4
