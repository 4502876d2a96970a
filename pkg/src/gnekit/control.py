"""Game-theoretic control on discrete-time linear systems.

Two constructions: a gain game where each agent plays a state-feedback
matrix against the others' finite-horizon LQR best responses, and a
distributed MPC game where agents optimize their own input increments
subject to shared softened output constraints.  Closed-loop simulation
supports noncooperative (Nash), variational-Nash and centralized modes.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from . import convexcore, milp, nls
from .model import LQGame, ParamBox, PlayerLayout


class SingularRiccatiStep(ValueError):
    pass


@dataclass(frozen=True)
class LinearSystem:
    """x(t+1) = A x(t) + B u(t), y(t) = C x(t); B columns split among agents."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    input_dims: tuple            # per-agent input counts, sums to n_u

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B", np.atleast_2d(np.asarray(self.B, dtype=float)))
        object.__setattr__(self, "C", np.atleast_2d(np.asarray(self.C, dtype=float)))
        object.__setattr__(self, "input_dims", tuple(int(d) for d in self.input_dims))
        if sum(self.input_dims) != self.B.shape[1]:
            raise ValueError("input partition does not cover the B columns")
        if any(d <= 0 for d in self.input_dims):
            raise ValueError("input partition must be disjoint and complete")

    @property
    def N(self):
        return len(self.input_dims)

    @property
    def n_x(self):
        return self.A.shape[0]

    @property
    def n_u(self):
        return self.B.shape[1]

    @property
    def n_y(self):
        return self.C.shape[0]

    def input_cols(self, i):
        off = sum(self.input_dims[:i])
        return np.arange(off, off + self.input_dims[i])


@dataclass(frozen=True)
class LQRGameSpec:
    system: LinearSystem
    Q: tuple                     # per-agent n_x x n_x state weights, PSD
    R: tuple                     # per-agent n_i x n_i input weights, PD
    horizon: int = 50

    def __post_init__(self):
        object.__setattr__(self, "Q", tuple(np.asarray(q, dtype=float) for q in self.Q))
        object.__setattr__(self, "R", tuple(np.atleast_2d(np.asarray(r, dtype=float))
                                            for r in self.R))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


def _riccati_gain(A, B, Q, R, horizon):
    """First-step gain of the finite-horizon discrete Riccati recursion."""
    P = Q.copy()
    K = np.zeros((B.shape[1], A.shape[0]))
    for _ in range(horizon):
        G = R + B.T @ P @ B
        try:
            K = np.linalg.solve(G, B.T @ P @ A)
        except np.linalg.LinAlgError as exc:
            raise SingularRiccatiStep(str(exc)) from exc
        P = Q + A.T @ P @ (A - B @ K)
        P = 0.5 * (P + P.T)
    return K, P


def lqr_best_response_gain(spec, i, K):
    """Finite-horizon LQR gain of agent i against the others' fixed gains.

    K is the full stacked gain (n_u x n_x); agent i's own rows are ignored.
    """
    sys = spec.system
    cols_i = sys.input_cols(i)
    others = np.setdiff1d(np.arange(sys.n_u), cols_i)
    A_cl = sys.A - sys.B[:, others] @ np.atleast_2d(K)[others, :]
    Ki, _ = _riccati_gain(A_cl, sys.B[:, cols_i], spec.Q[i], spec.R[i],
                          spec.horizon)
    return Ki


def centralized_lqr_gain(spec):
    """Gain of the single-controller problem with summed state weights."""
    sys = spec.system
    Qsum = sum(spec.Q)
    Rblk = np.zeros((sys.n_u, sys.n_u))
    for i in range(sys.N):
        cols = sys.input_cols(i)
        Rblk[np.ix_(cols, cols)] = spec.R[i]
    K, _ = _riccati_gain(sys.A, sys.B, Qsum, Rblk, spec.horizon)
    return K


def stacked_best_response(spec, K):
    out = np.zeros_like(np.atleast_2d(K))
    for i in range(spec.system.N):
        out[spec.system.input_cols(i), :] = lqr_best_response_gain(spec, i, K)
    return out


def closed_loop_spectral_radius(system, K):
    return float(np.max(np.abs(np.linalg.eigvals(system.A - system.B @ K))))


def solve_lqr_game(spec, K0=None, cfg=None):
    """Nash equilibrium over feedback gains: K_i equals its own
    finite-horizon LQR best response to the other agents' gains.

    Solved as nonlinear least squares on the fixed-point residual
    K - BR(K), starting from the centralized gain.  Returns (K, NLSResult).
    """
    sys = spec.system
    if K0 is None:
        K0 = centralized_lqr_gain(spec)
    shape = (sys.n_u, sys.n_x)
    cfg = cfg or nls.LMConfig(residual_tol=1e-9)

    def resid(w):
        K = w.reshape(shape)
        return (K - stacked_best_response(spec, K)).ravel()

    def jac(w):
        # best-response map has no closed-form derivative; finite differences
        nw = w.size
        J = np.empty((nw, nw))
        step = 1e-6
        for k in range(nw):
            e = np.zeros(nw)
            e[k] = step * max(1.0, abs(w[k]))
            J[:, k] = (resid(w + e) - resid(w - e)) / (2 * e[k])
        return J

    nvar = sys.n_u * sys.n_x
    w, r, merit, status, iters, trace = nls._lm_core(
        resid, jac, np.atleast_2d(K0).ravel().copy(), cfg,
        np.full(nvar, -np.inf), np.full(nvar, np.inf),
        extra=None, pure_nls=True)
    K = w.reshape(shape)
    res = nls.NLSResult(status=status, z=K, x=w.copy(),
                        residual_norm=float(np.max(np.abs(r), initial=0.0)),
                        iterations=iters, merit=merit, trace=trace)
    res.spectral_radius = closed_loop_spectral_radius(sys, K)
    return K, res


@dataclass(frozen=True)
class MPCGameSpec:
    """Distributed tracking MPC with input-increment decision variables.

    Each agent i optimizes its increment sequence and one slack that softens
    the shared output bounds; constraints are imposed on the first
    constraint_horizon steps only.
    """

    system: LinearSystem
    Q_y: tuple                   # per-agent n_y x n_y output weights
    Q_du: tuple                  # per-agent n_i x n_i increment weights
    q_eps: tuple                 # per-agent linear slack penalties
    T: int
    T_c: int = None
    du_min: np.ndarray = None
    du_max: np.ndarray = None
    u_min: np.ndarray = None
    u_max: np.ndarray = None
    y_min: np.ndarray = None
    y_max: np.ndarray = None

    def __post_init__(self):
        sys = self.system
        object.__setattr__(self, "Q_y", tuple(np.atleast_2d(np.asarray(q, float))
                                              for q in self.Q_y))
        object.__setattr__(self, "Q_du", tuple(np.atleast_2d(np.asarray(q, float))
                                               for q in self.Q_du))
        object.__setattr__(self, "q_eps", tuple(float(q) for q in self.q_eps))
        if self.T_c is None:
            object.__setattr__(self, "T_c", self.T)
        if self.T_c > self.T or self.T_c < 1:
            raise ValueError("constraint horizon must satisfy 1 <= T_c <= T")
        defaults = {"du_min": np.full(sys.n_u, -np.inf),
                    "du_max": np.full(sys.n_u, np.inf),
                    "u_min": np.full(sys.n_u, -np.inf),
                    "u_max": np.full(sys.n_u, np.inf),
                    "y_min": np.full(sys.n_y, -np.inf),
                    "y_max": np.full(sys.n_y, np.inf)}
        for name, dflt in defaults.items():
            v = getattr(self, name)
            object.__setattr__(self, name,
                               dflt if v is None else np.asarray(v, dtype=float))
        if any(q < 0 for q in self.q_eps):
            raise ValueError("slack penalties must be nonnegative")

    @property
    def block_dims(self):
        # per-agent decision block: T increments plus one slack
        return tuple(self.T * d + 1 for d in self.system.input_dims)


def prediction_matrices(spec):
    """Affine maps from (x0, u_prev, stacked increments) to predicted
    outputs y_1..y_T and inputs u_0..u_{T-1}.

    Increment stacking follows the game variable order: agent-major, each
    agent's block time-major, slack last.
    """
    sys = spec.system
    T = spec.T
    n = sum(spec.block_dims)
    n_x, n_u, n_y = sys.n_x, sys.n_u, sys.n_y
    du_cols = np.full((T, n_u), -1, dtype=int)
    eps_cols = np.zeros(sys.N, dtype=int)
    off = 0
    for i in range(sys.N):
        d = sys.input_dims[i]
        cols = sys.input_cols(i)
        for k in range(T):
            du_cols[k, cols] = off + k * d + np.arange(d)
        eps_cols[i] = off + T * d
        off += T * d + 1

    # u_k = u_prev + sum of increments up to k
    U = np.zeros((T, n_u, n))
    acc = np.zeros((n_u, n))
    for k in range(T):
        acc[np.arange(n_u), du_cols[k]] += 1.0
        U[k] = acc.copy()
    # x_{k+1} = A x_k + B u_k rolled forward
    X = np.zeros((T, n_x, n))         # coefficient on decision vector
    Xx = np.zeros((T, n_x, n_x))      # coefficient on x0
    Xu = np.zeros((T, n_x, n_u))      # coefficient on u_prev
    xd = np.zeros((n_x, n))
    xx = np.eye(n_x)
    xu = np.zeros((n_x, n_u))
    for k in range(T):
        xd = sys.A @ xd + sys.B @ U[k]
        xx = sys.A @ xx
        xu = sys.A @ xu + sys.B
        X[k], Xx[k], Xu[k] = xd, xx, xu
    Y = np.einsum("ij,kjl->kil", sys.C, X)
    Yx = np.einsum("ij,kjl->kil", sys.C, Xx)
    Yu = np.einsum("ij,kjl->kil", sys.C, Xu)
    return {"U": U, "Y": Y, "Yx": Yx, "Yu": Yu,
            "du_cols": du_cols, "eps_cols": eps_cols, "n": n}


def build_mpc_game(spec, x_t, u_prev, r_t):
    """Condensed per-step game: agent blocks (increments, slack), shared
    softened output rows over the constraint horizon, local input rows,
    increment bounds as boxes."""
    sys = spec.system
    pm = prediction_matrices(spec)
    n = pm["n"]
    T, T_c = spec.T, spec.T_c
    x_t = np.asarray(x_t, dtype=float)
    u_prev = np.asarray(u_prev, dtype=float)
    r_t = np.asarray(r_t, dtype=float)

    y0 = np.array([pm["Yx"][k] @ x_t + pm["Yu"][k] @ u_prev for k in range(T)])
    W = pm["Y"]                     # T x n_y x n

    Qs, cs, Fs = [], [], []
    for i in range(sys.N):
        Qi = np.zeros((n, n))
        ci = np.zeros(n)
        for k in range(T):
            Qi += 2.0 * W[k].T @ spec.Q_y[i] @ W[k]
            ci += 2.0 * W[k].T @ spec.Q_y[i] @ (y0[k] - r_t)
        d = sys.input_dims[i]
        for k in range(T):
            idx = pm["du_cols"][k, sys.input_cols(i)]
            Qi[np.ix_(idx, idx)] += 2.0 * spec.Q_du[i]
        ci[pm["eps_cols"][i]] += spec.q_eps[i]
        Qs.append(0.5 * (Qi + Qi.T))
        cs.append(ci)
        Fs.append(np.zeros((n, 0)))

    A_rows, b_rows = [], []
    eps_sum = np.zeros(n)
    eps_sum[pm["eps_cols"]] = 1.0
    for k in range(T_c):
        for j in range(sys.n_y):
            if np.isfinite(spec.y_max[j]):
                A_rows.append(W[k, j] - eps_sum)
                b_rows.append(spec.y_max[j] - y0[k, j])
            if np.isfinite(spec.y_min[j]):
                A_rows.append(-W[k, j] - eps_sum)
                b_rows.append(y0[k, j] - spec.y_min[j])
    for k in range(T_c):
        for j in range(sys.n_u):
            if np.isfinite(spec.u_max[j]):
                A_rows.append(pm["U"][k, j].copy())
                b_rows.append(spec.u_max[j] - u_prev[j])
            if np.isfinite(spec.u_min[j]):
                A_rows.append(-pm["U"][k, j])
                b_rows.append(u_prev[j] - spec.u_min[j])
    A = np.array(A_rows) if A_rows else np.zeros((0, n))
    b = np.array(b_rows)

    boxes = []
    for i in range(sys.N):
        d = sys.input_dims[i]
        lo = np.full(T * d + 1, -np.inf)
        hi = np.full(T * d + 1, np.inf)
        cols = sys.input_cols(i)
        for k in range(T_c):
            lo[k * d:(k + 1) * d] = spec.du_min[cols]
            hi[k * d:(k + 1) * d] = spec.du_max[cols]
        lo[T * d] = 0.0             # slack nonnegative
        boxes.append((lo, hi))

    return LQGame(layout=PlayerLayout(spec.block_dims), Q=Qs, c=cs, F=Fs,
                  A=A, b=b, S=np.zeros((A.shape[0], 0)),
                  A_eq=np.zeros((0, n)), b_eq=np.zeros(0),
                  S_eq=np.zeros((0, 0)), boxes=boxes,
                  params=ParamBox(np.zeros(0), np.zeros(0)))


@dataclass
class ClosedLoopTrace:
    x: np.ndarray                # (T_sim+1) x n_x
    u: np.ndarray                # T_sim x n_u
    y: np.ndarray                # T_sim x n_y, output after each applied input
    agent_costs: np.ndarray      # T_sim x N realized stage costs
    eps: np.ndarray              # T_sim x N applied slacks
    statuses: list
    signatures: list
    mode: str = "nash"
    decisions: list = None       # per-step stacked horizon decision vectors

    @property
    def social_cost(self):
        return float(np.sum(self.agent_costs))

    def to_csv(self):
        buf = io.StringIO()
        n_x, n_u, n_y = self.x.shape[1], self.u.shape[1], self.y.shape[1]
        N = self.agent_costs.shape[1]
        cols = (["t"] + [f"x{j}" for j in range(n_x)]
                + [f"u{j}" for j in range(n_u)] + [f"y{j}" for j in range(n_y)]
                + [f"cost{i}" for i in range(N)] + ["status"])
        buf.write(",".join(cols) + "\n")
        for t in range(self.u.shape[0]):
            row = ([str(t)] + ["%.12g" % v for v in self.x[t]]
                   + ["%.12g" % v for v in self.u[t]]
                   + ["%.12g" % v for v in self.y[t]]
                   + ["%.12g" % v for v in self.agent_costs[t]]
                   + [self.statuses[t]])
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


def _centralized_step(game):
    """One QP minimizing the sum of the agents' costs over the shared set."""
    n = game.layout.n
    H = sum(game.Q)
    gvec = sum(game.c)
    lb = np.concatenate([lo for lo, _ in game.boxes])
    ub = np.concatenate([hi for _, hi in game.boxes])
    prob = convexcore.QPProblem(H, gvec, game.A, game.b,
                                np.zeros((0, n)), np.zeros(0), lb, ub)
    return convexcore.solve_qp(prob)


def _leaf_solve(model, signature):
    fix = {j: float(v) for j, v in enumerate(signature)}
    res = milp._relax(model, fix)
    if res.status != "Optimal":
        return None
    cand = milp._extract(model, res, 0)
    if cand.kkt_residual <= 1e-7:
        return cand
    return None


def _active_guess(model, x):
    slack = model.aug.b_bar - model.aug.A_bar @ x
    return tuple(1 if s <= 1e-7 else 0 for s in slack)


def _gne_step(game, variational, prev_signature, M, cfg):
    model = milp.build_mip(game, variational=variational, M=M)
    if prev_signature is not None and len(prev_signature) == model.m:
        cand = _leaf_solve(model, prev_signature)
        if cand is not None:
            return cand
    # centralized active set as a second warm start guess
    cres = _centralized_step(game)
    if cres.status == "Optimal":
        cand = _leaf_solve(model, _active_guess(model, cres.x))
        if cand is not None:
            return cand
    # smooth-solver active sets as further guesses; a variational
    # equilibrium is also a plain generalized Nash equilibrium, so its
    # leaf is valid in both models.  A stalled run close to a solution
    # still identifies the active set, with slack read at a few scales
    tried = set()
    for var in dict.fromkeys((variational, True)):
        sres = nls.solve_gne_nls(game, variational=var,
                                 cfg=nls.LMConfig(rho=1e6, max_iter=2000))
        if sres.x is None or sres.residual_norm > 0.05:
            continue
        slack = model.aug.b_bar - model.aug.A_bar @ sres.x
        for thr in (1e-7, 1e-4, 1e-2):
            guess = tuple(1 if s <= thr else 0 for s in slack)
            if guess in tried:
                continue
            tried.add(guess)
            cand = _leaf_solve(model, guess)
            if cand is not None:
                return cand
    return milp.solve_mip(model, cfg=cfg)


def simulate_mpc(spec, x0, T_sim, mode="nash", r=None, u_prev=None,
                 M=milp.DEFAULT_BIG_M, mip_cfg=None):
    """Receding-horizon closed loop; only each step's first increments are
    applied.  Modes: nash, nash_variational, centralized."""
    sys = spec.system
    x = np.asarray(x0, dtype=float).copy()
    u = np.zeros(sys.n_u) if u_prev is None else np.asarray(u_prev, float).copy()
    r = np.zeros(sys.n_y) if r is None else np.asarray(r, dtype=float)
    xs = [x.copy()]
    us, ys, costs, epss, statuses, signatures = [], [], [], [], [], []
    decisions = []
    prev_sig = None
    pm = prediction_matrices(spec)
    for t in range(T_sim):
        game = build_mpc_game(spec, x, u, r)
        if mode == "centralized":
            res = _centralized_step(game)
            ok = res.status == "Optimal"
            v = res.x if ok else None
            statuses.append(res.status)
            signatures.append(None)
        elif mode in ("nash", "nash_variational"):
            res = _gne_step(game, mode == "nash_variational", prev_sig, M,
                            mip_cfg)
            ok = res.status == "Optimal"
            v = res.x if ok else None
            statuses.append(res.status)
            signatures.append(res.signature.delta if ok else None)
            prev_sig = res.signature.delta if ok else None
        else:
            raise ValueError(f"unknown mode {mode!r}")
        if not ok:
            break
        decisions.append(v.copy())
        du0 = np.zeros(sys.n_u)
        eps = np.zeros(sys.N)
        for i in range(sys.N):
            cols = sys.input_cols(i)
            du0[cols] = v[pm["du_cols"][0, cols]]
            eps[i] = v[pm["eps_cols"][i]]
        u = u + du0
        x = sys.A @ x + sys.B @ u
        y = sys.C @ x
        stage = np.empty(sys.N)
        for i in range(sys.N):
            cols = sys.input_cols(i)
            stage[i] = ((y - r) @ spec.Q_y[i] @ (y - r)
                        + du0[cols] @ spec.Q_du[i] @ du0[cols]
                        + spec.q_eps[i] * eps[i])
        us.append(u.copy())
        ys.append(y.copy())
        costs.append(stage)
        epss.append(eps)
        xs.append(x.copy())
    return ClosedLoopTrace(x=np.array(xs), u=np.array(us), y=np.array(ys),
                           agent_costs=np.array(costs), eps=np.array(epss),
                           statuses=statuses, signatures=signatures, mode=mode,
                           decisions=decisions)
