"""Nonlinear least-squares solves of the joint KKT system.

One projected Levenberg-Marquardt core serves three entry points: plain
zero-finding (merit 1/2 ||R||^2), penalized game design (J + rho/2 ||R||^2
over a parameter box, followed by hot-start refinement at the returned
parameter), and the l1-split sparse formulation.  Best responses are
verified by an independent oracle: a QP for LQ games, projected gradient
descent for nonlinear ones.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from . import convexcore, diff, kkt
from .model import LQGame


@dataclass
class LMConfig:
    max_iter: int = 200
    residual_tol: float = 1e-8
    step_tol: float = 1e-10
    init_damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 3.0
    rho: float = 1e4

    def __post_init__(self):
        if min(self.residual_tol, self.step_tol, self.init_damping) <= 0:
            raise ValueError("tolerances and damping must be positive")
        if min(self.damping_up, self.damping_down) <= 1:
            raise ValueError("damping factors must exceed 1")


@dataclass
class NLSResult:
    status: str                      # Converged | SmallStep | MaxIter | Diverged
    z: kkt.KKTVector = None
    x: np.ndarray = None
    p: np.ndarray = None
    residual_norm: float = None      # ||R||_inf of the KKT residual
    iterations: int = 0
    merit: float = None
    certificate: object = None
    trace: list = field(default_factory=list)
    pre_refine_residual: float = None
    objective: float = None

    def trace_csv(self):
        buf = io.StringIO()
        buf.write("iter,merit,damping,step_norm\n")
        for row in self.trace:
            buf.write("%d,%.12e,%.3e,%.3e\n" % row)
        return buf.getvalue()


def _lm_core(residual_fn, jacobian_fn, w0, cfg, lower=None, upper=None,
             extra=None, pure_nls=True):
    """Projected Levenberg-Marquardt on F(w) = 1/2 ||r(w)||^2 [+ extra].

    ``extra`` is (value_fn, grad_fn, hess_const) for a smooth additional
    objective term.  Accepted steps never increase the merit; the trial
    point is projected onto [lower, upper] before the acceptance test.
    """
    w = np.asarray(w0, dtype=float).copy()
    if lower is not None:
        w = np.clip(w, lower, upper)

    def merit(wv, rv):
        m = 0.5 * float(rv @ rv)
        if extra is not None:
            m += extra[0](wv)
        return m

    r = residual_fn(w)
    F = merit(w, r)
    lam = cfg.init_damping
    trace = []
    status = "MaxIter"
    it = 0
    consecutive_rejects = 0
    while it < cfg.max_iter:
        it += 1
        if pure_nls and np.max(np.abs(r), initial=0.0) <= cfg.residual_tol:
            status = "Converged"
            break
        J = jacobian_fn(w)
        grad = J.T @ r
        H = J.T @ J
        if extra is not None:
            grad = grad + extra[1](w)
            if extra[2] is not None:
                H = H + extra[2]
        accepted = False
        step_norm = 0.0
        while consecutive_rejects <= 30:
            A = H + lam * np.eye(w.size)
            try:
                step = np.linalg.solve(A, -grad)
            except np.linalg.LinAlgError:
                lam *= cfg.damping_up
                consecutive_rejects += 1
                continue
            trial = w + step
            if lower is not None:
                trial = np.clip(trial, lower, upper)
            step_norm = float(np.max(np.abs(trial - w), initial=0.0))
            if step_norm <= cfg.step_tol:
                break
            try:
                r_trial = residual_fn(trial)
                F_trial = merit(trial, r_trial)
            except (kkt.NonFiniteResidual, diff.NonFiniteDerivative,
                    FloatingPointError, OverflowError):
                F_trial = np.inf
            if F_trial <= F:
                w, r, F = trial, r_trial, F_trial
                lam = max(lam / cfg.damping_down, 1e-14)
                accepted = True
                consecutive_rejects = 0
                break
            lam *= cfg.damping_up
            consecutive_rejects += 1
        trace.append((it, F, lam, step_norm))
        if consecutive_rejects > 30:
            status = "Diverged"
            break
        if not accepted:
            status = "SmallStep"
            break
    else:
        it = cfg.max_iter
    if pure_nls and np.max(np.abs(r), initial=0.0) <= cfg.residual_tol:
        status = "Converged"
    return w, r, F, status, it, trace


def _as_nonlinear(game):
    return game.to_nonlinear() if isinstance(game, LQGame) else game


def solve_gne_nls(game, p0=None, z0=None, cfg=None, variational=False):
    """Find a GNE by minimizing the merit function 1/2 ||R(z, p0)||^2."""
    cfg = cfg or LMConfig()
    nlg = _as_nonlinear(game)
    lay = kkt.make_layout(nlg, variational=variational)
    if z0 is None:
        z0v = kkt.default_z0(lay)
    elif isinstance(z0, kkt.KKTVector):
        z0v = z0.data.copy()
    else:
        z0v = np.asarray(z0, dtype=float)
        if z0v.size == lay.n:  # primal-only start
            z0v = kkt.default_z0(lay, x0=z0v)
    p = np.asarray(p0, dtype=float) if p0 is not None else None

    def residual_fn(w):
        return kkt.residual(nlg, kkt.KKTVector(w, lay), p)

    def jacobian_fn(w):
        return kkt.residual_jacobian(nlg, kkt.KKTVector(w, lay), p, wrt="z")

    w, r, F, status, it, trace = _lm_core(residual_fn, jacobian_fn, z0v, cfg)
    z = kkt.KKTVector(w, lay)
    return NLSResult(status=status, z=z, x=z.x.copy(), p=p,
                     residual_norm=float(np.max(np.abs(r), initial=0.0)),
                     iterations=it, merit=F, trace=trace)


def solve_design(game, design, cfg=None, init=None, variational=False):
    """Penalized game design: minimize J + (rho/2)||R(z, p)||^2 over p in P,
    then hot-start refine the equilibrium at the returned parameter."""
    cfg = cfg or LMConfig()
    nlg = _as_nonlinear(game)
    lay = kkt.make_layout(nlg, variational=variational)
    n, n_p = lay.n, nlg.params.n_p

    z0, p0 = (init if init is not None else (None, None))
    if z0 is None:
        z0v = kkt.default_z0(lay)
    else:
        z0v = z0.data.copy() if isinstance(z0, kkt.KKTVector) else np.asarray(z0, float)
        if z0v.size == lay.n:
            z0v = kkt.default_z0(lay, x0=z0v)
    if p0 is None:
        p0 = nlg.params.midpoint()
    p0 = np.asarray(p0, dtype=float)

    empty_design = (design is None or (design.quad is None
                    and design.nonlinear is None and not design.pwa_terms))
    singleton = n_p == 0 or np.all(nlg.params.lower == nlg.params.upper)
    if empty_design and singleton:
        return solve_gne_nls(game, p0=p0 if n_p else None, z0=z0v, cfg=cfg,
                             variational=variational)

    sq = np.sqrt(cfg.rho)
    lower = np.concatenate([np.full(lay.dim_z, -np.inf), nlg.params.lower])
    upper = np.concatenate([np.full(lay.dim_z, np.inf), nlg.params.upper])
    w0 = np.concatenate([z0v, p0])

    def residual_fn(w):
        z = kkt.KKTVector(w[:lay.dim_z], lay)
        p = w[lay.dim_z:] if n_p else None
        return sq * kkt.residual(nlg, z, p)

    def jacobian_fn(w):
        z = kkt.KKTVector(w[:lay.dim_z], lay)
        p = w[lay.dim_z:] if n_p else None
        return sq * kkt.residual_jacobian(nlg, z, p,
                                          wrt="z_and_p" if n_p else "z")

    extra = None
    if not empty_design:
        extra = _design_extra_w(design, lay, n_p)

    w, r, F, status, it, trace = _lm_core(
        residual_fn, jacobian_fn, w0, cfg, lower=lower, upper=upper,
        extra=extra, pure_nls=False)
    p_star = w[lay.dim_z:] if n_p else None
    z_star = kkt.KKTVector(w[:lay.dim_z], lay)
    pre_res = float(np.max(np.abs(kkt.residual(nlg, z_star, p_star)), initial=0.0))
    refined = solve_gne_nls(nlg, p0=p_star, z0=z_star, cfg=cfg,
                            variational=variational)
    if refined.residual_norm > pre_res:  # refinement never worsens the residual
        refined = NLSResult(status=status, z=z_star, x=z_star.x.copy(),
                            p=p_star, residual_norm=pre_res,
                            iterations=it, merit=F, trace=trace)
    refined.p = p_star
    refined.pre_refine_residual = pre_res
    refined.iterations += it
    if design is not None:
        xs = refined.x
        ps = p_star if n_p else np.zeros(0)
        obj = 0.0
        if design.quad is not None:
            obj += design.quad_value(xs, ps)
        if design.pwa_terms:
            obj += design.pwa_value(xs, ps)
        if design.nonlinear is not None:
            obj += float(diff.value(design.nonlinear(xs, p_star)))
        refined.objective = obj
    return refined


def _design_extra_w(design, lay, n_p):
    """Design objective terms over the stacked w = (z, p)."""
    n = lay.n
    dim = lay.dim_z + n_p

    def split(w):
        x = w[:n]
        p = w[lay.dim_z:] if n_p else np.zeros(0)
        return x, p

    def value(w):
        x, p = split(w)
        val = design.alpha2 * float(x @ x)
        if design.quad is not None:
            val += design.quad_value(x, p)
        if design.nonlinear is not None:
            val += float(diff.value(design.nonlinear(x, p if n_p else None)))
        return val

    def grad(w):
        x, p = split(w)
        g = np.zeros(dim)
        g[:n] += 2.0 * design.alpha2 * x
        if design.quad is not None:
            Q, cq = design.quad
            full = Q @ np.concatenate([x, p]) + cq
            g[:n] += full[:n]
            if n_p:
                g[lay.dim_z:] += full[n:]
        if design.nonlinear is not None:
            g[:n] += diff.grad(design.nonlinear, x, p if n_p else None)
            if n_p:
                g[lay.dim_z:] += diff.grad(
                    lambda q, _x: design.nonlinear(_x, q), p, x)
        return g

    hess = None
    if design.quad is not None or design.alpha2 > 0:
        hess = np.zeros((dim, dim))
        hess[:n, :n] += 2.0 * design.alpha2 * np.eye(n)
        if design.quad is not None:
            Q = design.quad[0]
            hess[:n, :n] += Q[:n, :n]
            if n_p:
                hess[:n, lay.dim_z:] += Q[:n, n:]
                hess[lay.dim_z:, :n] += Q[n:, :n]
                hess[lay.dim_z:, lay.dim_z:] += Q[n:, n:]
    return value, grad, hess


def solve_sparse(game, design, cfg=None, p0=None, z0=None, variational=False):
    """l1-regularized GNE/design solve via the positive/negative split.

    With alpha1 = 0 there is nothing to split and the solve falls back to
    the penalized design path.
    """
    cfg = cfg or LMConfig()
    nlg = _as_nonlinear(game)
    if design.alpha1 <= 0:
        return solve_design(nlg, design, cfg=cfg,
                            init=(z0, p0), variational=variational)
    prob = kkt.split_l1(nlg, design, cfg.rho, p0=p0, z0=z0,
                        variational=variational)
    w, r, F, status, it, trace = _lm_core(
        prob.residual_fn, prob.jacobian_fn, prob.w0, cfg,
        lower=prob.lower, upper=prob.upper, extra=prob.extra,
        pure_nls=False)
    p_star, x_star, z_star = prob.recombine(w)
    res = kkt.residual(nlg_without_boxes(nlg), z_star, p_star)
    return NLSResult(status=status, z=z_star, x=x_star, p=p_star,
                     residual_norm=float(np.max(np.abs(res), initial=0.0)),
                     iterations=it, merit=F, trace=trace)


def nlg_without_boxes(game):
    import dataclasses
    return dataclasses.replace(game, boxes=None)


# ---------------------------------------------------------------------------
# best-response certificate (independent oracle)

@dataclass
class PlayerCheck:
    player: int
    improvement: float
    passed: bool
    note: str = ""


@dataclass
class CertificateReport:
    players: list
    tol: float

    @property
    def passed(self):
        return all(c.passed for c in self.players)

    @property
    def max_improvement(self):
        return max((c.improvement for c in self.players), default=0.0)


def _lq_best_response(game, i, x, p):
    idx = game.layout.indices(i)
    other = [k for k in range(game.layout.n) if k not in idx]
    Qi = game.Q[i]
    H = Qi[np.ix_(idx, idx)]
    lin = game.c[i].copy()
    if p is not None and game.params.n_p:
        lin = lin + game.F[i] @ p
    g = lin[idx] + Qi[np.ix_(idx, other)] @ x[other]
    A_i = game.A[:, idx] if game.n_g else None
    b_i = None
    if game.n_g:
        b_i = game.b - game.A[:, other] @ x[other]
        if p is not None and game.params.n_p:
            b_i = b_i + game.S @ p
        # tolerate slightly infeasible candidates (e.g. rounded references)
        b_i = np.maximum(b_i, A_i @ x[idx])
    Ae_i = be_i = None
    if game.n_h:
        Ae_i = game.A_eq[:, idx]
        be_i = Ae_i @ x[idx]  # shift so the candidate satisfies equalities
    lo, hi = game.boxes[i]
    res = convexcore.solve_qp(convexcore.QPProblem(
        H=H, g=g, A_ub=A_i, b_ub=b_i, A_eq=Ae_i, b_eq=be_i,
        lb=np.minimum(lo, x[idx]), ub=np.maximum(hi, x[idx])), x0=x[idx].copy())
    if res.status != "Optimal":
        return 0.0, f"best-response subproblem {res.status}"
    cur = 0.5 * x[idx] @ H @ x[idx] + g @ x[idx]
    return float(cur - res.objective), ""


def _nonlinear_best_response(game, i, x, p, iters=500, penalty=1e6):
    """Projected gradient descent with Armijo backtracking (oracle path,
    deliberately distinct from the LM solver)."""
    idx = game.layout.indices(i)
    lo, hi = game.boxes[i]
    lo = np.minimum(lo, x[idx])
    hi = np.maximum(hi, x[idx])

    def obj(xi, _p=None):
        xf = np.empty(game.layout.n, dtype=object)
        xf[:] = x
        for a, k in enumerate(idx):
            xf[k] = xi[a]
        val = game.costs[i](xf, p) if p is not None else game.costs[i](xf)
        if game.ineq is not None:
            gv = game.ineq(xf, p) if p is not None else game.ineq(xf)
            for j in range(game.n_g):
                viol = gv[j]
                vmax = viol if diff.value(viol) > 0 else 0.0
                val = val + penalty * vmax * vmax
        if game.eq is not None:
            hv = game.eq(xf, p) if p is not None else game.eq(xf)
            for j in range(game.n_h):
                val = val + penalty * hv[j] * hv[j]
        return val

    xi = x[idx].astype(float).copy()
    f0 = float(diff.value(obj(xi)))
    f_cur = f0
    step = 1.0
    for _ in range(iters):
        g = diff.grad(obj, xi)
        moved = False
        while step > 1e-14:
            trial = np.clip(xi - step * g, lo, hi)
            f_trial = float(diff.value(obj(trial)))
            if f_trial <= f_cur - 1e-4 * step * float(g @ g):
                xi, f_cur = trial, f_trial
                step = min(step * 2.0, 1e3)
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    return f0 - f_cur, ""


def best_response_certificate(game, x_star, p=None, tol=1e-6):
    """Verify that no player can improve by deviating unilaterally.

    LQ games use the convex QP solver as oracle; nonlinear games use
    projected gradient descent with a constraint penalty.
    """
    x = np.asarray(x_star, dtype=float)
    p_arr = np.asarray(p, dtype=float) if p is not None else None
    checks = []
    for i in range(game.layout.N):
        if isinstance(game, LQGame):
            imp, note = _lq_best_response(game, i, x, p_arr)
        else:
            imp, note = _nonlinear_best_response(game, i, x, p_arr)
        checks.append(PlayerCheck(player=i + 1, improvement=imp,
                                  passed=imp <= tol, note=note))
    return CertificateReport(players=checks, tol=tol)
