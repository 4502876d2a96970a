"""Self-contained dense convex solvers.

``solve_lp`` is a two-phase revised simplex on bounded variables (Dantzig
pricing, falling back to Bland's rule under degeneracy) that reports row and
bound multipliers.  ``solve_qp`` is a primal active-set method for convex
quadratic programs, tolerating positive-semidefinite (singular) Hessians via
a tiny ridge.  Both are stateless and safe for concurrent calls.
"""

from dataclasses import dataclass, field

import numpy as np

INF = float("inf")
FEAS_TOL = 1e-8


@dataclass
class LPProblem:
    c: np.ndarray
    A_ub: np.ndarray = None
    b_ub: np.ndarray = None
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if self.A_ub is None:
            self.A_ub, self.b_ub = np.zeros((0, n)), np.zeros(0)
        else:
            self.A_ub = np.atleast_2d(np.asarray(self.A_ub, dtype=float))
            self.b_ub = np.asarray(self.b_ub, dtype=float).ravel()
        if self.A_eq is None:
            self.A_eq, self.b_eq = np.zeros((0, n)), np.zeros(0)
        else:
            self.A_eq = np.atleast_2d(np.asarray(self.A_eq, dtype=float))
            self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        self.lb = (np.full(n, -INF) if self.lb is None
                   else np.asarray(self.lb, dtype=float).ravel().copy())
        self.ub = (np.full(n, INF) if self.ub is None
                   else np.asarray(self.ub, dtype=float).ravel().copy())


@dataclass
class QPProblem:
    H: np.ndarray
    g: np.ndarray
    A_ub: np.ndarray = None
    b_ub: np.ndarray = None
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        lp = LPProblem(self.g, self.A_ub, self.b_ub, self.A_eq, self.b_eq,
                       self.lb, self.ub)
        self.g = lp.c
        self.A_ub, self.b_ub = lp.A_ub, lp.b_ub
        self.A_eq, self.b_eq = lp.A_eq, lp.b_eq
        self.lb, self.ub = lp.lb, lp.ub


@dataclass
class ConvexResult:
    status: str                   # Optimal | Infeasible | Unbounded
    x: np.ndarray = None
    objective: float = None
    duals_ineq: np.ndarray = None
    duals_eq: np.ndarray = None
    duals_lower: np.ndarray = None
    duals_upper: np.ndarray = None
    active_set: tuple = ()
    iterations: int = 0
    diagnostics: list = field(default_factory=list)


class NotOptimal(RuntimeError):
    pass


def duals(result):
    """Multiplier vectors of an Optimal result: (ineq, eq, lower, upper)."""
    if result.status != "Optimal":
        raise NotOptimal(f"no duals for status {result.status}")
    return result.duals_ineq, result.duals_eq, result.duals_lower, result.duals_upper


# ---------------------------------------------------------------------------
# bounded-variable revised simplex

class _Simplex:
    """Works on: minimize c'v  s.t.  W v = r,  l <= v <= u."""

    def __init__(self, W, r, lb, ub):
        self.W = W
        self.r = r
        self.m, self.ncols = W.shape
        self.lb, self.ub = lb, ub
        self.basis = None
        self.Binv = None
        self.nb_at_upper = np.zeros(self.ncols, dtype=bool)
        self.val = np.zeros(self.ncols)
        self.iterations = 0

    def set_initial_basis(self, basis):
        self.basis = list(basis)
        self._refactorize()

    def _refactorize(self):
        B = self.W[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            self.Binv = np.linalg.pinv(B)
        # a silently-singular basis would let the iteration wander with a
        # garbage inverse; fail loudly so the caller can retry or report
        err = float(np.max(np.abs(B @ self.Binv - np.eye(self.m)),
                           initial=0.0))
        if not np.isfinite(err) or err > 1e-6:
            raise RuntimeError("singular simplex basis")
        self._recompute_values()

    def _recompute_values(self):
        v = np.where(self.nb_at_upper & np.isfinite(self.ub), self.ub,
                     np.where(np.isfinite(self.lb), self.lb, 0.0))
        v[~np.isfinite(v)] = 0.0
        in_basis = np.zeros(self.ncols, dtype=bool)
        in_basis[self.basis] = True
        v[in_basis] = 0.0
        xb = self.Binv @ (self.r - self.W @ v)
        v[self.basis] = xb
        self.val = v

    def run(self, c, max_iter=20000, bland=False):
        """Returns 'optimal' or 'unbounded'."""
        degenerate_streak = 0
        since_refactor = 0
        tol = 1e-9
        while True:
            self.iterations += 1
            if self.iterations > max_iter:
                raise RuntimeError("simplex iteration limit")
            y = c[self.basis] @ self.Binv
            rc = c - y @ self.W
            in_basis = np.zeros(self.ncols, dtype=bool)
            in_basis[self.basis] = True
            finite_lb = np.isfinite(self.lb)
            finite_ub = np.isfinite(self.ub)
            fixed = finite_lb & finite_ub & (self.ub - self.lb < 1e-14)
            at_up = self.nb_at_upper
            # eligibility: increase from lower/free if rc < -tol,
            # decrease from upper if rc > tol, free nonbasic either way
            can_inc = ~in_basis & ~at_up & ~fixed & (rc < -tol)
            can_dec = ~in_basis & ~fixed & (
                (at_up & (rc > tol)) | (~finite_lb & ~at_up & (rc > tol)))
            viol = np.where(can_inc | can_dec, np.abs(rc), 0.0)
            if not np.any(viol > 0):
                return "optimal"
            if bland:
                j = int(np.flatnonzero(viol > 0)[0])
            else:
                j = int(np.argmax(viol))
            sigma = 1.0 if can_inc[j] else -1.0
            d = self.Binv @ self.W[:, j]
            # ratio test
            xb = self.val[self.basis]
            lbb = self.lb[np.array(self.basis, dtype=int)]
            ubb = self.ub[np.array(self.basis, dtype=int)]
            step = sigma * d
            t_best = INF
            leave = -1
            leave_to_upper = False
            # pivot eligibility is relative to the direction's magnitude:
            # an absolute cutoff admits pivots of relative size 1e-15 on
            # badly scaled rows, which sends the basis singular
            piv_tol = 1e-9 * max(1.0, float(np.max(np.abs(d))))
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = step > piv_tol
                inc = step < -piv_tol
                t_dec = np.where(dec, (xb - lbb) / np.where(dec, step, 1.0), INF)
                t_inc = np.where(inc, (ubb - xb) / np.where(inc, -step, 1.0), INF)
            t_dec = np.maximum(t_dec, 0.0)
            t_inc = np.maximum(t_inc, 0.0)
            # exact minimum ratio; ties go to the larger pivot for stability
            t_all = np.concatenate([t_dec, t_inc])
            t_min = np.min(t_all)
            if np.isfinite(t_min):
                ties = np.flatnonzero(t_all == t_min)
                rows = ties % self.m
                kbest = ties[int(np.argmax(np.abs(step[rows])))]
                t_best = t_min
                leave = int(kbest % self.m)
                leave_to_upper = bool(kbest >= self.m)
            # entering variable's own opposite bound (bound flip)
            span = self.ub[j] - self.lb[j]
            flip = np.isfinite(span) and span < t_best
            if flip:
                t_best = span
                leave = -1
            if not np.isfinite(t_best):
                return "unbounded"
            if t_best < 1e-10:
                degenerate_streak += 1
                if degenerate_streak > 40:
                    bland = True
            else:
                degenerate_streak = 0
            # apply the move
            self.val[self.basis] = xb - t_best * step
            self.val[j] = self.val[j] + sigma * t_best
            if leave == -1:
                if flip:
                    self.nb_at_upper[j] = sigma > 0
                # else: j enters unbounded move? handled above
            else:
                out = self.basis[leave]
                self.nb_at_upper[out] = leave_to_upper
                self.val[out] = self.ub[out] if leave_to_upper else self.lb[out]
                self.basis[leave] = j
                self.nb_at_upper[j] = False
                # pivot update of Binv
                piv = d[leave]
                if abs(piv) < 1e-11:
                    self._refactorize()
                    continue
                row = self.Binv[leave, :] / piv
                self.Binv -= np.outer(d, row)
                self.Binv[leave, :] = row
                since_refactor += 1
                if since_refactor >= 60:
                    self._refactorize()
                    since_refactor = 0


def _lp_violation(prob, x):
    err = 0.0
    if prob.A_eq.shape[0]:
        err = max(err, float(np.max(np.abs(prob.A_eq @ x - prob.b_eq))))
    if prob.A_ub.shape[0]:
        err = max(err, float(np.max(prob.A_ub @ x - prob.b_ub, initial=0.0)))
    err = max(err, float(np.max(prob.lb - x, initial=0.0)))
    err = max(err, float(np.max(x - prob.ub, initial=0.0)))
    return err


def solve_lp(prob):
    """Two-phase simplex with a Bland-rule retry on numerical trouble;
    status is exact (Optimal/Infeasible/Unbounded)."""
    scale = 1.0
    for arr in (prob.b_eq, prob.b_ub):
        if arr.size:
            scale = max(scale, float(np.max(np.abs(arr))))
    try:
        res = _solve_lp_once(prob, bland=False)
        bad = (res.status == "Optimal"
               and _lp_violation(prob, res.x) > 1e-6 * scale)
    except (RuntimeError, np.linalg.LinAlgError):
        res, bad = None, True
    # infeasibility verdicts from the fast pivot rule can be stall
    # artifacts at any magnitude: re-derive every one with the slow
    # but anti-cycling Bland rule before trusting it
    if not bad and res.status != "Infeasible":
        return res
    try:
        res2 = _solve_lp_once(prob, bland=True)
        if res2.status != "Optimal" or \
                _lp_violation(prob, res2.x) <= 1e-6 * scale:
            return res2
    except (RuntimeError, np.linalg.LinAlgError):
        pass
    if res is not None and not bad:
        return res
    return ConvexResult(status="Numerical")


def _row_scales(A):
    if A.shape[0] == 0:
        return np.ones(0)
    s = np.max(np.abs(A), axis=1)
    s[s < 1e-12] = 1.0
    return s


def _solve_lp_once(prob, bland=False):
    n = prob.c.size
    n_eq, n_ub = prob.A_eq.shape[0], prob.A_ub.shape[0]
    m = n_eq + n_ub
    # row equilibration: big-M rows mixed with unit rows span six orders
    # of magnitude and break the basis updates without it
    s_eq = _row_scales(prob.A_eq)
    s_ub = _row_scales(prob.A_ub)
    A_eq = prob.A_eq / s_eq[:, None] if n_eq else prob.A_eq
    A_ub = prob.A_ub / s_ub[:, None] if n_ub else prob.A_ub
    # columns: structural | slacks (ub rows) | artificials
    W = np.zeros((m, n + n_ub + m))
    if n_eq:
        W[:n_eq, :n] = A_eq
    if n_ub:
        W[n_eq:, :n] = A_ub
        W[n_eq:, n:n + n_ub] = np.eye(n_ub)
    r = np.concatenate([prob.b_eq / s_eq if n_eq else prob.b_eq,
                        prob.b_ub / s_ub if n_ub else prob.b_ub])
    lb = np.concatenate([prob.lb, np.zeros(n_ub), np.zeros(m)])
    ub = np.concatenate([prob.ub, np.full(n_ub, INF), np.full(m, INF)])
    # initial nonbasic values
    v0 = np.where(np.isfinite(lb[:n + n_ub]), lb[:n + n_ub],
                  np.where(np.isfinite(ub[:n + n_ub]), ub[:n + n_ub], 0.0))
    resid = r - W[:, :n + n_ub] @ v0
    art = []
    for i in range(m):
        col = n + n_ub + i
        W[i, col] = 1.0 if resid[i] >= 0 else -1.0
        art.append(col)
    sx = _Simplex(W, r, lb, ub)
    sx.nb_at_upper[:n + n_ub] = np.isfinite(ub[:n + n_ub]) & ~np.isfinite(lb[:n + n_ub])
    sx.set_initial_basis(art)

    c1 = np.zeros(n + n_ub + m)
    c1[n + n_ub:] = 1.0
    sx.run(c1, bland=bland)
    infeas = float(c1 @ sx.val)
    if infeas > 1e-7:
        # objective reports the residual infeasibility for retry decisions
        return ConvexResult(status="Infeasible", objective=infeas,
                            iterations=sx.iterations)
    # pin artificials at zero for phase 2
    sx.ub[n + n_ub:] = 0.0
    sx.val[n + n_ub:] = np.minimum(sx.val[n + n_ub:], 0.0)
    c2 = np.zeros(n + n_ub + m)
    c2[:n] = prob.c
    outcome = sx.run(c2, bland=bland)
    if outcome == "unbounded":
        return ConvexResult(status="Unbounded", iterations=sx.iterations)
    x = sx.val[:n].copy()
    y = c2[sx.basis] @ sx.Binv
    rc = c2 - y @ sx.W
    # duals of the scaled rows map back through the row scales
    duals_eq = -y[:n_eq] / s_eq if n_eq else -y[:n_eq]
    duals_ineq = np.maximum(-y[n_eq:], 0.0) / s_ub if n_ub \
        else np.maximum(-y[n_eq:], 0.0)
    in_basis = np.zeros(sx.ncols, dtype=bool)
    in_basis[sx.basis] = True
    dl = np.zeros(n)
    du = np.zeros(n)
    for j in range(n):
        if in_basis[j]:
            continue
        if sx.nb_at_upper[j]:
            du[j] = max(-rc[j], 0.0)
        elif np.isfinite(prob.lb[j]):
            dl[j] = max(rc[j], 0.0)
    slack = prob.b_ub - prob.A_ub @ x if n_ub else np.zeros(0)
    active = tuple(int(i) for i in np.flatnonzero(np.abs(slack) <= 1e-7))
    return ConvexResult(status="Optimal", x=x, objective=float(prob.c @ x),
                        duals_ineq=duals_ineq, duals_eq=duals_eq,
                        duals_lower=dl, duals_upper=du, active_set=active,
                        iterations=sx.iterations)


# ---------------------------------------------------------------------------
# primal active-set QP

def _qp_rowform(prob):
    """All inequalities (rows then finite bounds) as G x <= h with origins."""
    n = prob.g.size
    G_rows, h_rows, origin = [], [], []
    for i in range(prob.A_ub.shape[0]):
        G_rows.append(prob.A_ub[i])
        h_rows.append(prob.b_ub[i])
        origin.append(("ineq", i))
    for j in range(n):
        if np.isfinite(prob.ub[j]):
            e = np.zeros(n)
            e[j] = 1.0
            G_rows.append(e)
            h_rows.append(prob.ub[j])
            origin.append(("ub", j))
        if np.isfinite(prob.lb[j]):
            e = np.zeros(n)
            e[j] = -1.0
            G_rows.append(e)
            h_rows.append(-prob.lb[j])
            origin.append(("lb", j))
    G = np.array(G_rows) if G_rows else np.zeros((0, n))
    h = np.array(h_rows) if h_rows else np.zeros(0)
    return G, h, origin


def solve_qp(prob, x0=None, max_iter=None):
    """Primal active-set method for convex QPs (PSD Hessian).

    Singular Hessians are handled by a 1e-12-scaled ridge; the fallback is
    recorded in the result diagnostics.
    """
    n = prob.g.size
    H = 0.5 * (prob.H + prob.H.T)
    diagnostics = []
    scale = 1.0 + float(np.trace(np.abs(H))) / max(n, 1)
    ridge = 1e-12 * scale
    # ridge is always applied; flag it when H is genuinely singular
    if n and np.linalg.matrix_rank(H, tol=1e-10 * scale) < n:
        diagnostics.append("singular Hessian: ridge fallback active")
    Hr = H + ridge * np.eye(n)
    G, h, origin = _qp_rowform(prob)
    E, d = prob.A_eq, prob.b_eq

    if x0 is None:
        feas = solve_lp(LPProblem(np.zeros(n), prob.A_ub, prob.b_ub,
                                  prob.A_eq, prob.b_eq, prob.lb, prob.ub))
        if feas.status != "Optimal":
            return ConvexResult(status=feas.status, diagnostics=diagnostics)
        x = feas.x.copy()
    else:
        x = np.asarray(x0, dtype=float).copy()

    n_eq = E.shape[0]
    work = []          # indices into G currently in the working set
    if max_iter is None:
        max_iter = 100 * (n + G.shape[0] + n_eq) + 200
    it = 0
    nu = np.zeros(0)
    while it < max_iter:
        it += 1
        A_W = np.vstack([E] + [G[j:j + 1] for j in work]) if (n_eq or work) \
            else np.zeros((0, n))
        k = A_W.shape[0]
        KKT = np.zeros((n + k, n + k))
        KKT[:n, :n] = Hr
        if k:
            KKT[:n, n:] = A_W.T
            KKT[n:, :n] = A_W
        rhs = np.concatenate([-(Hr @ x + prob.g), np.zeros(k)])
        try:
            sol = np.linalg.solve(KKT, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
        dstep, nu = sol[:n], sol[n:]
        if np.max(np.abs(dstep), initial=0.0) <= 1e-10:
            # stationary on the working set: check inequality multipliers
            if work:
                ineq_nus = nu[n_eq:]
                worst = int(np.argmin(ineq_nus))
                if ineq_nus[worst] < -1e-9:
                    work.pop(worst)
                    continue
            break
        # line search toward the full step; exact minimum ratio so no row
        # is crossed even when near-singular Hessians give huge steps
        alpha = 1.0
        blocker = -1
        if G.shape[0]:
            Gd = G @ dstep
            slack = h - G @ x
            for j in range(G.shape[0]):
                if j in work or Gd[j] <= 1e-12:
                    continue
                a_j = max(slack[j], 0.0) / Gd[j]
                if a_j < alpha:
                    alpha, blocker = a_j, j
        x = x + alpha * dstep
        if blocker >= 0:
            work.append(blocker)
    else:
        diagnostics.append("active-set iteration limit reached")

    obj = float(0.5 * x @ H @ x + prob.g @ x)
    lam = np.zeros(prob.A_ub.shape[0])
    dl = np.zeros(n)
    du = np.zeros(n)
    mu = nu[:n_eq].copy() if n_eq else np.zeros(0)
    for pos, j in enumerate(work):
        val = max(float(nu[n_eq + pos]), 0.0)
        kind = origin[j]
        if kind[0] == "ineq":
            lam[kind[1]] = val
        elif kind[0] == "ub":
            du[kind[1]] = val
        else:
            dl[kind[1]] = val
    slack = prob.b_ub - prob.A_ub @ x if prob.A_ub.shape[0] else np.zeros(0)
    active = tuple(int(i) for i in np.flatnonzero(np.abs(slack) <= 1e-7))
    return ConvexResult(status="Optimal", x=x, objective=obj,
                        duals_ineq=lam, duals_eq=mu, duals_lower=dl,
                        duals_upper=du, active_set=active, iterations=it,
                        diagnostics=diagnostics)
