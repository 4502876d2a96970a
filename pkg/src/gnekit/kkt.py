"""Joint KKT residual of all players and its Jacobian.

The stacked unknown is z = (x, lambda blocks, mu blocks, v blocks, y blocks).
Residual ordering is fixed and documented: stationarity rows by player, then
shared equality rows, then Fischer-Burmeister rows for the shared
inequalities (by player), then for finite lower bounds, then for finite
upper bounds.  Bound multipliers exist only for finite bound components.
"""

from dataclasses import dataclass, field

import numpy as np

from . import diff

FB_SMOOTHING = 1e-10


class NonFiniteResidual(ValueError):
    """The KKT residual evaluated to NaN or infinity."""


def fischer_burmeister(alpha, beta):
    """phi(a, b) = sqrt(a^2 + b^2) - a - b; zero iff a, b >= 0 and a*b = 0."""
    return np.hypot(alpha, beta) - alpha - beta


def _fb_smooth(alpha, beta):
    return np.sqrt(alpha * alpha + beta * beta + FB_SMOOTHING ** 2) - alpha - beta


def _fb_partials(alpha, beta):
    r = np.sqrt(alpha * alpha + beta * beta + FB_SMOOTHING ** 2)
    return alpha / r - 1.0, beta / r - 1.0


@dataclass(frozen=True)
class KKTLayout:
    """Index map for z and for the residual vector.

    ``lam_slices``/``mu_slices`` hold one (start, length) slice per player,
    or a single shared slice in variational mode.  ``v_entries``/``y_entries``
    list (z_index, player, local_k, global_k, bound_value) per finite bound.
    """

    n: int
    N: int
    n_g: int
    n_h: int
    variational: bool
    lam_slices: tuple
    mu_slices: tuple
    v_entries: tuple
    y_entries: tuple
    dim_z: int
    dim_residual: int
    x_slices: tuple


def make_layout(game, variational=False):
    n, N = game.layout.n, game.layout.N
    n_g, n_h = game.n_g, game.n_h
    pos = n
    n_lam_blocks = 1 if variational else N
    lam_slices = []
    for _ in range(n_lam_blocks):
        lam_slices.append((pos, n_g))
        pos += n_g
    mu_slices = []
    for _ in range(n_lam_blocks):
        mu_slices.append((pos, n_h))
        pos += n_h
    v_entries, y_entries = [], []
    for i in range(N):
        lo, hi = game.boxes[i]
        for k_local, k in enumerate(game.layout.indices(i)):
            if np.isfinite(lo[k_local]):
                v_entries.append((pos, i, k_local, k, float(lo[k_local])))
                pos += 1
    for i in range(N):
        lo, hi = game.boxes[i]
        for k_local, k in enumerate(game.layout.indices(i)):
            if np.isfinite(hi[k_local]):
                y_entries.append((pos, i, k_local, k, float(hi[k_local])))
                pos += 1
    dim_res = (n + n_h + n_lam_blocks * n_g + len(v_entries) + len(y_entries))
    x_slices = tuple((game.layout.offsets[i], game.layout.dims[i]) for i in range(N))
    return KKTLayout(n=n, N=N, n_g=n_g, n_h=n_h, variational=variational,
                     lam_slices=tuple(lam_slices), mu_slices=tuple(mu_slices),
                     v_entries=tuple(v_entries), y_entries=tuple(y_entries),
                     dim_z=pos, dim_residual=dim_res, x_slices=x_slices)


def make_variational(layout, game):
    """Collapse per-player multiplier blocks into shared lambda and mu."""
    if layout.variational:
        return layout
    return make_layout(game, variational=True)


@dataclass
class KKTVector:
    data: np.ndarray
    layout: KKTLayout

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.size != self.layout.dim_z:
            raise ValueError(
                f"z length {self.data.size} != layout total {self.layout.dim_z}")

    @property
    def x(self):
        return self.data[:self.layout.n]

    def lam(self, i):
        s, ln = self.layout.lam_slices[0 if self.layout.variational else i]
        return self.data[s:s + ln]

    def mu(self, i):
        s, ln = self.layout.mu_slices[0 if self.layout.variational else i]
        return self.data[s:s + ln]

    def v_for_player(self, i):
        return [(e, self.data[e[0]]) for e in self.layout.v_entries if e[1] == i]

    def y_for_player(self, i):
        return [(e, self.data[e[0]]) for e in self.layout.y_entries if e[1] == i]


def default_z0(layout, x0=None):
    """x as given (or 0), lambda = v = y = 1, mu = 0."""
    z = np.zeros(layout.dim_z)
    if x0 is not None:
        z[:layout.n] = np.asarray(x0, dtype=float)
    for s, ln in layout.lam_slices:
        z[s:s + ln] = 1.0
    for e in layout.v_entries:
        z[e[0]] = 1.0
    for e in layout.y_entries:
        z[e[0]] = 1.0
    return z


def _eval_constraints(game, x, p):
    g = np.asarray(game.ineq(x, p), dtype=float) if game.ineq is not None else np.zeros(0)
    h = np.asarray(game.eq(x, p), dtype=float) if game.eq is not None else np.zeros(0)
    return g, h


def _lq_first_order(game, x, p):
    """Exact values/Jacobians/gradients for games that came from an LQGame."""
    lq = game.lq_source
    n_p = lq.params.n_p
    g = lq.A @ x - lq.b
    h = lq.A_eq @ x - lq.b_eq
    if p is not None and n_p:
        pv = np.asarray(p, dtype=float)
        g = g - lq.S @ pv
        h = h - lq.S_eq @ pv
    grads = []
    for i in range(lq.layout.N):
        gi = lq.Q[i] @ x + lq.c[i]
        if p is not None and n_p:
            gi = gi + lq.F[i] @ np.asarray(p, dtype=float)
        grads.append(gi)
    return g, h, lq.A, lq.A_eq, grads


def residual(game, z, p=None):
    """Joint KKT residual R(z, p); zero exactly at a GNE (with multipliers)."""
    lay = z.layout if isinstance(z, KKTVector) else None
    if lay is None:
        raise TypeError("z must be a KKTVector")
    zv = z.data
    x = zv[:lay.n]
    if game.lq_source is not None:
        g, h, Jg, Jh, grads = _lq_first_order(game, x, p)
    else:
        g, h = _eval_constraints(game, x, p)
        Jg = diff.jacobian(game.ineq, x, p) if game.ineq is not None else np.zeros((0, lay.n))
        Jh = diff.jacobian(game.eq, x, p) if game.eq is not None else np.zeros((0, lay.n))
        grads = None
    out = np.empty(lay.dim_residual)
    pos = 0
    # stationarity, by player
    for i in range(lay.N):
        off, d = lay.x_slices[i]
        lam, mu = z.lam(i), z.mu(i)
        gi = (grads[i] if grads is not None
              else diff.grad(game.costs[i], x, p))[off:off + d]
        if lay.n_g:
            gi = gi + Jg[:, off:off + d].T @ lam
        if lay.n_h:
            gi = gi + Jh[:, off:off + d].T @ mu
        for (zi, _, k_local, k, lo) , val in z.v_for_player(i):
            gi[k_local] -= val
        for (zi, _, k_local, k, hi), val in z.y_for_player(i):
            gi[k_local] += val
        out[pos:pos + d] = gi
        pos += d
    # shared equalities
    out[pos:pos + lay.n_h] = h
    pos += lay.n_h
    # lambda-FB rows, by player (single set in variational mode)
    n_blocks = 1 if lay.variational else lay.N
    for i in range(n_blocks):
        lam = z.lam(i)
        out[pos:pos + lay.n_g] = _fb_smooth(lam, -g)
        pos += lay.n_g
    # bound FB rows
    for e in lay.v_entries:
        zi, _, _, k, lo = e
        out[pos] = _fb_smooth(zv[zi], x[k] - lo)
        pos += 1
    for e in lay.y_entries:
        zi, _, _, k, hi = e
        out[pos] = _fb_smooth(zv[zi], hi - x[k])
        pos += 1
    if not np.all(np.isfinite(out)):
        raise NonFiniteResidual("KKT residual has non-finite entries")
    return out


def _lagrangian(game, i, lam, mu, n, n_p):
    """Scalar psi_i(w) = f_i + lam' g + mu' h over w = (x, p)."""
    def psi(w):
        x = w[:n]
        p = w[n:] if n_p else None
        val = game.costs[i](x, p) if p is not None else game.costs[i](x)
        if game.ineq is not None and lam.size:
            gv = game.ineq(x, p) if p is not None else game.ineq(x)
            for j in range(lam.size):
                val = val + lam[j] * gv[j]
        if game.eq is not None and mu.size:
            hv = game.eq(x, p) if p is not None else game.eq(x)
            for j in range(mu.size):
                val = val + mu[j] * hv[j]
        return val
    return psi


def residual_jacobian(game, z, p=None, wrt="z"):
    """Dense Jacobian of the KKT residual with respect to z (and optionally p).

    Assembled analytically from first/second derivatives of the player
    Lagrangians (via forward-mode AD) and the closed-form FB partials.
    """
    lay = z.layout
    zv = z.data
    x = zv[:lay.n]
    n, n_p = lay.n, (len(np.atleast_1d(p)) if p is not None else 0)
    with_p = (wrt == "z_and_p")
    ncols = lay.dim_z + (n_p if with_p else 0)
    J = np.zeros((lay.dim_residual, ncols))
    pcol = lay.dim_z  # start of p columns

    lq = game.lq_source
    if lq is not None:
        g, h, Jg, Jh, _ = _lq_first_order(game, x, p)
        if with_p and n_p:
            Jg_p, Jh_p = -lq.S, -lq.S_eq
    else:
        g, h = _eval_constraints(game, x, p)
        Jg = diff.jacobian(game.ineq, x, p) if game.ineq is not None else np.zeros((0, n))
        Jh = diff.jacobian(game.eq, x, p) if game.eq is not None else np.zeros((0, n))
        if with_p and n_p:
            Jg_p = (diff.jacobian(lambda q, _x: game.ineq(_x, q), np.asarray(p, float), x)
                    if game.ineq is not None else np.zeros((0, n_p)))
            Jh_p = (diff.jacobian(lambda q, _x: game.eq(_x, q), np.asarray(p, float), x)
                    if game.eq is not None else np.zeros((0, n_p)))
    w = np.concatenate([x, np.asarray(p, dtype=float)]) if (p is not None and n_p) else x
    nw = w.size

    pos = 0
    for i in range(lay.N):
        off, d = lay.x_slices[i]
        lam, mu = z.lam(i), z.mu(i)
        if lq is not None:
            # constraints are affine, so the Lagrangian Hessian is Q^i / F^i
            J[pos:pos + d, :n] = lq.Q[i][off:off + d, :]
            if with_p and n_p:
                J[pos:pos + d, pcol:pcol + n_p] = lq.F[i][off:off + d, :]
        else:
            psi = _lagrangian(game, i, lam, mu, n, n_p if p is not None else 0)
            H = diff.mixed_second(psi, w, list(range(off, off + d)))  # d x nw
            J[pos:pos + d, :n] = H[:, :n]
            if with_p and nw > n:
                J[pos:pos + d, pcol:pcol + n_p] = H[:, n:]
        if lay.n_g:
            s, ln = lay.lam_slices[0 if lay.variational else i]
            J[pos:pos + d, s:s + ln] = Jg[:, off:off + d].T
        if lay.n_h:
            s, ln = lay.mu_slices[0 if lay.variational else i]
            J[pos:pos + d, s:s + ln] = Jh[:, off:off + d].T
        for e in lay.v_entries:
            if e[1] == i:
                J[pos + e[2], e[0]] = -1.0
        for e in lay.y_entries:
            if e[1] == i:
                J[pos + e[2], e[0]] = 1.0
        pos += d
    # equality rows
    if lay.n_h:
        J[pos:pos + lay.n_h, :n] = Jh
        if with_p and n_p:
            J[pos:pos + lay.n_h, pcol:pcol + n_p] = Jh_p
        pos += lay.n_h
    # lambda-FB rows
    n_blocks = 1 if lay.variational else lay.N
    for i in range(n_blocks):
        lam = z.lam(i)
        s, _ = lay.lam_slices[i]
        for j in range(lay.n_g):
            pa, pb = _fb_partials(lam[j], -g[j])
            J[pos, s + j] = pa
            J[pos, :n] = -pb * Jg[j, :]
            if with_p and n_p:
                J[pos, pcol:pcol + n_p] = -pb * Jg_p[j, :]
            pos += 1
    # bound FB rows
    for e in lay.v_entries:
        zi, _, _, k, lo = e
        pa, pb = _fb_partials(zv[zi], x[k] - lo)
        J[pos, zi] = pa
        J[pos, k] = pb
        pos += 1
    for e in lay.y_entries:
        zi, _, _, k, hi = e
        pa, pb = _fb_partials(zv[zi], hi - x[k])
        J[pos, zi] = pa
        J[pos, k] = -pb
        pos += 1
    if not np.all(np.isfinite(J)):
        raise diff.NonFiniteDerivative("KKT Jacobian has non-finite entries")
    return J


def expand_variational(z_var, game):
    """Copy shared multipliers to every player, yielding a non-variational z."""
    lay_nv = make_layout(game, variational=False)
    z = np.zeros(lay_nv.dim_z)
    z[:lay_nv.n] = z_var.x
    for i in range(lay_nv.N):
        s, ln = lay_nv.lam_slices[i]
        z[s:s + ln] = z_var.lam(0)
        s, ln = lay_nv.mu_slices[i]
        z[s:s + ln] = z_var.mu(0)
    for e_nv, e_v in zip(lay_nv.v_entries, z_var.layout.v_entries):
        z[e_nv[0]] = z_var.data[e_v[0]]
    for e_nv, e_v in zip(lay_nv.y_entries, z_var.layout.y_entries):
        z[e_nv[0]] = z_var.data[e_v[0]]
    return KKTVector(z, lay_nv)


def layout_row_labels(layout):
    """Debug labels, one per residual row, in the documented ordering."""
    labels = []
    for i in range(layout.N):
        for k in range(layout.x_slices[i][1]):
            labels.append(f"stationarity[player {i + 1}][{k}]")
    for j in range(layout.n_h):
        labels.append(f"equality[{j}]")
    n_blocks = 1 if layout.variational else layout.N
    for i in range(n_blocks):
        tag = "shared" if layout.variational else f"player {i + 1}"
        for j in range(layout.n_g):
            labels.append(f"fb-lambda[{tag}][{j}]")
    for e in layout.v_entries:
        labels.append(f"fb-lower[player {e[1] + 1}][{e[2]}]")
    for e in layout.y_entries:
        labels.append(f"fb-upper[player {e[1] + 1}][{e[2]}]")
    return labels


def split_bounds(lower, upper):
    """Tightened boxes for the positive/negative split x = x_p - x_m."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    lp = np.maximum(0.0, lower)
    up = np.maximum(0.0, upper)
    lm = np.maximum(0.0, -upper)
    um = np.maximum(0.0, -lower)
    return (lp, up), (lm, um)


def split_point(x):
    """Positive/negative parts with x = x_p - x_m, both nonnegative."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0), np.maximum(-x, 0.0)


@dataclass
class BoundedNLSProblem:
    """Bound-constrained least-squares problem over w = (p, x_p, x_m, nu).

    ``residual_fn``/``jacobian_fn`` give the stacked least-squares rows;
    ``extra`` optionally carries a smooth additional objective as
    (value_fn, grad_fn, hess_const) for the composite (non pure-NLS) case.
    """

    residual_fn: object
    jacobian_fn: object
    lower: np.ndarray
    upper: np.ndarray
    w0: np.ndarray
    recombine: object
    extra: tuple = None


class InvalidRegularization(ValueError):
    pass


def split_l1(game, design, rho, p0=None, z0=None, variational=False):
    """Positive/negative-split bound-constrained NLS for l1-regularized solves.

    With no design objective beyond the regularizer and alpha2 > 0, the
    problem is a pure least-squares stack (rows alpha3*x_p + (alpha1/alpha3),
    same for x_m, then sqrt(rho)*R); otherwise the design objective and the
    l1 term are carried as a smooth/linear extra objective.
    """
    if design.alpha1 <= 0:
        raise InvalidRegularization("split_l1 requires alpha1 > 0")
    if rho <= 0:
        raise ValueError("rho must be positive")
    import dataclasses

    full_lo = np.concatenate([game.boxes[i][0] for i in range(game.layout.N)])
    full_hi = np.concatenate([game.boxes[i][1] for i in range(game.layout.N)])
    # boxes move into the tightened split bounds; the inner residual has no
    # bound-multiplier rows
    game = dataclasses.replace(game, boxes=None)
    lay = make_layout(game, variational=variational)
    n, n_p = lay.n, game.params.n_p
    (lp, up), (lm, um) = split_bounds(full_lo, full_hi)
    n_nu = lay.dim_z - n
    lower = np.concatenate([game.params.lower, lp, lm, np.full(n_nu, -np.inf)])
    upper = np.concatenate([game.params.upper, up, um, np.full(n_nu, np.inf)])
    inner_layout = lay
    sq = np.sqrt(rho)

    def unpack(w):
        p = w[:n_p] if n_p else None
        xp = w[n_p:n_p + n]
        xm = w[n_p + n:n_p + 2 * n]
        nu = w[n_p + 2 * n:]
        return p, xp, xm, nu

    def to_z(xp, xm, nu):
        return KKTVector(np.concatenate([xp - xm, nu]), inner_layout)

    pure_nls = (design.nonlinear is None and design.quad is None
                and not design.pwa_terms and design.alpha2 > 0)

    if pure_nls:
        a3 = np.sqrt(2.0 * design.alpha2)
        const = design.alpha1 / a3

        def residual_fn(w):
            p, xp, xm, nu = unpack(w)
            R = residual(game, to_z(xp, xm, nu), p)
            return np.concatenate([a3 * xp + const, a3 * xm + const, sq * R])

        def jacobian_fn(w):
            p, xp, xm, nu = unpack(w)
            z = to_z(xp, xm, nu)
            JR = residual_jacobian(game, z, p, wrt="z_and_p" if n_p else "z")
            Jx = JR[:, :n]
            Jnu = JR[:, n:lay.dim_z]
            Jp = JR[:, lay.dim_z:] if n_p else np.zeros((JR.shape[0], 0))
            m = JR.shape[0]
            top = np.zeros((2 * n, w.size))
            top[:n, n_p:n_p + n] = a3 * np.eye(n)
            top[n:, n_p + n:n_p + 2 * n] = a3 * np.eye(n)
            bot = np.hstack([sq * Jp, sq * Jx, -sq * Jx, sq * Jnu])
            return np.vstack([top, bot])

        extra = None
    else:
        def residual_fn(w):
            p, xp, xm, nu = unpack(w)
            return sq * residual(game, to_z(xp, xm, nu), p)

        def jacobian_fn(w):
            p, xp, xm, nu = unpack(w)
            z = to_z(xp, xm, nu)
            JR = residual_jacobian(game, z, p, wrt="z_and_p" if n_p else "z")
            Jx = JR[:, :n]
            Jnu = JR[:, n:lay.dim_z]
            Jp = JR[:, lay.dim_z:] if n_p else np.zeros((JR.shape[0], 0))
            return sq * np.hstack([Jp, Jx, -Jx, Jnu])

        def extra_value(w):
            p, xp, xm, nu = unpack(w)
            x = xp - xm
            val = design.alpha1 * float(np.sum(xp + xm))
            val += design.alpha2 * float(xp @ xp + xm @ xm)
            pv = p if p is not None else np.zeros(0)
            if design.quad is not None:
                val += design.quad_value(x, pv)
            if design.pwa_terms:
                val += design.pwa_value(x, pv)
            if design.nonlinear is not None:
                val += float(diff.value(design.nonlinear(x, p)))
            return val

        def extra_grad(w):
            p, xp, xm, nu = unpack(w)
            x = xp - xm
            g = np.zeros(w.size)
            g[n_p:n_p + n] += design.alpha1 + 2.0 * design.alpha2 * xp
            g[n_p + n:n_p + 2 * n] += design.alpha1 + 2.0 * design.alpha2 * xm
            gx = np.zeros(n)
            gp = np.zeros(n_p)
            pv = p if p is not None else np.zeros(0)
            if design.quad is not None:
                Q, cq = design.quad
                wq = np.concatenate([x, pv])
                full = Q @ wq + cq
                gx += full[:n]
                gp += full[n:]
            if design.nonlinear is not None:
                gx += diff.grad(design.nonlinear, x, p)
                if n_p:
                    gp += diff.grad(lambda q, _x: design.nonlinear(_x, q),
                                    np.asarray(p, float), x)
            g[:n_p] += gp
            g[n_p:n_p + n] += gx
            g[n_p + n:n_p + 2 * n] -= gx
            return g

        extra = (extra_value, extra_grad, None)

    if p0 is None:
        p0 = game.params.midpoint()
    if z0 is None:
        z0v = default_z0(lay)
    else:
        z0v = z0.data if isinstance(z0, KKTVector) else np.asarray(z0, float)
    xp0, xm0 = split_point(z0v[:n])
    w0 = np.concatenate([np.asarray(p0, float)[:n_p], xp0, xm0, z0v[n:]])
    w0 = np.clip(w0, lower, upper)

    def recombine(w):
        p, xp, xm, nu = unpack(w)
        return p, xp - xm, to_z(xp, xm, nu)

    return BoundedNLSProblem(residual_fn=residual_fn, jacobian_fn=jacobian_fn,
                             lower=lower, upper=upper, w0=w0,
                             recombine=recombine, extra=extra)
