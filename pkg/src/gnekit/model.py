"""Game data model: player layouts, nonlinear and linear-quadratic games,
parameter boxes, design objectives, and bound augmentation.

All types are immutable after construction and safe to share across
concurrent solves.  Validation never raises on malformed data; it returns a
report listing every violation found.
"""

from dataclasses import dataclass, field

import numpy as np

INF = float("inf")


@dataclass(frozen=True)
class PlayerLayout:
    """Partition of the stacked decision vector x = col(x_1, ..., x_N)."""

    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.N < 1 or any(d < 1 for d in self.dims):
            raise ValueError("layout needs at least one player, each with >= 1 variable")

    @property
    def N(self):
        return len(self.dims)

    @property
    def n(self):
        return sum(self.dims)

    @property
    def offsets(self):
        out, acc = [], 0
        for d in self.dims:
            out.append(acc)
            acc += d
        return tuple(out)

    def indices(self, i):
        """Global indices of player i's variables within x."""
        off = self.offsets[i]
        return list(range(off, off + self.dims[i]))

    def block(self, x, i):
        off = self.offsets[i]
        return x[off:off + self.dims[i]]


@dataclass(frozen=True)
class ParamBox:
    """Hyper-box feasible set for the parameter vector p (n_p = 0 allowed)."""

    lower: np.ndarray = field(default_factory=lambda: np.zeros(0))
    upper: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ValueError("parameter bound shapes differ")

    @property
    def n_p(self):
        return self.lower.size

    @classmethod
    def singleton(cls, p0):
        p0 = np.asarray(p0, dtype=float)
        return cls(p0.copy(), p0.copy())

    @classmethod
    def free(cls, n_p):
        return cls(np.full(n_p, -INF), np.full(n_p, INF))

    def midpoint(self):
        lo = np.where(np.isfinite(self.lower), self.lower, 0.0)
        hi = np.where(np.isfinite(self.upper), self.upper, 0.0)
        return 0.5 * (lo + hi)

    def contains(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))


def default_boxes(layout):
    """All-infinite per-player boxes (no local bounds)."""
    return tuple((np.full(d, -INF), np.full(d, INF)) for d in layout.dims)


@dataclass(frozen=True)
class NonlinearGame:
    """Callback-defined N-player game with shared constraints.

    ``costs[i]`` is a scalar function f_i(x, p); ``ineq`` maps (x, p) to the
    n_g shared inequality residuals (feasible iff <= 0); ``eq`` to the n_h
    equality residuals.  Callbacks must accept object arrays of dual scalars
    so the solver can differentiate them.
    """

    layout: PlayerLayout
    costs: tuple
    ineq: object = None
    eq: object = None
    n_g: int = 0
    n_h: int = 0
    boxes: tuple = None
    params: ParamBox = field(default_factory=ParamBox)
    lq_source: object = None      # originating LQGame, enables exact
                                  # derivative shortcuts in kkt

    def __post_init__(self):
        object.__setattr__(self, "costs", tuple(self.costs))
        if self.boxes is None:
            object.__setattr__(self, "boxes", default_boxes(self.layout))
        else:
            object.__setattr__(self, "boxes", tuple(
                (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
                for lo, hi in self.boxes))


@dataclass(frozen=True)
class DesignObjective:
    """Game-design objective: piecewise-affine groups, quadratic term,
    nonlinear callback, and l1/l2 regularization weights."""

    pwa_terms: tuple = ()        # groups: each a list of (D_row, E_row, h) pieces
    quad: tuple = None           # (Q_J over (x, p), c_J)
    nonlinear: object = None     # J(x, p) callback for the NLS path
    alpha1: float = 0.0
    alpha2: float = 0.0
    reference: np.ndarray = None

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValueError("regularization weights must be nonnegative")
        groups = []
        for group in self.pwa_terms:
            if not group:
                raise ValueError("empty piecewise-affine group")
            groups.append(tuple(
                (np.asarray(D, dtype=float), np.asarray(E, dtype=float), float(h))
                for D, E, h in group))
        object.__setattr__(self, "pwa_terms", tuple(groups))
        if self.quad is not None:
            Q, c = self.quad
            object.__setattr__(self, "quad",
                               (np.asarray(Q, dtype=float), np.asarray(c, dtype=float)))

    @property
    def n_J(self):
        return len(self.pwa_terms)

    def pwa_value(self, x, p):
        total = 0.0
        for group in self.pwa_terms:
            total += max(float(D @ x) + (float(E @ p) if E.size else 0.0) + h
                         for D, E, h in group)
        return total

    def quad_value(self, x, p):
        if self.quad is None:
            return 0.0
        Q, c = self.quad
        w = np.concatenate([x, p])
        return float(0.5 * w @ Q @ w + c @ w)


@dataclass(frozen=True)
class LQGame:
    """Matrix-defined linear-quadratic game.

    Player i minimizes 1/2 x'Q^i x + (c^i + F^i p)' x over its own block,
    subject to shared A x <= b + S p, A_eq x = b_eq + S_eq p, and local
    boxes l_i <= x_i <= u_i.
    """

    layout: PlayerLayout
    Q: tuple
    c: tuple
    F: tuple = None
    A: np.ndarray = None
    b: np.ndarray = None
    S: np.ndarray = None
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    S_eq: np.ndarray = None
    boxes: tuple = None
    params: ParamBox = field(default_factory=ParamBox)
    design: DesignObjective = None

    def __post_init__(self):
        n, n_p = self.layout.n, self.params.n_p
        object.__setattr__(self, "Q", tuple(np.asarray(Q, dtype=float) for Q in self.Q))
        object.__setattr__(self, "c", tuple(np.asarray(c, dtype=float) for c in self.c))
        if self.F is None:
            object.__setattr__(self, "F", tuple(np.zeros((n, n_p)) for _ in self.Q))
        else:
            object.__setattr__(self, "F", tuple(np.asarray(F, dtype=float) for F in self.F))
        for name, rows in (("A", "b"), ("A_eq", "b_eq")):
            mat = getattr(self, name)
            if mat is None:
                object.__setattr__(self, name, np.zeros((0, n)))
                object.__setattr__(self, rows, np.zeros(0))
            else:
                object.__setattr__(self, name, np.atleast_2d(np.asarray(mat, dtype=float)))
                object.__setattr__(self, rows,
                                   np.asarray(getattr(self, rows), dtype=float).ravel())
        if self.S is None:
            object.__setattr__(self, "S", np.zeros((self.A.shape[0], n_p)))
        else:
            object.__setattr__(self, "S", np.atleast_2d(np.asarray(self.S, dtype=float)))
        if self.S_eq is None:
            object.__setattr__(self, "S_eq", np.zeros((self.A_eq.shape[0], n_p)))
        else:
            object.__setattr__(self, "S_eq", np.atleast_2d(np.asarray(self.S_eq, dtype=float)))
        if self.boxes is None:
            object.__setattr__(self, "boxes", default_boxes(self.layout))
        else:
            object.__setattr__(self, "boxes", tuple(
                (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
                for lo, hi in self.boxes))

    @property
    def n_g(self):
        return self.A.shape[0]

    @property
    def n_h(self):
        return self.A_eq.shape[0]

    def cost_value(self, i, x, p=None):
        x = np.asarray(x, dtype=float)
        lin = self.c[i].copy()
        if p is not None and self.params.n_p:
            lin = lin + self.F[i] @ np.asarray(p, dtype=float)
        return float(0.5 * x @ self.Q[i] @ x + lin @ x)

    def to_nonlinear(self):
        """Equivalent callback-defined game (for the NLS solver path)."""
        n_p = self.params.n_p

        def make_cost(Q, c, F):
            def f(x, p=None):
                lin = c
                if p is not None and n_p:
                    lin = c + F @ p
                return 0.5 * (x @ (Q @ x)) + lin @ x
            return f

        ineq = eq = None
        if self.n_g:
            A, b, S = self.A, self.b, self.S

            def ineq(x, p=None):
                r = A @ x - b
                if p is not None and n_p:
                    r = r - S @ p
                return r

        if self.n_h:
            Ae, be, Se = self.A_eq, self.b_eq, self.S_eq

            def eq(x, p=None):
                r = Ae @ x - be
                if p is not None and n_p:
                    r = r - Se @ p
                return r

        return NonlinearGame(layout=self.layout, costs=tuple(
            make_cost(self.Q[i], self.c[i], self.F[i]) for i in range(self.layout.N)),
            ineq=ineq, eq=eq, n_g=self.n_g, n_h=self.n_h,
            boxes=self.boxes, params=self.params, lq_source=self)


@dataclass(frozen=True)
class AugmentedInequalities:
    """Shared inequalities with finite bounds folded in: A_bar x <= b_bar + S_bar p.

    ``row_origin`` tags each row: ("shared", j), ("ub", i, k) or ("lb", i, k)
    with k a global variable index.
    """

    A_bar: np.ndarray
    b_bar: np.ndarray
    S_bar: np.ndarray
    row_origin: tuple

    @property
    def m(self):
        return self.A_bar.shape[0]


def augment_bounds(game):
    """Fold finite per-player bounds into the shared inequality block.

    Builds A_bar = [A; I_u; -I_l], b_bar = [b; u_u; -l_l], S_bar = [S; 0; 0];
    infinite bound entries contribute no row.
    """
    n, n_p = game.layout.n, game.params.n_p
    rows, rhs, origin = [game.A] if game.n_g else [], [game.b] if game.n_g else [], \
        [("shared", j) for j in range(game.n_g)]
    extra_rows, extra_rhs = [], []
    for i in range(game.layout.N):
        lo, hi = game.boxes[i]
        for k_local, k in enumerate(game.layout.indices(i)):
            if np.isfinite(hi[k_local]):
                e = np.zeros(n)
                e[k] = 1.0
                extra_rows.append(e)
                extra_rhs.append(hi[k_local])
                origin.append(("ub", i, k))
    for i in range(game.layout.N):
        lo, hi = game.boxes[i]
        for k_local, k in enumerate(game.layout.indices(i)):
            if np.isfinite(lo[k_local]):
                e = np.zeros(n)
                e[k] = -1.0
                extra_rows.append(e)
                extra_rhs.append(-lo[k_local])
                origin.append(("lb", i, k))
    if extra_rows:
        rows.append(np.array(extra_rows))
        rhs.append(np.array(extra_rhs))
    A_bar = np.vstack(rows) if rows else np.zeros((0, n))
    b_bar = np.concatenate(rhs) if rhs else np.zeros(0)
    S_bar = np.vstack([game.S, np.zeros((len(origin) - game.n_g, n_p))])
    return AugmentedInequalities(A_bar, b_bar, S_bar, tuple(origin))


# ---------------------------------------------------------------------------
# validation

@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def add(self, msg):
        self.violations.append(msg)

    @property
    def ok(self):
        return not self.violations

    def __iter__(self):
        return iter(self.violations)


def _check_boxes(game, report):
    for i in range(game.layout.N):
        lo, hi = game.boxes[i]
        d = game.layout.dims[i]
        if lo.size != d or hi.size != d:
            report.add(f"box dimension mismatch at player {i + 1}")
        elif np.any(lo > hi):
            report.add(f"box inverted at player {i + 1}")


def validate_nonlinear(game):
    """Report-style validation of a callback-defined game (never raises)."""
    report = ValidationReport()
    if len(game.costs) != game.layout.N:
        report.add("cost count differs from player count")
    _check_boxes(game, report)
    if np.any(game.params.lower > game.params.upper):
        report.add("parameter box inverted")
    x0 = np.zeros(game.layout.n)
    p0 = game.params.midpoint() if game.params.n_p else None
    for i, f in enumerate(game.costs):
        try:
            val = f(x0, p0) if p0 is not None else f(x0)
            if not np.isfinite(float(val)):
                report.add(f"cost {i + 1} non-finite at probe point")
        except Exception as e:  # noqa: BLE001 - validation is total
            report.add(f"cost {i + 1} failed at probe point: {e}")
    for name, fn, declared in (("inequality", game.ineq, game.n_g),
                               ("equality", game.eq, game.n_h)):
        if fn is None:
            if declared:
                report.add(f"{name} arity: declared {declared} but no callback")
            continue
        try:
            vals = fn(x0, p0) if p0 is not None else fn(x0)
            if len(np.atleast_1d(vals)) != declared:
                report.add(f"{name} arity: callback returns "
                           f"{len(np.atleast_1d(vals))}, declared {declared}")
        except Exception as e:  # noqa: BLE001
            report.add(f"{name} callback failed at probe point: {e}")
    return report


PSD_EIG_FLOOR = -1e-9


def validate_lq(game):
    """Report-style validation of an LQ game, including PSD diagonal blocks."""
    report = ValidationReport()
    n, n_p, N = game.layout.n, game.params.n_p, game.layout.N
    if len(game.Q) != N or len(game.c) != N:
        report.add("Q/c list length differs from player count")
        return report
    for i in range(N):
        if game.Q[i].shape != (n, n):
            report.add(f"Q^{i + 1} shape {game.Q[i].shape}, expected ({n}, {n})")
            continue
        idx = game.layout.indices(i)
        blk = game.Q[i][np.ix_(idx, idx)]
        if np.max(np.abs(blk - blk.T)) > 1e-8:
            report.add(f"Q block not symmetric at player {i + 1}")
        elif np.min(np.linalg.eigvalsh(0.5 * (blk + blk.T))) < PSD_EIG_FLOOR:
            report.add(f"Q block not PSD at player {i + 1}")
        if game.c[i].size != n:
            report.add(f"c^{i + 1} length {game.c[i].size}, expected {n}")
        if game.F[i].shape != (n, n_p):
            report.add(f"F^{i + 1} shape {game.F[i].shape}, expected ({n}, {n_p})")
    if game.A.shape[1] != n and game.A.size:
        report.add(f"A column count {game.A.shape[1]}, expected {n}")
    if game.b.size != game.A.shape[0]:
        report.add("b length differs from A row count")
    if game.S.shape != (game.A.shape[0], n_p):
        report.add("S shape inconsistent with A and n_p")
    if game.A_eq.size and game.A_eq.shape[1] != n:
        report.add(f"A_eq column count {game.A_eq.shape[1]}, expected {n}")
    if game.b_eq.size != game.A_eq.shape[0]:
        report.add("b_eq length differs from A_eq row count")
    _check_boxes(game, report)
    if np.any(game.params.lower > game.params.upper):
        report.add("parameter box inverted")
    if game.design is not None and game.design.quad is not None:
        Q_J, c_J = game.design.quad
        if Q_J.shape != (n + n_p, n + n_p):
            report.add("design Q_J shape inconsistent")
        elif np.min(np.linalg.eigvalsh(0.5 * (Q_J + Q_J.T))) < PSD_EIG_FLOOR:
            report.add("design Q_J not positive semidefinite")
    return report


def symmetrize(Q, warn_tol=1e-8, warn=None):
    """Return (Q + Q')/2; calls ``warn`` if the asymmetry exceeds the tolerance."""
    Q = np.asarray(Q, dtype=float)
    gap = np.max(np.abs(Q - Q.T)) if Q.size else 0.0
    if gap > warn_tol and warn is not None:
        warn(f"matrix symmetrized; asymmetry {gap:.2e}")
    return 0.5 * (Q + Q.T)


def build_inverse_objective(x_des, norm="inf", n_p=0):
    """Design objective encoding a target equilibrium.

    norm="inf": one PWA group with 2n pieces; norm="one": n groups of 2
    pieces; norm="two": quadratic 1/2 ||x - x_des||^2.
    """
    x_des = np.asarray(x_des, dtype=float)
    n = x_des.size
    zero_E = np.zeros(n_p)
    if norm == "inf":
        group = []
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            group.append((e, zero_E, -x_des[k]))
        for k in range(n):
            e = np.zeros(n)
            e[k] = -1.0
            group.append((e, zero_E, x_des[k]))
        return DesignObjective(pwa_terms=(group,), reference=x_des)
    if norm == "one":
        groups = []
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            groups.append([(e, zero_E, -x_des[k]), (-e, zero_E, x_des[k])])
        return DesignObjective(pwa_terms=tuple(groups), reference=x_des)
    if norm == "two":
        Q_J = np.zeros((n + n_p, n + n_p))
        Q_J[:n, :n] = np.eye(n)
        c_J = np.concatenate([-x_des, np.zeros(n_p)])
        return DesignObjective(quad=(Q_J, c_J), reference=x_des)
    raise ValueError(f"unknown norm {norm!r}")
