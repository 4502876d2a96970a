"""Exact machinery for linear-quadratic games.

Per-player KKT systems are stacked into one mixed-integer program whose
binaries select the active inequality rows; complementarity is encoded with
big-M rows (slack <= M(1 - delta), lambda <= M delta).  A depth-first
branch-and-bound over the binaries (LP or QP relaxations from convexcore,
most-fractional branching, delta = 1 child first) solves it exactly.
No-good cuts enumerate multiple equilibria.  Models can be exported to
fixed-format MPS for external solvers.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import convexcore, kkt
from .model import augment_bounds

DEFAULT_BIG_M = 1e4
INTEGRALITY_TOL = 1e-6


@dataclass
class MipConfig:
    node_limit: int = 20000
    integrality_tol: float = INTEGRALITY_TOL
    verify_tol: float = 1e-7


@dataclass
class MipModel:
    """Mixed-integer encoding of the stacked player KKT systems."""

    nvars: int
    c: np.ndarray
    Q: np.ndarray                 # quadratic objective (dense) or None
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    delta_idx: np.ndarray         # binary variables, one per augmented row
    x_idx: np.ndarray
    p_idx: np.ndarray
    lam_blocks: tuple             # per player: (row indices into A_bar, var indices)
    mu_blocks: tuple
    sigma_idx: np.ndarray
    M: float
    variational: bool
    aug: object                   # AugmentedInequalities
    game: object
    cuts: list = field(default_factory=list)
    primal_row_offset: int = 0    # offset of A_bar rows within A_ub

    @property
    def m(self):
        return self.delta_idx.size


@dataclass
class ActiveSetSignature:
    delta: tuple

    def as_set(self):
        return tuple(j + 1 for j, v in enumerate(self.delta) if v)  # 1-based

    def __hash__(self):
        return hash(self.delta)

    def __eq__(self, other):
        return self.delta == other.delta


@dataclass
class MipResult:
    status: str                   # Optimal | Infeasible | NodeLimit
    x: np.ndarray = None
    p: np.ndarray = None
    lam: tuple = None
    mu: tuple = None
    sigma: np.ndarray = None
    signature: ActiveSetSignature = None
    objective: float = None
    nodes: int = 0
    bigM_slack_margin: float = None
    warnings: list = field(default_factory=list)
    kkt_residual: float = None


class BigMTight(UserWarning):
    pass


def player_rows(game, aug):
    """Per player: indices of augmented rows where that player's variables
    appear (nonzero column in the player's block)."""
    out = []
    for i in range(game.layout.N):
        idx = game.layout.indices(i)
        rows = [j for j in range(aug.m) if np.any(aug.A_bar[j, idx] != 0.0)]
        out.append(rows)
    return out


def eq_player_rows(game):
    out = []
    for i in range(game.layout.N):
        idx = game.layout.indices(i)
        rows = [j for j in range(game.n_h) if np.any(game.A_eq[j, idx] != 0.0)]
        out.append(rows)
    return out


def assemble_player_kkt(game, aug=None):
    """Symbolic per-player KKT description: stationarity blocks, involved
    rows, and complementarity pairs.  Useful for inspection and testing."""
    aug = aug or augment_bounds(game)
    rows_per_player = player_rows(game, aug)
    eq_rows = eq_player_rows(game)
    blocks = []
    for i in range(game.layout.N):
        idx = game.layout.indices(i)
        blocks.append({
            "player": i + 1,
            "stationarity_dim": len(idx),
            "Q_rows": game.Q[i][idx, :],
            "c_rows": game.c[i][idx],
            "F_rows": game.F[i][idx, :],
            "ineq_rows": rows_per_player[i],
            "eq_rows": eq_rows[i],
            "A_bar_block": aug.A_bar[np.ix_(rows_per_player[i], idx)],
        })
    return blocks


def build_mip(game, design=None, variational=False, M=DEFAULT_BIG_M):
    """Big-M mixed-integer model of the stacked KKT conditions.

    Variables: p, x, lambda blocks, mu blocks, sigma (PWA epigraph), delta.
    delta_j = 1 forces row j active; delta_j = 0 forces all lambda entries
    of row j to zero.
    """
    aug = augment_bounds(game)
    n, n_p, N = game.layout.n, game.params.n_p, game.layout.N
    m = aug.m
    rows_pp = player_rows(game, aug)
    eqrows_pp = eq_player_rows(game)
    if variational:
        lam_row_sets = [list(range(m))]
        mu_row_sets = [list(range(game.n_h))]
    else:
        lam_row_sets = rows_pp
        mu_row_sets = eqrows_pp

    pos = 0
    p_idx = np.arange(pos, pos + n_p)
    pos += n_p
    x_idx = np.arange(pos, pos + n)
    pos += n
    lam_blocks = []
    for rows in lam_row_sets:
        lam_blocks.append((list(rows), np.arange(pos, pos + len(rows))))
        pos += len(rows)
    mu_blocks = []
    for rows in mu_row_sets:
        mu_blocks.append((list(rows), np.arange(pos, pos + len(rows))))
        pos += len(rows)
    n_J = design.n_J if design is not None else 0
    sigma_idx = np.arange(pos, pos + n_J)
    pos += n_J
    delta_idx = np.arange(pos, pos + m)
    pos += m
    nv = pos

    lb = np.full(nv, -np.inf)
    ub = np.full(nv, np.inf)
    lb[p_idx] = game.params.lower
    ub[p_idx] = game.params.upper
    for _, vidx in lam_blocks:
        lb[vidx] = 0.0
    lb[delta_idx] = 0.0
    ub[delta_idx] = 1.0

    A_eq_rows, b_eq_rows = [], []
    # stationarity per player
    for i in range(N):
        idx = game.layout.indices(i)
        for r_local, k in enumerate(idx):
            row = np.zeros(nv)
            row[x_idx] = game.Q[i][k, :]
            if n_p:
                row[p_idx] = game.F[i][k, :]
            rows, vidx = lam_blocks[0] if variational else lam_blocks[i]
            for a, j in enumerate(rows):
                row[vidx[a]] = aug.A_bar[j, k]
            erows, evidx = mu_blocks[0] if variational else mu_blocks[i]
            for a, j in enumerate(erows):
                row[evidx[a]] = game.A_eq[j, k]
            A_eq_rows.append(row)
            b_eq_rows.append(-game.c[i][k])
    # shared equalities A_eq x - S_eq p = b_eq
    for j in range(game.n_h):
        row = np.zeros(nv)
        row[x_idx] = game.A_eq[j, :]
        if n_p:
            row[p_idx] = -game.S_eq[j, :]
        A_eq_rows.append(row)
        b_eq_rows.append(game.b_eq[j])

    A_ub_rows, b_ub_rows = [], []
    # primal feasibility: A_bar x - S_bar p <= b_bar
    primal_row_offset = 0
    for j in range(m):
        row = np.zeros(nv)
        row[x_idx] = aug.A_bar[j, :]
        if n_p:
            row[p_idx] = -aug.S_bar[j, :]
        A_ub_rows.append(row)
        b_ub_rows.append(aug.b_bar[j])
    # big-M activity rows: slack_j <= M (1 - delta_j)
    # i.e. -A_bar x + S_bar p + M delta <= M - b_bar
    for j in range(m):
        row = np.zeros(nv)
        row[x_idx] = -aug.A_bar[j, :]
        if n_p:
            row[p_idx] = aug.S_bar[j, :]
        row[delta_idx[j]] = M
        A_ub_rows.append(row)
        b_ub_rows.append(M - aug.b_bar[j])
    # lambda <= M delta
    for rows, vidx in lam_blocks:
        for a, j in enumerate(rows):
            row = np.zeros(nv)
            row[vidx[a]] = 1.0
            row[delta_idx[j]] = -M
            A_ub_rows.append(row)
            b_ub_rows.append(0.0)
    # PWA epigraph rows: D x + E p - sigma_j <= -h
    c = np.zeros(nv)
    Q = None
    if design is not None:
        for jg, group in enumerate(design.pwa_terms):
            c[sigma_idx[jg]] = 1.0
            for D, E, hconst in group:
                row = np.zeros(nv)
                row[x_idx] = D
                if n_p and E.size:
                    row[p_idx] = E
                row[sigma_idx[jg]] = -1.0
                A_ub_rows.append(row)
                b_ub_rows.append(-hconst)
        if design.quad is not None:
            Qd, cd = design.quad
            Q = np.zeros((nv, nv))
            sel = np.concatenate([x_idx, p_idx])
            Q[np.ix_(sel, sel)] = Qd
            c[x_idx] += cd[:n]
            if n_p:
                c[p_idx] += cd[n:]

    return MipModel(nvars=nv, c=c, Q=Q,
                    A_ub=(np.array(A_ub_rows) if A_ub_rows
                          else np.zeros((0, nv))),
                    b_ub=np.array(b_ub_rows),
                    A_eq=(np.array(A_eq_rows) if A_eq_rows
                          else np.zeros((0, nv))),
                    b_eq=np.array(b_eq_rows),
                    lb=lb, ub=ub, delta_idx=delta_idx, x_idx=x_idx,
                    p_idx=p_idx, lam_blocks=tuple(lam_blocks),
                    mu_blocks=tuple(mu_blocks), sigma_idx=sigma_idx,
                    M=M, variational=variational, aug=aug, game=game,
                    primal_row_offset=primal_row_offset)


def _relax(model, fix):
    """Solve the continuous relaxation with the given delta fixings."""
    lb = model.lb.copy()
    ub = model.ub.copy()
    for j, v in fix.items():
        lb[model.delta_idx[j]] = v
        ub[model.delta_idx[j]] = v
    A_ub, b_ub = model.A_ub, model.b_ub
    if model.cuts:
        A_ub = np.vstack([A_ub] + [cut[0][None, :] for cut in model.cuts])
        b_ub = np.concatenate([b_ub, [cut[1] for cut in model.cuts]])
    if model.Q is None:
        return convexcore.solve_lp(convexcore.LPProblem(
            model.c, A_ub, b_ub, model.A_eq, model.b_eq, lb, ub))
    return convexcore.solve_qp(convexcore.QPProblem(
        model.Q, model.c, A_ub, b_ub, model.A_eq, model.b_eq, lb, ub))


def _round_heuristic(model, res):
    """Guess an integral delta from a relaxation point: active rows on."""
    x = res.x
    slack = np.empty(model.m)
    for j in range(model.m):
        row = model.A_ub[model.primal_row_offset + j]
        slack[j] = model.b_ub[model.primal_row_offset + j] - row @ x
    return {j: (1.0 if slack[j] <= 1e-6 else 0.0) for j in range(model.m)}


def _extract(model, res, nodes):
    v = res.x
    delta = tuple(int(round(v[j])) for j in model.delta_idx)
    lam = tuple((list(rows), v[vidx].copy()) for rows, vidx in model.lam_blocks)
    mu = tuple((list(rows), v[vidx].copy()) for rows, vidx in model.mu_blocks)
    x = v[model.x_idx].copy()
    p = v[model.p_idx].copy() if model.p_idx.size else None
    # big-M margin: binding side of each complementarity pair
    worst = np.inf
    for j in range(model.m):
        row = model.aug.A_bar[j]
        s = model.aug.b_bar[j] - row @ x
        if p is not None and model.aug.S_bar.shape[1]:
            s += model.aug.S_bar[j] @ p
        if delta[j] == 0:
            worst = min(worst, model.M - s)
        else:
            for rows, vidx in model.lam_blocks:
                if j in rows:
                    worst = min(worst, model.M - v[vidx[rows.index(j)]])
    warn_list = []
    if model.m and worst <= 0.01 * model.M:
        msg = "big-M slack margin within 1% of M; consider increasing M"
        warn_list.append(msg)
        warnings.warn(msg, BigMTight)
    sigma = v[model.sigma_idx].copy() if model.sigma_idx.size else None
    obj = res.objective
    if model.Q is not None:
        obj = float(0.5 * v @ model.Q @ v + model.c @ v)
    result = MipResult(status="Optimal", x=x, p=p, lam=lam, mu=mu,
                       sigma=sigma, signature=ActiveSetSignature(delta),
                       objective=obj, nodes=nodes,
                       bigM_slack_margin=(None if not model.m else float(worst)),
                       warnings=warn_list)
    result.kkt_residual = kkt_verify(model, result)
    return result


def kkt_verify(model, result):
    """Independent check of Eq-style KKT conditions at the recovered point."""
    game = model.game
    nlg = game.to_nonlinear()
    lay = kkt.make_layout(nlg, variational=model.variational)
    z = np.zeros(lay.dim_z)
    z[:lay.n] = result.x
    aug = model.aug
    # map augmented-row multipliers back into shared-lambda and bound duals
    n_blocks = 1 if model.variational else game.layout.N
    for bi in range(n_blocks):
        rows, _ = model.lam_blocks[bi]
        lam_vals = dict(zip(rows, result.lam[bi][1]))
        s, ln = lay.lam_slices[bi]
        for j in range(game.n_g):
            z[s + j] = lam_vals.get(j, 0.0)
        erows = model.mu_blocks[bi][0]
        mu_vals = dict(zip(erows, result.mu[bi][1]))
        s, ln = lay.mu_slices[bi]
        for j in range(game.n_h):
            z[s + j] = mu_vals.get(j, 0.0)
    for e in lay.v_entries:
        zi, i, k_local, k, _ = e
        for j, org in enumerate(aug.row_origin):
            if org[0] == "lb" and org[1] == i and org[2] == k:
                bi = 0 if model.variational else i
                rows, _ = model.lam_blocks[bi]
                if j in rows:
                    z[zi] = result.lam[bi][1][rows.index(j)]
    for e in lay.y_entries:
        zi, i, k_local, k, _ = e
        for j, org in enumerate(aug.row_origin):
            if org[0] == "ub" and org[1] == i and org[2] == k:
                bi = 0 if model.variational else i
                rows, _ = model.lam_blocks[bi]
                if j in rows:
                    z[zi] = result.lam[bi][1][rows.index(j)]
    try:
        R = kkt.residual(nlg, kkt.KKTVector(z, lay), result.p)
    except kkt.NonFiniteResidual:
        return np.inf
    return float(np.max(np.abs(R), initial=0.0))


def solve_mip(model, cfg=None, feasibility_stop=None):
    """Depth-first branch-and-bound over the complementarity binaries.

    Branches on the most fractional delta, exploring the delta = 1 child
    first.  Pure feasibility models (zero objective) return the first
    integral point found.
    """
    cfg = cfg or MipConfig()
    feasibility = (model.Q is None and not np.any(model.c)) \
        if feasibility_stop is None else feasibility_stop
    nodes = 0
    best = None
    best_obj = np.inf
    stack = [dict()]
    tried_guesses = set()
    while stack:
        if nodes >= cfg.node_limit:
            if best is not None:
                best.status = "NodeLimit"
                return best
            return MipResult(status="NodeLimit", nodes=nodes)
        fix = stack.pop()
        nodes += 1
        res = _relax(model, fix)
        if res.status != "Optimal":
            continue
        if res.objective is not None and res.objective >= best_obj - 1e-9:
            continue
        dvals = res.x[model.delta_idx]
        frac = np.abs(dvals - np.round(dvals))
        integral = model.m == 0 or np.max(frac, initial=0.0) <= cfg.integrality_tol
        if integral:
            cand = _extract(model, res, nodes)
            if cand.kkt_residual <= max(cfg.verify_tol, 1e-5):
                if cand.objective < best_obj - 1e-12 or best is None:
                    best, best_obj = cand, cand.objective
                if feasibility:
                    break
                continue
            if len(fix) >= model.m:
                continue
            # near-integral point that fails verification: free binaries are
            # exploiting the integrality tolerance, so branch instead of
            # rejecting the whole subtree
        if not integral:
            guess = _round_heuristic(model, res)
            guess.update(fix)
            key = tuple(sorted(guess.items()))
            if key not in tried_guesses:
                tried_guesses.add(key)
                hres = _relax(model, guess)
                nodes += 1
                if hres.status == "Optimal":
                    hd = hres.x[model.delta_idx]
                    if np.max(np.abs(hd - np.round(hd)), initial=0.0) \
                            <= cfg.integrality_tol:
                        cand = _extract(model, hres, nodes)
                        if cand.kkt_residual <= max(cfg.verify_tol, 1e-5):
                            if cand.objective < best_obj - 1e-12 or best is None:
                                best, best_obj = cand, cand.objective
                            if feasibility:
                                break
        unfixed = [k for k in range(model.m) if k not in fix]
        j = max(unfixed, key=lambda k: frac[k])
        # explore the side suggested by the relaxation first
        first = 1.0 if dvals[j] >= 0.5 else 0.0
        other = dict(fix)
        other[j] = 1.0 - first
        child = dict(fix)
        child[j] = first
        stack.append(other)
        stack.append(child)    # popped first
    if best is None:
        return MipResult(status="Infeasible", nodes=nodes)
    best.nodes = nodes
    return best


def no_good_cut(model, signature):
    """Add a linear cut excluding one binary assignment; returns the cut."""
    row = np.zeros(model.nvars)
    ones = 0
    for j, v in enumerate(signature.delta):
        if v:
            row[model.delta_idx[j]] = 1.0
            ones += 1
        else:
            row[model.delta_idx[j]] = -1.0
    cut = (row, float(ones - 1))
    model.cuts.append(cut)
    return cut


def enumerate_equilibria(game, design=None, variational=False,
                         M=DEFAULT_BIG_M, max_count=64, cfg=None):
    """Iteratively solve and exclude active-set signatures via no-good cuts."""
    model = build_mip(game, design=design, variational=variational, M=M)
    results = []
    seen = set()
    while len(results) < max_count:
        res = solve_mip(model, cfg=cfg)
        if res.status != "Optimal":
            break
        if res.signature in seen:
            break  # safety: the cut should have excluded it
        seen.add(res.signature)
        results.append(res)
        no_good_cut(model, res.signature)
    return results


def solve_inverse_lq(game, x_des, norm="inf", M=DEFAULT_BIG_M, cfg=None,
                     variational=False):
    """Recover a parameter whose equilibrium best matches x_des."""
    from .model import build_inverse_objective
    design = build_inverse_objective(x_des, norm=norm, n_p=game.params.n_p)
    model = build_mip(game, design=design, variational=variational, M=M)
    res = solve_mip(model, cfg=cfg)
    if res.status == "Optimal":
        dev = res.x - np.asarray(x_des, dtype=float)
        res.warnings.append(
            f"deviation {norm}-norm: "
            f"{np.max(np.abs(dev)) if norm == 'inf' else np.linalg.norm(dev, 1 if norm == 'one' else 2):.3e}")
    return res


def brute_force_signatures(game, variational=False, M=DEFAULT_BIG_M,
                           model=None):
    """Oracle: all feasible active-set signatures by exhaustive enumeration
    over the 2^m binary assignments (leaf relaxation per assignment)."""
    import itertools
    model = model or build_mip(game, variational=variational, M=M)
    found = set()
    for bits in itertools.product((0.0, 1.0), repeat=model.m):
        fix = dict(enumerate(bits))
        res = _relax(model, fix)
        if res.status != "Optimal":
            continue
        cand = _extract(model, res, 0)
        if cand.kkt_residual <= 1e-5:
            found.add(tuple(int(b) for b in bits))
    return found


def _mps_value(v):
    return "%.12E" % v


def _mps_line(f1, f2, f3="", f4="", f5="", f6=""):
    # fields start at fixed columns 2, 5, 15, 25, 40, 50
    line = " " + f1.ljust(2) + " " + f2.ljust(9) + " " + f3.ljust(9)
    if f4 != "":
        line = line.ljust(24) + " " + str(f4).ljust(14)
    if f5 != "":
        line = line.ljust(39) + " " + f5.ljust(9)
    if f6 != "":
        line = line.ljust(49) + " " + str(f6)
    return line.rstrip()


def export_mps(model, path):
    """Write the model as a fixed-format MPS file.

    Objective: c'v + 1/2 v'Qv (QUADOBJ holds the lower triangle of Q).
    Binaries appear as BV rows in the BOUNDS section.  Inequality rows are
    exported first (including accumulated no-good cuts), equalities after.
    """
    nv = model.nvars
    names = ["V%07d" % j for j in range(nv)]
    A_ub, b_ub = model.A_ub, model.b_ub
    if model.cuts:
        A_ub = np.vstack([A_ub] + [c[0][None, :] for c in model.cuts])
        b_ub = np.concatenate([b_ub, [c[1] for c in model.cuts]])
    lrows = ["L%07d" % j for j in range(A_ub.shape[0])]
    erows = ["E%07d" % j for j in range(model.A_eq.shape[0])]
    binset = set(int(j) for j in model.delta_idx)
    lines = ["NAME          GNEMIP", "ROWS", " N  OBJ"]
    lines += [" L  " + r for r in lrows]
    lines += [" E  " + r for r in erows]
    lines.append("COLUMNS")
    for j in range(nv):
        entries = []
        if model.c[j] != 0.0:
            entries.append(("OBJ", model.c[j]))
        for r in range(A_ub.shape[0]):
            if A_ub[r, j] != 0.0:
                entries.append((lrows[r], A_ub[r, j]))
        for r in range(model.A_eq.shape[0]):
            if model.A_eq[r, j] != 0.0:
                entries.append((erows[r], model.A_eq[r, j]))
        if not entries:
            entries.append(("OBJ", 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                lines.append(_mps_line("", names[j], pair[0][0],
                                       _mps_value(pair[0][1]),
                                       pair[1][0], _mps_value(pair[1][1])))
            else:
                lines.append(_mps_line("", names[j], pair[0][0],
                                       _mps_value(pair[0][1])))
    lines.append("RHS")
    for r in range(A_ub.shape[0]):
        if b_ub[r] != 0.0:
            lines.append(_mps_line("", "RHS", lrows[r], _mps_value(b_ub[r])))
    for r in range(model.A_eq.shape[0]):
        if model.b_eq[r] != 0.0:
            lines.append(_mps_line("", "RHS", erows[r],
                                   _mps_value(model.b_eq[r])))
    lines.append("BOUNDS")
    for j in range(nv):
        if j in binset:
            lines.append(_mps_line("BV", "BND", names[j]))
            continue
        lo, up = model.lb[j], model.ub[j]
        if lo == -np.inf and up == np.inf:
            lines.append(_mps_line("FR", "BND", names[j]))
            continue
        if lo == -np.inf:
            lines.append(_mps_line("MI", "BND", names[j]))
        elif lo != 0.0:
            lines.append(_mps_line("LO", "BND", names[j], _mps_value(lo)))
        if up != np.inf:
            lines.append(_mps_line("UP", "BND", names[j], _mps_value(up)))
    if model.Q is not None:
        lines.append("QUADOBJ")
        for i in range(nv):
            for j in range(i + 1):
                if model.Q[i, j] != 0.0:
                    lines.append(_mps_line("", names[i], names[j],
                                           _mps_value(model.Q[i, j])))
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class ParsedMps:
    nvars: int
    c: np.ndarray
    Q: np.ndarray          # None if no QUADOBJ section
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray     # variable indices marked BV


def parse_mps(path):
    """Read back a file produced by export_mps."""
    section = None
    row_type = {}
    row_order_L, row_order_E = [], []
    col_names = []
    col_pos = {}
    entries = []           # (row_name, col, val)
    rhs = {}
    bounds = []            # (kind, col_name, val)
    quad = []
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            head = line.split()
            if not line.startswith(" "):
                section = head[0]
                continue
            if section == "ROWS":
                typ, name = head
                row_type[name] = typ
                if typ == "L":
                    row_order_L.append(name)
                elif typ == "E":
                    row_order_E.append(name)
            elif section == "COLUMNS":
                col = head[0]
                if col not in col_pos:
                    col_pos[col] = len(col_names)
                    col_names.append(col)
                rest = head[1:]
                for k in range(0, len(rest), 2):
                    entries.append((rest[k], col_pos[col], float(rest[k + 1])))
            elif section == "RHS":
                rest = head[1:]
                for k in range(0, len(rest), 2):
                    rhs[rest[k]] = float(rest[k + 1])
            elif section == "BOUNDS":
                kind = head[0]
                col = head[2]
                val = float(head[3]) if len(head) > 3 else None
                bounds.append((kind, col, val))
            elif section == "QUADOBJ":
                quad.append((head[0], head[1], float(head[2])))
    nv = len(col_names)
    c = np.zeros(nv)
    A_ub = np.zeros((len(row_order_L), nv))
    A_eq = np.zeros((len(row_order_E), nv))
    li = {n: i for i, n in enumerate(row_order_L)}
    ei = {n: i for i, n in enumerate(row_order_E)}
    for rname, j, v in entries:
        if rname == "OBJ":
            c[j] = v
        elif rname in li:
            A_ub[li[rname], j] = v
        else:
            A_eq[ei[rname], j] = v
    b_ub = np.array([rhs.get(n, 0.0) for n in row_order_L])
    b_eq = np.array([rhs.get(n, 0.0) for n in row_order_E])
    lb = np.zeros(nv)
    ub = np.full(nv, np.inf)
    binary = []
    for kind, col, val in bounds:
        j = col_pos[col]
        if kind == "BV":
            lb[j], ub[j] = 0.0, 1.0
            binary.append(j)
        elif kind == "FR":
            lb[j], ub[j] = -np.inf, np.inf
        elif kind == "MI":
            lb[j] = -np.inf
        elif kind == "LO":
            lb[j] = val
        elif kind == "UP":
            ub[j] = val
    Q = None
    if quad:
        Q = np.zeros((nv, nv))
        for a, bn, v in quad:
            i, j = col_pos[a], col_pos[bn]
            Q[i, j] = v
            Q[j, i] = v
    return ParsedMps(nvars=nv, c=c, Q=Q, A_ub=A_ub, b_ub=b_ub,
                     A_eq=A_eq, b_eq=b_eq, lb=lb, ub=ub,
                     binary=np.array(sorted(binary), dtype=int))
