"""Command-line interface.

Subcommands: solve, enumerate, design, verify, simulate, bench.  Games and
MPC scenarios are JSON files (see gamefile and the README); results are
written as JSON, closed-loop traces and benchmarks as CSV.  Exit codes:
0 on success, 2 when no equilibrium exists or the model is infeasible,
1 on errors (bad files, bad flags).
"""

import argparse
import json
import sys
import time

import numpy as np

from . import control, gamefile, milp, nls
from .model import LQGame


def _json_ready(value):
    if isinstance(value, np.ndarray):
        return [_json_ready(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if np.isposinf(v):
            return "inf"
        if np.isneginf(v):
            return "-inf"
        return v
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    return value


def _write_result(result, out):
    text = json.dumps(_json_ready(result), indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _certificate_dict(report):
    return {
        "tol": report.tol,
        "passed": report.passed,
        "max_improvement": report.max_improvement,
        "players": [{"player": c.player, "improvement": c.improvement,
                     "passed": c.passed, "note": c.note}
                    for c in report.players],
    }


def _active_set_lq(game, x, p):
    if game.A.shape[0] == 0:
        return []
    rhs = game.b + (game.S @ p if p is not None and p.size else 0.0)
    slack = rhs - game.A @ x
    return [int(j + 1) for j in np.flatnonzero(slack <= 1e-6)]


def _solver_echo(doc, args):
    echo = dict(doc.solver)
    for key, flag in (("method", "method"), ("variational", "variational"),
                      ("M", "bigM"), ("rho", "rho"), ("tol", "tol"),
                      ("seed", "seed")):
        v = getattr(args, flag, None)
        if v is not None:
            echo[key] = v
    return echo


def _load_doc(path):
    try:
        return gamefile.load(path)
    except FileNotFoundError:
        raise SystemExit2(f"error: no such file: {path}")
    except gamefile.SchemaError as exc:
        raise SystemExit2(f"schema error in {path}: {exc}")


class SystemExit2(Exception):
    """Error that should terminate with exit code 1 and a diagnostic."""


def _initial_p(game):
    pb = game.params
    if pb.n_p == 0:
        return None
    if np.allclose(pb.lower, pb.upper):
        return pb.lower.copy()
    lo = np.where(np.isfinite(pb.lower), pb.lower, 0.0)
    hi = np.where(np.isfinite(pb.upper), pb.upper, lo)
    return 0.5 * (lo + hi)


def _nls_cfg(echo):
    return nls.LMConfig(residual_tol=float(echo.get("tol", 1e-8)),
                        rho=float(echo.get("rho", 1e3)))


def cmd_solve(args):
    doc = _load_doc(args.game)
    echo = _solver_echo(doc, args)
    t0 = time.perf_counter()
    if echo["method"] == "milp":
        if not isinstance(doc.game, LQGame):
            raise SystemExit2("error: the milp method needs a matrix-defined game")
        model = milp.build_mip(doc.game, variational=bool(echo["variational"]),
                               M=float(echo["M"]))
        res = milp.solve_mip(model)
        if args.mps:
            milp.export_mps(model, args.mps)
        elapsed = time.perf_counter() - t0
        ok = res.status == "Optimal"
        result = {
            "status": res.status,
            "x": res.x, "p": res.p,
            "duals": {"lam": res.lam, "mu": res.mu},
            "active_set": sorted(res.signature.as_set()) if ok else None,
            "residual_norm": res.kkt_residual,
            "solver": echo,
        }
        if ok:
            report = nls.best_response_certificate(doc.game, res.x, res.p,
                                                   tol=float(echo["tol"]))
            result["certificate"] = _certificate_dict(report)
        result["timings"] = {"seconds": elapsed}
        _write_result(result, args.out)
        return 0 if ok else 2
    res = nls.solve_gne_nls(doc.game, p0=_initial_p(doc.game),
                            cfg=_nls_cfg(echo),
                            variational=bool(echo["variational"]))
    elapsed = time.perf_counter() - t0
    ok = res.status == "Converged"
    result = {
        "status": res.status,
        "x": res.x, "p": res.p,
        "duals": {"z": res.z.data if res.z is not None else None},
        "active_set": (_active_set_lq(doc.game, res.x, res.p)
                       if isinstance(doc.game, LQGame) else None),
        "residual_norm": res.residual_norm,
        "iterations": res.iterations,
        "solver": echo,
    }
    if ok:
        report = nls.best_response_certificate(doc.game, res.x, res.p,
                                               tol=max(float(echo["tol"]), 1e-6))
        result["certificate"] = _certificate_dict(report)
    result["timings"] = {"seconds": elapsed}
    _write_result(result, args.out)
    return 0 if ok else 2


def cmd_enumerate(args):
    doc = _load_doc(args.game)
    echo = _solver_echo(doc, args)
    if not isinstance(doc.game, LQGame):
        raise SystemExit2("error: enumeration needs a matrix-defined game")
    t0 = time.perf_counter()
    max_count = args.max_count if args.max_count is not None \
        else int(echo.get("max_count", 64))
    results = milp.enumerate_equilibria(
        doc.game, variational=bool(echo["variational"]),
        M=float(echo["M"]), max_count=max_count)
    elapsed = time.perf_counter() - t0
    if args.mps:
        milp.export_mps(milp.build_mip(doc.game,
                                       variational=bool(echo["variational"]),
                                       M=float(echo["M"])), args.mps)
    out = {
        "count": len(results),
        "results": [{
            "status": r.status,
            "x": r.x, "p": r.p,
            "duals": {"lam": r.lam, "mu": r.mu},
            "active_set": sorted(r.signature.as_set()),
            "residual_norm": r.kkt_residual,
        } for r in results],
        "solver": echo,
        "timings": {"seconds": elapsed},
    }
    _write_result(out, args.out)
    return 0 if results else 2


def cmd_design(args):
    doc = _load_doc(args.game)
    echo = _solver_echo(doc, args)
    design = doc.design if doc.design is not None else (
        doc.game.design if isinstance(doc.game, LQGame) else None)
    if design is None:
        raise SystemExit2("error: the game file has no design section")
    cfg = _nls_cfg(echo)
    t0 = time.perf_counter()
    if echo["method"] == "milp":
        if not isinstance(doc.game, LQGame):
            raise SystemExit2("error: the milp method needs a matrix-defined game")
        model = milp.build_mip(doc.game, design=design,
                               variational=bool(echo["variational"]),
                               M=float(echo["M"]))
        if args.mps:
            milp.export_mps(model, args.mps)
        res = milp.solve_mip(model)
        elapsed = time.perf_counter() - t0
        ok = res.status == "Optimal"
        result = {
            "status": res.status,
            "x": res.x, "p": res.p,
            "objective": res.objective,
            "active_set": sorted(res.signature.as_set()) if ok else None,
            "residual_norm": res.kkt_residual,
            "solver": echo,
            "timings": {"seconds": elapsed},
        }
        _write_result(result, args.out)
        return 0 if ok else 2
    if design.alpha1 > 0:
        res = nls.solve_sparse(doc.game, design, cfg=cfg,
                               variational=bool(echo["variational"]))
    else:
        res = nls.solve_design(doc.game, design, cfg=cfg,
                               variational=bool(echo["variational"]))
    if args.refine:
        res = nls.solve_gne_nls(doc.game, p0=res.p, z0=res.z, cfg=cfg,
                                variational=bool(echo["variational"]))
    elapsed = time.perf_counter() - t0
    ok = res.status in ("Converged", "SmallStep")
    result = {
        "status": res.status,
        "x": res.x, "p": res.p,
        "objective": res.objective,
        "residual_norm": res.residual_norm,
        "pre_refine_residual": res.pre_refine_residual,
        "iterations": res.iterations,
        "solver": echo,
        "timings": {"seconds": elapsed},
    }
    _write_result(result, args.out)
    return 0 if ok else 2


def cmd_verify(args):
    doc = _load_doc(args.game)
    try:
        with open(args.candidate, "r", encoding="utf-8") as fh:
            cand = json.load(fh)
    except FileNotFoundError:
        raise SystemExit2(f"error: no such file: {args.candidate}")
    except json.JSONDecodeError as exc:
        raise SystemExit2(f"error: candidate file is not valid JSON: {exc.msg}")
    if not isinstance(cand, dict) or "x" not in cand:
        raise SystemExit2("error: candidate file needs an 'x' array")
    x = np.asarray(cand["x"], dtype=float)
    p = np.asarray(cand["p"], dtype=float) if cand.get("p") is not None else None
    if x.size != doc.game.layout.n:
        raise SystemExit2(f"error: candidate has {x.size} entries, "
                          f"the game has {doc.game.layout.n} variables")
    report = nls.best_response_certificate(doc.game, x, p, tol=args.tol)
    result = {"passed": report.passed,
              "certificate": _certificate_dict(report)}
    if isinstance(doc.game, LQGame):
        result["active_set"] = _active_set_lq(doc.game, x, p)
    _write_result(result, args.out)
    for c in report.players:
        verdict = "pass" if c.passed else "FAIL"
        print(f"player {c.player}: improvement {c.improvement:.3e} [{verdict}]",
              file=sys.stderr)
    return 0 if report.passed else 2


def _load_scenario(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise SystemExit2(f"error: no such file: {path}")
    except json.JSONDecodeError as exc:
        raise SystemExit2(f"error: scenario file is not valid JSON: {exc.msg}")

    def arr(node, path_, ndim=None):
        try:
            return gamefile._decode_array(node, path_, ndim=ndim)
        except gamefile.SchemaError as exc:
            raise SystemExit2(f"schema error: {exc}")

    try:
        sy = raw["system"]
        system = control.LinearSystem(
            arr(sy["A"], "$.system.A", 2), arr(sy["B"], "$.system.B", 2),
            arr(sy["C"], "$.system.C", 2), tuple(sy["input_dims"]))
        mp = raw["mpc"]
        kw = {}
        for key in ("du_min", "du_max", "u_min", "u_max", "y_min", "y_max"):
            if mp.get(key) is not None:
                kw[key] = arr(mp[key], f"$.mpc.{key}", 1)
        spec = control.MPCGameSpec(
            system=system,
            Q_y=tuple(arr(m, "$.mpc.Q_y", 2) for m in mp["Q_y"]),
            Q_du=tuple(arr(m, "$.mpc.Q_du", 2) for m in mp["Q_du"]),
            q_eps=tuple(float(v) for v in mp["q_eps"]),
            T=int(mp["T"]), T_c=int(mp["T_c"]) if mp.get("T_c") else None,
            **kw)
        x0 = arr(raw.get("x0", np.zeros(system.n_x).tolist()), "$.x0", 1)
        r = arr(raw.get("r", np.zeros(system.n_y).tolist()), "$.r", 1)
        u_prev = (arr(raw["u_prev"], "$.u_prev", 1)
                  if raw.get("u_prev") is not None else None)
        steps = int(raw.get("steps", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemExit2(f"schema error in {path}: {exc}")
    return spec, x0, r, u_prev, steps


def cmd_simulate(args):
    spec, x0, r, u_prev, steps = _load_scenario(args.scenario)
    if args.steps is not None:
        steps = args.steps
    mode = {"nash": "nash", "variational": "nash_variational",
            "centralized": "centralized"}[args.mode]
    t0 = time.perf_counter()
    trace = control.simulate_mpc(spec, x0, steps, mode=mode, r=r,
                                 u_prev=u_prev,
                                 M=args.bigM if args.bigM else milp.DEFAULT_BIG_M)
    elapsed = time.perf_counter() - t0
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write(trace.to_csv())
    summary = {
        "mode": mode,
        "steps": steps,
        "social_cost": trace.social_cost,
        "agent_totals": np.sum(trace.agent_costs, axis=0),
        "max_slack": float(np.max(trace.eps, initial=0.0)),
        "statuses": sorted(set(trace.statuses)),
        "timings": {"seconds": elapsed, "per_step": elapsed / max(steps, 1)},
    }
    _write_result(summary, args.out)
    bad = [s for s in trace.statuses if s not in ("Optimal", "Converged")]
    return 2 if bad else 0


def _bench_instance(rng, N):
    """Random game in the scaling family: 2 variables per player,
    2N shared inequality rows, unit right-hand side."""
    n = 2 * N
    Q, c = [], []
    for _ in range(N):
        G = rng.standard_normal((n, n))
        Q.append(G @ G.T / n + np.eye(n))
        c.append(rng.standard_normal(n))
    A = rng.standard_normal((2 * N, n))
    from .model import PlayerLayout
    return LQGame(layout=PlayerLayout((2,) * N), Q=tuple(Q), c=tuple(c),
                  A=A, b=np.ones(2 * N))


def cmd_bench(args):
    if args.suite != "lq-scaling":
        raise SystemExit2(f"error: unknown suite {args.suite!r}")
    try:
        agents = [int(v) for v in args.agents.split(",")]
    except ValueError:
        raise SystemExit2("error: --agents expects a comma-separated integer list")
    rows = ["N,method,seconds,status"]
    for N in agents:
        rng = np.random.default_rng((args.seed, N))
        game = _bench_instance(rng, N)
        for method in ("nls", "milp"):
            t0 = time.perf_counter()
            if method == "nls":
                status = nls.solve_gne_nls(game).status
            else:
                status = milp.solve_mip(milp.build_mip(game)).status
            rows.append(f"{N},{method},{time.perf_counter() - t0:.6f},{status}")
    text = "\n".join(rows) + "\n"
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return 0


def _add_common(sp, mps=False):
    sp.add_argument("--method", choices=("nls", "milp"))
    sp.add_argument("--variational", action="store_true", default=None)
    sp.add_argument("--bigM", type=float, default=None)
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None, help="write the JSON result here")
    if mps:
        sp.add_argument("--mps", default=None,
                        help="also export the mixed-integer model as MPS")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="gnekit",
        description="Compute, enumerate, design, and verify generalized "
                    "Nash equilibria; run game-theoretic MPC simulations.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="compute one equilibrium")
    sp.add_argument("game")
    _add_common(sp, mps=True)
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("enumerate", help="enumerate active-set signatures")
    sp.add_argument("game")
    sp.add_argument("--max-count", type=int, default=None)
    _add_common(sp, mps=True)
    sp.set_defaults(fn=cmd_enumerate)

    sp = sub.add_parser("design", help="tune parameters against a design objective")
    sp.add_argument("game")
    sp.add_argument("--refine", action="store_true",
                    help="hot-start a pure equilibrium solve at the tuned parameter")
    _add_common(sp, mps=True)
    sp.set_defaults(fn=cmd_design)

    sp = sub.add_parser("verify", help="check a candidate point player by player")
    sp.add_argument("game")
    sp.add_argument("candidate", help="JSON file with an 'x' array (optional 'p')")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("simulate", help="closed-loop game-theoretic MPC")
    sp.add_argument("scenario")
    sp.add_argument("--mode", choices=("nash", "variational", "centralized"),
                    default="nash")
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--bigM", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--out-csv", default=None)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("bench", help="timing suite over random instances")
    sp.add_argument("--suite", default="lq-scaling")
    sp.add_argument("--agents", default="2,4,8")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-csv", default=None)
    sp.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit2 as exc:
        print(exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
