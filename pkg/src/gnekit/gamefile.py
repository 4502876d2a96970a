"""JSON game descriptions.

A game file is a JSON document with sections:

  version   integer schema version (currently 1)
  layout    list of per-player block sizes
  lq        matrix-defined game: Q, c, F (lists per player), A, b, S,
            A_eq, b_eq, S_eq (shared constraint data, row-major arrays)
  nonlinear callback-defined game: costs (one expression string per
            player), ineq, eq (lists of expression strings)
  boxes     per-player [lower, upper] pairs
  params    parameter box {lower, upper}
  design    {pwa, quad, reference, norm, alpha1, alpha2}
  solver    {method, variational, M, rho, tol, seed, max_count}

Exactly one of ``lq``/``nonlinear`` must be present.  Infinities are
written as the strings "inf"/"-inf".  Expressions are built from the
variables x[i] and p[j] with +, -, *, /, ^ (power), sqrt, exp, log and
numeric literals; they are evaluated through the dual-number scalar so
the solver can differentiate them.
"""

import ast
import json

import numpy as np

from . import diff
from .model import (DesignObjective, LQGame, NonlinearGame, ParamBox,
                    PlayerLayout)

SCHEMA_VERSION = 1

_SOLVER_DEFAULTS = {
    "method": "nls",
    "variational": False,
    "M": 1e4,
    "rho": 1e3,
    "tol": 1e-8,
    "seed": 0,
    "max_count": 64,
}


class SchemaError(ValueError):
    """Game-file validation failure; message carries the JSON path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _decode_scalar(v, path):
    if isinstance(v, str):
        if v == "inf":
            return np.inf
        if v == "-inf":
            return -np.inf
        raise SchemaError(path, f"expected a number or 'inf'/'-inf', got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(v).__name__}")
    return float(v)


def _decode_array(v, path, ndim=None):
    def walk(node, sub):
        if isinstance(node, list):
            return [walk(item, f"{sub}[{k}]") for k, item in enumerate(node)]
        return _decode_scalar(node, sub)

    arr = np.asarray(walk(v, path), dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise SchemaError(path, f"expected a {ndim}-dimensional array, got shape {arr.shape}")
    return arr


def _encode(value):
    if isinstance(value, np.ndarray):
        return _encode(value.tolist())
    if isinstance(value, list):
        return [_encode(item) for item in value]
    if isinstance(value, float):
        if np.isposinf(value):
            return "inf"
        if np.isneginf(value):
            return "-inf"
        return value
    return value


# --- expression language -------------------------------------------------

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}
_UNOPS = {ast.USub: lambda a: -a, ast.UAdd: lambda a: a}
_FUNCS = {"sqrt": diff.sqrt, "exp": diff.exp, "log": diff.log}


class Expression:
    """Compiled scalar expression over x[i] and p[j].

    Callable as f(x, p); accepts float or dual-number arrays so forward
    differentiation works through it.
    """

    def __init__(self, source, path="expression"):
        self.source = source
        self.path = path
        normalized = source.replace("^", "**")
        try:
            tree = ast.parse(normalized, mode="eval")
        except SyntaxError as exc:
            raise SchemaError(path, f"invalid expression: {exc.msg}") from None
        self._root = self._validate(tree.body)

    def _validate(self, node):
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._validate(node.left)
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            self._validate(node.operand)
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise SchemaError(self.path, f"literal {node.value!r} is not numeric")
        elif isinstance(node, ast.Subscript):
            if not (isinstance(node.value, ast.Name) and node.value.id in ("x", "p")):
                raise SchemaError(self.path, "only x[...] and p[...] may be indexed")
            idx = node.slice
            if not (isinstance(idx, ast.Constant) and isinstance(idx.value, int)
                    and not isinstance(idx.value, bool) and idx.value >= 0):
                raise SchemaError(self.path, "indices must be nonnegative integer literals")
        elif isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
                raise SchemaError(self.path,
                                  f"unknown function; allowed: {sorted(_FUNCS)}")
            if len(node.args) != 1 or node.keywords:
                raise SchemaError(self.path, "functions take exactly one argument")
            self._validate(node.args[0])
        else:
            raise SchemaError(self.path, f"disallowed syntax: {type(node).__name__}")
        return node

    def _eval(self, node, x, p):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, x, p),
                                          self._eval(node.right, x, p))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](self._eval(node.operand, x, p))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Subscript):
            vec = x if node.value.id == "x" else p
            k = node.slice.value
            if vec is None or k >= len(vec):
                raise SchemaError(self.path,
                                  f"{node.value.id}[{k}] out of range")
            return vec[k]
        return _FUNCS[node.func.id](self._eval(node.args[0], x, p))

    def __call__(self, x, p=None):
        return self._eval(self._root, x, p)

    def __repr__(self):
        return f"Expression({self.source!r})"


class _ExprVector:
    """Stack of expressions evaluated as one residual vector."""

    def __init__(self, exprs):
        self.exprs = exprs

    def __call__(self, x, p=None):
        vals = [e(x, p) for e in self.exprs]
        if any(isinstance(v, diff.Dual) for v in vals):
            out = np.empty(len(vals), dtype=object)
            out[:] = vals
            return out
        return np.array(vals, dtype=float)


# --- document ------------------------------------------------------------

class GameDocument:
    """Parsed game file: the game object plus design and solver settings.

    ``data`` is the normalized JSON data model; serializing and reparsing
    it reproduces the same data model exactly.
    """

    def __init__(self, game, design, solver, data):
        self.game = game
        self.design = design
        self.solver = solver
        self.data = data


def _require(mapping, key, path, kind=None):
    if key not in mapping:
        raise SchemaError(f"{path}.{key}", "missing required field")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{path}.{key}",
                          f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_boxes(raw, layout, path):
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != layout.N:
        raise SchemaError(path, f"expected one [lower, upper] pair per player ({layout.N})")
    boxes = []
    for i, pair in enumerate(raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(f"{path}[{i}]", "expected [lower, upper]")
        lo = _decode_array(pair[0], f"{path}[{i}][0]", ndim=1)
        hi = _decode_array(pair[1], f"{path}[{i}][1]", ndim=1)
        if lo.size != layout.dims[i] or hi.size != layout.dims[i]:
            raise SchemaError(f"{path}[{i}]",
                              f"bounds must have {layout.dims[i]} entries")
        boxes.append((lo, hi))
    return tuple(boxes)


def _parse_design(raw, n, n_p, path):
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise SchemaError(path, "expected an object")
    pwa = ()
    if raw.get("pwa") is not None:
        groups = []
        for gi, group in enumerate(raw["pwa"]):
            pieces = []
            for pi, piece in enumerate(group):
                sub = f"{path}.pwa[{gi}][{pi}]"
                if not isinstance(piece, list) or len(piece) != 3:
                    raise SchemaError(sub, "expected [D, E, h]")
                D = _decode_array(piece[0], sub + "[0]", ndim=1)
                E = _decode_array(piece[1], sub + "[1]", ndim=1)
                if D.size != n or E.size != n_p:
                    raise SchemaError(sub, f"D needs {n} entries, E needs {n_p}")
                pieces.append((D, E, _decode_scalar(piece[2], sub + "[2]")))
            groups.append(pieces)
        pwa = tuple(groups)
    quad = None
    if raw.get("quad") is not None:
        q = raw["quad"]
        Q = _decode_array(_require(q, "Q", f"{path}.quad"), f"{path}.quad.Q", ndim=2)
        c = _decode_array(_require(q, "c", f"{path}.quad"), f"{path}.quad.c", ndim=1)
        if Q.shape != (n + n_p, n + n_p) or c.size != n + n_p:
            raise SchemaError(f"{path}.quad",
                              f"Q must be {(n + n_p, n + n_p)}, c length {n + n_p}")
        quad = (Q, c)
    reference = None
    if raw.get("reference") is not None:
        reference = _decode_array(raw["reference"], f"{path}.reference", ndim=1)
    nonlinear = None
    if raw.get("objective") is not None:
        nonlinear = Expression(str(raw["objective"]), f"{path}.objective")
    return DesignObjective(pwa_terms=pwa, quad=quad, nonlinear=nonlinear,
                           alpha1=float(raw.get("alpha1", 0.0)),
                           alpha2=float(raw.get("alpha2", 0.0)),
                           reference=reference)


def loads(text):
    """Parse a JSON game description into a GameDocument."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    if not isinstance(raw, dict):
        raise SchemaError("$", "top level must be an object")
    version = raw.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError("$.version", f"unsupported version {version}")
    layout = PlayerLayout(tuple(
        int(d) for d in _require(raw, "layout", "$", list)))
    n = layout.n

    params = ParamBox()
    if raw.get("params") is not None:
        pr = raw["params"]
        params = ParamBox(_decode_array(_require(pr, "lower", "$.params"),
                                        "$.params.lower", ndim=1),
                          _decode_array(_require(pr, "upper", "$.params"),
                                        "$.params.upper", ndim=1))
    n_p = params.n_p

    boxes = _parse_boxes(raw.get("boxes"), layout, "$.boxes")
    design = _parse_design(raw.get("design"), n, n_p, "$.design")

    has_lq, has_nl = raw.get("lq") is not None, raw.get("nonlinear") is not None
    if has_lq == has_nl:
        raise SchemaError("$", "exactly one of 'lq' or 'nonlinear' is required")

    if has_lq:
        lq = raw["lq"]
        Q = [_decode_array(m, f"$.lq.Q[{i}]", ndim=2)
             for i, m in enumerate(_require(lq, "Q", "$.lq", list))]
        c = [_decode_array(v, f"$.lq.c[{i}]", ndim=1)
             for i, v in enumerate(_require(lq, "c", "$.lq", list))]
        if len(Q) != layout.N or len(c) != layout.N:
            raise SchemaError("$.lq", f"need one Q and one c per player ({layout.N})")
        kw = {}
        if lq.get("F") is not None:
            kw["F"] = tuple(_decode_array(m, f"$.lq.F[{i}]", ndim=2)
                            for i, m in enumerate(lq["F"]))
        for mat, rhs, smat in (("A", "b", "S"), ("A_eq", "b_eq", "S_eq")):
            if lq.get(mat) is not None:
                kw[mat] = _decode_array(lq[mat], f"$.lq.{mat}", ndim=2)
                kw[rhs] = _decode_array(_require(lq, rhs, "$.lq"),
                                        f"$.lq.{rhs}", ndim=1)
                if kw[mat].shape[1] != n or kw[rhs].size != kw[mat].shape[0]:
                    raise SchemaError(f"$.lq.{mat}",
                                      f"needs {n} columns and one '{rhs}' entry per row")
                if lq.get(smat) is not None:
                    kw[smat] = _decode_array(lq[smat], f"$.lq.{smat}", ndim=2)
        try:
            game = LQGame(layout=layout, Q=tuple(Q), c=tuple(c), boxes=boxes,
                          params=params, design=design, **kw)
        except ValueError as exc:
            raise SchemaError("$.lq", str(exc)) from None
    else:
        nl = raw["nonlinear"]
        cost_src = _require(nl, "costs", "$.nonlinear", list)
        if len(cost_src) != layout.N:
            raise SchemaError("$.nonlinear.costs",
                              f"need one cost per player ({layout.N})")
        costs = tuple(Expression(str(s), f"$.nonlinear.costs[{i}]")
                      for i, s in enumerate(cost_src))
        ineq_src = nl.get("ineq") or []
        eq_src = nl.get("eq") or []
        ineq = [Expression(str(s), f"$.nonlinear.ineq[{i}]")
                for i, s in enumerate(ineq_src)]
        eq = [Expression(str(s), f"$.nonlinear.eq[{i}]")
              for i, s in enumerate(eq_src)]
        game = NonlinearGame(layout=layout, costs=costs,
                             ineq=_ExprVector(ineq) if ineq else None,
                             eq=_ExprVector(eq) if eq else None,
                             n_g=len(ineq), n_h=len(eq),
                             boxes=boxes, params=params)

    solver = dict(_SOLVER_DEFAULTS)
    if raw.get("solver") is not None:
        sv = raw["solver"]
        if not isinstance(sv, dict):
            raise SchemaError("$.solver", "expected an object")
        unknown = set(sv) - set(_SOLVER_DEFAULTS)
        if unknown:
            raise SchemaError("$.solver", f"unknown keys {sorted(unknown)}")
        solver.update(sv)
    if solver["method"] not in ("nls", "milp"):
        raise SchemaError("$.solver.method", f"expected nls or milp, got {solver['method']!r}")

    return GameDocument(game, design, solver, _normalize(raw))


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def _normalize(raw):
    """Canonical data model: defaults filled in, key order fixed."""
    out = {"version": SCHEMA_VERSION, "layout": [int(d) for d in raw["layout"]]}
    for key in ("lq", "nonlinear", "boxes", "params", "design"):
        if raw.get(key) is not None:
            out[key] = _encode(raw[key])
    solver = dict(_SOLVER_DEFAULTS)
    solver.update(raw.get("solver") or {})
    out["solver"] = solver
    return out


def dumps(doc_or_data):
    """Serialize a GameDocument (or its data model) back to JSON text."""
    data = doc_or_data.data if isinstance(doc_or_data, GameDocument) else doc_or_data
    return json.dumps(data, indent=2)


def dump(doc_or_data, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc_or_data))
        fh.write("\n")


def game_to_data(game, design=None, solver=None):
    """Build the JSON data model for a matrix-defined game."""
    if not isinstance(game, LQGame):
        raise TypeError("only matrix-defined games can be serialized")
    data = {"version": SCHEMA_VERSION, "layout": list(game.layout.dims)}
    lq = {"Q": _encode([Q.tolist() for Q in game.Q]),
          "c": _encode([c.tolist() for c in game.c])}
    if any(np.any(F) for F in game.F):
        lq["F"] = _encode([F.tolist() for F in game.F])
    if game.A.shape[0]:
        lq["A"] = _encode(game.A.tolist())
        lq["b"] = _encode(game.b.tolist())
        if np.any(game.S):
            lq["S"] = _encode(game.S.tolist())
    if game.A_eq.shape[0]:
        lq["A_eq"] = _encode(game.A_eq.tolist())
        lq["b_eq"] = _encode(game.b_eq.tolist())
        if np.any(game.S_eq):
            lq["S_eq"] = _encode(game.S_eq.tolist())
    data["lq"] = lq
    if game.boxes is not None and any(
            np.any(np.isfinite(lo)) or np.any(np.isfinite(hi))
            for lo, hi in game.boxes):
        data["boxes"] = [[_encode(lo.tolist()), _encode(hi.tolist())]
                         for lo, hi in game.boxes]
    if game.params.n_p:
        data["params"] = {"lower": _encode(game.params.lower.tolist()),
                          "upper": _encode(game.params.upper.tolist())}
    obj = design if design is not None else game.design
    if obj is not None:
        d = {}
        if obj.pwa_terms:
            d["pwa"] = [[[_encode(D.tolist()), _encode(E.tolist()), h]
                         for D, E, h in group] for group in obj.pwa_terms]
        if obj.quad is not None:
            d["quad"] = {"Q": _encode(obj.quad[0].tolist()),
                         "c": _encode(obj.quad[1].tolist())}
        if obj.reference is not None:
            d["reference"] = _encode(obj.reference.tolist())
        if obj.alpha1:
            d["alpha1"] = obj.alpha1
        if obj.alpha2:
            d["alpha2"] = obj.alpha2
        data["design"] = d
    sv = dict(_SOLVER_DEFAULTS)
    sv.update(solver or {})
    data["solver"] = sv
    return data
