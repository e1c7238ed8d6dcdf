"""JSON game, strategy and measure files.

Floats are written with Python's shortest round-trip repr, so a save/load
cycle reproduces every number bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dsl import ExprError, PayoffSpec
from .game import (
    BeliefKernel,
    FiniteGame,
    GameError,
    State,
    StrategyProfile,
    check_profile,
    finalize_game,
)
from .measures import ProductMeasure
from .scenarios import (
    GaussianBeliefSpec,
    TruncatedNormalSpec,
    discretize_gaussian_beliefs,
    truncnorm_cell_masses,
)

GAME_KEYS = {"players", "states", "types", "actions", "payoffs", "beliefs", "nu", "name"}


class InputError(ValueError):
    """Malformed input file; the message names the offending location."""


def _parse_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(
            f"{source}: invalid JSON at line {e.lineno}, column {e.colno} (offset {e.pos}): {e.msg}"
        ) from None


def _read(path) -> tuple[str, str]:
    try:
        return Path(path).read_text(encoding="utf-8"), str(path)
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"{path}: cannot read file ({e})") from None


def _require(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(f"{where}: missing key {key!r}")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise InputError(f"{where}.{key}: expected {kind.__name__}")
    return val


def _only_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise InputError(f"{where}: unknown key {extra[0]!r}")


def _numbers(x, where) -> np.ndarray:
    try:
        arr = np.array(x, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{where}: expected numbers") from None
    if arr.dtype == object:
        raise InputError(f"{where}: ragged or non-numeric array")
    return arr


def _mean_choice(x, where):
    if x in ("zero", "identity"):
        return x
    if isinstance(x, dict) and set(x) == {"affine"} and len(x["affine"]) == 2:
        return ("affine", float(x["affine"][0]), float(x["affine"][1]))
    raise InputError(f"{where}: mean must be 'zero', 'identity' or {{'affine': [alpha, beta]}}")


def _mean_to_json(x):
    return x if isinstance(x, str) else {"affine": [x[1], x[2]]}


def _belief(entry, i, n, states, types, where) -> BeliefKernel:
    _only_keys(entry, {"table", "gaussian", "truncnorm"}, where)
    if len(entry) != 1:
        raise InputError(f"{where}: give exactly one of table, gaussian, truncnorm")
    kind, body = next(iter(entry.items()))
    if kind == "table":
        cols = len(states) * int(np.prod([len(types[j]) for j in range(n) if j != i]))
        flat = _numbers(body, f"{where}.table").ravel()
        if flat.size != len(types[i]) * cols:
            raise InputError(
                f"{where}.table: expected {len(types[i])}x{cols} = {len(types[i]) * cols} entries, got {flat.size}"
            )
        return BeliefKernel(i, flat.reshape(len(types[i]), cols))
    if n != 2:
        raise InputError(f"{where}.{kind}: parametric beliefs need exactly 2 players")
    try:
        if kind == "gaussian":
            _only_keys(body, {"variance_own", "mean_s", "mean_t"}, f"{where}.gaussian")
            spec = GaussianBeliefSpec(
                float(_require(body, "variance_own", f"{where}.gaussian")),
                _mean_choice(body.get("mean_s", "zero"), f"{where}.gaussian.mean_s"),
                _mean_choice(body.get("mean_t", "identity"), f"{where}.gaussian.mean_t"),
            )
            s_grid = [s.value for s in states]
            return discretize_gaussian_beliefs(spec, s_grid, types[1 - i], types[i], i)
        _only_keys(body, {"t_L", "t_U", "sigma"}, f"{where}.truncnorm")
        if len(states) != 1:
            raise InputError(f"{where}.truncnorm: needs a single state")
        spec = TruncatedNormalSpec(
            float(_require(body, "t_L", f"{where}.truncnorm")),
            float(_require(body, "t_U", f"{where}.truncnorm")),
            float(_require(body, "sigma", f"{where}.truncnorm")),
        )
        return truncnorm_cell_masses(spec, types[i], types[1 - i], i)
    except (ValueError, TypeError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"{where}.{kind}: {e}") from None


def measure_from_dict(d, where="nu") -> ProductMeasure:
    _only_keys(d, {"s", "t"}, where)
    nu = ProductMeasure(
        _numbers(_require(d, "s", where), f"{where}.s"),
        [_numbers(v, f"{where}.t[{k}]") for k, v in enumerate(_require(d, "t", where, list))],
    )
    problems = nu.problems()
    if problems:
        raise InputError(f"{where}: {problems[0]}")
    return nu


def game_from_dict(d, source="game") -> tuple[FiniteGame, ProductMeasure | None]:
    """Decode and validate a game document; returns the game and its embedded measure, if any."""
    _only_keys(d, GAME_KEYS, source)
    n = _require(d, "players", source, int)
    if n < 1:
        raise InputError(f"{source}.players: must be positive")
    states = []
    for k, s in enumerate(_require(d, "states", source, list)):
        _only_keys(s, {"label", "value"}, f"{source}.states[{k}]")
        states.append(
            State(str(_require(s, "label", f"{source}.states[{k}]")),
                  float(_require(s, "value", f"{source}.states[{k}]")))
        )
    lists = {}
    for key in ("types", "actions", "payoffs", "beliefs"):
        val = _require(d, key, source, list)
        if len(val) != n:
            raise InputError(f"{source}.{key}: expected {n} entries, got {len(val)}")
        lists[key] = val
    types = [_numbers(t, f"{source}.types[{i}]").ravel() for i, t in enumerate(lists["types"])]
    actions = [_numbers(a, f"{source}.actions[{i}]").ravel() for i, a in enumerate(lists["actions"])]
    shape = tuple(len(a) for a in actions) + (len(states),) + tuple(len(t) for t in types)
    payoffs = []
    for i, p in enumerate(lists["payoffs"]):
        where = f"{source}.payoffs[{i}]"
        _only_keys(p, {"expr", "table"}, where)
        if len(p) != 1:
            raise InputError(f"{where}: give exactly one of expr, table")
        if "expr" in p:
            try:
                payoffs.append(PayoffSpec.from_expr(str(p["expr"]), n))
            except ExprError as e:
                raise InputError(f"{where}.expr: {e}") from None
        else:
            flat = _numbers(p["table"], f"{where}.table").ravel()
            if flat.size != int(np.prod(shape)):
                raise InputError(f"{where}.table: expected {int(np.prod(shape))} entries, got {flat.size}")
            payoffs.append(PayoffSpec.from_table(flat.reshape(shape)))
    beliefs = [
        _belief(b, i, n, states, types, f"{source}.beliefs[{i}]") for i, b in enumerate(lists["beliefs"])
    ]
    g = FiniteGame(states, types, actions, payoffs, beliefs, name=str(d.get("name", "game")))
    try:
        g = finalize_game(g)
    except (GameError, ExprError) as e:
        raise InputError(f"{source}: {e}") from None
    nu = None
    if "nu" in d:
        nu = measure_from_dict(d["nu"], f"{source}.nu")
        try:
            nu.check_dims(g)
        except GameError as e:
            raise InputError(f"{source}.nu: {e}") from None
    return g, nu


def load_game(path) -> tuple[FiniteGame, ProductMeasure | None]:
    text, source = _read(path)
    return game_from_dict(_parse_json(text, source), source)


def game_to_dict(g: FiniteGame, nu: ProductMeasure | None = None) -> dict:
    d = {
        "name": g.name,
        "players": g.n,
        "states": [{"label": s.label, "value": s.value} for s in g.states],
        "types": [t.tolist() for t in g.types],
        "actions": [a.tolist() for a in g.actions],
        "payoffs": [
            {"table": p.table.ravel().tolist()} if p.is_table else {"expr": p.expr} for p in g.payoffs
        ],
        "beliefs": [{"table": b.table.ravel().tolist()} for b in g.beliefs],
    }
    if nu is not None:
        d["nu"] = nu.to_dict()
    return d


def save_game(g: FiniteGame, path, nu: ProductMeasure | None = None) -> None:
    Path(path).write_text(json.dumps(game_to_dict(g, nu), indent=1) + "\n", encoding="utf-8")


def profile_from_dict(d, g: FiniteGame, source="strategies") -> StrategyProfile:
    _only_keys(d, {"strategies"}, source)
    tables = _require(d, "strategies", source, list)
    if len(tables) != g.n:
        raise InputError(f"{source}: expected {g.n} strategies, got {len(tables)}")
    arrs = [_numbers(t, f"{source}.strategies[{i}]") for i, t in enumerate(tables)]
    for i, a in enumerate(arrs):
        want = (g.type_counts[i], g.action_counts[i])
        if a.shape != want:
            raise InputError(f"{source}.strategies[{i}]: shape {a.shape}, expected {want}")
    profile = StrategyProfile.from_tables(arrs)
    problems = check_profile(g, profile)
    if problems:
        raise InputError(f"{source}: {problems[0]}")
    return profile


def load_profile(path, g: FiniteGame) -> StrategyProfile:
    text, source = _read(path)
    return profile_from_dict(_parse_json(text, source), g, source)


def profile_to_dict(profile: StrategyProfile) -> dict:
    return {"strategies": [t.tolist() for t in profile.tables]}


def save_profile(profile: StrategyProfile, path) -> None:
    Path(path).write_text(json.dumps(profile_to_dict(profile)) + "\n", encoding="utf-8")


def load_measure(path) -> ProductMeasure:
    text, source = _read(path)
    return measure_from_dict(_parse_json(text, source), source)


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=1, allow_nan=False)


def loads_report(text: str) -> dict:
    d = _parse_json(text, "report")
    if not isinstance(d, dict):
        raise InputError("report: expected an object")
    return d
