"""Finite incomplete-information games with per-player belief kernels.

Index conventions (fixed, so tables are reproducible bit for bit):

* players are 0-based in the Python API and 1-based in messages and DSL
  variables (``a1``, ``t1``, ...);
* a full payoff grid has shape ``(|A_1|, ..., |A_n|, |S|, |T_1|, ..., |T_n|)``
  and flattens in C order, so ``a_1`` is slowest and ``t_n`` fastest;
* a belief kernel of player ``i`` has ``|T_i|`` rows and columns indexed by
  ``(s, t_1, ..., t_{i-1}, t_{i+1}, ..., t_n)`` with ``s`` slowest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .dsl import ExprError, PayoffSpec, tabulate, variables

ROW_TOL = 1e-12


class GameError(ValueError):
    """A game, kernel or strategy violates a structural invariant."""


def _frozen(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class State:
    label: str
    value: float


@dataclass(frozen=True, eq=False)
class BeliefKernel:
    """Player ``owner``'s belief over ``(s, t_-i)`` for each own type (one row each)."""

    owner: int
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", _frozen(np.atleast_2d(self.table)))

    def normalized(self) -> "BeliefKernel":
        """Divide each row by its sum, leaving rows already stochastic up to rounding untouched.

        Skipping those rows keeps a save/load cycle bit-faithful.
        """
        sums = self.table.sum(axis=1, keepdims=True)
        scale = np.where(np.abs(sums - 1.0) <= 4 * np.finfo(float).eps, 1.0, sums)
        return BeliefKernel(self.owner, self.table / scale)


@dataclass(frozen=True, eq=False)
class BehavioralStrategy:
    """Row ``k`` is the mixed action played at the owner's ``k``-th type."""

    owner: int
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", _frozen(np.atleast_2d(self.table)))

    def __eq__(self, other):
        if not isinstance(other, BehavioralStrategy):
            return NotImplemented
        return (
            self.owner == other.owner
            and self.table.shape == other.table.shape
            and bool(np.array_equal(self.table, other.table))
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    strategies: tuple[BehavioralStrategy, ...]

    def __post_init__(self):
        strategies = tuple(self.strategies)
        object.__setattr__(self, "strategies", strategies)
        owners = [s.owner for s in strategies]
        if owners != list(range(len(strategies))):
            raise GameError(f"strategy owners must be 0..n-1 in order, got {owners}")

    @classmethod
    def from_tables(cls, tables: Iterable) -> "StrategyProfile":
        return cls(tuple(BehavioralStrategy(i, t) for i, t in enumerate(tables)))

    @property
    def tables(self) -> list[np.ndarray]:
        return [s.table for s in self.strategies]

    def __len__(self):
        return len(self.strategies)

    def __getitem__(self, i) -> BehavioralStrategy:
        return self.strategies[i]

    def __eq__(self, other):
        if not isinstance(other, StrategyProfile):
            return NotImplemented
        return self.strategies == other.strategies

    __hash__ = None

    def replace(self, i: int, table) -> "StrategyProfile":
        tables = self.tables
        tables[i] = table
        return StrategyProfile.from_tables(tables)


@dataclass(frozen=True, eq=False)
class FiniteGame:
    states: tuple[State, ...]
    types: tuple[np.ndarray, ...]
    actions: tuple[np.ndarray, ...]
    payoffs: tuple[PayoffSpec, ...]
    beliefs: tuple[BeliefKernel, ...]
    name: str = field(default="game", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "types", tuple(_frozen(np.ravel(t)) for t in self.types))
        object.__setattr__(self, "actions", tuple(_frozen(np.ravel(a)) for a in self.actions))
        object.__setattr__(self, "payoffs", tuple(self.payoffs))
        object.__setattr__(self, "beliefs", tuple(self.beliefs))

    @property
    def n(self) -> int:
        return len(self.types)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @cached_property
    def state_values(self) -> np.ndarray:
        return _frozen([s.value for s in self.states])

    @property
    def type_counts(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.types)

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.actions)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.action_counts + (self.n_states,) + self.type_counts

    @property
    def state_type_shape(self) -> tuple[int, ...]:
        return (self.n_states,) + self.type_counts

    def others(self, i: int) -> list[int]:
        return [j for j in range(self.n) if j != i]

    def belief_columns(self, i: int) -> int:
        return self.n_states * int(np.prod([self.type_counts[j] for j in self.others(i)], dtype=int))

    @cached_property
    def _payoff_grids(self) -> tuple[np.ndarray, ...]:
        return tuple(tabulate(spec, self, i) for i, spec in enumerate(self.payoffs))

    def payoff_grid(self, i: int) -> np.ndarray:
        """Tabulated ``u_i`` of shape :attr:`grid_shape`."""
        return self._payoff_grids[i]

    def belief_tensor(self, i: int) -> np.ndarray:
        """Kernel of player ``i`` reshaped to ``(|T_i|, |S|, |T_j| for j != i)``."""
        shape = (self.type_counts[i], self.n_states) + tuple(
            self.type_counts[j] for j in self.others(i)
        )
        return self.beliefs[i].table.reshape(shape)

    def belief_joint(self, i: int) -> np.ndarray:
        """Kernel of player ``i`` laid out on the ``(s, t_1, ..., t_n)`` grid.

        Entry ``[s, t]`` is ``eta_i(t_i, {(s, t_-i)})``.
        """
        return np.moveaxis(self.belief_tensor(i), 0, 1 + i)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "ok" if self.ok else "\n".join(self.violations)


def _nonfinite(name: str, values) -> list[str]:
    arr = np.asarray(values, dtype=float).ravel()
    bad = np.flatnonzero(~np.isfinite(arr))
    return [f"{name} has non-finite entry at flat index {int(k)}" for k in bad[:5]]


def validate_game(g: FiniteGame) -> ValidationReport:
    """List every violated structural invariant of ``g`` (empty when well-formed)."""
    out: list[str] = []
    n = g.n
    if n < 1:
        return ValidationReport(("game has no players",))
    if not g.states:
        out.append("state list is empty")
    out += _nonfinite("state values", [s.value for s in g.states])
    for label, seq in (("actions", g.actions), ("payoffs", g.payoffs), ("beliefs", g.beliefs)):
        if len(seq) != n:
            out.append(f"{label} given for {len(seq)} players, expected {n}")
    for i in range(n):
        if len(g.types[i]) == 0:
            out.append(f"type list of player {i + 1} is empty")
        out += _nonfinite(f"types of player {i + 1}", g.types[i])
    for i in range(min(n, len(g.actions))):
        if len(g.actions[i]) == 0:
            out.append(f"action list of player {i + 1} is empty")
        out += _nonfinite(f"actions of player {i + 1}", g.actions[i])
    if out:
        return ValidationReport(tuple(out))

    size = int(np.prod(g.grid_shape))
    for i, spec in enumerate(g.payoffs):
        if spec.is_table:
            if spec.table.size != size:
                out.append(
                    f"payoff table of player {i + 1} has {spec.table.size} entries, expected {size}"
                )
            else:
                out += _nonfinite(f"payoff table of player {i + 1}", spec.table)
            continue
        names = variables(spec.ast)
        bad = sorted(v for v in names if v != "s" and int(v[1:]) > n)
        if bad:
            out.append(f"payoff of player {i + 1} references undeclared {', '.join(bad)}")
            continue
        try:
            tabulate(spec, g, i)
        except ExprError as err:
            out.append(str(err))

    for i, kernel in enumerate(g.beliefs):
        if kernel.owner != i:
            out.append(f"belief kernel at position {i + 1} is owned by player {kernel.owner + 1}")
        shape = (g.type_counts[i], g.belief_columns(i))
        table = kernel.table
        if table.shape != shape:
            out.append(f"belief kernel of player {i + 1} has shape {table.shape}, expected {shape}")
            continue
        if not np.all(np.isfinite(table)):
            out += _nonfinite(f"belief kernel of player {i + 1}", table)
            continue
        for k, row in enumerate(table):
            if np.any(row < 0) or np.any(row > 1):
                out.append(f"kernel entry outside [0, 1], player {i + 1}, type {k}")
            if abs(row.sum() - 1.0) > ROW_TOL:
                out.append(f"kernel row not stochastic, player {i + 1}, type {k}")
    return ValidationReport(tuple(out))


def finalize_game(g: FiniteGame) -> FiniteGame:
    """Validate ``g`` and renormalize its kernel rows once.

    Rows within ``ROW_TOL`` of summing to one are divided by their sum so
    downstream arithmetic sees stochastic rows up to rounding; anything else
    raises.
    """
    report = validate_game(g)
    if not report.ok:
        raise GameError(str(report))
    return FiniteGame(
        g.states, g.types, g.actions, g.payoffs, tuple(k.normalized() for k in g.beliefs), g.name
    )


def payoff_bound(g: FiniteGame, i: int) -> np.ndarray:
    """Per-type bound ``max |u_i|`` over actions, states and opponents' types."""
    u = np.abs(g.payoff_grid(i))
    axis = g.n + 1 + i
    other = tuple(d for d in range(u.ndim) if d != axis)
    return u.max(axis=other)


# -- strategies ---------------------------------------------------------------


def check_strategy(g: FiniteGame, strategy: BehavioralStrategy) -> list[str]:
    i = strategy.owner
    out = []
    if not 0 <= i < g.n:
        return [f"strategy owner {i + 1} is not a player"]
    shape = (g.type_counts[i], g.action_counts[i])
    if strategy.table.shape != shape:
        return [f"strategy of player {i + 1} has shape {strategy.table.shape}, expected {shape}"]
    table = strategy.table
    for k, row in enumerate(table):
        if not np.all(np.isfinite(row)) or np.any(row < 0) or np.any(row > 1):
            out.append(f"strategy entry outside [0, 1], player {i + 1}, type {k}")
        elif abs(row.sum() - 1.0) > ROW_TOL:
            out.append(f"strategy row not stochastic, player {i + 1}, type {k}")
    return out


def check_profile(g: FiniteGame, profile: StrategyProfile) -> list[str]:
    if len(profile) != g.n:
        return [f"profile has {len(profile)} strategies, game has {g.n} players"]
    return [msg for s in profile.strategies for msg in check_strategy(g, s)]


def require_profile(g: FiniteGame, profile: StrategyProfile) -> None:
    problems = check_profile(g, profile)
    if problems:
        raise GameError("; ".join(problems))


def pure_profile(g: FiniteGame, choices: Sequence[Sequence[int]]) -> StrategyProfile:
    """Profile playing action ``choices[i][k]`` at type ``k`` of player ``i``."""
    tables = []
    for i, row_choices in enumerate(choices):
        table = np.zeros((g.type_counts[i], g.action_counts[i]))
        table[np.arange(g.type_counts[i]), np.asarray(row_choices, dtype=int)] = 1.0
        tables.append(table)
    return StrategyProfile.from_tables(tables)


def uniform_profile(g: FiniteGame) -> StrategyProfile:
    return StrategyProfile.from_tables(
        np.full((g.type_counts[i], g.action_counts[i]), 1.0 / g.action_counts[i]) for i in range(g.n)
    )


def constant_profile(g: FiniteGame, rows: Sequence[Sequence[float]]) -> StrategyProfile:
    """Every type of player ``i`` plays the mixed action ``rows[i]``."""
    return StrategyProfile.from_tables(
        np.tile(np.asarray(rows[i], float), (g.type_counts[i], 1)) for i in range(g.n)
    )
