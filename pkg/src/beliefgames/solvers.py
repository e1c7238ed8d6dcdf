"""Equilibrium search in the surrogate game: best responses, dynamics, enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .game import FiniteGame, StrategyProfile, pure_profile, uniform_profile
from .interim import interim_action_values, interim_regrets
from .measures import DominationError, ProductMeasure, check_absolute_continuity

ENUMERATION_GUARD = 10**6
METHODS = ("iterated_br", "fictitious_play", "enumerate_pure")
STARTS = ("uniform", "first", "last", "random")


class EnumerationGuardError(ValueError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    method: str = "iterated_br"
    eps: float = 1e-6
    max_iters: int = 1000
    seed: int = 0
    damping: float = 1.0
    tie_rule: str = "lowest"
    start: str = "uniform"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.tie_rule != "lowest":
            raise ValueError("only the lowest-index tie rule is supported")
        if self.start not in STARTS:
            raise ValueError(f"unknown start {self.start!r}; choose from {', '.join(STARTS)}")


@dataclass(frozen=True, eq=False)
class SolveResult:
    profile: StrategyProfile | None
    converged: bool
    iterations: int
    final_surrogate_regret: np.ndarray = field(default_factory=lambda: np.zeros(0))
    method: str = ""


def best_response_row(g: FiniteGame, i: int, t_i: int, profile_minus_i) -> np.ndarray:
    """One-hot row on the best action at type ``t_i``; ties go to the lowest index."""
    vals = interim_action_values(g, i, profile_minus_i).values[t_i]
    row = np.zeros(g.action_counts[i])
    row[int(np.argmax(vals))] = 1.0
    return row


def best_response_table(g: FiniteGame, i: int, profile) -> np.ndarray:
    """Typewise best response of player ``i`` to the others in ``profile``."""
    vals = interim_action_values(g, i, profile).values
    table = np.zeros_like(vals)
    table[np.arange(vals.shape[0]), np.argmax(vals, axis=1)] = 1.0
    return table


def surrogate_regrets(g: FiniteGame, profile, nu: ProductMeasure) -> np.ndarray:
    """Per-player gain from the best deviation in the surrogate game under ``nu``."""
    return np.array([nu.nu[i] @ r for i, r in enumerate(interim_regrets(g, profile))])


def _start_profile(g: FiniteGame, cfg: SolveConfig) -> StrategyProfile:
    if cfg.start == "uniform":
        return uniform_profile(g)
    if cfg.start == "first":
        return pure_profile(g, [[0] * m for m in g.type_counts])
    if cfg.start == "last":
        return pure_profile(g, [[g.action_counts[i] - 1] * m for i, m in enumerate(g.type_counts)])
    rng = np.random.default_rng(cfg.seed)
    return pure_profile(
        g, [rng.integers(g.action_counts[i], size=m) for i, m in enumerate(g.type_counts)]
    )


def _require_domination(g: FiniteGame, nu: ProductMeasure) -> None:
    res = check_absolute_continuity(g, nu)
    if not res.ok:
        raise DominationError(res.witness.describe(g))


def solve(g: FiniteGame, nu: ProductMeasure, cfg: SolveConfig | None = None) -> SolveResult:
    """Look for a Nash equilibrium of the surrogate game under ``nu``.

    Failure to converge is reported in the result, not raised.
    """
    cfg = cfg or SolveConfig()
    _require_domination(g, nu)
    if cfg.method == "enumerate_pure":
        return _solve_enumerate(g, nu, cfg)
    if cfg.method == "iterated_br":
        return _iterated_best_response(g, nu, cfg)
    return _fictitious_play(g, nu, cfg)


def _iterated_best_response(g, nu, cfg) -> SolveResult:
    tables = _start_profile(g, cfg).tables
    it = 0
    while True:
        reg = surrogate_regrets(g, tables, nu)
        if np.all(reg <= cfg.eps) or it == cfg.max_iters:
            break
        # synchronous: every player answers the same previous profile
        tables = [best_response_table(g, i, tables) for i in range(g.n)]
        it += 1
    return SolveResult(
        StrategyProfile.from_tables(tables), bool(np.all(reg <= cfg.eps)), it, reg, cfg.method
    )


def _fictitious_play(g, nu, cfg) -> SolveResult:
    tables = _start_profile(g, cfg).tables
    it = 0
    while True:
        reg = surrogate_regrets(g, tables, nu)
        if np.all(reg <= cfg.eps) or it == cfg.max_iters:
            break
        it += 1
        w = cfg.damping / it
        brs = [best_response_table(g, i, tables) for i in range(g.n)]
        tables = [(1.0 - w) * x + w * b for x, b in zip(tables, brs)]
    return SolveResult(
        StrategyProfile.from_tables(tables), bool(np.all(reg <= cfg.eps)), it, reg, cfg.method
    )


def _solve_enumerate(g, nu, cfg) -> SolveResult:
    table = PureRegretTable(g)
    found = table.search(cfg.eps, nu)
    if not found:
        return SolveResult(None, False, table.count, np.full(g.n, np.inf), cfg.method)
    return SolveResult(
        pure_profile(g, found[0]), True, 1, table.surrogate(found[0], nu), cfg.method
    )


# -- pure profile enumeration -------------------------------------------------


def pure_profile_count(g: FiniteGame) -> int:
    return int(np.prod([a ** t for a, t in zip(g.action_counts, g.type_counts)], dtype=object))


class PureRegretTable:
    """Interim regrets of every pure behavioral profile, computed lazily.

    Player ``i``'s interim values depend only on the opponents' choices, so
    they are cached per opponent sub-profile. Profiles are visited in
    canonical order: player 1 slowest, and within a player type 0 slowest.
    """

    def __init__(self, g: FiniteGame, guard: int = ENUMERATION_GUARD):
        self.g = g
        self.count = pure_profile_count(g)
        if self.count > guard:
            raise EnumerationGuardError(
                f"{self.count} pure profiles exceed the enumeration guard of {guard}"
            )
        self._values: list[dict] = [dict() for _ in range(g.n)]
        self._eye = [np.eye(m) for m in g.action_counts]

    def profiles(self) -> Iterator[tuple[tuple[int, ...], ...]]:
        g = self.g
        per_player = [
            list(itertools.product(range(g.action_counts[i]), repeat=g.type_counts[i]))
            for i in range(g.n)
        ]
        return itertools.product(*per_player)

    def values(self, i: int, choices) -> np.ndarray:
        key = tuple(c for j, c in enumerate(choices) if j != i)
        cache = self._values[i]
        if key not in cache:
            tables = [None if j == i else self._eye[j][list(c)] for j, c in enumerate(choices)]
            cache[key] = interim_action_values(self.g, i, tables).values
        return cache[key]

    def interim(self, choices) -> list[np.ndarray]:
        out = []
        for i, own in enumerate(choices):
            vals = self.values(i, choices)
            out.append(vals.max(axis=1) - vals[np.arange(len(own)), list(own)])
        return out

    def surrogate(self, choices, nu: ProductMeasure) -> np.ndarray:
        return np.array([nu.nu[i] @ r for i, r in enumerate(self.interim(choices))])

    def search(self, eps: float, nu: ProductMeasure | None = None, constant: bool = False) -> list[tuple]:
        """Pure equilibria in canonical order, without visiting every profile.

        With ``nu`` None the test is interim regret ``<= eps`` at every type;
        otherwise the ``nu``-weighted regret sum ``<= eps`` for every player.
        Player 1's candidates are pruned type by type (each weighted term is
        nonnegative, so each must be ``<= eps`` on its own) for every
        sub-profile of the others, then checked exactly. ``constant``
        restricts every player to strategies that ignore the own type.
        """
        g = self.g
        weights = [np.ones(m) for m in g.type_counts] if nu is None else list(nu.nu)
        others = [self._strategies(j, constant) for j in range(1, g.n)]
        found = []
        for rest in itertools.product(*others):
            vals = self.values(0, (None,) + rest)
            weighted = weights[0][:, None] * (vals.max(axis=1, keepdims=True) - vals)
            ok = weighted <= eps
            if constant:
                own_options = [(a,) * g.type_counts[0] for a in np.flatnonzero(ok.all(axis=0))]
            else:
                own_options = itertools.product(*[np.flatnonzero(row).tolist() for row in ok])
            for own in own_options:
                own = tuple(int(a) for a in own)
                choices = (own,) + rest
                if self._accepts(choices, eps, nu):
                    found.append(choices)
        found.sort()
        return found

    def _strategies(self, j: int, constant: bool):
        m, k = self.g.action_counts[j], self.g.type_counts[j]
        if constant:
            return [(a,) * k for a in range(m)]
        return list(itertools.product(range(m), repeat=k))

    def _accepts(self, choices, eps, nu) -> bool:
        regrets = self.interim(choices)
        if nu is None:
            return max(r.max() for r in regrets) <= eps
        return all(nu.nu[i] @ r <= eps for i, r in enumerate(regrets))


def enumerate_pure_equilibria(
    g: FiniteGame, nu: ProductMeasure, eps: float, constant: bool = False
) -> list[StrategyProfile]:
    """All pure profiles whose surrogate regret under ``nu`` is at most ``eps`` for every player.

    ``constant=True`` searches only type-independent profiles.
    """
    nu.check_dims(g)
    return [pure_profile(g, c) for c in PureRegretTable(g).search(eps, nu, constant)]


def enumerate_pure_bayesian(g: FiniteGame, eps: float, constant: bool = False) -> list[StrategyProfile]:
    """All pure profiles with interim regret at most ``eps`` at every type of every player."""
    return [pure_profile(g, c) for c in PureRegretTable(g).search(eps, None, constant)]
