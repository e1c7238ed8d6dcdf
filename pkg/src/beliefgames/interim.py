"""Interim, mixed, surrogate and reweighted payoffs.

All aggregates contract a tabulated payoff grid with strategy and belief
tables in a fixed order, so repeated calls give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .game import FiniteGame, GameError, StrategyProfile
from .measures import ProductMeasure, rn_density


@dataclass(frozen=True, eq=False)
class InterimTable:
    """``values[t_i, a_i]``: expected payoff of action ``a_i`` at own type ``t_i``."""

    owner: int
    values: np.ndarray

    def row_value(self, k: int, row: np.ndarray) -> float:
        return float(self.values[k] @ row)


def _tables(profile) -> list[np.ndarray]:
    if isinstance(profile, StrategyProfile):
        return profile.tables
    return [np.asarray(t, float) for t in profile]


def _check_tables(g: FiniteGame, tables: Sequence[np.ndarray | None], skip: int | None = None):
    if len(tables) != g.n:
        raise GameError(f"expected {g.n} strategy tables, got {len(tables)}")
    for j, t in enumerate(tables):
        if j == skip:
            continue
        want = (g.type_counts[j], g.action_counts[j])
        if t is None or t.shape != want:
            got = None if t is None else t.shape
            raise GameError(f"strategy of player {j + 1} has shape {got}, expected {want}")


def integrate_opponents(g: FiniteGame, u: np.ndarray, tables, i: int) -> np.ndarray:
    """Average ``u`` over the opponents' mixed actions, type by type.

    ``u`` has the full grid shape; the result drops every action axis except
    ``a_i``, giving shape ``(|A_i|, |S|, |T_1|, ..., |T_n|)``.
    """
    n = g.n
    out = u
    # going backwards keeps a_j at axis j; t_j sits n - j axes from the end
    for j in reversed(g.others(i)):
        out = _contract_action(out, tables[j], j, out.ndim - n + j)
    return out


def _contract_action(arr: np.ndarray, gamma: np.ndarray, a_axis: int, t_axis: int) -> np.ndarray:
    """Sum ``arr[..., a, ..., t, ...] * gamma[t, a]`` over ``a`` keeping ``t``."""
    moved = np.moveaxis(arr, (a_axis, t_axis), (-2, -1))
    res = (moved * gamma.T).sum(axis=-2)
    # res has t at the end; put it back where it was (one axis earlier, a is gone)
    return np.moveaxis(res, -1, t_axis - 1)


def interim_action_values(g: FiniteGame, i: int, profile) -> InterimTable:
    """``g_i(t_i, a_i, gamma_-i)`` for every own type and action.

    ``profile`` may be a full profile or a list of tables where entry ``i`` is
    ignored (it can be ``None``).
    """
    tables = _tables_loose(profile)
    _check_tables(g, tables, skip=i)
    w = integrate_opponents(g, g.payoff_grid(i), tables, i)  # (A_i, S, T...)
    eta = g.belief_joint(i)  # (S, T...)
    weighted = w * eta[None]
    # sum over s and opponents' types, keep (a_i, t_i)
    axes = tuple(d for d in range(1, weighted.ndim) if d != 2 + i)
    vals = weighted.sum(axis=axes)  # (A_i, T_i)
    return InterimTable(i, np.ascontiguousarray(vals.T))


def _tables_loose(profile) -> list:
    if isinstance(profile, StrategyProfile):
        return profile.tables
    return [None if t is None else np.asarray(t, float) for t in profile]


def interim_payoff(g: FiniteGame, i: int, profile, t_i: int | None = None):
    """``U_i(gamma; t_i)``; all types at once when ``t_i`` is None."""
    tables = _tables(profile)
    _check_tables(g, tables)
    vals = interim_action_values(g, i, tables).values
    per_type = (vals * tables[i]).sum(axis=1)
    return per_type if t_i is None else float(per_type[t_i])


def mixed_payoff(g: FiniteGame, i: int, profile) -> np.ndarray:
    """``V_i(gamma; s, t)``: payoff averaged over everyone's mixed actions, shape ``(S, T...)``."""
    tables = _tables(profile)
    _check_tables(g, tables)
    u = g.payoff_grid(i)
    return _average_all_actions(g, u, tables)


def _average_all_actions(g: FiniteGame, u: np.ndarray, tables) -> np.ndarray:
    n = g.n
    out = u
    for j in reversed(range(n)):
        t_axis = out.ndim - n + j
        out = _contract_action(out, tables[j], j, t_axis)
    return out


def interim_payoff_via_mixed(g: FiniteGame, i: int, profile) -> np.ndarray:
    """``U_i`` for all types computed the other way round: ``V_i`` first, then beliefs."""
    v = mixed_payoff(g, i, profile)
    eta = g.belief_joint(i)
    axes = tuple(d for d in range(v.ndim) if d != 1 + i)
    return (v * eta).sum(axis=axes)


def surrogate_payoff(g: FiniteGame, i: int, profile, nu: ProductMeasure) -> float:
    """``nu_i``-average of the interim payoffs of player ``i``."""
    nu.check_dims(g)
    return float(nu.nu[i] @ interim_payoff(g, i, profile))


def density_on_grid(g: FiniteGame, nu: ProductMeasure, i: int) -> np.ndarray:
    """Density of player ``i``'s beliefs on the ``(s, t_1, ..., t_n)`` grid."""
    f = rn_density(g, nu, i).table
    shape = (g.type_counts[i], g.n_states) + tuple(g.type_counts[j] for j in g.others(i))
    return np.moveaxis(f.reshape(shape), 0, 1 + i)


def reweighted_payoff_grid(g: FiniteGame, i: int, nu: ProductMeasure) -> np.ndarray:
    """``u_i * f_i`` on the full grid: player ``i``'s payoff in the common-prior game under ``nu``."""
    f = density_on_grid(g, nu, i)
    return g.payoff_grid(i) * f[(None,) * g.n]


def ex_ante_payoff(g: FiniteGame, i: int, profile, nu: ProductMeasure) -> float:
    """``nu``-expectation of the reweighted mixed payoff; equals :func:`surrogate_payoff`."""
    tables = _tables(profile)
    _check_tables(g, tables)
    v = _average_all_actions(g, reweighted_payoff_grid(g, i, nu), tables)
    return float((v * nu.joint()).sum())


def interim_regrets(g: FiniteGame, profile) -> list[np.ndarray]:
    """Per player, per type: best pure deviation value minus the value played.

    Pure deviations suffice because the interim payoff is linear in the
    player's own mixed action.
    """
    tables = _tables(profile)
    _check_tables(g, tables)
    out = []
    for i in range(g.n):
        vals = interim_action_values(g, i, tables).values
        out.append(vals.max(axis=1) - (vals * tables[i]).sum(axis=1))
    return out
