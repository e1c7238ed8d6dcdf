"""Built-in games: Battle of the Sexes, public good, Cournot, shared signal, random games."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .dsl import PayoffSpec, evaluate_on_grid, parse_expr
from .game import (
    BeliefKernel,
    FiniteGame,
    GameError,
    State,
    StrategyProfile,
    constant_profile,
    pure_profile,
)
from .measures import kernels_from_prior

_SQRT2 = math.sqrt(2.0)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, symmetric by construction: ``cdf(-x) == 1 - cdf(x)``."""
    if x < 0:
        return 0.5 * math.erfc(-x / _SQRT2)
    return 1.0 - 0.5 * math.erfc(x / _SQRT2)


_cdf_ufunc = np.frompyfunc(std_normal_cdf, 1, 1)


def normal_cdf(x) -> np.ndarray:
    """Elementwise :func:`std_normal_cdf`."""
    return np.asarray(_cdf_ufunc(np.asarray(x, dtype=float)), dtype=float)


# -- belief discretization ----------------------------------------------------

MeanChoice = Union[str, tuple]


def mean_map(choice: MeanChoice):
    """``"zero"``, ``"identity"`` or ``("affine", alpha, beta)`` as a function of own type."""
    if choice == "zero":
        return lambda t: 0.0 * t
    if choice == "identity":
        return lambda t: t
    if isinstance(choice, (tuple, list)) and len(choice) == 3 and choice[0] == "affine":
        alpha, beta = float(choice[1]), float(choice[2])
        return lambda t: alpha * t + beta
    raise ValueError(f"unknown mean choice {choice!r}")


@dataclass(frozen=True)
class GaussianBeliefSpec:
    """Belief over ``(s, t_other)``: normal with mean ``(mean_s(t), mean_t(t))``, covariance ``[[1, 1], [1, v]]``."""

    variance_own: float
    mean_s: MeanChoice = "zero"
    mean_t: MeanChoice = "identity"

    def __post_init__(self):
        if not self.variance_own > 1:
            raise ValueError("variance_own must exceed 1")
        mean_map(self.mean_s), mean_map(self.mean_t)


@dataclass(frozen=True)
class TruncatedNormalSpec:
    """Belief over the opponent's type: normal centred at the own type, truncated to ``[t_L, t_U]``."""

    t_L: float = 0.0
    t_U: float = 2.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.t_L < self.t_U:
            raise ValueError("need t_L < t_U")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def cdf(self, x, center):
        return normal_cdf((np.asarray(x, float) - center) / self.sigma)


def cell_widths(grid: np.ndarray) -> np.ndarray:
    """Midpoint-rule cell widths; end cells take the adjacent spacing."""
    grid = np.asarray(grid, float)
    if grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise GameError("grids must be strictly increasing with at least 3 points")
    mid = (grid[2:] - grid[:-2]) / 2
    return np.concatenate([[grid[1] - grid[0]], mid, [grid[-1] - grid[-2]]])


def discretize_gaussian_beliefs(
    spec: GaussianBeliefSpec, s_grid, t_grid, own_t_grid, owner: int = 0
) -> BeliefKernel:
    """Row per own type: density at each ``(s, t_other)`` cell centre times cell area, normalized."""
    s_grid, t_grid, own = (np.asarray(x, float) for x in (s_grid, t_grid, own_t_grid))
    area = np.multiply.outer(cell_widths(s_grid), cell_widths(t_grid))
    if own.size < 1 or not np.all(np.isfinite(own)):
        raise GameError("own type grid must be nonempty and finite")
    v = spec.variance_own
    det = v - 1.0
    ms = mean_map(spec.mean_s)(own)[:, None, None]
    mt = mean_map(spec.mean_t)(own)[:, None, None]
    ds = s_grid[None, :, None] - ms
    dt = t_grid[None, None, :] - mt
    quad = (v * ds * ds - 2.0 * ds * dt + dt * dt) / det
    mass = np.exp(-0.5 * quad) * area[None]
    rows = mass.reshape(own.size, -1)
    total = rows.sum(axis=1, keepdims=True)
    if np.any(total <= 0):
        raise GameError("Gaussian belief underflows on the grid; widen the grid")
    return BeliefKernel(owner, rows / total)


def truncnorm_cell_masses(spec: TruncatedNormalSpec, own_grid, opp_grid, owner: int = 0) -> BeliefKernel:
    """Exact truncated-normal mass of the cell around each opponent grid point."""
    own = np.asarray(own_grid, float)
    opp = np.asarray(opp_grid, float)
    if opp[0] < spec.t_L or opp[-1] > spec.t_U:
        raise GameError("opponent type grid leaves [t_L, t_U]")
    edges = np.concatenate([[spec.t_L], (opp[1:] + opp[:-1]) / 2, [spec.t_U]])
    cdf = spec.cdf(edges[None, :], own[:, None])
    mass = np.diff(cdf, axis=1)
    return BeliefKernel(owner, mass / mass.sum(axis=1, keepdims=True))


def _states(values, labels=None) -> list[State]:
    values = np.asarray(values, float).ravel()
    labels = labels or [f"s{k}" for k in range(values.size)]
    return [State(str(lab), float(v)) for lab, v in zip(labels, values)]


# -- Battle of the Sexes ------------------------------------------------------

# nodes of the 9-point Gauss rule for the standard normal weight
BOS_GRID = hermegauss(9)[0]


def build_battle_of_sexes(
    c: float = 1.0,
    f_expr: str = "exp(s)",
    g_expr: str = "exp(s)",
    s_grid=BOS_GRID,
    t_grids=(BOS_GRID, BOS_GRID),
    sigma_sq=(2.0, 3.0),
    mean_s: MeanChoice = "zero",
    mean_t: MeanChoice = "identity",
) -> FiniteGame:
    """Coordination game ``(L, L) -> (f, g)``, ``(R, R) -> (c f, c g)``, otherwise 0.

    Action values are ``1`` for ``L`` (index 0) and ``0`` for ``R`` (index 1),
    so a mixed row ``(p, 1 - p)`` plays ``L`` with probability ``p``.
    Beliefs are discretized Gaussians with own-type variances ``sigma_sq``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    states = _states(s_grid)
    probe = FiniteGame(states, [[0.0]], [[0.0]], [], [])
    for name, src in (("f", f_expr), ("g", g_expr)):
        vals = evaluate_on_grid(parse_expr(src, 1), probe)
        if np.any(vals <= 0):
            raise GameError(f"{name}(s) must be strictly positive on the state grid")
    coord = f"(a1*a2 + {c!r}*(1 - a1)*(1 - a2))"
    payoffs = [
        PayoffSpec.from_expr(f"({f_expr}) * {coord}", 2),
        PayoffSpec.from_expr(f"({g_expr}) * {coord}", 2),
    ]
    beliefs = [
        discretize_gaussian_beliefs(
            GaussianBeliefSpec(sigma_sq[i], mean_s, mean_t), s_grid, t_grids[1 - i], t_grids[i], i
        )
        for i in range(2)
    ]
    return FiniteGame(states, t_grids, [[1.0, 0.0], [1.0, 0.0]], payoffs, beliefs, name="bos")


def bos_equilibria(g: FiniteGame, c: float) -> dict[str, StrategyProfile]:
    """The three constant-strategy equilibria ``p = q`` in ``{1, 0, c/(1+c)}``."""
    m = c / (1.0 + c)
    return {
        "(1,1)": constant_profile(g, [[1.0, 0.0], [1.0, 0.0]]),
        "(0,0)": constant_profile(g, [[0.0, 1.0], [0.0, 1.0]]),
        "mixed": constant_profile(g, [[m, 1.0 - m], [m, 1.0 - m]]),
    }


def gaussian_belief_game(sigma1_sq: float, sigma2_sq: float, points: int = 9, half_width: float = 4.0) -> FiniteGame:
    """Two players with zero payoffs and the Gaussian beliefs of the inconsistency example."""
    grid = np.linspace(-half_width, half_width, points)
    beliefs = [
        discretize_gaussian_beliefs(GaussianBeliefSpec(v), grid, grid, grid, i)
        for i, v in enumerate((sigma1_sq, sigma2_sq))
    ]
    zero = [PayoffSpec.from_expr("0", 2)] * 2
    return FiniteGame(_states(grid), [grid, grid], [[0.0], [0.0]], zero, beliefs, name="gaussian")


# -- public good --------------------------------------------------------------


def public_good_gamma(t, specs: Sequence[TruncatedNormalSpec]) -> np.ndarray:
    """Belief mass each player puts on the opponent's type exceeding the opponent's threshold."""
    out = np.empty(2)
    for i in range(2):
        sp = specs[i]
        ti, other = t[i], t[1 - i]
        hi = std_normal_cdf((sp.t_U - ti) / sp.sigma)
        lo = std_normal_cdf((sp.t_L - ti) / sp.sigma)
        mid = std_normal_cdf((other - ti) / sp.sigma)
        out[i] = (hi - mid) / (hi - lo)
    return out


@dataclass(frozen=True)
class FixedPointResult:
    thresholds: tuple[float, float]
    residual: float
    iterations: int
    converged: bool
    method: str = "damped"


def solve_public_good_thresholds(
    spec1: TruncatedNormalSpec,
    spec2: TruncatedNormalSpec,
    start=(0.5, 0.5),
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iters: int = 100_000,
) -> FixedPointResult:
    """Damped iteration ``t <- (1 - damping) t + damping * Gamma(t)`` for the threshold pair.

    Falls back to bisection along the diagonal when the specs are identical
    and the damped iteration stalls.
    """
    specs = (spec1, spec2)
    t = np.asarray(start, float)
    res = np.inf
    for it in range(1, max_iters + 1):
        gam = public_good_gamma(t, specs)
        res = float(np.abs(t - gam).max())
        if res <= tol:
            return FixedPointResult((float(t[0]), float(t[1])), res, it - 1, True)
        t = (1.0 - damping) * t + damping * gam
    if spec1 == spec2:
        return _bisect_symmetric(spec1, tol)
    return FixedPointResult((float(t[0]), float(t[1])), res, max_iters, False)


def _bisect_symmetric(spec: TruncatedNormalSpec, tol: float) -> FixedPointResult:
    specs = (spec, spec)
    lo, hi = spec.t_L, spec.t_U
    h = lambda x: public_good_gamma((x, x), specs)[0] - x  # noqa: E731
    it = 0
    while hi - lo > 1e-15 and it < 200:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    x = 0.5 * (lo + hi)
    res = abs(h(x))
    return FixedPointResult((x, x), res, it, res <= tol, "bisection")


def public_good_fixed_points(specs, starts, **kw) -> list[FixedPointResult]:
    """Fixed points reached from several starts, duplicates (within 1e-8) removed."""
    found: list[FixedPointResult] = []
    for s in starts:
        r = solve_public_good_thresholds(*specs, start=s, **kw)
        if r.converged and all(
            max(abs(a - b) for a, b in zip(r.thresholds, f.thresholds)) > 1e-8 for f in found
        ):
            found.append(r)
    return found


def threshold_profile(g: FiniteGame, thresholds) -> StrategyProfile:
    """Contribute (action index 1) exactly at types ``t_i <= t_i*``."""
    choices = [(np.asarray(g.types[i]) <= thresholds[i]).astype(int) for i in range(g.n)]
    return pure_profile(g, choices)


@dataclass(frozen=True, eq=False)
class PublicGoodInstance:
    game: FiniteGame
    profile: StrategyProfile
    fixed_point: FixedPointResult


def build_public_good_discretized(
    spec1: TruncatedNormalSpec, spec2: TruncatedNormalSpec, m: int = 201
) -> PublicGoodInstance:
    """``m``-point type grids, actions ``{0, 1}``, payoff ``max(a1, a2) - a_i t_i``."""
    if m < 21:
        raise ValueError("need m >= 21")
    specs = (spec1, spec2)
    grids = [np.linspace(sp.t_L, sp.t_U, m) for sp in specs]
    payoffs = [
        PayoffSpec.from_expr("max(a1, a2) - a1*t1", 2),
        PayoffSpec.from_expr("max(a1, a2) - a2*t2", 2),
    ]
    beliefs = [truncnorm_cell_masses(specs[i], grids[i], grids[1 - i], i) for i in range(2)]
    g = FiniteGame(
        [State("none", 0.0)], grids, [[0.0, 1.0], [0.0, 1.0]], payoffs, beliefs, name="public-good"
    )
    fp = solve_public_good_thresholds(spec1, spec2)
    return PublicGoodInstance(g, threshold_profile(g, fp.thresholds), fp)


# -- Cournot ------------------------------------------------------------------


def linear_demand(n: int) -> str:
    return "pos(s - " + " - ".join(f"a{j + 1}" for j in range(n)) + ")"


def build_cournot(
    n: int,
    demand_expr: str | None,
    cost_exprs: Sequence[str],
    states,
    types: Sequence,
    actions: Sequence,
    beliefs: Sequence[BeliefKernel],
    state_labels=None,
) -> FiniteGame:
    """Quantity competition: ``u_i = a_i * price - cost_i``.

    ``demand_expr`` is the price as an expression in ``a1..an``, ``s`` and
    ``t1..tn`` (linear inverse demand ``pos(s - sum a)`` by default); costs
    are per-player expressions. Price and costs must be nonnegative on the
    grid, and every action grid must contain 0.
    """
    demand_expr = demand_expr or linear_demand(n)
    for i, grid in enumerate(actions):
        grid = np.asarray(grid, float)
        if np.any(grid < 0) or not np.any(grid == 0):
            raise GameError(f"action grid of firm {i + 1} must be nonnegative and contain 0")
    payoffs = [
        PayoffSpec.from_expr(f"a{i + 1} * ({demand_expr}) - ({cost_exprs[i]})", n) for i in range(n)
    ]
    g = FiniteGame(_states(states, state_labels), types, actions, payoffs, beliefs, name="cournot")
    if np.any(evaluate_on_grid(parse_expr(demand_expr, n), g) < 0):
        raise GameError("negative price on the grid")
    for i, src in enumerate(cost_exprs):
        if np.any(evaluate_on_grid(parse_expr(src, n), g) < 0):
            raise GameError(f"negative cost for firm {i + 1} on the grid")
    return g


def cournot_complete_information(intercept: float = 10.0, unit_cost: float = 2.0, points: int = 101, top: float = 5.0) -> FiniteGame:
    """Duopoly with one state and one type each; beliefs are trivially point masses."""
    grid = np.linspace(0.0, top, points)
    beliefs = [BeliefKernel(i, [[1.0]]) for i in range(2)]
    return build_cournot(
        2, None, [f"{unit_cost!r}*a1", f"{unit_cost!r}*a2"], [intercept], [[0.0], [0.0]],
        [grid, grid], beliefs,
    )


def cournot_inconsistent(
    sigma_sq=(2.0, 3.0),
    action_points: int = 51,
    top: float = 5.0,
    type_grid=None,
    state_grid=None,
    unit_cost: float = 2.0,
) -> FiniteGame:
    """Duopoly with an uncertain demand intercept and Gaussian beliefs of unequal own-type variance.

    Firm ``i`` of type ``t`` believes the intercept and the rival's type are
    jointly normal around ``(t, t)``.
    """
    types = np.linspace(8.0, 12.0, 5) if type_grid is None else np.asarray(type_grid, float)
    states = np.linspace(6.0, 14.0, 9) if state_grid is None else np.asarray(state_grid, float)
    beliefs = [
        discretize_gaussian_beliefs(
            GaussianBeliefSpec(sigma_sq[i], "identity", "identity"), states, types, types, i
        )
        for i in range(2)
    ]
    grid = np.linspace(0.0, top, action_points)
    return build_cournot(
        2, None, [f"{unit_cost!r}*a1", f"{unit_cost!r}*a2"], states, [types, types],
        [grid, grid], beliefs,
    )


# -- diagnostics and random games ---------------------------------------------


def shared_signal_game(m: int, n: int = 2) -> FiniteGame:
    """All players observe the same signal on an ``m``-point grid; beliefs are point masses on it."""
    grid = np.linspace(0.0, 1.0, m)
    beliefs = []
    for i in range(n):
        shape = (m,) + (m,) * (n - 1)
        table = np.zeros(shape)
        for k in range(m):
            table[(k,) + (k,) * (n - 1)] = 1.0
        beliefs.append(BeliefKernel(i, table.reshape(m, -1)))
    zero = [PayoffSpec.from_expr("0", n)] * n
    return FiniteGame(
        [State("none", 0.0)], [grid] * n, [[0.0]] * n, zero, beliefs, name=f"shared-signal-{m}"
    )


def _per_player(x, n: int) -> tuple[int, ...]:
    if isinstance(x, (int, np.integer)):
        return (int(x),) * n
    x = tuple(int(v) for v in x)
    if len(x) != n:
        raise ValueError(f"expected {n} sizes, got {len(x)}")
    return x


def generate_random_game(seed: int, dims, variant: str = "default") -> FiniteGame:
    """Seeded game with payoffs uniform on ``[-1, 1]``.

    ``dims = (n, |S|, |T_i|, |A_i|)``, where the last two may be per-player
    sequences. The ``"default"`` variant draws each belief row from a flat
    Dirichlet; ``"consistent"`` draws a prior the same way and conditions it.
    """
    n, n_states, t_sizes, a_sizes = dims
    t_sizes = _per_player(t_sizes, n)
    a_sizes = _per_player(a_sizes, n)
    rng = np.random.default_rng(seed)
    states = _states(np.arange(n_states, dtype=float))
    types = [np.arange(m, dtype=float) for m in t_sizes]
    actions = [np.arange(m, dtype=float) for m in a_sizes]
    shape = a_sizes + (n_states,) + t_sizes
    payoffs = [PayoffSpec.from_table(rng.uniform(-1.0, 1.0, size=shape)) for _ in range(n)]
    if variant == "default":
        beliefs = []
        for i in range(n):
            cols = n_states * int(np.prod([t_sizes[j] for j in range(n) if j != i]))
            beliefs.append(BeliefKernel(i, rng.dirichlet(np.ones(cols), size=t_sizes[i])))
        return FiniteGame(states, types, actions, payoffs, beliefs, name=f"random-{seed}")
    if variant != "consistent":
        raise ValueError(f"unknown variant {variant!r}")
    prior = rng.dirichlet(np.ones(n_states * int(np.prod(t_sizes)))).reshape((n_states,) + t_sizes)
    shell = FiniteGame(states, types, actions, payoffs, [], name=f"random-consistent-{seed}")
    return FiniteGame(states, types, actions, payoffs, kernels_from_prior(shell, prior), shell.name)


def matching_pennies() -> FiniteGame:
    """Complete-information matching pennies: no pure equilibrium, best responses cycle."""
    table1 = np.array([[1.0, -1.0], [-1.0, 1.0]]).reshape(2, 2, 1, 1, 1)
    beliefs = [BeliefKernel(i, [[1.0]]) for i in range(2)]
    return FiniteGame(
        [State("none", 0.0)], [[0.0], [0.0]], [[0.0, 1.0], [0.0, 1.0]],
        [PayoffSpec.from_table(table1), PayoffSpec.from_table(-table1)], beliefs,
        name="matching-pennies",
    )


def cyclic_game() -> FiniteGame:
    """Asymmetric matching pennies: the mixed equilibrium is not uniform and pure best responses cycle."""
    matcher = np.array([[3.0, 0.0], [0.0, 1.0]]).reshape(2, 2, 1, 1, 1)
    mismatcher = np.array([[0.0, 1.0], [1.0, 0.0]]).reshape(2, 2, 1, 1, 1)
    beliefs = [BeliefKernel(i, [[1.0]]) for i in range(2)]
    return FiniteGame(
        [State("none", 0.0)], [[0.0], [0.0]], [[0.0, 1.0], [0.0, 1.0]],
        [PayoffSpec.from_table(matcher), PayoffSpec.from_table(mismatcher)], beliefs,
        name="cyclic",
    )


def cournot_grid_oracle(intercept: float = 10.0, unit_cost: float = 2.0, points: int = 101, top: float = 5.0):
    """Pure Nash equilibria of the complete-information duopoly by direct grid search.

    Works from the closed-form profit, independently of the expression
    language, and returns quantity pairs.
    """
    q = np.linspace(0.0, top, points)
    price = np.maximum(intercept - q[:, None] - q[None, :], 0.0)
    profit1 = q[:, None] * price - unit_cost * q[:, None]
    best1 = profit1 >= profit1.max(axis=0, keepdims=True) - 1e-12
    best2 = profit1.T >= profit1.T.max(axis=1, keepdims=True) - 1e-12
    return [(float(q[a]), float(q[b])) for a, b in np.argwhere(best1 & best2)]
