"""Dominating product measures, densities and common-prior consistency."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .game import BeliefKernel, FiniteGame, GameError

TAU_CONSISTENCY = 1e-8
MEASURE_TOL = 1e-12


class DominationError(ValueError):
    """A belief puts mass on an atom the reference measure treats as null."""


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float).ravel()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """``nu_0 (x) nu_1 (x) ... (x) nu_n`` on the state and type grids."""

    nu0: np.ndarray
    nu: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "nu0", _frozen(self.nu0))
        object.__setattr__(self, "nu", tuple(_frozen(v) for v in self.nu))

    @property
    def factors(self) -> list[np.ndarray]:
        return [self.nu0, *self.nu]

    def problems(self) -> list[str]:
        out = []
        for k, v in enumerate(self.factors):
            name = "nu_0" if k == 0 else f"nu_{k}"
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                out.append(f"{name} has negative or non-finite entries")
            elif abs(v.sum() - 1.0) > MEASURE_TOL:
                out.append(f"{name} sums to {v.sum()!r}, not 1")
        return out

    def check_dims(self, g: FiniteGame) -> None:
        expected = (g.n_states,) + g.type_counts
        got = tuple(len(v) for v in self.factors)
        if got != expected:
            raise GameError(f"measure has factor sizes {got}, game needs {expected}")

    def support(self) -> tuple[tuple[bool, ...], ...]:
        return tuple(tuple(bool(x > 0) for x in v) for v in self.factors)

    def joint(self) -> np.ndarray:
        """Full product on the ``(s, t_1, ..., t_n)`` grid."""
        return reduce(np.multiply.outer, self.factors)

    def reference(self, i: int) -> np.ndarray:
        """``nu_0 (x) nu_-i`` on the ``(s, t_-i)`` grid, C order."""
        others = [v for j, v in enumerate(self.nu) if j != i]
        return reduce(np.multiply.outer, [self.nu0, *others])

    def to_dict(self) -> dict:
        return {"s": self.nu0.tolist(), "t": [v.tolist() for v in self.nu]}


def canonical_dominating_measure(g: FiniteGame) -> ProductMeasure:
    """Uniform measure on every factor; dominates any finite belief profile."""
    return ProductMeasure(
        np.full(g.n_states, 1.0 / g.n_states),
        tuple(np.full(m, 1.0 / m) for m in g.type_counts),
    )


@dataclass(frozen=True)
class Atom:
    """A belief atom ``(s, t_-i)`` of player ``player`` at own type ``type_index``."""

    player: int
    type_index: int
    state: int
    opponents: tuple[int, ...]
    belief_mass: float

    def describe(self, g: FiniteGame | None = None) -> str:
        opp = ", ".join(f"t{j + 1}[{k}]" for j, k in zip(_others(self.player, len(self.opponents) + 1), self.opponents))
        where = f"s[{self.state}]" + (f", {opp}" if opp else "")
        return (
            f"player {self.player + 1}, type {self.type_index}: belief mass "
            f"{self.belief_mass!r} on null atom ({where})"
        )

    def to_dict(self) -> dict:
        return {
            "player": self.player + 1,
            "type": self.type_index,
            "state": self.state,
            "opponent_types": list(self.opponents),
            "belief_mass": self.belief_mass,
        }


def _others(i: int, n: int) -> list[int]:
    return [j for j in range(n) if j != i]


@dataclass(frozen=True)
class ContinuityResult:
    ok: bool
    witness: Atom | None = None

    def __bool__(self):
        return self.ok


def check_absolute_continuity(g: FiniteGame, nu: ProductMeasure) -> ContinuityResult:
    """Is every belief row dominated by ``nu_0 (x) nu_-i``? Returns a witness atom if not."""
    nu.check_dims(g)
    for i in range(g.n):
        ref = nu.reference(i).ravel()
        eta = g.beliefs[i].table
        bad = (eta > 0) & (ref == 0)[None, :]
        if bad.any():
            k, col = (int(x) for x in np.argwhere(bad)[0])
            s, *opp = np.unravel_index(col, nu.reference(i).shape)
            return ContinuityResult(
                False, Atom(i, k, int(s), tuple(int(x) for x in opp), float(eta[k, col]))
            )
    return ContinuityResult(True)


@dataclass(frozen=True, eq=False)
class DensityTable:
    """Density of player ``owner``'s beliefs w.r.t. ``nu_0 (x) nu_-i``, one row per own type.

    ``row_mass`` holds the reference-weighted row sums; it is 1 at every
    type because beliefs are probability rows.
    """

    owner: int
    table: np.ndarray
    row_mass: np.ndarray

    @property
    def positive_types(self) -> np.ndarray:
        return np.flatnonzero(self.row_mass > 0)


def rn_density(g: FiniteGame, nu: ProductMeasure, i: int) -> DensityTable:
    """Atomwise ratio ``eta_i / (nu_0 (x) nu_-i)``, set to 0 where both vanish."""
    nu.check_dims(g)
    ref = nu.reference(i).ravel()
    eta = g.beliefs[i].table
    null = ref == 0
    if np.any(eta[:, null] > 0):
        witness = check_absolute_continuity(g, nu).witness
        raise DominationError(witness.describe(g))
    safe = np.where(null, 1.0, ref)
    f = np.where(null[None, :], 0.0, eta / safe[None, :])
    f.flags.writeable = False
    return DensityTable(i, f, f @ ref)


def domination_condition_number(g: FiniteGame, nu: ProductMeasure) -> float:
    """Largest density entry over all players; grows as domination degenerates."""
    return float(max(rn_density(g, nu, i).table.max() for i in range(g.n)))


# -- consistency --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConsistencyResult:
    feasible: bool
    residual: float
    prior: np.ndarray | None = None
    iterations: int = 0
    lower_bound: float = 0.0

    def to_dict(self) -> dict:
        out = {"feasible": self.feasible, "residual": self.residual, "iterations": self.iterations}
        if self.prior is not None:
            out["prior"] = self.prior.ravel().tolist()
        return out


def _as_prior(g: FiniteGame, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    shape = g.state_type_shape
    if p.size != int(np.prod(shape)):
        raise GameError(f"prior has {p.size} entries, expected {int(np.prod(shape))}")
    return p.reshape(shape)


def type_marginal(p: np.ndarray, i: int) -> np.ndarray:
    """Marginal of a joint ``(s, t)`` array on ``t_i``."""
    axes = tuple(d for d in range(p.ndim) if d != 1 + i)
    return p.sum(axis=axes)


def _broadcast_type(v: np.ndarray, i: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[1 + i] = v.size
    return v.reshape(shape)


def consistency_gaps(g: FiniteGame, p: np.ndarray) -> list[np.ndarray]:
    """Per-player arrays ``p(s, t) - p_i(t_i) * eta_i(t_i, {(s, t_-i)})``."""
    p = _as_prior(g, p)
    return [
        p - _broadcast_type(type_marginal(p, i), i, p.ndim) * g.belief_joint(i) for i in range(g.n)
    ]


def check_consistency(g: FiniteGame, p, tau: float = TAU_CONSISTENCY) -> ConsistencyResult:
    """Max-norm violation of ``p = p_i (x) eta_i`` over players and atoms."""
    p = _as_prior(g, p)
    residual = float(max(np.abs(gap).max() for gap in consistency_gaps(g, p)))
    return ConsistencyResult(residual <= tau, residual, p.copy() if residual <= tau else None)


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u * k > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


class _ConsistencyOperator:
    """Linear map ``p -> (p - p_i (x) eta_i)_i`` and its adjoint, without a dense matrix."""

    def __init__(self, g: FiniteGame):
        self.shape = g.state_type_shape
        self.n = g.n
        self.eta = [g.belief_joint(i) for i in range(g.n)]
        self.sum_axes = [tuple(d for d in range(len(self.shape)) if d != 1 + i) for i in range(g.n)]

    def apply(self, p: np.ndarray) -> list[np.ndarray]:
        return [
            p - p.sum(axis=ax, keepdims=True) * eta for ax, eta in zip(self.sum_axes, self.eta)
        ]

    def adjoint(self, rs: list[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.shape)
        for r, ax, eta in zip(rs, self.sum_axes, self.eta):
            out += r - (eta * r).sum(axis=ax, keepdims=True)
        return out

    def lipschitz(self) -> float:
        # ||M_i||_2 <= 1 + sqrt(K_i) * max row norm of eta_i, K_i = columns of the kernel
        total = 0.0
        for ax, eta in zip(self.sum_axes, self.eta):
            cols = int(np.prod([self.shape[d] for d in ax]))
            row_norm = np.sqrt((eta**2).sum(axis=ax)).max()
            total += (1.0 + np.sqrt(cols) * row_norm) ** 2
        return float(total)


_POLISH_MAX_ATOMS = 4096


def _polish(op: _ConsistencyOperator, p: np.ndarray, res: float) -> tuple[np.ndarray, float]:
    """Snap an iterate onto the kernel of the consistency map.

    The projected gradient stops as soon as the residual drops below the
    tolerance, which leaves conditional beliefs accurate only to about that
    level, and on some consistent games it stalls just above it. Projecting onto the null space by least squares and renormalising
    is exact up to rounding; the result is kept only if it stays a
    probability vector and lowers the residual.
    """
    size = p.size
    if size > _POLISH_MAX_ATOMS:
        return p, res
    basis = np.eye(size).reshape((size,) + op.shape)
    dense = np.stack([np.concatenate([r.ravel() for r in op.apply(e)]) for e in basis], axis=1)
    flat = p.ravel()
    q = flat - np.linalg.lstsq(dense, dense @ flat, rcond=None)[0]
    if q.min() < -1e-12 or q.sum() <= 0:
        return p, res
    q = (np.maximum(q, 0.0) / np.maximum(q, 0.0).sum()).reshape(op.shape)
    q_res = max(float(np.abs(r).max()) for r in op.apply(q))
    return (q, q_res) if q_res < res else (p, res)


def find_common_prior(
    g: FiniteGame,
    tau: float = TAU_CONSISTENCY,
    max_iters: int = 20_000,
    check_every: int = 25,
) -> ConsistencyResult:
    """Search for a common prior by projected gradient on the squared residual.

    Starts at the uniform prior with fixed step ``0.5 / L``. Every
    ``check_every`` iterations a Frank-Wolfe gap gives a lower bound on the
    optimal squared residual; once that bound rules out any prior with
    max-norm residual ``<= tau`` the search stops early. The outcome is a
    deterministic function of the game.
    """
    op = _ConsistencyOperator(g)
    size = int(np.prod(op.shape))
    rows = g.n * size
    # F(p) = 0.5 * ||Mp||^2 <= 0.5 * rows * tau^2 is necessary for max-norm <= tau
    target = 0.5 * rows * tau * tau
    step = 0.5 / op.lipschitz()

    p = np.full(op.shape, 1.0 / size)
    best_p, best_res = p, np.inf
    lower = 0.0
    it = 0
    for it in range(1, max_iters + 1):
        rs = op.apply(p)
        res = max(float(np.abs(r).max()) for r in rs)
        if res < best_res:
            best_p, best_res = p, res
        if res <= tau:
            break
        grad = op.adjoint(rs)
        if it % check_every == 0:
            f = 0.5 * sum(float((r * r).sum()) for r in rs)
            gap = float((grad * p).sum() - grad.min())
            lower = max(lower, f - gap)
            if lower > target:
                break
        p = project_simplex((p - step * grad).ravel()).reshape(op.shape)
    # slow linear convergence can stall just above tau on consistent games
    best_p, best_res = _polish(op, best_p, best_res)
    feasible = best_res <= tau
    return ConsistencyResult(feasible, float(best_res), best_p.copy() if feasible else None, it, lower)


def gaussian_consistency_criterion(sigma1_sq: float, sigma2_sq: float) -> float:
    """``1/(s2 - 1) - 1/(s1 - 1)``: zero exactly when the two own-type variances agree.

    This is the cross partial in ``(t_1, t_2)`` of the log-ratio of the two
    players' Gaussian belief densities; a common prior needs it to vanish.
    """
    if sigma1_sq <= 1 or sigma2_sq <= 1:
        raise ValueError("variances must exceed 1 for a positive-definite covariance")
    return 1.0 / (sigma2_sq - 1.0) - 1.0 / (sigma1_sq - 1.0)


def derive_belief_from_prior(
    g: FiniteGame, p, nu: ProductMeasure, i: int
) -> BeliefKernel:
    """Belief kernel of player ``i`` obtained by conditioning ``p`` on ``t_i``.

    Types with zero ``p``-marginal get the reference measure ``nu_0 (x) nu_-i``
    instead, so the result is dominated by ``nu`` at every type.
    """
    p = _as_prior(g, p)
    nu.check_dims(g)
    joint_nu = nu.joint()
    if np.any((p > 0) & (joint_nu == 0)):
        idx = tuple(int(x) for x in np.argwhere((p > 0) & (joint_nu == 0))[0])
        raise DominationError(f"prior puts mass {p[idx]!r} on nu-null atom {idx}")
    # rows of p by own type, columns (s, t_-i)
    rows = np.moveaxis(p, 1 + i, 0).reshape(g.type_counts[i], -1)
    h = rows.sum(axis=1)
    ref = nu.reference(i).ravel()
    table = np.empty_like(rows)
    positive = h > 0
    table[positive] = rows[positive] / h[positive, None]
    table[~positive] = ref
    return BeliefKernel(i, table)


def kernels_from_prior(g: FiniteGame, p, nu: ProductMeasure | None = None) -> tuple[BeliefKernel, ...]:
    """All players' kernels by conditioning ``p`` (reference measure off its support)."""
    if nu is None:
        nu = canonical_dominating_measure(g)
    return tuple(derive_belief_from_prior(g, p, nu, i) for i in range(g.n))
