"""Bayesian-equilibrium verification, repair of surrogate equilibria, and certification runs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game import FiniteGame, StrategyProfile, pure_profile, require_profile
from .interim import interim_action_values, interim_regrets
from .measures import ProductMeasure, canonical_dominating_measure
from .solvers import PureRegretTable, best_response_row

EPS_EXACT = 1e-9
EPS_SOLVER = 1e-6
NEG_TOL = 1e-12


class SupportMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RegretReport:
    interim_regret: tuple[np.ndarray, ...]
    surrogate_regret: np.ndarray
    eps: float
    nu: ProductMeasure = field(repr=False)

    @property
    def max_interim_regret(self) -> float:
        return float(max(r.max() for r in self.interim_regret))

    @property
    def worst(self) -> tuple[int, int]:
        """``(player, type)`` with the largest interim regret (0-based)."""
        best = max(range(len(self.interim_regret)), key=lambda i: self.interim_regret[i].max())
        return best, int(np.argmax(self.interim_regret[best]))

    @property
    def verdict_be(self) -> bool:
        return self.max_interim_regret <= self.eps

    @property
    def verdict_ne_nu(self) -> bool:
        return bool(np.all(self.surrogate_regret <= self.eps))

    def optimal_types(self, i: int) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.interim_regret[i] <= self.eps)]

    def to_dict(self) -> dict:
        i, k = self.worst
        return {
            "eps": self.eps,
            "interim_regret": [r.tolist() for r in self.interim_regret],
            "surrogate_regret": self.surrogate_regret.tolist(),
            "max_interim_regret": self.max_interim_regret,
            "worst": {"player": i + 1, "type": k},
            "verdict_BE": self.verdict_be,
            "verdict_NE_nu": self.verdict_ne_nu,
            "optimal_types": [self.optimal_types(j) for j in range(len(self.interim_regret))],
        }


def regret_report(
    g: FiniteGame, profile: StrategyProfile, nu: ProductMeasure | None = None, eps: float = EPS_EXACT
) -> RegretReport:
    """Interim regret at every type plus the ``nu``-weighted surrogate regret per player."""
    require_profile(g, profile)
    nu = nu or canonical_dominating_measure(g)
    nu.check_dims(g)
    regrets = tuple(interim_regrets(g, profile))
    surrogate = np.array([nu.nu[i] @ r for i, r in enumerate(regrets)])
    return RegretReport(regrets, surrogate, eps, nu)


def optimal_type_set(g: FiniteGame, i: int, profile: StrategyProfile, eps: float = EPS_EXACT) -> set[int]:
    """Types of player ``i`` at which ``profile`` is within ``eps`` of a best response."""
    r = interim_regrets(g, profile)[i]
    return {int(k) for k in np.flatnonzero(r <= eps)}


def repair(g: FiniteGame, profile: StrategyProfile, eps: float = EPS_EXACT) -> StrategyProfile:
    """Replace every row that is not ``eps``-optimal by a best response.

    Best responses are taken against the *input* profile, not the partially
    repaired one. The result is a Bayesian equilibrium when the input is a
    surrogate equilibrium and every replaced row sits at a null type.
    """
    require_profile(g, profile)
    tables = profile.tables
    regrets = interim_regrets(g, profile)
    out = []
    for i in range(g.n):
        table = tables[i].copy()
        for k in np.flatnonzero(regrets[i] > eps):
            table[k] = best_response_row(g, i, int(k), tables)
        out.append(table)
    return StrategyProfile.from_tables(out)


@dataclass(frozen=True, eq=False)
class RepairOutcome:
    profile: StrategyProfile
    changed: tuple[tuple[int, int], ...]
    precondition_ok: bool
    report: RegretReport

    @property
    def verdict_be(self) -> bool:
        return self.report.verdict_be

    def to_dict(self) -> dict:
        return {
            "changed": [{"player": i + 1, "type": k} for i, k in self.changed],
            "precondition_ok": self.precondition_ok,
            "report": self.report.to_dict(),
        }


def repair_checked(
    g: FiniteGame, profile: StrategyProfile, nu: ProductMeasure | None = None, eps: float = EPS_EXACT
) -> RepairOutcome:
    """:func:`repair` plus a re-verification and a flag for repairs at ``nu``-positive types.

    ``precondition_ok`` is False when a repaired row carries positive ``nu``
    weight; then the input was not a surrogate equilibrium and the output is
    not guaranteed to be a Bayesian equilibrium.
    """
    nu = nu or canonical_dominating_measure(g)
    before = regret_report(g, profile, nu, eps)
    fixed = repair(g, profile, eps)
    changed = tuple(
        (i, int(k)) for i in range(g.n) for k in np.flatnonzero(before.interim_regret[i] > eps)
    )
    ok = before.verdict_ne_nu and all(nu.nu[i][k] == 0 for i, k in changed)
    return RepairOutcome(fixed, changed, ok, regret_report(g, fixed, nu, eps))


def agree_on_support(a: StrategyProfile, b: StrategyProfile, nu: ProductMeasure) -> bool:
    """Do two profiles coincide at every type of positive ``nu`` weight?"""
    return all(
        np.array_equal(ta[w > 0], tb[w > 0]) for ta, tb, w in zip(a.tables, b.tables, nu.nu)
    )


# -- certification ------------------------------------------------------------


def random_full_support_measure(g: FiniteGame, rng: np.random.Generator) -> ProductMeasure:
    return ProductMeasure(
        rng.dirichlet(np.ones(g.n_states)),
        tuple(rng.dirichlet(np.ones(m)) for m in g.type_counts),
    )


@dataclass
class CertificationReport:
    """Outcome of checking BE = intersection of surrogate equilibria on sampled measures.

    Only pure profiles and the listed measures are checked; the identity is
    a statement about every dominating measure.
    """

    n_profiles: int
    n_measures: int
    bayesian: list[tuple] = field(default_factory=list)
    forward_violations: list[dict] = field(default_factory=list)
    converse_violations: list[dict] = field(default_factory=list)
    surrogate_equilibria: int = 0
    repaired: int = 0
    note: str = "sampled measures and pure profiles only"

    @property
    def ok(self) -> bool:
        return not self.forward_violations and not self.converse_violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "pure_profiles": self.n_profiles,
            "measures": self.n_measures,
            "bayesian_equilibria": [list(map(list, c)) for c in self.bayesian],
            "surrogate_equilibria_checked": self.surrogate_equilibria,
            "needed_repair": self.repaired,
            "forward_violations": self.forward_violations,
            "converse_violations": self.converse_violations,
            "note": self.note,
        }


def certify_characterization(
    g: FiniteGame,
    eps: float = 0.0,
    n_measures: int = 20,
    seed: int = 0,
    measures: list[ProductMeasure] | None = None,
) -> CertificationReport:
    """Check both inclusions between pure Bayesian and surrogate equilibria.

    (a) every pure profile with interim regret ``<= eps`` everywhere is a
    surrogate equilibrium under each measure; (b) every pure surrogate
    equilibrium becomes a Bayesian equilibrium after :func:`repair`.
    Measures are the canonical one, ``n_measures`` seeded full-support draws,
    and any extra ``measures`` supplied.
    """
    rng = np.random.default_rng(seed)
    nus = [canonical_dominating_measure(g)]
    nus += [random_full_support_measure(g, rng) for _ in range(n_measures)]
    nus += list(measures or [])
    table = PureRegretTable(g)
    report = CertificationReport(table.count, len(nus))
    for choices in table.profiles():
        regrets = table.interim(choices)
        is_be = max(r.max() for r in regrets) <= eps
        if is_be:
            report.bayesian.append(choices)
        for m, nu in enumerate(nus):
            surrogate = np.array([nu.nu[i] @ r for i, r in enumerate(regrets)])
            is_ne = bool(np.all(surrogate <= eps))
            if is_be and not is_ne:
                report.forward_violations.append(
                    {"profile": [list(c) for c in choices], "measure": m,
                     "surrogate_regret": surrogate.tolist()}
                )
            if not is_ne:
                continue
            report.surrogate_equilibria += 1
            if is_be:
                continue
            fixed = repair(g, pure_profile(g, choices), eps)
            after = regret_report(g, fixed, nu, eps)
            if after.verdict_be:
                report.repaired += 1
            else:
                report.converse_violations.append(
                    {"profile": [list(c) for c in choices], "measure": m,
                     "max_interim_regret_after_repair": after.max_interim_regret}
                )
    return report


@dataclass(frozen=True)
class EquivalenceResult:
    ne_nu: bool
    ne_nu_prime: bool
    pattern_nu: tuple[tuple[bool, ...], ...]
    pattern_nu_prime: tuple[tuple[bool, ...], ...]

    @property
    def agree(self) -> bool:
        return self.ne_nu == self.ne_nu_prime and self.pattern_nu == self.pattern_nu_prime


def _zero_pattern(regrets, nu: ProductMeasure, eps: float) -> tuple[tuple[bool, ...], ...]:
    # which supported types carry regret above eps; unsupported types are masked out
    return tuple(
        tuple(bool(w > 0 and x > eps) for w, x in zip(nu.nu[i], r)) for i, r in enumerate(regrets)
    )


def certify_nu_equivalence(
    g: FiniteGame,
    profile: StrategyProfile,
    nu: ProductMeasure,
    nu_prime: ProductMeasure,
    eps: float = 0.0,
) -> EquivalenceResult:
    """Surrogate-equilibrium verdicts under two measures with the same null sets."""
    if nu.support() != nu_prime.support():
        raise SupportMismatch("measures differ in support, so they are not equivalent")
    a = regret_report(g, profile, nu, eps)
    b = regret_report(g, profile, nu_prime, eps)
    return EquivalenceResult(
        a.verdict_ne_nu,
        b.verdict_ne_nu,
        _zero_pattern(a.interim_regret, nu, eps),
        _zero_pattern(b.interim_regret, nu_prime, eps),
    )


@dataclass
class ClosureResult:
    ok: bool
    checked: int
    witnesses: list[dict] = field(default_factory=list)


def closure_witness(
    g: FiniteGame, profile: StrategyProfile, nu: ProductMeasure, bayesian: list[StrategyProfile]
) -> dict | None:
    """``None`` if ``profile`` agrees with some listed equilibrium on the support of ``nu``.

    Otherwise a witness ``(player, type)`` where the closest candidate differs.
    """
    if any(agree_on_support(profile, b, nu) for b in bayesian):
        return None
    if not bayesian:
        return {"reason": "no Bayesian equilibrium enumerated"}
    # report the first supported type where the first candidate disagrees
    ref = bayesian[0]
    for i, (ta, tb, w) in enumerate(zip(profile.tables, ref.tables, nu.nu)):
        for k in np.flatnonzero(w > 0):
            if not np.array_equal(ta[k], tb[k]):
                return {"player": i + 1, "type": int(k)}
    return {"reason": "unmatched"}


def bne_closure_check(
    g: FiniteGame,
    nu: ProductMeasure,
    eps: float = 0.0,
    n_profiles: int = 20,
    seed: int = 0,
    profiles: list[StrategyProfile] | None = None,
) -> ClosureResult:
    """Do surrogate equilibria agree with some Bayesian equilibrium on the support of ``nu``?

    Checks ``profiles`` if given, otherwise up to ``n_profiles`` pure
    surrogate equilibria drawn by ``seed`` from the full enumeration.
    """
    table = PureRegretTable(g)
    bayesian, ne = [], []
    for c in table.profiles():
        regrets = table.interim(c)
        if max(r.max() for r in regrets) <= eps:
            bayesian.append(pure_profile(g, c))
        if np.all(np.array([nu.nu[i] @ r for i, r in enumerate(regrets)]) <= eps):
            ne.append(pure_profile(g, c))
    if profiles is None:
        rng = np.random.default_rng(seed)
        pick = rng.permutation(len(ne))[:n_profiles]
        profiles = [ne[k] for k in sorted(pick)]
    result = ClosureResult(True, len(profiles))
    for prof in profiles:
        w = closure_witness(g, prof, nu, bayesian)
        if w is not None:
            result.ok = False
            result.witnesses.append(w)
    return result


def opponent_values_unchanged(
    g: FiniteGame, profile: StrategyProfile, other: StrategyProfile, i: int
) -> float:
    """Largest change in player ``i``'s interim action values between two profiles."""
    a = interim_action_values(g, i, profile).values
    b = interim_action_values(g, i, other).values
    return float(np.abs(a - b).max())
