import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beliefgames.equilibrium import (
    SupportMismatch,
    bne_closure_check,
    certify_characterization,
    certify_nu_equivalence,
    opponent_values_unchanged,
    optimal_type_set,
    regret_report,
    repair,
    repair_checked,
)
from beliefgames.game import GameError, StrategyProfile, constant_profile, pure_profile
from beliefgames.interim import interim_action_values, interim_regrets
from beliefgames.measures import ProductMeasure, canonical_dominating_measure, kernels_from_prior
from beliefgames.scenarios import bos_equilibria, build_battle_of_sexes, generate_random_game
from beliefgames.solvers import enumerate_pure_bayesian, enumerate_pure_equilibria

from conftest import make_game

NULL_NU = ProductMeasure([0.4, 0.6], [[0.5, 0.5, 0.0], [0.3, 0.7, 0.0]])


def dominated_game(seed, nu=NULL_NU):
    """Random game whose beliefs come from a prior supported where ``nu`` is positive."""
    g0 = generate_random_game(seed, (2, 2, 3, 2))
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(18)).reshape(2, 3, 3) * (nu.joint() > 0)
    return type(g0)(g0.states, g0.types, g0.actions, g0.payoffs, kernels_from_prior(g0, p / p.sum(), nu))


def game_with_pure_be(nu=NULL_NU):
    for seed in range(200):
        g = dominated_game(seed, nu)
        found = enumerate_pure_bayesian(g, 0.0)
        if found:
            return g, found[0]
    raise AssertionError("no seeded game with a pure equilibrium")


def sabotage(g, profile, i, k):
    """Flip player ``i``'s row at type ``k`` to its worst pure action."""
    table = profile.tables[i].copy()
    regrets = interim_regrets(g, profile)[i]
    assert regrets[k] == 0
    vals = interim_action_values(g, i, profile).values[k]
    table[k] = np.eye(g.action_counts[i])[int(np.argmin(vals))]
    return profile.replace(i, table)


@pytest.fixture(scope="module")
def bos():
    return build_battle_of_sexes(1.0)


# -- regret report ----------------------------------------------------------------


def test_bos_right_right_is_bayesian(bos):
    report = regret_report(bos, bos_equilibria(bos, 1.0)["(0,0)"], eps=1e-9)
    assert report.verdict_be and report.verdict_ne_nu


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_bos_miscoordination_regret(c):
    g = build_battle_of_sexes(c)
    report = regret_report(g, constant_profile(g, [[1.0, 0.0], [0.0, 1.0]]), eps=1e-9)
    assert not report.verdict_be
    mean_exp = g.beliefs[0].table.reshape(9, 9, 9).sum(axis=2) @ np.exp(g.state_values)
    assert np.allclose(report.interim_regret[0], c * mean_exp, rtol=1e-12)
    assert np.all(report.interim_regret[0] > 0)


@given(st.integers(0, 10_000), st.integers(0, 2), st.integers(0, 2))
def test_dirac_measure_picks_one_type(seed, k1, k2):
    g = generate_random_game(seed, (2, 2, 3, 2))
    rng = np.random.default_rng(seed)
    prof = StrategyProfile.from_tables([rng.dirichlet([1, 1], size=3) for _ in range(2)])
    nu = ProductMeasure([0.5, 0.5], [np.eye(3)[k1], np.eye(3)[k2]])
    rep = regret_report(g, prof, nu)
    assert rep.surrogate_regret[0] == rep.interim_regret[0][k1]
    assert rep.surrogate_regret[1] == rep.interim_regret[1][k2]


@given(st.integers(0, 10_000))
def test_report_invariants(seed):
    g = generate_random_game(seed, (2, 2, 3, 2))
    rng = np.random.default_rng(seed)
    prof = StrategyProfile.from_tables([rng.dirichlet([1, 1], size=3) for _ in range(2)])
    nu = ProductMeasure(rng.dirichlet([1, 1]), [rng.dirichlet(np.ones(3)) for _ in range(2)])
    rep = regret_report(g, prof, nu)
    assert all(np.all(r >= -1e-12) for r in rep.interim_regret)
    assert np.all(rep.surrogate_regret <= rep.max_interim_regret + 1e-12)
    # forward direction as a weighted-average inequality
    if rep.verdict_be:
        assert rep.verdict_ne_nu


def test_report_dimension_mismatch():
    g = generate_random_game(0, (2, 2, 3, 2))
    bad = StrategyProfile.from_tables([np.full((2, 2), 0.5)] * 2)
    with pytest.raises(GameError):
        regret_report(g, bad)


def test_report_dict_fields(bos):
    d = regret_report(bos, bos_equilibria(bos, 1.0)["mixed"]).to_dict()
    assert set(d) == {"eps", "interim_regret", "surrogate_regret", "max_interim_regret", "worst",
                      "verdict_BE", "verdict_NE_nu", "optimal_types"}
    assert d["verdict_BE"] and d["worst"]["player"] in (1, 2)


# -- optimal types and repair ----------------------------------------------------------


def test_optimal_types_of_equilibrium_and_sabotage():
    g, be = game_with_pure_be()
    assert optimal_type_set(g, 0, be) == {0, 1, 2} and optimal_type_set(g, 1, be) == {0, 1, 2}
    broken = sabotage(g, be, 0, 2)
    assert interim_regrets(g, broken)[0][2] > 1e-9
    assert optimal_type_set(g, 0, broken) == {0, 1}


def test_single_type_game(matrix_game):
    # (1, 1) is the unique equilibrium of the embedded prisoner's dilemma
    assert optimal_type_set(matrix_game, 0, pure_profile(matrix_game, [[1], [1]])) == {0}
    assert optimal_type_set(matrix_game, 0, pure_profile(matrix_game, [[0], [1]])) == set()


def test_repair_keeps_equilibria(bos):
    for prof in bos_equilibria(bos, 1.0).values():
        assert repair(bos, prof, 1e-9) == prof


def test_repair_fixes_null_type_row():
    g, be = game_with_pure_be()
    broken = sabotage(g, be, 0, 2)
    assert regret_report(g, broken, NULL_NU, 0.0).verdict_ne_nu
    out = repair_checked(g, broken, NULL_NU, 1e-9)
    assert out.precondition_ok and out.verdict_be
    diff = [(i, k) for i in range(2) for k in range(3)
            if not np.array_equal(out.profile.tables[i][k], broken.tables[i][k])]
    assert set(diff) <= {(0, 2)}
    assert repair(g, out.profile, 1e-9) == out.profile


def test_repair_at_positive_type_is_flagged():
    g, be = game_with_pure_be()
    broken = sabotage(g, be, 0, 0)
    assert interim_regrets(g, broken)[0][0] > 1e-9
    out = repair_checked(g, broken, NULL_NU, 1e-9)
    # the edit also moves the opponent's values, so more rows may change
    assert not out.precondition_ok
    assert (0, 0) in out.changed


@given(st.integers(0, 10_000))
def test_repair_of_surrogate_equilibria(seed):
    g = dominated_game(seed)
    for prof in enumerate_pure_equilibria(g, NULL_NU, 0.0):
        fixed = repair(g, prof, 0.0)
        assert regret_report(g, fixed, NULL_NU, 0.0).verdict_be
        assert repair(g, fixed, 0.0) == fixed
        # a version of the input: identical wherever nu is positive
        for t_in, t_out, w in zip(prof.tables, fixed.tables, NULL_NU.nu):
            assert np.array_equal(t_in[w > 0], t_out[w > 0])


@given(st.integers(0, 10_000), st.data())
def test_opponent_values_ignore_null_rows(seed, data):
    g = dominated_game(seed)
    rng = np.random.default_rng(seed)
    prof = StrategyProfile.from_tables([rng.dirichlet([1, 1], size=3) for _ in range(2)])
    j = data.draw(st.integers(0, 1))
    edited = prof.replace(j, np.vstack([prof.tables[j][:2], rng.dirichlet([1, 1])]))
    # null sets are inherited atomwise, so the values agree exactly
    assert opponent_values_unchanged(g, prof, edited, 1 - j) == 0.0


# -- certification ---------------------------------------------------------------------


@given(st.integers(0, 10_000))
def test_characterization_on_random_games(seed):
    g = generate_random_game(seed, (2, 2, 3, 2))
    report = certify_characterization(g, eps=0.0, n_measures=5, seed=seed)
    assert report.ok, report.to_dict()


def test_bos_equilibria_certify(bos):
    rng = np.random.default_rng(0)
    nus = [canonical_dominating_measure(bos)]
    nus += [ProductMeasure(rng.dirichlet(np.ones(9)), [rng.dirichlet(np.ones(9)) for _ in range(2)])
            for _ in range(20)]
    for prof in bos_equilibria(bos, 1.0).values():
        for nu in nus:
            assert regret_report(bos, prof, nu, 1e-9).verdict_ne_nu


def test_null_type_converse_needs_repair():
    g, be = game_with_pure_be()
    broken = sabotage(g, be, 0, 2)
    assert not regret_report(g, broken, NULL_NU, 0.0).verdict_be
    report = certify_characterization(g, eps=0.0, n_measures=3, measures=[NULL_NU])
    assert report.ok and report.repaired >= 1


# -- equivalence and closure -----------------------------------------------------------


@given(st.integers(0, 10_000))
def test_equivalent_measures_agree(seed):
    g = generate_random_game(seed, (2, 2, 3, 2))
    rng = np.random.default_rng(seed)
    nu = canonical_dominating_measure(g)
    nu2 = ProductMeasure(rng.dirichlet([1, 1]), [rng.dirichlet(np.ones(3)) for _ in range(2)])
    for _ in range(10):
        choices = [rng.integers(2, size=3) for _ in range(2)]
        res = certify_nu_equivalence(g, pure_profile(g, choices), nu, nu2)
        assert res.agree


def test_regret_outside_both_supports():
    g, be = game_with_pure_be()
    broken = sabotage(g, be, 1, 2)
    other = ProductMeasure([0.9, 0.1], [[0.2, 0.8, 0.0], [0.6, 0.4, 0.0]])
    res = certify_nu_equivalence(g, broken, NULL_NU, other)
    assert res.ne_nu and res.ne_nu_prime and res.agree


def test_support_mismatch():
    g = generate_random_game(0, (2, 2, 3, 2))
    with pytest.raises(SupportMismatch):
        certify_nu_equivalence(g, pure_profile(g, [[0] * 3] * 2), canonical_dominating_measure(g), NULL_NU)


def test_closure_with_full_support():
    for seed in range(10):
        g = generate_random_game(seed, (2, 2, 3, 2))
        assert bne_closure_check(g, canonical_dominating_measure(g), 0.0).ok


def test_closure_with_null_type():
    g, be = game_with_pure_be()
    broken = sabotage(g, be, 0, 2)
    res = bne_closure_check(g, NULL_NU, 0.0, profiles=[broken])
    assert res.ok and res.checked == 1
    assert bne_closure_check(g, NULL_NU, 0.0).ok


def test_closure_rejects_non_equilibrium():
    g = make_game(["a1", "a2"], [[[1.0]], [[1.0]]])
    nu = canonical_dominating_measure(g)
    res = bne_closure_check(g, nu, 0.0, profiles=[pure_profile(g, [[0], [1]])])
    assert not res.ok and res.witnesses == [{"player": 1, "type": 0}]
