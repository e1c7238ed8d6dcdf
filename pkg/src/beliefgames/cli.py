"""Command-line interface: check, solve, verify, enumerate, reproduce.

Exit codes: 0 success, 1 semantic negative, 2 input error, 3 no convergence.
JSON reports go to standard output, short human summaries to standard error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .dsl import ExprError
from .equilibrium import EPS_EXACT, EPS_SOLVER, regret_report, repair
from .formats import (
    InputError,
    dumps_report,
    load_game,
    load_measure,
    load_profile,
    profile_to_dict,
    save_game,
    save_profile,
)
from .game import GameError, validate_game
from .measures import (
    DominationError,
    canonical_dominating_measure,
    check_absolute_continuity,
    domination_condition_number,
    find_common_prior,
    gaussian_consistency_criterion,
)
from .scenarios import (
    TruncatedNormalSpec,
    bos_equilibria,
    build_battle_of_sexes,
    build_public_good_discretized,
    cournot_complete_information,
    cournot_grid_oracle,
    cournot_inconsistent,
    gaussian_belief_game,
    public_good_fixed_points,
    shared_signal_game,
)
from .solvers import (
    METHODS,
    STARTS,
    EnumerationGuardError,
    SolveConfig,
    enumerate_pure_bayesian,
    enumerate_pure_equilibria,
    solve,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3
SCENARIOS = ("bos", "public-good", "cournot", "gaussian-consistency", "shared-signal")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _summary(text: str, ok: bool | None = None) -> None:
    use_color = ok is not None and "NO_COLOR" not in os.environ and sys.stderr.isatty()
    if use_color:
        text = f"\033[{32 if ok else 31}m{text}\033[0m"
    print(text, file=sys.stderr)


def _emit(report: dict) -> None:
    print(dumps_report(report))


def _csv_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _measure(arg, g, embedded):
    if arg is None:
        return embedded or canonical_dominating_measure(g)
    if arg == "canonical":
        return canonical_dominating_measure(g)
    nu = load_measure(arg)
    try:
        nu.check_dims(g)
    except GameError as e:
        raise InputError(f"{arg}: {e}") from None
    return nu


def _choices(profile) -> list[list[int]]:
    return [np.argmax(t, axis=1).tolist() for t in profile.tables]


# -- commands -----------------------------------------------------------------


def cmd_check(args) -> int:
    g, embedded = load_game(args.game)
    nu = _measure(args.nu, g, embedded)
    validation = validate_game(g)
    cont = check_absolute_continuity(g, nu)
    cons = find_common_prior(g)
    report = {
        "game": g.name,
        "valid": validation.ok,
        "violations": list(validation.violations),
        "absolute_continuity": {
            "ok": cont.ok,
            "witness": None if cont.ok else cont.witness.to_dict(),
        },
        "condition_number": domination_condition_number(g, nu) if cont.ok else None,
        "consistency": {
            "feasible": cons.feasible,
            "residual": cons.residual,
            "iterations": cons.iterations,
        },
    }
    _emit(report)
    word = "feasible" if cons.feasible else "infeasible"
    _summary(f"consistency: {word} (residual={cons.residual:.3g})")
    if not cont.ok:
        _summary(f"absolute continuity fails: {cont.witness.describe(g)}", False)
        return EXIT_NEGATIVE
    _summary("well-formed; beliefs dominated by the measure", True)
    return EXIT_OK


def cmd_solve(args) -> int:
    g, embedded = load_game(args.game)
    nu = _measure(args.nu, g, embedded)
    # a weighted regret below eps * (smallest positive weight) forces every
    # supported type to be eps-optimal, so repair only touches null types
    floor = min(float(w[w > 0].min()) for w in nu.nu)
    solver_eps = args.eps * floor
    try:
        cfg = SolveConfig(
            method=args.method, eps=solver_eps, max_iters=args.max_iters, seed=args.seed,
            damping=args.damping, start=args.start,
        )
    except ValueError as e:
        raise InputError(str(e)) from None
    result = solve(g, nu, cfg)
    report = {
        "converged": result.converged,
        "iterations": result.iterations,
        "method": result.method,
        "solver_eps": solver_eps,
        "solver_surrogate_regret": result.final_surrogate_regret.tolist()
        if np.all(np.isfinite(result.final_surrogate_regret)) else None,
    }
    if result.profile is None:
        _emit(report)
        _summary("no pure surrogate equilibrium found", False)
        return EXIT_NONCONVERGED
    fixed = repair(g, result.profile, args.eps)
    rep = regret_report(g, fixed, nu, args.eps)
    report.update(
        max_interim_regret=rep.max_interim_regret,
        surrogate_regret=rep.surrogate_regret.tolist(),
        verdicts={"BE": rep.verdict_be, "NE_nu": rep.verdict_ne_nu},
        profile=profile_to_dict(fixed)["strategies"],
    )
    if args.out:
        save_profile(fixed, args.out)
    _emit(report)
    if not result.converged:
        _summary(f"solver did not converge in {result.iterations} iterations", False)
        return EXIT_NONCONVERGED
    if not rep.verdict_be:
        _summary(f"not a Bayesian equilibrium after repair (regret {rep.max_interim_regret:.3g})", False)
        return EXIT_NEGATIVE
    _summary(f"Bayesian equilibrium at eps={args.eps:g}", True)
    return EXIT_OK


def cmd_verify(args) -> int:
    g, embedded = load_game(args.game)
    nu = _measure(args.nu, g, embedded)
    profile = load_profile(args.strategy, g)
    rep = regret_report(g, profile, nu, args.eps)
    _emit(rep.to_dict())
    if rep.verdict_be:
        _summary(f"Bayesian equilibrium at eps={args.eps:g}", True)
        return EXIT_OK
    i, k = rep.worst
    _summary(f"not an equilibrium: player {i + 1}, type {k} has regret {rep.max_interim_regret:.3g}", False)
    return EXIT_NEGATIVE


def cmd_enumerate(args) -> int:
    g, embedded = load_game(args.game)
    bayes = [_choices(p) for p in enumerate_pure_bayesian(g, args.eps, args.constant)]
    report = {"eps": args.eps, "constant_only": args.constant, "bayesian": bayes}
    if args.nu is not None:
        nu = _measure(args.nu, g, embedded)
        surrogate = [_choices(p) for p in enumerate_pure_equilibria(g, nu, args.eps, args.constant)]
        report["surrogate"] = surrogate
        report["surrogate_only"] = [c for c in surrogate if c not in bayes]
        report["bayesian_only"] = [c for c in bayes if c not in surrogate]
    _emit(report)
    _summary(f"{len(bayes)} pure Bayesian equilibria")
    return EXIT_OK


# -- reproduce ----------------------------------------------------------------


def _reproduce_bos(args) -> dict:
    t0 = time.perf_counter()
    g = build_battle_of_sexes(args.c, sigma_sq=(args.s1, args.s2))
    nu = canonical_dominating_measure(g)
    rows = []
    for name, prof in bos_equilibria(g, args.c).items():
        rep = regret_report(g, prof, nu, EPS_EXACT)
        rows.append({
            "profile": name, "p": float(prof.tables[0][0, 0]), "q": float(prof.tables[1][0, 0]),
            "max_interim_regret": rep.max_interim_regret, "verdict_BE": rep.verdict_be,
        })
    constant = [_choices(p) for p in enumerate_pure_bayesian(g, EPS_EXACT, constant=True)]
    pure = [_choices(p) for p in enumerate_pure_bayesian(g, EPS_EXACT)]
    cons = find_common_prior(g)
    if args.save_game:
        save_game(g, args.save_game)
    for r in rows:
        _summary(f"(p, q) = ({r['p']:.4f}, {r['q']:.4f})  regret {r['max_interim_regret']:.2e}  BE={r['verdict_BE']}")
    return {
        "scenario": "bos", "c": args.c, "equilibria": rows,
        "pure_constant": constant,
        "pure_bayesian": pure,
        "consistency": {"feasible": cons.feasible, "residual": cons.residual},
        "seconds": time.perf_counter() - t0,
    }


def _reproduce_public_good(args) -> dict:
    specs = (TruncatedNormalSpec(0.0, args.t_U, args.sigma1), TruncatedNormalSpec(0.0, args.t_U, args.sigma2))
    starts = [(0.5, 0.5), (0.1, 0.9), (0.9, 0.1), (0.1, 0.1), (0.9, 0.9)]
    points = public_good_fixed_points(specs, starts)
    rows = []
    for k, m in enumerate(args.m):
        inst = build_public_good_discretized(*specs, m)
        rep = regret_report(inst.game, inst.profile, None, 1.0)
        rows.append({"m": m, "eps": rep.max_interim_regret})
        if k == 0 and args.save_game:
            save_game(inst.game, args.save_game)
    main = build_public_good_discretized(*specs, args.m[0]).fixed_point
    _summary(f"t* = ({main.thresholds[0]:.6f}, {main.thresholds[1]:.6f}), residual {main.residual:.1e}")
    for r in rows:
        _summary(f"m = {r['m']}: eps = {r['eps']:.3e}")
    return {
        "scenario": "public-good",
        "thresholds": list(main.thresholds), "residual": main.residual,
        "converged": main.converged, "method": main.method,
        "fixed_points": [list(p.thresholds) for p in points],
        "discretized": rows,
    }


def _reproduce_cournot(args) -> dict:
    g = cournot_complete_information(args.intercept, args.cost, args.points)
    nu = canonical_dominating_measure(g)
    res = solve(g, nu, SolveConfig(max_iters=500))
    quantities = [float(g.actions[i][c[0]]) for i, c in enumerate(_choices(res.profile))]
    oracle = cournot_grid_oracle(args.intercept, args.cost, args.points)
    g2 = cournot_inconsistent(action_points=args.action_points)
    nu2 = canonical_dominating_measure(g2)
    res2 = solve(g2, nu2, SolveConfig(eps=1e-3, max_iters=500))
    fixed = repair(g2, res2.profile, 1e-3)
    rep = regret_report(g2, fixed, nu2, 1e-3)
    if args.save_game:
        save_game(g2, args.save_game)
    _summary(f"complete information: {quantities} (oracle {oracle}, textbook {(args.intercept - args.cost) / 3:.4f})")
    _summary(f"inconsistent beliefs: regret {rep.max_interim_regret:.2e}, BE={rep.verdict_be}")
    return {
        "scenario": "cournot",
        "complete_information": {
            "quantities": quantities, "oracle": [list(x) for x in oracle],
            "matches_oracle": tuple(quantities) in oracle, "converged": res.converged,
        },
        "inconsistent": {
            "types": g2.types[0].tolist(),
            "quantities": [[float(g2.actions[i][a]) for a in c] for i, c in enumerate(_choices(fixed))],
            "converged": res2.converged, "max_interim_regret": rep.max_interim_regret,
            "verdict_BE": rep.verdict_be,
        },
    }


def _reproduce_gaussian(args) -> dict:
    crit = gaussian_consistency_criterion(args.s1, args.s2)
    cons = find_common_prior(gaussian_belief_game(args.s1, args.s2))
    _summary(f"criterion {crit:.6g}; residual {cons.residual:.3e} ({'feasible' if cons.feasible else 'infeasible'})")
    return {
        "scenario": "gaussian-consistency", "sigma1_sq": args.s1, "sigma2_sq": args.s2,
        "criterion": crit, "residual": cons.residual, "feasible": cons.feasible,
    }


def _reproduce_shared_signal(args) -> dict:
    rows = []
    for m in args.m:
        g = shared_signal_game(m)
        rows.append({"m": m, "condition_number": domination_condition_number(g, canonical_dominating_measure(g))})
        _summary(f"m = {m}: condition number {rows[-1]['condition_number']:g}")
    return {"scenario": "shared-signal", "rows": rows}


def cmd_reproduce(args) -> int:
    handlers = {
        "bos": _reproduce_bos,
        "public-good": _reproduce_public_good,
        "cournot": _reproduce_cournot,
        "gaussian-consistency": _reproduce_gaussian,
        "shared-signal": _reproduce_shared_signal,
    }
    try:
        report = handlers[args.scenario](args)
    except ValueError as e:
        if isinstance(e, (InputError, GameError, ExprError, DominationError)):
            raise
        raise InputError(str(e)) from None
    _emit(report)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="beliefgames", description="Bayesian games with heterogeneous beliefs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="validate a game and report domination and consistency")
    c.add_argument("game")
    c.add_argument("--nu", help="measure file or 'canonical' (default: the game's own, else canonical)")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("solve", help="find a surrogate equilibrium, repair it, verify it")
    s.add_argument("game")
    s.add_argument("--method", choices=METHODS, default="iterated_br")
    s.add_argument("--eps", type=float, default=EPS_SOLVER)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iters", type=int, default=1000)
    s.add_argument("--damping", type=float, default=1.0)
    s.add_argument("--start", choices=STARTS, default="uniform")
    s.add_argument("--nu")
    s.add_argument("--out", help="write the repaired profile here")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="regret report of a strategy profile")
    v.add_argument("game")
    v.add_argument("strategy")
    v.add_argument("--eps", type=float, default=EPS_EXACT)
    v.add_argument("--nu")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("enumerate", help="list pure Bayesian and surrogate equilibria")
    e.add_argument("game")
    e.add_argument("--eps", type=float, default=EPS_EXACT)
    e.add_argument("--nu", help="also enumerate surrogate equilibria under this measure")
    e.add_argument("--constant", action="store_true", help="only profiles that ignore the own type")
    e.set_defaults(func=cmd_enumerate)

    r = sub.add_parser("reproduce", help="run a built-in scenario")
    rs = r.add_subparsers(dest="scenario", required=True, parser_class=_Parser, metavar="{" + ",".join(SCENARIOS) + "}")
    b = rs.add_parser("bos")
    b.add_argument("--c", type=float, default=1.0)
    b.add_argument("--s1", type=float, default=2.0)
    b.add_argument("--s2", type=float, default=3.0)
    b.add_argument("--save-game")
    pg = rs.add_parser("public-good")
    pg.add_argument("--sigma1", type=float, default=1.0)
    pg.add_argument("--sigma2", type=float, default=1.0)
    pg.add_argument("--t-U", dest="t_U", type=float, default=2.0)
    pg.add_argument("--m", type=_csv_ints, default=[201, 401])
    pg.add_argument("--save-game")
    co = rs.add_parser("cournot")
    co.add_argument("--intercept", type=float, default=10.0)
    co.add_argument("--cost", type=float, default=2.0)
    co.add_argument("--points", type=int, default=101)
    co.add_argument("--action-points", type=int, default=51)
    co.add_argument("--save-game")
    gc = rs.add_parser("gaussian-consistency")
    gc.add_argument("--s1", type=float, default=2.0)
    gc.add_argument("--s2", type=float, default=3.0)
    sh = rs.add_parser("shared-signal")
    sh.add_argument("--m", type=_csv_ints, default=[4, 8, 16])
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # usage errors and --help
        return int(e.code or 0)
    try:
        return args.func(args)
    except (InputError, GameError, ExprError, EnumerationGuardError) as e:
        _summary(f"error: {e}", False)
        return EXIT_INPUT
    except DominationError as e:
        _summary(f"absolute continuity fails: {e}", False)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
