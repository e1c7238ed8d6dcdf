"""List the pure Bayesian equilibria of the coordination game, constant and type-dependent."""

import argparse

from beliefgames.scenarios import build_battle_of_sexes
from beliefgames.solvers import enumerate_pure_bayesian


def describe(profile) -> str:
    # action index 0 plays L; show each player's choices across the type grid
    return "  ".join("".join("LR"[int(row.argmax())] for row in table) for table in profile.tables)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--eps", type=float, default=1e-9)
    args = ap.parse_args()
    for c in args.c:
        g = build_battle_of_sexes(c)
        constant = enumerate_pure_bayesian(g, args.eps, constant=True)
        everything = enumerate_pure_bayesian(g, args.eps)
        print(f"c = {c}: {len(constant)} constant, {len(everything)} in total")
        for p in everything:
            print("   ", describe(p))


if __name__ == "__main__":
    main()
