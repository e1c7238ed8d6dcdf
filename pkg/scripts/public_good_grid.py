"""Interim regret of the threshold profile as the public-good type grid is refined."""

import argparse

from beliefgames.equilibrium import regret_report
from beliefgames.scenarios import TruncatedNormalSpec, build_public_good_discretized


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--t-upper", type=float, default=2.0)
    ap.add_argument("--sizes", type=int, nargs="+", default=[21, 41, 51, 101, 151, 201, 301, 401, 801])
    args = ap.parse_args()
    spec = TruncatedNormalSpec(0.0, args.t_upper, args.sigma)
    print(f"{'m':>6} {'threshold':>12} {'eps':>12}")
    for m in args.sizes:
        inst = build_public_good_discretized(spec, spec, m)
        eps = regret_report(inst.game, inst.profile, None, 1.0).max_interim_regret
        print(f"{m:>6} {inst.fixed_point.thresholds[0]:>12.8f} {eps:>12.3e}")


if __name__ == "__main__":
    main()
