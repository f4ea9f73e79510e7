"""Identity residuals and fitted orders on a grid ladder of the hyperbolic disk.

Usage: python scripts/identity_ladder.py [--ladder 128,256,512] [--seeds 8] [--json out.json]
"""
import argparse
import json

from ahspectrum import identities as ids
from ahspectrum.geometry import RadialPerturbation, build_conformal_perturbation, build_hyperbolic_disk


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ladder", default="128,256,512")
    p.add_argument("--seeds", type=int, default=8)
    p.add_argument("--json")
    args = p.parse_args()
    cfg = ids.LadderConfig(n_t=tuple(int(x) for x in args.ladder.split(",")),
                           seeds=tuple(range(args.seeds)))
    base = build_hyperbolic_disk(0.5, 12.0, cfg.n_t[-1], cfg.n_theta)
    perturbed = build_conformal_perturbation(base, RadialPerturbation(0.3, 2.0, 6.0))
    reports = [ids.check_div_lring(base, cfg), *ids.check_commutators(base, cfg).values(),
               ids.check_weitzenbock(base, cfg), ids.check_norm_identity(base, cfg),
               ids.negative_control(base, perturbed, cfg),
               *ids.check_tt_characterization(base, range(2, 7), cfg).values(),
               ids.tt_negative_control(base, 0, cfg),
               *ids.check_kernel_tensors(base, range(2, 7), cfg=cfg).values()]
    print(f"{'report':24s} {'finest':>10s} {'order':>7s}  status")
    for r in reports:
        print(f"{r.name:24s} {r.residuals[-1][1]:10.3e} {r.fitted_order:7.3f}  "
              f"{'pass' if r.passed else 'FAIL'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([r.to_dict() for r in reports], fh, indent=2)


if __name__ == "__main__":
    main()
