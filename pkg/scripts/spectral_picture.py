"""Block spectra of the Lichnerowicz Laplacian, eigentensor checks and verdicts.

Usage: python scripts/spectral_picture.py [--t-max 12] [--n-t 512] [--modes 8]
       [--perturb 0.0] [--json spectrum.json]
"""
import argparse

from ahspectrum.geometry import RadialPerturbation, build_conformal_perturbation, build_hyperbolic_disk
from ahspectrum.spectral import SpectrumConfig, spectral_picture


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--t-max", type=float, default=12.0)
    p.add_argument("--n-t", type=int, default=512)
    p.add_argument("--modes", type=int, default=8)
    p.add_argument("--perturb", type=float, default=0.0, help="radial conformal amplitude on [2, 6]")
    p.add_argument("--json")
    args = p.parse_args()
    model = build_hyperbolic_disk(0.0, args.t_max, args.n_t, max(32, 2 * args.modes + 2))
    if args.perturb:
        model = build_conformal_perturbation(model, RadialPerturbation(args.perturb, 2.0, 6.0))
    report = spectral_picture(model, SpectrumConfig(modes=tuple(range(args.modes + 1))))
    for m, block in report.blocks.items():
        vals = ", ".join(f"{v:.5f}" for v in block["eigenvalues"][:6])
        print(f"m={m}: {vals}")
    for row in report.eigentensors:
        print(f"n={row['n']}: |D S + 2S|/|S| = {row['r_minus2']:.2e}, "
              f"|D Lw|/|Lw| = {row['r_zero']:.2e} (leak {row['leak']:.1e})")
    for k, v in sorted(report.verdicts.items()):
        print(f"verdict ({k}): {v['status']}")
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json())


if __name__ == "__main__":
    main()
