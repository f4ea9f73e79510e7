"""Quasi-mode residual table over lambda and cutoff scale R.

Usage: python scripts/quasimode_scan.py [--lambdas 0.25,0.5,1.0] [--radii 2,4,8,16]
       [--chi-order 9] [--csv scan.csv]
"""
import argparse

from ahspectrum.quasimodes import ScanConfig, quasimode_scan


def _floats(text):
    return tuple(float(x) for x in text.split(","))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lambdas", type=_floats, default=(0.25, 0.5, 1.0))
    p.add_argument("--radii", type=_floats, default=(2.0, 4.0, 8.0, 16.0))
    p.add_argument("--chi-order", type=int, default=9)
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--csv")
    args = p.parse_args()
    res = quasimode_scan(ScanConfig(args.lambdas, args.radii, args.chi_order, args.h))
    print(res.to_csv(), end="")
    for lam, s in res.slopes.items():
        print(f"lambda={lam}: ratio slope {s['ratio']:.3f}, |h|^2 slope {s['norm_sq']:.3f}, "
              f"|res|^2 slope {s['res_sq']:.3f}, monotone {s['monotone_ratio']}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(res.to_csv())


if __name__ == "__main__":
    main()
