"""Brute-force radial exponent fit against the closed-form indicial roots.

Usage: python scripts/indicial_fit.py [--lambdas 0.25,0.5,1.0,2.0]
"""
import argparse

from ahspectrum.quasimodes import indicial_fit


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lambdas", default="0.25,0.5,1.0,2.0")
    args = p.parse_args()
    print(f"{'lambda':>7s} {'fitted s':>22s} {'closed form':>22s} {'gap':>9s} {'residual':>9s}")
    for lam in (float(x) for x in args.lambdas.split(",")):
        fit = indicial_fit(lam)
        root = max(fit.closed_form, key=lambda s: s.imag)
        print(f"{lam:7.3f} {fit.exponent.real:11.5f}{fit.exponent.imag:+10.5f}i "
              f"{root.real:11.5f}{root.imag:+10.5f}i {fit.nearest_root_gap:9.2e} {fit.residual:9.2e}")


if __name__ == "__main__":
    main()
