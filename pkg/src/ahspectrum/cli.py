"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

from . import identities as ids
from .config import SUITES, RunConfig, load_config
from .decompositions import NumericalError
from .fields import RepresentationError, UsageError
from .geometry import ConfigurationError, DomainError
from .quasimodes import quasimode_scan
from .spectral import spectral_picture

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not overwrite values given before the subcommand
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file", **kw)
    common.add_argument("--out", help="output directory (created if missing)", **kw)
    common.add_argument("--seed", type=int, help="first random seed", **kw)
    common.add_argument("--only", type=_names, help=f"comma list of suites: {', '.join(SUITES)}",
                        **kw)
    common.add_argument("--grid-ladder", type=_ints, help="comma list of N_t for identity ladders",
                        **kw)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ahspectrum", description=__doc__.splitlines()[0],
                     parents=[_common(False)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common(True)
    sub.add_parser("verify", parents=[common], help="operator identities and inequality checks")
    sub.add_parser("quasimode", parents=[common], help="quasi-mode residual scan")
    sub.add_parser("spectrum", parents=[common], help="block spectra and verdicts")
    sub.add_parser("report", parents=[common], help="summarise outputs already in --out")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out=args.out)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    verify = cfg.verify
    if args.only:
        verify = dataclasses.replace(verify, suites=tuple(args.only))
    if args.grid_ladder:
        verify = dataclasses.replace(verify, ladder=tuple(args.grid_ladder))
    return dataclasses.replace(cfg, verify=verify).validate()


def _outdir(cfg: RunConfig, name: str) -> Path:
    path = Path(cfg.out) / name
    path.mkdir(parents=True, exist_ok=True)
    (path / "config.ini").write_text(cfg.to_ini())
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"


# -- verify ------------------------------------------------------------------

def run_suites(cfg: RunConfig) -> list[ids.IdentityReport]:
    m, v = cfg.model, cfg.verify
    ladder = v.ladder_config(cfg.seed, m.n_theta)
    base = m.build()
    reports: list[ids.IdentityReport] = []
    for suite in v.suites:
        if suite == "check_div_lring":
            reports.append(ids.check_div_lring(base, ladder))
        elif suite == "check_commutators":
            reports.extend(ids.check_commutators(base, ladder).values())
        elif suite == "check_weitzenbock":
            reports.append(ids.check_weitzenbock(base, ladder))
        elif suite == "check_norm_identity":
            reports.append(ids.check_norm_identity(base, ladder))
        elif suite == "negative_control":
            reports.append(ids.negative_control(m.disk(), m.perturbed(), ladder))
        elif suite == "check_tt_characterization":
            reports.extend(ids.check_tt_characterization(base, v.tt_n, ladder).values())
        elif suite == "tt_negative_control":
            reports.append(ids.tt_negative_control(base, cfg.seed, ladder))
        elif suite == "check_kernel_tensors":
            reports.extend(ids.check_kernel_tensors(base, v.tt_n, cfg=ladder).values())
        elif suite == "check_energy_inequalities":
            finest = m.build(n_t=max(v.ladder))
            reports.append(ids.check_energy_inequalities(
                finest, range(cfg.seed, cfg.seed + v.rayleigh_samples), tuple(v.rayleigh_support),
                v.floor))
    return reports


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["report", "h", "residual", "fitted_order", "passed"])
    for rep in reports:
        for h, res in rep.residuals:
            w.writerow([rep.name, repr(h), repr(res), repr(rep.fitted_order), rep.passed])
    return buf.getvalue()


def cmd_verify(cfg: RunConfig) -> int:
    reports = run_suites(cfg)
    out = _outdir(cfg, "verify")
    (out / "reports.json").write_text(_dump([r.to_dict() for r in reports]))
    (out / "reports.csv").write_text(reports_csv(reports))
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  order={r.fitted_order:.3f}  "
              f"finest={r.residuals[-1][1]:.3e}")
    ok = all(r.passed for r in reports)
    (out / "summary.json").write_text(_dump({"passed": ok, "reports": {r.name: r.passed for r in reports}}))
    return EXIT_OK if ok else EXIT_FAIL


# -- quasimode ------------------------------------------------------------------

def cmd_quasimode(cfg: RunConfig) -> int:
    scan = quasimode_scan(cfg.quasimode.scan_config())
    out = _outdir(cfg, "quasimode")
    (out / "scan.csv").write_text(scan.to_csv())
    ok = all(flags["ratio"] for flags in scan.passed.values())
    (out / "summary.json").write_text(_dump({**scan.summary(), "passed": ok}))
    for lam in cfg.quasimode.lambdas:
        (out / f"ratio_lambda_{lam!r}.dat").write_text(scan.plot_data(lam))
    for lam, s in scan.slopes.items():
        print(f"lambda={lam}  ratio slope={s['ratio']:.3f}  |h|^2 slope={s['norm_sq']:.3f}")
    return EXIT_OK if ok else EXIT_FAIL


# -- spectrum -------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> int:
    s = cfg.spectrum
    model = cfg.model.build(t_min=s.t_min, t_max=s.t_max, n_t=s.n_t, n_theta=s.n_theta)
    report = spectral_picture(model, s.spectrum_config(cfg.quasimode.scan_config()))
    out = _outdir(cfg, "spectrum")
    (out / "spectrum.json").write_text(report.to_json() + "\n")
    (out / "eigenvalues.csv").write_text(report.eigen_csv())
    (out / "histogram.dat").write_text(report.histogram_data())
    verdicts = {k: v["status"] for k, v in report.verdicts.items()}
    (out / "summary.json").write_text(_dump({"passed": report.passed, "verdicts": verdicts}))
    for k, status in sorted(verdicts.items()):
        print(f"verdict ({k}): {status}")
    return EXIT_OK if report.passed else EXIT_FAIL


# -- report -----------------------------------------------------------------------

def cmd_report(cfg: RunConfig) -> int:
    root = Path(cfg.out)
    found = {}
    for name in ("verify", "quasimode", "spectrum"):
        path = root / name / "summary.json"
        if path.is_file():
            found[name] = json.loads(path.read_text())
    if not found:
        print(f"no summaries under {root}; run verify, quasimode or spectrum first", file=sys.stderr)
        return EXIT_USAGE
    ok = all(s["passed"] for s in found.values())
    root.mkdir(parents=True, exist_ok=True)
    (root / "report.json").write_text(_dump({"passed": ok, "commands": found}))
    lines = [f"{name}: {'pass' if s['passed'] else 'FAIL'}" for name, s in found.items()]
    (root / "report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "quasimode": cmd_quasimode, "spectrum": cmd_spectrum,
            "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigurationError, DomainError, UsageError, RepresentationError) as exc:
        print(f"ahspectrum: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"ahspectrum: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"ahspectrum: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
