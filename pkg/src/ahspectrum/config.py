"""Run configuration: dataclasses read from and written to INI files.

Sections and keys (lists are comma separated)::

    [run]        out, seed
    [model]      kind, t_min, t_max, n_t, n_theta,
                 perturbation_amplitude, perturbation_lo, perturbation_hi
    [verify]     suites, ladder, seeds, support, core_margin, tt_n,
                 rayleigh_samples, rayleigh_support, floor
    [quasimode]  lambdas, radii, chi_order, h_target, n_theta
    [spectrum]   t_min, t_max, n_t, n_theta, modes, count, t_extra, refine,
                 persist_tol, cluster_tol, eigentensor_n

Every key is optional; missing keys take the defaults below.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .geometry import (ConfigurationError, ModelKind, RadialPerturbation, SurfaceModel,
                       build_conformal_perturbation, build_hyperbolic_disk)
from .identities import LadderConfig
from .quasimodes import ScanConfig
from .spectral import SpectrumConfig

SUITES = ("check_div_lring", "check_commutators", "check_weitzenbock", "check_norm_identity",
          "negative_control", "check_tt_characterization", "tt_negative_control",
          "check_kernel_tensors", "check_energy_inequalities")


@dataclass(frozen=True)
class ModelConfig:
    kind: str = ModelKind.HYPERBOLIC_DISK.value
    t_min: float = 0.5
    t_max: float = 12.0
    n_t: int = 512
    n_theta: int = 32
    perturbation_amplitude: float = 0.3
    perturbation_lo: float = 2.0
    perturbation_hi: float = 6.0

    def validate(self) -> None:
        if self.kind not in (ModelKind.HYPERBOLIC_DISK.value, ModelKind.CONFORMAL_PERTURBATION.value):
            raise ConfigurationError(f"model.kind must be HyperbolicDisk or ConformalPerturbation, "
                                     f"got {self.kind!r}")
        if self.n_t < 8:
            raise ConfigurationError(f"model.n_t must be >= 8, got {self.n_t}")
        if self.n_theta < 4 or self.n_theta % 2:
            raise ConfigurationError(f"model.n_theta must be even and >= 4, got {self.n_theta}")
        if not 0.0 <= self.t_min < self.t_max:
            raise ConfigurationError(f"need 0 <= t_min < t_max, got {self.t_min}, {self.t_max}")

    @property
    def perturbation(self) -> RadialPerturbation:
        return RadialPerturbation(self.perturbation_amplitude, self.perturbation_lo,
                                  self.perturbation_hi)

    def build(self, t_min=None, t_max=None, n_t=None, n_theta=None) -> SurfaceModel:
        self.validate()
        disk = build_hyperbolic_disk(self.t_min if t_min is None else t_min,
                                     self.t_max if t_max is None else t_max,
                                     n_t or self.n_t, n_theta or self.n_theta)
        if self.kind == ModelKind.CONFORMAL_PERTURBATION.value:
            return build_conformal_perturbation(disk, self.perturbation)
        return disk

    def disk(self) -> SurfaceModel:
        return replace(self, kind=ModelKind.HYPERBOLIC_DISK.value).build()

    def perturbed(self) -> SurfaceModel:
        return replace(self, kind=ModelKind.CONFORMAL_PERTURBATION.value).build()


@dataclass(frozen=True)
class VerifyConfig:
    suites: tuple[str, ...] = SUITES
    ladder: tuple[int, ...] = (128, 256, 512)
    seeds: int = 8
    support: tuple[float, float] = (1.5, 7.0)
    core_margin: int = 4
    tt_n: tuple[int, ...] = (2, 3, 4, 5, 6)
    rayleigh_samples: int = 64
    rayleigh_support: tuple[float, float] = (1.5, 7.0)
    floor: float = 0.24

    def validate(self) -> None:
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise ConfigurationError(f"unknown suite(s) {bad}; choose from {list(SUITES)}")
        if len(self.ladder) < 2 or any(n < 8 for n in self.ladder):
            raise ConfigurationError(f"grid ladder needs >= 2 sizes, each >= 8, got {self.ladder}")
        if self.seeds < 1 or self.rayleigh_samples < 1:
            raise ConfigurationError("seeds and rayleigh_samples must be positive")

    def ladder_config(self, seed: int, n_theta: int) -> LadderConfig:
        return LadderConfig(tuple(self.ladder), n_theta, tuple(range(seed, seed + self.seeds)),
                            tuple(self.support), self.core_margin)


@dataclass(frozen=True)
class QuasimodeConfig:
    lambdas: tuple[float, ...] = (0.25, 0.5, 1.0)
    radii: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    chi_order: int = 9
    h_target: float = 0.02
    n_theta: int = 4

    def validate(self) -> None:
        low = [lam for lam in self.lambdas if lam < 0.25]
        if low:
            raise ConfigurationError(f"lambda = {low[0]} is below 1/4; quasi-modes need lambda >= 1/4")
        if len(self.radii) < 2 or min(self.radii) <= 0:
            raise ConfigurationError(f"need >= 2 positive radii, got {self.radii}")
        if self.h_target <= 0:
            raise ConfigurationError("h_target must be positive")

    def scan_config(self) -> ScanConfig:
        return ScanConfig(tuple(self.lambdas), tuple(self.radii), self.chi_order, self.h_target,
                          self.n_theta)


@dataclass(frozen=True)
class SpectrumSection:
    t_min: float = 0.0
    t_max: float = 12.0
    n_t: int = 512
    n_theta: int = 32
    modes: tuple[int, ...] = tuple(range(9))
    count: int = 10
    t_extra: float = 2.0
    refine: int = 2
    persist_tol: float = 0.1
    cluster_tol: float = 1e-3
    eigentensor_n: tuple[int, ...] = (2, 3, 4, 5, 6)

    def validate(self) -> None:
        if not self.modes:
            raise ConfigurationError("spectrum.modes must not be empty")
        if self.n_t < 16:
            raise ConfigurationError(f"spectrum.n_t must be >= 16, got {self.n_t}")
        if max(self.modes) > self.n_theta // 2 - 1:
            raise ConfigurationError(f"modes up to {max(self.modes)} need n_theta > {2 * max(self.modes) + 1}")

    def spectrum_config(self, scan: ScanConfig) -> SpectrumConfig:
        return SpectrumConfig(modes=tuple(self.modes), count=self.count, t_extra=self.t_extra,
                              refine=self.refine, persist_tol=self.persist_tol,
                              cluster_tol=self.cluster_tol,
                              eigentensor_n=tuple(self.eigentensor_n), scan=scan)


@dataclass(frozen=True)
class RunConfig:
    out: str = "out"
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    quasimode: QuasimodeConfig = field(default_factory=QuasimodeConfig)
    spectrum: SpectrumSection = field(default_factory=SpectrumSection)

    def validate(self) -> "RunConfig":
        for part in (self.model, self.verify, self.quasimode, self.spectrum):
            part.validate()
        return self

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["run"] = {"out": self.out, "seed": str(self.seed)}
        for name in ("model", "verify", "quasimode", "spectrum"):
            part = getattr(self, name)
            cp[name] = {f.name: _format(getattr(part, f.name)) for f in fields(part)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


_SECTIONS = {"model": ModelConfig, "verify": VerifyConfig, "quasimode": QuasimodeConfig,
             "spectrum": SpectrumSection}


def _format(value) -> str:
    if isinstance(value, (tuple, list)):
        return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _parse(raw: str, template, where: str):
    try:
        if isinstance(template, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(template, tuple):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            kind = type(template[0]) if template else str
            return tuple(kind(x) for x in items)
        return type(template)(raw.strip())
    except ValueError as exc:
        raise ConfigurationError(f"{where}: cannot parse {raw!r} ({exc})") from None


def parse_ini(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    unknown = set(cp.sections()) - set(_SECTIONS) - {"run"}
    if unknown:
        raise ConfigurationError(f"unknown config section(s) {sorted(unknown)}")
    kwargs = {}
    if cp.has_section("run"):
        run = cp["run"]
        bad = set(run) - {"out", "seed"}
        if bad:
            raise ConfigurationError(f"unknown key(s) in [run]: {sorted(bad)}")
        if "out" in run:
            kwargs["out"] = run["out"]
        if "seed" in run:
            kwargs["seed"] = _parse(run["seed"], 0, "run.seed")
    for name, cls in _SECTIONS.items():
        if not cp.has_section(name):
            continue
        defaults = cls()
        names = {f.name for f in fields(cls)}
        bad = set(cp[name]) - names
        if bad:
            raise ConfigurationError(f"unknown key(s) in [{name}]: {sorted(bad)}")
        values = {k: _parse(v, getattr(defaults, k), f"{name}.{k}") for k, v in cp[name].items()}
        kwargs[name] = dataclasses.replace(defaults, **values)
    return RunConfig(**kwargs)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file {p} does not exist")
    return parse_ini(p.read_text())
