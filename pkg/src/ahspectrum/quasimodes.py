"""Radial quasi-modes of the Lichnerowicz Laplacian on an asymptotically hyperbolic end.

With ``x = -ln r`` the construction is

* cutoff ``Psi_R(x) = chi(x / 4R) (1 - chi(x / R))`` supported in ``R < x < 8R``
  and equal to 1 on ``2R <= x <= 4R``;
* profile ``f(r) = sqrt(r) (a cos(mu ln r) + b sin(mu ln r))``, ``mu^2 = lambda - 1/4``;
* tensor ``h_R = F(r) (dr^2 - ghat dtheta^2)`` with
  ``F = f''/2 + f'/r - ghat' f' / (4 ghat)`` evaluated on ``f_R = Psi_R f``.

``h_R`` is the trace-free Hessian of ``f_R``; its frame components are
``+-F r^2`` in Fourier mode 0.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import operators as op
from . import smooth
from .fields import Rank, TensorField, l2_norm, scalar_field
from .geometry import ConfigurationError, DomainError, SurfaceModel, build_hyperbolic_disk


class OutOfRangeError(ConfigurationError):
    """Spectral parameter outside the oscillatory range lambda >= 1/4."""


# -- cutoff -------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffProfile:
    """``Psi_R`` as a function of ``x = -ln rho``; ``chi_order`` is the smoothstep degree."""

    R: float
    chi_order: int = 9
    constants: dict = field(default_factory=dict, compare=False)

    @property
    def _k(self) -> int:
        return (self.chi_order - 1) // 2

    @property
    def support(self) -> tuple[float, float]:
        return self.R, 8 * self.R

    @property
    def plateau(self) -> tuple[float, float]:
        return 2 * self.R, 4 * self.R

    def chi(self, y, deriv: int = 0):
        return smooth.step_down(y, self._k, deriv)

    def __call__(self, x, deriv: int = 0):
        """``d^k Psi / dx^k`` for ``k <= 4``."""
        x = np.asarray(x, dtype=float)
        R = self.R
        outer = [self.chi(x / (4 * R), k) / (4 * R) ** k for k in range(deriv + 1)]
        inner = [(1.0 if k == 0 else 0.0) - self.chi(x / R, k) / R**k for k in range(deriv + 1)]
        return sum(math.comb(deriv, k) * outer[k] * inner[deriv - k] for k in range(deriv + 1))

    def of_rho(self, rho, deriv: int = 0):
        """``d^k Psi / d rho^k`` for ``k <= 2``."""
        rho = np.asarray(rho, dtype=float)
        x = -np.log(rho)
        if deriv == 0:
            return self(x)
        if deriv == 1:
            return -self(x, 1) / rho
        if deriv == 2:
            return (self(x, 2) + self(x, 1)) / rho**2
        raise ValueError("of_rho supports deriv <= 2")

    def measure_constants(self, samples: int = 20001) -> dict:
        """``C_k = sup |d^k Psi / d rho^k| R rho^k`` over the support (k = 1, 2)."""
        x = np.linspace(self.R, 8 * self.R, samples)
        rho = np.exp(-x)
        return {k: float(np.max(np.abs(self.of_rho(rho, k)) * self.R * rho**k)) for k in (1, 2)}


def _x_range(model: SurfaceModel) -> tuple[float, float]:
    t = model.chart.t_nodes
    lo = 0.0 if model.chart.center else t[0]
    shift = math.log(model.scale)
    return lo - shift, t[-1] - shift


def build_cutoff(R: float, chi_order: int = 9, model: SurfaceModel | None = None) -> CutoffProfile:
    """Cutoff ``Psi_R``; with ``model`` given, its support must fit the chart."""
    if R <= 0:
        raise ConfigurationError(f"cutoff scale R must be positive, got {R}")
    if chi_order < 5 or chi_order % 2 == 0:
        raise ConfigurationError(f"chi_order must be an odd degree >= 5, got {chi_order}")
    if model is not None:
        x_lo, x_hi = _x_range(model)
        if not (x_lo < R and 8 * R < x_hi):
            need = 8 * R + math.log(model.scale)
            raise ConfigurationError(
                f"support R < -ln r < 8R = ({R}, {8 * R}) does not fit the chart "
                f"(-ln r in ({x_lo:.3f}, {x_hi:.3f})); need t_max > {need:.3f} and "
                f"t_min < {R + math.log(model.scale):.3f}")
    cut = CutoffProfile(float(R), int(chi_order))
    cut.constants.update(cut.measure_constants())
    return cut


# -- profiles -----------------------------------------------------------------

@dataclass(frozen=True)
class QuasiModeSpec:
    lam: float
    R: float = 4.0
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.lam < 0.25:
            raise OutOfRangeError(
                f"lambda = {self.lam} < 1/4: mu = sqrt(lambda - 1/4) is undefined and the "
                "profile is not oscillatory")
        if self.a == 0 and self.b == 0:
            raise ConfigurationError("a and b must not both vanish")

    @property
    def mu(self) -> float:
        return math.sqrt(self.lam - 0.25)


@dataclass(frozen=True)
class RadialProfile:
    """``f(r) = sqrt(r) (a cos(mu ln r) + b sin(mu ln r))`` and derivatives in ``r``."""

    spec: QuasiModeSpec

    def _g(self, L):
        s, mu = self.spec, self.spec.mu
        return (s.a * np.cos(mu * L) + s.b * np.sin(mu * L),
                mu * (-s.a * np.sin(mu * L) + s.b * np.cos(mu * L)))

    def __call__(self, r, deriv: int = 0):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise DomainError("radial_profile needs r > 0")
        g, dg = self._g(np.log(r))
        if deriv == 0:
            return np.sqrt(r) * g
        if deriv == 1:
            return (0.5 * g + dg) / np.sqrt(r)
        if deriv == 2:
            return -self.spec.lam * g / r**1.5
        raise ValueError("radial_profile supports deriv <= 2")


def radial_profile(spec: QuasiModeSpec) -> RadialProfile:
    return RadialProfile(spec)


@dataclass(frozen=True)
class CutProfile:
    """``f_R = Psi_R f`` with derivatives in ``r`` by the product rule."""

    f: RadialProfile
    cutoff: CutoffProfile

    def __call__(self, r, deriv: int = 0):
        psi = [self.cutoff.of_rho(r, k) for k in range(deriv + 1)]
        fk = [self.f(r, k) for k in range(deriv + 1)]
        return sum(math.comb(deriv, k) * psi[k] * fk[deriv - k] for k in range(deriv + 1))


def _ghat_of(model: SurfaceModel):
    if model.ghat_profile is None:
        raise ConfigurationError("model has no collar profile ghat")
    return model.ghat_profile


def profile_F(f, model: SurfaceModel):
    """``r -> F_f(r) = f''/2 + f'/r - ghat'(r) f'(r) / (4 ghat(r))``."""
    ghat = _ghat_of(model)

    def F(r):
        r = np.asarray(r, dtype=float)
        g, dg = ghat(r)
        d1 = f(r, 1)
        return 0.5 * f(r, 2) + d1 / r - 0.25 * dg / g * d1

    return F


# -- the tensor family --------------------------------------------------------

def build_quasimode(spec: QuasiModeSpec, cutoff: CutoffProfile, model: SurfaceModel) -> TensorField:
    """``h_R`` in Fourier mode 0: frame components ``F r^2 (e1 e1 - e2 e2)``."""
    build_cutoff(cutoff.R, cutoff.chi_order, model)
    r = model.r()
    p = profile_F(CutProfile(radial_profile(spec), cutoff), model)(r) * r * r
    n_t, n_th = model.chart.n_t, model.chart.n_theta
    frame = np.zeros((2, 2, n_t, n_th))
    frame[0, 0] = p[:, None]
    frame[1, 1] = -p[:, None]
    return TensorField.from_frame(Rank.SYM_TWO_TENSOR, frame, model, tracefree=True)


def build_quasimode_hessian(spec: QuasiModeSpec, cutoff: CutoffProfile, model: SurfaceModel) -> TensorField:
    """Second route: ``Lring(d f_R)`` with the discrete operators."""
    build_cutoff(cutoff.R, cutoff.chi_order, model)
    fr = CutProfile(radial_profile(spec), cutoff)(model.r())
    return op.conformal_killing(op.d(scalar_field(fr, model)))


@dataclass(frozen=True)
class QuasiModeResidual:
    res: float
    norm: float
    ratio: float


def quasimode_residual(lam: float, h: TensorField, mask=None) -> QuasiModeResidual:
    """``|(Delta_L - lambda) h|``, ``|h|`` and their ratio (L2 on the model)."""
    r = op.laplacian("Lichnerowicz", h) - lam * h
    res, norm = l2_norm(r, mask), l2_norm(h, mask)
    return QuasiModeResidual(res, norm, res / norm)


# -- indicial exponents ---------------------------------------------------------

def indicial_roots(lam: float) -> tuple[complex, complex]:
    """Roots of ``s^2 + 3 s + (lambda + 2)``: ``(-3 -+ sqrt(1 - 4 lambda)) / 2``."""
    disc = np.sqrt(complex(1 - 4 * lam))
    return complex((-3 - disc) / 2), complex((-3 + disc) / 2)


@dataclass(frozen=True)
class IndicialFit:
    lam: float
    exponent: complex
    residual: float
    closed_form: tuple[complex, complex]

    @property
    def nearest_root_gap(self) -> float:
        return float(min(abs(self.exponent - s) for s in self.closed_form))


def _power_block(model, sigma, tau):
    """Assembled-basis vector of ``Re(r^(s+2))`` in the trace-free mode-0 block."""
    r = model.r()
    p = r ** (sigma + 2) * np.cos(tau * np.log(r))
    v = np.concatenate([p, np.zeros_like(p)])
    v[np.tile(~model.chart.interior, 2)] = 0.0
    return v


def indicial_residual(model, lam, sigma, tau, block=None, margin: int = 8) -> float:
    """Relative ``|(Delta_L - lambda) Re(r^s) q| / |Re(r^s) q|`` on interior nodes of the mode-0 block."""
    A = block if block is not None else op.assemble("Lichnerowicz", 0, model)
    v = _power_block(model, sigma, tau)
    out = A.matrix @ v - lam * v
    n_t = model.chart.n_t
    keep = np.zeros(2 * n_t, dtype=bool)
    keep[margin:n_t - margin] = True
    w = A.weight
    return float(np.sqrt(np.sum(w[keep] * out[keep] ** 2) / np.sum(w[keep] * v[keep] ** 2)))


def indicial_fit(lam: float, model: SurfaceModel | None = None, sigma_grid=None,
                 complex_exponent: bool | None = None) -> IndicialFit:
    """Brute-force exponent ``s`` minimising the residual of ``Re(r^s) (dr^2 - ghat dtheta^2)``.

    Default model: a far-out hyperbolic collar ``t in [20, 30]``.  The search
    scans real ``sigma`` (and ``tau >= 0`` when ``lambda > 1/4``) on a grid
    and polishes with Nelder-Mead.
    """
    model = model or build_hyperbolic_disk(20.0, 30.0, 2048, 4)
    A = op.assemble("Lichnerowicz", 0, model)
    sigma_grid = np.linspace(-4.0, 1.0, 201) if sigma_grid is None else np.asarray(sigma_grid)
    if complex_exponent is None:
        complex_exponent = lam > 0.25
    taus = np.linspace(0.0, 3.0, 61) if complex_exponent else np.array([0.0])
    grid = np.array([[indicial_residual(model, lam, s, tau, A) for tau in taus] for s in sigma_grid])
    i, j = np.unravel_index(np.argmin(grid), grid.shape)
    start = np.array([sigma_grid[i], taus[j]])
    if complex_exponent:
        fn = lambda z: indicial_residual(model, lam, z[0], abs(z[1]), A)
        sol = optimize.minimize(fn, start, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        s = complex(sol.x[0], abs(sol.x[1]))
        res = float(sol.fun)
    else:
        fn = lambda z: indicial_residual(model, lam, z, 0.0, A)
        lo, hi = sigma_grid[max(i - 1, 0)], sigma_grid[min(i + 1, len(sigma_grid) - 1)]
        sol = optimize.minimize_scalar(fn, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-10})
        s, res = complex(sol.x, 0.0), float(sol.fun)
    return IndicialFit(lam, s, res, indicial_roots(lam))


def envelope_fit(spec: QuasiModeSpec, model: SurfaceModel, x_window: tuple[float, float]) -> dict:
    """Fit ``F ~ r^p (A cos(mu ln r) + B sin(mu ln r))`` over ``-ln r`` in ``x_window``.

    Returns the fitted exponent ``p`` and frequency ``mu`` (nonlinear least
    squares on the uncut profile).
    """
    x = np.linspace(*x_window, 4001)
    r = model.scale * 0 + np.exp(-x)
    F = profile_F(radial_profile(spec), model)(r)
    L = np.log(r)

    def resid(z):
        p, mu, A, B = z
        return r ** p * (A * np.cos(mu * L) + B * np.sin(mu * L)) / r**-1.5 - F / r**-1.5

    F0 = F * r**1.5
    guess = [-1.5, spec.mu, F0[0], 0.0]
    sol = optimize.least_squares(resid, guess, xtol=1e-14, ftol=1e-14)
    p, mu, A, B = sol.x
    return {"exponent": float(p), "mu": float(abs(mu)), "A": float(A), "B": float(B)}


# -- scans --------------------------------------------------------------------

@dataclass(frozen=True)
class ScanConfig:
    lambdas: tuple[float, ...] = (0.25, 0.5, 1.0)
    Rs: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    chi_order: int = 9
    h_target: float = 0.02
    n_theta: int = 4
    a: float = 1.0
    b: float = 0.0
    ratio_slope_max: float = -0.7
    norm_slope_min: float = 0.7


def scan_model(R: float, lam: float, cfg: ScanConfig) -> SurfaceModel:
    """Disk annulus just containing the support, resolving the oscillation."""
    shift = math.log(2.0)
    t_min, t_max = max(R + shift - 1.0, 0.5), 8 * R + shift + 1.0
    h = cfg.h_target
    mu = math.sqrt(lam - 0.25) if lam >= 0.25 else 0.0
    if mu > 0:
        h = min(h, (2 * math.pi / mu) / 16)
    n_t = max(int(math.ceil((t_max - t_min) / h)) + 1, 16)
    model = build_hyperbolic_disk(t_min, t_max, n_t, cfg.n_theta)
    if mu > 0 and model.chart.h > (2 * math.pi / mu) / 16:
        raise ConfigurationError("grid does not resolve the oscillation (need h <= (2 pi / mu) / 16)")
    return model


def _slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


@dataclass
class ScanResult:
    rows: list[dict]
    slopes: dict
    passed: dict
    config: ScanConfig

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "R", "res_l2", "norm_l2", "ratio", "slope_partial"])
        for row in self.rows:
            sp = row["slope_partial"]
            w.writerow([repr(row["lambda"]), repr(row["R"]), repr(row["res_l2"]),
                        repr(row["norm_l2"]), repr(row["ratio"]), "" if sp is None else repr(sp)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"slopes": self.slopes, "passed": self.passed,
                "ratio_slope_max": self.config.ratio_slope_max,
                "norm_slope_min": self.config.norm_slope_min}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)

    def plot_data(self, lam: float) -> str:
        """Two whitespace-separated columns: ``ln R`` and ``ln ratio``."""
        lines = [f"{math.log(r['R'])!r} {math.log(r['ratio'])!r}" for r in self.rows
                 if r["lambda"] == lam]
        return "\n".join(lines) + "\n"


def quasimode_scan(cfg: ScanConfig = ScanConfig()) -> ScanResult:
    """Residual / norm table over ``(lambda, R)`` with per-lambda log-log slopes."""
    for lam in cfg.lambdas:
        QuasiModeSpec(lam, a=cfg.a, b=cfg.b)  # rejects lambda < 1/4 before any work
    rows, slopes, passed = [], {}, {}
    for lam in cfg.lambdas:
        cells = []
        for R in cfg.Rs:
            model = scan_model(R, lam, cfg)
            spec = QuasiModeSpec(lam, R, cfg.a, cfg.b)
            cut = build_cutoff(R, cfg.chi_order, model)
            out = quasimode_residual(lam, build_quasimode(spec, cut, model))
            cells.append((R, out))
        Rs = np.array([c[0] for c in cells])
        ratio = np.array([c[1].ratio for c in cells])
        norm2 = np.array([c[1].norm ** 2 for c in cells])
        res2 = np.array([c[1].res ** 2 for c in cells])
        for k, (R, out) in enumerate(cells):
            partial = None if k == 0 else float(
                math.log(ratio[k] / ratio[k - 1]) / math.log(R / cells[k - 1][0]))
            rows.append({"lambda": lam, "R": R, "res_l2": out.res, "norm_l2": out.norm,
                         "ratio": out.ratio, "slope_partial": partial})
        key = repr(lam)
        slopes[key] = {"ratio": _slope(Rs, ratio), "norm_sq": _slope(Rs, norm2),
                       "res_sq": _slope(Rs, res2),
                       "norm_sq_over_R": float(np.min(norm2 / Rs)),
                       "monotone_ratio": bool(np.all(np.diff(ratio) < 0))}
        passed[key] = {"ratio": slopes[key]["ratio"] <= cfg.ratio_slope_max,
                       "norm_sq": slopes[key]["norm_sq"] >= cfg.norm_slope_min}
    return ScanResult(rows, slopes, passed, cfg)
