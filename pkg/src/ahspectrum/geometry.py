"""Rotationally symmetric surface models in log-radial coordinates.

Every model is a metric ``g = a(t)^2 dt^2 + b(t)^2 dtheta^2`` on a grid of
uniformly spaced ``t`` nodes times ``n_theta`` uniform angle nodes.  For an
asymptotically hyperbolic collar ``g = r^-2 (dr^2 + ghat(r) dtheta^2)`` the
internal coordinate is ``t = -ln(r / scale)``, which turns the collar into
``dt^2 + (ghat(r) / r^2) dtheta^2``.  The Poincare disk uses ``scale = 2`` so
that ``r = 2 e^-t`` and ``b = sinh t``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import smooth

SNAPSHOT_VERSION = 1


class ConfigurationError(ValueError):
    """Invalid grid or model parameters."""


class DomainError(ValueError):
    """Input outside the domain where a construction is defined."""


class ModelKind(str, enum.Enum):
    HYPERBOLIC_DISK = "HyperbolicDisk"
    COLLAR = "Collar"
    CONFORMAL_PERTURBATION = "ConformalPerturbation"
    RADIAL = "Radial"


@dataclass(frozen=True, eq=False)
class GridChart:
    """Uniform ``t`` nodes times uniform ``theta`` nodes.

    With ``center=True`` the nodes are ``t_j = (j + 1/2) h`` and the inner
    edge is the origin of polar coordinates (no wall there); otherwise both
    ends of ``t_nodes`` are Dirichlet walls.
    """

    t_nodes: np.ndarray
    n_theta: int
    center: bool = False
    quad_weights: np.ndarray | None = None

    @property
    def n_t(self) -> int:
        return len(self.t_nodes)

    @property
    def h(self) -> float:
        return float(self.t_nodes[1] - self.t_nodes[0])

    @property
    def t_half(self) -> np.ndarray:
        return self.t_nodes[:-1] + 0.5 * self.h

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def modes(self) -> np.ndarray:
        """Resolved Fourier modes (Nyquist excluded)."""
        return np.arange((self.n_theta - 1) // 2 + 1)

    @property
    def wall_nodes(self) -> np.ndarray:
        if self.center:
            return np.array([self.n_t - 1])
        return np.array([0, self.n_t - 1])

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_t, dtype=bool)
        mask[self.wall_nodes] = False
        return mask

    def core(self, margin: int = 2) -> np.ndarray:
        """Nodes at least ``margin`` nodes away from every wall."""
        mask = np.zeros(self.n_t, dtype=bool)
        lo = 0 if self.center else margin
        mask[lo : self.n_t - margin] = True
        return mask


def make_chart(t_min: float, t_max: float, n_t: int, n_theta: int) -> GridChart:
    if n_t < 16:
        raise ConfigurationError(f"N_t must be >= 16, got {n_t}")
    if n_theta < 4 or n_theta % 2:
        raise ConfigurationError(f"n_theta must be an even integer >= 4, got {n_theta}")
    if t_min < 0 or not t_max > t_min:
        raise ConfigurationError(f"invalid t range [{t_min}, {t_max}]")
    if t_min == 0.0:
        h = t_max / (n_t - 0.5)
        return GridChart((np.arange(n_t) + 0.5) * h, n_theta, center=True)
    if t_max - t_min < 1:
        raise ConfigurationError("t_max - t_min must be >= 1")
    return GridChart(np.linspace(t_min, t_max, n_t), n_theta, center=False)


@dataclass(frozen=True)
class GhatProfile:
    """Collar profile ``r -> ghat(r)`` with its first derivative.

    Named profiles serialize; ``custom`` profiles carry callables and do not.
    """

    name: str
    params: dict = field(default_factory=dict)
    fn: Callable | None = None

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.name == "hyperbolic":
            q = 1 - r * r / 4
            return q * q, -r * q
        if self.name == "constant":
            c = float(self.params.get("value", 1.0))
            return np.full_like(r, c), np.zeros_like(r)
        if self.name == "power":
            c, k = float(self.params.get("coeff", 1.0)), float(self.params.get("power", 3.0))
            return 1 + c * r**k, c * k * r ** (k - 1)
        if self.fn is not None:
            g, dg = self.fn(r)
            return np.asarray(g, dtype=float), np.asarray(dg, dtype=float)
        raise ConfigurationError(f"unknown ghat profile {self.name!r}")

    def to_dict(self) -> dict:
        if self.fn is not None:
            return {"name": "custom"}
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True)
class RadialPerturbation:
    """Conformal factor ``u(t) = amplitude * bump(t; lo, hi)``."""

    amplitude: float
    lo: float
    hi: float
    order: int = 6

    def __call__(self, t, deriv: int = 0):
        return self.amplitude * smooth.bump(t, self.lo, self.hi, self.order, deriv)

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "lo": self.lo, "hi": self.hi, "order": self.order}


# A radial metric is a function t -> (a, a_t, b, b_t).
RadialMetric = Callable[[np.ndarray], tuple]


def _disk_metric(t):
    return np.ones_like(t), np.zeros_like(t), np.sinh(t), np.cosh(t)


def _collar_metric(ghat: GhatProfile, scale: float) -> RadialMetric:
    def metric(t):
        r = scale * np.exp(-t)
        g, dg = ghat(r)
        if np.any(g <= 0):
            raise DomainError("ghat must be strictly positive on the collar")
        sg = np.sqrt(g)
        b = sg / r
        db_dr = dg / (2 * sg * r) - sg / (r * r)
        return np.ones_like(t), np.zeros_like(t), b, -r * db_dr

    return metric


def _conformal_metric(base: RadialMetric, u: RadialPerturbation) -> RadialMetric:
    def metric(t):
        a0, a0t, b0, b0t = base(t)
        e, ut = np.exp(u(t)), u(t, 1)
        return e * a0, e * (ut * a0 + a0t), e * b0, e * (ut * b0 + b0t)

    return metric


@dataclass(frozen=True, eq=False)
class SurfaceModel:
    """Immutable surface model sampled on a chart.

    Arrays ``a, a_t, b, b_t`` hold the metric profile and its ``t``
    derivative at the nodes; ``a_half, b_half`` are sampled at the half
    nodes used by the compact Laplacian stencil.
    """

    kind: ModelKind
    chart: GridChart
    a: np.ndarray
    a_t: np.ndarray
    b: np.ndarray
    b_t: np.ndarray
    a_half: np.ndarray
    b_half: np.ndarray
    curvature: np.ndarray
    curvature_t: np.ndarray
    scale: float = 1.0
    ghat_profile: GhatProfile | None = None
    conformal_factor: np.ndarray | None = None
    metric_fn: RadialMetric | None = field(default=None, repr=False)
    spec: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def metric_tt(self) -> np.ndarray:
        return self.a**2

    @property
    def metric_thth(self) -> np.ndarray:
        return self.b**2

    @property
    def kappa(self) -> np.ndarray:
        """Geodesic curvature ``b_t / (a b)`` of the ``t = const`` circles."""
        return self.b_t / (self.a * self.b)

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weight of each (t, theta) node, shape (N_t,)."""
        return self.chart.quad_weights

    def r(self, t=None) -> np.ndarray:
        """Defining function ``r = scale * exp(-t)``."""
        return self.scale * np.exp(-(self.chart.t_nodes if t is None else np.asarray(t)))

    def t_of_r(self, r) -> np.ndarray:
        return -np.log(np.asarray(r, dtype=float) / self.scale)

    @property
    def rotationally_symmetric(self) -> bool:
        return True

    def with_grid(self, t_min: float, t_max: float, n_t: int, n_theta: int | None = None) -> "SurfaceModel":
        """Rebuild the same continuum model on another grid."""
        if not self.spec.get("serializable", True):
            return _rebuild(self, t_min, t_max, n_t, n_theta)
        snap = {**self.snapshot(), "t_min": t_min, "t_max": t_max, "n_t": n_t,
                "n_theta": n_theta or self.chart.n_theta}
        return model_from_snapshot(snap)

    def snapshot(self) -> dict:
        if not self.spec.get("serializable", True):
            raise ConfigurationError("model built from a custom profile is not serializable")
        return {"format": "ahspectrum.model", "version": SNAPSHOT_VERSION, **self.spec["params"]}

    def to_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True, indent=2)


def _ddt(f: np.ndarray, chart: GridChart) -> np.ndarray:
    """Second-order t-derivative of a radial (theta-independent) profile."""
    if chart.center:
        # radial profiles are even through the origin
        ext = np.concatenate([f[:1], f])
        d = np.gradient(ext, chart.h, edge_order=2)[1:]
        d[0] = (f[1] - f[0]) / (2 * chart.h)
        return d
    return np.gradient(f, chart.h, edge_order=2)


def curvature_from_components(chart: GridChart, a, b, b_t) -> np.ndarray:
    """Scalar curvature ``R = -2 (a b)^-1 d/dt(b_t / a)`` by finite differences."""
    return -2.0 * _ddt(b_t / a, chart) / (a * b)


def _assemble(kind, chart, metric, scale, *, curvature=None, ghat=None, u=None, params=None,
              serializable=True) -> SurfaceModel:
    a, a_t, b, b_t = metric(chart.t_nodes)
    ah, _, bh, _ = metric(chart.t_half)
    if np.any(a <= 0) or np.any(b <= 0) or np.any(ah <= 0) or np.any(bh <= 0):
        raise DomainError("metric components must be strictly positive on every node")
    if curvature is None:
        R = curvature_from_components(chart, a, b, b_t)
        R_t = _ddt(R, chart)
    else:
        R, R_t = curvature(chart.t_nodes)
    trap = np.ones(chart.n_t)
    if not chart.center:
        trap[[0, -1]] = 0.5
    weights = trap * chart.h * (2 * np.pi / chart.n_theta) * a * b
    chart = GridChart(chart.t_nodes, chart.n_theta, chart.center, weights)
    return SurfaceModel(
        kind=kind, chart=chart, a=a, a_t=a_t, b=b, b_t=b_t, a_half=ah, b_half=bh,
        curvature=np.asarray(R, dtype=float), curvature_t=np.asarray(R_t, dtype=float),
        scale=scale, ghat_profile=ghat, conformal_factor=None if u is None else u(chart.t_nodes),
        metric_fn=metric, spec={"params": params or {}, "serializable": serializable},
    )


def build_hyperbolic_disk(t_min: float, t_max: float, n_t: int, n_theta: int = 32) -> SurfaceModel:
    """Poincare disk ``dt^2 + sinh(t)^2 dtheta^2`` with exact analytic components.

    ``t_min = 0`` keeps the center of the disk (no inner wall).
    """
    chart = make_chart(t_min, t_max, n_t, n_theta)

    def curvature(t):
        # R = -2 b_tt / b with b = sinh
        return -2.0 * np.sinh(t) / np.sinh(t), np.zeros_like(t)

    params = {"kind": ModelKind.HYPERBOLIC_DISK.value, "t_min": t_min, "t_max": t_max,
              "n_t": n_t, "n_theta": n_theta}
    return _assemble(ModelKind.HYPERBOLIC_DISK, chart, _disk_metric, 2.0, curvature=curvature,
                     ghat=GhatProfile("hyperbolic"), params=params)


def build_collar_metric(ghat: GhatProfile | Callable, t_range: tuple[float, float], n_t: int,
                        n_theta: int = 32, scale: float = 1.0) -> SurfaceModel:
    """Collar ``r^-2 (dr^2 + ghat(r) dtheta^2)``; curvature by finite differences.

    ``ghat`` is a :class:`GhatProfile` or a callable ``r -> (ghat, ghat')``.
    """
    if not isinstance(ghat, GhatProfile):
        ghat = GhatProfile("custom", fn=ghat)
    t_min, t_max = t_range
    if t_min <= 0:
        raise ConfigurationError("collar charts need t_min > 0")
    chart = make_chart(t_min, t_max, n_t, n_theta)
    params = {"kind": ModelKind.COLLAR.value, "t_min": t_min, "t_max": t_max, "n_t": n_t,
              "n_theta": n_theta, "scale": scale, "ghat": ghat.to_dict()}
    return _assemble(ModelKind.COLLAR, chart, _collar_metric(ghat, scale), scale, ghat=ghat,
                     params=params, serializable=ghat.fn is None)


def build_conformal_perturbation(base: SurfaceModel, u: RadialPerturbation) -> SurfaceModel:
    """Metric ``exp(2u) g_base`` for a radial bump ``u``; curvature recomputed."""
    t = base.chart.t_nodes
    if u.amplitude == 0.0:
        lo, hi = t[0], t[-1]
    else:
        lo, hi = u.lo, u.hi
    inner = 0.0 if base.chart.center else t[0]
    if u.amplitude != 0.0 and not (inner < lo and hi < t[-1] and
                                   np.sum((t > lo) & (t < hi)) >= 8):
        raise DomainError(f"perturbation support [{u.lo}, {u.hi}] must lie strictly inside "
                          f"({inner}, {t[-1]})")
    if base.metric_fn is None:
        raise ConfigurationError("base model carries no metric function")
    params = {"kind": ModelKind.CONFORMAL_PERTURBATION.value, "base": base.spec["params"],
              "perturbation": u.to_dict(), "t_min": base.spec["params"].get("t_min"),
              "t_max": base.spec["params"].get("t_max"), "n_t": base.chart.n_t,
              "n_theta": base.chart.n_theta}
    chart = GridChart(base.chart.t_nodes, base.chart.n_theta, base.chart.center)
    if u.amplitude == 0.0:
        return _assemble(base.kind, chart, base.metric_fn, base.scale,
                         curvature=lambda s: (np.interp(s, t, base.curvature),
                                              np.interp(s, t, base.curvature_t)),
                         ghat=base.ghat_profile, params=base.spec["params"],
                         serializable=base.spec.get("serializable", True))
    return _assemble(ModelKind.CONFORMAL_PERTURBATION, chart, _conformal_metric(base.metric_fn, u),
                     base.scale, ghat=base.ghat_profile, u=u, params=params,
                     serializable=base.spec.get("serializable", True))


def build_radial_metric(metric: RadialMetric, t_range: tuple[float, float], n_t: int,
                        n_theta: int = 32, curvature: Callable | None = None) -> SurfaceModel:
    """Generic ``a^2 dt^2 + b^2 dtheta^2`` model (test fixtures: flat, round sphere)."""
    chart = make_chart(t_range[0], t_range[1], n_t, n_theta)
    return _assemble(ModelKind.RADIAL, chart, metric, 1.0, curvature=curvature,
                     serializable=False)


def model_from_snapshot(snap: dict) -> SurfaceModel:
    """Rebuild a model from :meth:`SurfaceModel.snapshot` output."""
    if snap.get("version", SNAPSHOT_VERSION) != SNAPSHOT_VERSION:
        raise ConfigurationError(f"unsupported model snapshot version {snap.get('version')}")
    kind = snap.get("kind")
    if kind == ModelKind.HYPERBOLIC_DISK.value:
        return build_hyperbolic_disk(snap["t_min"], snap["t_max"], snap["n_t"], snap["n_theta"])
    if kind == ModelKind.COLLAR.value:
        g = snap["ghat"]
        return build_collar_metric(GhatProfile(g["name"], g.get("params", {})),
                                   (snap["t_min"], snap["t_max"]), snap["n_t"], snap["n_theta"],
                                   snap.get("scale", 1.0))
    if kind == ModelKind.CONFORMAL_PERTURBATION.value:
        base = dict(snap["base"])
        for key in ("t_min", "t_max", "n_t", "n_theta"):
            if snap.get(key) is not None:
                base[key] = snap[key]
        return build_conformal_perturbation(model_from_snapshot(base),
                                            RadialPerturbation(**snap["perturbation"]))
    raise ConfigurationError(f"unknown model kind {kind!r}")


def _rebuild(model, t_min, t_max, n_t, n_theta):
    chart = make_chart(t_min, t_max, n_t, n_theta or model.chart.n_theta)
    return _assemble(model.kind, chart, model.metric_fn, model.scale, ghat=model.ghat_profile,
                     serializable=False)


@dataclass(frozen=True, eq=False)
class ChristoffelField:
    """``gamma[k, i, j]`` is the symbol with upper index ``k`` (0 = t, 1 = theta)."""

    gamma: np.ndarray

    def __getitem__(self, idx):
        return self.gamma[idx]


def diagonal_christoffel(A, dA, B, dB) -> np.ndarray:
    """Symbols of ``A(x) dx^2 + B(x) dtheta^2`` given the x-derivatives of A, B."""
    A, dA, B, dB = map(np.asarray, (A, dA, B, dB))
    gamma = np.zeros((2, 2, 2) + A.shape)
    gamma[0, 0, 0] = dA / (2 * A)
    gamma[0, 1, 1] = -dB / (2 * A)
    gamma[1, 0, 1] = gamma[1, 1, 0] = dB / (2 * B)
    return gamma


def christoffel(model: SurfaceModel) -> ChristoffelField:
    """Levi-Civita symbols in the internal (t, theta) chart, per t node."""
    if "christoffel" not in model._cache:
        g = diagonal_christoffel(model.a**2, 2 * model.a * model.a_t, model.b**2,
                                 2 * model.b * model.b_t)
        model._cache["christoffel"] = ChristoffelField(g)
    return model._cache["christoffel"]


def christoffel_in_r(model: SurfaceModel) -> dict:
    """Collar symbols in the (r, theta) chart, transformed from the t chart.

    Uses ``t = -ln(r / scale)``: ``dt/dr = -1/r`` and ``d2t/dr2 = 1/r^2``.
    """
    gam = christoffel(model).gamma
    r = model.r()
    dr_dt, dt_dr, d2t_dr2 = -r, -1 / r, 1 / r**2
    return {
        "r_rr": dr_dt * (gam[0, 0, 0] * dt_dr**2 + d2t_dr2),
        "r_thth": dr_dt * gam[0, 1, 1],
        "th_thr": gam[1, 1, 0] * dt_dr,
    }


def scalar_curvature(model: SurfaceModel) -> np.ndarray:
    return model.curvature
