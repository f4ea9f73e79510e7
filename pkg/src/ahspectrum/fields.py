"""Rank-tagged tensor fields sampled on a surface model.

Components are covariant coordinate components in the internal (t, theta)
chart, stored as full arrays of shape ``(2,)*rank + (N_t, n_theta)`` (index
0 is ``t``, index 1 is ``theta``).  Symmetric tensors are stored with both
off-diagonal entries.
"""
from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass

import numpy as np

from . import smooth
from .geometry import ModelKind, SurfaceModel


class Rank(enum.IntEnum):
    SCALAR = 0
    ONE_FORM = 1
    SYM_TWO_TENSOR = 2
    THREE_TENSOR = 3


class UsageError(ValueError):
    """Operation called with incompatible arguments."""


class RepresentationError(TypeError):
    """Nodal-only operation given a modal field."""


def _index_factor(model: SurfaceModel, idx: tuple) -> np.ndarray:
    f = np.ones_like(model.a)
    for i in idx:
        f = f * (model.a if i == 0 else model.b)
    return f


def frame_scale(model: SurfaceModel, rank: int) -> np.ndarray:
    """Array ``s`` with frame components = coordinate components / s.

    Shape ``(2,)*rank + (N_t, 1)``.
    """
    s = np.empty((2,) * rank + (model.chart.n_t,))
    for idx in itertools.product((0, 1), repeat=rank):
        s[idx] = _index_factor(model, idx)
    return s[..., None]


@dataclass(frozen=True, eq=False)
class TensorField:
    rank: Rank
    components: np.ndarray
    model: SurfaceModel
    tracefree: bool = False

    def __post_init__(self):
        object.__setattr__(self, "rank", Rank(self.rank))
        shape = (2,) * int(self.rank) + (self.model.chart.n_t, self.model.chart.n_theta)
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != shape:
            raise UsageError(f"components of shape {comps.shape} do not conform to {shape}")
        object.__setattr__(self, "components", comps)
        if self.tracefree:
            if self.rank != Rank.SYM_TWO_TENSOR:
                raise UsageError("only symmetric two-tensors can be flagged trace-free")
            tr = pointwise_trace(comps, self.model)
            scale = max(1.0, float(np.max(np.sqrt(pointwise_norm2(comps, self.model)))))
            if np.max(np.abs(tr)) > 1e-12 * scale:
                raise UsageError("field flagged trace-free has non-zero trace")

    @property
    def frame(self) -> np.ndarray:
        """Orthonormal-frame components ``(e_1 = a^-1 d_t, e_2 = b^-1 d_theta)``."""
        return self.components / frame_scale(self.model, self.rank)

    @classmethod
    def from_frame(cls, rank, frame, model, tracefree=False) -> "TensorField":
        return cls(rank, np.asarray(frame) * frame_scale(model, int(rank)), model, tracefree)

    @classmethod
    def zeros(cls, rank, model) -> "TensorField":
        shape = (2,) * int(rank) + (model.chart.n_t, model.chart.n_theta)
        return cls(rank, np.zeros(shape), model)

    def like(self, components, tracefree=None) -> "TensorField":
        return TensorField(self.rank, components, self.model,
                           self.tracefree if tracefree is None else tracefree)

    def __add__(self, other):
        _check_same(self, other)
        return self.like(self.components + other.components, self.tracefree and other.tracefree)

    def __sub__(self, other):
        _check_same(self, other)
        return self.like(self.components - other.components, self.tracefree and other.tracefree)

    def __neg__(self):
        return self.like(-self.components)

    def __mul__(self, c):
        c = np.asarray(c, dtype=float)
        if c.ndim == 0:
            return self.like(self.components * c)
        # radial profile (N_t,) or nodal scalar (N_t, n_theta)
        c = c[:, None] if c.ndim == 1 else c
        return self.like(self.components * c)

    __rmul__ = __mul__

    def to_modal(self) -> "ModalField":
        coeffs = np.fft.rfft(self.components, axis=-1)
        return ModalField(self.rank, coeffs, self.model, self.tracefree)


@dataclass(frozen=True, eq=False)
class ModalField:
    """Fourier coefficients in theta (``numpy.fft.rfft`` convention)."""

    rank: Rank
    coeffs: np.ndarray
    model: SurfaceModel
    tracefree: bool = False

    def to_nodal(self) -> TensorField:
        comps = np.fft.irfft(self.coeffs, n=self.model.chart.n_theta, axis=-1)
        return TensorField(self.rank, comps, self.model, False).like(
            comps, self.tracefree and _is_tracefree(comps, self.model))


def _is_tracefree(comps, model) -> bool:
    tr = pointwise_trace(comps, model)
    scale = max(1.0, float(np.max(np.sqrt(pointwise_norm2(comps, model)))))
    return bool(np.max(np.abs(tr)) <= 1e-12 * scale)


def _check_same(a, b):
    if not isinstance(a, TensorField) or not isinstance(b, TensorField):
        raise UsageError("expected TensorField operands")
    if a.rank != b.rank:
        raise UsageError(f"rank mismatch: {a.rank.name} vs {b.rank.name}")
    if a.model is not b.model and a.model.chart.t_nodes.shape != b.model.chart.t_nodes.shape:
        raise UsageError("fields live on different charts")


# -- pointwise algebra on raw component arrays ---------------------------------

def inverse_metric(model: SurfaceModel) -> np.ndarray:
    """``g^{ij}`` per t node, shape (2, 2, N_t, 1)."""
    ginv = np.zeros((2, 2, model.chart.n_t, 1))
    ginv[0, 0, :, 0] = 1 / model.a**2
    ginv[1, 1, :, 0] = 1 / model.b**2
    return ginv


def metric_components(model: SurfaceModel) -> np.ndarray:
    g = np.zeros((2, 2, model.chart.n_t, 1))
    g[0, 0, :, 0] = model.a**2
    g[1, 1, :, 0] = model.b**2
    return g


def pointwise_inner(u: np.ndarray, v: np.ndarray, model: SurfaceModel, rank: int) -> np.ndarray:
    """``<u, v>_g`` per node (works for real or complex modal arrays)."""
    s2 = frame_scale(model, rank) ** 2
    return np.sum((u * v) / s2, axis=tuple(range(rank))) if rank else u * v


def pointwise_norm2(u: np.ndarray, model: SurfaceModel) -> np.ndarray:
    rank = u.ndim - 2
    return pointwise_inner(u, u, model, rank)


def pointwise_trace(u: np.ndarray, model: SurfaceModel) -> np.ndarray:
    return u[0, 0] / model.a[:, None] ** 2 + u[1, 1] / model.b[:, None] ** 2


def metric_field(model: SurfaceModel) -> TensorField:
    g = np.broadcast_to(metric_components(model), (2, 2, model.chart.n_t, model.chart.n_theta))
    return TensorField(Rank.SYM_TWO_TENSOR, g.copy(), model)


def scalar_field(values, model: SurfaceModel) -> TensorField:
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = np.repeat(v[:, None], model.chart.n_theta, axis=1)
    return TensorField(Rank.SCALAR, v, model)


# -- integrals ----------------------------------------------------------------

def _integrate(density: np.ndarray, model: SurfaceModel, mask=None) -> float:
    w = model.weights if mask is None else np.where(mask, model.weights, 0.0)
    return float(np.sum(w[:, None] * density))


def l2_inner_product(a: TensorField, b: TensorField, mask=None) -> float:
    """Quadrature of ``<a, b>_g dmu_g``; ``mask`` restricts to a set of t nodes."""
    _check_same(a, b)
    return _integrate(pointwise_inner(a.components, b.components, a.model, a.rank), a.model, mask)


def l2_norm(a: TensorField, mask=None) -> float:
    return float(np.sqrt(max(l2_inner_product(a, a, mask), 0.0)))


@dataclass(frozen=True)
class NormReport:
    l2: float
    h1: float
    l4: float


def norms(a: TensorField, mask=None) -> NormReport:
    """L2, H1 (value plus covariant derivative) and L4 norms."""
    from .operators import covariant_derivative

    l2sq = l2_inner_product(a, a, mask)
    grad = covariant_derivative(a)
    h1sq = l2sq + l2_inner_product(grad, grad, mask)
    l4 = _integrate(pointwise_norm2(a.components, a.model) ** 2, a.model, mask) ** 0.25
    return NormReport(float(np.sqrt(l2sq)), float(np.sqrt(h1sq)), float(l4))


def restrict_tracefree(u: TensorField) -> TensorField:
    """``u - (tr_g u / 2) g``."""
    if u.rank != Rank.SYM_TWO_TENSOR:
        raise UsageError("restrict_tracefree expects a symmetric two-tensor")
    tr = pointwise_trace(u.components, u.model)
    out = u.components - 0.5 * tr * metric_components(u.model)
    # remove the rounding residue of the trace exactly on the diagonal
    resid = pointwise_trace(out, u.model)
    out[1, 1] -= resid * u.model.b[:, None] ** 2
    return TensorField(Rank.SYM_TWO_TENSOR, out, u.model, tracefree=True)


# -- explicit fields ----------------------------------------------------------

def _disk_radius(model: SurfaceModel) -> np.ndarray:
    # harmonicity of functions and 1-forms is conformally invariant in 2D
    base = model.spec.get("params", {}).get("base", {}) if model.spec else {}
    on_disk = model.kind == ModelKind.HYPERBOLIC_DISK or (
        model.kind == ModelKind.CONFORMAL_PERTURBATION
        and base.get("kind") == ModelKind.HYPERBOLIC_DISK.value)
    if not on_disk:
        raise UsageError("harmonic forms are pulled back from the unit disk; need a HyperbolicDisk "
                         "model or a conformal perturbation of one")
    return np.tanh(model.chart.t_nodes / 2)


def harmonic_function(n: int, model: SurfaceModel, conjugate: bool = False) -> TensorField:
    """``Re(z^n)`` (or ``Im(z^n)``) pulled back by ``|z| = tanh(t/2)``."""
    s = _disk_radius(model)[:, None]
    th = model.chart.theta[None, :]
    vals = s**n * (np.sin(n * th) if conjugate else np.cos(n * th))
    return TensorField(Rank.SCALAR, vals, model)


def harmonic_oneform(n: int, model: SurfaceModel, conjugate: bool = False) -> TensorField:
    """Pullback of ``d Re(z^n)`` (``d Im(z^n)`` if ``conjugate``) to the (t, theta) chart."""
    if n < 1:
        raise UsageError(f"harmonic_oneform needs n >= 1, got {n}")
    s = _disk_radius(model)[:, None]
    th = model.chart.theta[None, :]
    ds_dt = (1 - s * s) / 2
    c, si = np.cos(n * th), np.sin(n * th)
    if conjugate:
        w_t, w_th = n * s ** (n - 1) * ds_dt * si, n * s**n * c
    else:
        w_t, w_th = n * s ** (n - 1) * ds_dt * c, -n * s**n * si
    return TensorField(Rank.ONE_FORM, np.stack([w_t, w_th]), model)


def random_bump_field(rank, support: tuple[float, float], seed: int, model: SurfaceModel, *,
                      max_mode: int = 3, order: int = 6, tracefree: bool = False) -> TensorField:
    """Smooth random field supported in ``support`` (a t-interval).

    All random draws happen before touching the grid, so one seed gives the
    same continuum field on every grid.  Frame components are a smoothstep
    bump in t times a random linear radial modulation times a random
    trigonometric polynomial in theta of degree ``max_mode``.
    """
    rank = Rank(rank)
    lo, hi = support
    t = model.chart.t_nodes
    inner = 0.0 if model.chart.center else t[0]
    if not (inner < lo < hi < t[-1]):
        raise UsageError(f"support {support} must lie strictly inside ({inner}, {t[-1]})")
    if rank == Rank.THREE_TENSOR:
        raise UsageError("random bumps are not provided for three-tensors")
    rng = np.random.default_rng(seed)
    n_comp = 2**int(rank)
    coef = rng.standard_normal((n_comp, 2, max_mode + 1))
    slope = rng.uniform(-0.5, 0.5, n_comp)

    th = model.chart.theta
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    radial = smooth.bump(t, lo, hi, order)
    k = np.arange(max_mode + 1)[:, None]
    frame = np.empty((n_comp, len(t), len(th)))
    for c in range(n_comp):
        ang = coef[c, 0] @ np.cos(k * th) + coef[c, 1] @ np.sin(k * th)
        frame[c] = (radial * (1 + slope[c] * (t - mid) / half))[:, None] * ang[None, :]
    frame = frame.reshape((2,) * int(rank) + frame.shape[1:])
    if rank == Rank.SYM_TWO_TENSOR:
        frame = 0.5 * (frame + frame.swapaxes(0, 1))
    field = TensorField.from_frame(rank, frame, model)
    if tracefree:
        field = restrict_tracefree(field)
    return field


# -- CSV export ---------------------------------------------------------------

COLUMN_NAMES = {
    Rank.SCALAR: [((), "u")],
    Rank.ONE_FORM: [((0,), "w_t"), ((1,), "w_theta")],
    Rank.SYM_TWO_TENSOR: [((0, 0), "h_tt"), ((0, 1), "h_ttheta"), ((1, 1), "h_thetatheta")],
    Rank.THREE_TENSOR: [((0, 1, 0), "T_ttheta_t"), ((0, 1, 1), "T_ttheta_theta")],
}


def field_to_csv(field: TensorField, path) -> None:
    """Write ``t, theta, <independent components>`` with t varying slowest."""
    cols = COLUMN_NAMES[field.rank]
    t, th = field.model.chart.t_nodes, field.model.chart.theta
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "theta"] + [name for _, name in cols])
        for j, tj in enumerate(t):
            for k, tk in enumerate(th):
                writer.writerow([repr(float(tj)), repr(float(tk))]
                                + [repr(float(field.components[idx + (j, k)])) for idx, _ in cols])


def field_from_csv(path, rank, model: SurfaceModel) -> TensorField:
    rank = Rank(rank)
    cols = COLUMN_NAMES[rank]
    n_t, n_th = model.chart.n_t, model.chart.n_theta
    comps = np.zeros((2,) * int(rank) + (n_t, n_th))
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != n_t * n_th:
        raise UsageError(f"CSV has {len(rows)} rows, chart needs {n_t * n_th}")
    for row_no, row in enumerate(rows):
        j, k = divmod(row_no, n_th)
        for idx, name in cols:
            comps[idx + (j, k)] = float(row[name])
    if rank == Rank.SYM_TWO_TENSOR:
        comps[1, 0] = comps[0, 1]
    if rank == Rank.THREE_TENSOR:
        comps[1, 0] = -comps[0, 1]
    return TensorField(rank, comps, model)
