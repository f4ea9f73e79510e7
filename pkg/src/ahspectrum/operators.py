"""Differential operators on tensor fields over rotationally symmetric models.

Two discretizations live here.

* First-order operators (covariant derivative and everything built from it)
  use coordinate components, Christoffel symbols, centred differences in
  ``t`` (one-sided second order at walls) and exact differentiation per
  Fourier mode in ``theta``.
* Laplacians use a compact three-point stencil on orthonormal-frame
  components.  The frame is parallel along ``e_1 = a^-1 d_t`` so the radial
  part is a weighted scalar Laplacian per component; the angular part is
  ``-(b^-1 d_theta + kappa G)^2`` with ``G`` the infinitesimal rotation.
  Wall rows are Dirichlet (the operator returns 0 there).

Every operator first works on Fourier coefficients in ``theta``
("modal" arrays of shape ``(2,)*rank + (N_t, M)``); the nodal API wraps it
with ``rfft``/``irfft``.  The Nyquist mode is discarded.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fields import (ModalField, Rank, RepresentationError, TensorField, UsageError,
                     frame_scale, inverse_metric, metric_components, pointwise_norm2,
                     pointwise_trace)
from .geometry import SurfaceModel, christoffel

_ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


class UnsupportedModelError(ValueError):
    pass


class LaplacianKind(str, enum.Enum):
    ROUGH = "RoughLaplacian"
    HODGE = "HodgeLaplacian"
    LICHNEROWICZ = "Lichnerowicz"
    DIV_LRING = "DivLRing"
    K = "KLaplacian"


# -- modal helpers ------------------------------------------------------------

def to_modal(u: np.ndarray) -> np.ndarray:
    c = np.fft.rfft(u, axis=-1)
    c[..., -1] = 0.0
    return c


def to_nodal(c: np.ndarray, model: SurfaceModel) -> np.ndarray:
    return np.fft.irfft(c, n=model.chart.n_theta, axis=-1)


def t_index_count(rank: int) -> np.ndarray:
    """Number of ``t`` indices of each component, shape ``(2,)*rank``."""
    k = np.zeros((2,) * rank, dtype=int)
    for idx in itertools.product((0, 1), repeat=rank):
        k[idx] = idx.count(0)
    return k


def ddt(u: np.ndarray, model: SurfaceModel, ms: np.ndarray, rank: int) -> np.ndarray:
    """Second-order ``d/dt`` of a modal array along axis -2.

    On a centre grid the ghost node at ``t = -h/2`` is the node at ``h/2``
    rotated by pi, with a sign flip per ``t`` index.
    """
    h = model.chart.h
    out = np.empty_like(u)
    out[..., 1:-1, :] = (u[..., 2:, :] - u[..., :-2, :]) / (2 * h)
    out[..., -1, :] = (3 * u[..., -1, :] - 4 * u[..., -2, :] + u[..., -3, :]) / (2 * h)
    if model.chart.center:
        parity = (-1.0) ** (t_index_count(rank)[..., None] + ms)
        out[..., 0, :] = (u[..., 1, :] - parity * u[..., 0, :]) / (2 * h)
    else:
        out[..., 0, :] = (-3 * u[..., 0, :] + 4 * u[..., 1, :] - u[..., 2, :]) / (2 * h)
    return out


def modal_covariant_derivative(u, model, ms, rank):
    """``(nabla u)_{i j...}`` with the derivative index first."""
    n_t, m = u.shape[-2:]
    gam = np.broadcast_to(christoffel(model).gamma[..., None], (2, 2, 2, n_t, m))
    out = np.empty((2,) + u.shape, dtype=complex)
    out[0] = ddt(u, model, ms, rank)
    out[1] = 1j * ms * u
    slots = "abc"[:rank]
    for s in range(rank):
        u_sub = slots[:s] + "k" + slots[s + 1:]
        out -= np.einsum(f"ki{slots[s]}xy,{u_sub}xy->i{slots}xy", gam, u)
    return out


def modal_trace(u, model):
    return u[0, 0] / model.a[:, None] ** 2 + u[1, 1] / model.b[:, None] ** 2


def modal_codifferential_nabla(w, model, ms):
    """``-nabla^i w_i`` (the Christoffel route)."""
    return -modal_trace(modal_covariant_derivative(w, model, ms, 1), model)


def modal_symmetrized(w, model, ms):
    nw = modal_covariant_derivative(w, model, ms, 1)
    return 0.5 * (nw + nw.swapaxes(0, 1))


def _tracefree_part(h, model):
    return h - 0.5 * modal_trace(h, model) * metric_components(model)


def modal_conformal_killing(w, model, ms):
    return _tracefree_part(modal_symmetrized(w, model, ms), model)


def modal_divergence(h, model, ms):
    """``(div h)_i = -g^{jk} nabla_j h_{k i}``."""
    nh = modal_covariant_derivative(h, model, ms, 2)
    ginv = inverse_metric(model)
    return -np.einsum("jkxy,jkixy->ixy", np.broadcast_to(ginv, (2, 2) + h.shape[-2:]), nh)


def modal_d_nabla(h, model, ms):
    nh = modal_covariant_derivative(h, model, ms, 2)
    return nh - nh.swapaxes(0, 1)


def modal_d_nabla_adjoint(T, model, ms):
    """``-sym_{jk} nabla^i T_{ijk}``, the adjoint for the pair-counted 2-form product."""
    nT = modal_covariant_derivative(T, model, ms, 3)
    ginv = np.broadcast_to(inverse_metric(model), (2, 2) + T.shape[-2:])
    out = -np.einsum("lixy,lijkxy->jkxy", ginv, nT)
    return 0.5 * (out + out.swapaxes(0, 1))


def modal_s_ring_gradient(w, model):
    """``S(dR, xi)_{ij} = (R_j xi_i + R_i xi_j - R_p xi^p g_ij) / 2`` with ``dR = R_t dt``."""
    dR = np.zeros((2,) + w.shape[-2:])
    dR[0] = model.curvature_t[:, None]
    dR = dR.astype(w.dtype)
    outer = np.einsum("ixy,jxy->ijxy", w, dR)
    contr = dR[0] * w[0] / model.a[:, None] ** 2
    return 0.5 * (outer + outer.swapaxes(0, 1)) - 0.5 * contr * metric_components(model)


def _rotate(X, rank):
    out = np.zeros_like(X)
    for s in range(rank):
        out += np.moveaxis(np.tensordot(_ROT, X, axes=([1], [s])), 0, s)
    return out


def _radial_part(F, model):
    """``-(a b)^-1 d_t((b/a) d_t f)`` per frame component, zero on wall rows."""
    chart = model.chart
    h = chart.h
    flux = (model.b_half / model.a_half)[:, None] * (F[..., 1:, :] - F[..., :-1, :])
    out = np.zeros_like(F)
    out[..., 1:-1, :] = flux[..., 1:, :] - flux[..., :-1, :]
    if chart.center:
        out[..., 0, :] = flux[..., 0, :]
    return -out / (h * h * (model.a * model.b)[:, None])


def potential(kind: LaplacianKind, model) -> np.ndarray:
    R = model.curvature
    return {
        LaplacianKind.ROUGH: 0 * R,
        LaplacianKind.HODGE: R / 2,
        LaplacianKind.LICHNEROWICZ: 2 * R,
        LaplacianKind.K: R,
        LaplacianKind.DIV_LRING: -R / 2,
    }[kind]


_ALLOWED_RANKS = {
    LaplacianKind.ROUGH: {0, 1, 2},
    LaplacianKind.HODGE: {1},
    LaplacianKind.LICHNEROWICZ: {2},
    LaplacianKind.K: {2},
    LaplacianKind.DIV_LRING: {1},
}


def modal_laplacian(u, model, ms, kind, rank):
    kind = LaplacianKind(kind)
    if rank not in _ALLOWED_RANKS[kind]:
        raise UsageError(f"{kind.value} does not act on rank {rank}")
    scale = frame_scale(model, rank)
    F = u / scale
    b = model.b[:, None]
    kap = model.kappa[:, None]

    def ang(X):
        return 1j * ms / b * X + kap * _rotate(X, rank)

    out = _radial_part(F, model) - ang(ang(F)) + potential(kind, model)[:, None] * F
    out[..., ~model.chart.interior, :] = 0.0
    if kind == LaplacianKind.DIV_LRING:
        out = 0.5 * out
    return out * scale


# -- nodal API ----------------------------------------------------------------

def _nodal_input(u, *ranks) -> TensorField:
    if isinstance(u, ModalField):
        raise RepresentationError("this operation needs a nodal field")
    if not isinstance(u, TensorField):
        raise UsageError("expected a TensorField")
    if ranks and u.rank not in ranks:
        names = ", ".join(Rank(r).name for r in ranks)
        raise UsageError(f"expected rank in {{{names}}}, got {u.rank.name}")
    return u


def _apply(fn, u: TensorField, out_rank, *args, tracefree=False, **kw) -> TensorField:
    model = u.model
    c = to_modal(u.components)
    ms = np.arange(c.shape[-1])
    res = to_nodal(fn(c, model, ms, *args, **kw), model)
    if tracefree:
        res[1, 1] = -res[0, 0] * model.b[:, None] ** 2 / model.a[:, None] ** 2
    return TensorField(out_rank, res, model, tracefree=tracefree)


def covariant_derivative(u: TensorField) -> TensorField:
    u = _nodal_input(u, Rank.SCALAR, Rank.ONE_FORM, Rank.SYM_TWO_TENSOR)
    return _apply(modal_covariant_derivative, u, u.rank + 1, int(u.rank))


def d(u: TensorField) -> TensorField:
    """Exterior derivative of a function."""
    return covariant_derivative(_nodal_input(u, Rank.SCALAR))


def symmetrized_derivative(w: TensorField) -> TensorField:
    return _apply(modal_symmetrized, _nodal_input(w, Rank.ONE_FORM), Rank.SYM_TWO_TENSOR)


def conformal_killing(w: TensorField) -> TensorField:
    return _apply(modal_conformal_killing, _nodal_input(w, Rank.ONE_FORM),
                  Rank.SYM_TWO_TENSOR, tracefree=True)


def divergence(h: TensorField) -> TensorField:
    return _apply(modal_divergence, _nodal_input(h, Rank.SYM_TWO_TENSOR), Rank.ONE_FORM)


def codifferential_nabla(w: TensorField) -> TensorField:
    return _apply(modal_codifferential_nabla, _nodal_input(w, Rank.ONE_FORM), Rank.SCALAR)


def exterior_d_nabla(h: TensorField) -> TensorField:
    return _apply(modal_d_nabla, _nodal_input(h, Rank.SYM_TWO_TENSOR), Rank.THREE_TENSOR)


def exterior_d_nabla_adjoint(T: TensorField) -> TensorField:
    return _apply(modal_d_nabla_adjoint, _nodal_input(T, Rank.THREE_TENSOR), Rank.SYM_TWO_TENSOR)


def s_ring_gradient(w: TensorField) -> TensorField:
    """``S(dR, w)``; identically zero when the curvature is constant."""
    w = _nodal_input(w, Rank.ONE_FORM)
    out = modal_s_ring_gradient(w.components, w.model)
    return TensorField(Rank.SYM_TWO_TENSOR, out, w.model)


def laplacian(kind, u: TensorField) -> TensorField:
    """Rough, Hodge, Lichnerowicz, K or ``div o Lring`` Laplacian."""
    kind = LaplacianKind(kind)
    u = _nodal_input(u)
    out = _apply(modal_laplacian, u, u.rank, kind, int(u.rank))
    return out.like(out.components, tracefree=False)


def hodge_star(w: TensorField) -> TensorField:
    """``(*w)_t = -(a/b) w_theta``, ``(*w)_theta = (b/a) w_t`` (so ``*d Re z^n = d Im z^n``)."""
    w = _nodal_input(w, Rank.ONE_FORM)
    m = w.model
    out = np.stack([-(m.a / m.b)[:, None] * w.components[1], (m.b / m.a)[:, None] * w.components[0]])
    return TensorField(Rank.ONE_FORM, out, m)


def traceless_square(w) -> TensorField:
    """``S(w) = w (x) w - |w|^2 g / 2`` (nonlinear, nodal only)."""
    w = _nodal_input(w, Rank.ONE_FORM)
    c = w.components
    out = np.einsum("ixy,jxy->ijxy", c, c) - 0.5 * pointwise_norm2(c, w.model) * metric_components(w.model)
    out[1, 1] = -out[0, 0] * w.model.b[:, None] ** 2 / w.model.a[:, None] ** 2
    return TensorField(Rank.SYM_TWO_TENSOR, out, w.model, tracefree=True)


# -- per-mode sparse matrices -------------------------------------------------

def probe_matrix(fn, in_rank: int, m: int, model: SurfaceModel, bandwidth: int = 4,
                 in_components=None) -> sp.csr_matrix:
    """Sparse matrix of a linear modal operator restricted to Fourier mode ``m``.

    ``fn(c, model, ms)`` maps a modal array of rank ``in_rank`` (single mode)
    to any modal array.  Columns are ``(component, node)`` in C order over
    ``in_components`` (default all coordinate components); rows likewise over
    all output components.  ``bandwidth`` bounds the node coupling.
    """
    n_t = model.chart.n_t
    comps = list(in_components or itertools.product((0, 1), repeat=in_rank))
    ms = np.array([m])
    period = 2 * bandwidth + 1
    rows, cols, vals = [], [], []
    nodes = np.arange(n_t)
    for q, idx in enumerate(comps):
        for color in range(period):
            probe = np.zeros((2,) * in_rank + (n_t, 1), dtype=complex)
            probe[idx + (slice(color, None, period), 0)] = 1.0
            out = np.asarray(fn(probe, model, ms))[..., 0]
            out = out.reshape(-1, n_t)
            # column feeding row i: the node j = color (mod period) nearest to i
            j = nodes - ((nodes - color + bandwidth) % period) + bandwidth
            ok = (j >= 0) & (j < n_t)
            for p in range(out.shape[0]):
                nz = ok & (out[p] != 0)
                rows.append(p * n_t + nodes[nz])
                cols.append(q * n_t + j[nz])
                vals.append(out[p, nz])
            n_out = out.shape[0]
    shape = (n_out * n_t, len(comps) * n_t)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=shape)


def component_weights(model: SurfaceModel, rank: int, complete: bool = True) -> np.ndarray:
    """Diagonal of the discrete L2 product for coordinate components of one mode."""
    w = model.weights * model.chart.n_theta
    s2 = (frame_scale(model, rank) ** 2)[..., 0]
    return (w / s2).reshape(-1) if rank else w.copy()


# -- assembled real blocks ----------------------------------------------------

# independent orthonormal-frame unknowns: (frame index tuple, multiplicity)
_BLOCK_COMPONENTS = {
    (0, False): [((), 1.0)],
    (1, False): [((0,), 1.0), ((1,), 1.0)],
    (2, True): [((0, 0), 2.0), ((0, 1), 2.0)],
    (2, False): [((0, 0), 1.0), ((0, 1), 2.0), ((1, 1), 1.0)],
}


def _block_basis(rank: int, tracefree: bool):
    return _BLOCK_COMPONENTS[(rank, tracefree)]


def _phase(idx, m):
    """Real-block convention: frame components with k theta indices carry i^k (m > 0)."""
    return 1j ** idx.count(1) if m > 0 else 1.0


def modal_vector(field: TensorField, m: int, tracefree=None) -> np.ndarray:
    """Real vector of ``field``'s Fourier mode ``m`` in the assembled-block basis."""
    tf = field.tracefree if tracefree is None else tracefree
    basis = _block_basis(int(field.rank), tf and field.rank == Rank.SYM_TWO_TENSOR)
    c = np.fft.rfft(field.frame, axis=-1)[..., m]
    c = c * (1.0 / field.model.chart.n_theta if m == 0 else 2.0 / field.model.chart.n_theta)
    parts = [c[idx] / _phase(idx, m) for idx, _ in basis]
    return np.concatenate([p.real for p in parts])


def field_from_modal(vec: np.ndarray, m: int, model: SurfaceModel, rank, tracefree=False) -> TensorField:
    """Inverse of :func:`modal_vector`: ``Re(v i^k e^{i m theta})`` per frame component."""
    rank = Rank(rank)
    basis = _block_basis(int(rank), tracefree)
    n_t = model.chart.n_t
    vec = np.asarray(vec, dtype=float).reshape(len(basis), n_t)
    frame = np.zeros((2,) * int(rank) + (n_t, model.chart.n_theta))
    wave = np.exp(1j * m * model.chart.theta)
    for (idx, _), v in zip(basis, vec):
        frame[idx] = np.real(np.outer(v * _phase(idx, m), wave))
    if rank == Rank.SYM_TWO_TENSOR:
        frame[1, 0] = frame[0, 1]
        if tracefree:
            frame[1, 1] = -frame[0, 0]
    return TensorField.from_frame(rank, frame, model, tracefree=tracefree)


@dataclass(frozen=True, eq=False)
class AssembledOperator:
    """Real matrix of one Laplacian on Fourier block ``m``.

    Unknowns are the independent frame components (trace-free pairs
    ``(p, q)`` for Lichnerowicz/K kinds) stacked component-major.  Wall rows
    are identity, wall columns are zero in interior rows.
    """

    kind: LaplacianKind
    mode: int
    matrix: sp.csr_matrix
    weight: np.ndarray
    wall_mask: np.ndarray
    rank: int
    tracefree: bool

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.wall_mask

    def symmetric_form(self) -> sp.csr_matrix:
        return sp.diags(self.weight) @ self.matrix

    def symmetry_defect(self) -> float:
        K = self.symmetric_form()
        keep = np.flatnonzero(self.interior_mask)
        K = K[keep][:, keep]
        return float(abs(K - K.T).max() / abs(K).max())

    def to_coo_text(self) -> str:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return "\n".join(f"{coo.row[k]} {coo.col[k]} {coo.data[k]!r}" for k in order) + "\n"


_DEFAULT_RANK = {
    LaplacianKind.ROUGH: (0, False),
    LaplacianKind.HODGE: (1, False),
    LaplacianKind.DIV_LRING: (1, False),
    LaplacianKind.LICHNEROWICZ: (2, True),
    LaplacianKind.K: (2, True),
}


def assemble(kind, m: int, model: SurfaceModel, rank: int | None = None) -> AssembledOperator:
    """Assemble ``laplacian(kind, .)`` restricted to Fourier mode ``m``.

    The assembled matrix applies to :func:`modal_vector` coordinates, so
    ``A @ modal_vector(u, m) == modal_vector(laplacian(kind, u), m)`` for
    single-mode ``u`` vanishing on the walls.
    """
    kind = LaplacianKind(kind)
    if not model.rotationally_symmetric:
        raise UnsupportedModelError("assembly needs a rotationally symmetric model")
    if m < 0 or m > model.chart.modes[-1]:
        raise UsageError(f"mode {m} not resolved by n_theta={model.chart.n_theta}")
    r, tf = _DEFAULT_RANK[kind] if rank is None else (rank, rank == 2)
    basis = _block_basis(r, tf)
    n_t = model.chart.n_t
    n_b = len(basis)

    def block_apply(vec_modal, model_, ms):
        # vec_modal: (n_b, N_t, 1) block-basis values -> frame modal array
        frame = np.zeros((2,) * r + (n_t, 1), dtype=complex)
        for (idx, _), v in zip(basis, vec_modal):
            frame[idx] = v * _phase(idx, m)
        if r == 2:
            frame[1, 0] = frame[0, 1]
            if tf:
                frame[1, 1] = -frame[0, 0]
        scale = frame_scale(model_, r)
        out = modal_laplacian(frame * scale, model_, ms, kind, r) / scale
        return np.stack([out[idx] / _phase(idx, m) for idx, _ in basis])

    A = _probe_stacked(block_apply, n_b, m, model)
    if abs(A.imag).max() > 1e-12 * max(abs(A).max(), 1.0):
        raise RuntimeError("assembled block is not real; phase convention broken")
    A = A.real
    A = sp.csr_matrix(A)
    wall = np.tile(~model.chart.interior, n_b)
    A = A.tolil()
    A[:, np.flatnonzero(wall)] = 0.0
    for i in np.flatnonzero(wall):
        A[i, i] = 1.0
    w_node = model.weights * model.chart.n_theta
    weight = np.concatenate([mult * w_node for _, mult in basis])
    return AssembledOperator(kind, m, A.tocsr(), weight, wall, r, tf)


def _probe_stacked(block_apply, n_b, m, model):
    """Three-colour probing of a nearest-neighbour block operator."""
    n_t = model.chart.n_t
    nodes = np.arange(n_t)
    rows, cols, vals = [], [], []
    for q in range(n_b):
        for color in range(3):
            probe = np.zeros((n_b, n_t, 1), dtype=complex)
            probe[q, color::3, 0] = 1.0
            out = block_apply(probe, model, np.array([m]))[..., 0]
            j = nodes - ((nodes - color + 1) % 3) + 1
            ok = (j >= 0) & (j < n_t)
            for p in range(n_b):
                nz = np.flatnonzero(ok & (out[p] != 0))
                rows.append(p * n_t + nz)
                cols.append(q * n_t + j[nz])
                vals.append(out[p, nz])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n_b * n_t, n_b * n_t))


# -- per-mode matrices of first-order operators ---------------------------------

def _cached(model, key, build):
    if key not in model._cache:
        model._cache[key] = build()
    return model._cache[key]


def d_matrix(model: SurfaceModel, m: int) -> sp.csr_matrix:
    """Mode-``m`` matrix of ``u -> du`` (rows ``w_t`` then ``w_theta``)."""
    return _cached(model, ("d", m), lambda: probe_matrix(
        lambda c, mo, ms: modal_covariant_derivative(c, mo, ms, 0), 0, m, model, bandwidth=2))


def conformal_killing_matrix(model: SurfaceModel, m: int) -> sp.csr_matrix:
    """Mode-``m`` matrix of ``xi -> Lring xi`` on coordinate components."""
    return _cached(model, ("lring", m), lambda: probe_matrix(
        modal_conformal_killing, 1, m, model, bandwidth=2))


def star_matrix(model: SurfaceModel) -> sp.csr_matrix:
    a, b = model.a, model.b
    return sp.bmat([[None, sp.diags(-a / b)], [sp.diags(b / a), None]], format="csr")


def codifferential(w: TensorField) -> TensorField:
    """``d* w`` as the weighted adjoint of the discrete ``d`` (trapezoid product)."""
    w = _nodal_input(w, Rank.ONE_FORM)
    model = w.model
    c = to_modal(w.components).reshape(2 * model.chart.n_t, -1)
    W1 = component_weights(model, 1)
    W0 = component_weights(model, 0)
    out = np.zeros((model.chart.n_t, c.shape[-1]), dtype=complex)
    for m in model.chart.modes:
        out[:, m] = (d_matrix(model, m).conj().T @ (W1 * c[:, m])) / W0
    return TensorField(Rank.SCALAR, to_nodal(out, model), model)


def exterior_d_oneform(w: TensorField) -> TensorField:
    """``*dw = (a b)^-1 (d_t w_theta - d_theta w_t)``."""
    w = _nodal_input(w, Rank.ONE_FORM)
    model = w.model
    c = to_modal(w.components)
    ms = np.arange(c.shape[-1])
    dw = ddt(c, model, ms, 1)[1] - 1j * ms * c[0]
    return TensorField(Rank.SCALAR, to_nodal(dw / (model.a * model.b)[:, None], model), model)
