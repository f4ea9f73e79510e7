"""Orthogonal splittings of one-forms and trace-free two-tensors.

Both splittings are discrete least-squares projections, one Fourier mode at
a time, in the trapezoid L2 product.  Potentials vanish on the Dirichlet
walls.  Because the projection uses the exact discrete adjoint, the parts are
orthogonal and the split is idempotent up to rounding; the discrete
harmonic / transverse-traceless part is defined by subtraction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import operators as op
from .fields import Rank, TensorField, UsageError, l2_inner_product, l2_norm


class NumericalError(RuntimeError):
    pass


def _solve_normal(B: sp.spmatrix, W: np.ndarray, rhs_vec: np.ndarray, what: str) -> np.ndarray:
    BH = B.conj().T.tocsr()
    N = (BH @ sp.diags(W) @ B).tocsc()
    rhs = BH @ (W * rhs_vec)
    if not np.any(rhs):
        return np.zeros(B.shape[1], dtype=complex)
    x = spla.spsolve(N, rhs)
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"{what}: normal equations produced non-finite values "
                             f"(size {N.shape[0]}, nnz {N.nnz})")
    rel = np.linalg.norm(N @ x - rhs) / np.linalg.norm(rhs)
    if rel > 1e-8:
        raise NumericalError(f"{what}: normal-equation residual {rel:.2e} exceeds 1e-8")
    return x


def _scalar_from_modes(coeffs, model) -> TensorField:
    return TensorField(Rank.SCALAR, op.to_nodal(coeffs, model), model)


@dataclass(frozen=True, eq=False)
class OneFormDecomposition:
    """``omega = eta + du + *dv``."""

    omega: TensorField
    eta: TensorField
    u: TensorField
    v: TensorField
    exact: TensorField
    coexact: TensorField
    residual: float
    orthogonality: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "norm_omega": l2_norm(self.omega),
            "norm_exact": l2_norm(self.exact),
            "norm_coexact": l2_norm(self.coexact),
            "norm_harmonic": l2_norm(self.eta),
            "harmonic_residual": self.residual,
            "orthogonality": dict(sorted(self.orthogonality.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def hodge_decompose(omega: TensorField, core_margin: int = 4) -> OneFormDecomposition:
    """Split a one-form into discrete-harmonic, exact and co-exact parts.

    For each Fourier mode, ``(u, v)`` minimise ``|omega - du - *dv|`` over
    potentials vanishing on the walls; ``eta`` is what is left.
    ``residual`` is ``|*d eta| + |d* eta|`` (Christoffel route) relative to
    ``|omega|``, measured ``core_margin`` nodes away from the walls.
    """
    if omega.rank != Rank.ONE_FORM:
        raise UsageError("hodge_decompose expects a one-form")
    model = omega.model
    n_t = model.chart.n_t
    keep = np.flatnonzero(model.chart.interior)
    n_i = len(keep)
    c = op.to_modal(omega.components).reshape(2 * n_t, -1)
    W1 = op.component_weights(model, 1)
    S = op.star_matrix(model)
    u_c = np.zeros((n_t, c.shape[-1]), dtype=complex)
    v_c = np.zeros_like(u_c)
    for m in model.chart.modes:
        D = op.d_matrix(model, m)[:, keep]
        B = sp.hstack([D, S @ D]).tocsr()
        x = _solve_normal(B, W1, c[:, m], f"hodge mode {m}")
        u_c[keep, m], v_c[keep, m] = x[:n_i], x[n_i:]
    u, v = _scalar_from_modes(u_c, model), _scalar_from_modes(v_c, model)
    exact = op.d(u)
    coexact = op.hodge_star(op.d(v))
    eta = omega - exact - coexact

    core = model.chart.core(core_margin)
    scale = max(l2_norm(omega), np.finfo(float).tiny)
    resid = (l2_norm(op.exterior_d_oneform(eta), core)
             + l2_norm(op.codifferential_nabla(eta), core)) / scale
    sq = scale**2
    ortho = {
        "exact_coexact": abs(l2_inner_product(exact, coexact)) / sq,
        "exact_harmonic": abs(l2_inner_product(exact, eta)) / sq,
        "coexact_harmonic": abs(l2_inner_product(coexact, eta)) / sq,
    }
    return OneFormDecomposition(omega, eta, u, v, exact, coexact, float(resid), ortho)


@dataclass(frozen=True, eq=False)
class TTSplit:
    """``h = tt_part + Lring(potential)``."""

    h: TensorField
    tt_part: TensorField
    potential: TensorField
    image: TensorField
    residual: float
    orthogonality: float

    def summary(self) -> dict:
        return {
            "norm_h": l2_norm(self.h),
            "norm_tt": l2_norm(self.tt_part),
            "norm_image": l2_norm(self.image),
            "div_tt_relative": self.residual,
            "orthogonality": self.orthogonality,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def tt_project(h: TensorField, core_margin: int = 4) -> TTSplit:
    """Project a trace-free symmetric tensor onto the complement of ``Im Lring``.

    ``xi`` (vanishing on the walls) minimises ``|h - Lring xi|`` per Fourier
    mode; the normal operator is the discrete ``div o Lring``.
    ``residual`` is ``|div tt_part| / |h|_{H1}`` on core nodes.
    """
    from .fields import norms

    if h.rank != Rank.SYM_TWO_TENSOR:
        raise UsageError("tt_project expects a symmetric two-tensor")
    model = h.model
    n_t = model.chart.n_t
    keep = np.flatnonzero(model.chart.interior)
    cols = np.concatenate([keep, n_t + keep])
    c = op.to_modal(h.components).reshape(4 * n_t, -1)
    W2 = op.component_weights(model, 2)
    xi_c = np.zeros((2 * n_t, c.shape[-1]), dtype=complex)
    for m in model.chart.modes:
        B = op.conformal_killing_matrix(model, m)[:, cols]
        xi_c[cols, m] = _solve_normal(B, W2, c[:, m], f"tt mode {m}")
    xi = TensorField(Rank.ONE_FORM, op.to_nodal(xi_c.reshape(2, n_t, -1), model), model)
    image = op.conformal_killing(xi)
    tt = h - image
    core = model.chart.core(core_margin)
    scale = max(norms(h).h1, np.finfo(float).tiny)
    resid = l2_norm(op.divergence(tt), core) / scale
    ortho = abs(l2_inner_product(tt, image)) / max(l2_norm(h) ** 2, np.finfo(float).tiny)
    return TTSplit(h, tt, xi, image, float(resid), float(ortho))
