import numpy as np
import pytest

from ahspectrum import operators as op
from ahspectrum.fields import (Rank, TensorField, harmonic_oneform, l2_norm, pointwise_trace,
                               random_bump_field, scalar_field)
from ahspectrum.geometry import build_hyperbolic_disk
from ahspectrum.identities import fit_order


def _ladder(n_ts=(128, 256, 512), t_min=0.5, t_max=8.0):
    return [build_hyperbolic_disk(t_min, t_max, n, 16) for n in n_ts]


def _order(errs, models):
    return fit_order([m.chart.h for m in models], errs)


def test_d_of_scalar_matches_closed_form():
    models, errs = _ladder(), []
    for m in models:
        t, th = m.chart.t_nodes[:, None], m.chart.theta[None, :]
        f = TensorField(Rank.SCALAR, np.sin(t) * np.cos(2 * th), m)
        exact = np.stack([np.cos(t) * np.cos(2 * th), -2 * np.sin(t) * np.sin(2 * th)])
        errs.append(np.abs(op.d(f).components - exact)[:, 1:-1].max())
    assert 1.7 <= _order(errs, models) <= 2.3


def test_rough_laplacian_of_radial_bump():
    models, errs = _ladder(), []
    for m in models:
        t = m.chart.t_nodes
        f = np.exp(-(t - 4.0) ** 2)
        fp, fpp = -2 * (t - 4) * f, (4 * (t - 4) ** 2 - 2) * f
        exact = -(fpp + np.cosh(t) / np.sinh(t) * fp)
        out = op.laplacian("RoughLaplacian", scalar_field(f, m)).components[:, 0]
        core = m.chart.core(2)
        errs.append(np.abs(out - exact)[core].max())
    assert 1.7 <= _order(errs, models) <= 2.3


def test_hodge_star_squares_to_minus_one(annulus):
    w = random_bump_field(Rank.ONE_FORM, (2.0, 6.0), 4, annulus(128))
    np.testing.assert_allclose(op.hodge_star(op.hodge_star(w)).components, -w.components,
                               atol=1e-13)


def test_hodge_star_maps_real_to_imaginary_part(annulus):
    m = annulus(128)
    np.testing.assert_allclose(op.hodge_star(harmonic_oneform(3, m)).components,
                               harmonic_oneform(3, m, conjugate=True).components, atol=1e-13)


def test_conformal_killing_is_trace_free(annulus):
    m = annulus(256)
    h = op.conformal_killing(random_bump_field(Rank.ONE_FORM, (2.0, 6.0), 1, m))
    assert h.tracefree
    assert np.abs(pointwise_trace(h.components, m)).max() < 1e-12


def test_hodge_laplacian_annihilates_harmonic_forms():
    models = _ladder()
    errs = []
    for m in models:
        w = harmonic_oneform(2, m)
        core = m.chart.core(4)
        errs.append(l2_norm(op.laplacian("HodgeLaplacian", w), core) / l2_norm(w, core))
    assert errs[-1] < 1e-3
    assert 1.7 <= _order(errs, models) <= 2.3


def test_laplacians_are_positive_on_bumps(annulus):
    m = annulus(256)
    from ahspectrum.identities import rayleigh
    u = random_bump_field(Rank.SCALAR, (2.0, 6.0), 2, m)
    assert rayleigh("RoughLaplacian", u) > 0.24
    assert rayleigh("HodgeLaplacian", op.d(u)) > 0.24


@pytest.mark.parametrize("kind,rank", [("RoughLaplacian", 0), ("HodgeLaplacian", 1),
                                       ("Lichnerowicz", 2), ("KLaplacian", 2)])
@pytest.mark.parametrize("mode", [0, 3])
def test_assembled_block_matches_nodal_operator(kind, rank, mode, annulus):
    m = annulus(128)
    u = random_bump_field(rank, (2.0, 6.0), 3, m, max_mode=0, tracefree=(rank == 2))
    th = m.chart.theta
    # push the radial bump to a single Fourier mode
    comps = u.components * np.cos(mode * th)
    if rank == 1:
        comps[1] = u.components[1] * np.sin(mode * th)
    if rank == 2:
        comps[0, 1] = comps[1, 0] = u.components[0, 1] * np.sin(mode * th)
    v = u.like(comps)
    A = op.assemble(kind, mode, m)
    lhs = A.matrix @ op.modal_vector(v, mode)
    rhs = op.modal_vector(op.laplacian(kind, v), mode, tracefree=A.tracefree)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(rhs).max())


@pytest.mark.parametrize("kind", ["RoughLaplacian", "HodgeLaplacian", "Lichnerowicz"])
def test_assembled_block_is_weighted_symmetric(kind, annulus):
    assert op.assemble(kind, 2, annulus(128)).symmetry_defect() < 1e-10


def test_assemble_rejects_unresolved_mode(annulus):
    from ahspectrum.fields import UsageError
    with pytest.raises(UsageError):
        op.assemble("Lichnerowicz", 40, annulus(128))


def test_coo_export_is_sorted(annulus):
    text = op.assemble("RoughLaplacian", 0, annulus(32)).to_coo_text().split("\n")[:-1]
    keys = [tuple(map(int, line.split()[:2])) for line in text]
    assert keys == sorted(keys)
