import numpy as np
import pytest
from hypothesis import given, strategies as st

from ahspectrum import operators as op
from ahspectrum.fields import (ModalField, Rank, RepresentationError, TensorField, UsageError,
                               field_from_csv, field_to_csv, harmonic_oneform, l2_inner_product,
                               l2_norm, metric_field, norms, pointwise_norm2, pointwise_trace,
                               random_bump_field, restrict_tracefree, scalar_field)
from ahspectrum.geometry import build_hyperbolic_disk


def test_zero_field_has_zero_norms(annulus):
    z = TensorField.zeros(Rank.ONE_FORM, annulus(128))
    assert l2_inner_product(z, z) == 0.0
    assert norms(z) == (0.0, 0.0, 0.0) or tuple(vars(norms(z)).values()) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_harmonic_form_mass_tends_to_pi_n(n):
    errs = []
    for t_max in (6.0, 9.0, 12.0):
        m = build_hyperbolic_disk(0.0, t_max, 1024, 32)
        w = harmonic_oneform(n, m)
        errs.append(abs(l2_norm(w) ** 2 - np.pi * n))
    assert errs[-1] < 2e-3 * np.pi * n
    assert errs[0] > errs[1] > errs[2]


def test_l4_norm_is_stable_in_t_max():
    vals = [norms(harmonic_oneform(2, build_hyperbolic_disk(0.0, T, 1024, 32))).l4
            for T in (8.0, 12.0)]
    assert np.isfinite(vals).all() and abs(vals[1] - vals[0]) < 1e-3 * vals[1]


def test_norm_identity_for_lring_of_bump(annulus):
    m = annulus(512)
    w = random_bump_field(Rank.ONE_FORM, (1.5, 7.0), 3, m)
    h = op.conformal_killing(w)
    nr = norms(w)
    assert nr.h1 >= nr.l2
    assert abs(2 * l2_norm(h) ** 2 - nr.h1**2) <= 1e-4 * nr.h1**2


def test_harmonic_oneform_n1_is_dx(annulus):
    m = annulus(128)
    s = np.tanh(m.chart.t_nodes / 2)
    w = harmonic_oneform(1, m)
    np.testing.assert_allclose(pointwise_norm2(w.components, m),
                               np.broadcast_to(((1 - s * s) / 2)[:, None] ** 2, (128, 32)),
                               rtol=1e-10)


def test_harmonic_oneform_is_closed_and_coclosed(annulus):
    res = []
    for n_t in (128, 256, 512):
        m = annulus(n_t)
        w = harmonic_oneform(3, m)
        core = m.chart.core(4)
        res.append((l2_norm(op.exterior_d_oneform(w), core) + l2_norm(op.codifferential_nabla(w), core))
                   / l2_norm(w, core))
    order = np.log(res[0] / res[2]) / np.log(4.0)
    assert 1.7 <= order <= 2.3


def test_harmonic_oneform_rejects_n0(annulus):
    with pytest.raises(UsageError):
        harmonic_oneform(0, annulus(128))


def test_random_bump_support_and_determinism(annulus):
    m = annulus(128)
    t = m.chart.t_nodes
    a = random_bump_field(Rank.SYM_TWO_TENSOR, (2.0, 6.0), 11, m)
    b = random_bump_field(Rank.SYM_TWO_TENSOR, (2.0, 6.0), 11, m)
    c = random_bump_field(Rank.SYM_TWO_TENSOR, (2.0, 6.0), 12, m)
    assert np.all(a.components[..., (t <= 2.0) | (t >= 6.0), :] == 0)
    assert np.array_equal(a.components, b.components)
    assert l2_norm(a - c) > 0


def test_random_bump_outside_domain(annulus):
    with pytest.raises(UsageError):
        random_bump_field(Rank.SCALAR, (0.2, 3.0), 0, annulus(128))


def test_restrict_tracefree_of_metric_is_zero(annulus):
    out = restrict_tracefree(metric_field(annulus(128)))
    assert np.max(np.abs(out.components)) < 1e-10


@given(seed=st.integers(0, 10_000))
def test_restrict_tracefree_is_idempotent(seed):
    m = build_hyperbolic_disk(0.5, 6.0, 32, 8)
    u = random_bump_field(Rank.SYM_TWO_TENSOR, (1.0, 5.0), seed, m)
    once = restrict_tracefree(u)
    twice = restrict_tracefree(once)
    scale = max(1.0, np.abs(u.components).max())
    assert np.max(np.abs(pointwise_trace(once.components, m))) <= 1e-12 * scale
    assert np.max(np.abs(twice.components - once.components)) <= 1e-12 * scale


@given(seed_a=st.integers(0, 1000), seed_b=st.integers(0, 1000))
def test_inner_product_symmetric_positive(seed_a, seed_b):
    m = build_hyperbolic_disk(0.5, 6.0, 32, 8)
    a = random_bump_field(Rank.ONE_FORM, (1.0, 5.0), seed_a, m)
    b = random_bump_field(Rank.ONE_FORM, (1.0, 5.0), seed_b, m)
    assert l2_inner_product(a, b) == pytest.approx(l2_inner_product(b, a), rel=1e-12, abs=1e-14)
    assert l2_inner_product(a, a) > 0


def test_rank_mismatch_is_usage_error(annulus):
    m = annulus(128)
    with pytest.raises(UsageError):
        l2_inner_product(TensorField.zeros(Rank.SCALAR, m), TensorField.zeros(Rank.ONE_FORM, m))


def test_tracefree_flag_is_validated(annulus):
    with pytest.raises(UsageError):
        TensorField(Rank.SYM_TWO_TENSOR, metric_field(annulus(128)).components, annulus(128),
                    tracefree=True)


def test_modal_roundtrip_and_representation_guard(annulus):
    m = annulus(128)
    u = random_bump_field(Rank.ONE_FORM, (2.0, 6.0), 5, m)
    mod = u.to_modal()
    assert isinstance(mod, ModalField)
    np.testing.assert_allclose(mod.to_nodal().components, u.components, atol=1e-14)
    with pytest.raises(RepresentationError):
        op.traceless_square(mod)


def test_csv_roundtrip(tmp_path, annulus):
    m = build_hyperbolic_disk(0.5, 3.0, 16, 4)
    h = random_bump_field(Rank.SYM_TWO_TENSOR, (1.0, 2.5), 1, m)
    path = tmp_path / "h.csv"
    field_to_csv(h, path)
    assert path.read_text().splitlines()[0] == "t,theta,h_tt,h_ttheta,h_thetatheta"
    np.testing.assert_array_equal(field_from_csv(path, Rank.SYM_TWO_TENSOR, m).components,
                                  h.components)


def test_scalar_field_broadcasts_radial_profile(annulus):
    m = annulus(128)
    f = scalar_field(m.chart.t_nodes, m)
    assert f.components.shape == (128, 32)
