import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ahspectrum.geometry import (ConfigurationError, DomainError, GhatProfile, ModelKind,
                                 RadialPerturbation, build_collar_metric,
                                 build_conformal_perturbation, build_hyperbolic_disk,
                                 build_radial_metric, christoffel, christoffel_in_r,
                                 model_from_snapshot, scalar_curvature)
from ahspectrum.smooth import bump, plateau, smoothstep, step_down


def test_ghat_tends_to_one_at_boundary():
    g, dg = GhatProfile("hyperbolic")(np.array([1e-8]))
    assert g[0] == pytest.approx(1.0, abs=1e-15)
    assert dg[0] == pytest.approx(0.0, abs=1e-7)


def test_disk_curvature_is_minus_two():
    m = build_hyperbolic_disk(0.5, 12.0, 128)
    assert np.max(np.abs(scalar_curvature(m) + 2)) <= 1e-10
    assert m.kind == ModelKind.HYPERBOLIC_DISK


def test_ghat_reproduces_sinh():
    m = build_hyperbolic_disk(0.5, 12.0, 128)
    r = m.r()
    g, _ = m.ghat_profile(r)
    np.testing.assert_allclose(g / r**2, np.sinh(m.chart.t_nodes) ** 2, rtol=1e-12)


def test_collar_constant_profile_is_hyperbolic():
    errs = [np.max(np.abs(build_collar_metric(GhatProfile("constant"), (1.0, 10.0), n).curvature + 2))
            for n in (256, 512)]
    assert errs[1] < 3e-4
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_collar_hyperbolic_profile_matches_disk():
    disk = build_hyperbolic_disk(0.5, 12.0, 200)
    col = build_collar_metric(GhatProfile("hyperbolic"), (0.5, 12.0), 200, scale=2.0)
    for name in ("a", "b", "b_t"):
        np.testing.assert_allclose(getattr(col, name), getattr(disk, name), rtol=1e-12)


def test_collar_power_profile_is_asymptotically_hyperbolic():
    m = build_collar_metric(GhatProfile("power", {"coeff": 1.0, "power": 3.0}), (0.5, 8.0), 2048)
    r, dev = m.r()[20:-20], np.abs(m.curvature[20:-20] + 2)
    sel = r < 0.1
    order = np.polyfit(np.log(r[sel]), np.log(dev[sel]), 1)[0]
    assert order >= 1.0


def test_collar_rejects_non_positive_profile():
    with pytest.raises(DomainError):
        build_collar_metric(lambda r: (1 - 10 * r, -10 * np.ones_like(r)), (0.5, 4.0), 64)


def test_invalid_domains():
    with pytest.raises(ConfigurationError):
        build_hyperbolic_disk(0.5, 12.0, 8)
    with pytest.raises(ConfigurationError):
        build_hyperbolic_disk(2.0, 2.5, 64)
    with pytest.raises(ConfigurationError):
        build_hyperbolic_disk(3.0, 1.0, 64)


def test_zero_perturbation_is_identity():
    base = build_hyperbolic_disk(0.5, 12.0, 128)
    same = build_conformal_perturbation(base, RadialPerturbation(0.0, 2.0, 6.0))
    for name in ("a", "b", "b_t", "curvature"):
        np.testing.assert_allclose(getattr(same, name), getattr(base, name), rtol=1e-14)


def test_perturbation_changes_curvature_inside_support_only():
    base = build_hyperbolic_disk(0.5, 12.0, 512)
    p = build_conformal_perturbation(base, RadialPerturbation(0.1, 2.0, 6.0))
    t = p.chart.t_nodes
    assert np.max(np.abs(p.curvature + 2)) > 1e-2
    outside = ((t < 1.9) | (t > 6.1)) & p.chart.core(3)
    assert np.max(np.abs(p.curvature_t[outside])) < 1e-8
    assert np.all(np.abs(p.curvature_t[(t > 2.5) & (t < 5.5)]).max() > 1e-3)


def test_perturbed_curvature_matches_conformal_formula():
    u = RadialPerturbation(0.2, 2.0, 6.0)
    errs = []
    for n in (256, 512):
        base = build_hyperbolic_disk(0.5, 12.0, n)
        p = build_conformal_perturbation(base, u)
        t = base.chart.t_nodes
        lap = -(u(t, 2) + np.cosh(t) / np.sinh(t) * u(t, 1))
        oracle = np.exp(-2 * u(t)) * (-2 + 2 * lap)
        errs.append(np.max(np.abs(p.curvature - oracle)[4:-4]))
    assert errs[1] < errs[0] / 3


def test_perturbation_touching_boundary_is_rejected():
    base = build_hyperbolic_disk(0.5, 12.0, 128)
    with pytest.raises(DomainError):
        build_conformal_perturbation(base, RadialPerturbation(0.1, 0.2, 3.0))


def test_christoffel_symmetry_is_exact():
    g = christoffel(build_hyperbolic_disk(0.5, 12.0, 64)).gamma
    assert np.array_equal(g, g.swapaxes(1, 2))


def test_collar_christoffel_closed_forms():
    m = build_collar_metric(GhatProfile("power", {"coeff": 0.5, "power": 2.0}), (0.5, 6.0), 64)
    r = m.r()
    g, dg = m.ghat_profile(r)
    sym = christoffel_in_r(m)
    np.testing.assert_allclose(sym["r_rr"], -1 / r, rtol=1e-12)
    np.testing.assert_allclose(sym["th_thr"], -1 / r + 0.5 * dg / g, rtol=1e-12)
    np.testing.assert_allclose(sym["r_thth"], g / r - 0.5 * dg, rtol=1e-10)


def test_flat_chart_has_no_christoffel_symbols():
    flat = build_radial_metric(lambda t: (np.ones_like(t), 0 * t, np.ones_like(t), 0 * t),
                               (1.0, 3.0), 32)
    assert np.all(christoffel(flat).gamma == 0)


def test_round_sphere_curvature_is_two():
    errs = []
    for n in (64, 128):
        s = build_radial_metric(lambda t: (np.ones_like(t), 0 * t, np.sin(t), np.cos(t)),
                                (0.5, 2.5), n)
        errs.append(np.max(np.abs(s.curvature - 2)))
    assert errs[1] < 1e-3 and errs[1] < errs[0]


def test_quadrature_area_is_second_order():
    errs = []
    for n in (64, 128, 256):
        m = build_hyperbolic_disk(1.0, 4.0, n)
        exact = 2 * np.pi * (np.cosh(4.0) - np.cosh(1.0))
        errs.append(abs(m.weights.sum() * m.chart.n_theta - exact) / exact)
    order = np.polyfit(np.log([3 / 63, 3 / 127, 3 / 255]), np.log(errs), 1)[0]
    assert 1.7 <= order <= 2.3


def test_snapshot_roundtrip():
    base = build_hyperbolic_disk(0.5, 12.0, 64)
    p = build_conformal_perturbation(base, RadialPerturbation(0.1, 2.0, 6.0))
    for m in (base, p):
        again = model_from_snapshot(json.loads(m.to_json()))
        np.testing.assert_array_equal(again.b, m.b)
        np.testing.assert_array_equal(again.curvature, m.curvature)


@given(t_min=st.floats(0.1, 3.0), span=st.floats(1.01, 20.0), n=st.integers(16, 300))
def test_chart_invariants(t_min, span, n):
    m = build_hyperbolic_disk(t_min, t_min + span, n, 8)
    dt = np.diff(m.chart.t_nodes)
    assert np.all(dt > 0)
    np.testing.assert_allclose(dt, dt[0], rtol=1e-9)
    assert np.all(m.weights > 0) and np.all(m.b > 0)


def test_centre_chart_has_single_wall():
    m = build_hyperbolic_disk(0.0, 6.0, 64)
    assert m.chart.center and list(m.chart.wall_nodes) == [63]


@given(x=st.floats(-1, 2), order=st.integers(1, 6))
def test_smoothstep_range_and_step_down(x, order):
    s = smoothstep(x, order)
    assert 0.0 <= s <= 1.0
    assert step_down(x + 1.0, order) == pytest.approx(1.0 - s)


def test_bump_and_plateau_vanish_outside():
    t = np.linspace(0, 10, 1001)
    assert np.all(bump(t, 2, 5)[(t <= 2) | (t >= 5)] == 0)
    p = plateau(t, 2, 8, 1)
    assert np.all(p[(t >= 3) & (t <= 7)] == 1) and np.all(p[(t <= 2) | (t >= 8)] == 0)
