import numpy as np
import pytest
from hypothesis import given, strategies as st

from ahspectrum import quasimodes as qm
from ahspectrum.fields import l2_norm
from ahspectrum.geometry import ConfigurationError, DomainError, build_hyperbolic_disk


@given(R=st.floats(0.5, 20.0))
def test_cutoff_is_one_on_plateau_and_zero_outside(R):
    cut = qm.build_cutoff(R)
    lo, hi = cut.support
    p_lo, p_hi = cut.plateau
    assert lo == pytest.approx(R) and hi == pytest.approx(8 * R)
    x_in = np.linspace(p_lo, p_hi, 7)
    np.testing.assert_allclose(cut(x_in), 1.0, atol=1e-14)
    assert np.all(cut(np.array([0.5 * lo, lo, hi, 2 * hi])) == 0.0)
    assert np.all((cut(np.linspace(lo, hi, 101)) >= 0) & (cut(np.linspace(lo, hi, 101)) <= 1))


@pytest.mark.parametrize("deriv", [1, 2, 3])
def test_cutoff_derivatives_match_differences(deriv):
    cut = qm.build_cutoff(3.0)
    x = np.linspace(2.5, 25.0, 200)
    e = 1e-5
    fd = (cut(x + e, deriv - 1) - cut(x - e, deriv - 1)) / (2 * e)
    np.testing.assert_allclose(cut(x, deriv), fd, atol=1e-6 * max(1.0, np.abs(fd).max()))


def test_cutoff_constants_are_positive():
    c2, c4 = qm.build_cutoff(2.0).constants, qm.build_cutoff(4.0).constants
    for key in c2:
        assert c2[key] > 0 and c4[key] > 0


@pytest.mark.parametrize("kw", [{"R": 0.0}, {"R": 1.0, "chi_order": 6}, {"R": 1.0, "chi_order": 3}])
def test_build_cutoff_rejects_bad_parameters(kw):
    with pytest.raises(ConfigurationError):
        qm.build_cutoff(**kw)


def test_build_cutoff_reports_needed_t_max():
    with pytest.raises(ConfigurationError, match="t_max"):
        qm.build_cutoff(4.0, model=build_hyperbolic_disk(0.5, 20.0, 256, 4))


def test_lambda_below_quarter_is_out_of_range():
    with pytest.raises(qm.OutOfRangeError):
        qm.QuasiModeSpec(0.2)
    with pytest.raises(ConfigurationError):
        qm.quasimode_scan(qm.ScanConfig(lambdas=(0.5, 0.2)))


@pytest.mark.parametrize("lam", [0.25, 0.5, 1.0])
def test_radial_profile_solves_indicial_ode(lam):
    f = qm.radial_profile(qm.QuasiModeSpec(lam))
    r = np.exp(-np.linspace(1.0, 10.0, 50))
    # f(e^{-x}) = e^{-x/2} g(x) with g'' = -mu^2 g
    x = -np.log(r)
    g = f(r) * np.exp(x / 2)
    e = 1e-4
    gpp = (f(np.exp(-(x + e))) * np.exp((x + e) / 2) - 2 * g
           + f(np.exp(-(x - e))) * np.exp((x - e) / 2)) / e**2
    mu2 = lam - 0.25
    np.testing.assert_allclose(gpp, -mu2 * g, atol=1e-5 * max(1.0, np.abs(g).max()))


def test_radial_profile_rejects_nonpositive_radius():
    with pytest.raises(DomainError):
        qm.radial_profile(qm.QuasiModeSpec(0.5))(np.array([0.1, 0.0]))


def test_two_constructions_agree_at_second_order():
    spec = qm.QuasiModeSpec(0.5, R=1.0)
    gaps = []
    for n_t in (1000, 2000):
        m = build_hyperbolic_disk(0.5, 10.0, n_t, 4)
        cut = qm.build_cutoff(1.0, model=m)
        h1, h2 = qm.build_quasimode(spec, cut, m), qm.build_quasimode_hessian(spec, cut, m)
        gaps.append(l2_norm(h1 - h2) / l2_norm(h1))
    assert gaps[1] < 1e-3
    assert 3.0 < gaps[0] / gaps[1] < 5.0


def test_quasimode_is_trace_free_and_supported():
    m = build_hyperbolic_disk(0.5, 20.0, 2000, 4)
    cut = qm.build_cutoff(2.0, model=m)
    h = qm.build_quasimode(qm.QuasiModeSpec(1.0, R=2.0), cut, m)
    assert h.tracefree
    x = -np.log(m.r())
    assert np.all(h.components[..., (x <= 2.0) | (x >= 16.0), :] == 0)


@pytest.mark.parametrize("lam", [0.25, 0.5, 1.0])
def test_indicial_roots_closed_form(lam):
    s1, s2 = qm.indicial_roots(lam)
    for s in (s1, s2):
        assert abs(s * s + 3 * s + lam + 2) < 1e-12
    assert s1.real == pytest.approx(-1.5) and s2.real == pytest.approx(-1.5)


def test_indicial_fit_finds_a_root():
    fit = qm.indicial_fit(0.5)
    assert abs(fit.exponent.real + 1.5) <= 0.05 * 1.5
    assert fit.nearest_root_gap < 1e-3


def test_envelope_fit_recovers_exponent_and_frequency():
    spec = qm.QuasiModeSpec(1.0)
    fit = qm.envelope_fit(spec, build_hyperbolic_disk(0.5, 30.0, 64, 4), (10.0, 25.0))
    assert fit["exponent"] == pytest.approx(-1.5, abs=1e-3)
    assert fit["mu"] == pytest.approx(spec.mu, rel=1e-3)


def test_small_scan_ratio_decays():
    res = qm.quasimode_scan(qm.ScanConfig(lambdas=(0.5,), Rs=(2.0, 4.0, 8.0)))
    s = res.slopes["0.5"]
    assert s["monotone_ratio"] and s["ratio"] <= -0.7
    assert res.to_csv().splitlines()[0] == "lambda,R,res_l2,norm_l2,ratio,slope_partial"
    assert len(res.plot_data(0.5).splitlines()) == 3
