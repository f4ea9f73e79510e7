import json

import numpy as np
import pytest

from ahspectrum import operators as op
from ahspectrum import spectral as spc
from ahspectrum.fields import Rank, UsageError, random_bump_field
from ahspectrum.geometry import build_hyperbolic_disk
from ahspectrum.quasimodes import ScanConfig, quasimode_scan


@pytest.fixture(scope="module")
def small_scan():
    return quasimode_scan(ScanConfig(lambdas=(0.5,), Rs=(2.0, 4.0, 8.0)))


def test_scalar_block_sits_above_quarter(centre_disk):
    pairs = spc.eigensolve_block(op.assemble("RoughLaplacian", 0, centre_disk), 3, centre_disk)
    assert pairs[0].value > 0.25
    assert all(p.residual < 1e-8 for p in pairs)
    assert [p.value for p in pairs] == sorted(p.value for p in pairs)


def test_lichnerowicz_block_has_minus_two(centre_disk):
    A = op.assemble("Lichnerowicz", 3, centre_disk)
    pairs = spc.eigensolve_block(A, 4, centre_disk)
    assert abs(pairs[0].value + 2.0) < 1e-3
    assert spc.pair_symmetry_defect(A, pairs) < 1e-8


def test_eigensolve_rejects_bad_count(centre_disk):
    A = op.assemble("RoughLaplacian", 0, centre_disk)
    with pytest.raises(UsageError):
        spc.eigensolve_block(A, 0)
    with pytest.raises(UsageError):
        spc.eigensolve_block(A, 10_000)


def test_known_eigentensors_on_annulus():
    m = build_hyperbolic_disk(0.5, 12.0, 512, 32)
    rows = spc.known_eigentensor_check((2, 3), m)
    for row in rows:
        assert row.minus2_ok and row.zero_ok
        assert 1.7 <= row.r_minus2_order <= 2.3


def test_rayleigh_floor_guards(annulus):
    m = annulus(128)
    with pytest.raises(UsageError):
        spc.rayleigh_floor("RoughLaplacian", [])
    other = build_hyperbolic_disk(0.5, 12.0, 64, 32)
    u = random_bump_field(Rank.SCALAR, (2.0, 6.0), 0, other)
    with pytest.raises(UsageError):
        spc.rayleigh_floor("RoughLaplacian", [u], m)
    assert spc.rayleigh_floor("RoughLaplacian", [u]) > 0.24


def test_persistence_detection():
    base = {1: [-1.0, 0.1], 2: [-0.5]}
    variants = {"longer": {1: [-1.01, 0.3], 2: [-0.9]}, "finer": {1: [-0.99, 0.1], 2: [-0.5]}}
    hits = spc.persistent_in_windows(base, variants, ((-1.9, -0.1), (0.05, 0.2)), 0.1)
    flags = {(h["mode"], h["eigenvalue"]): h["persistent"] for h in hits}
    assert flags == {(1, -1.0): True, (1, 0.1): False, (2, -0.5): False}


def test_spectral_picture_on_small_disk(small_scan):
    model = build_hyperbolic_disk(0.0, 10.0, 256, 16)
    cfg = spc.SpectrumConfig(modes=(0, 1, 2, 3), count=6, eigentensor_n=(2,))
    report = spc.spectral_picture(model, cfg, scan=small_scan)
    assert {k: v["status"] for k, v in report.verdicts.items()} == {"a": "pass", "b": "pass",
                                                                   "c": "pass"}
    assert report.passed
    data = json.loads(report.to_json())
    assert set(data["verdicts"]) == {"a", "b", "c"}
    assert report.eigen_csv().splitlines()[0].startswith("run,")
    assert report.histogram_data().strip()


def test_spectral_picture_on_perturbed_model_skips_hypothesis_verdicts(small_scan):
    from ahspectrum.geometry import RadialPerturbation, build_conformal_perturbation
    model = build_conformal_perturbation(build_hyperbolic_disk(0.0, 10.0, 256, 16),
                                         RadialPerturbation(0.3, 2.0, 6.0))
    cfg = spc.SpectrumConfig(modes=(0, 2), count=4, eigentensor_n=(2,))
    report = spc.spectral_picture(model, cfg, scan=small_scan)
    assert report.verdicts["a"]["status"] == "hypothesis-not-met"
    assert report.verdicts["c"]["status"] == "hypothesis-not-met"


def test_spectral_picture_rejects_unresolved_modes(centre_disk):
    with pytest.raises(UsageError):
        spc.spectral_picture(centre_disk, spc.SpectrumConfig(modes=(0, 40)))
