import pytest
from hypothesis import HealthCheck, settings

from ahspectrum.geometry import (RadialPerturbation, build_conformal_perturbation,
                                 build_hyperbolic_disk)

settings.register_profile("repo", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def annulus():
    """Disk annulus used by identity and decomposition tests, by N_t."""
    cache = {}

    def get(n_t=256, n_theta=32):
        key = (n_t, n_theta)
        if key not in cache:
            cache[key] = build_hyperbolic_disk(0.5, 12.0, n_t, n_theta)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def centre_disk():
    return build_hyperbolic_disk(0.0, 12.0, 256, 32)


@pytest.fixture(scope="session")
def perturbed(annulus):
    return build_conformal_perturbation(annulus(256), RadialPerturbation(0.3, 2.0, 6.0))
