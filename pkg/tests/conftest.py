import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from helixflow import HelixConfig, build_flow_field

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


_FIELDS = {}


def flow_field(k=1.0, branch=1, eps=1e-3):
    """Session-wide cache of built fields (construction dominates test time)."""
    key = (float(k), branch, eps)
    if key not in _FIELDS:
        _FIELDS[key] = build_flow_field(HelixConfig(k=float(k), branch=branch, eps=eps))
    return _FIELDS[key]


@pytest.fixture(scope="session")
def field_plus():
    return flow_field(1.0, 1)


@pytest.fixture(scope="session")
def field_minus():
    return flow_field(1.0, -1)


@pytest.fixture(scope="session")
def field_circle():
    return flow_field(0.0, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
