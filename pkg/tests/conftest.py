"""Shared fixtures: the reference runs reused across test modules."""

import numpy as np
import pytest

import sirdyn as sd


@pytest.fixture(scope="session")
def classical_model():
    """Constant-rate outbreak model: beta=2, gamma=0.4 (rho=0.2)."""
    return sd.ScalarModel(sd.RateFunction.constant(2.0), 0.4)


@pytest.fixture(scope="session")
def classical_run(classical_model):
    """Seeded eps=0.01 run of the classical model, default control."""
    return sd.simulate_scalar(classical_model, 0.99, 0.01, 100.0)


@pytest.fixture(scope="session")
def sliding_policy():
    """Threshold policy that produces a plateau (sliding) run."""
    return sd.ThresholdPolicy(beta=2.0, beta_bar=0.38, threshold=0.35, gamma=0.4)


@pytest.fixture(scope="session")
def sliding_run(sliding_policy):
    return sd.simulate_threshold(sliding_policy, 0.01, 100.0)


@pytest.fixture(scope="session")
def overshoot_policy():
    """Threshold policy whose run overshoots the threshold (no pre-peak slide)."""
    return sd.ThresholdPolicy(beta=2.0, beta_bar=1.0, threshold=0.35, gamma=0.4)


@pytest.fixture(scope="session")
def overshoot_run(overshoot_policy):
    return sd.simulate_threshold(overshoot_policy, 0.01, 100.0)


@pytest.fixture(scope="session")
def two_city_model():
    return sd.uniform_two_population()


@pytest.fixture(scope="session")
def two_city_run(two_city_model):
    """Seeded eps=0.01 two-population run with the aggregate-peak event."""
    event = sd.EventSpec(
        lambda t, s: s[0] + s[1] - 1.0, direction="falling", label="aggregate-peak"
    )
    return sd.simulate_network(
        two_city_model, sd.NetworkState.seeded(0.01), 100.0, extra_events=[event]
    )
