"""Shared fixtures: reference network configurations used across test modules."""

import numpy as np
import pytest

from relaysched import NetworkConfig

# Measured-gain example topology shipped with the bundled figure configs:
# eight users, five relays, moderately asymmetric first hops.
MEASURED_UR = np.array(
    [
        [0.2, 0.8, 1.3, 1.0, 0.5],
        [0.8, 1.4, 1.2, 1.1, 1.0],
        [0.8, 0.6, 1.4, 0.2, 0.1],
        [1.3, 1.1, 0.7, 0.5, 0.3],
        [0.3, 0.5, 0.7, 1.2, 1.4],
        [0.5, 0.6, 0.9, 1.0, 1.1],
        [0.8, 0.7, 0.6, 0.9, 0.4],
        [1.3, 1.0, 0.7, 0.6, 0.4],
    ]
)
MEASURED_RB = np.array([1.2, 0.6, 0.5, 1.3, 0.7])


def measured_config(**overrides):
    kwargs = dict(
        num_users=8,
        num_relays=5,
        mean_gain_ur=MEASURED_UR,
        mean_gain_rb=MEASURED_RB,
        alpha=0.5,
        snr_threshold=3.0,
    )
    kwargs.update(overrides)
    return NetworkConfig(**kwargs)


def symmetric_config(num_users, num_relays, sigma=1.0, **overrides):
    kwargs = dict(
        num_users=num_users,
        num_relays=num_relays,
        mean_gain_ur=np.full((num_users, num_relays), sigma),
        mean_gain_rb=np.full(num_relays, sigma),
        alpha=0.5,
        snr_threshold=3.0,
    )
    kwargs.update(overrides)
    return NetworkConfig(**kwargs)


@pytest.fixture
def reference_config():
    return measured_config()


def random_config(rng, num_users=None, num_relays=None):
    """A random small network for property sweeps."""
    M = num_users if num_users is not None else int(rng.integers(1, 7))
    N = num_relays if num_relays is not None else int(rng.integers(1, 6))
    return NetworkConfig(
        num_users=M,
        num_relays=N,
        mean_gain_ur=rng.uniform(0.2, 2.0, (M, N)),
        mean_gain_rb=rng.uniform(0.2, 2.0, N),
        total_power=float(rng.uniform(0.5, 20.0)),
        alpha=float(rng.uniform(0.15, 0.85)),
        snr_threshold=float(rng.uniform(0.5, 5.0)),
    )
