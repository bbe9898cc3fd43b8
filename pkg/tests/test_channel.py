import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rllfb.channel import (
    ChannelParams,
    binary_entropy,
    canonicalize,
    is_rll,
    likelihood,
    likelihood_table,
    transmit,
)

probs = st.floats(0.0, 1.0, allow_nan=False)


def test_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.25) == pytest.approx(0.811278, abs=1e-6)


def test_entropy_array_matches_scalar():
    p = np.linspace(0, 1, 101)
    arr = binary_entropy(p)
    assert np.allclose(arr, [binary_entropy(float(v)) for v in p], atol=1e-15)


@pytest.mark.parametrize("bad", [-0.1, 1.1, float("nan")])
def test_entropy_domain(bad):
    with pytest.raises(ValueError):
        binary_entropy(bad)


@given(probs)
def test_entropy_symmetric_and_bounded(p):
    h = binary_entropy(p)
    assert 0.0 <= h <= 1.0
    assert h == pytest.approx(binary_entropy(1.0 - p), abs=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(-0.1, 0.2)
    with pytest.raises(ValueError):
        ChannelParams(0.1, 1.5)


def test_canonicalize_examples():
    assert canonicalize(ChannelParams(0.1, 0.2)) == (ChannelParams(0.1, 0.2), False)
    out, flipped = canonicalize(ChannelParams(0.9, 0.8))
    assert flipped
    assert out.alpha == pytest.approx(0.1) and out.beta == pytest.approx(0.2)
    assert canonicalize(ChannelParams(0.5, 0.5)) == (ChannelParams(0.5, 0.5), False)


@given(probs, probs)
def test_canonical_after_canonicalize(a, b):
    out, _ = canonicalize(ChannelParams(a, b))
    assert out.is_canonical


def test_require_canonical():
    with pytest.raises(ValueError):
        ChannelParams(0.7, 0.6).require_canonical()


def test_likelihood_examples():
    p = ChannelParams(0.25, 0.1)
    assert likelihood(p, 1, 0) == 0.25
    assert likelihood(p, 0, 1) == 0.1
    with pytest.raises(ValueError):
        likelihood(p, 2, 0)


@given(probs, probs, st.sampled_from([0, 1]))
def test_likelihood_normalised(a, b, x):
    p = ChannelParams(a, b)
    assert likelihood(p, 0, x) + likelihood(p, 1, x) == pytest.approx(1.0)
    assert likelihood_table(p)[x, 1] == pytest.approx(likelihood(p, 1, x))


def test_transmit_deterministic_channels(rng):
    assert all(transmit(ChannelParams(0, 0), 1, rng) == 1 for _ in range(200))
    assert all(transmit(ChannelParams(1, 0), 0, rng) == 1 for _ in range(200))
    with pytest.raises(ValueError):
        transmit(ChannelParams(0, 0), 2, rng)


def test_transmit_crossover_frequency(rng):
    # law of large numbers: 1e6 uses of x=0 over the (0.25, 0.25) channel
    p = ChannelParams(0.25, 0.25)
    ys = np.fromiter((transmit(p, 0, rng) for _ in range(1_000_000)), dtype=np.int8)
    assert abs(ys.mean() - 0.25) <= 0.002


def test_is_rll():
    assert is_rll([0, 1, 0, 1, 0, 0, 1])
    assert not is_rll([0, 1, 1, 0])
    assert is_rll([])
