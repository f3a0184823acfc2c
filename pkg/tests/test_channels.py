import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmcgames import (
    UNIFORM,
    BinaryChannel,
    ChannelClass,
    DegenerateMarginal,
    InputDistribution,
    JointDistribution,
    Metric,
    MetricBank,
    aposteriori_metric,
    binary_entropy,
    capacity,
    class_of,
    joint,
    kl_divergence,
    likelihood_metric,
    mutual_information,
    product_marginal,
    reverse,
    z_channel_capacity,
)

probs = st.floats(0.0, 1.0, allow_nan=False)


def test_joint_and_product_of_worked_example():
    mu = joint(InputDistribution(0.3), BinaryChannel(0.9, 0.8))
    np.testing.assert_allclose(mu.m, [[0.27, 0.03], [0.14, 0.56]], atol=1e-15)
    np.testing.assert_allclose(product_marginal(mu).m, [[0.123, 0.177], [0.287, 0.413]], atol=1e-15)


def test_bsc_information_and_capacity():
    W = BinaryChannel.bsc(0.9)
    assert mutual_information(UNIFORM, W) == pytest.approx(1 - binary_entropy(0.1), abs=1e-12)
    value, P = capacity(W)
    assert value == pytest.approx(1 - binary_entropy(0.1), abs=1e-12)
    assert P.p0 == pytest.approx(0.5, abs=1e-6)


def test_z_channel_capacity_half_noise():
    assert z_channel_capacity(0.5) == pytest.approx(math.log2(1.25), abs=1e-14)
    assert capacity(BinaryChannel(1.0, 0.5))[0] == pytest.approx(math.log2(1.25), abs=1e-12)
    assert capacity(BinaryChannel(1.0, 0.5))[1].p0 == pytest.approx(0.6, abs=1e-6)


def test_kl_of_joint_against_product_is_information():
    mu = joint(UNIFORM, BinaryChannel.bsc(0.9))
    assert kl_divergence(mu, product_marginal(mu)) == pytest.approx(1 - binary_entropy(0.1), abs=1e-12)


def test_kl_infinite_without_absolute_continuity():
    mu = JointDistribution([[0.5, 0.0], [0.0, 0.5]])
    nu = JointDistribution([[1.0, 0.0], [0.0, 0.0]])
    assert kl_divergence(mu, nu) == math.inf
    assert kl_divergence(nu, mu) == pytest.approx(1.0)


def test_pure_noise_boundary_is_nonflipping_and_useless():
    W = BinaryChannel(0.3, 0.7)
    assert class_of(W) is ChannelClass.NONFLIPPING
    assert capacity(W)[0] == 0.0
    assert mutual_information(InputDistribution(0.2), W) == pytest.approx(0.0, abs=1e-15)
    assert class_of(BinaryChannel(0.3, 0.69)) is ChannelClass.FLIPPING


def test_validation():
    with pytest.raises(ValueError):
        BinaryChannel(1.2, 0.5)
    with pytest.raises(ValueError):
        InputDistribution(-0.1)
    with pytest.raises(ValueError):
        JointDistribution([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        Metric([[math.inf, 0], [0, 0]])
    with pytest.raises(ValueError):
        Metric([[math.nan, 0], [0, 0]])
    with pytest.raises(ValueError):
        MetricBank([])


def test_aposteriori_metric_degenerate_output():
    with pytest.raises(DegenerateMarginal):
        aposteriori_metric(InputDistribution(1.0), BinaryChannel(1.0, 0.5))


def test_likelihood_metric_has_neg_inf_for_zero_transitions():
    d = likelihood_metric(BinaryChannel(1.0, 0.5)).d
    assert d[0, 1] == -math.inf and d[0, 0] == 0.0


def test_serialization_round_trips():
    W = BinaryChannel(0.2, 0.7)
    assert BinaryChannel.from_dict(W.to_dict()) == W
    m = likelihood_metric(BinaryChannel(1.0, 0.5))
    assert Metric.from_dict(m.to_dict()) == m
    assert m.to_dict()["d"][0][1] == "-inf"
    bank = MetricBank([m, likelihood_metric(W)])
    assert MetricBank.from_dict(bank.to_dict()).metrics == bank.metrics
    mu = joint(UNIFORM, W)
    assert JointDistribution.from_dict(mu.to_dict()) == mu


def test_joint_from_counts():
    mu = JointDistribution.from_counts([0, 0, 1, 1], [0, 1, 1, 1])
    np.testing.assert_allclose(mu.m, [[0.25, 0.25], [0.0, 0.5]])


def test_arrays_are_read_only():
    mu = joint(UNIFORM, BinaryChannel(0.2, 0.7))
    with pytest.raises(ValueError):
        mu.m[0, 0] = 1.0


@given(probs, probs, probs)
def test_information_nonnegative_and_reverse_symmetric(a, b, p0):
    W = BinaryChannel(a, b)
    P = InputDistribution(p0)
    value = mutual_information(P, W)
    assert value >= 0.0
    twice = reverse(reverse(W))
    assert (twice.a, twice.b) == pytest.approx((a, b), abs=1e-15)
    assert mutual_information(P, reverse(W)) == pytest.approx(value, abs=1e-12)


@given(probs, probs, probs, probs)
def test_kl_nonnegative(a, b, p0, q0):
    mu = joint(InputDistribution(p0), BinaryChannel(a, b))
    nu = joint(InputDistribution(q0), BinaryChannel(b, a))
    assert kl_divergence(mu, nu) >= 0.0


@given(probs, probs)
def test_capacity_dominates_uniform_input(a, b):
    W = BinaryChannel(a, b)
    assert capacity(W)[0] >= mutual_information(UNIFORM, W) - 1e-12


def test_uniform_input_loses_less_than_six_percent_on_a_grid():
    from bmcgames.games import capacities, channel_cells

    a, b = channel_cells(256, 1e-3)
    cap = capacities(a, b)

    def h(p):
        p = np.clip(p, 1e-300, 1.0)
        q = np.clip(1.0 - p, 1e-300, 1.0)
        return -(p * np.log2(p) + q * np.log2(q))

    q0 = 0.5 * (a + 1.0 - b)
    info = h(q0) - 0.5 * (h(a) + h(b))
    ratio = info / cap
    assert ratio.min() >= 1 - 0.058
    assert ratio.min() < 0.95
