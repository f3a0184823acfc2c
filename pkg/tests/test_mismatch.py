import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from bmcgames import (
    UNIFORM,
    BinaryChannel,
    InputDistribution,
    Metric,
    MetricBank,
    class_of,
    i_mis,
    i_mis_oracle,
    i_mis_single,
    joint,
    kl_divergence,
    likelihood_bank,
    likelihood_metric,
    marginal_segment,
    mutual_information,
    product_marginal,
    reverse,
    threshold,
)
from bmcgames.mismatch import INFEASIBLE, i_mis_cells

unit = st.floats(0.0, 1.0, allow_nan=False)
interior = st.floats(0.01, 0.99, allow_nan=False)
BSC_PAIR = likelihood_bank([BinaryChannel.bsc(0.89), BinaryChannel.bsc(0.11)])


def channel(strategy=unit):
    return st.builds(BinaryChannel, strategy, strategy)


def test_segment_spans_both_marginals():
    mu0 = joint(InputDistribution(0.3), BinaryChannel(0.9, 0.8))
    seg = marginal_segment(mu0)
    assert seg.center == product_marginal(mu0)
    assert seg.t_min == pytest.approx(-0.123) and seg.t_max == pytest.approx(0.177)
    for t in (seg.t_min, 0.0, 0.05, seg.t_max):
        mu = seg.point(t)
        np.testing.assert_allclose(mu.input_marginal, mu0.input_marginal, atol=1e-15)
        np.testing.assert_allclose(mu.output_marginal, mu0.output_marginal, atol=1e-15)
        assert seg.coordinate(mu) == pytest.approx(t, abs=1e-15)
    # mu0 itself sits on the segment
    assert seg.coordinate(mu0) == pytest.approx(0.27 - 0.123)
    with pytest.raises(ValueError):
        seg.point(0.2)


def test_matched_bsc_metric_recovers_information():
    W = BinaryChannel.bsc(0.89)
    res = i_mis(UNIFORM, W, MetricBank([likelihood_metric(W)]))
    assert res.value == pytest.approx(mutual_information(UNIFORM, W), abs=1e-12)
    assert res.achieved_by == 0


def test_cross_class_metric_gives_zero():
    res = i_mis(UNIFORM, BinaryChannel(0.2, 0.3), MetricBank([likelihood_metric(BinaryChannel.bsc(0.89))]))
    assert res.value == pytest.approx(0.0, abs=1e-12)


def test_bsc_pair_on_flipping_channel_uses_reverse_metric():
    W0 = BinaryChannel(0.2, 0.3)
    res = i_mis(UNIFORM, W0, BSC_PAIR)
    assert res.value == pytest.approx(mutual_information(UNIFORM, W0), abs=1e-12)
    # the matched-class metric attains I; its partner ties on this channel
    assert i_mis_single(UNIFORM, W0, BSC_PAIR[1], res.threshold)[0] == pytest.approx(res.value, abs=1e-12)


def test_ties_go_to_lowest_index():
    W = BinaryChannel(0.8, 0.7)
    d = likelihood_metric(W)
    assert i_mis(UNIFORM, W, MetricBank([d, d])).achieved_by == 0
    # shifting one metric of a bank moves the shared threshold out of the
    # other metric's reach
    res = i_mis(UNIFORM, W, MetricBank([d, d.shifted(3.0)]))
    assert res.achieved_by == 1
    assert res.value == pytest.approx(mutual_information(UNIFORM, W), abs=1e-12)


def test_threshold_reaches_neg_inf_only_when_every_metric_is_excluded():
    W = BinaryChannel(0.5, 0.5)
    blocked = Metric([[0.0, -math.inf], [0.0, 0.0]])
    assert threshold(joint(UNIFORM, W), MetricBank([blocked])) == -math.inf
    assert threshold(joint(UNIFORM, W), MetricBank([blocked, Metric(np.zeros((2, 2)))])) == 0.0


def test_single_metric_can_be_infeasible():
    W = BinaryChannel(0.9, 0.9)
    matched = likelihood_metric(W)
    # a metric that cannot reach the matched threshold anywhere on the segment
    weak = Metric([[-10.0, -10.0], [-10.0, -10.0]])
    tau = threshold(joint(UNIFORM, W), MetricBank([matched]))
    assert i_mis_single(UNIFORM, W, weak, tau) == (INFEASIBLE, None)
    res = i_mis(UNIFORM, W, MetricBank([weak, matched]))
    assert res.achieved_by == 1


def test_neg_inf_metric_entries_restrict_the_segment():
    # Z-channel likelihood metric forbids (x=0, y=1)
    dz = likelihood_metric(BinaryChannel(1.0, 0.5))
    W0 = BinaryChannel(1.0, 0.6)
    res = i_mis(UNIFORM, W0, MetricBank([dz]))
    assert res.minimizer.m[0, 1] == 0.0
    assert res.value == pytest.approx(mutual_information(UNIFORM, W0), abs=1e-12)
    # a true channel that uses the forbidden cell drives the threshold to -inf
    res = i_mis(UNIFORM, BinaryChannel(0.9, 0.6), MetricBank([dz]))
    assert res.threshold == -math.inf and res.value == 0.0


def test_two_metric_rate_can_exceed_matched_information():
    # with two unrelated metrics the max over single-metric rates is not
    # capped by I(P, W0); see test_k1_and_bsc_pairs_never_exceed_information
    W0 = BinaryChannel(0.83, 0.41)
    bank = likelihood_bank([BinaryChannel(0.55, 0.03), BinaryChannel(0.75, 0.54)])
    res = i_mis(UNIFORM, W0, bank)
    assert res.value > mutual_information(UNIFORM, W0) + 0.03
    assert res.value == pytest.approx(i_mis_oracle(UNIFORM, W0, bank, 10**6), abs=1e-5)


def test_oracle_agrees_on_a_handful_of_instances():
    rng = np.random.default_rng(3)
    for _ in range(5):
        W0 = BinaryChannel(*rng.random(2))
        bank = likelihood_bank(BinaryChannel(*rng.random(2)) for _ in range(int(rng.integers(1, 5))))
        assert i_mis(UNIFORM, W0, bank).value == pytest.approx(i_mis_oracle(UNIFORM, W0, bank, 10**6), abs=1e-5)


def test_oracle_rejects_coarse_grids():
    with pytest.raises(ValueError):
        i_mis_oracle(UNIFORM, BinaryChannel(0.2, 0.3), BSC_PAIR, 10)


def test_cells_match_scalar_path():
    rng = np.random.default_rng(4)
    a, b = rng.random(50), rng.random(50)
    P = InputDistribution(0.35)
    bank = likelihood_bank([BinaryChannel(0.7, 0.8), BinaryChannel(0.1, 0.4), BinaryChannel(0.3, 0.9)])
    vals, mis, ks = i_mis_cells(P, a, b, bank)
    for i in range(50):
        W = BinaryChannel(a[i], b[i])
        res = i_mis(P, W, bank)
        assert vals[i] == pytest.approx(res.value, abs=1e-12)
        assert mis[i] == pytest.approx(mutual_information(P, W), abs=1e-12)
        assert ks[i] == res.achieved_by


def test_result_serializes():
    out = i_mis(UNIFORM, BinaryChannel(0.2, 0.3), BSC_PAIR).to_dict()
    assert set(out) == {"value", "achieved_by", "minimizer", "threshold"}


@given(channel(), channel(interior), unit)
def test_k1_and_bsc_pairs_never_exceed_information(W0, W1, p0):
    P = InputDistribution(p0)
    assert i_mis(P, W0, MetricBank([likelihood_metric(W1)])).value <= mutual_information(P, W0) + 1e-9
    pair = likelihood_bank([BinaryChannel.bsc(W1.a), reverse(BinaryChannel.bsc(W1.a))])
    assert i_mis(UNIFORM, W0, pair).value <= mutual_information(UNIFORM, W0) + 1e-9


def test_bsc_pair_can_exceed_information_off_uniform_input():
    P = InputDistribution(0.25)
    W0 = BinaryChannel(0.5, 0.375)
    pair = likelihood_bank([BinaryChannel.bsc(0.25), BinaryChannel.bsc(0.75)])
    assert i_mis(P, W0, pair).value > mutual_information(P, W0) + 0.05


def test_pure_noise_channel():
    W0 = BinaryChannel(0.3, 0.7)
    assert i_mis(InputDistribution(0.2), W0, MetricBank([likelihood_metric(BinaryChannel(0.9, 0.6))])).value == 0.0
    assert i_mis(UNIFORM, W0, BSC_PAIR).value == pytest.approx(0.0, abs=1e-15)
    # two unequal metrics: the one below the shared threshold must climb to it
    bank = likelihood_bank([BinaryChannel(0.8, 0.9), BinaryChannel(0.6, 0.7)])
    assert i_mis(UNIFORM, W0, bank).value > 0.08


@given(channel(), channel(interior), channel(interior))
def test_dichotomy(W0, W1, W2):
    assume(abs(W0.det) > 1e-6 and abs(W1.det) > 1e-6)
    value = i_mis(UNIFORM, W0, MetricBank([likelihood_metric(W1)])).value
    if class_of(W0) is class_of(W1):
        assert value == pytest.approx(mutual_information(UNIFORM, W0), abs=1e-9)
    else:
        assert value <= 1e-9


@given(channel(), channel(interior), channel(interior))
def test_adding_a_metric_below_the_threshold_never_hurts(W0, W1, W2):
    small = MetricBank([likelihood_metric(W1)])
    large = likelihood_bank([W1, W2])
    mu0 = joint(UNIFORM, W0)
    assume(threshold(mu0, large) == threshold(mu0, small))
    assert i_mis(UNIFORM, W0, large).value >= i_mis(UNIFORM, W0, small).value - 1e-12


def test_adding_a_metric_that_raises_the_threshold_can_hurt():
    W0 = BinaryChannel(0.75, 0.0)
    one = i_mis(UNIFORM, W0, MetricBank([likelihood_metric(BinaryChannel(0.5, 0.25))])).value
    two = i_mis(UNIFORM, W0, likelihood_bank([BinaryChannel(0.5, 0.25), BinaryChannel(0.75, 0.25)])).value
    assert one > 0.1 and two == 0.0


@given(channel(), channel(interior), st.floats(-50, 50))
def test_shifting_a_metric_changes_nothing(W0, W1, c):
    d = likelihood_metric(W1)
    plain = i_mis(UNIFORM, W0, MetricBank([d])).value
    assert i_mis(UNIFORM, W0, MetricBank([d.shifted(c)])).value == pytest.approx(plain, abs=1e-9)


@given(channel(), interior)
def test_reverse_metric_pair_is_universal_under_uniform_input(W0, p):
    bank = likelihood_bank([BinaryChannel.bsc(p), BinaryChannel.bsc(1 - p)])
    assume(abs(p - 0.5) > 1e-6)
    assert i_mis(UNIFORM, W0, bank).value == pytest.approx(mutual_information(UNIFORM, W0), abs=1e-9)


@given(channel(), channel(interior), unit)
def test_value_is_nonnegative_and_finite(W0, W1, p0):
    value = i_mis(InputDistribution(p0), W0, likelihood_bank([W1, reverse(W1)])).value
    assert 0.0 <= value < math.inf
