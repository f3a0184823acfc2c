from fractions import Fraction

import numpy as np
import pytest

from bmcgames import UNIFORM, BinaryChannel, InputDistribution, MetricBank, likelihood_bank, likelihood_metric
from bmcgames.mismatch import i_mis
from bmcgames.simulator import (
    Codebook,
    Decoder,
    DeterminantNonPositive,
    SimulationReport,
    SizeExceeded,
    decode_gld,
    decode_mmi,
    empirical_mi,
    ensemble_error_probabilities,
    estimate_error,
    estimate_error_ensemble,
    generate_codebook,
    lemma2_ordering_check,
    message_exponent,
    simulate,
    transmit,
    type_counts,
)

BSC_PAIR = likelihood_bank([BinaryChannel.bsc(0.89), BinaryChannel.bsc(0.11)])


def test_message_exponent_guards_float_noise():
    assert message_exponent(10, 0.3) == 3
    assert message_exponent(1024, 0.15) == 154
    assert message_exponent(16, 0.5) == 8


def test_codebook_shape_determinism_and_immutability():
    book = generate_codebook(32, 0.25, UNIFORM, seed=5)
    assert book.codewords.shape == (256, 32) and book.size == 256
    assert np.array_equal(book.codewords, generate_codebook(32, 0.25, UNIFORM, seed=5).codewords)
    with pytest.raises(ValueError):
        book.codewords[0, 0] = 1


def test_fixed_composition_codebook():
    book = generate_codebook(20, 0.3, InputDistribution(0.7), seed=1, fixed_composition=True)
    assert np.all(book.codewords.sum(axis=1) == 6)


@pytest.mark.parametrize("n, rate", [(40, 0.6), (5000, 0.001), (8, 0.0)])
def test_size_limits(n, rate):
    with pytest.raises(SizeExceeded):
        generate_codebook(n, rate, UNIFORM, seed=0)


def test_transmit_statistics():
    W = BinaryChannel(0.8, 0.6)
    y0 = transmit(W, np.zeros(200_000, dtype=np.uint8), seed=3)
    y1 = transmit(W, np.ones(200_000, dtype=np.uint8), seed=4)
    assert 1 - y0.mean() == pytest.approx(0.8, abs=5e-3)
    assert y1.mean() == pytest.approx(0.6, abs=5e-3)
    assert np.array_equal(y0, transmit(W, np.zeros(200_000, dtype=np.uint8), seed=3))


def test_type_counts():
    counts = type_counts(np.array([[0, 0, 1, 1], [1, 1, 1, 1]]), np.array([0, 1, 0, 1]))
    np.testing.assert_array_equal(counts, [[1, 1, 1, 1], [0, 0, 2, 2]])


def _exact_ml(book: Codebook, y, a: Fraction, b: Fraction) -> int:
    W = [[a, 1 - a], [1 - b, b]]
    best, best_m = None, -1
    for m, x in enumerate(book.codewords):
        lik = Fraction(1)
        for xi, yi in zip(x, y):
            lik *= W[int(xi)][int(yi)]
        if best is None or lik > best:
            best, best_m = lik, m
    return best_m


@pytest.mark.parametrize("n", [6, 9, 12])
def test_ml_matches_exact_rational_likelihoods(n):
    a, b = Fraction(7, 10), Fraction(4, 5)
    W = BinaryChannel(float(a), float(b))
    book = generate_codebook(n, 0.5, UNIFORM, seed=n)
    dec = Decoder.ml(W)
    rng = np.random.default_rng(n)
    for _ in range(40):
        y = rng.integers(0, 2, n)
        assert dec.decode(book, y) == _exact_ml(book, y, a, b)


def test_linear_decoding_ignores_metric_shifts():
    W = BinaryChannel(0.9, 0.7)
    book = generate_codebook(24, 0.4, UNIFORM, seed=2)
    rng = np.random.default_rng(2)
    d = likelihood_metric(W)
    for _ in range(30):
        y = rng.integers(0, 2, 24)
        plain = decode_gld(MetricBank([d]), book, y)
        assert decode_gld(MetricBank([d.shifted(5.0)]), book, y) == plain
        pair = decode_gld(BSC_PAIR, book, y)
        shifted = MetricBank([m.shifted(-2.5) for m in BSC_PAIR])
        assert decode_gld(shifted, book, y) == pair


def test_mmi_cannot_tell_a_word_from_its_complement():
    x = np.array([0, 1, 1, 0, 1, 0, 0, 0, 1, 1], dtype=np.int64)
    book = Codebook(10, 0.1, np.stack([x, 1 - x]).astype(np.uint8))
    counts = type_counts(book.codewords, x)
    mi = empirical_mi(counts)
    assert mi[0] == pytest.approx(mi[1], abs=1e-12) and mi[0] > 0.9
    assert decode_mmi(book, x) == 0
    assert Decoder.gld(likelihood_bank([BinaryChannel.bsc(0.9)])).decode(book, 1 - x) == 1


def test_glrt_is_gld_over_likelihoods():
    channels = [BinaryChannel(0.9, 0.8), BinaryChannel(0.3, 0.2)]
    book = generate_codebook(16, 0.5, UNIFORM, seed=8)
    y = transmit(channels[0], book.codewords[3], seed=1)
    assert Decoder.glrt(channels).decode(book, y) == decode_gld(likelihood_bank(channels), book, y)


def test_report_from_counts():
    rep = SimulationReport.from_counts(1000, 100, 1, "ml")
    assert rep.p_e_hat == 0.1
    assert rep.ci95_halfwidth == pytest.approx(1.96 * np.sqrt(0.09 / 1000))
    assert rep.standard_error == pytest.approx(np.sqrt(0.09 / 1000))
    assert set(rep.to_dict()) == {"trials", "errors", "p_e_hat", "ci95_halfwidth", "seed", "decoder_tag", "mode"}


def test_estimators_reject_too_few_trials():
    book = generate_codebook(8, 0.5, UNIFORM, seed=0)
    with pytest.raises(ValueError):
        estimate_error(BinaryChannel.bsc(0.9), book, Decoder.mmi(), 10, 0)
    with pytest.raises(ValueError):
        estimate_error_ensemble(BinaryChannel.bsc(0.9), 64, 0.2, UNIFORM, Decoder.mmi(), 10, 0)


@pytest.mark.parametrize("decoder", [Decoder.ml(BinaryChannel(0.9, 0.75)), Decoder.gld(BSC_PAIR), Decoder.mmi()])
def test_ensemble_matches_fresh_codebooks(decoder):
    W0 = BinaryChannel(0.9, 0.75)
    n, rate = 16, 0.5
    explicit = [estimate_error(W0, generate_codebook(n, rate, UNIFORM, seed=s), decoder, 200, seed=s).p_e_hat
                for s in range(20)]
    p_err = ensemble_error_probabilities(W0, n, rate, UNIFORM, decoder, 4000, seed=99)
    se = np.std(explicit, ddof=1) / np.sqrt(len(explicit))
    assert np.mean(explicit) == pytest.approx(p_err.mean(), abs=4 * se + 0.01)


def test_error_probability_falls_with_block_length_below_capacity():
    W0 = BinaryChannel(0.15, 0.25)
    rate = 0.9 * i_mis(UNIFORM, W0, BSC_PAIR).value
    means = [ensemble_error_probabilities(W0, n, rate, UNIFORM, Decoder.gld(BSC_PAIR), 400, seed=1).mean()
             for n in (256, 512, 1024)]
    assert means[0] > means[1] > means[2]


def test_rate_above_capacity_fails():
    W = BinaryChannel.bsc(0.89)
    rep = simulate(W, 512, 0.85, UNIFORM, Decoder.ml(W), 300, seed=3)
    assert rep.mode == "ensemble" and rep.p_e_hat >= 0.5


def test_auto_mode_picks_explicit_when_it_fits():
    W = BinaryChannel.bsc(0.9)
    assert simulate(W, 32, 0.25, UNIFORM, Decoder.mmi(), 200, seed=1).mode == "explicit"
    with pytest.raises(ValueError):
        simulate(W, 32, 0.25, UNIFORM, Decoder.mmi(), 200, seed=1, mode="fast")


@pytest.mark.parametrize("mode", ["explicit", "ensemble"])
def test_results_do_not_depend_on_worker_count(mode):
    W0 = BinaryChannel(0.2, 0.3)
    args = (W0, 48, 0.25, UNIFORM, Decoder.gld(BSC_PAIR), 600, 4)
    one = simulate(*args, mode=mode, workers=1)
    three = simulate(*args, mode=mode, workers=3)
    assert one == three


def test_ordering_preserved_for_same_class_pairs():
    assert lemma2_ordering_check(BinaryChannel(0.9, 0.7), BinaryChannel(0.6, 0.95), 8) == (True, None)
    assert lemma2_ordering_check(BinaryChannel(0.1, 0.3), BinaryChannel(0.4, 0.2), 8) == (True, None)


def test_ordering_check_rejects_cross_class_pairs():
    with pytest.raises(DeterminantNonPositive):
        lemma2_ordering_check(BinaryChannel(0.9, 0.7), BinaryChannel(0.1, 0.3), 6)
    with pytest.raises(DeterminantNonPositive):
        lemma2_ordering_check(BinaryChannel(0.4, 0.6), BinaryChannel(0.9, 0.7), 6)
    with pytest.raises(ValueError):
        lemma2_ordering_check(BinaryChannel(0.9, 0.7), BinaryChannel(0.8, 0.7), 20)


def test_order_violation_kernel_reports_a_reversal():
    from bmcgames import kernels

    words = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=np.int64)
    lw1 = likelihood_metric(BinaryChannel(0.9, 0.7)).d.reshape(4).copy()
    lw2 = likelihood_metric(BinaryChannel(0.1, 0.3)).d.reshape(4).copy()
    y, i, j = kernels.order_violation(words, 3, lw1, lw2)
    assert y >= 0 and i != j
    assert kernels.order_violation(words, 3, lw1, lw1) == (-1, -1, -1)
