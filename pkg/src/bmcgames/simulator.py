"""Random-coding laboratory: codebooks, channel draws, decoders, error rates.

Two estimators are provided. ``estimate_error`` runs a given explicit
codebook. ``estimate_error_ensemble`` averages over the random-codebook
ensemble without storing it: every decoder here scores a codeword through
its joint type with y, so the chance that one of the M - 1 independent rivals
beats the sent word has a closed form in the type distribution. That is what
makes block lengths like n = 1024 at R = 0.15 (2^154 messages) reachable.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from ._accel import map_chunks
from .channels import (
    BinaryChannel,
    InputDistribution,
    MetricBank,
    likelihood_bank,
    likelihood_metric,
)

MAX_LOG2_MESSAGES = 20
MAX_BLOCK_LENGTH = 4096
MAX_ORDERING_LENGTH = 14
# scores closer than this (relative) are treated as ties
TIE_RTOL = 1e-9
_EXPLICIT_BUDGET = 1 << 26


class SizeExceeded(ValueError):
    pass


class DeterminantNonPositive(ValueError):
    pass


def message_exponent(n: int, rate: float) -> int:
    """ceil(n * rate), guarded against float noise such as 10 * 0.3."""
    return math.ceil(n * rate - 1e-9)


@dataclass(frozen=True)
class Codebook:
    n: int
    rate: float
    codewords: np.ndarray
    composition_fixed: bool = False

    @property
    def size(self) -> int:
        return self.codewords.shape[0]


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    errors: int
    p_e_hat: float
    ci95_halfwidth: float
    seed: int
    decoder_tag: str
    mode: str = "explicit"

    @classmethod
    def from_counts(cls, trials: int, errors: int, seed: int, decoder_tag: str, mode: str = "explicit"):
        p = errors / trials
        return cls(trials, errors, p, 1.96 * math.sqrt(p * (1.0 - p) / trials), seed, decoder_tag, mode)

    @property
    def standard_error(self) -> float:
        return self.ci95_halfwidth / 1.96

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "errors": self.errors,
            "p_e_hat": self.p_e_hat,
            "ci95_halfwidth": self.ci95_halfwidth,
            "seed": self.seed,
            "decoder_tag": self.decoder_tag,
            "mode": self.mode,
        }


def generate_codebook(
    n: int, rate: float, P: InputDistribution, seed: int, fixed_composition: bool = False
) -> Codebook:
    k = message_exponent(n, rate)
    if n < 1 or n > MAX_BLOCK_LENGTH:
        raise SizeExceeded(f"block length {n} outside [1, {MAX_BLOCK_LENGTH}]")
    if k < 1 or k > MAX_LOG2_MESSAGES:
        raise SizeExceeded(f"2^{k} messages outside [2, 2^{MAX_LOG2_MESSAGES}]")
    M = 1 << k
    rng = np.random.default_rng(seed)
    if fixed_composition:
        ones = math.floor(n * P.p1 + 0.5)
        base = np.zeros(n, dtype=np.uint8)
        base[:ones] = 1
        words = rng.permuted(np.tile(base, (M, 1)), axis=1)
    else:
        words = (rng.random((M, n)) < P.p1).astype(np.uint8)
    words.setflags(write=False)
    return Codebook(n, rate, words, fixed_composition)


def _channel_draw(W0: BinaryChannel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    # P(y=1|x=0) = 1-a, P(y=1|x=1) = b
    return np.where(x == 0, u >= W0.a, u < W0.b).astype(np.uint8)


def transmit(W0: BinaryChannel, x, seed: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    u = np.random.default_rng(seed).random(x.shape[-1])
    return _channel_draw(W0, x, u)


def type_counts(codewords: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(M, 4) joint-type counts (n00, n01, n10, n11) of each codeword with y."""
    X = np.asarray(codewords, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[1]
    n11 = X @ y
    n10 = X.sum(axis=1) - n11
    n01 = int(y.sum()) - n11
    n00 = n - n11 - n10 - n01
    return np.stack([n00, n01, n10, n11], axis=1)


def linear_scores(bank: MetricBank, counts: np.ndarray) -> np.ndarray:
    """max_k sum_i d_k(x_m(i), y(i)) computed as counts . d_k, 0 * -inf = 0."""
    counts = counts.astype(float)
    best = np.full(counts.shape[0], -np.inf)
    for d in bank.as_array():
        with np.errstate(invalid="ignore"):
            s = np.where(counts > 0, counts * d, 0.0).sum(axis=1)
        best = np.maximum(best, s)
    return best


def empirical_mi(counts: np.ndarray) -> np.ndarray:
    c = counts.astype(float)
    n = c.sum(axis=1, keepdims=True)
    nx0 = c[:, 0] + c[:, 1]
    nx1 = c[:, 2] + c[:, 3]
    ny0 = c[:, 0] + c[:, 2]
    ny1 = c[:, 1] + c[:, 3]
    nx = np.stack([nx0, nx0, nx1, nx1], axis=1)
    ny = np.stack([ny0, ny1, ny0, ny1], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(c > 0, c * np.log2(c * n / (nx * ny)), 0.0)
    return terms.sum(axis=1) / n[:, 0]


def _argmax_first(scores: np.ndarray) -> int:
    best = scores.max()
    if best == -np.inf:
        return 0
    eps = TIE_RTOL * (1.0 + abs(best))
    return int(np.flatnonzero(scores >= best - eps)[0])


def decode_gld(bank: MetricBank, codebook: Codebook, y) -> int:
    return _argmax_first(linear_scores(bank, type_counts(codebook.codewords, y)))


def decode_mmi(codebook: Codebook, y) -> int:
    return _argmax_first(empirical_mi(type_counts(codebook.codewords, y)))


def decode_glrt(channels: Sequence[BinaryChannel], codebook: Codebook, y) -> int:
    if not channels:
        raise ValueError("GLRT needs at least one channel")
    return decode_gld(likelihood_bank(channels), codebook, y)


@dataclass(frozen=True)
class Decoder:
    """Decoder selector: ``ml``, ``gld``, ``glrt`` (metric bank) or ``mmi``."""

    tag: str
    bank: Optional[MetricBank] = None

    @classmethod
    def ml(cls, W0: BinaryChannel) -> "Decoder":
        return cls("ml", MetricBank([likelihood_metric(W0)]))

    @classmethod
    def gld(cls, bank: MetricBank) -> "Decoder":
        return cls("gld", bank)

    @classmethod
    def glrt(cls, channels: Sequence[BinaryChannel]) -> "Decoder":
        return cls("glrt", likelihood_bank(channels))

    @classmethod
    def mmi(cls) -> "Decoder":
        return cls("mmi", None)

    def decode(self, codebook: Codebook, y) -> int:
        if self.tag == "mmi":
            return decode_mmi(codebook, y)
        return decode_gld(self.bank, codebook, y)


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def estimate_error(
    W0: BinaryChannel,
    codebook: Codebook,
    decoder: Decoder,
    trials: int,
    seed: int,
    workers: Optional[int] = None,
) -> SimulationReport:
    """Block error rate of one explicit codebook; trial t uses seed (seed, t)."""
    if trials < 100:
        raise ValueError("trials must be >= 100")

    def run(lo, hi):
        errors = 0
        for t in range(lo, hi):
            rng = _trial_rng(seed, t)
            m = int(rng.integers(codebook.size))
            y = _channel_draw(W0, codebook.codewords[m], rng.random(codebook.n))
            errors += decoder.decode(codebook, y) != m
        return errors

    errors = sum(map_chunks(run, trials, workers))
    return SimulationReport.from_counts(trials, int(errors), seed, decoder.tag, "explicit")


def _sent_word(rng: np.random.Generator, n: int, P: InputDistribution, weight: int) -> np.ndarray:
    if weight >= 0:
        x = np.zeros(n, dtype=np.uint8)
        x[:weight] = 1
        return rng.permutation(x)
    return (rng.random(n) < P.p1).astype(np.uint8)


def ensemble_trial_stats(
    W0: BinaryChannel, n: int, P: InputDistribution, trials: int, seed: int, weight: int = -1
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-trial (n0, k0, k1, u): zeros in y, ones of x where y = 0 / y = 1,
    and the uniform that settles the error draw. Shared by every decoder."""
    n0 = np.empty(trials, dtype=np.int64)
    k0 = np.empty(trials, dtype=np.int64)
    k1 = np.empty(trials, dtype=np.int64)
    u = np.empty(trials)
    for t in range(trials):
        rng = _trial_rng(seed, t)
        x = _sent_word(rng, n, P, weight)
        y = _channel_draw(W0, x, rng.random(n))
        n0[t] = n - int(y.sum())
        k0[t] = int((x & (1 - y)).sum())
        k1[t] = int((x & y).sum())
        u[t] = rng.random()
    return n0, k0, k1, u


def ensemble_error_probabilities(
    W0: BinaryChannel,
    n: int,
    rate: float,
    P: InputDistribution,
    decoder: Decoder,
    trials: int,
    seed: int,
    fixed_composition: bool = False,
    workers: Optional[int] = None,
    stats=None,
) -> np.ndarray:
    """Exact error probability of each simulated (x, y) pair, averaged over
    the remaining 2^ceil(nR) - 1 random codewords."""
    weight = math.floor(n * P.p1 + 0.5) if fixed_composition else -1
    if stats is None:
        stats = ensemble_trial_stats(W0, n, P, trials, seed, weight)
    n0, k0, k1, _ = stats
    M = 2.0 ** message_exponent(n, rate)
    mode = 1 if decoder.tag == "mmi" else 0
    d = np.zeros((1, 4)) if decoder.bank is None else decoder.bank.as_array()

    def run(lo, hi):
        return kernels.ensemble_pcorrect(n0[lo:hi], k0[lo:hi], k1[lo:hi], n, P.p1, weight, d,
                                         mode, M, TIE_RTOL)

    p_correct = np.concatenate(map_chunks(run, len(n0), workers))
    return 1.0 - p_correct


def estimate_error_ensemble(
    W0: BinaryChannel,
    n: int,
    rate: float,
    P: InputDistribution,
    decoder: Decoder,
    trials: int,
    seed: int,
    fixed_composition: bool = False,
    workers: Optional[int] = None,
) -> SimulationReport:
    """Block error rate of the random-codebook ensemble.

    Each trial draws the sent word and the channel output, then an error with
    the exact conditional probability given them; trial t uses seed (seed, t),
    so decoders compared under one seed see identical (x, y, draw) triples.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if n < 1 or n > MAX_BLOCK_LENGTH:
        raise SizeExceeded(f"block length {n} outside [1, {MAX_BLOCK_LENGTH}]")
    if message_exponent(n, rate) < 1:
        raise SizeExceeded("a code needs at least two messages")
    weight = math.floor(n * P.p1 + 0.5) if fixed_composition else -1
    stats = ensemble_trial_stats(W0, n, P, trials, seed, weight)
    p_err = ensemble_error_probabilities(W0, n, rate, P, decoder, trials, seed, fixed_composition,
                                         workers, stats)
    errors = int(np.count_nonzero(stats[3] < p_err))
    return SimulationReport.from_counts(trials, errors, seed, decoder.tag, "ensemble")


def simulate(
    W0: BinaryChannel,
    n: int,
    rate: float,
    P: InputDistribution,
    decoder: Decoder,
    trials: int,
    seed: int,
    fixed_composition: bool = False,
    mode: str = "auto",
    workers: Optional[int] = None,
) -> SimulationReport:
    """Dispatch to the explicit or ensemble estimator.

    ``auto`` keeps an explicit codebook while it fits the size cap and a
    2^26-symbol budget.
    """
    if mode not in ("auto", "explicit", "ensemble"):
        raise ValueError(f"unknown mode {mode!r}")
    k = message_exponent(n, rate)
    if mode == "auto":
        fits = k <= MAX_LOG2_MESSAGES and (1 << max(k, 0)) * n <= _EXPLICIT_BUDGET
        mode = "explicit" if fits else "ensemble"
    if mode == "ensemble":
        return estimate_error_ensemble(W0, n, rate, P, decoder, trials, seed, fixed_composition, workers)
    book = generate_codebook(n, rate, P, seed, fixed_composition)
    return estimate_error(W0, book, decoder, trials, seed, workers)


def _words_of_weight(n: int, w: int) -> np.ndarray:
    rows = []
    for ones in itertools.combinations(range(n), w):
        row = np.zeros(n, dtype=np.int64)
        row[list(ones)] = 1
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(-1, n)


def _bits(word, n: int) -> str:
    if isinstance(word, (int, np.integer)):
        return format(int(word), f"0{n}b")
    return "".join(str(int(v)) for v in word)


def lemma2_ordering_check(P1: BinaryChannel, P2: BinaryChannel, n: int):
    """Exhaustively test that likelihood order under P1 carries over to P2.

    Every composition class of length-n words, every ordered pair inside it
    and every output y is visited. Returns ``(True, None)`` or ``(False,
    {"x1", "x2", "y"})`` for the first violation found.
    """
    if not 1 <= n <= MAX_ORDERING_LENGTH:
        raise ValueError(f"n must lie in [1, {MAX_ORDERING_LENGTH}]")
    det = (P1.a + P1.b - 1.0) * (P2.a + P2.b - 1.0)
    if not det > 0.0:
        raise DeterminantNonPositive(f"det(P1 P2) = {det} is not positive")
    # equivalent reading: both matrices put each column maximum in the same row
    assert np.array_equal(P1.matrix.argmax(axis=0), P2.matrix.argmax(axis=0))
    lw1 = likelihood_metric(P1).d.reshape(4).copy()
    lw2 = likelihood_metric(P2).d.reshape(4).copy()
    for w in range(n + 1):
        words = _words_of_weight(n, w)
        y, i, j = kernels.order_violation(words, n, lw1, lw2)
        if y >= 0:
            return False, {"x1": _bits(words[i], n), "x2": _bits(words[j], n), "y": _bits(y, n)}
    return True, None
